//! Positive Datalog evaluated bottom-up to fixpoint with semi-naive
//! iteration. Every distinct rule instantiation is recorded as a derivation
//! trace so the attack graph downstream keeps its full OR structure.
//!
//! No negation, no stratification, no built-ins: blocks are resolved at fact
//! extraction time, which keeps the fixpoint argument trivial.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facts::{Fact, FactBase};

/// Bundled default rule library: reachability, remote exploitation,
/// credential bruteforce, login, privilege escalation, data tampering and
/// mission compromise.
pub const DEFAULT_RULES: &str = include_str!("../rules/default.dl");

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{}({})", self.predicate, terms.join(","))
    }
}

/// One rule of the library. `local_probability` is the step's success
/// probability used by risk assessment; `emits` lists the indicator types an
/// instantiation of this rule can raise on monitored hosts.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub label: String,
    pub head: Literal,
    pub body: Vec<Literal>,
    pub local_probability: f64,
    pub emits: Vec<String>,
}

/// Variable bindings accumulated during unification.
pub type Bindings = BTreeMap<String, String>;

/// Record of one rule instantiation: the fact it derived, the rule, and the
/// exact body instantiation. Carries the rule's probability and indicator
/// profile so downstream consumers need no rule lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationTrace {
    pub derived: Fact,
    pub rule_label: String,
    pub premises: Vec<Fact>,
    pub bindings: BTreeMap<String, String>,
    pub local_probability: f64,
    pub emits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub derived: BTreeSet<Fact>,
    pub traces: Vec<DerivationTrace>,
    /// Semi-naive rounds until fixpoint; bounded by
    /// |constants|^max_arity * |predicates|.
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum DatalogError {
    #[error("rule parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rule `{rule}`: predicate {predicate} used with arity {found}, expected {expected}")]
    ArityMismatch {
        rule: String,
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("rule `{rule}` is not range-restricted: head variable {variable} not bound in body")]
    NotRangeRestricted { rule: String, variable: String },
    #[error("rule `{rule}` has an empty body")]
    EmptyBody { rule: String },
    #[error("rule label `{rule}` is declared twice")]
    DuplicateLabel { rule: String },
}

const DEFAULT_REMOTE_PROBABILITY: f64 = 0.8;
const DEFAULT_LOCAL_PROBABILITY: f64 = 0.9;

/// Parses a rule library: one rule per line,
/// `label: head :- body1, body2, ... [p=0.8, emits=a|b]`,
/// `#` comments, blank lines ignored. Labels may contain spaces.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, DatalogError> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rules.push(parse_rule_line(line, line_no)?);
    }
    validate_rules(&rules)?;
    Ok(rules)
}

fn parse_rule_line(line: &str, line_no: usize) -> Result<Rule, DatalogError> {
    let err = |message: &str| DatalogError::Parse {
        line: line_no,
        message: message.to_string(),
    };

    let (label, rest) = line
        .split_once(':')
        .ok_or_else(|| err("missing `label:` prefix"))?;
    let label = label.trim().to_string();
    if label.is_empty() {
        return Err(err("empty label"));
    }

    // Optional trailing `[...]` annotation block.
    let rest = rest.trim();
    let (clause, annotation) = match rest.rfind('[') {
        Some(pos) if rest.ends_with(']') => {
            (rest[..pos].trim(), Some(&rest[pos + 1..rest.len() - 1]))
        }
        _ => (rest, None),
    };

    let (head_text, body_text) = clause
        .split_once(":-")
        .ok_or_else(|| err("missing `:-` separator"))?;
    let head = parse_literal(head_text.trim()).map_err(|m| err(&m))?;
    let mut body = Vec::new();
    for part in split_literals(body_text) {
        let part = part.trim();
        if part.is_empty() {
            return Err(err("empty body literal"));
        }
        body.push(parse_literal(part).map_err(|m| err(&m))?);
    }
    if body.is_empty() {
        return Err(DatalogError::EmptyBody { rule: label });
    }

    let mut probability = None;
    let mut emits = Vec::new();
    if let Some(annotation) = annotation {
        for item in annotation.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| err("annotation must be key=value"))?;
            match key.trim() {
                "p" => {
                    let p: f64 = value
                        .trim()
                        .parse()
                        .map_err(|_| err("invalid probability"))?;
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(err("probability outside (0, 1]"));
                    }
                    probability = Some(p);
                }
                "emits" => {
                    emits = value
                        .split('|')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                }
                other => return Err(err(&format!("unknown annotation key `{other}`"))),
            }
        }
    }

    let local_probability = probability.unwrap_or_else(|| default_probability(&body));
    Ok(Rule {
        label,
        head,
        body,
        local_probability,
        emits,
    })
}

/// Rules whose body exploits a remote vulnerability default lower than
/// local-only steps.
fn default_probability(body: &[Literal]) -> f64 {
    let remote = body.iter().any(|lit| {
        lit.predicate == "vuln_exists"
            && lit.terms.get(3) == Some(&Term::Const("remote".to_string()))
    });
    if remote {
        DEFAULT_REMOTE_PROBABILITY
    } else {
        DEFAULT_LOCAL_PROBABILITY
    }
}

/// Splits a body on commas that sit outside parentheses.
fn split_literals(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

/// `pred(t1, t2, ...)`. Terms starting with an uppercase letter are
/// variables; single-quoted tokens and everything else are constants.
fn parse_literal(text: &str) -> Result<Literal, String> {
    let open = text
        .find('(')
        .ok_or_else(|| format!("expected `(` in literal `{text}`"))?;
    if !text.ends_with(')') {
        return Err(format!("expected `)` at end of literal `{text}`"));
    }
    let predicate = text[..open].trim().to_string();
    if predicate.is_empty() {
        return Err(format!("missing predicate in `{text}`"));
    }
    let inner = &text[open + 1..text.len() - 1];
    let mut terms = Vec::new();
    for tok in inner.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            return Err(format!("empty term in `{text}`"));
        }
        let term = if let Some(stripped) = tok.strip_prefix('\'') {
            Term::Const(
                stripped
                    .strip_suffix('\'')
                    .ok_or("unterminated quote")?
                    .to_string(),
            )
        } else if tok.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            Term::Var(tok.to_string())
        } else {
            Term::Const(tok.to_string())
        };
        terms.push(term);
    }
    Ok(Literal { predicate, terms })
}

fn validate_rules(rules: &[Rule]) -> Result<(), DatalogError> {
    let mut seen = HashSet::new();
    for rule in rules {
        if !seen.insert(&rule.label) {
            return Err(DatalogError::DuplicateLabel {
                rule: rule.label.clone(),
            });
        }
    }
    for rule in rules {
        if rule.body.is_empty() {
            return Err(DatalogError::EmptyBody {
                rule: rule.label.clone(),
            });
        }
        let body_vars: HashSet<&String> = rule
            .body
            .iter()
            .flat_map(|l| l.terms.iter())
            .filter_map(|t| match t {
                Term::Var(v) => Some(v),
                Term::Const(_) => None,
            })
            .collect();
        for term in &rule.head.terms {
            if let Term::Var(v) = term {
                if !body_vars.contains(v) {
                    return Err(DatalogError::NotRangeRestricted {
                        rule: rule.label.clone(),
                        variable: v.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Checks every predicate is used with one consistent arity across base
/// facts, rule heads and rule bodies.
fn check_arities(rules: &[Rule], base: &FactBase) -> Result<(), DatalogError> {
    let mut arities: HashMap<&str, usize> = HashMap::new();
    for fact in &base.facts {
        arities.entry(&fact.predicate).or_insert(fact.args.len());
        // Facts come from a set; a conflicting base arity is still possible
        // when callers build bases by hand.
        if arities[fact.predicate.as_str()] != fact.args.len() {
            return Err(DatalogError::ArityMismatch {
                rule: "<base>".to_string(),
                predicate: fact.predicate.clone(),
                expected: arities[fact.predicate.as_str()],
                found: fact.args.len(),
            });
        }
    }
    for rule in rules {
        for lit in std::iter::once(&rule.head).chain(rule.body.iter()) {
            match arities.get(lit.predicate.as_str()) {
                Some(&expected) if expected != lit.terms.len() => {
                    return Err(DatalogError::ArityMismatch {
                        rule: rule.label.clone(),
                        predicate: lit.predicate.clone(),
                        expected,
                        found: lit.terms.len(),
                    });
                }
                Some(_) => {}
                None => {
                    arities.insert(lit.predicate.as_str(), lit.terms.len());
                }
            }
        }
    }
    Ok(())
}

/// Unifies a body literal against a ground fact, extending `bindings`.
/// Returns the extended substitution, or None when predicate, arity, a
/// constant or an existing binding conflicts.
pub fn unify(pattern: &Literal, fact: &Fact, bindings: &Bindings) -> Option<Bindings> {
    if pattern.predicate != fact.predicate || pattern.terms.len() != fact.args.len() {
        return None;
    }
    let mut out = bindings.clone();
    for (term, value) in pattern.terms.iter().zip(fact.args.iter()) {
        match term {
            Term::Const(c) => {
                if c != value {
                    return None;
                }
            }
            Term::Var(v) => match out.get(v) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), value.clone());
                }
            },
        }
    }
    Some(out)
}

fn instantiate(lit: &Literal, bindings: &Bindings) -> Fact {
    Fact {
        predicate: lit.predicate.clone(),
        args: lit
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => bindings.get(v).cloned().unwrap_or_default(),
            })
            .collect(),
    }
}

type Store = HashMap<String, Vec<Fact>>;

fn store_insert(store: &mut Store, fact: Fact) {
    store.entry(fact.predicate.clone()).or_default().push(fact);
}

/// Least fixpoint of `rules` over `base` by semi-naive iteration: every rule
/// application joins at least one literal against the previous round's delta.
/// All distinct instantiations are kept as traces (duplicates by rule +
/// premise list are collapsed) so alternative derivations survive.
pub fn evaluate(rules: &[Rule], base: &FactBase) -> Result<Evaluation, DatalogError> {
    validate_rules(rules)?;
    check_arities(rules, base)?;

    let mut all: Store = HashMap::new();
    let mut known: HashSet<Fact> = HashSet::new();
    for fact in &base.facts {
        store_insert(&mut all, fact.clone());
        known.insert(fact.clone());
    }
    // Round zero: the base itself is the delta.
    let mut delta: Store = all.clone();

    let mut derived: BTreeSet<Fact> = BTreeSet::new();
    let mut traces: Vec<DerivationTrace> = Vec::new();
    let mut seen_traces: HashSet<(String, Vec<Fact>)> = HashSet::new();
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        let mut next_delta: Store = HashMap::new();
        for rule in rules {
            for delta_pos in 0..rule.body.len() {
                join_rule(rule, delta_pos, &all, &delta, &mut |bindings| {
                    let fact = instantiate(&rule.head, bindings);
                    let premises: Vec<Fact> = rule
                        .body
                        .iter()
                        .map(|lit| instantiate(lit, bindings))
                        .collect();
                    let key = (rule.label.clone(), premises.clone());
                    if seen_traces.insert(key) {
                        traces.push(DerivationTrace {
                            derived: fact.clone(),
                            rule_label: rule.label.clone(),
                            premises,
                            bindings: bindings.clone(),
                            local_probability: rule.local_probability,
                            emits: rule.emits.clone(),
                        });
                    }
                    if known.insert(fact.clone()) {
                        derived.insert(fact.clone());
                        store_insert(&mut next_delta, fact);
                    }
                });
            }
        }
        if next_delta.is_empty() {
            break;
        }
        for facts in next_delta.values() {
            for fact in facts {
                store_insert(&mut all, fact.clone());
            }
        }
        delta = next_delta;
    }

    // Declaration order first so downstream step tables follow the library.
    let rule_index: HashMap<&str, usize> = rules
        .iter()
        .enumerate()
        .map(|(i, r)| (r.label.as_str(), i))
        .collect();
    traces.sort_by(|a, b| {
        (rule_index[a.rule_label.as_str()], &a.premises)
            .cmp(&(rule_index[b.rule_label.as_str()], &b.premises))
    });
    Ok(Evaluation {
        derived,
        traces,
        iterations,
    })
}

/// Joins the rule body left to right, with the literal at `delta_pos` drawn
/// from the delta store and every other literal from the full store.
fn join_rule(
    rule: &Rule,
    delta_pos: usize,
    all: &Store,
    delta: &Store,
    emit: &mut dyn FnMut(&Bindings),
) {
    fn recurse(
        body: &[Literal],
        pos: usize,
        delta_pos: usize,
        all: &Store,
        delta: &Store,
        bindings: &Bindings,
        emit: &mut dyn FnMut(&Bindings),
    ) {
        if pos == body.len() {
            emit(bindings);
            return;
        }
        let lit = &body[pos];
        let source = if pos == delta_pos { delta } else { all };
        let Some(facts) = source.get(&lit.predicate) else {
            return;
        };
        for fact in facts {
            if let Some(extended) = unify(lit, fact, bindings) {
                recurse(body, pos + 1, delta_pos, all, delta, &extended, emit);
            }
        }
    }
    recurse(&rule.body, 0, delta_pos, all, delta, &Bindings::new(), emit);
}

/// Replays a trace bottom-up: premises must all be in `available`, and the
/// rule must re-derive exactly the trace's fact.
pub fn replay_trace(trace: &DerivationTrace, rules: &[Rule], available: &BTreeSet<Fact>) -> bool {
    let Some(rule) = rules.iter().find(|r| r.label == trace.rule_label) else {
        return false;
    };
    if trace.premises.len() != rule.body.len() {
        return false;
    }
    if !trace.premises.iter().all(|p| available.contains(p)) {
        return false;
    }
    let mut bindings = Bindings::new();
    for (lit, premise) in rule.body.iter().zip(trace.premises.iter()) {
        match unify(lit, premise, &bindings) {
            Some(extended) => bindings = extended,
            None => return false,
        }
    }
    instantiate(&rule.head, &bindings) == trace.derived
}

/// Reference evaluator: applies every rule against the full store until
/// nothing changes. Quadratic and trace-free; exists to cross-check the
/// semi-naive engine.
pub mod naive {
    use super::*;

    pub fn evaluate(rules: &[Rule], base: &FactBase) -> Result<BTreeSet<Fact>, DatalogError> {
        validate_rules(rules)?;
        check_arities(rules, base)?;
        let mut all: Store = HashMap::new();
        let mut known: HashSet<Fact> = HashSet::new();
        for fact in &base.facts {
            store_insert(&mut all, fact.clone());
            known.insert(fact.clone());
        }
        loop {
            let mut fresh: Vec<Fact> = Vec::new();
            for rule in rules {
                // delta_pos = 0 with delta == all scans every combination.
                join_rule(rule, 0, &all, &all, &mut |bindings| {
                    let fact = instantiate(&rule.head, bindings);
                    if !known.contains(&fact) && !fresh.contains(&fact) {
                        fresh.push(fact);
                    }
                });
            }
            if fresh.is_empty() {
                break;
            }
            for fact in fresh {
                known.insert(fact.clone());
                store_insert(&mut all, fact);
            }
        }
        let derived: BTreeSet<Fact> = known
            .into_iter()
            .filter(|f| !base.facts.contains(f))
            .collect();
        Ok(derived)
    }
}
