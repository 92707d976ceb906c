//! Propositional PPDDL: data model, canonical emitter, parser and validator.
//!
//! The accepted subset is what the abstraction stage produces: 0-ary
//! predicates, actions without parameters, conjunctive preconditions of
//! literals and effects that are either a conjunction of literals or a
//! `probabilistic` list of such conjunctions.

mod emit;
mod parse;

pub use emit::{emit_domain, emit_problem, format_probability};
pub use parse::{
    check_domain, parse, parse_domain, parse_problem, validate, validate_text, Diagnostic, Document,
    ParseFailure, Severity,
};

use serde::{Deserialize, Serialize};

/// Tolerance on the sum of branch probabilities.
pub const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: String,
    pub positive: bool,
}

impl Literal {
    pub fn pos(name: impl Into<String>) -> Self {
        Literal {
            predicate: name.into(),
            positive: true,
        }
    }

    pub fn neg(name: impl Into<String>) -> Self {
        Literal {
            predicate: name.into(),
            positive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub probability: f64,
    pub literals: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub name: String,
    pub precondition: Vec<Literal>,
    /// Outcomes; any missing probability mass leaves the state unchanged.
    pub effect: Vec<Branch>,
}

impl Action {
    pub fn probability_sum(&self) -> f64 {
        self.effect.iter().map(|b| b.probability).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub predicates: Vec<String>,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub init: Vec<String>,
    pub goal: Vec<Literal>,
}

impl Domain {
    pub fn new(name: impl Into<String>) -> Self {
        Domain {
            name: name.into(),
            requirements: vec![":probabilistic-effects".into()],
            predicates: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn action(&self, name: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.name == name)
    }
}
