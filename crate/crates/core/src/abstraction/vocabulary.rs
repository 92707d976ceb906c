//! Propositional symbols: projected effect distributions, one factor each.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::factors::{factor_of_var, Factor};
use super::kde::{grid_l1, Kde};
use super::partition::PartitionedOption;
use super::{AbstractionConfig, AbstractionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolOrigin {
    /// Projected terminal distribution of at least one outcome.
    Effect,
    /// Introduced because no effect symbol covers the reset state.
    Start,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolDef {
    pub id: usize,
    pub factor_id: usize,
    pub name: String,
    pub distribution: Kde,
    pub origin: SymbolOrigin,
    /// `(option, partition, outcome)` triples whose effect this symbol names.
    pub sources: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicVocabulary {
    pub factors: Vec<Factor>,
    pub symbols: Vec<SymbolDef>,
    /// Symbols true in the reset state, one per non-residual factor.
    pub start_symbols: Vec<usize>,
    /// For each partition (in input order) and outcome: `(factor, symbol)` pairs.
    pub outcome_symbols: Vec<Vec<Vec<(usize, usize)>>>,
}

impl SymbolicVocabulary {
    pub fn symbols_on(&self, factor: usize) -> impl Iterator<Item = &SymbolDef> {
        self.symbols.iter().filter(move |s| s.factor_id == factor)
    }

    pub fn project(&self, factor: usize, state: &[f64]) -> Vec<f64> {
        self.factors[factor].vars.iter().map(|&v| state[v]).collect()
    }

    /// Mass a symbol puts in the L∞ ball of radius `radius` around `point`.
    pub fn local_mass(&self, symbol: usize, point: &[f64], radius: f64) -> f64 {
        let lo: Vec<f64> = point.iter().map(|v| v - radius).collect();
        let hi: Vec<f64> = point.iter().map(|v| v + radius).collect();
        self.symbols[symbol].distribution.box_mass(&lo, &hi)
    }

    /// The symbol on `factor` with the most mass near `point`, if any has
    /// at least `cover_min`.
    pub fn covering_symbol(&self, factor: usize, point: &[f64], radius: f64, cover_min: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for s in self.symbols_on(factor) {
            let m = self.local_mass(s.id, point, radius);
            if m >= cover_min && best.is_none_or(|(bm, _)| m > bm) {
                best = Some((m, s.id));
            }
        }
        best.map(|(_, id)| id)
    }
}

fn project_points(terminals: &[(Vec<f64>, usize)], mask: &[usize], vars: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let pos: Vec<usize> = vars
        .iter()
        .map(|v| mask.iter().position(|m| m == v).expect("factor inside mask"))
        .collect();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for (t, c) in terminals {
        let p: Vec<f64> = pos.iter().map(|&k| t[k]).collect();
        match points.iter().position(|q| *q == p) {
            Some(k) => counts[k] += *c as f64,
            None => {
                points.push(p);
                counts.push(*c as f64);
            }
        }
    }
    (points, counts)
}

/// One symbol per (partition, outcome, affected factor), merging symbols on
/// the same factor whose grid L1 distance is below `sym_merge_eps`, plus
/// start symbols for factors whose reset value no effect covers.
pub fn build_vocabulary(
    partitions: &[PartitionedOption],
    factors: &[Factor],
    start: &[f64],
    cfg: &AbstractionConfig,
) -> SymbolicVocabulary {
    let var_factor = factor_of_var(factors, start.len());
    let mut vocab = SymbolicVocabulary {
        factors: factors.to_vec(),
        symbols: Vec::new(),
        start_symbols: Vec::new(),
        outcome_symbols: Vec::new(),
    };
    for part in partitions {
        let mut per_outcome = Vec::new();
        for (k, outcome) in part.outcomes.iter().enumerate() {
            let mut touched: Vec<usize> = outcome.mask.iter().map(|&v| var_factor[v]).collect();
            touched.sort_unstable();
            touched.dedup();
            let mut pairs = Vec::new();
            for f in touched {
                let (points, counts) = project_points(&outcome.terminals, &outcome.mask, &factors[f].vars);
                let kde = Kde::fit(&points, &counts, cfg.min_bandwidth);
                let source = (part.option_id, part.partition_id, k);
                let existing = vocab
                    .symbols
                    .iter()
                    .filter(|s| s.factor_id == f)
                    .find(|s| grid_l1(&s.distribution, &kde, cfg.grid_cells) < cfg.sym_merge_eps)
                    .map(|s| s.id);
                let id = match existing {
                    Some(id) => {
                        vocab.symbols[id].sources.push(source);
                        id
                    }
                    None => {
                        let id = vocab.symbols.len();
                        vocab.symbols.push(SymbolDef {
                            id,
                            factor_id: f,
                            name: format!("symbol_{id}"),
                            distribution: kde,
                            origin: SymbolOrigin::Effect,
                            sources: vec![source],
                        });
                        id
                    }
                };
                pairs.push((f, id));
            }
            per_outcome.push(pairs);
        }
        vocab.outcome_symbols.push(per_outcome);
    }

    for f in factors.iter().filter(|f| !f.residual) {
        let point = vocab.project(f.id, start);
        let id = match vocab.covering_symbol(f.id, &point, cfg.support_radius, cfg.cover_min) {
            Some(id) => id,
            None => {
                let id = vocab.symbols.len();
                vocab.symbols.push(SymbolDef {
                    id,
                    factor_id: f.id,
                    name: format!("symbol_{id}"),
                    distribution: Kde::fit(&[point], &[1.0], cfg.min_bandwidth),
                    origin: SymbolOrigin::Start,
                    sources: Vec::new(),
                });
                id
            }
        };
        vocab.start_symbols.push(id);
    }
    vocab
}

/// Goal requirement on one state variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub var: String,
    pub value: GoalValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GoalValue {
    /// The variable's value in the reset state.
    Start,
    Value(f64),
}

impl FromStr for GoalSpec {
    type Err = String;

    /// `name=value` or `name=start`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (var, value) = s.split_once('=').ok_or_else(|| format!("goal `{s}` is not `name=value`"))?;
        let value = match value.trim() {
            "start" => GoalValue::Start,
            v => GoalValue::Value(v.parse().map_err(|_| format!("goal `{s}` has a bad value"))?),
        };
        Ok(GoalSpec {
            var: var.trim().to_string(),
            value,
        })
    }
}

impl fmt::Display for GoalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            GoalValue::Start => write!(f, "{}=start", self.var),
            GoalValue::Value(v) => write!(f, "{}={}", self.var, v),
        }
    }
}

/// Symbols that express the goal. The other variables of a goal factor keep
/// their reset values. Several specs on one factor are combined into one point.
pub fn resolve_goal(
    vocab: &SymbolicVocabulary,
    names: &[String],
    start: &[f64],
    goal: &[GoalSpec],
    cfg: &AbstractionConfig,
) -> Result<Vec<usize>, AbstractionError> {
    let var_factor = factor_of_var(&vocab.factors, start.len());
    let mut target = start.to_vec();
    let mut factors = Vec::new();
    for g in goal {
        let var = names
            .iter()
            .position(|n| *n == g.var)
            .ok_or_else(|| AbstractionError::UnreachableGoalSymbols(format!("unknown variable `{}`", g.var)))?;
        if let GoalValue::Value(v) = g.value {
            target[var] = v;
        }
        let f = var_factor[var];
        if vocab.factors[f].residual {
            return Err(AbstractionError::UnreachableGoalSymbols(format!(
                "no option changes `{}`",
                g.var
            )));
        }
        if !factors.contains(&f) {
            factors.push(f);
        }
    }
    factors
        .into_iter()
        .map(|f| {
            let point = vocab.project(f, &target);
            vocab
                .covering_symbol(f, &point, cfg.support_radius, cfg.cover_min)
                .ok_or_else(|| {
                    AbstractionError::UnreachableGoalSymbols(format!(
                        "no symbol covers {:?} on factor {f}",
                        point
                    ))
                })
        })
        .collect()
}
