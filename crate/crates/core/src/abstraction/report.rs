use std::fmt::Write;

use super::vocabulary::SymbolOrigin;
use super::Abstraction;

/// Human-readable summary of an abstraction run.
pub fn render_report(a: &Abstraction) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "admitted transitions: {}", a.admitted);
    let _ = writeln!(w, "partitions: {}", a.partitions.len());
    let _ = writeln!(w, "factors: {}", a.factors.len());
    let _ = writeln!(w, "symbols: {}", a.vocabulary.symbols.len());
    let _ = writeln!(w, "operators: {}", a.operators.len());
    let _ = writeln!(w, "mean classifier accuracy: {:.4}", a.mean_classifier_accuracy());

    let _ = writeln!(w, "\n[factors]");
    for f in &a.factors {
        let names: Vec<&str> = f.vars.iter().map(|&v| a.variables[v].as_str()).collect();
        let tag = if f.residual { " (residual)" } else { "" };
        let _ = writeln!(w, "factor_{}{}: {}", f.id, tag, names.join(", "));
    }

    let _ = writeln!(w, "\n[partitions]");
    for (i, p) in a.partitions.iter().enumerate() {
        let mask: Vec<&str> = p.mask.changed_vars.iter().map(|&v| a.variables[v].as_str()).collect();
        let _ = writeln!(
            w,
            "option {} partition {}: {} samples, mask [{}]",
            p.option_id,
            p.partition_id,
            p.sample_count(),
            mask.join(", ")
        );
        for (k, o) in p.outcomes.iter().enumerate() {
            let syms: Vec<String> = a.vocabulary.outcome_symbols[i][k]
                .iter()
                .map(|&(_, s)| a.vocabulary.symbols[s].name.clone())
                .collect();
            let _ = writeln!(
                w,
                "  outcome {k}: p={:.6} n={} -> {}",
                o.probability,
                o.count,
                syms.join(" ")
            );
        }
        match &a.classifiers[i] {
            Some(c) => {
                let mut factors: Vec<String> = c.factors.iter().map(|f| format!("factor_{f}")).collect();
                factors.extend(c.pinned.iter().map(|(f, v)| format!("factor_{f}={v:?}")));
                let _ = writeln!(
                    w,
                    "  precondition on [{}]: accuracy {:.4}, balanced {:.4}, {}+/{}-{}",
                    factors.join(", "),
                    c.heldout_accuracy,
                    c.balanced_accuracy,
                    c.positives,
                    c.negatives,
                    if c.low_confidence { ", LOW CONFIDENCE" } else { "" }
                );
            }
            None => {
                let _ = writeln!(w, "  precondition: none");
            }
        }
    }

    let _ = writeln!(w, "\n[symbols]");
    for s in &a.vocabulary.symbols {
        let mean: Vec<String> = s.distribution.mean().iter().map(|v| format!("{v:.4}")).collect();
        let origin = match s.origin {
            SymbolOrigin::Effect => "effect",
            SymbolOrigin::Start => "start",
        };
        let _ = writeln!(
            w,
            "{}: factor_{} {} mean [{}]",
            s.name,
            s.factor_id,
            origin,
            mean.join(", ")
        );
    }

    if !a.warnings.is_empty() {
        let _ = writeln!(w, "\n[warnings]");
        for m in &a.warnings {
            let _ = writeln!(w, "{m}");
        }
    }
    out
}
