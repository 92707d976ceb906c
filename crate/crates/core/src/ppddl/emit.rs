use std::fmt::Write as _;

use super::{Branch, Domain, Literal, Problem};

pub fn format_probability(p: f64) -> String {
    format!("{p:.6}")
}

fn literal(out: &mut String, l: &Literal) {
    if l.positive {
        write!(out, "({})", l.predicate).unwrap();
    } else {
        write!(out, "(not ({}))", l.predicate).unwrap();
    }
}

fn conjunction(out: &mut String, lits: &[Literal]) {
    out.push_str("(and");
    for l in lits {
        out.push(' ');
        literal(out, l);
    }
    out.push(')');
}

fn effect(out: &mut String, branches: &[Branch]) {
    if branches.is_empty() {
        out.push_str("(and)");
        return;
    }
    out.push_str("(probabilistic");
    for b in branches {
        write!(out, " {} ", format_probability(b.probability)).unwrap();
        conjunction(out, &b.literals);
    }
    out.push(')');
}

/// Canonical text of a domain; declaration order is preserved.
pub fn emit_domain(d: &Domain) -> String {
    let mut out = String::new();
    writeln!(out, "(define (domain {})", d.name).unwrap();
    if !d.requirements.is_empty() {
        writeln!(out, "  (:requirements {})", d.requirements.join(" ")).unwrap();
    }
    out.push_str("  (:predicates\n");
    for p in &d.predicates {
        writeln!(out, "    ({p})").unwrap();
    }
    out.push_str("  )\n");
    for a in &d.actions {
        writeln!(out, "  (:action {}", a.name).unwrap();
        out.push_str("    :parameters ()\n    :precondition ");
        conjunction(&mut out, &a.precondition);
        out.push_str("\n    :effect ");
        effect(&mut out, &a.effect);
        out.push_str("\n  )\n");
    }
    out.push_str(")\n");
    out
}

pub fn emit_problem(p: &Problem) -> String {
    let mut out = String::new();
    writeln!(out, "(define (problem {})", p.name).unwrap();
    writeln!(out, "  (:domain {})", p.domain).unwrap();
    out.push_str("  (:init");
    for i in &p.init {
        write!(out, " ({i})").unwrap();
    }
    out.push_str(")\n  (:goal ");
    conjunction(&mut out, &p.goal);
    out.push_str(")\n)\n");
    out
}
