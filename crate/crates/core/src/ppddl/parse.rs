use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::{emit_domain, emit_problem, Action, Branch, Domain, Literal, Problem, PROBABILITY_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// 1-based source position.
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, kind, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ParseFailure {
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Domain(Domain),
    Problem(Problem),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }
}

struct Diags(Vec<Diagnostic>);

impl Diags {
    fn error(&mut self, pos: Pos, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Error,
            line: pos.line,
            column: pos.column,
            message: message.into(),
        });
    }

    fn warning(&mut self, pos: Pos, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Warning,
            line: pos.line,
            column: pos.column,
            message: message.into(),
        });
    }

    fn has_errors(&self) -> bool {
        self.0.iter().any(|d| d.severity == Severity::Error)
    }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, Diagnostic> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    let syntax = |pos: Pos, msg: &str| Diagnostic {
        severity: Severity::Error,
        line: pos.line,
        column: pos.column,
        message: msg.to_string(),
    };
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            '(' => {
                chars.next();
                column += 1;
                stack.push((Vec::new(), pos));
            }
            ')' => {
                chars.next();
                column += 1;
                let (items, open) = stack.pop().ok_or_else(|| syntax(pos, "unexpected `)`"))?;
                let list = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                    column += 1;
                }
                let a = Sexp::Atom(atom.to_ascii_lowercase(), pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(a),
                    None => top.push(a),
                }
            }
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(syntax(open, "unclosed `(`"));
    }
    Ok(top)
}

/// `(define (<kind> NAME) body...)`; returns kind, name and the body.
fn header<'a>(sexps: &'a [Sexp], diags: &mut Diags) -> Option<(&'a str, String, &'a [Sexp])> {
    let Some(first) = sexps.first() else {
        diags.error(Pos { line: 1, column: 1 }, "empty input");
        return None;
    };
    if let Some(extra) = sexps.get(1) {
        diags.error(extra.pos(), "unexpected content after the definition");
        return None;
    }
    let Sexp::List(items, pos) = first else {
        diags.error(first.pos(), "expected `(define ...)`");
        return None;
    };
    if items.first().and_then(Sexp::atom) != Some("define") {
        diags.error(*pos, "expected `(define ...)`");
        return None;
    }
    let kind = match items.get(1) {
        Some(Sexp::List(h, hp)) => match (h.first().and_then(Sexp::atom), h.get(1).and_then(Sexp::atom), h.len()) {
            (Some(kind @ ("domain" | "problem")), Some(name), 2) => (kind, name.to_string()),
            _ => {
                diags.error(*hp, "expected `(domain NAME)` or `(problem NAME)`");
                return None;
            }
        },
        other => {
            diags.error(other.map(Sexp::pos).unwrap_or(*pos), "missing definition header");
            return None;
        }
    };
    Some((kind.0, kind.1, &items[2..]))
}

fn parse_literal(s: &Sexp, diags: &mut Diags) -> Option<(Literal, Pos)> {
    let Sexp::List(items, pos) = s else {
        diags.error(s.pos(), "expected a literal");
        return None;
    };
    match items.as_slice() {
        [Sexp::Atom(name, _)] if name != "and" && name != "not" => Some((Literal::pos(name.clone()), *pos)),
        [Sexp::Atom(not, _), inner] if not == "not" => match inner {
            Sexp::List(v, ip) if v.len() == 1 && v[0].atom().is_some_and(|n| n != "and" && n != "not") => {
                Some((Literal::neg(v[0].atom().unwrap()), *ip))
            }
            _ => {
                diags.error(inner.pos(), "`not` expects an atom `(p)`");
                None
            }
        },
        _ => {
            diags.error(*pos, "expected `(p)` or `(not (p))`");
            None
        }
    }
}

/// A literal or `(and literal*)`.
fn parse_conjunction(s: &Sexp, diags: &mut Diags) -> Option<Vec<(Literal, Pos)>> {
    if let Sexp::List(items, _) = s {
        if items.first().and_then(Sexp::atom) == Some("and") {
            let mut out = Vec::new();
            for it in &items[1..] {
                out.push(parse_literal(it, diags)?);
            }
            return Some(out);
        }
    }
    parse_literal(s, diags).map(|l| vec![l])
}

type LocatedBranch = (f64, Pos, Vec<(Literal, Pos)>);

fn parse_effect(s: &Sexp, diags: &mut Diags) -> Option<Vec<LocatedBranch>> {
    if let Sexp::List(items, pos) = s {
        if items.first().and_then(Sexp::atom) == Some("probabilistic") {
            let rest = &items[1..];
            if rest.len() % 2 != 0 || rest.is_empty() {
                diags.error(*pos, "`probabilistic` expects probability/effect pairs");
                return None;
            }
            let mut out = Vec::new();
            for pair in rest.chunks(2) {
                let ppos = pair[0].pos();
                let Some(p) = pair[0].atom().and_then(|a| a.parse::<f64>().ok()) else {
                    diags.error(ppos, "expected a probability");
                    return None;
                };
                out.push((p, ppos, parse_conjunction(&pair[1], diags)?));
            }
            return Some(out);
        }
        let lits = parse_conjunction(s, diags)?;
        return Some(if lits.is_empty() { Vec::new() } else { vec![(1.0, *pos, lits)] });
    }
    diags.error(s.pos(), "expected an effect");
    None
}

fn strip(lits: Vec<(Literal, Pos)>) -> Vec<Literal> {
    lits.into_iter().map(|(l, _)| l).collect()
}

fn domain_from(name: String, body: &[Sexp], diags: &mut Diags) -> Option<Domain> {
    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    let mut declared = HashSet::new();
    let mut uses: Vec<(String, Pos)> = Vec::new();
    let mut action_names = HashSet::new();
    for section in body {
        let Sexp::List(items, pos) = section else {
            diags.error(section.pos(), "expected a section");
            return None;
        };
        match items.first().and_then(Sexp::atom) {
            Some(":requirements") => {
                for r in &items[1..] {
                    match r.atom() {
                        Some(a) if a.starts_with(':') => domain.requirements.push(a.to_string()),
                        _ => {
                            diags.error(r.pos(), "expected a requirement keyword");
                            return None;
                        }
                    }
                }
            }
            Some(":predicates") => {
                for p in &items[1..] {
                    match p {
                        Sexp::List(v, ppos) if v.len() == 1 && v[0].atom().is_some() => {
                            let n = v[0].atom().unwrap().to_string();
                            if !declared.insert(n.clone()) {
                                diags.error(*ppos, format!("duplicate predicate `{n}`"));
                            }
                            domain.predicates.push(n);
                        }
                        _ => {
                            diags.error(p.pos(), "predicates must be 0-ary `(name)`");
                            return None;
                        }
                    }
                }
            }
            Some(":action") => {
                let Some(name) = items.get(1).and_then(Sexp::atom) else {
                    diags.error(*pos, "action needs a name");
                    return None;
                };
                if !action_names.insert(name.to_string()) {
                    diags.error(*pos, format!("duplicate action `{name}`"));
                }
                let mut precondition = Vec::new();
                let mut effect = Vec::new();
                let mut seen_effect = false;
                let mut k = 2;
                while k < items.len() {
                    let key = items[k].atom();
                    let Some(value) = items.get(k + 1) else {
                        diags.error(items[k].pos(), "missing value");
                        return None;
                    };
                    match key {
                        Some(":parameters") => {
                            if !matches!(value, Sexp::List(v, _) if v.is_empty()) {
                                diags.error(value.pos(), "only `:parameters ()` is supported");
                                return None;
                            }
                        }
                        Some(":precondition") => {
                            let lits = parse_conjunction(value, diags)?;
                            uses.extend(lits.iter().map(|(l, p)| (l.predicate.clone(), *p)));
                            precondition = strip(lits);
                        }
                        Some(":effect") => {
                            seen_effect = true;
                            let branches = parse_effect(value, diags)?;
                            let mut sum = 0.0;
                            for (p, ppos, _) in &branches {
                                if !(*p > 0.0 && *p <= 1.0) {
                                    diags.error(*ppos, format!("probability {p} outside (0, 1]"));
                                }
                                sum += p;
                            }
                            if sum > 1.0 + PROBABILITY_SLACK {
                                diags.error(value.pos(), format!("branch probabilities sum to {sum}"));
                            }
                            for (_, _, lits) in &branches {
                                uses.extend(lits.iter().map(|(l, p)| (l.predicate.clone(), *p)));
                            }
                            effect = branches
                                .into_iter()
                                .map(|(probability, _, lits)| Branch {
                                    probability,
                                    literals: strip(lits),
                                })
                                .collect();
                        }
                        _ => {
                            diags.error(items[k].pos(), "expected :parameters, :precondition or :effect");
                            return None;
                        }
                    }
                    k += 2;
                }
                if !seen_effect || effect.iter().all(|b: &Branch| b.literals.is_empty()) {
                    diags.warning(*pos, format!("action `{name}` has an empty effect"));
                }
                domain.actions.push(Action {
                    name: name.to_string(),
                    precondition,
                    effect,
                });
            }
            _ => {
                diags.error(*pos, "unknown domain section");
                return None;
            }
        }
    }
    for (name, pos) in uses {
        if !declared.contains(&name) {
            diags.error(pos, format!("undeclared predicate `{name}`"));
        }
    }
    Some(domain)
}

struct LocatedProblem {
    problem: Problem,
    domain_pos: Pos,
    init: Vec<Pos>,
    goal: Vec<Pos>,
}

fn problem_from(name: String, body: &[Sexp], diags: &mut Diags) -> Option<LocatedProblem> {
    let mut lp = LocatedProblem {
        problem: Problem {
            name,
            domain: String::new(),
            init: Vec::new(),
            goal: Vec::new(),
        },
        domain_pos: Pos { line: 1, column: 1 },
        init: Vec::new(),
        goal: Vec::new(),
    };
    for section in body {
        let Sexp::List(items, pos) = section else {
            diags.error(section.pos(), "expected a section");
            return None;
        };
        match items.first().and_then(Sexp::atom) {
            Some(":domain") => match items.get(1).and_then(Sexp::atom) {
                Some(d) if items.len() == 2 => {
                    lp.problem.domain = d.to_string();
                    lp.domain_pos = items[1].pos();
                }
                _ => {
                    diags.error(*pos, "expected `(:domain NAME)`");
                    return None;
                }
            },
            Some(":init") => {
                for it in &items[1..] {
                    match parse_literal(it, diags)? {
                        (l, p) if l.positive => {
                            lp.problem.init.push(l.predicate);
                            lp.init.push(p);
                        }
                        (_, p) => {
                            diags.error(p, "initial state lists true atoms only");
                            return None;
                        }
                    }
                }
            }
            Some(":goal") => {
                let Some(g) = items.get(1) else {
                    diags.error(*pos, "missing goal formula");
                    return None;
                };
                for (l, p) in parse_conjunction(g, diags)? {
                    lp.problem.goal.push(l);
                    lp.goal.push(p);
                }
            }
            _ => {
                diags.error(*pos, "unknown problem section");
                return None;
            }
        }
    }
    if lp.problem.domain.is_empty() {
        diags.error(Pos { line: 1, column: 1 }, "problem has no `(:domain ...)`");
    }
    Some(lp)
}

enum Parsed {
    Domain(Domain),
    Problem(LocatedProblem),
}

fn parse_any(text: &str, diags: &mut Diags) -> Option<Parsed> {
    let sexps = match read_sexps(text) {
        Ok(s) => s,
        Err(d) => {
            diags.0.push(d);
            return None;
        }
    };
    let (kind, name, body) = header(&sexps, diags)?;
    if kind == "domain" {
        domain_from(name, body, diags).map(Parsed::Domain)
    } else {
        problem_from(name, body, diags).map(Parsed::Problem)
    }
}

fn errors_only(diags: Diags) -> ParseFailure {
    ParseFailure {
        diagnostics: diags.0.into_iter().filter(|d| d.severity == Severity::Error).collect(),
    }
}

/// Parse either a domain or a problem file.
pub fn parse(text: &str) -> Result<Document, ParseFailure> {
    let mut diags = Diags(Vec::new());
    let parsed = parse_any(text, &mut diags);
    if diags.has_errors() {
        return Err(errors_only(diags));
    }
    Ok(match parsed.expect("no errors implies a value") {
        Parsed::Domain(d) => Document::Domain(d),
        Parsed::Problem(p) => Document::Problem(p.problem),
    })
}

pub fn parse_domain(text: &str) -> Result<Domain, ParseFailure> {
    match parse(text)? {
        Document::Domain(d) => Ok(d),
        Document::Problem(_) => Err(ParseFailure {
            diagnostics: vec![Diagnostic {
                severity: Severity::Error,
                line: 1,
                column: 1,
                message: "expected a domain, found a problem".into(),
            }],
        }),
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseFailure> {
    match parse(text)? {
        Document::Problem(p) => Ok(p),
        Document::Domain(_) => Err(ParseFailure {
            diagnostics: vec![Diagnostic {
                severity: Severity::Error,
                line: 1,
                column: 1,
                message: "expected a problem, found a domain".into(),
            }],
        }),
    }
}

/// Parse a domain and return it together with every diagnostic, warnings included.
pub fn check_domain(text: &str) -> (Option<Domain>, Vec<Diagnostic>) {
    let mut diags = Diags(Vec::new());
    let parsed = parse_any(text, &mut diags);
    let domain = match parsed {
        Some(Parsed::Domain(d)) if !diags.has_errors() => Some(d),
        Some(Parsed::Problem(_)) => {
            diags.error(Pos { line: 1, column: 1 }, "expected a domain, found a problem");
            None
        }
        _ => None,
    };
    (domain, diags.0)
}

/// Check a domain file and a problem file against each other. Diagnostics
/// from the problem file are prefixed with `problem:` in their message.
pub fn validate_text(domain_text: &str, problem_text: &str) -> Vec<Diagnostic> {
    let (domain, mut out) = check_domain(domain_text);
    let mut pdiags = Diags(Vec::new());
    let problem = match parse_any(problem_text, &mut pdiags) {
        Some(Parsed::Problem(p)) => Some(p),
        Some(Parsed::Domain(_)) => {
            pdiags.error(Pos { line: 1, column: 1 }, "expected a problem, found a domain");
            None
        }
        None => None,
    };
    if let (Some(d), Some(lp)) = (&domain, &problem) {
        if lp.problem.domain != d.name {
            pdiags.error(
                lp.domain_pos,
                format!("problem refers to domain `{}`, not `{}`", lp.problem.domain, d.name),
            );
        }
        let declared: HashSet<&str> = d.predicates.iter().map(String::as_str).collect();
        for (name, pos) in lp.problem.init.iter().zip(&lp.init) {
            if !declared.contains(name.as_str()) {
                pdiags.error(*pos, format!("undeclared predicate `{name}` in init"));
            }
        }
        for (lit, pos) in lp.problem.goal.iter().zip(&lp.goal) {
            if !declared.contains(lit.predicate.as_str()) {
                pdiags.error(*pos, format!("goal uses unknown predicate `{}`", lit.predicate));
            }
        }
    }
    out.extend(pdiags.0.into_iter().map(|mut d| {
        d.message = format!("problem: {}", d.message);
        d
    }));
    out
}

/// Validate in-memory structures through their canonical text, so every
/// diagnostic points into that text.
pub fn validate(domain: &Domain, problem: &Problem) -> Vec<Diagnostic> {
    validate_text(&emit_domain(domain), &emit_problem(problem))
}
