//! Text formats for the option set and the transitions dataset.

use std::fmt::Write as _;

use thiserror::Error;

use crate::env::StateVector;
use crate::options::{OptionDef, TerminationReason, TransitionSample};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct DatasetError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError {
        line,
        message: message.into(),
    }
}

/// Decimal rendering with 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            for _ in digits.len()..int_len {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

pub fn options_to_string(options: &[OptionDef]) -> String {
    let mut out = String::new();
    for o in options {
        let t = o.t.map(|t| t.as_str()).unwrap_or("-");
        writeln!(out, "{}\t{}\t{}", o.id, o.p, t).unwrap();
    }
    out
}

pub fn parse_options(text: &str) -> Result<Vec<OptionDef>, DatasetError> {
    let mut options = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(n, format!("expected 3 fields, found {}", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|_| err(n, "bad option id"))?;
        let p = fields[1].parse().map_err(|e: String| err(n, e))?;
        let t = match fields[2] {
            "-" => None,
            s => Some(s.parse().map_err(|e: String| err(n, e))?),
        };
        if id != options.len() {
            return Err(err(n, format!("option ids must be consecutive from 0, found {id}")));
        }
        options.push(OptionDef { id, p, t });
    }
    Ok(options)
}

/// Header plus one tab-separated line per sample. The trailing `initiable`
/// column lists the option ids initiable at `s_init` (`-` when none).
pub fn transitions_to_string(variable_names: &[String], samples: &[TransitionSample]) -> String {
    let mut out = String::from("option_id\treason\tsteps\tseed");
    for name in variable_names {
        write!(out, "\tinit.{name}").unwrap();
    }
    for name in variable_names {
        write!(out, "\tterm.{name}").unwrap();
    }
    out.push_str("\tinitiable\n");
    for s in samples {
        write!(out, "{}\t{}\t{}\t{}", s.option_id, s.reason.as_str(), s.steps, s.seed).unwrap();
        for v in s.s_init.as_slice().iter().chain(s.s_term.as_slice()) {
            out.push('\t');
            out.push_str(&format_sig9(*v));
        }
        out.push('\t');
        if s.initiable.is_empty() {
            out.push('-');
        } else {
            let ids: Vec<String> = s.initiable.iter().map(|i| i.to_string()).collect();
            out.push_str(&ids.join(","));
        }
        out.push('\n');
    }
    out
}

/// Parse a transitions file, returning the variable names and the samples.
pub fn parse_transitions(text: &str) -> Result<(Vec<String>, Vec<TransitionSample>), DatasetError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 5 || cols[..4] != ["option_id", "reason", "steps", "seed"] || cols.last() != Some(&"initiable") {
        return Err(err(1, "malformed header"));
    }
    let state_cols = &cols[4..cols.len() - 1];
    if !state_cols.len().is_multiple_of(2) {
        return Err(err(1, "unequal init/term columns"));
    }
    let dim = state_cols.len() / 2;
    let mut names = Vec::with_capacity(dim);
    for (a, b) in state_cols[..dim].iter().zip(&state_cols[dim..]) {
        match (a.strip_prefix("init."), b.strip_prefix("term.")) {
            (Some(x), Some(y)) if x == y => names.push(x.to_string()),
            _ => return Err(err(1, format!("mismatched state columns `{a}` / `{b}`"))),
        }
    }

    let mut samples = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != cols.len() {
            return Err(err(n, format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        let option_id = f[0].parse().map_err(|_| err(n, "bad option id"))?;
        let reason = TerminationReason::parse(f[1]).ok_or_else(|| err(n, format!("unknown reason `{}`", f[1])))?;
        let steps = f[2].parse().map_err(|_| err(n, "bad step count"))?;
        let seed = f[3].parse().map_err(|_| err(n, "bad seed"))?;
        let mut values = Vec::with_capacity(2 * dim);
        for v in &f[4..4 + 2 * dim] {
            values.push(v.parse::<f64>().map_err(|_| err(n, format!("bad number `{v}`")))?);
        }
        let s_term = StateVector(values.split_off(dim));
        let initiable = match f[4 + 2 * dim] {
            "-" => Vec::new(),
            s => s
                .split(',')
                .map(|x| x.parse().map_err(|_| err(n, "bad initiable list")))
                .collect::<Result<_, _>>()?,
        };
        samples.push(TransitionSample {
            option_id,
            s_init: StateVector(values),
            s_term,
            reason,
            steps,
            seed,
            initiable,
        });
    }
    Ok((names, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Primitive::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(80.0 / 384.0), "0.208333333");
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(0.0416666667), "0.0416666667");
        assert_eq!(format_sig9(-2.5), "-2.50000000");
        assert_eq!(format_sig9(1234.5), "1234.50000");
    }

    #[test]
    fn options_round_trip() {
        let opts = vec![
            OptionDef::new(0, GoLeft, None),
            OptionDef::new(1, GoRight, Some(GoUp)),
        ];
        let text = options_to_string(&opts);
        assert_eq!(text, "0\tgo_left\t-\n1\tgo_right\tgo_up\n");
        assert_eq!(parse_options(&text).unwrap(), opts);
    }

    #[test]
    fn bad_option_line_reports_line() {
        let e = parse_options("0\tgo_left\t-\n1\tfly\t-\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn transitions_round_trip() {
        let names = vec!["a".to_string(), "b".to_string()];
        let s = TransitionSample {
            option_id: 3,
            s_init: StateVector(vec![0.25, 1.0]),
            s_term: StateVector(vec![0.5, 0.0]),
            reason: TerminationReason::PrimitiveExhausted,
            steps: 7,
            seed: 42,
            initiable: vec![1, 3],
        };
        let text = transitions_to_string(&names, std::slice::from_ref(&s));
        let (n2, back) = parse_transitions(&text).unwrap();
        assert_eq!(n2, names);
        assert_eq!(back, vec![s]);
    }

    #[test]
    fn field_count_is_checked() {
        let text = "option_id\treason\tsteps\tseed\tinit.a\tterm.a\tinitiable\n0\tstep_budget\t1\n";
        assert_eq!(parse_transitions(text).unwrap_err().line, 2);
    }
}
