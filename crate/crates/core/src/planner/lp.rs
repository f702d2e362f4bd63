//! CPLEX-LP text export of the window model, and a checker for the subset of
//! the LP grammar that the exporter produces.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::model::{PlanModel, Sense, VarKind};

const LINE_WIDTH: usize = 200;

fn push_terms(out: &mut String, head: &str, terms: &[(usize, f64)], model: &PlanModel) {
    let mut line = String::from(head);
    for (i, &(v, c)) in terms.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        let term = if mag == 1.0 {
            format!(" {sign} {}", model.vars[v].name)
        } else {
            format!(" {sign} {mag} {}", model.vars[v].name)
        };
        let term = if i == 0 && c > 0.0 { term.replacen(" + ", " ", 1) } else { term };
        if line.len() + term.len() > LINE_WIDTH {
            out.push_str(&line);
            out.push('\n');
            line = String::from("   ");
        }
        line.push_str(&term);
    }
    out.push_str(&line);
}

/// Renders the model. Output depends only on the model, so equal models give
/// byte-identical files.
pub fn emit_lp(model: &PlanModel, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {title}");
    out.push_str("Maximize\n");
    if model.objective.is_empty() {
        out.push_str(" obj: 0 ");
        out.push_str(&model.vars[0].name);
    } else {
        push_terms(&mut out, " obj:", &model.objective, model);
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        push_terms(&mut out, &format!(" {}:", c.name), &c.terms, model);
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        match (v.kind, v.fixed) {
            (_, Some(x)) => {
                let _ = writeln!(out, " {} = {x}", v.name);
            }
            (VarKind::Integer, None) => {
                let _ = writeln!(out, " 0 <= {} <= 8", v.name);
            }
            _ => {}
        }
    }
    let section = |out: &mut String, title: &str, kind: VarKind| {
        let names: Vec<&str> = model.vars.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            return;
        }
        out.push_str(title);
        out.push('\n');
        for chunk in names.chunks(8) {
            out.push(' ');
            out.push_str(&chunk.join(" "));
            out.push('\n');
        }
    };
    section(&mut out, "Binaries", VarKind::Binary);
    section(&mut out, "Generals", VarKind::Integer);
    out.push_str("End\n");
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("duplicate constraint name {0}")]
    DuplicateName(String),
    #[error("variable {0} is declared but used in no row")]
    Undeclared(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LpSummary {
    pub variables: usize,
    pub constraints: usize,
    pub binaries: usize,
    pub generals: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Head,
    Objective,
    Rows,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn is_name(tok: &str) -> bool {
    let mut chars = tok.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || "_.[]{}!\"#$%&()/,;?@'`|~".contains(c))
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().map(|x| x.is_finite()).unwrap_or(false)
}

/// Checks an expression body: alternating optional sign, optional coefficient
/// and variable name.
fn check_expr(tokens: &[&str], line: usize, vars: &mut BTreeSet<String>) -> Result<(), LpError> {
    let err = |m: &str| LpError::Syntax { line, message: m.to_string() };
    let mut i = 0;
    let mut first = true;
    while i < tokens.len() {
        if tokens[i] == "+" || tokens[i] == "-" {
            i += 1;
        } else if !first {
            return Err(err("expected sign between terms"));
        }
        if i < tokens.len() && is_number(tokens[i]) {
            i += 1;
        }
        match tokens.get(i) {
            Some(t) if is_name(t) => {
                vars.insert(t.to_string());
                i += 1;
            }
            _ => return Err(err("expected variable name")),
        }
        first = false;
    }
    Ok(())
}

/// Parses `text` as the emitted LP subset and reports its size.
pub fn validate_lp(text: &str) -> Result<LpSummary, LpError> {
    let mut section = Section::Head;
    let mut seen = BTreeSet::new();
    let mut row_vars = BTreeSet::new();
    let mut declared = BTreeSet::new();
    let mut names = BTreeSet::new();
    let mut summary = LpSummary::default();
    // a row may continue over several lines until its sense appears
    let mut pending: Vec<String> = Vec::new();
    let mut pending_line = 0;
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('\\') {
            continue;
        }
        let keyword = match trimmed.to_ascii_lowercase().as_str() {
            "maximize" | "minimize" => Some(Section::Objective),
            "subject to" => Some(Section::Rows),
            "bounds" => Some(Section::Bounds),
            "binaries" => Some(Section::Binaries),
            "generals" => Some(Section::Generals),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(next) = keyword {
            if next <= section {
                return Err(LpError::Syntax { line, message: format!("section out of order: {trimmed}") });
            }
            if !pending.is_empty() && section == Section::Rows {
                return Err(LpError::Syntax { line: pending_line, message: "row without sense".into() });
            }
            if section == Section::Objective && !pending.is_empty() {
                let toks: Vec<&str> = pending.iter().map(String::as_str).collect();
                check_expr(&toks, pending_line, &mut row_vars)?;
                pending.clear();
            }
            section = next;
            seen.insert(next);
            continue;
        }
        match section {
            Section::Head | Section::End => {
                return Err(LpError::Syntax { line, message: "text outside a section".into() });
            }
            Section::Objective | Section::Rows => {
                let mut body = trimmed.to_string();
                if pending.is_empty() {
                    let (name, rest) = body
                        .split_once(':')
                        .ok_or_else(|| LpError::Syntax { line, message: "row without name".into() })?;
                    let name = name.trim();
                    if !is_name(name) {
                        return Err(LpError::Syntax { line, message: format!("bad row name {name}") });
                    }
                    if !names.insert(name.to_string()) {
                        return Err(LpError::DuplicateName(name.to_string()));
                    }
                    body = rest.to_string();
                    pending_line = line;
                }
                pending.extend(body.split_whitespace().map(str::to_string));
                if section == Section::Rows {
                    if let Some(pos) = pending.iter().position(|t| t == "<=" || t == ">=" || t == "=") {
                        if pos + 2 != pending.len() || !is_number(&pending[pos + 1]) {
                            return Err(LpError::Syntax { line, message: "sense must be followed by one number".into() });
                        }
                        let toks: Vec<&str> = pending[..pos].iter().map(String::as_str).collect();
                        check_expr(&toks, pending_line, &mut row_vars)?;
                        summary.constraints += 1;
                        pending.clear();
                    }
                }
            }
            Section::Bounds => {
                let toks: Vec<&str> = trimmed.split_whitespace().collect();
                let ok = match toks.as_slice() {
                    [v, "=", x] => is_name(v) && is_number(x),
                    [lo, "<=", v, "<=", hi] => is_number(lo) && is_name(v) && is_number(hi),
                    [v, "<=", x] | [v, ">=", x] => is_name(v) && is_number(x),
                    _ => false,
                };
                if !ok {
                    return Err(LpError::Syntax { line, message: format!("bad bound {trimmed}") });
                }
                let v = if toks.len() == 5 { toks[2] } else { toks[0] };
                declared.insert(v.to_string());
            }
            Section::Binaries | Section::Generals => {
                for t in trimmed.split_whitespace() {
                    if !is_name(t) {
                        return Err(LpError::Syntax { line, message: format!("bad name {t}") });
                    }
                    declared.insert(t.to_string());
                    if section == Section::Binaries {
                        summary.binaries += 1;
                    } else {
                        summary.generals += 1;
                    }
                }
            }
        }
    }
    for (s, label) in [(Section::Objective, "objective"), (Section::Rows, "Subject To"), (Section::End, "End")] {
        if !seen.contains(&s) {
            return Err(LpError::MissingSection(label));
        }
    }
    if let Some(v) = declared.difference(&row_vars).next() {
        return Err(LpError::Undeclared(v.clone()));
    }
    summary.variables = row_vars.len();
    Ok(summary)
}
