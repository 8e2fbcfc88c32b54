//! Line-oriented proof-script files.
//!
//! ```text
//! # comment
//! premise I1: client believes (client sharedkey[PSK] CServer)
//! step D1.1: <formula> ; by A1 with P:=client, phi:=<formula>, psi:=<formula>
//! step D1.3: <formula> ; by MP from D1.2, D1.1
//! goal: CServer believes (client says T)
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::axiom::{AxiomId, Sort, Subst, Term};
use super::check::{ProofScript, ProofStep};
use super::formula::{Formula, Key};
use super::parse::{ParseError, Parser, Tok};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ScriptError {
    /// 1-based line number.
    pub line: usize,
    pub kind: ScriptErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptErrorKind {
    #[error("expected 'premise', 'step' or 'goal'")]
    UnknownDirective,
    #[error("expected ':' after the label")]
    MissingColon,
    #[error("empty label")]
    EmptyLabel,
    #[error("expected '; by RULE' after the step's formula")]
    MissingJustification,
    #[error("{0}")]
    UnknownRule(String),
    #[error("unknown metavariable '{0}'")]
    UnknownMetavariable(String),
    #[error("metavariable '{0}' bound twice")]
    DuplicateBinding(String),
    #[error("premise {0} declared twice")]
    DuplicatePremise(String),
    #[error("more than one goal")]
    DuplicateGoal,
    #[error("script has no goal")]
    MissingGoal,
    /// `column` is the 0-based byte offset within the line.
    #[error("column {column}: expected {expected}, found {found}")]
    Syntax {
        column: usize,
        expected: String,
        found: String,
    },
}

fn syntax(line: usize, column_base: usize, e: ParseError) -> ScriptError {
    ScriptError {
        line,
        kind: ScriptErrorKind::Syntax {
            column: column_base + e.position,
            expected: e.expected,
            found: e.found,
        },
    }
}

/// Parses text with `parse`, which must consume all of it.
fn parse_all<T>(
    text: &str,
    line: usize,
    base: usize,
    parse: impl FnOnce(&mut Parser) -> Result<T, ParseError>,
) -> Result<T, ScriptError> {
    let mut p = Parser::new(text).map_err(|e| syntax(line, base, e))?;
    let v = parse(&mut p).map_err(|e| syntax(line, base, e))?;
    p.expect_end().map_err(|e| syntax(line, base, e))?;
    Ok(v)
}

fn coerce(sort: Sort, value: Term) -> Term {
    match (sort, value) {
        (Sort::Principal, Term::Formula(Formula::Atom(n))) => Term::Principal(n),
        (Sort::Function, Term::Formula(Formula::Atom(n))) => Term::Function(n),
        (Sort::Key, Term::Formula(Formula::Atom(n))) => Term::Key(Key::Name(n)),
        (Sort::Key, Term::Formula(Formula::KeyTerm(k))) => Term::Key(k),
        (_, v) => v,
    }
}

/// `by RULE [with m:=v, ...] [from L, ...]`
fn justification(
    p: &mut Parser,
    line: usize,
) -> Result<(AxiomId, Subst, Vec<String>), ScriptError> {
    let err = |kind| ScriptError { line, kind };
    if !matches!(p.peek(), Tok::Ident(s) if s == "by") {
        return Err(err(ScriptErrorKind::MissingJustification));
    }
    p.bump();
    let rule = match p.bump() {
        Tok::Ident(r) => r
            .parse::<AxiomId>()
            .map_err(|e| err(ScriptErrorKind::UnknownRule(e.to_string())))?,
        _ => return Err(err(ScriptErrorKind::MissingJustification)),
    };
    let mut subst = Subst::new();
    let wrap = |e: ParseError| syntax(line, 0, e);
    if matches!(p.peek(), Tok::Ident(s) if s == "with") {
        p.bump();
        loop {
            let name = match p.bump() {
                Tok::Ident(n) => n,
                _ => return Err(wrap(p.error("a metavariable"))),
            };
            let sort = Sort::of(&name)
                .ok_or_else(|| err(ScriptErrorKind::UnknownMetavariable(name.clone())))?;
            p.expect(Tok::Assign).map_err(wrap)?;
            let value = if let Tok::Number(n) = *p.peek() {
                p.bump();
                Term::Index(usize::try_from(n).unwrap_or(usize::MAX))
            } else {
                Term::Formula(p.inner().map_err(wrap)?)
            };
            if subst.insert(name.clone(), coerce(sort, value)).is_some() {
                return Err(err(ScriptErrorKind::DuplicateBinding(name)));
            }
            if *p.peek() == Tok::Comma {
                p.bump();
            } else {
                break;
            }
        }
    }
    let mut premises = Vec::new();
    if p.at_keyword("from") {
        p.bump();
        loop {
            premises.push(p.name("a step label").map_err(wrap)?);
            if *p.peek() == Tok::Comma {
                p.bump();
            } else {
                break;
            }
        }
    }
    p.expect_end().map_err(wrap)?;
    Ok((rule, subst, premises))
}

/// Splits `LABEL: rest` and returns the label and the offset of `rest`.
fn labelled(body: &str, line: usize) -> Result<(String, usize), ScriptError> {
    let colon = body.find(':').ok_or(ScriptError {
        line,
        kind: ScriptErrorKind::MissingColon,
    })?;
    let label = body[..colon].trim();
    if label.is_empty() || label.contains(char::is_whitespace) {
        return Err(ScriptError {
            line,
            kind: ScriptErrorKind::EmptyLabel,
        });
    }
    Ok((label.to_string(), colon + 1))
}

pub fn parse_script(text: &str) -> Result<ProofScript, ScriptError> {
    let mut premises: Vec<(String, Formula)> = Vec::new();
    let mut steps = Vec::new();
    let mut goal = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = content.len() - trimmed.len();
        let (word, rest) = trimmed
            .split_once(char::is_whitespace)
            .unwrap_or((trimmed, ""));
        let rest_base = indent + word.len() + 1;
        match word {
            "premise" => {
                let (label, off) = labelled(rest, line)?;
                let f = parse_all(&rest[off..], line, rest_base + off, |p| p.inner())?;
                if premises.iter().any(|(l, _)| *l == label) {
                    return Err(ScriptError {
                        line,
                        kind: ScriptErrorKind::DuplicatePremise(label),
                    });
                }
                premises.push((label, f));
            }
            "step" => {
                let (label, off) = labelled(rest, line)?;
                let body = &rest[off..];
                let semi = body.find(';').ok_or(ScriptError {
                    line,
                    kind: ScriptErrorKind::MissingJustification,
                })?;
                let conclusion = parse_all(&body[..semi], line, rest_base + off, |p| p.inner())?;
                let tail = &body[semi + 1..];
                let mut p =
                    Parser::new(tail).map_err(|e| syntax(line, rest_base + off + semi + 1, e))?;
                let (rule, substitution, cited) =
                    justification(&mut p, line).map_err(|mut e| {
                        if let ScriptErrorKind::Syntax { column, .. } = &mut e.kind {
                            *column += rest_base + off + semi + 1;
                        }
                        e
                    })?;
                steps.push(ProofStep {
                    label,
                    conclusion,
                    rule,
                    premises: cited,
                    substitution,
                });
            }
            "goal:" | "goal" => {
                let body = if word == "goal:" {
                    (rest, rest_base)
                } else {
                    let t = rest.trim_start();
                    let Some(after) = t.strip_prefix(':') else {
                        return Err(ScriptError {
                            line,
                            kind: ScriptErrorKind::MissingColon,
                        });
                    };
                    (after, rest_base + (rest.len() - t.len()) + 1)
                };
                let f = parse_all(body.0, line, body.1, |p| p.inner())?;
                if goal.replace(f).is_some() {
                    return Err(ScriptError {
                        line,
                        kind: ScriptErrorKind::DuplicateGoal,
                    });
                }
            }
            _ => {
                return Err(ScriptError {
                    line,
                    kind: ScriptErrorKind::UnknownDirective,
                })
            }
        }
    }
    let goal = goal.ok_or(ScriptError {
        line: text.lines().count().max(1),
        kind: ScriptErrorKind::MissingGoal,
    })?;
    Ok(ProofScript {
        premises,
        steps,
        goal,
    })
}

/// Renders a script in the file format; `parse_script` reads it back.
pub fn render_script(script: &ProofScript) -> String {
    let mut out = String::new();
    for (label, f) in &script.premises {
        let _ = writeln!(out, "premise {label}: {f}");
    }
    for s in &script.steps {
        let _ = write!(out, "step {}: {} ; by {}", s.label, s.conclusion, s.rule);
        if !s.substitution.is_empty() {
            let binds: Vec<String> = s
                .substitution
                .iter()
                .map(|(k, v)| format!("{k}:={v}"))
                .collect();
            let _ = write!(out, " with {}", binds.join(", "));
        }
        if !s.premises.is_empty() {
            let _ = write!(out, " from {}", s.premises.join(", "));
        }
        out.push('\n');
    }
    let _ = writeln!(out, "goal: {}", script.goal);
    out
}
