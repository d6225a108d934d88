//! Text format for substitutions.
//!
//! ```text
//! # Tribonacci
//! 1 -> 12
//! 2 -> 13
//! 3 -> 1
//! ```
//!
//! One rule per line. The alphabet is the list of left-hand sides in order of
//! appearance. The seed is the first left-hand side unless a line
//! `@seed <letter>` overrides it. Right-hand sides are whitespace-separated
//! tokens; a token that is not itself a letter is split by greedy longest
//! match. `#` starts a comment.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::morphism::Morphism;
use crate::substitution::Substitution;
use crate::word::{Alphabet, Word};

struct Rule<'a> {
    line: usize,
    lhs: &'a str,
    rhs: Vec<(usize, &'a str)>,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Splits a line into `(column, token)` pairs, 1-based columns in chars.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut col = 0;
    for (byte, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push((c, &line[b..byte]));
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        out.push((c, &line[b..]));
    }
    out
}

pub fn parse(text: &str) -> Result<Substitution> {
    let mut rules: Vec<Rule<'_>> = Vec::new();
    let mut seed: Option<(usize, usize, &str)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(&(col0, first)) = toks.first() else {
            continue;
        };
        if first == "@seed" {
            match toks.as_slice() {
                [_, (c, s)] => {
                    if seed.is_some() {
                        return Err(err(line_no, col0, "duplicate @seed directive"));
                    }
                    seed = Some((line_no, *c, s));
                }
                _ => return Err(err(line_no, col0, "expected `@seed <letter>`")),
            }
            continue;
        }
        if first.starts_with('@') {
            return Err(err(line_no, col0, format!("unknown directive {first}")));
        }
        // Accept `a->w` and `a -> w` alike by locating the arrow in the raw line.
        let Some(arrow) = line.find("->") else {
            return Err(err(line_no, col0, "expected `letter -> word`"));
        };
        let lhs_toks = tokens(&line[..arrow]);
        let lhs = match lhs_toks.as_slice() {
            [(_, l)] => *l,
            [] => return Err(err(line_no, col0, "missing letter before `->`")),
            [_, (c, _), ..] => return Err(err(line_no, *c, "left side must be a single letter")),
        };
        if rules.iter().any(|r| r.lhs == lhs) {
            return Err(err(line_no, col0, format!("duplicate rule for {lhs}")));
        }
        let offset = line[..arrow + 2].chars().count();
        let rhs: Vec<(usize, &str)> = tokens(&line[arrow + 2..])
            .into_iter()
            .map(|(c, t)| (c + offset, t))
            .collect();
        if rhs.is_empty() {
            return Err(err(line_no, offset + 1, "empty image"));
        }
        rules.push(Rule {
            line: line_no,
            lhs,
            rhs,
        });
    }
    if rules.is_empty() {
        return Err(err(1, 1, "no rules"));
    }
    let alphabet = Arc::new(Alphabet::new(rules.iter().map(|r| r.lhs))?);
    let mut images = Vec::with_capacity(rules.len());
    for r in &rules {
        let mut w = Word::new();
        for &(c, t) in &r.rhs {
            match alphabet.parse_word(t) {
                Ok(part) => w.extend_from_slice(&part),
                Err(Error::DomainMismatch { letter }) => {
                    return Err(err(r.line, c, format!("unknown letter near {letter:?}")))
                }
                Err(e) => return Err(e),
            }
        }
        images.push(w);
    }
    let morphism = Morphism::new(alphabet.clone(), alphabet.clone(), images)?;
    let seed = match seed {
        None => crate::word::Letter(0),
        Some((line, col, s)) => alphabet
            .letter(s)
            .ok_or_else(|| err(line, col, format!("seed {s} is not a letter")))?,
    };
    Substitution::new(morphism, seed).map_err(|e| match e {
        Error::InvalidSubstitution(m) => err(rules[0].line, 1, m),
        other => other,
    })
}

/// Canonical text form; `parse(serialize(s)) == s` and serialization of the
/// result is byte-identical.
pub fn serialize(s: &Substitution) -> String {
    let mut out = String::new();
    let a = s.alphabet();
    if s.seed().index() != 0 {
        let _ = writeln!(out, "@seed {}", a.symbol(s.seed()));
    }
    for (lhs, rhs) in s.rules() {
        let _ = writeln!(out, "{lhs} -> {rhs}");
    }
    out
}
