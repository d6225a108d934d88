//! Alphabets, letters and finite words.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a symbol in its [`Alphabet`]; the canonical order is the index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u32);

impl Letter {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A finite ordered set of symbols. Symbols are whitespace-free strings and the
/// order of declaration is the canonical order used by every matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, Letter>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidAlphabet(format!("bad symbol {s:?}")));
            }
            if index.insert(s.clone(), Letter(i as u32)).is_some() {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self { symbols, index })
    }

    /// The alphabet `{1, ..., n}` used for return words.
    pub fn numbered(n: usize) -> Self {
        Self::new((1..=n).map(|i| i.to_string())).expect("numbered alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, a: Letter) -> &str {
        &self.symbols[a.index()]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn letter(&self, symbol: &str) -> Option<Letter> {
        self.index.get(symbol).copied()
    }

    pub fn letters(&self) -> impl ExactSizeIterator<Item = Letter> + '_ {
        (0..self.symbols.len() as u32).map(Letter)
    }

    pub fn contains(&self, a: Letter) -> bool {
        a.index() < self.symbols.len()
    }

    /// True when every symbol is a single character, so words can be written
    /// by juxtaposition.
    pub fn is_single_char(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    /// Renders a word, juxtaposing single-character symbols and separating
    /// longer ones by a space.
    pub fn render(&self, w: &[Letter]) -> String {
        let sep = if self.is_single_char() { "" } else { " " };
        w.iter()
            .map(|&a| self.symbol(a))
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// Parses a word. Whitespace-separated tokens are taken as symbols when they
    /// match one exactly and otherwise split by greedy longest match.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let mut out = Word::new();
        let max_len = self.symbols.iter().map(|s| s.len()).max().unwrap_or(1);
        for token in text.split_whitespace() {
            if let Some(a) = self.letter(token) {
                out.push(a);
                continue;
            }
            let mut rest = token;
            while !rest.is_empty() {
                let mut found = None;
                let mut take = max_len.min(rest.len());
                while take > 0 {
                    if rest.is_char_boundary(take) {
                        if let Some(a) = self.letter(&rest[..take]) {
                            found = Some((a, take));
                            break;
                        }
                    }
                    take -= 1;
                }
                match found {
                    Some((a, n)) => {
                        out.push(a);
                        rest = &rest[n..];
                    }
                    None => {
                        return Err(Error::DomainMismatch {
                            letter: rest.chars().next().map(String::from).unwrap_or_default(),
                        })
                    }
                }
            }
        }
        Ok(out)
    }
}

pub type SharedAlphabet = Arc<Alphabet>;

/// A finite word; the alphabet it lives over is carried by the surrounding
/// morphism or substitution.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn with_capacity(n: usize) -> Self {
        Self(Vec::with_capacity(n))
    }

    pub fn into_inner(self) -> Vec<Letter> {
        self.0
    }

    /// Letter-count vector over an alphabet of the given size.
    pub fn abelianization(&self, size: usize) -> Vec<i64> {
        abelianization(&self.0, size)
    }

    pub fn is_prefix_of(&self, other: &[Letter]) -> bool {
        other.starts_with(&self.0)
    }
}

pub fn abelianization(w: &[Letter], size: usize) -> Vec<i64> {
    let mut v = vec![0i64; size];
    for a in w {
        v[a.index()] += 1;
    }
    v
}

impl Deref for Word {
    type Target = Vec<Letter>;
    fn deref(&self) -> &Vec<Letter> {
        &self.0
    }
}

impl DerefMut for Word {
    fn deref_mut(&mut self) -> &mut Vec<Letter> {
        &mut self.0
    }
}

impl std::borrow::Borrow<[Letter]> for Word {
    fn borrow(&self) -> &[Letter] {
        &self.0
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Self(v)
    }
}

impl From<&[Letter]> for Word {
    fn from(v: &[Letter]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<T: IntoIterator<Item = Letter>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Word {
    type Item = &'a Letter;
    type IntoIter = std::slice::Iter<'a, Letter>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        assert!(Alphabet::new(["a", "b", "a"]).is_err());
        assert!(Alphabet::new(["a b"]).is_err());
    }

    #[test]
    fn order_is_declaration_order() {
        let a = Alphabet::new(["z", "a", "m"]).unwrap();
        assert_eq!(a.letter("z"), Some(Letter(0)));
        assert_eq!(a.letter("m"), Some(Letter(2)));
        assert_eq!(a.symbol(Letter(1)), "a");
    }

    #[test]
    fn parse_juxtaposed_and_spaced() {
        let a = Alphabet::new(["1", "2", "3"]).unwrap();
        let w = a.parse_word("1213").unwrap();
        assert_eq!(a.render(&w), "1213");
        let b = Alphabet::new(["x1", "x2", "y"]).unwrap();
        let w = b.parse_word("x1 x2 y x1").unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(b.render(&w), "x1 x2 y x1");
        assert!(a.parse_word("124").is_err());
    }

    #[test]
    fn abelianization_is_additive() {
        let u: Word = vec![Letter(0), Letter(1)].into();
        let v: Word = vec![Letter(1), Letter(2), Letter(1)].into();
        let mut uv = u.clone();
        uv.extend_from_slice(&v);
        let (a, b, c) = (u.abelianization(3), v.abelianization(3), uv.abelianization(3));
        for i in 0..3 {
            assert_eq!(c[i], a[i] + b[i]);
        }
    }
}
