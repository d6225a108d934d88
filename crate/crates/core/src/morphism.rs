//! Monoid morphisms between free monoids over finite alphabets.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::word::{Alphabet, Letter, SharedAlphabet, Word};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    domain: SharedAlphabet,
    codomain: SharedAlphabet,
    images: Vec<Word>,
}

impl Morphism {
    pub fn new(domain: SharedAlphabet, codomain: SharedAlphabet, images: Vec<Word>) -> Result<Self> {
        if images.len() != domain.len() {
            return Err(Error::InvalidSubstitution(format!(
                "{} images for an alphabet of {} letters",
                images.len(),
                domain.len()
            )));
        }
        for w in &images {
            if let Some(a) = w.iter().find(|a| !codomain.contains(**a)) {
                return Err(Error::DomainMismatch {
                    letter: a.to_string(),
                });
            }
        }
        Ok(Self {
            domain,
            codomain,
            images,
        })
    }

    pub fn identity(alphabet: SharedAlphabet) -> Self {
        let images = alphabet.letters().map(|a| Word::from(vec![a])).collect();
        Self {
            domain: alphabet.clone(),
            codomain: alphabet,
            images,
        }
    }

    pub fn domain(&self) -> &SharedAlphabet {
        &self.domain
    }

    pub fn codomain(&self) -> &SharedAlphabet {
        &self.codomain
    }

    pub fn image(&self, a: Letter) -> &Word {
        &self.images[a.index()]
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn is_endomorphism(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn is_non_erasing(&self) -> bool {
        self.images.iter().all(|w| !w.is_empty())
    }

    /// Letter-to-letter morphism.
    pub fn is_coding(&self) -> bool {
        self.images.iter().all(|w| w.len() == 1)
    }

    pub fn max_image_len(&self) -> usize {
        self.images.iter().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn apply(&self, w: &[Letter]) -> Result<Word> {
        let mut len = 0usize;
        for &a in w {
            if !self.domain.contains(a) {
                return Err(Error::DomainMismatch {
                    letter: a.to_string(),
                });
            }
            len += self.images[a.index()].len();
        }
        let mut out = Word::with_capacity(len);
        for &a in w {
            out.extend_from_slice(&self.images[a.index()]);
        }
        Ok(out)
    }

    /// `self ∘ inner`: first apply `inner`, then `self`.
    pub fn compose(&self, inner: &Morphism) -> Result<Morphism> {
        if *inner.codomain != *self.domain {
            return Err(Error::AlphabetMismatch(
                "codomain of the inner morphism differs from the outer domain".into(),
            ));
        }
        let images = inner
            .images
            .iter()
            .map(|w| self.apply(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Morphism {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            images,
        })
    }

    pub fn power(&self, n: u32) -> Result<Morphism> {
        if !self.is_endomorphism() {
            return Err(Error::AlphabetMismatch("power of a non-endomorphism".into()));
        }
        let mut acc = Morphism::identity(self.domain.clone());
        for _ in 0..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Entry `(i, j)` counts letter `i` in the image of `j`.
    pub fn incidence(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.codomain.len(), self.domain.len());
        for (j, w) in self.images.iter().enumerate() {
            for a in w {
                m[(a.index(), j)] += 1;
            }
        }
        m
    }

    /// Rules rendered as `(letter, image)` symbol strings.
    pub fn rules(&self) -> Vec<(String, String)> {
        self.domain
            .letters()
            .map(|a| {
                (
                    self.domain.symbol(a).to_owned(),
                    self.codomain.render(self.image(a)),
                )
            })
            .collect()
    }

    pub fn with_alphabets(domain: Alphabet, codomain: Alphabet, images: Vec<Word>) -> Result<Self> {
        Self::new(Arc::new(domain), Arc::new(codomain), images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tribonacci() -> Morphism {
        let a = Arc::new(Alphabet::new(["1", "2", "3"]).unwrap());
        let images = ["12", "13", "1"]
            .iter()
            .map(|s| a.parse_word(s).unwrap())
            .collect();
        Morphism::new(a.clone(), a, images).unwrap()
    }

    #[test]
    fn apply_concatenates() {
        let t = tribonacci();
        let a = t.domain().clone();
        let w = a.parse_word("1213").unwrap();
        assert_eq!(a.render(&t.apply(&w).unwrap()), "1213121");
        assert!(t.apply(&[]).unwrap().is_empty());
        assert!(t.apply(&[Letter(7)]).is_err());
    }

    #[test]
    fn compose_and_incidence() {
        let t = tribonacci();
        let t2 = t.compose(&t).unwrap();
        let a = t.domain().clone();
        assert_eq!(a.render(t2.image(Letter(0))), "1213");
        assert_eq!(
            t2.incidence(),
            t.incidence().checked_mul(&t.incidence()).unwrap()
        );
        let id = Morphism::identity(a);
        assert_eq!(id.compose(&t).unwrap(), t);
        assert_eq!(t.power(2).unwrap(), t2);
    }
}
