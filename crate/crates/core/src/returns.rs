//! Return words to a prefix of the fixed point, derived sequences and return
//! substitutions.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::morphism::Morphism;
use crate::substitution::Substitution;
use crate::word::{Alphabet, Letter, Word};

const INITIAL_SCAN: usize = 1 << 12;

#[derive(Debug, Clone)]
pub struct ReturnSystem {
    base: Substitution,
    u: Word,
    words: Vec<Word>,
    index: HashMap<Word, Letter>,
    theta: Morphism,
    max_gap: usize,
    scanned: usize,
}

/// Start positions of `pat` in `text`.
pub fn occurrences(text: &[Letter], pat: &[Letter]) -> Vec<usize> {
    if pat.is_empty() || pat.len() > text.len() {
        return Vec::new();
    }
    let first = pat[0];
    (0..=text.len() - pat.len())
        .filter(|&i| text[i] == first && text[i..i + pat.len()] == *pat)
        .collect()
}

struct Scan {
    words: Vec<Word>,
    max_gap: usize,
    /// Position after which no new return word appeared.
    last_new_end: usize,
    scanned: usize,
}

fn scan(x: &[Letter], u: &[Letter]) -> Scan {
    let occ = occurrences(x, u);
    let mut words: Vec<Word> = Vec::new();
    let mut seen: HashMap<&[Letter], ()> = HashMap::new();
    let mut max_gap = 0;
    let mut last_new_end = 0;
    for pair in occ.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        max_gap = max_gap.max(j - i);
        let w = &x[i..j];
        if seen.insert(w, ()).is_none() {
            words.push(Word::from(w));
            last_new_end = j + u.len();
        }
    }
    let scanned = occ.last().copied().unwrap_or(0);
    Scan {
        words,
        max_gap,
        last_new_end,
        scanned,
    }
}

impl ReturnSystem {
    /// Return words to `u`, ordered by first appearance in the fixed point.
    ///
    /// Completeness is certified twice: a window of `(max gap)·(|R| + 1)`
    /// letters without a new word, and closure of the set under `σ` (every
    /// `σ(Θ(i))` factors over the known words). A word that breaks closure
    /// triggers a longer scan.
    pub fn new(s: &Substitution, u: &[Letter]) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::NotPrefix {
                word: String::new(),
            });
        }
        let x = s.prefix_arc(u.len())?;
        if x[..u.len()] != *u {
            return Err(Error::NotPrefix {
                word: s.render(u),
            });
        }
        if let crate::Aperiodicity::PossiblyPeriodic { period } = s.aperiodicity()? {
            return Err(Error::InvalidSubstitution(format!(
                "fixed point looks periodic with period {period}; return words are not defined"
            )));
        }
        let mut len = INITIAL_SCAN.max(4 * u.len()).min(s.prefix_cap());
        loop {
            let x = s.prefix_arc(len)?;
            let sc = scan(&x[..len], u);
            let window = sc.max_gap.saturating_mul(sc.words.len() + 1);
            let settled = !sc.words.is_empty() && sc.scanned >= sc.last_new_end + window;
            if settled {
                let sys = Self::assemble(s, u, sc)?;
                match sys.closure_defect() {
                    None => return Ok(sys),
                    Some(_) if len >= s.prefix_cap() => {}
                    Some(_) => {
                        len = (len * 2).min(s.prefix_cap());
                        continue;
                    }
                }
            }
            if len >= s.prefix_cap() {
                return Err(Error::Inconclusive(format!(
                    "return words to {} did not stabilize within {} letters",
                    s.render(u),
                    s.prefix_cap()
                )));
            }
            len = (len * 2).min(s.prefix_cap());
        }
    }

    fn assemble(s: &Substitution, u: &[Letter], sc: Scan) -> Result<Self> {
        let k = sc.words.len();
        let numbered = Arc::new(Alphabet::numbered(k));
        let theta = Morphism::new(numbered, s.alphabet().clone(), sc.words.clone())?;
        let index = sc
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), Letter(i as u32)))
            .collect();
        Ok(Self {
            base: s.clone(),
            u: Word::from(u),
            words: sc.words,
            index,
            theta,
            max_gap: sc.max_gap,
            scanned: sc.scanned,
        })
    }

    /// First letter `i` for which `σ(Θ(i))` does not factor over the known words.
    fn closure_defect(&self) -> Option<Letter> {
        self.words.iter().enumerate().find_map(|(i, w)| {
            let img = self.base.apply(w).ok()?;
            self.decode(&img).err().map(|_| Letter(i as u32))
        })
    }

    pub fn base(&self) -> &Substitution {
        &self.base
    }

    pub fn prefix_u(&self) -> &Word {
        &self.u
    }

    pub fn return_words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// The coding `Θ` from `{1, ..., |R|}` onto the return words.
    pub fn theta(&self) -> &Morphism {
        &self.theta
    }

    pub fn max_gap(&self) -> usize {
        self.max_gap
    }

    pub fn scanned(&self) -> usize {
        self.scanned
    }

    pub fn letter_of(&self, w: &[Letter]) -> Option<Letter> {
        self.index.get(w).copied()
    }

    /// Decodes a word `W` such that `W·u` is in the language and starts with
    /// `u`, cutting `W` at the occurrences of `u` in `W·u`.
    pub fn decode(&self, w: &[Letter]) -> Result<Word> {
        let mut wu = Vec::with_capacity(w.len() + self.u.len());
        wu.extend_from_slice(w);
        wu.extend_from_slice(&self.u);
        let cuts: Vec<usize> = occurrences(&wu, &self.u)
            .into_iter()
            .filter(|&p| p <= w.len())
            .collect();
        if cuts.first() != Some(&0) || cuts.last() != Some(&w.len()) {
            return Err(Error::InvariantViolation(format!(
                "{} does not start with {}",
                self.base.render(w),
                self.base.render(&self.u)
            )));
        }
        let mut out = Word::with_capacity(cuts.len());
        for pair in cuts.windows(2) {
            let piece = &w[pair[0]..pair[1]];
            match self.letter_of(piece) {
                Some(a) => out.push(a),
                None => {
                    return Err(Error::InvariantViolation(format!(
                        "{} is not a return word",
                        self.base.render(piece)
                    )))
                }
            }
        }
        Ok(out)
    }

    /// First `len` letters of the derived sequence `D_u(x)`.
    pub fn derived_prefix(&self, len: usize) -> Result<Word> {
        if len == 0 {
            return Ok(Word::new());
        }
        let mut need = (len + 1).saturating_mul(self.max_gap.max(1)) + self.u.len();
        loop {
            let need_capped = need.min(self.base.prefix_cap());
            let x = self.base.prefix_arc(need_capped)?;
            let x = &x[..need_capped];
            let occ = occurrences(x, &self.u);
            if occ.len() > len {
                let end = occ[len];
                let d = self.decode(&x[..end])?;
                debug_assert_eq!(d.len(), len);
                return Ok(d);
            }
            if need_capped >= self.base.prefix_cap() {
                return Err(Error::Inconclusive("derived prefix exceeds the prefix cap".into()));
            }
            need *= 2;
        }
    }

    /// The return substitution `σ_u`, with `Θ ∘ σ_u = σ ∘ Θ`.
    pub fn return_substitution(&self) -> Result<Substitution> {
        let k = self.words.len();
        let mut images = Vec::with_capacity(k);
        for (i, w) in self.words.iter().enumerate() {
            let img = self.base.apply(w)?;
            let d = self.decode(&img).map_err(|e| Error::DecodeFailure {
                letter: (i + 1).to_string(),
                detail: e.to_string(),
            })?;
            images.push(d);
        }
        let alphabet = self.theta.domain().clone();
        let m = Morphism::new(alphabet.clone(), alphabet, images)?;
        Ok(Substitution::new(m, Letter(0))?.with_prefix_cap(self.base.prefix_cap()))
    }

    /// Number of factorizations over the return words of `x[a..b]`, capped at 2.
    fn factorizations(&self, x: &[Letter]) -> u8 {
        let n = x.len();
        let mut ways = vec![0u8; n + 1];
        ways[0] = 1;
        for i in 0..n {
            if ways[i] == 0 {
                continue;
            }
            for w in &self.words {
                let j = i + w.len();
                if j <= n && x[i..j] == w[..] {
                    ways[j] = (ways[j] + ways[i]).min(2);
                }
            }
        }
        ways[n]
    }

    /// Unique-factorization witness: for `samples` random windows between
    /// return-word boundaries inside a prefix of length `prefix_len`, the
    /// number of factorizations over the return words is exactly one.
    /// Returns the number of windows tested.
    pub fn circular_code_check(&self, samples: usize, prefix_len: usize, seed: u64) -> Result<usize> {
        let len = prefix_len.min(self.base.prefix_cap());
        let x = self.base.prefix_arc(len)?;
        let x = &x[..len];
        let occ = occurrences(x, &self.u);
        if occ.len() < 3 {
            return Err(Error::TooFewSamples("prefix holds fewer than three occurrences".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = 64.min(occ.len() - 1);
        for _ in 0..samples {
            let a = rng.random_range(0..occ.len() - span);
            let b = a + rng.random_range(1..=span);
            let count = self.factorizations(&x[occ[a]..occ[b]]);
            if count != 1 {
                return Err(Error::InvariantViolation(format!(
                    "window [{}, {}) has {} factorizations",
                    occ[a], occ[b], count
                )));
            }
        }
        Ok(samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn render_all(rs: &ReturnSystem) -> Vec<String> {
        rs.return_words().iter().map(|w| rs.base().render(w)).collect()
    }

    #[test]
    fn tribonacci_on_1() {
        let t = presets::load("tribonacci").unwrap();
        let u = t.alphabet().parse_word("1").unwrap();
        let rs = ReturnSystem::new(&t, &u).unwrap();
        assert_eq!(render_all(&rs), ["12", "13", "1"]);
        let d = rs.derived_prefix(7).unwrap();
        assert_eq!(rs.theta().domain().render(&d), "1213121");
        let tu = rs.return_substitution().unwrap();
        assert_eq!(tu.rules(), t.rules());
    }

    #[test]
    fn fibonacci_on_0() {
        let f = presets::load("fibonacci").unwrap();
        let u = f.alphabet().parse_word("0").unwrap();
        let rs = ReturnSystem::new(&f, &u).unwrap();
        assert_eq!(render_all(&rs), ["01", "0"]);
        let d = rs.derived_prefix(5).unwrap();
        assert_eq!(rs.theta().domain().render(&d), "12112");
        let fu = rs.return_substitution().unwrap();
        let rules: Vec<_> = fu.rules();
        assert_eq!(rules, [("1".into(), "12".into()), ("2".into(), "1".into())]);
        assert!(rs.derived_prefix(0).unwrap().is_empty());
    }

    #[test]
    fn rejects_non_prefix() {
        let f = presets::load("fibonacci").unwrap();
        let u = f.alphabet().parse_word("1").unwrap();
        assert!(matches!(ReturnSystem::new(&f, &u), Err(Error::NotPrefix { .. })));
    }

    #[test]
    fn circular_code() {
        let t = presets::load("tribonacci").unwrap();
        let u = t.alphabet().parse_word("12").unwrap();
        let rs = ReturnSystem::new(&t, &u).unwrap();
        assert_eq!(rs.circular_code_check(1000, 100_000, 7).unwrap(), 1000);
    }
}
