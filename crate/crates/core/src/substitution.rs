//! Substitutions: non-erasing endomorphisms with a seed letter whose iterates
//! converge to a one-sided fixed point.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::matrix::{bool_mul, IntMatrix};
use crate::morphism::Morphism;
use crate::word::{Letter, SharedAlphabet, Word};

/// Default hard cap on materialized fixed-point prefixes.
pub const DEFAULT_PREFIX_CAP: usize = 1 << 24;

/// Prefix length and period bound of the bounded aperiodicity test.
pub const APERIODIC_PREFIX: usize = 1 << 16;
pub const APERIODIC_MAX_PERIOD: usize = 64;

pub struct Substitution {
    morphism: Morphism,
    seed: Letter,
    incidence: IntMatrix,
    cap: usize,
    prefix: Mutex<Arc<Vec<Letter>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aperiodicity {
    /// No period `p <= 64` found on the tested prefix.
    BoundedCheck,
    PossiblyPeriodic { period: usize },
}

impl Aperiodicity {
    pub fn is_aperiodic(self) -> bool {
        matches!(self, Aperiodicity::BoundedCheck)
    }
}

impl fmt::Display for Aperiodicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aperiodicity::BoundedCheck => f.write_str("aperiodic (bounded check)"),
            Aperiodicity::PossiblyPeriodic { period } => {
                write!(f, "possibly periodic (period {period})")
            }
        }
    }
}

impl Substitution {
    pub fn new(morphism: Morphism, seed: Letter) -> Result<Self> {
        if !morphism.is_endomorphism() {
            return Err(Error::InvalidSubstitution("not an endomorphism".into()));
        }
        if !morphism.is_non_erasing() {
            return Err(Error::InvalidSubstitution("some image is empty".into()));
        }
        if !morphism.domain().contains(seed) {
            return Err(Error::InvalidSubstitution("seed outside the alphabet".into()));
        }
        if morphism.image(seed).first() != Some(&seed) {
            return Err(Error::InvalidSubstitution(format!(
                "image of the seed {} does not begin with it",
                morphism.domain().symbol(seed)
            )));
        }
        if let Some(b) = first_bounded_letter(&morphism) {
            return Err(Error::InvalidSubstitution(format!(
                "iterated images of {} have bounded length",
                morphism.domain().symbol(b)
            )));
        }
        let incidence = morphism.incidence();
        let seed_prefix = Arc::new(vec![seed]);
        Ok(Self {
            morphism,
            seed,
            incidence,
            cap: DEFAULT_PREFIX_CAP,
            prefix: Mutex::new(seed_prefix),
        })
    }

    /// Uses the first letter whose image begins with itself as the seed.
    pub fn with_default_seed(morphism: Morphism) -> Result<Self> {
        let seed = morphism
            .domain()
            .letters()
            .find(|&a| morphism.image(a).first() == Some(&a))
            .ok_or_else(|| {
                Error::InvalidSubstitution("no letter whose image begins with itself".into())
            })?;
        Self::new(morphism, seed)
    }

    pub fn with_prefix_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    pub fn prefix_cap(&self) -> usize {
        self.cap
    }

    pub fn morphism(&self) -> &Morphism {
        &self.morphism
    }

    pub fn alphabet(&self) -> &SharedAlphabet {
        self.morphism.domain()
    }

    pub fn size(&self) -> usize {
        self.alphabet().len()
    }

    pub fn seed(&self) -> Letter {
        self.seed
    }

    pub fn image(&self, a: Letter) -> &Word {
        self.morphism.image(a)
    }

    pub fn incidence(&self) -> &IntMatrix {
        &self.incidence
    }

    pub fn apply(&self, w: &[Letter]) -> Result<Word> {
        self.morphism.apply(w)
    }

    /// `σⁿ` with the same seed.
    pub fn power(&self, n: u32) -> Result<Substitution> {
        if n == 0 {
            return Err(Error::Config("power must be positive".into()));
        }
        Ok(Substitution::new(self.morphism.power(n)?, self.seed)?.with_prefix_cap(self.cap))
    }

    /// Shared handle to a fixed-point prefix of length at least `len`.
    pub fn prefix_arc(&self, len: usize) -> Result<Arc<Vec<Letter>>> {
        if len > self.cap {
            return Err(Error::Inconclusive(format!(
                "prefix of length {len} exceeds the cap {}",
                self.cap
            )));
        }
        let mut guard = self.prefix.lock().expect("prefix cache poisoned");
        while guard.len() < len {
            let cur = guard.clone();
            let target = len.max(cur.len() * 2).min(self.cap);
            let mut next = Vec::with_capacity(target);
            for &a in cur.iter() {
                next.extend_from_slice(self.image(a));
                if next.len() >= target {
                    break;
                }
            }
            next.truncate(target);
            debug_assert!(next.len() > cur.len());
            *guard = Arc::new(next);
        }
        Ok(guard.clone())
    }

    /// First `len` letters of the fixed point `σ^∞(a)`.
    pub fn fixed_point_prefix(&self, len: usize) -> Result<Word> {
        Ok(Word::from(&self.prefix_arc(len)?[..len]))
    }

    /// Primitivity with the smallest witness exponent `k <= (d-1)^2 + 1`.
    pub fn primitivity(&self) -> Option<u32> {
        primitivity_exponent(&self.incidence)
    }

    pub fn is_primitive(&self) -> bool {
        self.primitivity().is_some()
    }

    pub fn is_left_proper(&self) -> bool {
        common(self.morphism.images().iter().map(|w| w.first()))
    }

    pub fn is_right_proper(&self) -> bool {
        common(self.morphism.images().iter().map(|w| w.last()))
    }

    pub fn is_proper(&self) -> bool {
        self.is_left_proper() && self.is_right_proper()
    }

    /// Length-`n` factors of the language, obtained by iterating `σᵏ(b)` over
    /// all letters until the set is unchanged for two consecutive `k` once
    /// every image has length at least `n`.
    pub fn language_factors(&self, n: usize) -> Result<BTreeSet<Word>> {
        if n == 0 {
            return Ok(BTreeSet::from([Word::new()]));
        }
        let mut images: Vec<Word> = self.alphabet().letters().map(|a| Word::from(vec![a])).collect();
        let mut prev: Option<BTreeSet<Word>> = None;
        let mut stable = 0;
        loop {
            let mut set = BTreeSet::new();
            for w in &images {
                for f in w.windows(n) {
                    set.insert(Word::from(f));
                }
            }
            let long_enough = images.iter().all(|w| w.len() >= n);
            if long_enough && prev.as_ref() == Some(&set) {
                stable += 1;
                if stable >= 2 {
                    return Ok(set);
                }
            } else {
                stable = 0;
            }
            prev = Some(set);
            if images.iter().map(|w| w.len()).sum::<usize>() > self.cap {
                return Err(Error::Inconclusive("factor set did not stabilize".into()));
            }
            images = images
                .iter()
                .map(|w| self.apply(w))
                .collect::<Result<Vec<_>>>()?;
        }
    }

    /// Bounded test for periodicity of the fixed point: looks for an eventual
    /// period `p <= 64` on the second half of a prefix of length 2^16.
    pub fn aperiodicity(&self) -> Result<Aperiodicity> {
        let len = APERIODIC_PREFIX.min(self.cap);
        let x = self.prefix_arc(len)?;
        let x = &x[..len];
        let start = len / 2;
        for p in 1..=APERIODIC_MAX_PERIOD.min(len / 4) {
            if (start..len - p).all(|i| x[i] == x[i + p]) {
                return Ok(Aperiodicity::PossiblyPeriodic { period: p });
            }
        }
        Ok(Aperiodicity::BoundedCheck)
    }

    /// Rules as `(letter, image)` strings.
    pub fn rules(&self) -> Vec<(String, String)> {
        self.morphism.rules()
    }

    pub fn render(&self, w: &[Letter]) -> String {
        self.alphabet().render(w)
    }
}

impl Clone for Substitution {
    fn clone(&self) -> Self {
        let cached = self.prefix.lock().expect("prefix cache poisoned").clone();
        Self {
            morphism: self.morphism.clone(),
            seed: self.seed,
            incidence: self.incidence.clone(),
            cap: self.cap,
            prefix: Mutex::new(cached),
        }
    }
}

impl PartialEq for Substitution {
    fn eq(&self, other: &Self) -> bool {
        self.morphism == other.morphism && self.seed == other.seed
    }
}

impl Eq for Substitution {}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Substitution")
            .field("rules", &self.rules())
            .field("seed", &self.alphabet().symbol(self.seed))
            .finish()
    }
}

fn common<'a>(mut it: impl Iterator<Item = Option<&'a Letter>>) -> bool {
    let Some(first) = it.next().flatten() else {
        return false;
    };
    it.all(|x| x == Some(first))
}

/// Smallest `k <= (d-1)^2 + 1` with `Mᵏ > 0`, computed on supports.
pub fn primitivity_exponent(m: &IntMatrix) -> Option<u32> {
    if !m.is_square() || m.rows() == 0 {
        return None;
    }
    let d = m.rows();
    let bound = (d - 1) * (d - 1) + 1;
    let s = m.support();
    let mut p = s.clone();
    for k in 1..=bound {
        if p.iter().all(|row| row.iter().all(|&x| x)) {
            return Some(k as u32);
        }
        p = bool_mul(&p, &s);
    }
    None
}

/// A letter `b` has unbounded iterated image length iff some cycle of the
/// letter graph is reachable from `b` and itself reaches a letter whose image
/// has length at least two. Returns the first letter failing this.
fn first_bounded_letter(m: &Morphism) -> Option<Letter> {
    let d = m.domain().len();
    let mut reach = vec![vec![false; d]; d];
    for (i, row) in reach.iter_mut().enumerate() {
        for a in m.image(Letter(i as u32)) {
            row[a.index()] = true;
        }
    }
    for k in 0..d {
        for i in 0..d {
            if reach[i][k] {
                for j in 0..d {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let expanding: Vec<bool> = (0..d).map(|i| m.image(Letter(i as u32)).len() >= 2).collect();
    let pumping: Vec<bool> = (0..d)
        .map(|c| reach[c][c] && (expanding[c] || (0..d).any(|e| reach[c][e] && expanding[e])))
        .collect();
    (0..d)
        .find(|&b| !(pumping[b] || (0..d).any(|c| reach[b][c] && pumping[c])))
        .map(|b| Letter(b as u32))
}
