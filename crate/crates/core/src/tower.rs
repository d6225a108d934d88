//! Kakutani-Rohlin towers of a proper substitution, read off its fixed point.
//!
//! Position `j` of the fixed point `y = ξ^∞(a)` stands for the point `Sʲy`.
//! The level-`k` cuts are the positions `|ξᵏ(y₀…y_{m-1})|`; the block starting
//! at such a cut is `ξᵏ(y_m)`. Every position has a unique address: the block
//! letter `L_k`, the offset `off_k` inside the level-`k` block, and the index of
//! the level-`(k-1)` child block that contains it.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::substitution::Substitution;
use crate::word::Letter;

/// Highest level for which heights are tabulated (if they fit in `u128`).
pub const MAX_LEVEL: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Digit {
    pub letter: Letter,
    pub offset: u128,
    /// Index inside `ξ(L_k)` of the child block holding the position; 0 at
    /// level 0.
    pub child: usize,
}

/// Digits of a position from level 0 up to its top level `K`, the least level
/// with `j < |ξᴷ(a)|`. Above `K` the digit is `(a, j, 0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Address {
    pub position: u64,
    pub seed: Letter,
    pub digits: Vec<Digit>,
}

impl Address {
    pub fn top(&self) -> usize {
        self.digits.len() - 1
    }

    pub fn digit(&self, k: usize) -> Digit {
        self.digits.get(k).copied().unwrap_or(Digit {
            letter: self.seed,
            offset: u128::from(self.position),
            child: 0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TowerFrame {
    xi: Substitution,
    level: usize,
    /// `heights[k][b] = |ξᵏ(b)|`.
    heights: Vec<Vec<u128>>,
    mt: IntMatrix,
}

impl TowerFrame {
    /// Frame of the proper substitution `xi` at level `n >= 1`.
    pub fn new(xi: &Substitution, level: usize) -> Result<Self> {
        if !xi.is_proper() {
            return Err(Error::InvalidSubstitution("tower frames need a proper substitution".into()));
        }
        if level == 0 {
            return Err(Error::Config("tower level must be positive".into()));
        }
        let mt = xi.incidence().transpose();
        let mut heights = vec![vec![1u128; xi.size()]];
        while heights.len() <= MAX_LEVEL {
            match mt.mul_vec_u128(heights.last().expect("non-empty")) {
                Ok(h) => heights.push(h),
                Err(_) => break,
            }
        }
        if level >= heights.len() {
            return Err(Error::Overflow("tabulating tower heights"));
        }
        Ok(Self {
            xi: xi.clone(),
            level,
            heights,
            mt,
        })
    }

    pub fn xi(&self) -> &Substitution {
        &self.xi
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn with_level(&self, level: usize) -> Result<Self> {
        if level == 0 || level >= self.heights.len() {
            return Err(Error::Config(format!("tower level {level} out of range")));
        }
        Ok(Self {
            level,
            ..self.clone()
        })
    }

    /// Number of tabulated levels.
    pub fn levels(&self) -> usize {
        self.heights.len()
    }

    pub fn height(&self, k: usize, b: Letter) -> u128 {
        self.heights[k][b.index()]
    }

    pub fn heights(&self, k: usize) -> &[u128] {
        &self.heights[k]
    }

    /// Floor counts `|ξ^{n-1}(b)|` of the level-`n` towers.
    pub fn tower_heights(&self) -> &[u128] {
        &self.heights[self.level - 1]
    }

    /// `Mᵗ` of the proper substitution.
    pub fn mt(&self) -> &IntMatrix {
        &self.mt
    }

    pub fn address(&self, j: u64) -> Result<Address> {
        let seed = self.xi.seed();
        let pos = u128::from(j);
        let top = (0..self.heights.len())
            .find(|&k| self.heights[k][seed.index()] > pos)
            .ok_or(Error::Overflow("locating a position in the towers"))?;
        let mut digits = vec![
            Digit {
                letter: seed,
                offset: 0,
                child: 0
            };
            top + 1
        ];
        digits[top] = Digit {
            letter: seed,
            offset: pos,
            child: 0,
        };
        for k in (1..=top).rev() {
            let Digit { letter, mut offset, .. } = digits[k];
            let img = self.xi.image(letter);
            let mut child = 0;
            loop {
                let h = self.heights[k - 1][img[child].index()];
                if offset < h {
                    break;
                }
                offset -= h;
                child += 1;
            }
            digits[k].child = child;
            digits[k - 1] = Digit {
                letter: img[child],
                offset,
                child: 0,
            };
        }
        Ok(Address {
            position: j,
            seed,
            digits,
        })
    }

    pub fn letter_at(&self, j: u64) -> Result<Letter> {
        Ok(self.address(j)?.digits[0].letter)
    }

    /// `r_k(Sʲy)`: distance from `j` to the first level-`(k-1)` cut at or after it.
    pub fn entrance_time(&self, addr: &Address, k: usize) -> u128 {
        assert!(k >= 1, "entrance times start at level 1");
        let d = addr.digit(k - 1);
        if d.offset == 0 {
            0
        } else {
            self.heights[k - 1][d.letter.index()] - d.offset
        }
    }

    /// Range of child indices of the level-`k` block whose level-`(k-1)` blocks
    /// lie in `[j + r_k, j + r_{k+1})`, or `None` when the window is empty.
    fn window(&self, addr: &Address, k: usize) -> Option<(Letter, usize)> {
        let dk = addr.digit(k);
        if dk.offset == 0 {
            return None;
        }
        let first = if addr.digit(k - 1).offset == 0 { dk.child } else { dk.child + 1 };
        (first < self.xi.image(dk.letter).len()).then_some((dk.letter, first))
    }

    /// `s_k(Sʲy)`: letter counts of the level-`(k-1)` blocks crossed between the
    /// level-`(k-1)` entrance and the level-`k` entrance. Each cut in
    /// `(j + r_k, j + r_{k+1}]` is counted with the letter of the block ending
    /// there.
    pub fn s_vector(&self, addr: &Address, k: usize) -> Vec<i64> {
        assert!(k >= 1);
        let mut s = vec![0i64; self.xi.size()];
        if let Some((letter, first)) = self.window(addr, k) {
            for b in &self.xi.image(letter)[first..] {
                s[b.index()] += 1;
            }
        }
        s
    }

    /// `s_k` with each cut of `(j + r_k, j + r_{k+1}]` counted with the letter of
    /// the block starting there.
    pub fn s_vector_start_tagged(&self, addr: &Address, k: usize) -> Vec<i64> {
        assert!(k >= 1);
        let mut s = vec![0i64; self.xi.size()];
        if let Some((letter, first)) = self.window(addr, k) {
            for b in &self.xi.image(letter)[first + 1..] {
                s[b.index()] += 1;
            }
            // The block after a level-k cut starts every image of ξ.
            s[self.xi.image(letter)[0].index()] += 1;
        }
        s
    }

    /// `Σ_{k=1}^{n-1} ⟨s_k, (Mᵗ)^{k-1} H⟩` with `H = (1, …, 1)`; equals `r_n`.
    pub fn entrance_series(&self, addr: &Address, n: usize) -> i128 {
        (1..n).map(|k| dot(&self.s_vector(addr, k), &self.heights[k - 1])).sum()
    }

    /// `Σ_{k=1}^{n-1} ⟨s_k, (Mᵗ)ᵏ H⟩` with start-tagged `s_k`.
    pub fn entrance_series_literal(&self, addr: &Address, n: usize) -> i128 {
        (1..n)
            .map(|k| dot(&self.s_vector_start_tagged(addr, k), &self.heights[k]))
            .sum()
    }

    /// Level-`(n-1)` tower floor of a position: `(L_{n-1}, off_{n-1})`.
    pub fn atom(&self, addr: &Address) -> (Letter, u128) {
        let d = addr.digit(self.level - 1);
        (d.letter, d.offset)
    }

    /// Dense index of an atom in `0..atom_count()`, floors of each tower
    /// consecutive.
    pub fn atom_index(&self, atom: (Letter, u128)) -> u128 {
        let h = self.tower_heights();
        h[..atom.0.index()].iter().sum::<u128>() + atom.1
    }

    pub fn atom_count(&self) -> u128 {
        self.tower_heights().iter().sum()
    }

    /// `|ξ(y₀…y_{j-1})|`, the position of `ξ(Sʲy)`.
    pub fn xi_image_position(&self, addr: &Address) -> Result<u64> {
        let mut pos = 0u128;
        for k in 1..=addr.top() {
            let d = addr.digits[k];
            let img = self.xi.image(d.letter);
            for b in &img[..d.child] {
                pos = self
                    .heights
                    .get(k)
                    .map(|h| h[b.index()])
                    .and_then(|h| pos.checked_add(h))
                    .ok_or(Error::Overflow("mapping a position through ξ"))?;
            }
        }
        u64::try_from(pos).map_err(|_| Error::Overflow("mapping a position through ξ"))
    }
}

fn dot(s: &[i64], h: &[u128]) -> i128 {
    s.iter().zip(h).map(|(&a, &b)| i128::from(a) * b as i128).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cut {
    pub position: u128,
    pub letter: Letter,
}

/// Level-`k` cuts enumerated directly from a fixed-point prefix by cumulative
/// sums, for `k = 0..levels`, each up to its own bound.
#[derive(Debug, Clone)]
pub struct CutStream {
    cuts: Vec<Vec<Cut>>,
    prefix: Arc<Vec<Letter>>,
}

impl CutStream {
    /// Cuts of levels `0..levels` enough to answer every query at positions
    /// up to `upto`.
    pub fn new(frame: &TowerFrame, levels: usize, upto: u128) -> Result<Self> {
        if levels > frame.levels() {
            return Err(Error::Overflow("tabulating tower heights"));
        }
        let xi = frame.xi();
        // Windows at the top level reach one top-level block past `upto`.
        let bound = upto + frame.heights(levels - 1).iter().max().expect("non-empty alphabet");
        let mut need = 0usize;
        for k in 0..levels {
            let hmin = *frame.heights(k).iter().min().expect("non-empty alphabet");
            let m = usize::try_from(bound / hmin + 2).map_err(|_| Error::Overflow("sizing a cut stream"))?;
            need = need.max(m);
        }
        let prefix = xi.prefix_arc(need)?;
        let cuts = (0..levels)
            .map(|k| {
                let h = frame.heights(k);
                let mut out = Vec::new();
                let mut pos = 0u128;
                for &b in prefix.iter() {
                    out.push(Cut { position: pos, letter: b });
                    if pos > bound {
                        break;
                    }
                    pos += h[b.index()];
                }
                out
            })
            .collect();
        Ok(Self { cuts, prefix })
    }

    pub fn prefix(&self) -> &[Letter] {
        &self.prefix
    }

    pub fn levels(&self) -> usize {
        self.cuts.len()
    }

    pub fn cuts(&self, k: usize) -> &[Cut] {
        &self.cuts[k]
    }

    fn next_cut(&self, k: usize, j: u128) -> Result<usize> {
        let cuts = &self.cuts[k];
        let i = cuts.partition_point(|c| c.position < j);
        if i == cuts.len() {
            return Err(Error::Inconclusive(format!("no level-{k} cut scanned at or after {j}")));
        }
        Ok(i)
    }

    pub fn entrance_time(&self, j: u64, k: usize) -> Result<u128> {
        let j = u128::from(j);
        Ok(self.cuts[k - 1][self.next_cut(k - 1, j)?].position - j)
    }

    /// Level-`(k-1)` cuts in `(j + r_k, j + r_{k+1}]`, with the letters of the
    /// blocks before and after each cut.
    fn window(&self, j: u64, k: usize) -> Result<Vec<(Letter, Letter)>> {
        let lo = u128::from(j) + self.entrance_time(j, k)?;
        let hi = u128::from(j) + self.entrance_time(j, k + 1)?;
        let cuts = &self.cuts[k - 1];
        let mut i = self.next_cut(k - 1, lo)?;
        let mut out = Vec::new();
        while i + 1 < cuts.len() && cuts[i + 1].position <= hi {
            out.push((cuts[i].letter, cuts[i + 1].letter));
            i += 1;
        }
        if hi > lo && cuts[i].position != hi {
            return Err(Error::Inconclusive("cut stream too short for the window".into()));
        }
        Ok(out)
    }

    pub fn s_vector(&self, j: u64, k: usize, size: usize) -> Result<Vec<i64>> {
        let mut s = vec![0i64; size];
        for (ending, _) in self.window(j, k)? {
            s[ending.index()] += 1;
        }
        Ok(s)
    }

    pub fn s_vector_start_tagged(&self, j: u64, k: usize, size: usize) -> Result<Vec<i64>> {
        let mut s = vec![0i64; size];
        for (_, starting) in self.window(j, k)? {
            s[starting.index()] += 1;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn frame(name: &str) -> TowerFrame {
        let p = crate::properize(&presets::load(name).unwrap()).unwrap();
        TowerFrame::new(&p.proper_sub, 3).unwrap()
    }

    #[test]
    fn address_letter_matches_prefix() {
        let f = frame("tribonacci");
        let y = f.xi().prefix_arc(5000).unwrap();
        for j in 0..5000u64 {
            assert_eq!(f.letter_at(j).unwrap(), y[j as usize]);
        }
    }

    #[test]
    fn address_agrees_with_cut_stream() {
        for name in ["fibonacci", "tribonacci"] {
            let f = frame(name);
            let cs = CutStream::new(&f, 6, 20_000).unwrap();
            for j in 0..20_000u64 {
                let a = f.address(j).unwrap();
                for k in 1..5 {
                    assert_eq!(f.entrance_time(&a, k), cs.entrance_time(j, k).unwrap(), "{name} j={j} k={k}");
                    let sz = f.xi().size();
                    assert_eq!(f.s_vector(&a, k), cs.s_vector(j, k, sz).unwrap());
                    assert_eq!(f.s_vector_start_tagged(&a, k), cs.s_vector_start_tagged(j, k, sz).unwrap());
                }
            }
        }
    }

    #[test]
    fn cuts_are_nested() {
        let f = frame("tribonacci");
        let cs = CutStream::new(&f, 5, 100_000).unwrap();
        for k in 1..5 {
            let lower: std::collections::HashSet<u128> = cs.cuts(k - 1).iter().map(|c| c.position).collect();
            let last = cs.cuts(k - 1).last().unwrap().position;
            assert!(cs.cuts(k).iter().filter(|c| c.position <= last).all(|c| lower.contains(&c.position)));
            assert_eq!(cs.cuts(k)[0].position, 0);
        }
    }

    #[test]
    fn entrance_series_is_exact() {
        let f = frame("tribonacci");
        for j in 0..3000u64 {
            let a = f.address(j).unwrap();
            for n in 2..=6 {
                assert_eq!(f.entrance_series(&a, n), f.entrance_time(&a, n) as i128);
            }
        }
    }

    #[test]
    fn entrance_time_steps() {
        let f = frame("fibonacci");
        for n in 2..=5 {
            let allowed: Vec<i128> = f.heights(n - 1).iter().map(|&h| h as i128 - 1).collect();
            let mut prev = f.entrance_time(&f.address(0).unwrap(), n) as i128;
            for j in 1..4000u64 {
                let r = f.entrance_time(&f.address(j).unwrap(), n) as i128;
                let step = r - prev;
                assert!(step == -1 || allowed.contains(&step));
                prev = r;
            }
        }
    }

    #[test]
    fn s_vector_shifts_under_xi() {
        let f = frame("tribonacci");
        let max_img = f.xi().morphism().max_image_len() as i64;
        for j in 0..2000u64 {
            let a = f.address(j).unwrap();
            let img = f.address(f.xi_image_position(&a).unwrap()).unwrap();
            assert_eq!(f.s_vector(&img, 1), vec![0; f.xi().size()]);
            for k in 2..6 {
                assert_eq!(f.s_vector(&img, k), f.s_vector(&a, k - 1));
                assert!(f.s_vector(&a, k).iter().all(|&c| c <= max_img));
            }
        }
    }

    #[test]
    fn xi_image_position_matches_prefix_lengths() {
        let f = frame("fibonacci");
        let y = f.xi().prefix_arc(3000).unwrap();
        let mut pos = 0u64;
        for j in 0..3000u64 {
            assert_eq!(f.xi_image_position(&f.address(j).unwrap()).unwrap(), pos);
            pos += f.xi().image(y[j as usize]).len() as u64;
        }
    }

    #[test]
    fn atoms_enumerate_floors() {
        let f = frame("tribonacci");
        let mut seen = std::collections::HashSet::new();
        for j in 0..50_000u64 {
            let atom = f.atom(&f.address(j).unwrap());
            assert!(atom.1 < f.height(f.level() - 1, atom.0));
            seen.insert(f.atom_index(atom));
        }
        assert_eq!(seen.len() as u128, f.atom_count());
    }
}
