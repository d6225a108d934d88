//! The map `F` on the orbit of the fixed point and the domain exchange it
//! induces on the level-`n` tower atoms.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::morphism::Morphism;
use crate::spectral::SpectralProfile;
use crate::tower::TowerFrame;
use crate::word::Letter;

/// Default certified truncation error of the series.
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Tolerance for a translation to count as constant on an atom.
pub const DELTA_TOL: f64 = 1e-6;
/// Largest tower level tried when looking for atom-constant translations.
pub const MAX_ATOM_LEVEL: usize = 12;
/// Positions used to pick a candidate level before the full check.
const DETECTION_SAMPLE: usize = 1 << 16;

/// `F(j) = −Σ_{k=1}^{D} ⟨s_k(Sʲy), (Mᵗ)^{k-1} v(i)⟩ᵢ`, where `v(i)` carries the
/// generalized-kernel part of `αᵢH − w(i)` as well. Evaluated through
/// per-level suffix sums of the columns of `(Nᵗ)^{k-1} V + V₀ M^{k-1}`.
#[derive(Debug, Clone)]
pub struct FMap {
    frame: TowerFrame,
    dim: usize,
    depth: usize,
    tail: f64,
    /// Row offset of `(k, b)` in `suffix`, for `k = 1..=depth`.
    start: Vec<usize>,
    suffix: Vec<f64>,
    /// `top[K] = Σ_{k=K+1}^{D}` of the digit above the top level.
    top: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    nt: DMatrix<f64>,
}

impl FMap {
    /// Truncates at `depth`, or at the least depth whose certified tail is
    /// below `epsilon` when `depth` is `None`.
    pub fn new(frame: &TowerFrame, spectral: &SpectralProfile, depth: Option<usize>, epsilon: f64) -> Result<Self> {
        let xi = frame.xi();
        let nb = xi.size();
        let dim = spectral.dim();
        let s_norm = xi.morphism().max_image_len() as f64 * (nb as f64).sqrt();
        let suggested = spectral.tail.depth_for(epsilon, s_norm).max(1);
        let depth = depth.unwrap_or(suggested);
        if depth == 0 {
            return Err(Error::Config("series depth must be positive".into()));
        }
        let tail = spectral.tail.tail(depth, s_norm);
        if tail > epsilon {
            return Err(Error::DepthInsufficient {
                depth,
                tail,
                epsilon,
                suggested,
            });
        }

        let v = spectral.v_matrix();
        let nt = spectral.n_matrix().transpose();
        let mut start = Vec::with_capacity(depth * nb);
        let mut rows = 0;
        for _ in 0..depth {
            for b in xi.alphabet().letters() {
                start.push(rows);
                rows += xi.image(b).len() + 1;
            }
        }
        let mut suffix = vec![0.0; rows * dim];
        let m = frame.mt().transpose().to_f64();
        let mut kern = DMatrix::from_fn(dim, nb, |i, j| spectral.kernel_parts[i][j]);
        let mut stable = v.clone();
        for k in 0..depth {
            let t = &stable + &kern;
            for b in xi.alphabet().letters() {
                let img = xi.image(b);
                let base = start[k * nb + b.index()];
                for i in (0..img.len()).rev() {
                    let c = img[i].index();
                    for r in 0..dim {
                        suffix[(base + i) * dim + r] = suffix[(base + i + 1) * dim + r] + t[(r, c)];
                    }
                }
            }
            stable = &nt * stable;
            // (Mᵗ)ᵐ kills the kernel part exactly; rounding would not.
            kern = if k + 1 >= spectral.power_m as usize {
                DMatrix::zeros(dim, nb)
            } else {
                kern * &m
            };
        }

        let seed = xi.seed();
        let mut top = vec![vec![0.0; dim]; depth + 1];
        for kk in (0..depth).rev() {
            // level k = kk + 1 contributes to top[K] for K < k
            let row = start[kk * nb + seed.index()] + 1;
            for r in 0..dim {
                top[kk][r] = top[kk + 1][r] + suffix[row * dim + r];
            }
        }

        Ok(Self {
            frame: frame.clone(),
            dim,
            depth,
            tail,
            start,
            suffix,
            top,
            alpha: spectral.alpha.clone(),
            nt,
        })
    }

    pub fn frame(&self) -> &TowerFrame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Certified bound on the truncation error of every value.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn nt(&self) -> &DMatrix<f64> {
        &self.nt
    }

    pub fn eval(&self, j: u64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(j, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, j: u64, out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        if j == 0 {
            return Ok(());
        }
        let addr = self.frame.address(j)?;
        let nb = self.frame.xi().size();
        let top = addr.top();
        for k in 1..=top.min(self.depth) {
            let dk = addr.digits[k];
            if dk.offset == 0 {
                continue;
            }
            let first = if addr.digits[k - 1].offset == 0 { dk.child } else { dk.child + 1 };
            let row = self.start[(k - 1) * nb + dk.letter.index()] + first;
            for (o, s) in out.iter_mut().zip(&self.suffix[row * self.dim..(row + 1) * self.dim]) {
                *o -= s;
            }
        }
        if top < self.depth {
            for (o, s) in out.iter_mut().zip(&self.top[top]) {
                *o -= s;
            }
        }
        Ok(())
    }

    /// `F(j)` for `j = 0..count`, flattened.
    pub fn eval_range(&self, count: usize) -> Result<Vec<f64>> {
        let mut coords = vec![0.0; count * self.dim];
        if self.dim == 0 {
            return Ok(coords);
        }
        coords
            .par_chunks_mut(self.dim * 4096)
            .enumerate()
            .try_for_each(|(c, chunk)| {
                for (i, p) in chunk.chunks_mut(self.dim).enumerate() {
                    self.eval_into((c * 4096 + i) as u64, p)?;
                }
                Ok(())
            })?;
        Ok(coords)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Piece {
    pub label: String,
    #[serde(skip)]
    pub letter: Letter,
    pub floor: u128,
    /// Mean of `F(j+1) − F(j)` over the piece.
    pub delta: Vec<f64>,
    /// Largest deviation from `delta` inside the piece.
    pub spread: f64,
    /// `δ − α` rounded to integers.
    pub shift: Vec<i64>,
    pub shift_error: f64,
    pub count: usize,
    pub bbox_min: Vec<f64>,
    pub bbox_max: Vec<f64>,
}

/// Consecutive orbit points `F(0), …, F(count)` labelled by their level-`n`
/// atom `S^{-k} ξ^{n-1}([a])`.
#[derive(Debug, Clone)]
pub struct ExchangeCloud {
    pub level: usize,
    pub depth: usize,
    pub dim: usize,
    pub tail: f64,
    pub alpha: Vec<f64>,
    pub n: Vec<Vec<f64>>,
    /// `count + 1` points, so every sampled position has a successor.
    pub coords: Vec<f64>,
    /// Piece index of each of the first `count` points.
    pub labels: Vec<u32>,
    /// Source letter `φ(y_j)` of each of the first `count` points.
    pub letters: Vec<u32>,
    pub source_size: usize,
    pub pieces: Vec<Piece>,
}

impl ExchangeCloud {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    /// Pieces grouped by equal translation.
    pub fn merged_piece_count(&self) -> usize {
        let mut groups: Vec<&[f64]> = Vec::new();
        for p in &self.pieces {
            if !groups
                .iter()
                .any(|g| g.iter().zip(&p.delta).all(|(a, b)| (a - b).abs() < DELTA_TOL))
            {
                groups.push(&p.delta);
            }
        }
        groups.len()
    }

    pub fn all_pieces_constant(&self) -> bool {
        self.pieces.iter().all(|p| p.spread < DELTA_TOL)
    }
}

fn atom_ids(frame: &TowerFrame, count: usize) -> Result<Vec<(u128, Letter)>> {
    (0..count)
        .into_par_iter()
        .map(|j| {
            let addr = frame.address(j as u64)?;
            Ok((frame.atom_index(frame.atom(&addr)), addr.digits[0].letter))
        })
        .collect()
}

/// Largest deviation of `F(j+1) − F(j)` from the first value seen in the same
/// atom, over `j < count`.
fn atom_spread(ids: &[(u128, Letter)], coords: &[f64], dim: usize) -> f64 {
    let mut first: std::collections::HashMap<u128, usize> = std::collections::HashMap::new();
    let mut worst: f64 = 0.0;
    for (j, &(id, _)) in ids.iter().enumerate() {
        let j0 = *first.entry(id).or_insert(j);
        for r in 0..dim {
            let d = coords[(j + 1) * dim + r] - coords[j * dim + r];
            let d0 = coords[(j0 + 1) * dim + r] - coords[j0 * dim + r];
            worst = worst.max((d - d0).abs());
        }
    }
    worst
}

/// Least level `n <= 12` at which `F(j+1) − F(j)` is constant on every atom
/// over `j < count`.
pub fn detect_level(fmap: &FMap, count: usize) -> Result<usize> {
    let coords = fmap.eval_range(count + 1)?;
    detect_level_from(fmap, &coords, count, 1)
}

fn detect_level_from(fmap: &FMap, coords: &[f64], count: usize, from: usize) -> Result<usize> {
    for n in from..=MAX_ATOM_LEVEL.min(fmap.frame().levels() - 1) {
        let frame = fmap.frame().with_level(n)?;
        let ids = atom_ids(&frame, count)?;
        if atom_spread(&ids, coords, fmap.dim()) < DELTA_TOL {
            return Ok(n);
        }
    }
    Err(Error::LevelTooSmall {
        max_level: MAX_ATOM_LEVEL,
    })
}

/// Cloud at the frame's level; fails with `LevelTooSmall` if a piece has a
/// nonconstant translation.
pub fn build_cloud(fmap: &FMap, level: usize, phi: &Morphism, count: usize) -> Result<ExchangeCloud> {
    let coords = fmap.eval_range(count + 1)?;
    build_from(fmap, level, phi, count, coords)
}

/// Cloud at the least atom-constant level found over the samples.
pub fn build_cloud_auto(fmap: &FMap, phi: &Morphism, count: usize) -> Result<ExchangeCloud> {
    let coords = fmap.eval_range(count + 1)?;
    let sample = count.min(DETECTION_SAMPLE);
    let mut level = detect_level_from(fmap, &coords, sample, 1)?;
    loop {
        match build_from(fmap, level, phi, count, coords.clone()) {
            Err(Error::LevelTooSmall { .. }) if level < MAX_ATOM_LEVEL => {
                level = detect_level_from(fmap, &coords, count, level + 1)?;
            }
            other => return other,
        }
    }
}

fn build_from(fmap: &FMap, level: usize, phi: &Morphism, count: usize, coords: Vec<f64>) -> Result<ExchangeCloud> {
    let frame = fmap.frame().with_level(level)?;
    let dim = fmap.dim();
    let ids = atom_ids(&frame, count)?;
    let b_alpha = frame.xi().alphabet().clone();
    let mut index: BTreeMap<u128, u32> = BTreeMap::new();
    for &(id, _) in &ids {
        let next = index.len() as u32;
        index.entry(id).or_insert(next);
    }
    // Renumber in atom order so labels do not depend on visiting order.
    for (i, v) in index.values_mut().enumerate() {
        *v = i as u32;
    }
    let heights = frame.tower_heights().to_vec();
    let atom_of = |id: u128| -> (Letter, u128) {
        let mut rest = id;
        for (b, &h) in heights.iter().enumerate() {
            if rest < h {
                return (Letter(b as u32), rest);
            }
            rest -= h;
        }
        unreachable!("atom index out of range")
    };

    let mut pieces: Vec<Piece> = index
        .keys()
        .map(|&id| {
            let (letter, floor) = atom_of(id);
            Piece {
                label: format!("{}:{floor}", b_alpha.symbol(letter)),
                letter,
                floor,
                delta: vec![0.0; dim],
                spread: 0.0,
                shift: vec![0; dim],
                shift_error: 0.0,
                count: 0,
                bbox_min: vec![f64::INFINITY; dim],
                bbox_max: vec![f64::NEG_INFINITY; dim],
            }
        })
        .collect();
    let labels: Vec<u32> = ids.iter().map(|(id, _)| index[id]).collect();
    let letters: Vec<u32> = ids.iter().map(|(_, b)| phi.image(*b)[0].0).collect();

    for (j, &l) in labels.iter().enumerate() {
        let p = &mut pieces[l as usize];
        p.count += 1;
        for r in 0..dim {
            let x = coords[j * dim + r];
            p.delta[r] += coords[(j + 1) * dim + r] - x;
            p.bbox_min[r] = p.bbox_min[r].min(x);
            p.bbox_max[r] = p.bbox_max[r].max(x);
        }
    }
    for p in &mut pieces {
        for d in &mut p.delta {
            *d /= p.count as f64;
        }
    }
    for (j, &l) in labels.iter().enumerate() {
        let p = &mut pieces[l as usize];
        for r in 0..dim {
            let d = coords[(j + 1) * dim + r] - coords[j * dim + r];
            p.spread = p.spread.max((d - p.delta[r]).abs());
        }
    }
    let alpha = fmap.alpha().to_vec();
    for p in &mut pieces {
        for r in 0..dim {
            let s = p.delta[r] - alpha[r];
            p.shift[r] = s.round() as i64;
            p.shift_error = p.shift_error.max((s - s.round()).abs());
        }
    }
    if pieces.iter().any(|p| p.spread >= DELTA_TOL) {
        return Err(Error::LevelTooSmall { max_level: level });
    }

    let nt = fmap.nt();
    Ok(ExchangeCloud {
        level,
        depth: fmap.depth(),
        dim,
        tail: fmap.tail(),
        alpha,
        n: (0..dim).map(|i| (0..dim).map(|j| nt[(j, i)]).collect()).collect(),
        coords,
        labels,
        letters,
        source_size: phi.codomain().len(),
        pieces,
    })
}
