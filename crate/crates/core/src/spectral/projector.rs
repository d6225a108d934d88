use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-9;
const CONTOUR_EPS: f64 = 1e-17;
const MAX_NODES: usize = 1 << 14;

/// Spectral projector onto the generalized eigenspaces of `a` whose
/// eigenvalues have modulus below `r`, by the trapezoid rule on the circle
/// `|z| = r`: `P = (1/K) Σ zₖ (zₖ I − A)⁻¹`. `moduli` are the eigenvalue
/// moduli and only set the node count.
pub fn riesz_projector(a: &DMatrix<f64>, moduli: &[f64], r: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if moduli.iter().all(|&m| m >= r) {
        return Ok(DMatrix::zeros(n, n));
    }
    if moduli.iter().all(|&m| m < r) {
        return Ok(DMatrix::identity(n, n));
    }
    let q = moduli
        .iter()
        .map(|&m| if m < r { m / r } else { r / m })
        .fold(0.0f64, f64::max);
    let k = if q <= 0.0 {
        2 * n + 8
    } else {
        ((CONTOUR_EPS.ln() / q.ln()).ceil() as usize).clamp(2 * n + 8, MAX_NODES)
    };
    let ac: DMatrix<Complex<f64>> = a.map(|x| Complex::new(x, 0.0));
    let mut acc = DMatrix::<Complex<f64>>::zeros(n, n);
    for t in 0..k {
        let theta = std::f64::consts::TAU * (t as f64) / (k as f64);
        let z = Complex64::from_polar(r, theta);
        let m = DMatrix::<Complex<f64>>::identity(n, n) * z - &ac;
        let inv = m
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Decomposition("resolvent is singular on the contour".into()))?;
        acc += inv * z;
    }
    Ok(acc.map(|c| c.re / k as f64))
}

/// Projectors for `A = Mᵗ` onto `E⁰` (eigenvalue 0), `Eˢ` (0 < |λ| < 1),
/// `Eᵇ` (|λ| = 1) and `Eᵘ` (|λ| > 1).
#[derive(Debug, Clone)]
pub struct InvariantSplit {
    pub p0: DMatrix<f64>,
    pub ps: DMatrix<f64>,
    pub pb: DMatrix<f64>,
    pub pu: DMatrix<f64>,
    pub dims: SplitDims,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitDims {
    pub zero: usize,
    pub stable: usize,
    pub bounded: usize,
    pub unstable: usize,
}

fn separating_radius(inner: Option<f64>, outer: Option<f64>) -> Option<f64> {
    match (inner, outer) {
        (_, None) => None,
        (None, Some(o)) => Some(o / 2.0),
        (Some(i), Some(o)) if i <= 0.0 => Some(o / 2.0),
        (Some(i), Some(o)) => Some((i * o).sqrt()),
    }
}

impl InvariantSplit {
    /// `roots` are the eigenvalues of `a` with multiplicity; zero roots must
    /// be exactly zero.
    pub fn new(a: &DMatrix<f64>, roots: &[Complex64]) -> Result<Self> {
        let n = a.nrows();
        let moduli: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
        let zero = moduli.iter().filter(|&&m| m == 0.0).count();
        let stable = moduli.iter().filter(|&&m| m > 0.0 && m < 1.0 - UNIT_TOL).count();
        let bounded = moduli.iter().filter(|&&m| (m - 1.0).abs() <= UNIT_TOL).count();
        let unstable = moduli.iter().filter(|&&m| m > 1.0 + UNIT_TOL).count();

        let max_of = |f: &dyn Fn(f64) -> bool| moduli.iter().copied().filter(|&m| f(m)).reduce(f64::max);
        let min_of = |f: &dyn Fn(f64) -> bool| moduli.iter().copied().filter(|&m| f(m)).reduce(f64::min);

        let proj = |r: Option<f64>| -> Result<DMatrix<f64>> {
            match r {
                None => Ok(DMatrix::identity(n, n)),
                Some(r) => riesz_projector(a, &moduli, r),
            }
        };
        // |λ| = 0
        let r0 = separating_radius(Some(0.0), min_of(&|m| m > 0.0));
        let p_zero = if zero == 0 { DMatrix::zeros(n, n) } else { proj(r0)? };
        // |λ| < 1
        let r1 = separating_radius(max_of(&|m| m < 1.0 - UNIT_TOL), min_of(&|m| m >= 1.0 - UNIT_TOL));
        let p_in = if zero + stable == 0 { DMatrix::zeros(n, n) } else { proj(r1)? };
        // |λ| <= 1
        let r2 = separating_radius(max_of(&|m| m <= 1.0 + UNIT_TOL), min_of(&|m| m > 1.0 + UNIT_TOL));
        let p_le = if zero + stable + bounded == 0 { DMatrix::zeros(n, n) } else { proj(r2)? };

        Ok(Self {
            ps: &p_in - &p_zero,
            pb: &p_le - &p_in,
            pu: DMatrix::identity(n, n) - &p_le,
            p0: p_zero,
            dims: SplitDims {
                zero,
                stable,
                bounded,
                unstable,
            },
        })
    }

    /// Orthonormal basis of the range of a projector, as columns.
    pub fn basis(p: &DMatrix<f64>) -> DMatrix<f64> {
        let svd = p.clone().svd(true, false);
        let u = svd.u.expect("requested U");
        let cols: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 1e-8)
            .map(|(i, _)| i)
            .collect();
        DMatrix::from_fn(p.nrows(), cols.len(), |i, j| u[(i, cols[j])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::char_poly;
    use crate::presets;

    #[test]
    fn projectors_are_complementary_and_idempotent() {
        let t = presets::load("tribonacci").unwrap();
        let p = crate::properize(&t).unwrap();
        let m = p.proper_sub.incidence().transpose();
        let a = m.to_f64();
        let roots = char_poly(&m).roots();
        let s = InvariantSplit::new(&a, &roots).unwrap();
        let n = a.nrows();
        let sum = &s.p0 + &s.ps + &s.pb + &s.pu;
        assert!((sum - DMatrix::<f64>::identity(n, n)).amax() < 1e-12);
        assert!((&s.ps * &s.ps - &s.ps).amax() < 1e-10);
        assert!((&s.ps * &a - &a * &s.ps).amax() < 1e-10);
        assert_eq!(s.dims.stable, 2);
        assert_eq!(InvariantSplit::basis(&s.ps).ncols(), 2);
    }
}
