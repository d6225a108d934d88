//! Spectral data of incidence matrices: classification, Perron data, exact
//! letter frequencies and the contracting-space apparatus used by the
//! exchange builder.

mod decomposition;
mod projector;

pub use decomposition::{
    eigen_alpha, integer_relation, vw_decompose, build_vn, SpectralProfile, TailBound,
    VwPair, RELATION_COEFF_BOUND,
};
pub use projector::{riesz_projector, InvariantSplit};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{big_mul_vec, IntMatrix};
use crate::poly::{char_poly, determinant, IntPoly};
use crate::substitution::primitivity_exponent;

/// Largest cyclotomic order divided out when testing for roots of unity.
pub const ROOT_OF_UNITY_ORDER: usize = 24;
/// Tolerance for classifying a root as dominant or as strictly inside the disk.
pub const MODULUS_TOL: f64 = 1e-9;
/// Numeric candidate threshold in the subset-product factor search.
pub const FACTOR_CANDIDATE_TOL: f64 = 1e-6;
/// Largest degree for which the subset-product search is run.
pub const MAX_SUBSET_DEGREE: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub primitive: bool,
    pub pisot: bool,
    pub wi_pisot: bool,
    pub irreducible: bool,
    pub unimodular: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixProfile {
    pub matrix: Vec<Vec<i64>>,
    pub char_poly: IntPoly,
    pub char_poly_text: String,
    pub determinant: String,
    /// Roots with multiplicity as `[re, im]`, by decreasing modulus.
    pub eigenvalues: Vec<[f64; 2]>,
    pub flags: Flags,
    pub primitivity_exponent: Option<u32>,
    pub perron_value: Option<f64>,
    pub perron_right: Option<Vec<f64>>,
    pub perron_left: Option<Vec<f64>>,
    /// Orders `n` of the cyclotomic factors `Φₙ` of the characteristic
    /// polynomial, with repetition.
    pub cyclotomic_orders: Vec<usize>,
    pub zero_multiplicity: usize,
    pub notes: Vec<String>,
}

impl MatrixProfile {
    pub fn roots(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    }
}

fn sorted_roots(p: &IntPoly) -> Vec<Complex64> {
    let mut r = p.roots();
    r.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    r
}

/// Exact test for a nontrivial factorization over Z: candidate factors are
/// monic products over subsets of the numeric roots whose coefficients are
/// within tolerance of integers, confirmed by exact division.
pub fn is_irreducible(p: &IntPoly) -> Option<bool> {
    let deg = p.degree();
    if deg == 0 {
        return Some(false);
    }
    if deg == 1 {
        return Some(true);
    }
    let sf = p.squarefree();
    if sf.len() != 1 || sf[0].1 != 1 {
        return Some(false);
    }
    if p.coeffs()[0].is_zero() {
        return Some(false);
    }
    if deg > MAX_SUBSET_DEGREE {
        return None;
    }
    let roots = p.roots();
    let n = roots.len();
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size == 0 || size > deg / 2 {
            continue;
        }
        let mut coeffs = vec![Complex64::one()];
        for (i, r) in roots.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let mut next = vec![Complex64::zero(); coeffs.len() + 1];
                for (k, c) in coeffs.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * r;
                }
                coeffs = next;
            }
        }
        let near = coeffs.iter().all(|c| {
            c.im.abs() < FACTOR_CANDIDATE_TOL && (c.re - c.re.round()).abs() < FACTOR_CANDIDATE_TOL
        });
        if !near {
            continue;
        }
        let cand = IntPoly::new(coeffs.iter().map(|c| BigInt::from(c.re.round() as i64)).collect());
        if p.div_exact(&cand).is_some() {
            return Some(false);
        }
    }
    Some(true)
}

/// Null vector of `A - βI` from the smallest singular value, normalized to
/// sum 1 with positive entries.
fn perron_vector(a: &DMatrix<f64>, beta: f64) -> Option<Vec<f64>> {
    let n = a.nrows();
    let shifted = a - DMatrix::<f64>::identity(n, n) * beta;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let v: Vec<f64> = vt.row(idx).iter().copied().collect();
    let s: f64 = v.iter().sum();
    if s == 0.0 {
        return None;
    }
    Some(v.iter().map(|x| x / s).collect())
}

pub fn classify(m: &IntMatrix) -> MatrixProfile {
    assert!(m.is_square(), "incidence matrices are square");
    let p = char_poly(m);
    let det = determinant(m);
    let roots = sorted_roots(&p);
    let mut notes = Vec::new();
    let (no_x, zero_mult) = p.strip_x();
    let (core, cyclo) = no_x.strip_cyclotomic(ROOT_OF_UNITY_ORDER);
    let prim = primitivity_exponent(m);
    let mut flags = Flags {
        primitive: prim.is_some(),
        unimodular: det.abs().is_one(),
        ..Flags::default()
    };
    if m.rows() == 0 || m.is_nonnegative() && m.to_rows().iter().flatten().all(|&x| x == 0) {
        notes.push("degenerate matrix: zero or empty".into());
        return MatrixProfile {
            matrix: m.to_rows(),
            char_poly_text: p.to_string(),
            char_poly: p,
            determinant: det.to_string(),
            eigenvalues: roots.iter().map(|z| [z.re, z.im]).collect(),
            flags: Flags::default(),
            primitivity_exponent: prim,
            perron_value: None,
            perron_right: None,
            perron_left: None,
            cyclotomic_orders: cyclo,
            zero_multiplicity: zero_mult,
            notes,
        };
    }

    let dominant = roots.first().copied();
    let beta = dominant.filter(|z| z.im == 0.0 && z.re > 1.0 + MODULUS_TOL).map(|z| z.re);
    let unique_dominant = beta.is_some_and(|b| {
        roots.iter().skip(1).all(|z| z.norm() < b - MODULUS_TOL)
    });

    flags.pisot = unique_dominant
        && roots
            .iter()
            .skip(1)
            .all(|z| z.norm() < 1.0 - MODULUS_TOL && z.norm() > MODULUS_TOL);

    match is_irreducible(&p) {
        Some(b) => flags.irreducible = b,
        None => notes.push(format!(
            "irreducibility not screened above degree {MAX_SUBSET_DEGREE}"
        )),
    }

    let core_roots = sorted_roots(&core);
    let core_ok = core.degree() >= 1
        && core_roots[0].im == 0.0
        && core_roots[0].re > 1.0 + MODULUS_TOL
        && core_roots.iter().skip(1).all(|z| z.norm() < 1.0 - MODULUS_TOL)
        && is_irreducible(&core) == Some(true)
        && beta.is_some_and(|b| (b - core_roots[0].re).abs() < 1e-9 * b);
    flags.wi_pisot = core_ok;

    if flags.pisot && !flags.irreducible {
        notes.push("Pisot root pattern with a reducible polynomial".into());
    }
    if flags.pisot && !flags.wi_pisot {
        notes.push("Pisot root pattern without weak irreducibility".into());
    }
    if !unique_dominant {
        notes.push("no unique dominant root greater than one".into());
    }

    let a = m.to_f64();
    let (perron_right, perron_left) = match (beta, flags.primitive) {
        (Some(b), true) => (
            exact_frequencies(m, &roots)
                .map(|f| f.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
                .or_else(|| perron_vector(&a, b)),
            perron_vector(&a.transpose(), b),
        ),
        (Some(b), false) => (perron_vector(&a, b), perron_vector(&a.transpose(), b)),
        _ => (None, None),
    };

    MatrixProfile {
        matrix: m.to_rows(),
        char_poly_text: p.to_string(),
        char_poly: p,
        determinant: det.to_string(),
        eigenvalues: roots.iter().map(|z| [z.re, z.im]).collect(),
        flags,
        primitivity_exponent: prim,
        perron_value: beta,
        perron_right,
        perron_left,
        cyclotomic_orders: cyclo,
        zero_multiplicity: zero_mult,
        notes,
    }
}

/// Number of power-iteration steps giving roughly 60 correct digits.
fn power_steps(roots: &[Complex64]) -> usize {
    let beta = roots.first().map_or(1.0, |z| z.norm());
    let second = roots.get(1).map_or(0.0, |z| z.norm());
    if second <= 0.0 || beta <= 0.0 {
        return 64;
    }
    let q = (second / beta).min(0.999);
    ((70.0 / -q.log10()).ceil() as usize).clamp(32, 4000)
}

/// Letter frequencies as exact rationals `(Mᴺ·1)ₐ / Σ Mᴺ·1`, accurate to
/// about 60 digits for primitive matrices.
pub fn exact_frequencies(m: &IntMatrix, roots: &[Complex64]) -> Option<Vec<BigRational>> {
    primitivity_exponent(m)?;
    let steps = power_steps(roots);
    let a = m.to_bigint_rows();
    let mut v: Vec<BigInt> = vec![BigInt::one(); m.rows()];
    for _ in 0..steps {
        v = big_mul_vec(&a, &v);
    }
    let total: BigInt = v.iter().sum();
    Some(v.into_iter().map(|x| BigRational::new(x, total.clone())).collect())
}

/// Normalized right Perron vector; `Σ f = 1`.
pub fn frequencies(m: &IntMatrix) -> Result<Vec<f64>> {
    if primitivity_exponent(m).is_none() {
        return Err(Error::NotPrimitive);
    }
    let roots = sorted_roots(&char_poly(m));
    let f = exact_frequencies(m, &roots).ok_or(Error::NotPrimitive)?;
    let f: Vec<f64> = f.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let beta = roots[0].re;
    let a = m.to_f64();
    let res = (&a * DVector::from_vec(f.clone())) - DVector::from_vec(f.clone()) * beta;
    if res.amax() > 1e-9 {
        return Err(Error::InvariantViolation(format!(
            "frequency eigen-residual {:.3e}",
            res.amax()
        )));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn tribonacci_is_pisot() {
        let t = presets::load("tribonacci").unwrap();
        let p = classify(t.incidence());
        assert!(p.flags.pisot && p.flags.irreducible && p.flags.unimodular && p.flags.primitive);
        assert!(p.flags.wi_pisot);
        assert!((p.perron_value.unwrap() - 1.839_286_755_214_161).abs() < 1e-12);
        let f = p.perron_right.unwrap();
        let expect = [0.543_689_012_692_076_4, 0.295_597_742_522_084_8, 0.160_713_244_785_838_8];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn thue_morse_is_weakly_irreducible() {
        let t = presets::load("thue-morse").unwrap();
        let p = classify(t.incidence());
        assert!(p.flags.wi_pisot && !p.flags.pisot);
        assert_eq!(p.perron_value, Some(2.0));
        assert_eq!(frequencies(t.incidence()).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn identity_is_not_pisot() {
        let p = classify(&IntMatrix::identity(3));
        assert!(!p.flags.pisot && !p.flags.wi_pisot);
        let z = classify(&IntMatrix::zeros(2, 2));
        assert_eq!(z.flags, Flags::default());
    }

    #[test]
    fn fibonacci_frequencies() {
        let f = presets::load("fibonacci").unwrap();
        let v = frequencies(f.incidence()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((v[0] - 1.0 / phi).abs() < 1e-15);
        assert!((v[1] - 1.0 / (phi * phi)).abs() < 1e-15);
    }

    #[test]
    fn reducible_detected() {
        // (x^2 - x - 1)(x - 3)
        let p = IntPoly::from_i64(&[-1, -1, 1]).mul(&IntPoly::linear(3));
        assert_eq!(is_irreducible(&p), Some(false));
        assert_eq!(is_irreducible(&IntPoly::from_i64(&[-1, -1, -1, 1])), Some(true));
    }
}
