use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use super::{classify, exact_frequencies, InvariantSplit, MatrixProfile, MODULUS_TOL};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::matrix::{big_mul_vec, IntMatrix};
use crate::morphism::Morphism;
use crate::substitution::Substitution;
use crate::word::Letter;

/// Coefficient bound of the integer-relation screen when `d - 1 <= 2`.
pub const RELATION_COEFF_BOUND: i64 = 1000;
/// Largest search size of the screen; the bound shrinks so `(2B+1)^(d-1)`
/// stays below it.
const RELATION_BUDGET: f64 = 1e7;
const RELATION_CANDIDATE_TOL: f64 = 1e-9;
const W_ROUNDING_TOL: f64 = 1e-6;
const DECAY_STEPS: u32 = 20;
const DECAY_RATIO: f64 = 1e-6;
const VN_RESIDUAL_TOL: f64 = 1e-10;
const DET_TOL: f64 = 1e-8;
const MU_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-8;
const TAIL_FIT_STEPS: i32 = 40;
const KERNEL_TOL: f64 = 1e-10;
/// Largest power `m` tried for `(Mᵗ)ᵐ w ∈ ℤ`.
pub const MAX_KERNEL_POWER: u32 = 8;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailBound {
    pub c: f64,
    pub rho: f64,
}

impl TailBound {
    /// Bound on `Σ_{k > depth} ‖(Nᵗ)^{k-1} V s‖` for `‖s‖ <= s_norm`.
    pub fn tail(&self, depth: usize, s_norm: f64) -> f64 {
        self.c * self.rho.powi(depth as i32) / (1.0 - self.rho) * s_norm
    }

    pub fn depth_for(&self, eps: f64, s_norm: f64) -> usize {
        (1..=10_000).find(|&d| self.tail(d, s_norm) < eps).unwrap_or(10_000)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VwPair {
    pub v: Vec<f64>,
    /// Integer part of `w`.
    pub w: Vec<i64>,
    /// Generalized-kernel part of `w`; zero in the common case.
    pub kernel_part: Vec<f64>,
    /// Least `m` with `(Mᵗ)ᵐ w` integral.
    pub power_m: u32,
    pub rounding_error: f64,
    /// `‖(Mᵗ)ⁿ v‖` for `n = 0..=40`, computed exactly from rational `α`.
    pub decay: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralProfile {
    pub source: MatrixProfile,
    pub xi: MatrixProfile,
    pub split_dims: super::projector::SplitDims,
    pub alpha: Vec<f64>,
    #[serde(skip)]
    pub alpha_exact: Vec<BigRational>,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<i64>>,
    /// Generalized-kernel parts of the `w(i)`.
    pub kernel_parts: Vec<Vec<f64>>,
    /// Least `m` with every `(Mᵗ)ᵐ w(i)` integral.
    pub power_m: u32,
    pub n: Vec<Vec<f64>>,
    pub n_eigenvalues: Vec<[f64; 2]>,
    pub tail: TailBound,
    /// Frequencies of the letters of the proper substitution.
    pub mu: Vec<f64>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub ps: DMatrix<f64>,
}

impl SpectralProfile {
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_matrix(&self) -> DMatrix<f64> {
        let d = self.n.len();
        DMatrix::from_fn(d, d, |i, j| self.n[i][j])
    }

    pub fn v_matrix(&self) -> DMatrix<f64> {
        let r = self.v.len();
        let c = self.v.first().map_or(0, Vec::len);
        DMatrix::from_fn(r, c, |i, j| self.v[i][j])
    }

    /// Perron value of the proper substitution.
    pub fn beta(&self) -> f64 {
        self.xi.perron_value.unwrap_or(f64::NAN)
    }

    pub fn all_pass(&self) -> bool {
        crate::check::all_pass(&self.checks)
    }

    /// Runs the full pipeline: classification of both matrices, `α` from the
    /// source, the `v/w` split for the proper substitution, and `V`, `N`.
    pub fn compute(source: &Substitution, xi: &Substitution, phi: Option<&Morphism>) -> Result<Self> {
        let src = classify(source.incidence());
        let xp = classify(xi.incidence());
        let (alpha, alpha_exact) = eigen_alpha(&src, source.incidence(), &xp)?;
        let mt = xi.incidence().transpose();
        let a = mt.to_f64();
        let roots = xp.roots();
        let split = InvariantSplit::new(&a, &roots)?;
        let nb = xi.size();
        let mut checks = Vec::new();

        let mut pairs = Vec::with_capacity(alpha.len());
        for (i, (&al, ex)) in alpha.iter().zip(&alpha_exact).enumerate() {
            let indicator: Option<Vec<i64>> = phi.map(|phi| {
                (0..nb)
                    .map(|b| i64::from(phi.image(Letter(b as u32))[0] == Letter(i as u32)))
                    .collect()
            });
            let pair = vw_decompose(al, ex, &mt, &split, indicator.as_deref())?;
            pairs.push(pair);
        }

        let v_rows: Vec<Vec<f64>> = pairs.iter().map(|p| p.v.clone()).collect();
        let w_rows: Vec<Vec<i64>> = pairs.iter().map(|p| p.w.clone()).collect();
        let (vmat, nmat, resid) = build_vn(&v_rows, &mt)?;

        // Exactness of αH = v + w as stored.
        let split_err = pairs
            .iter()
            .zip(&alpha)
            .flat_map(|(p, &al)| {
                p.v.iter()
                    .zip(&p.w)
                    .zip(&p.kernel_part)
                    .map(move |((v, &w), k)| (al - v - w as f64 - k).abs())
            })
            .fold(0.0, f64::max);
        checks.push(Check::new("alpha_h_is_v_plus_w", split_err <= 1e-12, format!("max {split_err:.3e}")));
        let power_m = pairs.iter().map(|p| p.power_m).max().unwrap_or(0);
        checks.push(Check::new(
            "w_power_integral",
            power_m <= MAX_KERNEL_POWER,
            format!("(Mᵗ)^{power_m} w ∈ ℤ^B"),
        ));
        let round = pairs.iter().map(|p| p.rounding_error).fold(0.0, f64::max);
        checks.push(Check::new("w_integer_rounding", round < W_ROUNDING_TOL, format!("max {round:.3e} < {W_ROUNDING_TOL:e}")));
        let decay = pairs
            .iter()
            .map(|p| p.decay[DECAY_STEPS as usize] / p.decay[0].max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        checks.push(Check::new(
            "v_decays",
            decay < DECAY_RATIO,
            format!("max ‖(Mᵗ)^{DECAY_STEPS} v‖/‖v‖ = {decay:.3e}"),
        ));

        let mu = xp
            .perron_right
            .clone()
            .ok_or_else(|| Error::Hypothesis {
                item: "i",
                detail: "proper substitution has no Perron vector".into(),
            })?;
        let v_mu = pairs
            .iter()
            .map(|p| p.v.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max);
        checks.push(Check::new("v_orthogonal_to_mu", v_mu < MU_TOL, format!("max |⟨v, μ⟩| = {v_mu:.3e}")));
        let a_mu = pairs
            .iter()
            .zip(&alpha)
            .map(|(p, al)| (al - p.w.iter().zip(&mu).map(|(&a, b)| a as f64 * b).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new("alpha_is_w_dot_mu", a_mu < MU_TOL, format!("max |α − ⟨w, μ⟩| = {a_mu:.3e}")));

        let e0 = pairs
            .iter()
            .map(|p| (&split.p0 * DVector::from_vec(p.v.clone())).amax())
            .fold(0.0, f64::max);
        checks.push(Check::new("v_has_no_kernel_part", e0 < 1e-9, format!("max ‖P₀ v‖ = {e0:.3e}")));

        let idem = (&split.ps * &split.ps - &split.ps).amax();
        checks.push(Check::new("projector_idempotent", idem < 1e-10, format!("{idem:.3e}")));
        let comm = (&split.ps * &a - &a * &split.ps).amax();
        checks.push(Check::new("projector_commutes", comm < 1e-10 * a.amax().max(1.0), format!("{comm:.3e}")));

        checks.push(Check::new("vn_residual", resid < VN_RESIDUAL_TOL, format!("‖MᵗVᵗ − VᵗN‖ = {resid:.3e}")));

        let n_eigs: Vec<Complex64> = nmat.complex_eigenvalues().iter().copied().collect();
        let rho = n_eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        checks.push(Check::new("n_contracting", rho < 1.0, format!("ρ(N) = {rho:.6}")));
        let beta = xp.perron_value.unwrap_or(f64::NAN);
        let det = nmat.determinant().abs();
        let det_err = (det * beta - 1.0).abs();
        checks.push(Check::new(
            "det_n_times_beta",
            det_err < DET_TOL,
            format!("|det N|·β − 1 = {det_err:.3e}"),
        ));

        let stable: Vec<Complex64> = roots
            .iter()
            .copied()
            .filter(|z| z.norm() > 0.0 && z.norm() < 1.0 - MODULUS_TOL)
            .collect();
        let spec_err = match_spectra(&n_eigs, &stable);
        checks.push(Check::new(
            "n_spectrum_matches_stable_space",
            spec_err < 1e-8,
            format!("max matched distance {spec_err:.3e}"),
        ));

        let d1 = alpha.len();
        checks.push(Check::new(
            "stable_dimension",
            split.dims.stable == d1 && rank(&vmat) == d1,
            format!("dim Eˢ = {}, rank V = {}, d − 1 = {d1}", split.dims.stable, rank(&vmat)),
        ));
        let mtv = &a * vmat.transpose();
        let fam1 = min_normalized_singular(&mtv);
        let mut fam2 = DMatrix::<f64>::zeros(nb, d1 + 1);
        let ones = &a * DVector::<f64>::from_element(nb, 1.0);
        fam2.set_column(0, &ones);
        for (i, w) in w_rows.iter().enumerate() {
            let wv = DVector::from_iterator(nb, w.iter().map(|&x| x as f64));
            fam2.set_column(i + 1, &(&a * wv));
        }
        let fam2s = min_normalized_singular(&fam2);
        checks.push(Check::new(
            "independent_families",
            fam1 > RANK_TOL && fam2s > RANK_TOL,
            format!("σ_min {{Mᵗv}} = {fam1:.3e}, {{MᵗH, Mᵗw}} = {fam2s:.3e}"),
        ));

        let tail = fit_tail(&vmat, &nmat)?;
        Ok(Self {
            source: src,
            xi: xp,
            split_dims: split.dims,
            alpha,
            alpha_exact,
            v: v_rows,
            w: w_rows,
            kernel_parts: pairs.iter().map(|p| p.kernel_part.clone()).collect(),
            power_m,
            n: (0..d1).map(|i| nmat.row(i).iter().copied().collect()).collect(),
            n_eigenvalues: n_eigs.iter().map(|z| [z.re, z.im]).collect(),
            tail,
            mu,
            checks,
            ps: split.ps,
        })
    }
}

fn rank(m: &DMatrix<f64>) -> usize {
    let s = m.clone().svd(false, false).singular_values;
    let top = s.iter().copied().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > RANK_TOL * top.max(1.0)).count()
}

fn min_normalized_singular(m: &DMatrix<f64>) -> f64 {
    let mut m = m.clone();
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    m.svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

fn match_spectra(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pool = b.to_vec();
    let mut worst: f64 = 0.0;
    for z in a {
        let (i, d) = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        worst = worst.max(d);
        pool.swap_remove(i);
    }
    worst
}

/// `α` is the vector of the first `d − 1` letter frequencies of the source,
/// after checking that the proper substitution has a unique eigenvalue of
/// modulus greater than one, that its contracting dimension is `d − 1`, and
/// that `1, α₁, …, α_{d−1}` pass the integer-relation screen.
pub fn eigen_alpha(
    source: &MatrixProfile,
    source_m: &IntMatrix,
    xi: &MatrixProfile,
) -> Result<(Vec<f64>, Vec<BigRational>)> {
    let roots = xi.roots();
    let big = roots.iter().filter(|z| z.norm() > 1.0 + MODULUS_TOL).count();
    if big != 1 {
        return Err(Error::Hypothesis {
            item: "i",
            detail: format!("{big} eigenvalues of modulus greater than one"),
        });
    }
    let d = source_m.rows();
    let stable = roots
        .iter()
        .filter(|z| z.norm() > 0.0 && z.norm() < 1.0 - MODULUS_TOL)
        .count();
    if stable != d - 1 || d < 2 {
        return Err(Error::Hypothesis {
            item: "ii",
            detail: format!("contracting dimension {stable} differs from d − 1 = {}", d.saturating_sub(1)),
        });
    }
    let src_roots = source.roots();
    let exact = exact_frequencies(source_m, &src_roots).ok_or(Error::NotPrimitive)?;
    let exact: Vec<BigRational> = exact[..d - 1].to_vec();
    let alpha: Vec<f64> = exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    if let Some(rel) = integer_relation(&alpha, &exact) {
        return Err(Error::Hypothesis {
            item: "ii",
            detail: format!("integer relation {rel:?} among (1, α)"),
        });
    }
    Ok((alpha, exact))
}

/// Searches integers `c₀, c₁, …` (not all zero, `|cᵢ| <= B`) with
/// `c₀ + Σ cᵢ αᵢ = 0`. Candidates from the float screen are confirmed on the
/// rational approximations.
pub fn integer_relation(alpha: &[f64], exact: &[BigRational]) -> Option<Vec<i64>> {
    let m = alpha.len();
    if m == 0 {
        return None;
    }
    let bound = if m <= 2 {
        RELATION_COEFF_BOUND
    } else {
        let b = ((RELATION_BUDGET.powf(1.0 / m as f64) - 1.0) / 2.0).floor() as i64;
        b.clamp(1, RELATION_COEFF_BOUND)
    };
    let mut c = vec![-bound; m];
    let threshold = BigRational::new(BigInt::from(1), BigInt::from(10).pow(40));
    loop {
        if c.iter().any(|&x| x != 0) {
            let s: f64 = c.iter().zip(alpha).map(|(&ci, a)| ci as f64 * a).sum();
            let c0 = -s.round();
            if (s + c0).abs() < RELATION_CANDIDATE_TOL {
                let mut exact_sum = BigRational::from_integer(BigInt::from(c0 as i64));
                for (&ci, a) in c.iter().zip(exact) {
                    exact_sum += BigRational::from_integer(BigInt::from(ci)) * a;
                }
                if exact_sum.abs() < threshold {
                    let mut rel = vec![c0 as i64];
                    rel.extend_from_slice(&c);
                    return Some(rel);
                }
            }
        }
        let mut i = 0;
        loop {
            if i == m {
                return None;
            }
            c[i] += 1;
            if c[i] <= bound {
                break;
            }
            c[i] = -bound;
            i += 1;
        }
    }
}

/// Splits `α·H = v + w` with `v ∈ Eˢ` and `(Mᵗ)ᵐ w` an integer vector.
///
/// `w` is an integer vector `w₀` plus the component of `αH − w₀` in the
/// generalized kernel, which `(Mᵗ)ᵐ` annihilates. A supplied integer
/// candidate `w₀` is accepted when `αH − w₀` has no component on eigenvalues
/// of modulus at least one; otherwise `w₀` rounds that component of `αH`.
/// `rounding_error` is the sup-norm of what is left there.
pub fn vw_decompose(
    alpha: f64,
    alpha_exact: &BigRational,
    mt: &IntMatrix,
    split: &InvariantSplit,
    candidate: Option<&[i64]>,
) -> Result<VwPair> {
    let nb = mt.rows();
    let h = DVector::<f64>::from_element(nb, alpha);
    let growing = &split.pu + &split.pb;
    let off_stable = |w: &[i64]| -> f64 {
        let v = DVector::from_iterator(nb, w.iter().map(|&x| alpha - x as f64));
        (&growing * &v).amax()
    };
    let rounded: Vec<i64> = (&growing * &h).iter().map(|x| x.round() as i64).collect();
    let (w, rounding_error) = match candidate {
        Some(c) if off_stable(c) < W_ROUNDING_TOL => (c.to_vec(), off_stable(c)),
        _ => {
            let e = off_stable(&rounded);
            (rounded, e)
        }
    };
    if rounding_error >= W_ROUNDING_TOL {
        return Err(Error::Decomposition(format!(
            "αH − w leaves the contracting space by {rounding_error:.3e}"
        )));
    }
    let full = DVector::from_iterator(nb, w.iter().map(|&x| alpha - x as f64));
    let mut kernel_part: Vec<f64> = (&split.p0 * &full).iter().copied().collect();
    let v: Vec<f64> = if kernel_part.iter().all(|x| x.abs() < KERNEL_TOL) {
        kernel_part.iter_mut().for_each(|x| *x = 0.0);
        full.iter().copied().collect()
    } else {
        (&split.ps * &full).iter().copied().collect()
    };
    let a = mt.to_f64();
    let mut power_m = None;
    let mut k = DVector::from_vec(kernel_part.clone());
    for m in 0..=MAX_KERNEL_POWER {
        if k.amax() < KERNEL_TOL {
            power_m = Some(m);
            break;
        }
        k = &a * k;
    }
    let power_m = power_m.ok_or_else(|| {
        Error::Decomposition(format!("kernel part survives {MAX_KERNEL_POWER} powers of Mᵗ"))
    })?;

    // Exact route: (Mᵗ)ⁿ v = α (Mᵗ)ⁿ H − (Mᵗ)ⁿ w.
    let a = mt.to_bigint_rows();
    let mut hn: Vec<BigInt> = vec![BigInt::from(1); nb];
    let mut wn: Vec<BigInt> = w.iter().map(|&x| BigInt::from(x)).collect();
    let mut decay = Vec::with_capacity(TAIL_FIT_STEPS as usize + 1);
    for step in 0..=TAIL_FIT_STEPS {
        if step > 0 {
            hn = big_mul_vec(&a, &hn);
            wn = big_mul_vec(&a, &wn);
        }
        let norm2: f64 = hn
            .iter()
            .zip(&wn)
            .map(|(hi, wi)| {
                let val = alpha_exact * BigRational::from_integer(hi.clone())
                    - BigRational::from_integer(wi.clone());
                let f = val.to_f64().unwrap_or(f64::INFINITY);
                f * f
            })
            .sum();
        decay.push(norm2.sqrt());
    }
    Ok(VwPair {
        v,
        w,
        kernel_part,
        power_m,
        rounding_error,
        decay,
    })
}

/// `V` has rows `v(i)`; `N = (V Vᵗ)⁻¹ V Mᵗ Vᵗ` so that `Mᵗ Vᵗ = Vᵗ N`.
/// Returns `(V, N, ‖MᵗVᵗ − VᵗN‖_max)`.
pub fn build_vn(v_rows: &[Vec<f64>], mt: &IntMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let r = v_rows.len();
    let c = mt.rows();
    if r == 0 {
        return Err(Error::RankDeficient("no rows".into()));
    }
    let v = DMatrix::from_fn(r, c, |i, j| v_rows[i][j]);
    let a = mt.to_f64();
    let gram = &v * v.transpose();
    let inv = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("rows of V are linearly dependent".into()))?;
    if rank(&v) < r {
        return Err(Error::RankDeficient("rows of V are linearly dependent".into()));
    }
    let avt = &a * v.transpose();
    let n = inv * &v * &avt;
    let resid = (&avt - v.transpose() * &n).amax();
    Ok((v, n, resid))
}

/// Fits `‖Vᵗ Nᵏ‖ <= C ρᵏ` for `k <= 40`, with `ρ` slightly above the
/// spectral radius of `N`.
fn fit_tail(v: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<TailBound> {
    let rho_n = n
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if rho_n >= 1.0 {
        return Err(Error::Hypothesis {
            item: "iii",
            detail: format!("N is not contracting (ρ = {rho_n})"),
        });
    }
    let rho = (rho_n * 1.01).max(1e-3).min(0.5 * (1.0 + rho_n));
    let vt = v.transpose();
    let mut p = DMatrix::<f64>::identity(n.nrows(), n.ncols());
    let mut c: f64 = 0.0;
    for k in 0..=TAIL_FIT_STEPS {
        let norm = (&vt * &p).norm();
        c = c.max(norm / rho.powi(k));
        p = &p * n;
    }
    Ok(TailBound { c, rho })
}
