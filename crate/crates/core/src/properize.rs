//! Rewriting a primitive substitution as a conjugate proper one through its
//! return substitution.
//!
//! Pipeline, for `u` a prefix of the fixed point `x`:
//! 1. return words `Θ(1), ..., Θ(k)` to `u` and the return substitution `σ_u`;
//! 2. the smallest power `l` such that `Θ(1)·u` is a prefix of `σˡ(u)`, each
//!    `σ_uˡ(j)` holds at least `nⱼ = |Θ(j)|` occurrences of the letter `1`, and
//!    every root-of-unity eigenvalue of `σ_u` has order dividing `l`;
//! 3. the alphabet `B = {(j, p) : 1 <= p <= nⱼ}`, `ψ(j) = (j,1)…(j,nⱼ)`,
//!    `φ(j, p) = Θ(j)ₚ`, and the left-proper `ξ′` obtained by cutting
//!    `σ_uˡ(j)` before its first `nⱼ` occurrences of `1`, so that
//!    `ξ′ ∘ ψ = ψ ∘ σ_uˡ`;
//! 4. with `ξ′(b) = a·w(b)`, `ξ″(b) = w(b)·a` and `ξ = ξ′ ∘ ξ″`, which is proper.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::check::{all_pass, Check};
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::morphism::Morphism;
use crate::poly::{char_poly, IntPoly};
use crate::returns::ReturnSystem;
use crate::substitution::Substitution;
use crate::word::{abelianization, Alphabet, Letter, Word};

pub const MAX_POWER: u32 = 32;
pub const CONJUGACY_PREFIX: usize = 100_000;
/// Largest order of a root of unity looked for in characteristic polynomials.
pub const MAX_ROOT_OF_UNITY_ORDER: usize = 24;
pub const EIGEN_MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Properization {
    pub source: Substitution,
    pub returns: ReturnSystem,
    pub sigma_u: Substitution,
    pub power_l: u32,
    pub sigma_u_l: Substitution,
    pub psi: Morphism,
    pub phi: Morphism,
    pub left_proper_sub: Substitution,
    pub rotated: Morphism,
    pub proper_sub: Substitution,
    pub checks: Vec<Check>,
}

/// Smallest `l` satisfying the three conditions of the pipeline.
fn choose_power(
    s: &Substitution,
    rs: &ReturnSystem,
    su: &Substitution,
) -> Result<u32> {
    let target = rs.return_words()[0].len() + rs.prefix_u().len();
    let ab_u: Vec<u128> = abelianization(rs.prefix_u(), s.size())
        .into_iter()
        .map(|c| c as u128)
        .collect();
    let ms = s.incidence();
    let msu = su.incidence();
    let need: Vec<u128> = rs.return_words().iter().map(|w| w.len() as u128).collect();
    let (_, orders) = char_poly(msu).strip_cyclotomic(MAX_ROOT_OF_UNITY_ORDER);
    let orders: Vec<usize> = orders.into_iter().filter(|&n| n > 1).collect();

    let mut len_vec = ab_u;
    // Row of letter 1 in the powers of M_{σ_u}: occurrences of 1 in σ_uˡ(j).
    let k = su.size();
    let mut ones: Vec<u128> = vec![0; k];
    let mut pow_row: Vec<u128> = (0..k).map(|j| u128::from(j == 0)).collect();
    for l in 1..=MAX_POWER {
        len_vec = saturating_mul_vec(ms, &len_vec);
        pow_row = saturating_row_mul(&pow_row, msu);
        ones.copy_from_slice(&pow_row);
        let cond_prefix = len_vec.iter().fold(0u128, |a, b| a.saturating_add(*b)) >= target as u128;
        let cond_count = ones.iter().zip(&need).all(|(o, n)| o >= n);
        let cond_roots = orders.iter().all(|&n| (l as usize).is_multiple_of(n));
        if cond_prefix && cond_count && cond_roots {
            return Ok(l);
        }
    }
    Err(Error::Inconclusive(format!(
        "no power l <= {MAX_POWER} meets the properization conditions"
    )))
}

fn saturating_mul_vec(m: &IntMatrix, v: &[u128]) -> Vec<u128> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .zip(v)
                .fold(0u128, |acc, (&a, &b)| acc.saturating_add((a as u128).saturating_mul(b)))
        })
        .collect()
}

fn saturating_row_mul(row: &[u128], m: &IntMatrix) -> Vec<u128> {
    (0..m.cols())
        .map(|j| {
            row.iter()
                .enumerate()
                .fold(0u128, |acc, (i, &r)| acc.saturating_add(r.saturating_mul(m[(i, j)] as u128)))
        })
        .collect()
}

pub fn properize(s: &Substitution) -> Result<Properization> {
    let u = Word::from(vec![s.seed()]);
    properize_with(s, &u)
}

pub fn properize_with(s: &Substitution, u: &[Letter]) -> Result<Properization> {
    if !s.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let rs = ReturnSystem::new(s, u)?;
    let su = rs.return_substitution()?;
    let l = choose_power(s, &rs, &su)?;
    let sul = su.power(l)?;

    let k = rs.len();
    let n: Vec<usize> = rs.return_words().iter().map(|w| w.len()).collect();
    let offsets: Vec<usize> = n
        .iter()
        .scan(0, |acc, &nj| {
            let o = *acc;
            *acc += nj;
            Some(o)
        })
        .collect();
    let b_symbols: Vec<String> = (0..k)
        .flat_map(|j| (0..n[j]).map(move |p| format!("({},{})", j + 1, p + 1)))
        .collect();
    let b_alpha = Arc::new(Alphabet::new(b_symbols)?);
    let r_alpha = rs.theta().domain().clone();
    let letter_b = |j: usize, p: usize| Letter((offsets[j] + p) as u32);

    let psi_images = (0..k)
        .map(|j| (0..n[j]).map(|p| letter_b(j, p)).collect())
        .collect();
    let psi = Morphism::new(r_alpha.clone(), b_alpha.clone(), psi_images)?;

    let phi_images = (0..k)
        .flat_map(|j| rs.return_words()[j].iter().map(|&a| Word::from(vec![a])))
        .collect();
    let phi = Morphism::new(b_alpha.clone(), s.alphabet().clone(), phi_images)?;

    let one = Letter(0);
    let mut xi1_images = Vec::with_capacity(b_alpha.len());
    for j in 0..k {
        let img = sul.image(Letter(j as u32));
        let cuts: Vec<usize> = img
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == one)
            .map(|(i, _)| i)
            .take(n[j])
            .collect();
        if cuts.len() < n[j] || cuts[0] != 0 {
            return Err(Error::InvariantViolation(format!(
                "image of return letter {} cannot be cut into {} blocks",
                j + 1,
                n[j]
            )));
        }
        for p in 0..n[j] {
            let end = if p + 1 < n[j] { cuts[p + 1] } else { img.len() };
            xi1_images.push(psi.apply(&img[cuts[p]..end])?);
        }
    }
    let xi1_m = Morphism::new(b_alpha.clone(), b_alpha.clone(), xi1_images)?;
    let xi1 = Substitution::new(xi1_m, Letter(0))?.with_prefix_cap(s.prefix_cap());

    let a = Letter(0);
    let rotated_images = xi1
        .morphism()
        .images()
        .iter()
        .map(|w| {
            let mut r = Word::from(&w[1..]);
            r.push(a);
            r
        })
        .collect();
    let rotated = Morphism::new(b_alpha.clone(), b_alpha.clone(), rotated_images)?;
    let xi_m = xi1.morphism().compose(&rotated)?;
    let xi = Substitution::new(xi_m, a)?.with_prefix_cap(s.prefix_cap());

    let mut p = Properization {
        source: s.clone(),
        returns: rs,
        sigma_u: su,
        power_l: l,
        sigma_u_l: sul,
        psi,
        phi,
        left_proper_sub: xi1,
        rotated,
        proper_sub: xi,
        checks: Vec::new(),
    };
    p.checks = p.conjugacy_checks()?;
    Ok(p)
}

impl Properization {
    pub fn b_alphabet(&self) -> &Arc<Alphabet> {
        self.proper_sub.alphabet()
    }

    pub fn is_certified(&self) -> bool {
        all_pass(&self.checks)
    }

    fn conjugacy_checks(&self) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        let xi1 = &self.left_proper_sub;
        let xi = &self.proper_sub;
        let k = self.returns.len();

        let mut bad = None;
        for j in 0..k {
            let j = Letter(j as u32);
            let lhs = xi1.apply(self.psi.image(j))?;
            let rhs = self.psi.apply(self.sigma_u_l.image(j))?;
            if lhs != rhs {
                bad = Some(j.0 + 1);
                break;
            }
        }
        out.push(Check::new(
            "xi_prime_intertwines_psi",
            bad.is_none(),
            match bad {
                None => format!("ξ′∘ψ = ψ∘σ_u^{} on all {k} letters", self.power_l),
                Some(j) => format!("mismatch on return letter {j}"),
            },
        ));

        let phipsi = self.phi.compose(&self.psi)?;
        out.push(Check::new(
            "phi_psi_is_theta",
            phipsi.images() == self.returns.theta().images(),
            "φ∘ψ = Θ",
        ));
        out.push(Check::new("phi_is_coding", self.phi.is_coding(), "φ maps letters to letters"));
        out.push(Check::new("xi_prime_left_proper", xi1.is_left_proper(), "all ξ′ images share their first letter"));
        out.push(Check::new("xi_proper", xi.is_proper(), "all ξ images share first and last letters"));
        out.push(Check::new(
            "xi_primitive",
            xi.is_primitive(),
            format!("witness exponent {:?}", xi.primitivity()),
        ));
        let sq = xi1.incidence().checked_mul(xi1.incidence())?;
        out.push(Check::new(
            "incidence_square",
            *xi.incidence() == sq,
            "M_ξ = M_ξ′²",
        ));

        let len = CONJUGACY_PREFIX.min(self.source.prefix_cap());
        let z = xi1.prefix_arc(len)?;
        let x = self.source.prefix_arc(len)?;
        let image = self.phi.apply(&z[..len])?;
        let mismatch = image.iter().zip(&x[..len]).position(|(a, b)| a != b);
        out.push(Check::new(
            "coding_reproduces_fixed_point",
            mismatch.is_none(),
            match mismatch {
                None => format!("φ(z) = x on {len} letters"),
                Some(i) => format!("first difference at position {i}"),
            },
        ));

        let zx = xi.prefix_arc(len)?;
        let window = 8usize;
        let known: std::collections::HashSet<&[Letter]> = z[..len].windows(window).collect();
        let stray = zx[..len].windows(window).position(|w| !known.contains(w));
        out.push(Check::new(
            "xi_language_within_xi_prime",
            stray.is_none(),
            match stray {
                None => format!("length-{window} factors of the ξ fixed point occur in the ξ′ fixed point ({len} letters)"),
                Some(i) => format!("factor at {i} not seen"),
            },
        ));

        let witness = self.return_witness()?;
        out.push(Check::new(
            "return_substitution_witness",
            witness.is_some(),
            match witness {
                Some(lp) => format!("return substitution of ξ′ on ψ(1) equals ((σ_u^l)_1)^{lp}"),
                None => format!("no power <= {MAX_POWER} found"),
            },
        ));

        let eig = eigen_preservation_check(self)?;
        out.push(Check::new(
            "eigenvalues_preserved",
            eig.pass,
            format!(
                "max matched distance {:.3e}; unmatched {:?}",
                eig.max_distance, eig.unmatched
            ),
        ));
        let eig2 = eigen_preservation_xi(self)?;
        out.push(Check::new(
            "eigenvalues_preserved_xi",
            eig2.pass,
            format!(
                "max matched distance {:.3e}; unmatched {:?}",
                eig2.max_distance, eig2.unmatched
            ),
        ));
        Ok(out)
    }

    /// Searches `l' <= 32` with `ξ′_{ψ(1)} = ((σ_uˡ)_1)^{l'}`.
    pub fn return_witness(&self) -> Result<Option<u32>> {
        let psi1 = self.psi.image(Letter(0)).clone();
        let lhs = ReturnSystem::new(&self.left_proper_sub, &psi1)?.return_substitution()?;
        let base = ReturnSystem::new(&self.sigma_u_l, &[Letter(0)])?.return_substitution()?;
        if base.size() != lhs.size() {
            return Ok(None);
        }
        let max_len = lhs.morphism().max_image_len();
        let mut pow = base.morphism().clone();
        for lp in 1..=MAX_POWER {
            if pow.images() == lhs.morphism().images() {
                return Ok(Some(lp));
            }
            if pow.images().iter().all(|w| w.len() > max_len) {
                break;
            }
            pow = base.morphism().compose(&pow)?;
        }
        Ok(None)
    }

    pub fn certificate(&self) -> Certificate {
        let src = &self.source;
        Certificate {
            source: crate::dsl::serialize(src),
            u: src.render(self.returns.prefix_u()),
            l: self.power_l,
            return_words: self.returns.return_words().iter().map(|w| src.render(w)).collect(),
            b: self.b_alphabet().symbols().to_vec(),
            xi_prime_rules: rule_lines(self.left_proper_sub.morphism()),
            xi_rules: rule_lines(self.proper_sub.morphism()),
            phi: rule_lines(&self.phi),
            psi: rule_lines(&self.psi),
            checks: self.checks.clone(),
        }
    }
}

fn rule_lines(m: &Morphism) -> Vec<String> {
    m.rules().into_iter().map(|(a, w)| format!("{a} -> {w}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub source: String,
    pub u: String,
    pub l: u32,
    pub return_words: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<String>,
    pub xi_prime_rules: Vec<String>,
    pub xi_rules: Vec<String>,
    pub phi: Vec<String>,
    pub psi: Vec<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenComparison {
    pub left: Vec<[f64; 2]>,
    pub right: Vec<[f64; 2]>,
    pub max_distance: f64,
    pub unmatched: Vec<[f64; 2]>,
    /// The two characteristic polynomials agree exactly after removing the
    /// factors `x` and `x - 1`.
    pub exact_equal: bool,
    pub pass: bool,
}

/// Removes every factor `x` and `x - 1`.
fn strip_zero_one(p: &IntPoly) -> IntPoly {
    let (mut q, _) = p.strip_x();
    let lin = IntPoly::linear(1);
    while let Some(r) = q.div_exact(&lin) {
        if q.degree() == 0 {
            break;
        }
        q = r;
    }
    q
}

/// Compares eigenvalue multisets of two integer matrices after deleting 0
/// and 1, matching greedily by minimal distance.
pub fn compare_spectra(a: &IntMatrix, b: &IntMatrix, tol: f64) -> EigenComparison {
    let pa = strip_zero_one(&char_poly(a));
    let pb = strip_zero_one(&char_poly(b));
    let ra = pa.roots();
    let rb = pb.roots();
    let mut pool: Vec<Complex64> = rb.clone();
    let mut unmatched = Vec::new();
    let mut max_distance: f64 = 0.0;
    for z in &ra {
        let best = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((i, d)) if d <= tol * z.norm().max(1.0) => {
                max_distance = max_distance.max(d);
                pool.swap_remove(i);
            }
            _ => unmatched.push([z.re, z.im]),
        }
    }
    unmatched.extend(pool.iter().map(|z| [z.re, z.im]));
    let pair = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
    EigenComparison {
        left: pair(&ra),
        right: pair(&rb),
        max_distance,
        pass: unmatched.is_empty(),
        unmatched,
        exact_equal: pa == pb,
    }
}

/// `M_σˡ` against `M_ξ′`.
pub fn eigen_preservation_check(p: &Properization) -> Result<EigenComparison> {
    let msl = p.source.incidence().checked_pow(p.power_l)?;
    Ok(compare_spectra(&msl, p.left_proper_sub.incidence(), EIGEN_MATCH_TOL))
}

/// `M_σ^{2l}` against `M_ξ`.
pub fn eigen_preservation_xi(p: &Properization) -> Result<EigenComparison> {
    let msl = p.source.incidence().checked_pow(2 * p.power_l)?;
    Ok(compare_spectra(&msl, p.proper_sub.incidence(), EIGEN_MATCH_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn tribonacci_properizes_on_five_letters() {
        let t = presets::load("tribonacci").unwrap();
        let p = properize(&t).unwrap();
        assert_eq!(p.b_alphabet().len(), 5);
        assert_eq!(p.power_l, 2);
        let rules = rule_lines(p.left_proper_sub.morphism());
        assert_eq!(
            rules,
            [
                "(1,1) -> (1,1) (1,2) (2,1) (2,2)",
                "(1,2) -> (1,1) (1,2) (3,1)",
                "(2,1) -> (1,1) (1,2) (2,1) (2,2)",
                "(2,2) -> (1,1) (1,2)",
                "(3,1) -> (1,1) (1,2) (2,1) (2,2)",
            ]
        );
        for c in &p.checks {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn every_preset_is_certified() {
        for name in presets::names() {
            let s = presets::load(name).unwrap();
            let p = properize(&s).unwrap();
            for c in &p.checks {
                assert!(c.pass, "{name}: {c:?}");
            }
        }
    }

    #[test]
    fn non_proper_binary_needs_three_letters() {
        let s = presets::load("paper-001").unwrap();
        let p = properize(&s).unwrap();
        assert!(p.b_alphabet().len() >= 3);
    }

    #[test]
    fn identical_spectra_match() {
        let m = presets::load("tribonacci").unwrap().incidence().clone();
        let c = compare_spectra(&m, &m, 1e-12);
        assert!(c.pass && c.exact_equal);
    }
}
