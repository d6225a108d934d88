//! Exact univariate polynomials over Z and Q, and numeric roots.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::matrix::{big_mul, IntMatrix};

/// Integer polynomial, coefficients in ascending degree order, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntPoly(Vec<BigInt>);

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn one() -> Self {
        Self(vec![BigInt::one()])
    }

    /// `x - c`.
    pub fn linear(c: i64) -> Self {
        Self::from_i64(&[-c, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial has degree 0 here.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigInt {
        self.0.last().cloned().unwrap_or_default()
    }

    pub fn coeffs_i64(&self) -> Option<Vec<i64>> {
        self.0.iter().map(ToPrimitive::to_i64).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self(Vec::new());
        }
        let mut out = vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Quotient when `divisor` divides `self` exactly over Z.
    pub fn div_exact(&self, divisor: &Self) -> Option<Self> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self(Vec::new()));
        }
        if self.0.len() < divisor.0.len() {
            return None;
        }
        let lead = divisor.leading();
        let mut rem = self.0.clone();
        let dq = self.0.len() - divisor.0.len();
        let mut q = vec![BigInt::zero(); dq + 1];
        for k in (0..=dq).rev() {
            let top = &rem[k + divisor.0.len() - 1];
            if top.is_zero() {
                continue;
            }
            if !(top % &lead).is_zero() {
                return None;
            }
            let c = top / &lead;
            for (i, d) in divisor.0.iter().enumerate() {
                rem[k + i] -= &c * d;
            }
            q[k] = c;
        }
        rem.iter().all(Zero::is_zero).then(|| Self::new(q))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.0
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, c| acc * z + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    /// Evaluates the polynomial at a square matrix exactly.
    pub fn eval_matrix(&self, m: &IntMatrix) -> Vec<Vec<BigInt>> {
        let n = m.rows();
        let a = m.to_bigint_rows();
        let mut acc = vec![vec![BigInt::zero(); n]; n];
        for c in self.0.iter().rev() {
            acc = big_mul(&acc, &a);
            for (i, row) in acc.iter_mut().enumerate() {
                row[i] += c;
            }
        }
        acc
    }

    fn to_rat(&self) -> RatPoly {
        RatPoly::new(self.0.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    /// Squarefree decomposition `f = c · Π fᵢ^i`; returns primitive integer
    /// factors `(fᵢ, i)` with positive leading coefficient, skipping constants.
    pub fn squarefree(&self) -> Vec<(IntPoly, usize)> {
        let f = self.to_rat();
        if f.degree() == 0 {
            return Vec::new();
        }
        let df = f.derivative();
        let a0 = f.gcd(&df);
        let mut b = f.div(&a0);
        let c = df.div(&a0);
        let mut d = c.sub(&b.derivative());
        let mut out = Vec::new();
        let mut i = 1;
        while b.degree() > 0 {
            let a = b.gcd(&d);
            let b_next = b.div(&a);
            let c_next = d.div(&a);
            d = c_next.sub(&b_next.derivative());
            if a.degree() > 0 {
                out.push((a.to_primitive_int(), i));
            }
            b = b_next;
            i += 1;
        }
        out
    }

    /// All complex roots with multiplicity, polished by Newton iteration on
    /// the squarefree parts.
    pub fn roots(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.degree());
        for (factor, mult) in self.squarefree() {
            for r in factor.simple_roots() {
                out.extend(std::iter::repeat_n(r, mult));
            }
        }
        out
    }

    fn simple_roots(&self) -> Vec<Complex64> {
        let deg = self.degree();
        if deg == 0 {
            return Vec::new();
        }
        let lead = self.leading().to_f64().unwrap_or(f64::NAN);
        let c: Vec<f64> = self.0.iter().map(|x| x.to_f64().unwrap_or(f64::NAN) / lead).collect();
        let roots: Vec<Complex64> = if deg == 1 {
            vec![Complex64::new(-c[0], 0.0)]
        } else {
            let mut comp = DMatrix::<f64>::zeros(deg, deg);
            for i in 1..deg {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..deg {
                comp[(i, deg - 1)] = -c[i];
            }
            balance(&mut comp);
            comp.complex_eigenvalues().iter().copied().collect()
        };
        let d = self.derivative();
        roots
            .into_iter()
            .map(|mut z| {
                for _ in 0..50 {
                    let fz = self.eval_complex(z);
                    let dz = d.eval_complex(z);
                    if dz.norm() == 0.0 {
                        break;
                    }
                    let step = fz / dz;
                    z -= step;
                    if step.norm() <= 1e-17 * z.norm().max(1.0) {
                        break;
                    }
                }
                if z.im.abs() < 1e-14 * z.norm().max(1.0) {
                    z.im = 0.0;
                }
                z
            })
            .collect()
    }

    /// Divides out all factors `x`, and returns their multiplicity.
    pub fn strip_x(&self) -> (IntPoly, usize) {
        let k = self.0.iter().take_while(|c| c.is_zero()).count();
        (Self::new(self.0[k..].to_vec()), k)
    }

    /// Divides out every cyclotomic factor `Φₙ` with `n <= max_order`,
    /// returning the remainder and the orders removed (with repetition).
    pub fn strip_cyclotomic(&self, max_order: usize) -> (IntPoly, Vec<usize>) {
        let mut p = self.clone();
        let mut orders = Vec::new();
        for n in 1..=max_order {
            let phi = cyclotomic(n);
            while p.degree() >= phi.degree() {
                match p.div_exact(&phi) {
                    Some(q) => {
                        p = q;
                        orders.push(n);
                    }
                    None => break,
                }
            }
        }
        (p, orders)
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let show_coeff = !abs.is_one() || i == 0;
            if show_coeff {
                write!(f, "{abs}")?;
            }
            match i {
                0 => {}
                1 => f.write_str("x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for IntPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.coeffs_i64() {
            Some(v) => v.serialize(s),
            None => self.0.iter().map(|c| c.to_string()).collect::<Vec<_>>().serialize(s),
        }
    }
}

/// Characteristic polynomial `det(xI - M)` by Faddeev–LeVerrier in exact
/// integer arithmetic.
pub fn char_poly(m: &IntMatrix) -> IntPoly {
    assert!(m.is_square());
    let n = m.rows();
    let a = m.to_bigint_rows();
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    let mut mk = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        let mut next = big_mul(&a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &c[n - k + 1];
        }
        mk = next;
        let amk = big_mul(&a, &mk);
        let tr: BigInt = (0..n).map(|i| amk[i][i].clone()).sum();
        c[n - k] = -(tr / BigInt::from(k));
    }
    IntPoly::new(c)
}

/// Exact determinant read off the characteristic polynomial.
pub fn determinant(m: &IntMatrix) -> BigInt {
    let p = char_poly(m);
    let c0 = p.coeffs().first().cloned().unwrap_or_default();
    if m.rows().is_multiple_of(2) {
        c0
    } else {
        -c0
    }
}

/// The `n`-th cyclotomic polynomial.
pub fn cyclotomic(n: usize) -> IntPoly {
    assert!(n >= 1);
    let mut xn = vec![BigInt::zero(); n + 1];
    xn[0] = -BigInt::one();
    xn[n] = BigInt::one();
    let mut p = IntPoly::new(xn);
    for d in (1..n).filter(|d| n.is_multiple_of(*d)) {
        p = p.div_exact(&cyclotomic(d)).expect("cyclotomic divisor");
    }
    p
}

/// Parlett–Reinsch balancing, applied before the eigensolve.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct RatPoly(Vec<BigRational>);

impl RatPoly {
    fn new(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        Self(c)
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    fn sub(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        Self::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) - o.0.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero());
        if self.0.len() < d.0.len() {
            return (Self(Vec::new()), self.clone());
        }
        let mut rem = self.0.clone();
        let lead = d.0.last().unwrap().clone();
        let dq = self.0.len() - d.0.len();
        let mut q = vec![BigRational::zero(); dq + 1];
        for k in (0..=dq).rev() {
            let c = &rem[k + d.0.len() - 1] / &lead;
            if c.is_zero() {
                continue;
            }
            for (i, di) in d.0.iter().enumerate() {
                rem[k + i] -= &c * di;
            }
            q[k] = c;
        }
        (Self::new(q), Self::new(rem))
    }

    fn div(&self, d: &Self) -> Self {
        self.divrem(d).0
    }

    fn monic(&self) -> Self {
        match self.0.last() {
            None => self.clone(),
            Some(l) => {
                let l = l.clone();
                Self(self.0.iter().map(|c| c / &l).collect())
            }
        }
    }

    fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    fn to_primitive_int(&self) -> IntPoly {
        use num_integer::Integer;
        let lcm = self
            .0
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .0
            .iter()
            .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let mut ints: Vec<BigInt> = ints.into_iter().map(|c| c / &g).collect();
        if ints.last().is_some_and(Signed::is_negative) {
            ints.iter_mut().for_each(|c| *c = -c.clone());
        }
        IntPoly::new(ints)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tribonacci_char_poly() {
        let m = IntMatrix::from_rows(&[vec![1, 1, 1], vec![1, 0, 0], vec![0, 1, 0]]).unwrap();
        let p = char_poly(&m);
        assert_eq!(p, IntPoly::from_i64(&[-1, -1, -1, 1]));
        assert_eq!(p.to_string(), "x^3 - x^2 - x - 1");
        assert_eq!(determinant(&m), BigInt::from(1));
        let z = p.eval_matrix(&m);
        assert!(z.iter().flatten().all(Zero::is_zero));
    }

    #[test]
    fn cyclotomics() {
        assert_eq!(cyclotomic(1), IntPoly::from_i64(&[-1, 1]));
        assert_eq!(cyclotomic(2), IntPoly::from_i64(&[1, 1]));
        assert_eq!(cyclotomic(6), IntPoly::from_i64(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), IntPoly::from_i64(&[1, 0, -1, 0, 1]));
        let p = cyclotomic(3).mul(&cyclotomic(2)).mul(&IntPoly::from_i64(&[-1, -1, 1]));
        let (rest, orders) = p.strip_cyclotomic(24);
        assert_eq!(rest, IntPoly::from_i64(&[-1, -1, 1]));
        assert_eq!(orders, vec![2, 3]);
    }

    #[test]
    fn squarefree_and_roots() {
        // x^2 (x - 2)^3 (x^2 - x - 1)
        let p = IntPoly::from_i64(&[0, 0, 1])
            .mul(&IntPoly::linear(2).pow(3))
            .mul(&IntPoly::from_i64(&[-1, -1, 1]));
        let sf = p.squarefree();
        let mults: Vec<usize> = sf.iter().map(|(_, m)| *m).collect();
        assert_eq!(mults, vec![1, 2, 3]);
        let mut roots: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        roots.sort_by(f64::total_cmp);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let expect = [1.0 - phi, 0.0, 0.0, phi, 2.0, 2.0, 2.0];
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
        let (q, k) = p.strip_x();
        assert_eq!(k, 2);
        assert_eq!(q.degree(), 5);
    }

    #[test]
    fn exact_division() {
        let a = IntPoly::from_i64(&[-1, 0, 1]);
        assert_eq!(a.div_exact(&IntPoly::linear(1)), Some(IntPoly::from_i64(&[1, 1])));
        assert_eq!(a.div_exact(&IntPoly::linear(2)), None);
        assert_eq!(IntPoly::from_i64(&[1, 2]).div_exact(&IntPoly::from_i64(&[0, 2])), None);
    }
}
