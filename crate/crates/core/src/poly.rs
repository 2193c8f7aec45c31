//! Dense univariate real polynomials with the root machinery the solver needs.
//!
//! Coefficients are stored in ascending degree order: `coeffs[k]` multiplies
//! `x^k`. Trailing near-zero coefficients are stripped on construction so the
//! degree stays meaningful after floating-point recursions.
//!
//! Real-root location goes through Sturm sequences: a generalized Sturm chain
//! (remainder sequence ending at the approximate gcd) counts *distinct* real
//! roots on half-open intervals, which is exactly what threshold isolation and
//! the no-roots-above monotonicity check require. Isolated roots are polished
//! with a bracket-safeguarded Newton step.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Trailing coefficients with `|c| <= TRAILING_EPS * max|c|` are stripped.
const TRAILING_EPS: f64 = 1e-14;

/// Remainders this small (relative to a unit-scaled chain) end the Sturm chain.
const CHAIN_EPS: f64 = 1e-12;

/// Dense univariate real polynomial, ascending coefficient order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

/// An isolated real root together with how tightly it was bracketed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootLocation<T> {
    /// Polished root estimate.
    pub root: T,
    /// Width of the final isolating interval before polishing.
    pub isolation_width: T,
    /// `|p(root)|` at the returned estimate.
    pub residual: T,
}

impl<T: Real> Polynomial<T> {
    /// Build a polynomial from ascending coefficients, stripping trailing dust.
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Self { coeffs };
        p.normalize();
        p
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// A constant polynomial.
    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c * x^k`.
    pub fn monomial(c: T, k: usize) -> Self {
        if c == T::zero() {
            return Self::zero();
        }
        let mut coeffs = vec![T::zero(); k + 1];
        coeffs[k] = c;
        Self { coeffs }
    }

    /// Monic polynomial with the given roots: `(x - r_1) ... (x - r_m)`.
    pub fn from_roots(roots: &[T]) -> Self {
        let mut p = Self::constant(T::one());
        for &r in roots {
            p = &p * &Self::new(vec![-r, T::one()]);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree after normalization; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    /// Coefficient of `x^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> Option<T> {
        self.coeffs.last().copied()
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |m, &c| m.max(c.abs()))
    }

    /// Evaluate at `x` by Horner's scheme.
    pub fn eval(&self, x: T) -> T {
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// `sum_k |c_k| |x|^k` — the natural error scale for `eval` at `x`.
    pub fn eval_abs(&self, x: T) -> T {
        let ax = x.abs();
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * ax + c.abs();
        }
        acc
    }

    /// Formal derivative. Degree drops by exactly one for non-constant input.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * T::from_count(k))
            .collect();
        Self::new(coeffs)
    }

    /// Taylor shift: returns `q` with `q(z) = p(z + c)`.
    ///
    /// Implemented by repeated synthetic division, which is exact for exact
    /// inputs and numerically stable for the degrees used here.
    pub fn shift(&self, c: T) -> Self {
        if self.coeffs.len() <= 1 || c == T::zero() {
            return self.clone();
        }
        let n = self.coeffs.len();
        let mut b = self.coeffs.clone();
        for k in 0..n - 1 {
            for i in (k..n - 1).rev() {
                let high = b[i + 1];
                b[i] += c * high;
            }
        }
        Self::new(b)
    }

    /// Multiply every coefficient by `k`.
    pub fn scale(&self, k: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    fn normalize(&mut self) {
        let max = self
            .coeffs
            .iter()
            .fold(T::zero(), |m, &c| m.max(c.abs()));
        if max == T::zero() {
            self.coeffs.clear();
            return;
        }
        let cut = max * T::real(TRAILING_EPS);
        while let Some(&last) = self.coeffs.last() {
            if last.abs() <= cut {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    /// Cauchy bound: every real root lies in `(-B, B)` with
    /// `B = 1 + max |a_k / a_n|`.
    pub fn cauchy_root_bound(&self) -> T {
        let n = match self.degree() {
            Some(n) if n >= 1 => n,
            _ => return T::one(),
        };
        let lead = self.coeffs[n].abs();
        let mut max_ratio = T::zero();
        for &c in &self.coeffs[..n] {
            max_ratio = max_ratio.max(c.abs() / lead);
        }
        T::one() + max_ratio
    }

    /// Generalized Sturm chain, each element rescaled to unit max-coefficient.
    ///
    /// Positive rescaling preserves the sign sequence; ending the chain at a
    /// (numerically) zero remainder makes the variation count return the
    /// number of *distinct* real roots, multiple roots included once.
    fn sturm_chain(&self) -> Vec<Polynomial<T>> {
        let mut chain = Vec::new();
        let p0 = self.unit_scaled();
        if p0.is_zero() {
            return chain;
        }
        chain.push(p0);
        let p1 = chain[0].derivative().unit_scaled();
        if p1.is_zero() {
            return chain;
        }
        chain.push(p1);
        loop {
            let k = chain.len();
            let rem = chain[k - 2].rem(&chain[k - 1]);
            if rem.is_zero() || rem.max_abs_coeff() <= T::real(CHAIN_EPS) {
                break;
            }
            let next = rem.scale(-T::one()).unit_scaled();
            if next.degree() >= chain[k - 1].degree() {
                // Division failed to reduce the degree; stop rather than loop.
                break;
            }
            chain.push(next);
        }
        chain
    }

    /// Rescale so the largest coefficient magnitude lands in `[1/2, 1]`.
    ///
    /// The factor is a power of two: exact in binary floating point, so sign
    /// patterns and exact zeros of chain evaluations are preserved.
    fn unit_scaled(&self) -> Self {
        let max = self.max_abs_coeff();
        if max == T::zero() {
            return Self::zero();
        }
        let factor = T::real(2.0).powi(-max.log2().ceil().to_i32().unwrap_or(0));
        if factor.is_finite() && factor > T::zero() {
            self.scale(factor)
        } else {
            self.clone()
        }
    }

    /// Remainder of `self` divided by `d` (synthetic division).
    fn rem(&self, d: &Self) -> Self {
        let dd = match d.degree() {
            Some(dd) => dd,
            None => return Self::zero(),
        };
        if dd == 0 {
            return Self::zero();
        }
        let lead = d.coeffs[dd];
        let mut r = self.coeffs.clone();
        while r.len() > dd {
            let k = r.len() - 1;
            let q = r[k] / lead;
            for i in 0..dd {
                let sub = q * d.coeffs[i];
                r[k - dd + i] -= sub;
            }
            r.pop();
        }
        Self::new(r)
    }

    /// Sign variations of the chain at `x`, skipping exact zeros.
    fn sign_variations(chain: &[Polynomial<T>], x: T) -> usize {
        let mut variations = 0;
        let mut prev = 0i8;
        for p in chain {
            let v = p.eval(x);
            let s = if v > T::zero() {
                1
            } else if v < T::zero() {
                -1
            } else {
                0
            };
            if s != 0 {
                if prev != 0 && s != prev {
                    variations += 1;
                }
                prev = s;
            }
        }
        variations
    }

    /// Number of distinct real roots in the half-open interval `(a, b]`.
    fn count_roots_in(chain: &[Polynomial<T>], a: T, b: T) -> usize {
        if chain.is_empty() || a >= b {
            return 0;
        }
        let va = Self::sign_variations(chain, a);
        let vb = Self::sign_variations(chain, b);
        va.saturating_sub(vb)
    }

    /// Largest real root strictly greater than zero, to absolute accuracy
    /// `tol`, or `None` if no positive real root exists.
    pub fn largest_positive_root(&self, tol: T) -> Option<T> {
        self.largest_positive_root_detailed(tol).map(|loc| loc.root)
    }

    /// Like [`largest_positive_root`](Self::largest_positive_root) but also
    /// reports the isolation width and the residual at the estimate.
    pub fn largest_positive_root_detailed(&self, tol: T) -> Option<RootLocation<T>> {
        let p = self.deflated_at_zero();
        let n = p.degree()?;
        if n == 0 {
            return None;
        }
        let chain = p.sturm_chain();
        let bound = p.cauchy_root_bound();
        let mut lo = T::zero();
        let mut hi = bound;
        if Self::count_roots_in(&chain, lo, hi) == 0 {
            return None;
        }
        while hi - lo > tol {
            let mid = (lo + hi) * T::real(0.5);
            if Self::count_roots_in(&chain, mid, hi) >= 1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(self.polish(lo, hi, tol))
    }

    /// Smallest real root anywhere on the line, or `None`.
    pub fn smallest_real_root(&self, tol: T) -> Option<T> {
        let n = self.degree()?;
        if n == 0 {
            return None;
        }
        let chain = self.sturm_chain();
        let bound = self.cauchy_root_bound() + T::one();
        let mut lo = -bound;
        let mut hi = bound;
        if Self::count_roots_in(&chain, lo, hi) == 0 {
            return None;
        }
        while hi - lo > tol {
            let mid = (lo + hi) * T::real(0.5);
            if Self::count_roots_in(&chain, lo, mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(self.polish(lo, hi, tol).root)
    }

    /// True iff the polynomial has no real root in `(a, infinity)`.
    ///
    /// Implemented by Sturm counting on `(a, B]` with `B` the Cauchy bound,
    /// not by sampling.
    pub fn no_roots_above(&self, a: T) -> bool {
        if self.degree().is_none_or(|n| n == 0) {
            return true;
        }
        let chain = self.sturm_chain();
        let hi = self.cauchy_root_bound().max(a + T::one());
        Self::count_roots_in(&chain, a, hi) == 0
    }

    /// Strip factors of `x` whose coefficients are (numerically) zero.
    fn deflated_at_zero(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let cut = self.max_abs_coeff() * T::real(1e-13);
        let lead_zeros = self
            .coeffs
            .iter()
            .take_while(|c| c.abs() <= cut)
            .count()
            .min(self.coeffs.len() - 1);
        Self::new(self.coeffs[lead_zeros..].to_vec())
    }

    /// Safeguarded Newton polish inside the isolating bracket `[lo, hi]`.
    fn polish(&self, lo: T, hi: T, tol: T) -> RootLocation<T> {
        let dp = self.derivative();
        let mut x = (lo + hi) * T::real(0.5);
        let mut best = x;
        let mut best_res = self.eval(x).abs();
        for _ in 0..32 {
            let f = self.eval(x);
            let d = dp.eval(x);
            if d == T::zero() {
                break;
            }
            let next = x - f / d;
            if !next.is_finite() || next < lo - tol || next > hi + tol {
                break;
            }
            let res = self.eval(next).abs();
            if res < best_res {
                best = next;
                best_res = res;
            }
            if (next - x).abs() <= tol * T::real(1e-6) {
                break;
            }
            x = next;
        }
        RootLocation {
            root: best,
            isolation_width: hi - lo,
            residual: best_res,
        }
    }
}

impl<T: Real> Add for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        Polynomial::new(coeffs)
    }
}

impl<T: Real> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        Polynomial::new(coeffs)
    }
}

impl<T: Real> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }
}

impl<T: Real> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == T::zero() {
                continue;
            }
            if first {
                if c < T::zero() {
                    write!(f, "-")?;
                }
            } else if c < T::zero() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            match k {
                0 => fmt::Display::fmt(&a, f)?,
                _ => {
                    if a != T::one() {
                        fmt::Display::fmt(&a, f)?;
                    }
                    if k == 1 {
                        write!(f, "x")?;
                    } else {
                        write!(f, "x^{k}")?;
                    }
                }
            }
            first = false;
        }
        Ok(())
    }
}
