//! The averaging polynomial and the optimal threshold.
//!
//! For a monic reward polynomial `p_n` with `p_n(0) = 0` and the killed
//! supremum `M`, the averaging polynomial `P_n` is the monic degree-`n`
//! polynomial satisfying `E P_n(x + M) = p_n(x)` for all `x`. Equating
//! coefficients turns this into a triangular system over the moments of `M`,
//! solved backwards:
//!
//! ```text
//! b_n = 1
//! b_l = a_l - sum_{k=l+1}^{n} b_k C(k,l) mu_{k-l},   l = n-1, ..., 0
//! ```
//!
//! The optimal one-sided threshold `x*` is the largest positive root of
//! `P_n` (it always has one). The Appell polynomials `Q_k` are the averaging
//! polynomials of the monomials `x^k`; any `P_n` decomposes as
//! `sum a_k Q_k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levy::SupremumLaw;
use crate::poly::Polynomial;
use crate::scalar::Real;

/// Degrees above this overflow the moment/factorial scale in double precision.
pub const MAX_DEGREE: usize = 20;

/// Errors from reward validation and threshold solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("reward must be a non-constant polynomial")]
    RewardDegree,
    #[error("reward must be monic (leading coefficient 1), got {lead}")]
    NotMonic { lead: f64 },
    #[error("reward must vanish at zero (no constant term), got {constant}")]
    NonzeroConstant { constant: f64 },
    #[error("reward degree {degree} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooHigh { degree: usize },
    #[error("need moments mu_0..mu_{needed}, got {got} entries")]
    MomentsTooShort { needed: usize, got: usize },
    #[error("averaging polynomial has no positive root (numerical failure)")]
    NoPositiveRoot,
    #[error("reward has no real root, so it cannot be shifted into normalized form")]
    NoRealRoot,
    #[error("reward leading coefficient must be positive, got {lead}")]
    NonpositiveLeading { lead: f64 },
}

/// Exact binomial coefficient; k stays small (<= [`MAX_DEGREE`]).
fn binomial(k: usize, l: usize) -> u64 {
    if l > k {
        return 0;
    }
    let l = l.min(k - l);
    let mut num = 1u64;
    for i in 0..l {
        num = num * (k - i) as u64 / (i + 1) as u64;
    }
    num
}

fn check_reward<T: Real>(p: &Polynomial<T>) -> Result<usize, SolveError> {
    let n = p.degree().ok_or(SolveError::RewardDegree)?;
    if n < 1 {
        return Err(SolveError::RewardDegree);
    }
    if n > MAX_DEGREE {
        return Err(SolveError::DegreeTooHigh { degree: n });
    }
    let lead = p.coeff(n);
    if (lead - T::one()).abs() > T::real(1e-12) {
        return Err(SolveError::NotMonic {
            lead: num_traits::ToPrimitive::to_f64(&lead).unwrap_or(f64::NAN),
        });
    }
    let c0 = p.coeff(0);
    if c0.abs() > T::real(1e-12) * p.max_abs_coeff() {
        return Err(SolveError::NonzeroConstant {
            constant: num_traits::ToPrimitive::to_f64(&c0).unwrap_or(f64::NAN),
        });
    }
    Ok(n)
}

/// Averaging polynomial of `p` for moments `[mu_0, ..., mu_n]` of `M`.
///
/// `p` must be monic with `p(0) = 0`; `moments` must cover `mu_0..mu_n`.
pub fn averaging_polynomial<T: Real>(
    p: &Polynomial<T>,
    moments: &[T],
) -> Result<Polynomial<T>, SolveError> {
    let n = check_reward(p)?;
    if moments.len() < n + 1 {
        return Err(SolveError::MomentsTooShort {
            needed: n,
            got: moments.len(),
        });
    }
    let mut b = vec![T::zero(); n + 1];
    b[n] = T::one();
    for l in (0..n).rev() {
        let mut s = T::zero();
        for k in (l + 1)..=n {
            s += b[k] * T::real(binomial(k, l) as f64) * moments[k - l];
        }
        b[l] = p.coeff(l) - s;
    }
    Ok(Polynomial::new(b))
}

/// Appell polynomials `[Q_1, ..., Q_n]` of the law with the given moments:
/// `Q_k` is the averaging polynomial of `x^k`, so `E Q_k(x + M) = x^k`.
pub fn appell_basis<T: Real>(moments: &[T], n: usize) -> Result<Vec<Polynomial<T>>, SolveError> {
    (1..=n)
        .map(|k| averaging_polynomial(&Polynomial::monomial(T::one(), k), moments))
        .collect()
}

/// Output of [`solve_threshold`]: the averaging polynomial and the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragingResult<T> {
    /// The reward polynomial `p_n` (monic, `p_n(0) = 0`).
    pub reward: Polynomial<T>,
    /// The averaging polynomial `P_n`.
    pub averaging: Polynomial<T>,
    /// Largest positive root of `P_n`.
    pub x_star: T,
    /// Coefficients `b_0..b_n` of `P_n`, ascending.
    pub b_coeffs: Vec<T>,
    /// Width of the isolating interval around `x_star` (root conditioning).
    pub isolation_width: T,
    /// `|P_n(x_star)|` at the reported root.
    pub residual: T,
}

/// Compute the averaging polynomial of `p` under `law` and locate the
/// threshold `x*` as its largest positive root.
///
/// A missing positive root contradicts the existence guarantee and is
/// reported as a numerical failure.
pub fn solve_threshold<T: Real>(
    p: &Polynomial<T>,
    law: &SupremumLaw<T>,
) -> Result<AveragingResult<T>, SolveError> {
    let n = check_reward(p)?;
    let moments = law.moments(n);
    let averaging = averaging_polynomial(p, &moments)?;
    let loc = averaging
        .largest_positive_root_detailed(T::real(1e-10))
        .ok_or(SolveError::NoPositiveRoot)?;
    Ok(AveragingResult {
        reward: p.clone(),
        b_coeffs: averaging.coeffs().to_vec(),
        averaging,
        x_star: loc.root,
        isolation_width: loc.isolation_width,
        residual: loc.residual,
    })
}

/// Reduce a general polynomial with positive leading coefficient and at least
/// one real root to the normalized reward class.
///
/// Returns `(p, scale, shift)` with `q(y) = scale * p(y - shift)`, where `p`
/// is monic with `p(0) = 0` and `shift` is the smallest real root of `q`. A
/// stopping problem with reward built from `q` has value
/// `scale * V(x - shift)` and threshold `x* + shift` in terms of the solution
/// `V`, `x*` for `p`.
pub fn affine_normalize<T: Real>(q: &Polynomial<T>) -> Result<(Polynomial<T>, T, T), SolveError> {
    let n = q.degree().ok_or(SolveError::RewardDegree)?;
    if n < 1 {
        return Err(SolveError::RewardDegree);
    }
    let lead = q.coeff(n);
    if lead.is_nan() || lead <= T::zero() {
        return Err(SolveError::NonpositiveLeading {
            lead: num_traits::ToPrimitive::to_f64(&lead).unwrap_or(f64::NAN),
        });
    }
    let monic = q.scale(T::one() / lead);
    let x0 = monic
        .smallest_real_root(T::real(1e-12))
        .ok_or(SolveError::NoRealRoot)?;
    let shifted = monic.shift(x0);
    // Force the structural zero at the origin exactly.
    let mut coeffs = shifted.coeffs().to_vec();
    if !coeffs.is_empty() {
        coeffs[0] = T::zero();
    }
    Ok((Polynomial::new(coeffs), lead, x0))
}
