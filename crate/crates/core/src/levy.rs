//! Lévy process models: Laplace exponents, Wiener–Hopf roots of `psi(z) = r`,
//! and the law of the killed supremum `M` as a finite mixture of exponentials.
//!
//! Two concrete families carry closed-form supremum laws:
//!
//! * Brownian motion with drift (spectrally negative): `M ~ Exp(Phi(r))` with
//!   `Phi(r)` the unique positive root of `psi(z) = r`.
//! * Kou jump diffusion (two-sided exponential jumps, `sigma > 0`): `M` is a
//!   mixture of two exponentials whose rates are the two positive roots
//!   `0 < r_1 < alpha < r_2` of `psi(z) = r`.
//!
//! A generic spectrally negative variant takes `Phi(r)` directly for processes
//! whose exponent is not implemented here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Errors from model validation, Laplace-exponent evaluation, and
/// Wiener–Hopf root finding.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model parameter {name} = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("psi has a pole at z = {z} (jump rate of the Kou model)")]
    Pole { z: f64 },
    #[error("the Laplace exponent is not available for this variant (it is parameterized by Phi(r) directly)")]
    ExponentUnavailable,
    #[error("discount rate r = {r} must be nonnegative")]
    NegativeDiscount { r: f64 },
    #[error("r = 0 requires the process to drift to -infinity (mean {mean} >= 0 makes M improper)")]
    ImproperSupremum { mean: f64 },
    #[error("expected {expected} positive roots of psi(z) = r, found {found}")]
    WienerHopfRootCount { expected: usize, found: usize },
    #[error("root bracketing failed: {0}")]
    Bracketing(&'static str),
    #[error("invalid supremum mixture: {0}")]
    InvalidMixture(String),
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A Lévy process model together with everything the solver needs from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LevyModel<T> {
    /// `X_t = a t + sigma W_t`.
    BrownianDrift { drift: T, sigma: T },
    /// Kou jump diffusion: drift + diffusion + compound Poisson jumps with
    /// `Exp(up_rate)` upward jumps at intensity `up_intensity` and
    /// `Exp(down_rate)` downward jumps at intensity `down_intensity`.
    Kou {
        drift: T,
        sigma: T,
        up_intensity: T,
        up_rate: T,
        down_intensity: T,
        down_rate: T,
    },
    /// Generic spectrally negative process, parameterized directly by the
    /// positive root `Phi(r)` of its Laplace exponent equation.
    SpectrallyNegative { phi: T },
}

impl<T: Real> LevyModel<T> {
    pub fn brownian(drift: T, sigma: T) -> Result<Self, ModelError> {
        let m = LevyModel::BrownianDrift { drift, sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn kou(
        drift: T,
        sigma: T,
        up_intensity: T,
        up_rate: T,
        down_intensity: T,
        down_rate: T,
    ) -> Result<Self, ModelError> {
        let m = LevyModel::Kou {
            drift,
            sigma,
            up_intensity,
            up_rate,
            down_intensity,
            down_rate,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn spectrally_negative(phi: T) -> Result<Self, ModelError> {
        let m = LevyModel::SpectrallyNegative { phi };
        m.validate()?;
        Ok(m)
    }

    /// Check the parameter-domain invariants of the variant.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, value: T, requirement| {
            Err(ModelError::InvalidParameter {
                name,
                value: f64_of(value),
                requirement,
            })
        };
        match *self {
            LevyModel::BrownianDrift { drift, sigma } => {
                if sigma.is_nan() || sigma < T::zero() {
                    return bad("sigma", sigma, "must be >= 0");
                }
                if sigma == T::zero() && drift <= T::zero() {
                    // sigma = 0 with a <= 0 is (the negative of) a subordinator.
                    return bad("drift", drift, "must be > 0 when sigma = 0");
                }
                Ok(())
            }
            LevyModel::Kou {
                sigma,
                up_intensity,
                up_rate,
                down_intensity,
                down_rate,
                ..
            } => {
                if sigma.is_nan() || sigma <= T::zero() {
                    // The two-root supremum-law structure is only guaranteed
                    // with a diffusion component present.
                    return bad("sigma", sigma, "must be > 0 for the Kou variant");
                }
                if up_rate.is_nan() || up_rate <= T::zero() {
                    return bad("up_rate", up_rate, "must be > 0");
                }
                if down_rate.is_nan() || down_rate <= T::zero() {
                    return bad("down_rate", down_rate, "must be > 0");
                }
                if up_intensity.is_nan() || up_intensity < T::zero() {
                    return bad("up_intensity", up_intensity, "must be >= 0");
                }
                if down_intensity.is_nan() || down_intensity < T::zero() {
                    return bad("down_intensity", down_intensity, "must be >= 0");
                }
                Ok(())
            }
            LevyModel::SpectrallyNegative { phi } => {
                if phi.is_nan() || phi <= T::zero() {
                    return bad("phi", phi, "must be > 0");
                }
                Ok(())
            }
        }
    }

    /// Laplace exponent `psi(z)` with `E e^{z X_t} = e^{t psi(z)}`.
    ///
    /// For the Kou variant `z` must avoid the poles at `up_rate` and
    /// `-down_rate`. The generic spectrally negative variant carries no
    /// exponent (only `Phi(r)`), so every `z != 0` is an error there.
    pub fn laplace_exponent(&self, z: T) -> Result<T, ModelError> {
        match *self {
            LevyModel::BrownianDrift { drift, sigma } => {
                Ok(drift * z + sigma * sigma * z * z * T::real(0.5))
            }
            LevyModel::Kou {
                drift,
                sigma,
                up_intensity,
                up_rate,
                down_intensity,
                down_rate,
            } => {
                let guard = T::real(1e-12);
                if (up_rate - z).abs() <= up_rate * guard {
                    return Err(ModelError::Pole { z: f64_of(z) });
                }
                if (z + down_rate).abs() <= down_rate * guard {
                    return Err(ModelError::Pole { z: f64_of(z) });
                }
                Ok(drift * z
                    + sigma * sigma * z * z * T::real(0.5)
                    + up_intensity * z / (up_rate - z)
                    - down_intensity * z / (z + down_rate))
            }
            LevyModel::SpectrallyNegative { .. } => {
                if z == T::zero() {
                    Ok(T::zero())
                } else {
                    Err(ModelError::ExponentUnavailable)
                }
            }
        }
    }

    /// `psi'(z)`, used to polish Wiener–Hopf roots.
    fn laplace_exponent_derivative(&self, z: T) -> Option<T> {
        match *self {
            LevyModel::BrownianDrift { drift, sigma } => Some(drift + sigma * sigma * z),
            LevyModel::Kou {
                drift,
                sigma,
                up_intensity,
                up_rate,
                down_intensity,
                down_rate,
            } => {
                let du = up_rate - z;
                let dd = z + down_rate;
                Some(
                    drift + sigma * sigma * z + up_intensity * up_rate / (du * du)
                        - down_intensity * down_rate / (dd * dd),
                )
            }
            LevyModel::SpectrallyNegative { .. } => None,
        }
    }

    /// `E X_1`, when the variant exposes it.
    pub fn mean(&self) -> Option<T> {
        match *self {
            LevyModel::BrownianDrift { drift, .. } => Some(drift),
            LevyModel::Kou {
                drift,
                up_intensity,
                up_rate,
                down_intensity,
                down_rate,
                ..
            } => Some(drift + up_intensity / up_rate - down_intensity / down_rate),
            LevyModel::SpectrallyNegative { .. } => None,
        }
    }

    fn check_discount(&self, r: T) -> Result<(), ModelError> {
        if r < T::zero() {
            return Err(ModelError::NegativeDiscount { r: f64_of(r) });
        }
        if r == T::zero() {
            if let Some(mean) = self.mean() {
                if mean >= T::zero() {
                    return Err(ModelError::ImproperSupremum {
                        mean: f64_of(mean),
                    });
                }
            }
            // The generic spectrally negative variant supplies Phi(0)
            // directly; the caller asserts validity by providing it.
        }
        Ok(())
    }

    /// Positive roots of `psi(z) = r`, ascending.
    ///
    /// Brownian drift: the single root `Phi(r)` in closed form. Kou: exactly
    /// two roots `0 < r_1 < up_rate < r_2`, each located to `1e-10`; any other
    /// count is reported as an error.
    pub fn positive_wh_roots(&self, r: T) -> Result<Vec<T>, ModelError> {
        self.validate()?;
        self.check_discount(r)?;
        match *self {
            LevyModel::BrownianDrift { drift, sigma } => {
                if sigma == T::zero() {
                    // pure positive drift: psi(z) = a z
                    return Ok(vec![r / drift]);
                }
                let s2 = sigma * sigma;
                let disc = (drift * drift + (s2 + s2) * r).sqrt();
                let root = if drift <= T::zero() {
                    (disc - drift) / s2
                } else {
                    (r + r) / (drift + disc)
                };
                Ok(vec![root])
            }
            LevyModel::Kou { up_rate, .. } => {
                let alpha = up_rate;
                let guard = alpha * T::real(1e-9);
                let f = |z: T| self.laplace_exponent(z).map(|v| v - r);
                // Root below the pole at alpha.
                let lo1 = alpha * T::real(1e-12);
                let hi1 = alpha - guard;
                let f_lo1 = f(lo1)?;
                let f_hi1 = f(hi1)?;
                let bracketed_below = f_lo1 < T::zero() && f_hi1 > T::zero();
                if !bracketed_below {
                    return Err(ModelError::WienerHopfRootCount {
                        expected: 2,
                        found: usize::from(bracketed_below),
                    });
                }
                let r1 = self.bisect_root(lo1, hi1, r)?;
                // Root above the pole: expand the bracket geometrically.
                let lo2 = alpha + guard;
                let negative_past_pole = f(lo2)? < T::zero();
                if !negative_past_pole {
                    return Err(ModelError::Bracketing(
                        "psi(z) - r does not drop below zero right of the pole",
                    ));
                }
                let mut hi2 = alpha * T::real(2.0) + T::one();
                let mut grow = 0;
                while f(hi2)? <= T::zero() {
                    hi2 *= T::real(2.0);
                    grow += 1;
                    if grow > 200 {
                        return Err(ModelError::Bracketing(
                            "no sign change found right of the pole",
                        ));
                    }
                }
                let r2 = self.bisect_root(lo2, hi2, r)?;
                Ok(vec![r1, r2])
            }
            LevyModel::SpectrallyNegative { phi } => Ok(vec![phi]),
        }
    }

    /// Bisection to near machine width followed by a few Newton steps.
    fn bisect_root(&self, mut lo: T, mut hi: T, r: T) -> Result<T, ModelError> {
        let f = |z: T| self.laplace_exponent(z).map(|v| v - r);
        debug_assert!(f(lo)? < T::zero() && f(hi)? > T::zero());
        for _ in 0..200 {
            let mid = (lo + hi) * T::real(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid)? < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= hi.abs().max(T::one()) * T::real(1e-15) {
                break;
            }
        }
        let mut z = (lo + hi) * T::real(0.5);
        for _ in 0..4 {
            let fz = f(z)?;
            let d = match self.laplace_exponent_derivative(z) {
                Some(d) if d != T::zero() => d,
                _ => break,
            };
            let next = z - fz / d;
            if !next.is_finite() || next <= lo || next >= hi {
                break;
            }
            z = next;
        }
        Ok(z)
    }

    /// Law of the killed supremum `M = sup { X_t : t <= e(r) }`.
    pub fn supremum_law(&self, r: T) -> Result<SupremumLaw<T>, ModelError> {
        let roots = self.positive_wh_roots(r)?;
        match *self {
            LevyModel::BrownianDrift { .. } | LevyModel::SpectrallyNegative { .. } => {
                SupremumLaw::exponential(roots[0])
            }
            LevyModel::Kou { down_rate, .. } => {
                if roots.len() != 2 {
                    return Err(ModelError::WienerHopfRootCount {
                        expected: 2,
                        found: roots.len(),
                    });
                }
                let (r1, r2) = (roots[0], roots[1]);
                let beta = down_rate;
                let a1 = (T::one() - r1 / beta) / (T::one() - r1 / r2);
                let a2 = (T::one() - r2 / beta) / (T::one() - r2 / r1);
                SupremumLaw::new(vec![ExpTerm { weight: a1, rate: r1 }, ExpTerm {
                    weight: a2,
                    rate: r2,
                }])
            }
        }
    }
}

/// One `weight * rate * e^{-rate x}` component of the supremum density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm<T> {
    pub weight: T,
    pub rate: T,
}

/// Law of the killed supremum `M` on `[0, infinity)` as a finite mixture of
/// exponentials: `f_M(x) = sum_i A_i r_i e^{-r_i x}`.
///
/// Weights sum to one; individual weights may be negative as long as the
/// density stays nonnegative (checked at construction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupremumLaw<T> {
    terms: Vec<ExpTerm<T>>,
}

impl<T: Real> SupremumLaw<T> {
    /// Build and validate a mixture: positive strictly increasing rates,
    /// weights summing to one, density nonnegative at zero and at every
    /// pairwise term crossover.
    pub fn new(terms: Vec<ExpTerm<T>>) -> Result<Self, ModelError> {
        if terms.is_empty() {
            return Err(ModelError::InvalidMixture("no terms".into()));
        }
        for t in &terms {
            if t.rate.is_nan() || t.rate <= T::zero() || !t.rate.is_finite() || !t.weight.is_finite() {
                return Err(ModelError::InvalidMixture(format!(
                    "bad term (weight {}, rate {})",
                    f64_of(t.weight),
                    f64_of(t.rate)
                )));
            }
        }
        for w in terms.windows(2) {
            if w[0].rate >= w[1].rate {
                return Err(ModelError::InvalidMixture(
                    "rates must be strictly increasing".into(),
                ));
            }
        }
        let total: T = terms.iter().map(|t| t.weight).sum();
        if (total - T::one()).abs() > T::real(1e-12) * T::real(terms.len() as f64) {
            return Err(ModelError::InvalidMixture(format!(
                "weights sum to {} instead of 1",
                f64_of(total)
            )));
        }
        let law = Self { terms };
        // Density sign: the slowest rate dominates at infinity, zero and the
        // pairwise crossovers cover the candidate minima in between.
        if law.terms[0].weight.is_nan() || law.terms[0].weight <= T::zero() {
            return Err(ModelError::InvalidMixture(
                "weight of the slowest rate must be positive".into(),
            ));
        }
        let tol = -T::real(1e-12) * law.density_abs_scale();
        let mut probe_points = vec![T::zero()];
        for i in 0..law.terms.len() {
            for j in (i + 1)..law.terms.len() {
                let (ti, tj) = (law.terms[i], law.terms[j]);
                let num = (ti.weight * ti.rate).abs();
                let den = (tj.weight * tj.rate).abs();
                if num > T::zero() && den > T::zero() {
                    let x = (num / den).ln() / (ti.rate - tj.rate);
                    if x.is_finite() && x > T::zero() {
                        probe_points.push(x);
                    }
                }
            }
        }
        for x in probe_points {
            if law.density(x) < tol {
                return Err(ModelError::InvalidMixture(format!(
                    "density negative at x = {}",
                    f64_of(x)
                )));
            }
        }
        Ok(law)
    }

    /// The single-exponential law `M ~ Exp(rate)`.
    pub fn exponential(rate: T) -> Result<Self, ModelError> {
        Self::new(vec![ExpTerm {
            weight: T::one(),
            rate,
        }])
    }

    pub fn terms(&self) -> &[ExpTerm<T>] {
        &self.terms
    }

    /// Smallest mixture rate (decay rate of the density tail).
    pub fn min_rate(&self) -> T {
        self.terms[0].rate
    }

    fn density_abs_scale(&self) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |s, t| s + (t.weight * t.rate).abs())
    }

    /// Mixture density `f_M(x)` for `x >= 0`.
    pub fn density(&self, x: T) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |s, t| s + t.weight * t.rate * (-t.rate * x).exp())
    }

    /// `P(M <= x)`.
    pub fn cdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        T::one()
            - self
                .terms
                .iter()
                .fold(T::zero(), |s, t| s + t.weight * (-t.rate * x).exp())
    }

    /// Moments `[mu_0, ..., mu_n]` with `mu_0 = 1` and
    /// `mu_k = k! * sum_i A_i / r_i^k`.
    pub fn moments(&self, n: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(T::one());
        let mut factorial = T::one();
        for k in 1..=n {
            factorial *= T::from_count(k);
            let s = self
                .terms
                .iter()
                .fold(T::zero(), |s, t| s + t.weight / t.rate.powi(k as i32));
            out.push(factorial * s);
        }
        out
    }
}
