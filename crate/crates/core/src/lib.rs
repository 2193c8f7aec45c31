//! Exact one-sided solutions of infinite-horizon optimal stopping problems
//! for Lévy processes with polynomial rewards.
//!
//! The solver pipeline:
//!
//! 1. [`levy`] — concrete Lévy models, their Laplace exponents, the positive
//!    roots of `psi(z) = r`, and the law of the killed supremum `M` as a
//!    finite mixture of exponentials with closed-form moments.
//! 2. [`averaging`] — the averaging polynomial `P_n` of a reward polynomial
//!    `p_n` (the monic polynomial with `E P_n(x + M) = p_n(x)`), computed by a
//!    backward triangular recursion over the moments of `M`, and the optimal
//!    threshold `x*` as its largest positive root.
//! 3. [`valuation`] — the closed-form piecewise value function and the
//!    verification checks (monotonicity above `x*`, dominance `V >= g` below).
//! 4. [`mc`] — first-passage Monte Carlo for Brownian-with-drift and Kou
//!    jump-diffusion models, used to validate the closed forms against the
//!    fluctuation identity `E G(M) 1{M >= a} = E e^{-r tau_a} g(X_{tau_a})`.
//!
//! Analytic modules are generic over the scalar type via [`scalar::Real`];
//! concrete `f64`/`f32` aliases are exported below. The Monte Carlo engine is
//! `f64`-only.

pub mod averaging;
pub mod levy;
pub mod mc;
pub mod poly;
pub mod scalar;
pub mod valuation;

pub use averaging::{appell_basis, averaging_polynomial, solve_threshold, AveragingResult};
pub use levy::{LevyModel, SupremumLaw};
pub use mc::{McEstimate, PathConfig};
pub use poly::Polynomial;
pub use scalar::Real;
pub use valuation::{
    build_value, expectation_above, reward_g, verify, GridSpec, PiecewiseValue, VerificationReport,
};

/// `f64` concrete aliases (what the CLI and the Monte Carlo engine use).
pub type Polynomial64 = poly::Polynomial<f64>;
pub type LevyModel64 = levy::LevyModel<f64>;
pub type SupremumLaw64 = levy::SupremumLaw<f64>;
pub type AveragingResult64 = averaging::AveragingResult<f64>;
pub type PiecewiseValue64 = valuation::PiecewiseValue<f64>;
pub type VerificationReport64 = valuation::VerificationReport<f64>;
pub type GridSpec64 = valuation::GridSpec<f64>;

/// `f32` concrete aliases.
pub type Polynomial32 = poly::Polynomial<f32>;
pub type LevyModel32 = levy::LevyModel<f32>;
pub type SupremumLaw32 = levy::SupremumLaw<f32>;
