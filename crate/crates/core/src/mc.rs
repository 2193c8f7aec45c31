//! First-passage Monte Carlo for the implemented Lévy models.
//!
//! Paths use an Euler scheme for the drift/diffusion part with *exact*
//! compound-Poisson jump insertion: jump times come from exponential clocks
//! and jump sizes are exponential, so only the diffusion crossing of the
//! threshold is discretized. The first-passage value is the first simulated
//! state at or above the threshold — jump overshoots are kept exactly,
//! diffusion overshoot inherits the monitoring point.
//!
//! Reproducibility: every path derives its own generator from
//! `(seed, path index)`, and the reduction runs in path order, so estimates
//! are bit-identical for a fixed `(seed, paths, dt)` regardless of how many
//! worker threads rayon uses. Everything here is `f64`.

use rand::{Rng, SeedableRng};
use rand_distr::{Exp1, StandardNormal};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levy::{LevyModel, SupremumLaw};
use crate::poly::Polynomial;
use crate::valuation::reward_g;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid path configuration: {0}")]
    Config(String),
    #[error("model cannot be simulated: {0}")]
    UnsupportedModel(&'static str),
    #[error("discount rate must be nonnegative, got {r}")]
    NegativeDiscount { r: f64 },
    #[error("r = 0 requires the process to drift to -infinity")]
    ImproperAtZeroDiscount,
}

/// Discretization and replication parameters for one simulation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    /// Diffusion monitoring step.
    pub dt: f64,
    /// Hard truncation of every path; paths still running contribute zero.
    pub horizon: f64,
    pub paths: u64,
    pub seed: u64,
    /// Starting point of the process.
    pub x0: f64,
}

impl PathConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.dt.is_nan() || self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(McError::Config(format!("dt = {} must be positive", self.dt)));
        }
        if self.horizon.is_nan() || self.horizon < self.dt || !self.horizon.is_finite() {
            return Err(McError::Config(format!(
                "horizon = {} must be finite and at least dt",
                self.horizon
            )));
        }
        if self.paths == 0 {
            return Err(McError::Config("paths must be at least 1".into()));
        }
        if !self.x0.is_finite() {
            return Err(McError::Config(format!("x0 = {} must be finite", self.x0)));
        }
        Ok(())
    }

    /// Default horizon `12 / r` for `r > 0` (discount tail `e^{-12}`).
    pub fn default_horizon(r: f64) -> f64 {
        12.0 / r
    }
}

/// A Monte Carlo estimate with its sampling error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(n)`.
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    /// Paths that reached the horizon without resolving (their contribution
    /// is zero; the induced bias is bounded by the discounted tail).
    pub truncated: u64,
}

fn estimate_from(payoffs: &[f64], truncated: u64, cfg: &PathConfig) -> McEstimate {
    let n = payoffs.len() as u64;
    let nf = n as f64;
    let mean = payoffs.iter().sum::<f64>() / nf;
    let stderr = if n > 1 {
        let ss = payoffs.iter().map(|&p| (p - mean) * (p - mean)).sum::<f64>();
        (ss / (nf - 1.0)).sqrt() / nf.sqrt()
    } else {
        0.0
    };
    McEstimate {
        mean,
        stderr,
        n,
        seed: cfg.seed,
        truncated,
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-path generator derived from `(seed, path index)` only, so streams are
/// identical no matter how paths are scheduled across threads.
fn path_rng(seed: u64, path: u64) -> Pcg64Mcg {
    let mut s = seed ^ path.wrapping_mul(0xA076_1D64_78BD_642F);
    let lo = splitmix64(&mut s);
    let hi = splitmix64(&mut s);
    let mut bytes = [0u8; 16];
    bytes[..8].copy_from_slice(&lo.to_le_bytes());
    bytes[8..].copy_from_slice(&hi.to_le_bytes());
    Pcg64Mcg::from_seed(bytes)
}

/// Flattened dynamics of a simulatable model.
struct Dynamics {
    drift: f64,
    sigma: f64,
    jump_intensity: f64,
    p_up: f64,
    up_rate: f64,
    down_rate: f64,
}

fn dynamics(model: &LevyModel<f64>) -> Result<Dynamics, McError> {
    match *model {
        LevyModel::BrownianDrift { drift, sigma } => Ok(Dynamics {
            drift,
            sigma,
            jump_intensity: 0.0,
            p_up: 0.0,
            up_rate: 1.0,
            down_rate: 1.0,
        }),
        LevyModel::Kou {
            drift,
            sigma,
            up_intensity,
            up_rate,
            down_intensity,
            down_rate,
        } => {
            let jump_intensity = up_intensity + down_intensity;
            let p_up = if jump_intensity > 0.0 {
                up_intensity / jump_intensity
            } else {
                0.0
            };
            Ok(Dynamics {
                drift,
                sigma,
                jump_intensity,
                p_up,
                up_rate,
                down_rate,
            })
        }
        LevyModel::SpectrallyNegative { .. } => Err(McError::UnsupportedModel(
            "the generic spectrally negative variant carries no path dynamics",
        )),
    }
}

fn check_discount(model: &LevyModel<f64>, r: f64) -> Result<(), McError> {
    if r < 0.0 {
        return Err(McError::NegativeDiscount { r });
    }
    if r == 0.0 {
        match model.mean() {
            Some(m) if m < 0.0 => {}
            _ => return Err(McError::ImproperAtZeroDiscount),
        }
    }
    Ok(())
}

enum PathEnd {
    Hit { tau: f64, x: f64 },
    Truncated,
}

/// Run one path until the first monitored state at or above `threshold`, or
/// until `horizon`. Monitored states: every grid time, the diffusion endpoint
/// at each jump time, and each post-jump value.
fn first_passage(
    dy: &Dynamics,
    threshold: f64,
    x0: f64,
    dt: f64,
    horizon: f64,
    rng: &mut Pcg64Mcg,
) -> PathEnd {
    let mut t = 0.0_f64;
    let mut x = x0;
    let sqrt_dt = dt.sqrt();
    let mut next_jump = if dy.jump_intensity > 0.0 {
        let e: f64 = rng.sample(Exp1);
        e / dy.jump_intensity
    } else {
        f64::INFINITY
    };
    loop {
        let t_grid = t + dt;
        if next_jump <= t_grid && next_jump <= horizon {
            let h = next_jump - t;
            if h > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                x += dy.drift * h + dy.sigma * h.sqrt() * z;
            }
            t = next_jump;
            if x >= threshold {
                return PathEnd::Hit { tau: t, x };
            }
            let u: f64 = rng.random();
            let e: f64 = rng.sample(Exp1);
            x += if u < dy.p_up {
                e / dy.up_rate
            } else {
                -e / dy.down_rate
            };
            let e_next: f64 = rng.sample(Exp1);
            next_jump = t + e_next / dy.jump_intensity;
            if x >= threshold {
                return PathEnd::Hit { tau: t, x };
            }
        } else if t_grid < horizon {
            let z: f64 = rng.sample(StandardNormal);
            x += dy.drift * dt + dy.sigma * sqrt_dt * z;
            t = t_grid;
            if x >= threshold {
                return PathEnd::Hit { tau: t, x };
            }
        } else {
            let h = horizon - t;
            if h > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                x += dy.drift * h + dy.sigma * h.sqrt() * z;
            }
            if x >= threshold {
                return PathEnd::Hit { tau: horizon, x };
            }
            return PathEnd::Truncated;
        }
    }
}

/// How discounting is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscountMode {
    /// Weight each stopped path by `e^{-r tau}`.
    ExponentialWeight,
    /// Kill each path at an independent `Exp(r)` time; stopped-in-time paths
    /// count undiscounted. Distributionally equivalent to the weighting mode.
    KillAtExponential,
}

/// Estimate `E e^{-r tau} g(X_tau) 1{tau < inf}` for the first-passage time
/// `tau` over `threshold`, starting from `cfg.x0`.
pub fn simulate_discounted_reward(
    model: &LevyModel<f64>,
    reward: &Polynomial<f64>,
    threshold: f64,
    cfg: &PathConfig,
    r: f64,
) -> Result<McEstimate, McError> {
    simulate_discounted_reward_with_mode(
        model,
        reward,
        threshold,
        cfg,
        r,
        DiscountMode::ExponentialWeight,
    )
}

/// [`simulate_discounted_reward`] with an explicit discounting construction.
pub fn simulate_discounted_reward_with_mode(
    model: &LevyModel<f64>,
    reward: &Polynomial<f64>,
    threshold: f64,
    cfg: &PathConfig,
    r: f64,
    mode: DiscountMode,
) -> Result<McEstimate, McError> {
    cfg.validate()?;
    check_discount(model, r)?;
    if !threshold.is_finite() {
        return Err(McError::Config(format!(
            "threshold = {threshold} must be finite"
        )));
    }
    if cfg.x0 >= threshold {
        // tau = 0 on every path: the estimate is exact.
        return Ok(McEstimate {
            mean: reward_g(reward, cfg.x0),
            stderr: 0.0,
            n: cfg.paths,
            seed: cfg.seed,
            truncated: 0,
        });
    }
    let dy = dynamics(model)?;
    let outcomes: Vec<(f64, bool)> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let window = match mode {
                DiscountMode::ExponentialWeight => cfg.horizon,
                DiscountMode::KillAtExponential => {
                    if r > 0.0 {
                        let e: f64 = rng.sample(Exp1);
                        cfg.horizon.min(e / r)
                    } else {
                        cfg.horizon
                    }
                }
            };
            match first_passage(&dy, threshold, cfg.x0, cfg.dt, window, &mut rng) {
                PathEnd::Hit { tau, x } => {
                    let weight = match mode {
                        DiscountMode::ExponentialWeight => (-r * tau).exp(),
                        DiscountMode::KillAtExponential => 1.0,
                    };
                    (weight * reward_g(reward, x), false)
                }
                PathEnd::Truncated => (0.0, true),
            }
        })
        .collect();
    let payoffs: Vec<f64> = outcomes.iter().map(|&(p, _)| p).collect();
    let truncated = outcomes.iter().filter(|&&(_, t)| t).count() as u64;
    Ok(estimate_from(&payoffs, truncated, cfg))
}

/// A functional of the killed supremum: `f(M) = poly(M) 1{M >= a}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupFunctional {
    pub poly: Polynomial<f64>,
    pub indicator_above: Option<f64>,
}

impl SupFunctional {
    /// `f(M) = M`.
    pub fn identity() -> Self {
        SupFunctional {
            poly: Polynomial::monomial(1.0, 1),
            indicator_above: None,
        }
    }

    /// `f(M) = M^k`.
    pub fn power(k: usize) -> Self {
        SupFunctional {
            poly: Polynomial::monomial(1.0, k),
            indicator_above: None,
        }
    }

    /// `f(M) = 1{M >= a}`.
    pub fn indicator(a: f64) -> Self {
        SupFunctional {
            poly: Polynomial::constant(1.0),
            indicator_above: Some(a),
        }
    }

    pub fn eval(&self, m: f64) -> f64 {
        match self.indicator_above {
            Some(a) if m < a => 0.0,
            _ => self.poly.eval(m),
        }
    }
}

/// Running supremum of one path over `[0, window]`, monitored at grid times,
/// diffusion endpoints of jump times, and post-jump states.
fn run_supremum(dy: &Dynamics, x0: f64, dt: f64, window: f64, rng: &mut Pcg64Mcg) -> f64 {
    let mut t = 0.0_f64;
    let mut x = x0;
    let mut sup = x0;
    let sqrt_dt = dt.sqrt();
    let mut next_jump = if dy.jump_intensity > 0.0 {
        let e: f64 = rng.sample(Exp1);
        e / dy.jump_intensity
    } else {
        f64::INFINITY
    };
    loop {
        let t_grid = t + dt;
        if next_jump <= t_grid && next_jump <= window {
            let h = next_jump - t;
            if h > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                x += dy.drift * h + dy.sigma * h.sqrt() * z;
                sup = sup.max(x);
            }
            t = next_jump;
            let u: f64 = rng.random();
            let e: f64 = rng.sample(Exp1);
            x += if u < dy.p_up {
                e / dy.up_rate
            } else {
                -e / dy.down_rate
            };
            sup = sup.max(x);
            let e_next: f64 = rng.sample(Exp1);
            next_jump = t + e_next / dy.jump_intensity;
        } else if t_grid < window {
            let z: f64 = rng.sample(StandardNormal);
            x += dy.drift * dt + dy.sigma * sqrt_dt * z;
            sup = sup.max(x);
            t = t_grid;
        } else {
            let h = window - t;
            if h > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                x += dy.drift * h + dy.sigma * h.sqrt() * z;
                sup = sup.max(x);
            }
            return sup;
        }
    }
}

/// Estimate `E f(M)` by simulating paths up to `min(e(r), horizon)` and
/// recording the running supremum.
///
/// For `r = 0` (with drift to minus infinity) every path runs to the horizon
/// and the tail bias is reported through `truncated`, not bounded.
pub fn sample_supremum(
    model: &LevyModel<f64>,
    r: f64,
    cfg: &PathConfig,
    f: &SupFunctional,
) -> Result<McEstimate, McError> {
    cfg.validate()?;
    check_discount(model, r)?;
    let dy = dynamics(model)?;
    let outcomes: Vec<(f64, bool)> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let (window, capped) = if r > 0.0 {
                let e: f64 = rng.sample(Exp1);
                let e_r = e / r;
                (e_r.min(cfg.horizon), e_r > cfg.horizon)
            } else {
                (cfg.horizon, true)
            };
            let sup = run_supremum(&dy, cfg.x0, cfg.dt, window, &mut rng);
            (f.eval(sup), capped)
        })
        .collect();
    let payoffs: Vec<f64> = outcomes.iter().map(|&(p, _)| p).collect();
    let truncated = outcomes.iter().filter(|&&(_, c)| c).count() as u64;
    Ok(estimate_from(&payoffs, truncated, cfg))
}

/// Estimate `E f(M)` by exact sampling from the supremum law (no paths):
/// each draw inverts the mixture CDF by bisection.
pub fn sample_supremum_exact(
    law: &SupremumLaw<f64>,
    cfg: &PathConfig,
    f: &SupFunctional,
) -> Result<McEstimate, McError> {
    if cfg.paths == 0 {
        return Err(McError::Config("paths must be at least 1".into()));
    }
    let payoffs: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let u: f64 = rng.random();
            f.eval(invert_cdf(law, u))
        })
        .collect();
    Ok(estimate_from(&payoffs, 0, cfg))
}

fn invert_cdf(law: &SupremumLaw<f64>, u: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 1.0 / law.min_rate();
    let mut grow = 0;
    while law.cdf(hi) < u {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            break;
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if law.cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Compare both sides of the fluctuation identity
/// `E P(x0 + M) 1{x0 + M >= a} = E e^{-r tau_a} g(X_{tau_a})` for `a >= x*`:
/// the left side in closed form, the right side by simulation from `x0`.
#[allow(clippy::too_many_arguments)]
pub fn check_fluctuation_identity(
    model: &LevyModel<f64>,
    reward: &Polynomial<f64>,
    averaging: &Polynomial<f64>,
    x0: f64,
    a: f64,
    law: &SupremumLaw<f64>,
    cfg: &PathConfig,
    r: f64,
) -> Result<(f64, McEstimate), McError> {
    let lhs = crate::valuation::expectation_above(averaging, law, x0, a);
    let mut run = *cfg;
    run.x0 = x0;
    let rhs = simulate_discounted_reward(model, reward, a, &run, r)?;
    Ok((lhs, rhs))
}

/// Common-random-numbers sweep: the same seed (hence the same per-path
/// streams) is replayed against every threshold.
pub fn threshold_sweep(
    model: &LevyModel<f64>,
    reward: &Polynomial<f64>,
    cfg: &PathConfig,
    r: f64,
    thresholds: &[f64],
) -> Result<Vec<McEstimate>, McError> {
    thresholds
        .iter()
        .map(|&th| simulate_discounted_reward(model, reward, th, cfg, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brownian() -> LevyModel<f64> {
        LevyModel::brownian(0.0, 1.0).unwrap()
    }

    fn kou() -> LevyModel<f64> {
        LevyModel::kou(2.0, 1.0, 1.0, 2.0, 1.0, 2.0).unwrap()
    }

    fn quick_cfg() -> PathConfig {
        PathConfig {
            dt: 1e-2,
            horizon: 4.0,
            paths: 2000,
            seed: 7,
            x0: 0.0,
        }
    }

    #[test]
    fn immediate_stop_is_exact() {
        let p = Polynomial::monomial(1.0, 2);
        let mut cfg = quick_cfg();
        cfg.x0 = 3.0;
        let est = simulate_discounted_reward(&brownian(), &p, 2.0, &cfg, 0.5).unwrap();
        assert_eq!(est.mean, 9.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.n, cfg.paths);
        assert_eq!(est.truncated, 0);
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let p = Polynomial::monomial(1.0, 2);
        let a = simulate_discounted_reward(&kou(), &p, 2.0, &quick_cfg(), 6.0).unwrap();
        let b = simulate_discounted_reward(&kou(), &p, 2.0, &quick_cfg(), 6.0).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert_eq!(a.truncated, b.truncated);
        let mut other = quick_cfg();
        other.seed = 8;
        let c = simulate_discounted_reward(&kou(), &p, 2.0, &other, 6.0).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn config_validation() {
        let mut cfg = quick_cfg();
        cfg.dt = 0.0;
        assert!(matches!(
            simulate_discounted_reward(&brownian(), &Polynomial::monomial(1.0, 1), 1.0, &cfg, 0.5),
            Err(McError::Config(_))
        ));
        let mut cfg = quick_cfg();
        cfg.paths = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_discount_needs_negative_drift() {
        let p = Polynomial::monomial(1.0, 1);
        assert!(matches!(
            simulate_discounted_reward(&brownian(), &p, 1.0, &quick_cfg(), 0.0),
            Err(McError::ImproperAtZeroDiscount)
        ));
        let drifting = LevyModel::brownian(-1.0, 1.0).unwrap();
        assert!(simulate_discounted_reward(&drifting, &p, 1.0, &quick_cfg(), 0.0).is_ok());
    }

    #[test]
    fn spectrally_negative_not_simulatable() {
        let m = LevyModel::spectrally_negative(2.0).unwrap();
        assert!(matches!(
            simulate_discounted_reward(&m, &Polynomial::monomial(1.0, 1), 1.0, &quick_cfg(), 1.0),
            Err(McError::UnsupportedModel(_))
        ));
    }

    #[test]
    fn supremum_indicator_from_start_is_one() {
        // the supremum always dominates the starting point
        let est = sample_supremum(
            &brownian(),
            0.5,
            &quick_cfg(),
            &SupFunctional::indicator(0.0),
        )
        .unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn exact_sampler_matches_exponential_moments() {
        let law = SupremumLaw::exponential(1.0).unwrap();
        let cfg = PathConfig {
            dt: 1.0,
            horizon: 1.0,
            paths: 200_000,
            seed: 11,
            x0: 0.0,
        };
        let m1 = sample_supremum_exact(&law, &cfg, &SupFunctional::identity()).unwrap();
        assert!((m1.mean - 1.0).abs() <= 3.0 * m1.stderr, "{m1:?}");
        let m2 = sample_supremum_exact(&law, &cfg, &SupFunctional::power(2)).unwrap();
        assert!((m2.mean - 2.0).abs() <= 3.0 * m2.stderr, "{m2:?}");
    }

    #[test]
    fn cdf_inversion_hits_quantiles() {
        let law = SupremumLaw::exponential(2.0).unwrap();
        // median of Exp(2) is ln(2)/2
        let m = invert_cdf(&law, 0.5);
        assert!((m - 0.5 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn sweep_is_consistent_with_single_run() {
        let p = Polynomial::monomial(1.0, 2);
        let sw = threshold_sweep(&kou(), &p, &quick_cfg(), 6.0, &[2.0]).unwrap();
        let single = simulate_discounted_reward(&kou(), &p, 2.0, &quick_cfg(), 6.0).unwrap();
        assert_eq!(sw[0], single);
    }

    #[test]
    fn fluctuation_identity_degenerates_when_started_above_a() {
        // x0 >= a: tau = 0, so both sides equal p(x0).
        let law = kou().supremum_law(6.0).unwrap();
        let p = Polynomial::new(vec![0.0, -6.0, 11.0, -6.0, 1.0]);
        let avg = crate::averaging::averaging_polynomial(&p, &law.moments(4)).unwrap();
        let x0 = 5.5;
        let (lhs, rhs) =
            check_fluctuation_identity(&kou(), &p, &avg, x0, 5.0, &law, &quick_cfg(), 6.0).unwrap();
        assert_eq!(rhs.mean, p.eval(x0));
        assert_eq!(rhs.stderr, 0.0);
        assert!((lhs - p.eval(x0)).abs() <= 1e-9 * (1.0 + p.eval(x0).abs()));
    }
}
