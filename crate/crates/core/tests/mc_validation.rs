//! Statistical validation of the Monte Carlo engine against closed forms.
//!
//! Every test uses a fixed seed, so outcomes are deterministic; tolerances
//! are 3-sigma (or as stated) against the known values.

mod common;

use levystop_core::averaging::solve_threshold;
use levystop_core::mc::{
    sample_supremum, sample_supremum_exact, simulate_discounted_reward,
    simulate_discounted_reward_with_mode, threshold_sweep, DiscountMode, SupFunctional,
};
use levystop_core::valuation::build_value;
use levystop_core::{LevyModel64, PathConfig, Polynomial64, SupremumLaw64};

fn brownian() -> LevyModel64 {
    LevyModel64::brownian(0.0, 1.0).unwrap()
}

fn kou_model() -> LevyModel64 {
    LevyModel64::kou(2.0, 1.0, 1.0, 2.0, 1.0, 2.0).unwrap()
}

fn kou_quartic() -> Polynomial64 {
    Polynomial64::new(vec![0.0, -6.0, 11.0, -6.0, 1.0])
}

#[test]
fn supremum_path_mode_matches_unit_exponential_mean() {
    // M ~ Exp(1) for Brownian motion at r = 1/2. Discrete monitoring biases
    // the supremum low by about 0.58 sqrt(dt), so dt is kept small relative
    // to the Monte Carlo error.
    let cfg = PathConfig {
        dt: 2e-4,
        horizon: 24.0,
        paths: 20_000,
        seed: 2024,
        x0: 0.0,
    };
    let est = sample_supremum(&brownian(), 0.5, &cfg, &SupFunctional::identity()).unwrap();
    assert!(
        (est.mean - 1.0).abs() <= 3.0 * est.stderr,
        "E M = {} +- {}",
        est.mean,
        est.stderr
    );
}

#[test]
fn exact_mode_matches_closed_form_moments() {
    let cfg = PathConfig {
        dt: 1.0,
        horizon: 1.0,
        paths: 1_000_000,
        seed: 99,
        x0: 0.0,
    };
    let unit = SupremumLaw64::exponential(1.0).unwrap();
    let kou_law = kou_model().supremum_law(6.0).unwrap();
    for law in [&unit, &kou_law] {
        let mu = law.moments(2);
        for (k, &moment) in mu.iter().enumerate().skip(1) {
            let est = sample_supremum_exact(law, &cfg, &SupFunctional::power(k)).unwrap();
            assert!(
                (est.mean - moment).abs() <= 3.0 * est.stderr,
                "k = {k}: {} vs {} +- {}",
                moment,
                est.mean,
                est.stderr
            );
        }
    }
}

#[test]
fn brownian_quadratic_value_from_interior_start() {
    // V(x) = 4 e^{x-2} below the threshold x* = 2 for p = x^2, r = 1/2.
    let cfg = PathConfig {
        dt: 1e-3,
        horizon: 24.0,
        paths: 20_000,
        seed: 31,
        x0: 1.0,
    };
    let est =
        simulate_discounted_reward(&brownian(), &Polynomial64::monomial(1.0, 2), 2.0, &cfg, 0.5)
            .unwrap();
    let closed = 4.0 * (-1.0f64).exp();
    assert!(
        (est.mean - closed).abs() <= 3.0 * est.stderr,
        "{} vs {} +- {}",
        closed,
        est.mean,
        est.stderr
    );
}

#[test]
fn discount_weighting_equals_killing() {
    // The two constructions of the discounted problem agree within pooled
    // Monte Carlo error.
    let law = kou_model().supremum_law(6.0).unwrap();
    let sol = solve_threshold(&kou_quartic(), &law).unwrap();
    let base = PathConfig {
        dt: 1e-3,
        horizon: 2.0,
        paths: 50_000,
        seed: 400,
        x0: 0.0,
    };
    let weighted = simulate_discounted_reward_with_mode(
        &kou_model(),
        &kou_quartic(),
        sol.x_star,
        &base,
        6.0,
        DiscountMode::ExponentialWeight,
    )
    .unwrap();
    let mut other = base;
    other.seed = 401;
    let killed = simulate_discounted_reward_with_mode(
        &kou_model(),
        &kou_quartic(),
        sol.x_star,
        &other,
        6.0,
        DiscountMode::KillAtExponential,
    )
    .unwrap();
    let pooled = (weighted.stderr.powi(2) + killed.stderr.powi(2)).sqrt();
    assert!(
        (weighted.mean - killed.mean).abs() <= 3.0 * pooled,
        "weighted {} +- {} vs killed {} +- {}",
        weighted.mean,
        weighted.stderr,
        killed.mean,
        killed.stderr
    );
}

#[test]
fn halving_dt_changes_little_at_the_threshold() {
    // Jumps are placed exactly; only the diffusion crossing is discretized,
    // and at the optimal threshold the leading-order bias cancels.
    let law = kou_model().supremum_law(6.0).unwrap();
    let sol = solve_threshold(&kou_quartic(), &law).unwrap();
    let coarse_cfg = PathConfig {
        dt: 1e-3,
        horizon: 2.0,
        paths: 100_000,
        seed: 555,
        x0: 0.0,
    };
    let mut fine_cfg = coarse_cfg;
    fine_cfg.dt = 5e-4;
    let coarse =
        simulate_discounted_reward(&kou_model(), &kou_quartic(), sol.x_star, &coarse_cfg, 6.0)
            .unwrap();
    let fine =
        simulate_discounted_reward(&kou_model(), &kou_quartic(), sol.x_star, &fine_cfg, 6.0)
            .unwrap();
    let pooled = (coarse.stderr.powi(2) + fine.stderr.powi(2)).sqrt();
    assert!(
        (coarse.mean - fine.mean).abs() <= 2.0 * pooled,
        "dt=1e-3: {} +- {}, dt=5e-4: {} +- {}",
        coarse.mean,
        coarse.stderr,
        fine.mean,
        fine.stderr
    );
}

#[test]
fn closed_form_value_matches_simulation_from_zero() {
    let law = kou_model().supremum_law(6.0).unwrap();
    let sol = solve_threshold(&kou_quartic(), &law).unwrap();
    let pv = build_value(&sol, &law);
    let cfg = PathConfig {
        dt: 1e-3,
        horizon: 2.0,
        paths: 100_000,
        seed: 77,
        x0: 0.0,
    };
    let est =
        simulate_discounted_reward(&kou_model(), &kou_quartic(), sol.x_star, &cfg, 6.0).unwrap();
    assert!(
        (est.mean - pv.eval(0.0)).abs() <= 3.0 * est.stderr,
        "closed form {} vs MC {} +- {}",
        pv.eval(0.0),
        est.mean,
        est.stderr
    );
}

#[test]
fn stopping_where_the_payoff_vanishes_wastes_the_path() {
    // p = x(x-1)(x-2)(x-3) is negative on (2, 3): stopping at 2.5 collects
    // nothing on most paths, so the estimate is strictly dominated.
    let law = kou_model().supremum_law(6.0).unwrap();
    let sol = solve_threshold(&kou_quartic(), &law).unwrap();
    let cfg = PathConfig {
        dt: 1e-3,
        horizon: 2.0,
        paths: 50_000,
        seed: 4242,
        x0: 0.0,
    };
    let ests = threshold_sweep(&kou_model(), &kou_quartic(), &cfg, 6.0, &[2.5, sol.x_star]).unwrap();
    let pooled = (ests[0].stderr.powi(2) + ests[1].stderr.powi(2)).sqrt();
    assert!(
        ests[0].mean + 3.0 * pooled < ests[1].mean,
        "at 2.5: {} +- {}, at x*: {} +- {}",
        ests[0].mean,
        ests[0].stderr,
        ests[1].mean,
        ests[1].stderr
    );
}
