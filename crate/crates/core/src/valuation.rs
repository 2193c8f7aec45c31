//! Closed-form value function and verification of the one-sided solution.
//!
//! With threshold `x*` and averaging polynomial `P`, the candidate value
//! function is `V(x) = E P(x + M) 1{x + M >= x*}`. Above the threshold the
//! indicator is certain and the averaging identity collapses this to the
//! reward itself; below the threshold the exponential mixture law of `M`
//! gives a finite sum of exponentials:
//!
//! ```text
//! V(x) = p(x)                                  for x >= x*
//! V(x) = sum_i B_i e^{r_i (x - x*)}            for x <  x*
//! B_i  = A_i r_i int_0^inf P(z + x*) e^{-r_i z} dz
//! ```
//!
//! The solution is certified when `P` is non-decreasing past `x*` and
//! `V >= g` below `x*`. A stronger sufficient sign condition (`P <= 0` left
//! of `x*`) is reported separately; it can fail while the solution is still
//! optimal.

use serde::{Deserialize, Serialize};

use crate::averaging::AveragingResult;
use crate::levy::SupremumLaw;
use crate::poly::Polynomial;
use crate::scalar::Real;

/// Payoff `g(x) = (p(x^+))^+`: the positive part of the reward, with the
/// state clamped at zero from below.
pub fn reward_g<T: Real>(p: &Polynomial<T>, x: T) -> T {
    p.eval(x.max(T::zero())).max(T::zero())
}

/// `int_c^inf z^k e^{-rate z} dz` for `c >= 0`, via the closed form
/// `(k! / rate^{k+1}) e^{-rate c} sum_{j=0}^{k} (rate c)^j / j!`.
///
/// Terms are accumulated as `e^{-rate c} (rate c)^j / j!` products, which
/// stay bounded even when `rate * c` is large.
fn exp_tail_integral<T: Real>(k: usize, rate: T, c: T) -> T {
    let rc = rate * c;
    let mut term = (-rc).exp();
    let mut sum = term;
    for j in 1..=k {
        term = term * rc / T::from_count(j);
        sum += term;
    }
    let mut factorial_over_power = T::one() / rate;
    for j in 1..=k {
        factorial_over_power = factorial_over_power * T::from_count(j) / rate;
    }
    factorial_over_power * sum
}

/// `E[ P(x + M) 1{x + M >= a} ]` in closed form:
/// `sum_i A_i r_i int_{max(a-x, 0)}^inf P(x + z) e^{-r_i z} dz`.
///
/// Handles both `x < a` and `x >= a` (where the indicator is certain and the
/// result reduces to `E P(x + M)`).
pub fn expectation_above<T: Real>(
    p_avg: &Polynomial<T>,
    law: &SupremumLaw<T>,
    x: T,
    a: T,
) -> T {
    let c = (a - x).max(T::zero());
    let shifted = p_avg.shift(x);
    let mut total = T::zero();
    for t in law.terms() {
        let mut integral = T::zero();
        for (k, &coeff) in shifted.coeffs().iter().enumerate() {
            integral += coeff * exp_tail_integral(k, t.rate, c);
        }
        total += t.weight * t.rate * integral;
    }
    total
}

/// One `B_i e^{r_i (x - x*)}` component of the below-threshold branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpComponent<T> {
    pub coeff: T,
    pub rate: T,
}

/// The piecewise value function of a solved stopping problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseValue<T> {
    pub x_star: T,
    /// `V(x) = poly_branch(x)` for `x >= x_star` (the reward itself).
    pub poly_branch: Polynomial<T>,
    /// `V(x) = sum_i coeff_i e^{rate_i (x - x_star)}` for `x < x_star`.
    pub exp_branch: Vec<ExpComponent<T>>,
}

impl<T: Real> PiecewiseValue<T> {
    pub fn eval(&self, x: T) -> T {
        if x >= self.x_star {
            self.poly_branch.eval(x)
        } else {
            self.exp_branch
                .iter()
                .fold(T::zero(), |s, c| s + c.coeff * (c.rate * (x - self.x_star)).exp())
        }
    }

    /// `sum_i B_i`, which equals `V(x*)` approached from below.
    pub fn exp_branch_at_threshold(&self) -> T {
        self.exp_branch.iter().fold(T::zero(), |s, c| s + c.coeff)
    }
}

/// Assemble the closed-form value function from a solved threshold.
///
/// `B_i = A_i r_i int_0^inf P(z + x*) e^{-r_i z} dz`, evaluated exactly from
/// the shifted coefficients of `P`.
pub fn build_value<T: Real>(ar: &AveragingResult<T>, law: &SupremumLaw<T>) -> PiecewiseValue<T> {
    let shifted = ar.averaging.shift(ar.x_star);
    let exp_branch = law
        .terms()
        .iter()
        .map(|t| {
            let mut integral = T::zero();
            for (k, &coeff) in shifted.coeffs().iter().enumerate() {
                integral += coeff * exp_tail_integral(k, t.rate, T::zero());
            }
            ExpComponent {
                coeff: t.weight * t.rate * integral,
                rate: t.rate,
            }
        })
        .collect();
    PiecewiseValue {
        x_star: ar.x_star,
        poly_branch: ar.reward.clone(),
        exp_branch,
    }
}

/// Grid strategy for the verification sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    /// Uniform points of the initial sweep.
    pub initial_points: usize,
    /// Near-violations are bisected down to this spacing.
    pub min_spacing: T,
    /// Length of the monotonicity window above `x*`.
    pub span_above: T,
    /// Absolute sign tolerance, scaled by `max(1, |p(x*)|)`.
    pub tol: T,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        GridSpec {
            initial_points: 512,
            min_spacing: T::real(1e-6),
            span_above: T::real(10.0),
            tol: T::real(1e-9),
        }
    }
}

/// How the monotonicity condition was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonotoneRoute {
    /// `P'` has no real root right of `x*` (Sturm isolation) and
    /// `P'(x*) >= -tol`.
    RootIsolation,
    /// Refined-grid minimum of `P'` on `[x*, x* + span]`.
    Grid,
}

/// Outcome of [`verify`]: the certification conditions plus the sufficient sign
/// pattern, with worst margins and witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport<T> {
    /// `P` non-decreasing on `[x*, infinity)`.
    pub monotone_ok: bool,
    pub monotone_route: MonotoneRoute,
    /// Point and `P'` value of the worst decrease, when monotonicity failed.
    pub monotone_witness: Option<(T, T)>,
    /// `V >= g` on `[0, x*]` (automatic on the negative axis).
    pub dominance_ok: bool,
    pub dominance_worst_point: T,
    pub dominance_worst_margin: T,
    /// Sufficient sign pattern `P <= 0` on `[0, x*]`; may fail while the
    /// solution is still certified.
    pub corollary_sign_ok: bool,
    pub corollary_worst_point: T,
    pub corollary_worst_value: T,
    /// Exponential branch agrees with the direct expectation at spot checks.
    pub branch_consistency_ok: bool,
    /// Absolute tolerance used for all sign checks.
    pub tol_abs: T,
    pub grid: GridSpec<T>,
    /// `|P(x*)|` at the reported threshold.
    pub threshold_residual: T,
    /// Width of the isolating interval of the threshold root.
    pub isolation_width: T,
}

impl<T: Real> VerificationReport<T> {
    /// The conditions certifying the one-sided solution hold at grid resolution.
    pub fn certified(&self) -> bool {
        self.monotone_ok && self.dominance_ok
    }
}

/// Minimum of `f` over `[lo, hi]`: uniform sweep, then local bisection around
/// near-violations (values below `near`) down to `min_spacing`.
fn refined_minimum<T: Real>(
    f: &dyn Fn(T) -> T,
    lo: T,
    hi: T,
    points: usize,
    min_spacing: T,
    near: T,
) -> (T, T) {
    let mut worst_x = lo;
    let mut worst = f(lo);
    let n = points.max(2);
    let step = (hi - lo) / T::from_count(n - 1);
    let mut xs = Vec::with_capacity(n);
    let mut fs = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i == n - 1 { hi } else { lo + step * T::from_count(i) };
        let v = f(x);
        if v < worst {
            worst = v;
            worst_x = x;
        }
        xs.push(x);
        fs.push(v);
    }
    // Bisect segments adjacent to near-violations.
    let mut stack: Vec<(T, T, T, T)> = Vec::new();
    for i in 0..n - 1 {
        if fs[i].min(fs[i + 1]) < near {
            stack.push((xs[i], fs[i], xs[i + 1], fs[i + 1]));
        }
    }
    while let Some((x0, f0, x1, f1)) = stack.pop() {
        if x1 - x0 <= min_spacing {
            continue;
        }
        let xm = (x0 + x1) * T::real(0.5);
        let fm = f(xm);
        if fm < worst {
            worst = fm;
            worst_x = xm;
        }
        if f0.min(fm) < near {
            stack.push((x0, f0, xm, fm));
        }
        if fm.min(f1) < near {
            stack.push((xm, fm, x1, f1));
        }
    }
    (worst_x, worst)
}

/// Verify the solution conditions and the sufficient sign pattern.
///
/// Monotonicity prefers exact root isolation on `P'` and falls back to a
/// refined grid when isolation disagrees near the threshold boundary.
/// Failures never panic; they are carried in the report.
pub fn verify<T: Real>(
    ar: &AveragingResult<T>,
    law: &SupremumLaw<T>,
    pv: &PiecewiseValue<T>,
    grid: &GridSpec<T>,
) -> VerificationReport<T> {
    let x_star = ar.x_star;
    let scale = T::one().max(ar.reward.eval(x_star).abs());
    let tol_abs = grid.tol * scale;
    let near = tol_abs * T::real(10.0);

    // Monotonicity of P on [x*, inf).
    let dp = ar.averaging.derivative();
    let exact_ok = dp.no_roots_above(x_star) && dp.eval(x_star) >= -tol_abs;
    let (monotone_ok, monotone_route, monotone_witness) = if exact_ok {
        (true, MonotoneRoute::RootIsolation, None)
    } else {
        let fd = |x: T| dp.eval(x);
        let (wx, wv) = refined_minimum(
            &fd,
            x_star,
            x_star + grid.span_above,
            grid.initial_points,
            grid.min_spacing,
            near,
        );
        if wv >= -tol_abs {
            (true, MonotoneRoute::Grid, None)
        } else {
            (false, MonotoneRoute::Grid, Some((wx, wv)))
        }
    };

    // Dominance V >= g on [0, x*].
    let fdom = |x: T| pv.eval(x) - reward_g(&ar.reward, x);
    let (dom_x, dom_margin) = refined_minimum(
        &fdom,
        T::zero(),
        x_star,
        grid.initial_points,
        grid.min_spacing,
        near,
    );
    let dominance_ok = dom_margin >= -tol_abs;

    // Sufficient sign pattern: P <= 0 on [0, x*].
    let fsign = |x: T| -ar.averaging.eval(x);
    let (sign_x, sign_neg) = refined_minimum(
        &fsign,
        T::zero(),
        x_star,
        grid.initial_points,
        grid.min_spacing,
        near,
    );
    let corollary_sign_ok = sign_neg >= -tol_abs;

    // Spot-check the exponential branch against the direct expectation.
    let mut branch_consistency_ok = true;
    for frac in [0.25, 0.5, 0.75] {
        let x = x_star * T::real(frac);
        let direct = expectation_above(&ar.averaging, law, x, x_star);
        let branch = pv.eval(x);
        let rel = T::real(1e-10) * (T::one() + direct.abs());
        if (direct - branch).abs() > rel {
            branch_consistency_ok = false;
        }
    }

    VerificationReport {
        monotone_ok,
        monotone_route,
        monotone_witness,
        dominance_ok,
        dominance_worst_point: dom_x,
        dominance_worst_margin: dom_margin,
        corollary_sign_ok,
        corollary_worst_point: sign_x,
        corollary_worst_value: -sign_neg,
        branch_consistency_ok,
        tol_abs,
        grid: *grid,
        threshold_residual: ar.residual,
        isolation_width: ar.isolation_width,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::solve_threshold;
    use crate::levy::LevyModel;

    type P = Polynomial<f64>;

    fn unit_exp() -> SupremumLaw<f64> {
        SupremumLaw::exponential(1.0).unwrap()
    }

    fn kou_law() -> SupremumLaw<f64> {
        LevyModel::kou(2.0, 1.0, 1.0, 2.0, 1.0, 2.0)
            .unwrap()
            .supremum_law(6.0)
            .unwrap()
    }

    fn kou_quartic() -> P {
        P::new(vec![0.0, -6.0, 11.0, -6.0, 1.0])
    }

    #[test]
    fn reward_g_examples() {
        let p = P::from_roots(&[0.0, 1.0, 2.0, 3.0]);
        assert!((reward_g(&p, 1.5) - 0.5625).abs() < 1e-12);
        assert_eq!(reward_g(&p, -1.0), 0.0);
        assert_eq!(reward_g(&P::monomial(1.0, 3), 2.0), 8.0);
        // negative polynomial values clip to zero
        assert_eq!(reward_g(&p, 2.5), 0.0);
    }

    #[test]
    fn tail_integral_closed_forms() {
        // int_0^inf z e^{-z} dz = 1
        assert!((exp_tail_integral(1, 1.0_f64, 0.0) - 1.0).abs() < 1e-15);
        // int_1^inf e^{-2z} dz = e^{-2}/2
        assert!((exp_tail_integral(0, 2.0, 1.0) - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        // int_c^inf z^2 e^{-z} dz = e^{-c} (c^2 + 2c + 2)
        let c_val = 1.7_f64;
        let expect = (-c_val).exp() * (c_val * c_val + 2.0 * c_val + 2.0);
        assert!((exp_tail_integral(2, 1.0, c_val) - expect).abs() < 1e-14);
        // large rate*c underflows gracefully to ~0
        assert!(exp_tail_integral(4, 3.0, 300.0) >= 0.0);
        assert!(exp_tail_integral(4, 3.0, 300.0) < 1e-300);
    }

    #[test]
    fn expectation_above_total_mass() {
        let one = P::constant(1.0);
        let v = expectation_above(&one, &unit_exp(), 0.0, 0.0);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn expectation_above_recovers_reward_above_threshold() {
        // With the averaging polynomial and a <= x the indicator is certain
        // and E P(x + M) = p(x).
        let law = kou_law();
        let p = kou_quartic();
        let sol = solve_threshold(&p, &law).unwrap();
        for x in [0.0, 1.0, 2.5, 4.0] {
            let v = expectation_above(&sol.averaging, &law, x, x - 1.0);
            assert!((v - p.eval(x)).abs() < 1e-9 * (1.0 + p.eval(x).abs()), "x = {x}");
        }
    }

    #[test]
    fn build_value_brownian_quadratic() {
        // a = 0 on Brownian r = 1/2: x* = 2, below-threshold branch 4 e^{x-2}
        let law = unit_exp();
        let sol = solve_threshold(&P::monomial(1.0, 2), &law).unwrap();
        let pv = build_value(&sol, &law);
        assert_eq!(pv.exp_branch.len(), 1);
        assert!((pv.exp_branch[0].coeff - 4.0).abs() < 1e-9);
        assert!((pv.exp_branch[0].rate - 1.0).abs() < 1e-12);
        assert!((pv.eval(0.0) - 4.0 * (-2.0f64).exp()).abs() < 1e-9);
        // continuity at the threshold from both branches
        assert!((pv.exp_branch_at_threshold() - pv.poly_branch.eval(pv.x_star)).abs() < 1e-9);
        assert!((pv.eval(pv.x_star) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn exp_branch_matches_expectation_above() {
        let law = kou_law();
        let sol = solve_threshold(&kou_quartic(), &law).unwrap();
        let pv = build_value(&sol, &law);
        for x in [0.0, 1.0, 2.0, 3.5, 4.3] {
            let direct = expectation_above(&sol.averaging, &law, x, sol.x_star);
            let branch = pv.eval(x);
            assert!(
                (direct - branch).abs() <= 1e-10 * (1.0 + direct.abs()),
                "x = {x}: {direct} vs {branch}"
            );
        }
    }

    #[test]
    fn verify_brownian_cubic_all_conditions() {
        let law = unit_exp();
        let sol = solve_threshold(&P::monomial(1.0, 3), &law).unwrap();
        let pv = build_value(&sol, &law);
        let report = verify(&sol, &law, &pv, &GridSpec::default());
        assert!(report.monotone_ok);
        assert_eq!(report.monotone_route, MonotoneRoute::RootIsolation);
        assert!(report.dominance_ok);
        assert!(report.corollary_sign_ok);
        assert!(report.branch_consistency_ok);
        assert!(report.certified());
    }

    #[test]
    fn verify_quadratics_sign_pattern() {
        // The averaging parabola is x^2 + (a-2)x - a with P(0) = -a: the
        // sufficient sign condition fails exactly for a < 0, while dominance
        // holds for every a.
        let law = unit_exp();
        for (a, sign_ok) in [(-1.0, false), (0.0, true), (1.0, true)] {
            let sol = solve_threshold(&P::new(vec![0.0, a, 1.0]), &law).unwrap();
            let pv = build_value(&sol, &law);
            let report = verify(&sol, &law, &pv, &GridSpec::default());
            assert!(report.dominance_ok, "a = {a}");
            assert!(report.monotone_ok, "a = {a}");
            assert_eq!(report.corollary_sign_ok, sign_ok, "a = {a}");
            assert!(report.certified(), "a = {a}");
        }
    }

    #[test]
    fn verify_kou_quartic_certification_conditions() {
        let law = kou_law();
        let sol = solve_threshold(&kou_quartic(), &law).unwrap();
        let pv = build_value(&sol, &law);
        let report = verify(&sol, &law, &pv, &GridSpec::default());
        assert!(report.monotone_ok);
        assert!(report.dominance_ok);
        assert!(report.certified());
        // P(0) = b_0 > 0 here, so the sufficient sign shortcut fails even
        // though the solution is certified.
        assert!(!report.corollary_sign_ok);
        assert!(report.corollary_worst_value > 0.0);
    }

    #[test]
    fn value_equals_reward_above_threshold() {
        let law = kou_law();
        let sol = solve_threshold(&kou_quartic(), &law).unwrap();
        let pv = build_value(&sol, &law);
        for i in 0..50 {
            let x = sol.x_star + 0.2 * i as f64;
            assert_eq!(pv.eval(x), sol.reward.eval(x));
            assert!(pv.eval(x) >= reward_g(&sol.reward, x) - 1e-12);
        }
    }
}
