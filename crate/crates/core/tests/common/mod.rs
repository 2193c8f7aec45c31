//! Shared oracles and generators for the integration suites.
//!
//! The quadrature here is the independent reference for every expectation
//! identity: it integrates against the mixture density directly and never
//! touches the averaging recursion or the closed-form tail integrals.

// Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use levystop_core::{LevyModel64, Polynomial64, SupremumLaw64};

/// Adaptive Simpson integration to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(m - a, fa, flm, fm);
        let right = simpson(b - m, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    // Seed adaptivity with a composite partition so that localized mass on a
    // long interval cannot be missed by the first three samples.
    const PANELS: usize = 64;
    let width = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + width * i as f64;
        let hi = if i == PANELS - 1 { b } else { lo + width };
        let m = 0.5 * (lo + hi);
        let (fa, fm, fb) = (f(lo), f(m), f(hi));
        let whole = simpson(hi - lo, fa, fm, fb);
        total += recurse(f, lo, fa, hi, fb, m, fm, whole, tol / PANELS as f64, 40);
    }
    total
}

/// Quadrature oracle for `E[ q(x + M) 1{x + M >= lower} ]` under the mixture
/// law of `M`.
pub fn expectation_by_quadrature(
    q: &Polynomial64,
    law: &SupremumLaw64,
    x: f64,
    lower: f64,
    tol: f64,
) -> f64 {
    let c = (lower - x).max(0.0);
    let cutoff = c + 120.0 / law.min_rate() + x.abs() + 20.0;
    integrate(&|z| q.eval(x + z) * law.density(z), c, cutoff, tol)
}

/// Quadrature oracle for the k-th moment of `M`.
pub fn moment_by_quadrature(law: &SupremumLaw64, k: usize, tol: f64) -> f64 {
    let cutoff = 120.0 / law.min_rate() + 20.0;
    integrate(&|z| z.powi(k as i32) * law.density(z), 0.0, cutoff, tol)
}

/// Map unit-cube draws to an admissible Kou model, its discount rate, and the
/// resulting two-term supremum law. Returns `None` when the draw lands on a
/// law outside the comfortable numeric range (slow rates inflate moments).
pub fn kou_from_unit(u: [f64; 7]) -> Option<(LevyModel64, f64, SupremumLaw64)> {
    let lerp = |lo: f64, hi: f64, t: f64| lo + (hi - lo) * t;
    let drift = lerp(-1.5, 2.5, u[0]);
    let sigma = lerp(0.7, 1.8, u[1]);
    let up_intensity = lerp(0.3, 1.5, u[2]);
    let up_rate = lerp(0.9, 3.5, u[3]);
    let down_intensity = lerp(0.3, 1.5, u[4]);
    let down_rate = lerp(0.9, 3.5, u[5]);
    let r = lerp(2.0, 8.0, u[6]);
    let model =
        LevyModel64::kou(drift, sigma, up_intensity, up_rate, down_intensity, down_rate).ok()?;
    let law = model.supremum_law(r).ok()?;
    if law.min_rate() < 0.5 {
        return None;
    }
    Some((model, r, law))
}

/// Map a unit draw to a single-exponential law with a comfortable rate.
pub fn exponential_from_unit(u: f64) -> SupremumLaw64 {
    SupremumLaw64::exponential(0.5 + 2.5 * u).expect("positive rate")
}

/// Monic reward of the given degree with zero constant term, coefficients
/// from unit draws mapped into [-3, 3].
pub fn reward_from_unit(degree: usize, u: &[f64]) -> Polynomial64 {
    assert!(degree >= 1 && u.len() >= degree.saturating_sub(1));
    let mut coeffs = vec![0.0; degree + 1];
    coeffs[degree] = 1.0;
    for k in 1..degree {
        coeffs[k] = -3.0 + 6.0 * u[k - 1];
    }
    Polynomial64::new(coeffs)
}

/// Tiny deterministic generator for the fixed-instance suites (acceptance
/// criteria 4 and 5 regenerate the identical instance set from one seed).
pub struct UnitRng(u64);

impl UnitRng {
    pub fn new(seed: u64) -> Self {
        UnitRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        // splitmix64
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}
