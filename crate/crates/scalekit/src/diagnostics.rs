//! Small-jump activity diagnostics: how much mass, variation and variance
//! sits near 0, and a tail-index estimate for infinite-variation measures.

use crate::error::{Error, Result};
use crate::fit::fit_loglog;
use crate::measure::LevyMeasure;
use crate::process::LevyTriplet;

/// Coarse path regime of a process, driving the expected convergence rates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathClass {
    /// No jumps at all (Gaussian part only).
    BrownianOnly,
    /// Finitely many jumps on compacts.
    FiniteActivity,
    /// Infinitely many jumps but summable: kappa(0) < infinity.
    InfiniteActivityFiniteVariation,
    /// kappa(0) = infinity.
    InfiniteVariation,
}

pub fn path_class(triplet: &LevyTriplet) -> PathClass {
    let m = triplet.measure();
    if m.is_zero() {
        PathClass::BrownianOnly
    } else if m.activity_finite() {
        PathClass::FiniteActivity
    } else if m.kappa_zero_finite() {
        PathClass::InfiniteActivityFiniteVariation
    } else {
        PathClass::InfiniteVariation
    }
}

/// Per-delta small-jump functionals plus a fitted tail index.
///
/// For each delta: kappa = int_[-1,-delta) |y|, xi = int_[-delta,0) y^2,
/// zeta = delta * kappa, gamma_small = delta^2 * mass([-1,-delta)), and
/// small_tail = mass([-1,-delta)) itself.
///
/// When kappa(0) = infinity, `epsilon` estimates the index in
/// mass([-1,-delta)) ~ C delta^(-epsilon) by a log-log fit, with 1 - r^2 as
/// `epsilon_residual`. The two regularity booleans are finite-sample proxies:
/// delta^epsilon * mass([-1,-delta)) should stay bounded above
/// (`bounded_above`) and away from 0 (`bounded_below`) over the probed
/// deltas; a factor-4 band around the median is accepted.
#[derive(Clone, Debug)]
pub struct SmallJumpDiagnostics {
    pub deltas: Vec<f64>,
    pub kappa: Vec<f64>,
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub gamma_small: Vec<f64>,
    pub small_tail: Vec<f64>,
    pub kappa_zero_finite: bool,
    pub activity_finite: bool,
    pub epsilon: Option<f64>,
    pub epsilon_residual: Option<f64>,
    pub bounded_above: Option<bool>,
    pub bounded_below: Option<bool>,
}

/// Probe the measure near 0 on a descending grid of deltas in (0, 1).
pub fn small_jump_diagnostics(
    measure: &LevyMeasure,
    deltas: &[f64],
) -> Result<SmallJumpDiagnostics> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("need at least one delta".into()));
    }
    if deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::InvalidArgument(
            "deltas must lie strictly inside (0, 1)".into(),
        ));
    }
    if deltas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument(
            "deltas must be strictly descending".into(),
        ));
    }
    let mut kappa = Vec::with_capacity(deltas.len());
    let mut xi = Vec::with_capacity(deltas.len());
    let mut zeta = Vec::with_capacity(deltas.len());
    let mut gamma_small = Vec::with_capacity(deltas.len());
    let mut small_tail = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let k = measure.kappa(d)?;
        let x = measure.second_moment_zero(d)?;
        let tail = measure.interval_mass(-1.0, -d)?;
        kappa.push(k);
        xi.push(x);
        zeta.push(d * k);
        gamma_small.push(d * d * tail);
        small_tail.push(tail);
    }

    let mut out = SmallJumpDiagnostics {
        deltas: deltas.to_vec(),
        kappa,
        xi,
        zeta,
        gamma_small,
        small_tail,
        kappa_zero_finite: measure.kappa_zero_finite(),
        activity_finite: measure.activity_finite(),
        epsilon: None,
        epsilon_residual: None,
        bounded_above: None,
        bounded_below: None,
    };

    let fit_usable =
        !out.kappa_zero_finite && deltas.len() >= 3 && out.small_tail.iter().all(|&t| t > 0.0);
    if fit_usable {
        let f = fit_loglog(deltas, &out.small_tail)?;
        let eps = -f.slope;
        out.epsilon = Some(eps);
        out.epsilon_residual = Some(1.0 - f.r_squared);
        let scaled: Vec<f64> = deltas
            .iter()
            .zip(&out.small_tail)
            .map(|(&d, &t)| d.powf(eps) * t)
            .collect();
        let mut sorted = scaled.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let median = sorted[sorted.len() / 2];
        let max = sorted[sorted.len() - 1];
        let min = sorted[0];
        out.bounded_above = Some(max <= 4.0 * median);
        out.bounded_below = Some(min >= median / 4.0);
    }
    Ok(out)
}
