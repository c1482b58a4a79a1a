//! Grid-refinement experiments: sup-norm errors of scale tables against a
//! reference (closed form or a much finer self-benchmark), log-log rate
//! fits, and the convergence orders expected from the path class.

use crate::chain::{build_chain, gamma_coefficients};
use crate::diagnostics::PathClass;
use crate::error::{Error, Result};
use crate::fit::fit_loglog;
use crate::process::LevyTriplet;
use crate::reference::fine_grid_benchmark;
use crate::scale::{compute_table, evaluate_w_at, evaluate_z_at};
use rayon::prelude::*;

/// Where the reference values for an error sweep come from.
pub enum SweepOracle<'a> {
    /// Exact W and Z, evaluated pointwise.
    ClosedForm {
        w: &'a dyn Fn(f64) -> f64,
        z: &'a dyn Fn(f64) -> f64,
    },
    /// One much finer table of the same model; `h_bench` must be at least
    /// 16 times finer than the finest sweep step.
    SelfBenchmark { h_bench: f64 },
}

pub struct SweepRequest<'a> {
    pub label: String,
    pub q: f64,
    /// Evaluation points; each must sit on every grid in `hs`.
    pub points: Vec<f64>,
    /// Strictly decreasing steps, finest last.
    pub hs: Vec<f64>,
    pub oracle: SweepOracle<'a>,
}

/// Outcome of a log-log rate fit over (h, error) pairs.
#[derive(Clone, Copy, Debug)]
pub enum RateFit {
    /// All errors at zero: the scheme reproduces the reference exactly.
    Exact,
    Fit {
        slope: f64,
        intercept: f64,
        r_squared: f64,
        /// Coarsest points discarded (at most 2) to reach the asymptotic
        /// regime.
        dropped: usize,
    },
}

#[derive(Debug)]
pub struct SweepReport {
    pub label: String,
    pub q: f64,
    pub points: Vec<f64>,
    pub hs: Vec<f64>,
    /// Sup-norm error over `points` at each step.
    pub err_w: Vec<f64>,
    pub err_z: Vec<f64>,
    pub fit_w: RateFit,
    pub fit_z: RateFit,
    /// Geometric mean of successive error ratios err(2h)/err(h); None when
    /// some error vanishes.
    pub ratio_w: Option<f64>,
    pub ratio_z: Option<f64>,
}

fn geometric_ratio(errs: &[f64]) -> Option<f64> {
    if errs.len() < 2 || errs.iter().any(|&e| e <= 0.0) {
        return None;
    }
    let mut log_sum = 0.0;
    for w in errs.windows(2) {
        log_sum += (w[0] / w[1]).ln();
    }
    Some((log_sum / (errs.len() - 1) as f64).exp())
}

/// Fit error ~ C h^slope, discarding up to two coarsest points while the
/// fit quality stays below r^2 = 0.98. Zero errors mean the scheme is
/// exact; mixed zero and nonzero errors fit the nonzero part only.
pub fn fit_rate(hs: &[f64], errs: &[f64]) -> Result<RateFit> {
    if hs.len() != errs.len() || hs.len() < 2 {
        return Err(Error::InvalidArgument(
            "rate fit needs matching h and error vectors of length >= 2".into(),
        ));
    }
    let mut pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&h, &e)| (h, e))
        .collect();
    if pts.len() < 2 {
        return Ok(RateFit::Exact);
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut dropped = 0;
    loop {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let f = fit_loglog(&xs, &ys)?;
        if f.r_squared >= 0.98 || dropped == 2 || pts.len() <= 2 {
            return Ok(RateFit::Fit {
                slope: f.slope,
                intercept: f.intercept,
                r_squared: f.r_squared,
                dropped,
            });
        }
        pts.remove(0);
        dropped += 1;
    }
}

/// Convergence orders (W, Z) predicted for a path class. An infinite-
/// variation model needs its small-jump tail index epsilon in (1, 2).
pub fn rate_expectation(class: PathClass, epsilon: Option<f64>) -> Result<(f64, f64)> {
    match class {
        PathClass::BrownianOnly => Ok((2.0, 1.0)),
        PathClass::FiniteActivity | PathClass::InfiniteActivityFiniteVariation => Ok((1.0, 1.0)),
        PathClass::InfiniteVariation => {
            let eps = epsilon.ok_or_else(|| {
                Error::InvalidArgument(
                    "infinite-variation rate needs the small-jump index epsilon".into(),
                )
            })?;
            if !(eps > 1.0 && eps < 2.0) {
                return Err(Error::InvalidArgument(format!(
                    "small-jump index must lie in (1, 2), got {eps}"
                )));
            }
            Ok((2.0 - eps, 2.0 - eps))
        }
    }
}

/// Build tables at every step in `hs`, measure sup-norm deviations from the
/// oracle at `points`, and fit the refinement rates.
pub fn error_sweep(triplet: &LevyTriplet, req: &SweepRequest) -> Result<SweepReport> {
    if req.hs.is_empty() {
        return Err(Error::InvalidArgument("no steps to sweep".into()));
    }
    if req.hs.windows(2).any(|w| w[1] >= w[0]) || req.hs.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidArgument(
            "steps must be positive and strictly decreasing".into(),
        ));
    }
    if req.points.is_empty() {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    let mut xmax = 0.0f64;
    for &x in &req.points {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "evaluation points must be positive and finite, got {x}"
            )));
        }
        for &h in &req.hs {
            let r = x / h;
            if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "point {x} is off the grid of step {h}"
                )));
            }
        }
        xmax = xmax.max(x);
    }
    let finest = *req.hs.last().expect("nonempty");
    let (w_ref, z_ref) = match req.oracle {
        SweepOracle::ClosedForm { w, z } => (
            req.points.iter().map(|&x| w(x)).collect::<Vec<f64>>(),
            req.points.iter().map(|&x| z(x)).collect::<Vec<f64>>(),
        ),
        SweepOracle::SelfBenchmark { h_bench } => {
            if !(h_bench > 0.0) || h_bench * 16.0 > finest * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "benchmark step {h_bench} must be at least 16 times finer \
                     than the finest sweep step {finest}"
                )));
            }
            let b = fine_grid_benchmark(triplet, req.q, &req.points, h_bench)?;
            (b.w, b.z)
        }
    };
    // independent tables; results are positionally collected so thread
    // count never changes the output (the oracle itself is not Sync, so
    // only plain data crosses into the parallel region)
    let q = req.q;
    let points = &req.points;
    let errs = req
        .hs
        .par_iter()
        .map(|&h| {
            let n = (xmax / h).round() as usize;
            let chain = build_chain(triplet, h, n + 1)?;
            let gamma = gamma_coefficients(&chain, n + 1)?;
            let table = compute_table(&gamma, q, n)?;
            let mut ew = 0.0f64;
            let mut ez = 0.0f64;
            for (j, &x) in points.iter().enumerate() {
                ew = ew.max((evaluate_w_at(&table, x)? - w_ref[j]).abs());
                ez = ez.max((evaluate_z_at(&table, x)? - z_ref[j]).abs());
            }
            Ok((ew, ez))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (err_w, err_z): (Vec<f64>, Vec<f64>) = errs.into_iter().unzip();
    Ok(SweepReport {
        label: req.label.clone(),
        q: req.q,
        points: req.points.clone(),
        hs: req.hs.clone(),
        fit_w: fit_rate(&req.hs, &err_w)?,
        fit_z: fit_rate(&req.hs, &err_z)?,
        ratio_w: geometric_ratio(&err_w),
        ratio_z: geometric_ratio(&err_z),
        err_w,
        err_z,
    })
}
