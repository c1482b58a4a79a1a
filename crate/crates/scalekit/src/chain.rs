//! Discretization of a triplet into an upwardly skip-free continuous-time
//! Markov chain on the grid h Z.
//!
//! Small jumps inside (-h/2, 0) are folded into the diffusion-like local
//! rates through their truncated second moment c0 and mean mu_h; jumps at
//! or below -h/2 are binned onto grid points by half-open cells
//! A(-kh) = [-(k+1/2)h, -(k-1/2)h). Everything below the deepest bin is
//! kept as one lump, assigned to the node one step further down.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::cexpm1;
use crate::process::LevyTriplet;

/// Local-rate scheme. `Central` (Gaussian part present) splits the local
/// drift across up and down rates; `UpwindDrift` (no Gaussian part) puts
/// the whole drift on the up rate, keeping rates admissible for small
/// drift-to-variance ratios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Central,
    UpwindDrift,
}

/// Pick the scheme from the triplet: central differencing when a Gaussian
/// part exists, upwind drift otherwise. Also reports the cutoff V in use.
pub fn select_scheme(triplet: &LevyTriplet) -> (Scheme, u8) {
    let scheme = if triplet.sigma2() > 0.0 {
        Scheme::Central
    } else {
        Scheme::UpwindDrift
    };
    (scheme, triplet.truncation_v())
}

/// Chain generator data for one step size h.
#[derive(Clone, Debug)]
pub struct ChainModel {
    pub h: f64,
    pub scheme: Scheme,
    pub v: u8,
    /// Truncated second moment int_[-h/2,0) y^2 restricted to [-V, 0).
    pub c0h: f64,
    /// Compensator mean absorbed by binning: sum over bins of
    /// (-kh) mass(A(-kh) intersected with [-V, 0)).
    pub mu_h: f64,
    /// bins[k-1] = mass(A(-kh)) for k = 1..=depth.
    pub bins: Vec<f64>,
    /// Mass strictly below -(depth+1/2)h, lumped at -(depth+1)h.
    pub tail_beyond: f64,
    /// Rate of the +h move.
    pub up_rate: f64,
    /// Local (diffusion/drift) part of the -h move, before jump bins.
    pub down_rate_local: f64,
    /// Index shift of the triplet, carried into scale tables.
    pub delta0: u8,
    /// Non-fatal modelling notes, e.g. atoms sitting on bin boundaries.
    pub warnings: Vec<String>,
}

/// Build the chain for step h with `depth` explicit jump bins.
///
/// Fails when h is inadmissible: the scheme needs its local rates
/// nonnegative, which bounds h in terms of the drift gap mu - mu_h and the
/// truncated variance. The error names the offending quantity.
pub fn build_chain(triplet: &LevyTriplet, h: f64, depth: usize) -> Result<ChainModel> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive and finite, got {h}"
        )));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let (scheme, v) = select_scheme(triplet);
    let measure = triplet.measure();
    let sigma2 = triplet.sigma2();
    let mu = triplet.mu();

    let mut warnings = Vec::new();
    for a in measure.atoms() {
        let m = -a.location / h + 0.5;
        if (m - m.round()).abs() <= 1e-12 * m.abs().max(1.0) {
            warnings.push(format!(
                "atom at {} sits on a bin boundary for h = {h}; it lands in \
                 the shallower bin by the half-open convention",
                a.location
            ));
        }
    }

    // small-jump moments only see the compensated region [-V, 0)
    let (c0h, mu_h) = if v == 1 {
        // the compensated region stops at -1, so c0h integrates over
        // [-min(h/2, 1), 0)
        let cutoff = (0.5 * h).min(1.0);
        let c0h = measure.second_moment_interval(-cutoff, 0.0)?;
        let mut mu_h = 0.0;
        let mut k = 1usize;
        loop {
            let lo = -((k as f64 + 0.5) * h);
            let hi = -((k as f64 - 0.5) * h);
            if hi <= -1.0 {
                break;
            }
            let mass = measure.interval_mass(lo.max(-1.0), hi)?;
            mu_h += -(k as f64) * h * mass;
            if lo <= -1.0 {
                break;
            }
            k += 1;
        }
        (c0h, mu_h)
    } else {
        (0.0, 0.0)
    };

    let drift_gap = mu - mu_h;
    let (up_rate, down_rate_local) = match scheme {
        Scheme::Central => {
            let diffuse = (sigma2 + c0h) / (2.0 * h * h);
            let convect = drift_gap / (2.0 * h);
            (diffuse + convect, diffuse - convect)
        }
        Scheme::UpwindDrift => {
            let diffuse = c0h / (2.0 * h * h);
            (drift_gap / h + diffuse, diffuse)
        }
    };
    if scheme == Scheme::UpwindDrift && drift_gap < 0.0 {
        return Err(Error::InadmissibleStep {
            h,
            reason: format!(
                "drift gap mu - mu_h = {drift_gap:.6e} is negative; the binned \
                 compensator mean mu_h = {mu_h:.6e} exceeds mu at this step"
            ),
        });
    }
    if down_rate_local < 0.0 {
        return Err(Error::InadmissibleStep {
            h,
            reason: format!(
                "local down rate {down_rate_local:.6e} is negative; drift term \
                 {:.6e} dominates the diffusion term {:.6e}",
                drift_gap / (2.0 * h),
                (sigma2 + c0h) / (2.0 * h * h)
            ),
        });
    }
    if up_rate <= 0.0 {
        return Err(Error::InadmissibleStep {
            h,
            reason: format!("up rate {up_rate:.6e} is not positive"),
        });
    }

    let mut bins = Vec::with_capacity(depth);
    for k in 1..=depth {
        let lo = -((k as f64 + 0.5) * h);
        let hi = -((k as f64 - 0.5) * h);
        bins.push(measure.interval_mass(lo, hi)?);
    }
    let tail_beyond = measure.tail_mass((depth as f64 + 0.5) * h)?;

    Ok(ChainModel {
        h,
        scheme,
        v,
        c0h,
        mu_h,
        bins,
        tail_beyond,
        up_rate,
        down_rate_local,
        delta0: triplet.delta0(),
        warnings,
    })
}

impl ChainModel {
    /// Cumulative jump mass at or below level k: T[k-1] = sum of bins
    /// k..=depth plus the beyond-depth lump, so T[k-1] equals the chain's
    /// mass of (-inf, -(k-1/2)h).
    pub fn tail_sums(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.bins.len()];
        let mut acc = self.tail_beyond;
        for k in (0..self.bins.len()).rev() {
            acc += self.bins[k];
            t[k] = acc;
        }
        t
    }

    /// Total rate of downward moves of exactly k steps, k >= 1.
    pub fn down_rate(&self, k: usize) -> f64 {
        let tails = self.tail_sums();
        if k == 1 {
            self.down_rate_local + tails[0]
        } else {
            tails[k - 1]
        }
    }
}

/// Generator coefficients consumed by the scale recursions:
/// gamma_up is the +h rate, gamma_down[k-1] the exact-(-kh) rate.
#[derive(Clone, Debug)]
pub struct GammaCoefficients {
    pub h: f64,
    pub gamma_up: f64,
    pub gamma_down: Vec<f64>,
    /// Recovered diffusion scale sigma~^2 = sigma^2 + c0h over 2h^2 terms,
    /// reported in natural units (same normalization as the rates).
    pub sigma_tilde2: f64,
    /// Recovered drift scale.
    pub mu_tilde: f64,
    pub scheme: Scheme,
    pub delta0: u8,
}

/// Extract gamma coefficients down to `depth` levels (depth <= chain depth).
pub fn gamma_coefficients(chain: &ChainModel, depth: usize) -> Result<GammaCoefficients> {
    if depth == 0 || depth > chain.bins.len() {
        return Err(Error::InvalidArgument(format!(
            "requested gamma depth {depth}, chain carries {} bins",
            chain.bins.len()
        )));
    }
    let tails = chain.tail_sums();
    let mut gamma_down = Vec::with_capacity(depth);
    gamma_down.push(chain.down_rate_local + tails[0]);
    for k in 2..=depth {
        gamma_down.push(tails[k - 1]);
    }
    let (sigma_tilde2, mu_tilde) = match chain.scheme {
        Scheme::Central => (
            0.5 * (chain.up_rate + chain.down_rate_local),
            0.5 * (chain.up_rate - chain.down_rate_local),
        ),
        Scheme::UpwindDrift => (
            chain.down_rate_local,
            0.5 * (chain.up_rate - chain.down_rate_local),
        ),
    };
    Ok(GammaCoefficients {
        h: chain.h,
        gamma_up: chain.up_rate,
        gamma_down,
        sigma_tilde2,
        mu_tilde,
        scheme: chain.scheme,
        delta0: chain.delta0,
    })
}

/// Laplace exponent of the chain (with the beyond-depth lump placed at
/// -(depth+1)h):
/// psi_h(beta) = up (e^(beta h)-1) + down_local (e^(-beta h)-1)
///             + sum_k bins[k-1] (e^(-beta k h)-1)
///             + tail (e^(-beta (depth+1) h)-1).
pub fn psi_h(chain: &ChainModel, beta: Complex64) -> Complex64 {
    let h = chain.h;
    let mut total = chain.up_rate * cexpm1(beta * h) + chain.down_rate_local * cexpm1(-beta * h);
    for (i, &c) in chain.bins.iter().enumerate() {
        if c != 0.0 {
            total += c * cexpm1(-beta * ((i + 1) as f64) * h);
        }
    }
    if chain.tail_beyond != 0.0 {
        total += chain.tail_beyond * cexpm1(-beta * ((chain.bins.len() + 1) as f64) * h);
    }
    total
}

/// Real-axis version of [`psi_h`].
pub fn psi_h_real(chain: &ChainModel, beta: f64) -> f64 {
    let h = chain.h;
    let mut total =
        chain.up_rate * (beta * h).exp_m1() + chain.down_rate_local * (-beta * h).exp_m1();
    for (i, &c) in chain.bins.iter().enumerate() {
        if c != 0.0 {
            total += c * (-beta * ((i + 1) as f64) * h).exp_m1();
        }
    }
    if chain.tail_beyond != 0.0 {
        total += chain.tail_beyond * (-beta * ((chain.bins.len() + 1) as f64) * h).exp_m1();
    }
    total
}

/// Largest admissible step among strictly descending candidates.
pub fn max_admissible_h(triplet: &LevyTriplet, candidates: &[f64]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate list".into()));
    }
    if candidates.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument(
            "candidates must be strictly descending".into(),
        ));
    }
    let mut last_err = None;
    for &h in candidates {
        match build_chain(triplet, h, 1) {
            Ok(_) => return Ok(h),
            Err(e @ Error::InadmissibleStep { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("loop ran at least once"))
}
