//! Scale functions of the chain: the W and Z recursions, grid evaluation,
//! an independent integro-difference form of the same recursion, and the
//! Laplace-transform identity used to validate tables end to end.

use crate::chain::{psi_h_real, ChainModel, GammaCoefficients, Scheme};
use crate::error::{Error, Result};

/// Values above this abort the recursion; q-scale functions grow like
/// e^(Phi(q) x), so hitting it means the requested range is out of reach
/// in f64 and the caller should shrink n or rescale.
const OVERFLOW_GUARD: f64 = 1e300;

#[derive(Clone, Copy, Debug, Default)]
pub struct RecursionOptions {
    /// Use compensated (Kahan) accumulation in the convolution sums. Off by
    /// default; the plain order is part of the reproducibility contract.
    pub compensated_sum: bool,
}

/// Tables of the chain scale functions on the grid {0, h, ..., nh}.
///
/// `w[m]` approximates W(m h) (up to the delta0 index shift applied by
/// [`evaluate_w_at`]); `ztilde[m]` approximates Z(m h) - 1. Either vector
/// may be empty when only the other was requested.
#[derive(Clone, Debug)]
pub struct ScaleTable {
    pub h: f64,
    pub q: f64,
    pub n: usize,
    pub w: Vec<f64>,
    pub ztilde: Vec<f64>,
    pub delta0: u8,
    pub scheme: Scheme,
}

impl ScaleTable {
    /// Z value at grid index m: 1 + ztilde[m].
    pub fn z_at_index(&self, m: usize) -> Result<f64> {
        let zt = self
            .ztilde
            .get(m)
            .ok_or_else(|| Error::InvalidArgument(format!("index {m} outside Z table")))?;
        Ok(1.0 + zt)
    }

    fn require_w(&self) -> Result<&[f64]> {
        if self.w.is_empty() {
            return Err(Error::InvalidArgument(
                "table carries no W values; compute the W part first".into(),
            ));
        }
        Ok(&self.w)
    }
}

fn check_inputs(gamma: &GammaCoefficients, q: f64, n: usize) -> Result<()> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "discount rate q must be finite and nonnegative, got {q}"
        )));
    }
    // one spare level guarantees the deepest used coefficient was really
    // built rather than silently defaulted
    if gamma.gamma_down.len() < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "gamma depth {} too small for n = {n}; need at least n + 1",
            gamma.gamma_down.len()
        )));
    }
    if !(gamma.gamma_up > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "up rate must be positive, got {}",
            gamma.gamma_up
        )));
    }
    Ok(())
}

fn coefficients(gamma: &GammaCoefficients, q: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (q + gamma.gamma_down[i]) / gamma.gamma_up)
        .collect()
}

/// sum_j xs[j] * cs_rev[len-1-j], accumulating from the smallest table
/// entries first. The plain path is the byte-reproducible default.
fn convolve(xs: &[f64], cs: &[f64], compensated: bool) -> f64 {
    debug_assert_eq!(xs.len(), cs.len());
    if compensated {
        let mut s = 0.0;
        let mut c = 0.0;
        for (x, k) in xs.iter().zip(cs.iter().rev()) {
            let y = x * k - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    } else {
        xs.iter().zip(cs.iter().rev()).map(|(x, k)| x * k).sum()
    }
}

/// W recursion: W[0] = 1/(h gamma_up),
/// W[m+1] = W[0] + sum_{k=1}^{m+1} W[m+1-k] (q + gamma_down[k]) / gamma_up.
pub fn compute_w(gamma: &GammaCoefficients, q: f64, n: usize) -> Result<ScaleTable> {
    compute_w_with(gamma, q, n, RecursionOptions::default())
}

pub fn compute_w_with(
    gamma: &GammaCoefficients,
    q: f64,
    n: usize,
    opts: RecursionOptions,
) -> Result<ScaleTable> {
    check_inputs(gamma, q, n)?;
    let coeff = coefficients(gamma, q, n);
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0 / (gamma.h * gamma.gamma_up));
    for m1 in 1..=n {
        let s = convolve(&w[..m1], &coeff[..m1], opts.compensated_sum);
        let next = w[0] + s;
        if !next.is_finite() || next > OVERFLOW_GUARD {
            return Err(Error::NumericalRange(format!(
                "W exceeded {OVERFLOW_GUARD:.0e} at grid index {m1} (x = {}); \
                 shorten the range or refine the query",
                m1 as f64 * gamma.h
            )));
        }
        w.push(next);
    }
    Ok(ScaleTable {
        h: gamma.h,
        q,
        n,
        w,
        ztilde: Vec::new(),
        delta0: gamma.delta0,
        scheme: gamma.scheme,
    })
}

/// Z - 1 recursion: Ztilde[0] = 0,
/// Ztilde[m+1] = (m+1) q / gamma_up
///             + sum_{k=1}^{m} Ztilde[m+1-k] (q + gamma_down[k]) / gamma_up.
pub fn compute_z(gamma: &GammaCoefficients, q: f64, n: usize) -> Result<ScaleTable> {
    compute_z_with(gamma, q, n, RecursionOptions::default())
}

pub fn compute_z_with(
    gamma: &GammaCoefficients,
    q: f64,
    n: usize,
    opts: RecursionOptions,
) -> Result<ScaleTable> {
    check_inputs(gamma, q, n)?;
    let coeff = coefficients(gamma, q, n);
    let mut zt = Vec::with_capacity(n + 1);
    zt.push(0.0);
    for m1 in 1..=n {
        let s = convolve(
            &zt[1..m1],
            &coeff[..m1.saturating_sub(1)],
            opts.compensated_sum,
        );
        let next = (m1 as f64) * q / gamma.gamma_up + s;
        if !next.is_finite() || next > OVERFLOW_GUARD {
            return Err(Error::NumericalRange(format!(
                "Z exceeded {OVERFLOW_GUARD:.0e} at grid index {m1}"
            )));
        }
        zt.push(next);
    }
    Ok(ScaleTable {
        h: gamma.h,
        q,
        n,
        w: Vec::new(),
        ztilde: zt,
        delta0: gamma.delta0,
        scheme: gamma.scheme,
    })
}

/// Both parts on one grid.
pub fn compute_table(gamma: &GammaCoefficients, q: f64, n: usize) -> Result<ScaleTable> {
    let mut t = compute_w(gamma, q, n)?;
    let z = compute_z(gamma, q, n)?;
    t.ztilde = z.ztilde;
    Ok(t)
}

/// Rebuild Z - 1 from the W part through the cumulative identity
/// Ztilde[m] = q h sum_{j<m} W[j]; an independent route used to cross-check
/// the Z recursion.
pub fn z_tilde_from_w(table: &ScaleTable) -> Result<Vec<f64>> {
    let w = table.require_w()?;
    let mut out = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    out.push(0.0);
    for wj in &w[..w.len() - 1] {
        acc += wj;
        out.push(table.q * table.h * acc);
    }
    Ok(out)
}

/// Table lookup at a continuous point x = m h, applying the delta0 index
/// shift: returns w[x/h - delta0]. Off-grid x is refused rather than
/// interpolated.
pub fn evaluate_w_at(table: &ScaleTable, x: f64) -> Result<f64> {
    let w = table.require_w()?;
    let ratio = x / table.h;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "x = {x} is not on the grid of step {}",
            table.h
        )));
    }
    let idx = m as i64 - table.delta0 as i64;
    if idx < 0 || idx as usize >= w.len() {
        return Err(Error::InvalidArgument(format!(
            "shifted index {idx} outside table of length {}",
            w.len()
        )));
    }
    Ok(w[idx as usize])
}

/// Z value at a continuous grid point x = m h. Z carries no index shift.
pub fn evaluate_z_at(table: &ScaleTable, x: f64) -> Result<f64> {
    if table.ztilde.is_empty() {
        return Err(Error::InvalidArgument(
            "table carries no Z values; compute the Z part first".into(),
        ));
    }
    let ratio = x / table.h;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "x = {x} is not on the grid of step {}",
            table.h
        )));
    }
    table.z_at_index(m as usize)
}

/// The same W values derived through the generator balance equation
/// W(x) = [1 + h down_local W(x-h) + h sum_{k=1}^{x/h} (T_k + q) W(x-kh)]
///        / (h up),
/// where T_k is the chain mass of (-inf, -(k-1/2)h). Algebraically equal to
/// [`compute_w`] but arithmetically independent of it.
pub fn ide_recursion_w(chain: &ChainModel, q: f64, n: usize) -> Result<Vec<f64>> {
    if chain.bins.len() < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "chain depth {} too small for n = {n}; need at least n + 1",
            chain.bins.len()
        )));
    }
    let tails = chain.tail_sums();
    let h = chain.h;
    let denom = h * chain.up_rate;
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0 / denom);
    for m in 1..=n {
        let mut s = 0.0;
        for k in 1..=m {
            s += (tails[k - 1] + q) * w[m - k];
        }
        let next = (1.0 + h * chain.down_rate_local * w[m - 1] + h * s) / denom;
        if !next.is_finite() || next > OVERFLOW_GUARD {
            return Err(Error::NumericalRange(format!(
                "W exceeded {OVERFLOW_GUARD:.0e} at grid index {m}"
            )));
        }
        w.push(next);
    }
    Ok(w)
}

/// Largest root of psi = q together with the achieved residual.
#[derive(Clone, Copy, Debug)]
pub struct PhiValue {
    pub q: f64,
    pub phi: f64,
    pub residual: f64,
}

/// Solve psi(beta) = q for the largest root Phi(q), beta >= 0.
///
/// psi is convex with psi(0) = 0, so the right branch is bracketed by the
/// convex minimum and an exponentially expanded upper bound, then bisected.
/// A final monotonicity probe guards against landing on the lower branch.
pub fn phi_root<F: Fn(f64) -> Result<f64>>(psi: F, q: f64) -> Result<PhiValue> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "discount rate q must be finite and nonnegative, got {q}"
        )));
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while psi(hi)? <= q {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NumericalRange(
                "failed to bracket Phi(q): psi never exceeded q".into(),
            ));
        }
    }
    // golden-section minimum of the convex psi on [0, hi]
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = psi(c)?;
    let mut fd = psi(d)?;
    for _ in 0..200 {
        if b - a <= 1e-13 * hi.max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = psi(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = psi(d)?;
        }
    }
    let mut lo = 0.5 * (a + b);
    if psi(lo)? > q {
        // the minimum sits numerically above q only when q = psi(0) = 0 and
        // psi is increasing from the start; the root is at the origin side
        lo = 0.0;
    }
    let mut hi2 = hi;
    for _ in 0..200 {
        if hi2 - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi2);
        if psi(mid)? > q {
            hi2 = mid;
        } else {
            lo = mid;
        }
    }
    let phi = 0.5 * (lo + hi2);
    let residual = psi(phi)? - q;
    if psi(phi + 1e-6)? < psi(phi)? {
        return Err(Error::NumericalRange(
            "psi is decreasing just right of the computed root; not the \
             largest root"
                .into(),
        ));
    }
    Ok(PhiValue { q, phi, residual })
}

/// Relative residual of the Laplace identity
/// int_0^inf e^(-beta x) W_h(x) dx = (e^(beta h)-1) / (beta h (psi_h - q))
/// with the step-function table on the left. The sum is truncated at n h and
/// completed with a geometric tail bound grown at rate Phi_h(q) + 0.05.
pub fn laplace_identity_check(table: &ScaleTable, chain: &ChainModel, beta: f64) -> Result<f64> {
    let w = table.require_w()?;
    if table.h != chain.h {
        return Err(Error::InvalidArgument(
            "table and chain use different steps".into(),
        ));
    }
    let phi_h = phi_root(|b| Ok(psi_h_real(chain, b)), table.q)?;
    if beta <= phi_h.phi + 0.1 {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} too close to Phi_h(q) = {}; need a 0.1 margin",
            phi_h.phi
        )));
    }
    let h = table.h;
    let r = (-beta * h).exp();
    let mut sum = 0.0;
    let mut rm = 1.0;
    for &wm in w {
        sum += wm * rm;
        rm *= r;
    }
    // geometric completion: W[n+j] <= W[n] e^((Phi_h + 0.05) j h)
    let growth = ((phi_h.phi + 0.05) * h).exp();
    let ratio = growth * r;
    let tail = w[w.len() - 1] * (rm / r) * ratio / (1.0 - ratio);
    let lhs = (sum + tail) * (-(-beta * h).exp_m1()) / beta;
    let rhs = (beta * h).exp_m1() / (beta * h * (psi_h_real(chain, beta) - table.q));
    Ok((lhs - rhs).abs() / rhs.abs())
}
