//! Quantities built on top of a scale table: two-sided exit probabilities,
//! the density of the deficit at ruin, the killing function of a
//! continuous-state branching process with immigration, and small grid
//! functionals. All formulas read the table unshifted; they are identities
//! of the approximating chain itself.

use crate::chain::Scheme;
use crate::error::{Error, Result};
use crate::scale::ScaleTable;

fn grid_index(table: &ScaleTable, x: f64, what: &str) -> Result<usize> {
    let ratio = x / table.h;
    let m = ratio.round();
    if !(x >= 0.0) || (ratio - m).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "{what} = {x} is not on the grid of step {}",
            table.h
        )));
    }
    let i = m as usize;
    if i >= table.w.len() {
        return Err(Error::InvalidArgument(format!(
            "{what} = {x} lies beyond the table (length {})",
            table.w.len()
        )));
    }
    Ok(i)
}

/// Probability that the chain started at x leaves [0, a] at the top:
/// W(x) / W(a), exact for the chain.
pub fn exit_ratio(table: &ScaleTable, x: f64, a: f64) -> Result<f64> {
    if table.w.is_empty() {
        return Err(Error::InvalidArgument("table carries no W values".into()));
    }
    if !(x <= a) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= x <= a, got x = {x}, a = {a}"
        )));
    }
    let i = grid_index(table, x, "x")?;
    let j = grid_index(table, a, "a")?;
    Ok(table.w[i] / table.w[j])
}

pub struct DeficitDensityRequest<'a> {
    /// Starting level in (0, a].
    pub x: f64,
    /// Upper exit barrier.
    pub a: f64,
    /// Deficit sizes y >= 0 at which to evaluate the density.
    pub y_grid: Vec<f64>,
    /// Jump density as a function of the jump magnitude u > 0.
    pub f: &'a dyn Fn(f64) -> f64,
}

#[derive(Clone, Debug)]
pub struct DeficitDensity {
    pub y: Vec<f64>,
    pub values: Vec<f64>,
    /// Coarse grids can push individual values below zero; they are
    /// reported as computed and flagged here instead of being clamped.
    pub has_negative: bool,
}

/// Density in y of the deficit at ruin, for the chain killed on leaving
/// [0, a], starting from x. Trapezoid-style half weights sit on both
/// boundary terms:
///
/// k(y) = h [ f(y+a) W(x) W(0) / (2 W(a))
///          + sum_{k=1}^{a/h-1} f(kh+y) W(a-kh) W(x) / W(a)
///          - sum_{k=1}^{x/h-1} W(x-kh) f(kh+y)
///          - W(0) f(x+y) / 2 ].
pub fn ruin_deficit_density(
    table: &ScaleTable,
    req: &DeficitDensityRequest,
) -> Result<DeficitDensity> {
    if table.w.is_empty() {
        return Err(Error::InvalidArgument("table carries no W values".into()));
    }
    if req.y_grid.is_empty() {
        return Err(Error::InvalidArgument("no deficit points".into()));
    }
    let i = grid_index(table, req.x, "x")?;
    let j = grid_index(table, req.a, "a")?;
    if i == 0 || i > j {
        return Err(Error::InvalidArgument(format!(
            "need 0 < x <= a on the grid, got x = {}, a = {}",
            req.x, req.a
        )));
    }
    let h = table.h;
    let w = &table.w;
    let f = req.f;
    let mut values = Vec::with_capacity(req.y_grid.len());
    let mut has_negative = false;
    for &y in &req.y_grid {
        if !(y >= 0.0 && y.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "deficit points must be finite and nonnegative, got {y}"
            )));
        }
        let mut v = f(y + req.a) * w[i] * w[0] / (2.0 * w[j]);
        for k in 1..j {
            v += f(k as f64 * h + y) * w[j - k] * w[i] / w[j];
        }
        for k in 1..i {
            v -= w[i - k] * f(k as f64 * h + y);
        }
        v -= w[0] * f(req.x + y) / 2.0;
        let kv = h * v;
        if !kv.is_finite() {
            return Err(Error::NumericalRange(format!(
                "deficit density overflowed at y = {y}"
            )));
        }
        if kv < 0.0 {
            has_negative = true;
        }
        values.push(kv);
    }
    Ok(DeficitDensity {
        y: req.y_grid.clone(),
        values,
        has_negative,
    })
}

/// Finite immigration measure w e^(-r y) dy on (0, inf), with closed-form
/// interval and tail masses.
#[derive(Clone, Copy, Debug)]
pub struct ImmigrationMeasure {
    weight: f64,
    rate: f64,
}

impl ImmigrationMeasure {
    pub fn exponential(weight: f64, rate: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "immigration weight and rate must be positive and finite, \
                 got {weight} and {rate}"
            )));
        }
        Ok(ImmigrationMeasure { weight, rate })
    }

    /// Mass of [a, b), 0 <= a < b <= inf.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        let e = |t: f64| {
            if t.is_infinite() {
                0.0
            } else {
                (-self.rate * t).exp()
            }
        };
        self.weight / self.rate * (e(a) - e(b))
    }

    /// Mass of [t, inf).
    pub fn tail_mass(&self, t: f64) -> f64 {
        self.interval_mass(t, f64::INFINITY)
    }
}

#[derive(Clone, Debug)]
pub struct CbiK {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// The branching representation assumes unbounded variation or
    /// infinite small-jump activity (index shift 1); set when the table
    /// was built for a model without that property.
    pub delta0_warning: bool,
}

/// Killing function of the branching-with-immigration representation:
///
/// k(x) = b (W(x) - W(x-h)) / h + W(x-h) m[h/2, inf)
///      - sum_{k=1}^{x/h-1} W(x-(k+1)h) m[kh-h/2, kh+h/2).
pub fn cbi_k(table: &ScaleTable, b: f64, m: &ImmigrationMeasure, xs: &[f64]) -> Result<CbiK> {
    if table.w.is_empty() {
        return Err(Error::InvalidArgument("table carries no W values".into()));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "branching drift must be nonnegative and finite, got {b}"
        )));
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    let h = table.h;
    let w = &table.w;
    let tail = m.tail_mass(0.5 * h);
    let mut values = Vec::with_capacity(xs.len());
    for &x in xs {
        let i = grid_index(table, x, "x")?;
        if i == 0 {
            return Err(Error::InvalidArgument(
                "evaluation points must be at least one step above zero".into(),
            ));
        }
        let mut v = b * (w[i] - w[i - 1]) / h + w[i - 1] * tail;
        for k in 1..i {
            let kf = k as f64;
            v -= w[i - k - 1] * m.interval_mass((kf - 0.5) * h, (kf + 0.5) * h);
        }
        values.push(v);
    }
    Ok(CbiK {
        x: xs.to_vec(),
        values,
        delta0_warning: table.delta0 != 1,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DerivativeEstimate {
    pub value: f64,
    /// Backward differences of W are only first-order reliable without a
    /// Gaussian part; set when the table came from the drift-upwinded
    /// scheme.
    pub sigma_zero_warning: bool,
}

/// Backward-difference estimate of W'(x) from the table: (W(x) - W(x-h))/h.
/// Requires x >= 2h so the difference avoids the boundary cell.
pub fn derivative_estimate(table: &ScaleTable, x: f64) -> Result<DerivativeEstimate> {
    if table.w.is_empty() {
        return Err(Error::InvalidArgument("table carries no W values".into()));
    }
    let i = grid_index(table, x, "x")?;
    if i < 2 {
        return Err(Error::InvalidArgument(format!(
            "need x >= 2h for a derivative estimate, got x = {x}"
        )));
    }
    Ok(DerivativeEstimate {
        value: (table.w[i] - table.w[i - 1]) / table.h,
        sigma_zero_warning: table.scheme == Scheme::UpwindDrift,
    })
}

/// Riemann sum of a grid functional: sum_{k h < x} g(k h, W(k h)) h.
pub fn functional_sum(table: &ScaleTable, g: &dyn Fn(f64, f64) -> f64, x: f64) -> Result<f64> {
    if table.w.is_empty() {
        return Err(Error::InvalidArgument("table carries no W values".into()));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "upper limit must be positive and finite, got {x}"
        )));
    }
    let kmax = (x / table.h + 1e-9).floor() as usize;
    if kmax > table.w.len() {
        return Err(Error::InvalidArgument(format!(
            "upper limit {x} lies beyond the table"
        )));
    }
    let mut s = 0.0;
    for k in 0..kmax {
        s += g(k as f64 * table.h, table.w[k]) * table.h;
    }
    Ok(s)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, gamma_coefficients};
    use crate::reference::{bm, cp_unit};
    use crate::scale::compute_w;

    /// BM sigma^2 = 2, q = 0, h = 1/2: the table is exactly
    /// w[m] = (m+1)/2, the fixture behind the frozen hand values.
    fn bm_table() -> ScaleTable {
        let c = build_chain(&bm(2.0, 0.0), 0.5, 6).unwrap();
        let g = gamma_coefficients(&c, 6).unwrap();
        let t = compute_w(&g, 0.0, 5).unwrap();
        assert_eq!(t.w, vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        t
    }

    #[test]
    fn exit_ratio_reads_the_table_unshifted() {
        let t = bm_table();
        assert_eq!(exit_ratio(&t, 1.0, 2.0).unwrap(), 0.6);
        assert_eq!(exit_ratio(&t, 0.0, 2.0).unwrap(), 0.2);
        assert_eq!(exit_ratio(&t, 2.0, 2.0).unwrap(), 1.0);
        assert!(exit_ratio(&t, 2.0, 1.0).is_err());
        assert!(exit_ratio(&t, 0.3, 1.0).is_err());
    }

    #[test]
    fn deficit_density_matches_the_hand_unrolled_value() {
        let t = bm_table();
        let req = DeficitDensityRequest {
            x: 1.0,
            a: 2.0,
            y_grid: vec![0.0, 1.0],
            f: &|_| 1.0,
        };
        let d = ruin_deficit_density(&t, &req).unwrap();
        assert!((d.values[0] - 0.8).abs() < 1e-15, "{}", d.values[0]);
        assert_eq!(d.values[0], d.values[1], "constant f is y-independent");
        assert!(!d.has_negative);
        let bad = DeficitDensityRequest {
            x: 0.0,
            a: 2.0,
            y_grid: vec![0.0],
            f: &|_| 1.0,
        };
        assert!(ruin_deficit_density(&t, &bad).is_err());
    }

    #[test]
    fn negative_coarse_grid_values_are_flagged_not_clamped() {
        let t = ScaleTable {
            h: 1.0,
            q: 0.0,
            n: 2,
            w: vec![1.0, 0.1, 1.0],
            ztilde: vec![],
            delta0: 1,
            scheme: Scheme::Central,
        };
        let req = DeficitDensityRequest {
            x: 1.0,
            a: 2.0,
            y_grid: vec![0.5],
            f: &|_| 1.0,
        };
        let d = ruin_deficit_density(&t, &req).unwrap();
        assert!(d.values[0] < 0.0, "{}", d.values[0]);
        assert!(d.has_negative);
    }

    #[test]
    fn branching_killing_function_matches_the_hand_unrolled_value() {
        let t = bm_table();
        let m = ImmigrationMeasure::exponential(1.0, 1.0).unwrap();
        let k = cbi_k(&t, 1.0, &m, &[1.0]).unwrap();
        assert!(
            (k.values[0] - 1.6255836679062097877).abs() < 1e-15,
            "{}",
            k.values[0]
        );
        assert!(!k.delta0_warning, "Gaussian part present");
        assert!(cbi_k(&t, -1.0, &m, &[1.0]).is_err());
        assert!(cbi_k(&t, 1.0, &m, &[0.0]).is_err());
    }

    #[test]
    fn poisson_table_trips_the_shift_warning() {
        let c = build_chain(&cp_unit(), 0.5, 5).unwrap();
        let g = gamma_coefficients(&c, 5).unwrap();
        let t = compute_w(&g, 0.0, 4).unwrap();
        let m = ImmigrationMeasure::exponential(1.0, 1.0).unwrap();
        assert!(cbi_k(&t, 1.0, &m, &[1.0]).unwrap().delta0_warning);
    }

    #[test]
    fn immigration_masses_are_additive_and_closed_form() {
        let m = ImmigrationMeasure::exponential(1.0, 1.0).unwrap();
        let lhs = m.interval_mass(0.25, 0.75);
        assert!((lhs - ((-0.25f64).exp() - (-0.75f64).exp())).abs() < 1e-16);
        let add = m.interval_mass(0.1, 2.0) + m.tail_mass(2.0);
        assert!((add - m.tail_mass(0.1)).abs() < 1e-15);
        assert!(ImmigrationMeasure::exponential(0.0, 1.0).is_err());
        assert!(ImmigrationMeasure::exponential(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn derivative_estimate_is_exact_on_the_linear_table() {
        let t = bm_table();
        let d = derivative_estimate(&t, 2.0).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(!d.sigma_zero_warning);
        assert!(derivative_estimate(&t, 0.5).is_err());
        let c = build_chain(&cp_unit(), 0.5, 5).unwrap();
        let g = gamma_coefficients(&c, 5).unwrap();
        let t = compute_w(&g, 0.0, 4).unwrap();
        assert!(derivative_estimate(&t, 1.0).unwrap().sigma_zero_warning);
    }

    #[test]
    fn functional_sums_are_plain_riemann_sums() {
        let t = bm_table();
        let one = functional_sum(&t, &|_, _| 1.0, 2.0).unwrap();
        assert_eq!(one, 2.0);
        let s = functional_sum(&t, &|_, w| w, 1.0).unwrap();
        assert_eq!(s, 0.75);
        assert!(functional_sum(&t, &|_, _| 1.0, 50.0).is_err());
    }
}
