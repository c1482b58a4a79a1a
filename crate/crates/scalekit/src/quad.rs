//! Adaptive integration on possibly half-infinite intervals.
//!
//! A 15-point Gauss-Kronrod rule is applied per panel and the panel with the
//! largest error estimate is split first, so effort concentrates where the
//! integrand is rough (power-law spikes near 0, oscillating tails). Infinite
//! endpoints are mapped onto a finite interval before panelling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-15;
pub const DEFAULT_MAX_PANELS: usize = 10_000;

// 15-point Kronrod abscissae (positive half, symmetric rule). Odd indices are
// the embedded 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Tolerance and budget knobs for one integration call.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub rel_tol: f64,
    /// Absolute floor so that integrals which are genuinely zero terminate.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

struct Panel {
    err: f64,
    value: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on the error estimate; NaN sorts last and is caught earlier
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, guard: bool) -> (f64, f64) {
    // `guard` drops non-finite node values on panels already shrunk to the
    // f64 resolution limit around an integrable boundary singularity; the
    // lost sliver is below the rounding noise of the total
    let ev = |y: f64| {
        let v = f(y);
        if guard && !v.is_finite() {
            0.0
        } else {
            v
        }
    };
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = ev(center);
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = ev(center - x) + ev(center + x);
        res_k += WGK[j] * fsum;
        if j % 2 == 1 {
            res_g += WG[j / 2] * fsum;
        }
    }
    (res_k * half, ((res_k - res_g) * half).abs())
}

impl Quadrature {
    /// Integrate `f` over `[a, b]`. Either endpoint may be infinite; the
    /// improper directions are folded onto `(0, 1)` via y = u/(1-u).
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        if a > b {
            return Err(Error::InvalidArgument(format!(
                "integration bounds out of order: [{a}, {b}]"
            )));
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => self.refine(&f, a, b),
            (false, true) => {
                let g = |u: f64| {
                    let om = 1.0 - u;
                    f(b - u / om) / (om * om)
                };
                self.refine(&g, 0.0, 1.0)
            }
            (true, false) => {
                let g = |u: f64| {
                    let om = 1.0 - u;
                    f(a + u / om) / (om * om)
                };
                self.refine(&g, 0.0, 1.0)
            }
            (false, false) => Err(Error::InvalidArgument(
                "doubly infinite interval not supported".into(),
            )),
        }
    }

    /// Integrate with interior split points (used when the integrand has a
    /// known kink, e.g. the compensator cutoff).
    pub fn integrate_split<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<f64> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two split points".into(),
            ));
        }
        let mut total = 0.0;
        for w in points.windows(2) {
            total += self.integrate(&f, w[0], w[1])?;
        }
        Ok(total)
    }

    /// Integrate a complex-valued integrand by real and imaginary parts.
    pub fn integrate_complex<F: Fn(f64) -> Complex64>(
        &self,
        f: F,
        a: f64,
        b: f64,
    ) -> Result<Complex64> {
        let re = self.integrate(|y| f(y).re, a, b)?;
        let im = self.integrate(|y| f(y).im, a, b)?;
        Ok(Complex64::new(re, im))
    }

    fn refine<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<f64> {
        // a panel this small next to a singular endpoint cannot be resolved
        // further in f64, so non-finite node values may be dropped there
        let tiny = |lo: f64, hi: f64| hi - lo <= 1e-8 * (1.0 + lo.abs() + hi.abs());
        let (value, err) = gk15(f, a, b, false);
        if !value.is_finite() {
            return Err(Error::NumericalRange(
                "integrand produced a non-finite value".into(),
            ));
        }
        let mut heap = BinaryHeap::new();
        heap.push(Panel { err, value, a, b });
        let mut total = value;
        let mut total_err = err;
        while total_err > self.abs_tol.max(self.rel_tol * total.abs()) {
            if heap.len() >= self.max_panels {
                return Err(Error::QuadratureBudget(format!(
                    "error {total_err:.3e} after {} panels (target {:.3e})",
                    heap.len(),
                    self.abs_tol.max(self.rel_tol * total.abs())
                )));
            }
            let worst = heap.pop().expect("heap is nonempty while error > 0");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval no longer splittable in f64; accept its estimate
                total_err -= worst.err;
                heap.push(Panel { err: 0.0, ..worst });
                continue;
            }
            let (lv, le) = gk15(f, worst.a, mid, tiny(worst.a, mid));
            let (rv, re) = gk15(f, mid, worst.b, tiny(mid, worst.b));
            if !(lv.is_finite() && rv.is_finite()) {
                return Err(Error::NumericalRange(
                    "integrand produced a non-finite value".into(),
                ));
            }
            total += lv + rv - worst.value;
            total_err += le + re - worst.err;
            heap.push(Panel {
                err: le,
                value: lv,
                a: worst.a,
                b: mid,
            });
            heap.push(Panel {
                err: re,
                value: rv,
                a: mid,
                b: worst.b,
            });
        }
        Ok(total)
    }
}

/// One-shot helper with default settings.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    Quadrature::default().integrate(f, a, b)
}
