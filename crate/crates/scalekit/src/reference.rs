//! Closed-form scale functions for the two exactly solvable families
//! (Brownian motion with drift, unit-rate Poisson with unit drift), the
//! first-order error limits of the chain scheme on those families, the
//! worked model fixtures exercised by the test suite, and a fine-grid
//! self-benchmark for models without closed forms.

use crate::chain::{build_chain, gamma_coefficients};
use crate::error::{Error, Result};
use crate::measure::{
    cbi_far_density, cbi_mid_density, Atom, DensityForm, DensityPiece, LevyMeasure,
};
use crate::process::LevyTriplet;
use crate::scale::{compute_table, evaluate_w_at, evaluate_z_at};

/// Closed-form W and Z for Brownian motion with drift: exponent
/// psi(b) = sigma^2 b^2 / 2 + mu b.
#[derive(Clone, Copy, Debug)]
pub struct BmClosedForm {
    pub sigma2: f64,
    pub mu: f64,
    pub q: f64,
    /// sqrt(mu^2 + 2 q sigma^2); zero only when q = mu = 0
    pub sqrt_d: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
}

impl BmClosedForm {
    pub fn new(sigma2: f64, mu: f64, q: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Brownian closed form needs sigma^2 > 0, got {sigma2}"
            )));
        }
        if !(q >= 0.0 && q.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bad parameters mu = {mu}, q = {q}"
            )));
        }
        let d = mu * mu + 2.0 * q * sigma2;
        let sqrt_d = d.sqrt();
        Ok(BmClosedForm {
            sigma2,
            mu,
            q,
            sqrt_d,
            alpha_plus: (-mu + sqrt_d) / sigma2,
            alpha_minus: (-mu - sqrt_d) / sigma2,
        })
    }

    /// W(x) = (e^(a+ x) - e^(a- x)) / sqrt(D), written through expm1 so the
    /// q = 0 branches stay fully accurate; degenerates to 2x/sigma^2 when
    /// q = mu = 0.
    pub fn w(&self, x: f64) -> f64 {
        if self.sqrt_d == 0.0 {
            return 2.0 * x / self.sigma2;
        }
        ((self.alpha_plus * x).exp_m1() - (self.alpha_minus * x).exp_m1()) / self.sqrt_d
    }

    /// Z(x) = 1 + q int_0^x W; constant 1 at q = 0.
    pub fn z(&self, x: f64) -> f64 {
        if self.q == 0.0 {
            return 1.0;
        }
        1.0 + self.q / self.sqrt_d
            * ((self.alpha_plus * x).exp_m1() / self.alpha_plus
                - (self.alpha_minus * x).exp_m1() / self.alpha_minus)
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "the Poisson closed form is only valid for x in (0, 1), got {x}"
        )));
    }
    Ok(())
}

/// W for the unit-drift, unit-rate Poisson process with jumps of size -1,
/// on the stretch [0, 1) before the first jump can bind: e^((1+q) x).
pub fn cp_w(q: f64, x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    Ok(((1.0 + q) * x).exp())
}

/// Z for the same process on (0, 1): 1 + q (e^((1+q)x) - 1) / (1+q).
pub fn cp_z(q: f64, x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    Ok(1.0 + q * ((1.0 + q) * x).exp_m1() / (1.0 + q))
}

/// Which leading-order error limit to evaluate. Deviations are signed as
/// exact minus approximation (with the index shift applied to W). The
/// Brownian W deviation is second order, so `BmW` is the h -> 0 limit of
/// that difference over h^2; the other three are first order and divide
/// by h.
#[derive(Clone, Copy, Debug)]
pub enum SharpnessCase {
    BmW { sigma2: f64, mu: f64 },
    BmZ { sigma2: f64, mu: f64 },
    CpW,
    CpZ,
}

/// The exact leading error coefficient of the chain scheme.
///
/// For Brownian motion both limits vanish when mu = q = 0 (the scheme is
/// then exact); the Poisson cases require x in (0, 1) like the closed
/// forms they attach to.
pub fn sharpness_limit(case: SharpnessCase, q: f64, x: f64) -> Result<f64> {
    match case {
        SharpnessCase::BmW { sigma2, mu } => {
            let cf = BmClosedForm::new(sigma2, mu, q)?;
            if cf.sqrt_d == 0.0 {
                return Ok(0.0);
            }
            let d = cf.sqrt_d * cf.sqrt_d;
            let s4 = sigma2 * sigma2;
            let cross = 0.5 * q * q * s4 - mu.powi(4) - mu * mu * sigma2 * q;
            let denom = 3.0 * sigma2 * s4 * cf.sqrt_d;
            let theta_plus = (mu.powi(3) * cf.sqrt_d + cross) / denom;
            let theta_minus = (mu.powi(3) * cf.sqrt_d - cross) / denom;
            Ok(q * q / (2.0 * d) * cf.w(x)
                + x / cf.sqrt_d
                    * ((cf.alpha_plus * x).exp() * theta_plus
                        - (cf.alpha_minus * x).exp() * theta_minus))
        }
        SharpnessCase::BmZ { sigma2, mu } => {
            let cf = BmClosedForm::new(sigma2, mu, q)?;
            if cf.sqrt_d == 0.0 {
                return Ok(0.0);
            }
            Ok(-q / (2.0 * cf.sqrt_d) * ((cf.alpha_plus * x).exp() - (cf.alpha_minus * x).exp()))
        }
        SharpnessCase::CpW => {
            check_unit_interval(x)?;
            Ok(((1.0 + q) * x).exp() * 0.5 * (1.0 + q) * (1.0 + q) * x)
        }
        SharpnessCase::CpZ => {
            check_unit_interval(x)?;
            Ok(0.5 * q * (1.0 + q) * x * ((1.0 + q) * x).exp())
        }
    }
}

/// Brownian motion with drift.
pub fn bm(sigma2: f64, mu: f64) -> LevyTriplet {
    LevyTriplet::new(sigma2, LevyMeasure::zero(), mu).expect("valid Brownian triplet")
}

/// Unit drift minus a unit-rate Poisson process with jumps of size -1.
pub fn cp_unit() -> LevyTriplet {
    let m = LevyMeasure::new(
        vec![Atom {
            location: -1.0,
            mass: 1.0,
        }],
        vec![],
    )
    .expect("valid atom");
    LevyTriplet::new(0.0, m, 1.0).expect("valid Poisson triplet")
}

/// Driftless-in-the-Gaussian-sense stable-like model: density |y|^(-5/2)
/// on the whole negative half-line, drift 2. Infinite variation purely
/// from small jumps.
pub fn stable_like() -> LevyTriplet {
    let m = LevyMeasure::new(
        vec![],
        vec![DensityPiece {
            lower: f64::NEG_INFINITY,
            upper: 0.0,
            form: DensityForm::PowerLaw {
                coeff: 1.0,
                index: 1.5,
            },
        }],
    )
    .expect("valid stable-like measure");
    LevyTriplet::new(0.0, m, 2.0).expect("valid stable-like triplet")
}

/// Finite-activity model with log-normally distributed jump sizes and
/// drift 5; total jump rate 1.
pub fn lognormal_ruin() -> LevyTriplet {
    let m = LevyMeasure::new(
        vec![],
        vec![DensityPiece {
            lower: f64::NEG_INFINITY,
            upper: 0.0,
            form: DensityForm::LogNormal,
        }],
    )
    .expect("valid log-normal measure");
    LevyTriplet::new(0.0, m, 5.0).expect("valid log-normal triplet")
}

/// Branching-immigration example: atoms at -1 and -2 of mass 1/2 each,
/// a (3/2)|y|^(-5/2) core on [-1, 0), the oscillatory mid and far pieces,
/// and drift 15.
pub fn cbi_model() -> LevyTriplet {
    let m = LevyMeasure::new(
        vec![
            Atom {
                location: -1.0,
                mass: 0.5,
            },
            Atom {
                location: -2.0,
                mass: 0.5,
            },
        ],
        vec![
            DensityPiece {
                lower: -1.0,
                upper: 0.0,
                form: DensityForm::PowerLaw {
                    coeff: 1.5,
                    index: 1.5,
                },
            },
            DensityPiece {
                lower: -2.0,
                upper: -1.0,
                form: cbi_mid_density(),
            },
            DensityPiece {
                lower: f64::NEG_INFINITY,
                upper: -2.0,
                form: cbi_far_density(),
            },
        ],
    )
    .expect("valid branching-immigration measure");
    LevyTriplet::new(0.0, m, 15.0).expect("valid branching-immigration triplet")
}

/// Infinite-activity, finite-variation model whose raw drift is negative
/// but whose compensated drift is positive: density |y|^(-3/2) on [-1, 0),
/// drift -1.
pub fn drift_dominated() -> LevyTriplet {
    let m = LevyMeasure::new(
        vec![],
        vec![DensityPiece {
            lower: -1.0,
            upper: 0.0,
            form: DensityForm::PowerLaw {
                coeff: 1.0,
                index: 0.5,
            },
        }],
    )
    .expect("valid drift-dominated measure");
    LevyTriplet::new(0.0, m, -1.0).expect("valid drift-dominated triplet")
}

/// W and Z values at the requested points, read off one fine-grid table.
#[derive(Clone, Debug)]
pub struct BenchmarkValues {
    pub h: f64,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

/// Self-benchmark for models without closed forms: one table at the fine
/// step `h_bench`, evaluated at the requested points. Every x must lie on
/// the fine grid.
pub fn fine_grid_benchmark(
    triplet: &LevyTriplet,
    q: f64,
    xs: &[f64],
    h_bench: f64,
) -> Result<BenchmarkValues> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    if !(h_bench > 0.0 && h_bench.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "benchmark step must be positive and finite, got {h_bench}"
        )));
    }
    let mut xmax = 0.0f64;
    for &x in xs {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "evaluation points must be positive and finite, got {x}"
            )));
        }
        xmax = xmax.max(x);
    }
    let n = (xmax / h_bench).round() as usize;
    let chain = build_chain(triplet, h_bench, n + 1)?;
    let gamma = gamma_coefficients(&chain, n + 1)?;
    let table = compute_table(&gamma, q, n)?;
    let mut w = Vec::with_capacity(xs.len());
    let mut z = Vec::with_capacity(xs.len());
    for &x in xs {
        w.push(evaluate_w_at(&table, x)?);
        z.push(evaluate_z_at(&table, x)?);
    }
    Ok(BenchmarkValues { h: h_bench, w, z })
}
