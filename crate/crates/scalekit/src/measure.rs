//! Jump measures concentrated on the negative half-line.
//!
//! A measure is a finite list of atoms plus density pieces on disjoint
//! half-open supports [lower, upper). Masses and partial moments use closed
//! forms where the density family has one and adaptive quadrature otherwise,
//! so the same query can be cross-checked through two routes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::Quadrature;

/// Standard normal CDF.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Point mass at a strictly negative location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// User-supplied density with optional exact antiderivative.
///
/// `eval` is the density at y < 0. `antiderivative`, when present, is an
/// F with F' = density on the piece support; it must accept
/// `f64::NEG_INFINITY` (returning the finite limit) if the piece is
/// unbounded below. The two flags describe integrability against 1 and |y|
/// near 0 and are only consulted when the piece support touches 0.
#[derive(Clone)]
pub struct CustomDensity {
    pub tag: String,
    pub eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub antiderivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub mass_finite_at_zero: bool,
    pub kappa_finite_at_zero: bool,
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity")
            .field("tag", &self.tag)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum DensityForm {
    /// coeff * |y|^(-1-index); index < 2, and index > 0 on unbounded pieces.
    PowerLaw {
        coeff: f64,
        index: f64,
    },
    /// weight * rate * e^(rate*y), total mass `weight` over (-inf, 0).
    Exponential {
        weight: f64,
        rate: f64,
    },
    /// Standard log-normal in |y|: exp(-(ln|y|)^2/2) / (|y| sqrt(2 pi)).
    LogNormal,
    Custom(CustomDensity),
}

/// Density piece supported on [lower, upper), lower may be -inf, upper <= 0.
#[derive(Clone, Debug)]
pub struct DensityPiece {
    pub lower: f64,
    pub upper: f64,
    pub form: DensityForm,
}

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

impl DensityForm {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            DensityForm::PowerLaw { coeff, index } => coeff * (-y).powf(-1.0 - index),
            DensityForm::Exponential { weight, rate } => weight * rate * (rate * y).exp(),
            DensityForm::LogNormal => {
                let t = -y;
                (-0.5 * t.ln() * t.ln()).exp() / (t * SQRT_2PI)
            }
            DensityForm::Custom(c) => (c.eval)(y),
        }
    }

    /// Mass over t in [t1, t2] where t = -y; t2 may be infinite.
    fn mass_t(&self, t1: f64, t2: f64, quad: &Quadrature) -> Result<f64> {
        match self {
            DensityForm::PowerLaw { coeff, index } => {
                if *index == 0.0 {
                    Ok(coeff * (t2.ln() - t1.ln()))
                } else {
                    let pw = |t: f64| {
                        if t.is_infinite() {
                            if *index > 0.0 {
                                0.0
                            } else {
                                f64::INFINITY
                            }
                        } else {
                            t.powf(-index)
                        }
                    };
                    Ok(coeff / index * (pw(t1) - pw(t2)))
                }
            }
            DensityForm::Exponential { weight, rate } => {
                let e = |t: f64| {
                    if t.is_infinite() {
                        0.0
                    } else {
                        (-rate * t).exp()
                    }
                };
                Ok(weight * (e(t1) - e(t2)))
            }
            DensityForm::LogNormal => Ok(normal_cdf(t2.ln()) - normal_cdf(t1.ln())),
            DensityForm::Custom(c) => {
                if let Some(fa) = &c.antiderivative {
                    // antiderivative lives in y-space: mass over [-t2, -t1)
                    let lo = if t2.is_infinite() {
                        f64::NEG_INFINITY
                    } else {
                        -t2
                    };
                    Ok(fa(-t1) - fa(lo))
                } else {
                    let lo = if t2.is_infinite() {
                        f64::NEG_INFINITY
                    } else {
                        -t2
                    };
                    quad.integrate(|y| (c.eval)(y), lo, -t1)
                }
            }
        }
    }

    /// k-th absolute moment over t in [t1, t2], k = 1 or 2.
    fn moment_t(&self, k: u32, t1: f64, t2: f64, quad: &Quadrature) -> Result<f64> {
        debug_assert!(k == 1 || k == 2);
        match self {
            DensityForm::PowerLaw { coeff, index } => {
                let e = k as f64 - index;
                if e == 0.0 {
                    Ok(coeff * (t2.ln() - t1.ln()))
                } else {
                    let pw = |t: f64| {
                        if t.is_infinite() {
                            if e < 0.0 {
                                0.0
                            } else {
                                f64::INFINITY
                            }
                        } else {
                            t.powf(e)
                        }
                    };
                    Ok(coeff / e * (pw(t2) - pw(t1)))
                }
            }
            DensityForm::Exponential { weight, rate } => {
                let r = *rate;
                let anti = |t: f64| -> f64 {
                    if t.is_infinite() {
                        return 0.0;
                    }
                    let poly = if k == 1 {
                        t / r + 1.0 / (r * r)
                    } else {
                        t * t / r + 2.0 * t / (r * r) + 2.0 / (r * r * r)
                    };
                    -(-r * t).exp() * poly
                };
                Ok(weight * r * (anti(t2) - anti(t1)))
            }
            DensityForm::LogNormal => {
                let kf = k as f64;
                let scale = (0.5 * kf * kf).exp();
                Ok(scale * (normal_cdf(t2.ln() - kf) - normal_cdf(t1.ln() - kf)))
            }
            DensityForm::Custom(c) => {
                let lo = if t2.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    -t2
                };
                quad.integrate(|y: f64| (-y).powi(k as i32) * (c.eval)(y), lo, -t1)
            }
        }
    }

    /// Antiderivative F of the density in y-space (F' = density), for
    /// integration by parts against smooth test functions. `y` may be
    /// -inf; the result may be non-finite at a support boundary (e.g. a
    /// power law at 0), the caller must check.
    pub(crate) fn antiderivative_y(&self, y: f64) -> Option<f64> {
        match self {
            DensityForm::PowerLaw { coeff, index } => {
                if *index == 0.0 {
                    Some(-coeff * (-y).ln())
                } else {
                    Some(coeff / index * (-y).powf(-index))
                }
            }
            DensityForm::Exponential { weight, rate } => Some(weight * (rate * y).exp()),
            DensityForm::LogNormal => Some(-normal_cdf((-y).ln())),
            DensityForm::Custom(c) => c.antiderivative.as_ref().map(|fa| fa(y)),
        }
    }

    fn mass_finite_at_zero(&self) -> bool {
        match self {
            DensityForm::PowerLaw { index, .. } => *index < 0.0,
            DensityForm::Exponential { .. } | DensityForm::LogNormal => true,
            DensityForm::Custom(c) => c.mass_finite_at_zero,
        }
    }

    fn kappa_finite_at_zero(&self) -> bool {
        match self {
            DensityForm::PowerLaw { index, .. } => *index < 1.0,
            DensityForm::Exponential { .. } | DensityForm::LogNormal => true,
            DensityForm::Custom(c) => c.kappa_finite_at_zero,
        }
    }
}

/// Density of the mid-range piece used by the branching-immigration example:
/// (1/2)(-y-1)^(-1/2) + e^(cos y)(3 + y sin y)/y^4 + e/(-y)^3 on [-2, -1).
pub fn cbi_mid_density() -> DensityForm {
    DensityForm::Custom(CustomDensity {
        tag: "cbi-mid".into(),
        eval: Arc::new(|y: f64| {
            0.5 * (-y - 1.0).powf(-0.5)
                + y.cos().exp() * (3.0 + y * y.sin()) / y.powi(4)
                + std::f64::consts::E / (-y).powi(3)
        }),
        antiderivative: Some(Arc::new(|y: f64| {
            -(-y - 1.0).sqrt() - y.cos().exp() / y.powi(3) + std::f64::consts::E / (2.0 * y * y)
        })),
        mass_finite_at_zero: true,
        kappa_finite_at_zero: true,
    })
}

/// Far-tail density of the same example: e^(cos y)(3 + y sin y)/y^4 +
/// e/(-y)^3 on (-inf, -2), with vanishing antiderivative at -inf.
pub fn cbi_far_density() -> DensityForm {
    DensityForm::Custom(CustomDensity {
        tag: "cbi-far".into(),
        eval: Arc::new(|y: f64| {
            y.cos().exp() * (3.0 + y * y.sin()) / y.powi(4) + std::f64::consts::E / (-y).powi(3)
        }),
        antiderivative: Some(Arc::new(|y: f64| {
            if y == f64::NEG_INFINITY {
                0.0
            } else {
                -y.cos().exp() / y.powi(3) + std::f64::consts::E / (2.0 * y * y)
            }
        })),
        mass_finite_at_zero: true,
        kappa_finite_at_zero: true,
    })
}

/// Levy measure on the negative half-line: atoms plus disjoint density
/// pieces. Atom queries follow half-open [a, b) conventions throughout.
#[derive(Clone, Debug)]
pub struct LevyMeasure {
    atoms: Vec<Atom>,
    pieces: Vec<DensityPiece>,
    quad: Quadrature,
}

impl LevyMeasure {
    pub fn new(mut atoms: Vec<Atom>, mut pieces: Vec<DensityPiece>) -> Result<Self> {
        for a in &atoms {
            if !(a.location.is_finite() && a.location < 0.0) {
                return Err(Error::InvalidModel(format!(
                    "atom location must be finite and negative, got {}",
                    a.location
                )));
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "atom mass must be finite and positive, got {}",
                    a.mass
                )));
            }
        }
        atoms.sort_by(|x, y| x.location.total_cmp(&y.location));

        for p in &pieces {
            if p.lower >= p.upper || p.upper > 0.0 || p.lower == f64::INFINITY {
                return Err(Error::InvalidModel(format!(
                    "piece support [{}, {}) is not an interval in (-inf, 0]",
                    p.lower, p.upper
                )));
            }
            match &p.form {
                DensityForm::PowerLaw { coeff, index } => {
                    if !(coeff.is_finite() && *coeff > 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "power-law coefficient must be finite and positive, got {coeff}"
                        )));
                    }
                    if !(index.is_finite() && *index < 2.0) {
                        return Err(Error::InvalidModel(format!(
                            "power-law index must be < 2 for a square-integrable \
                             small-jump part, got {index}"
                        )));
                    }
                    if p.lower == f64::NEG_INFINITY && *index <= 0.0 {
                        return Err(Error::InvalidModel(format!(
                            "power-law index must be > 0 on an unbounded piece, got {index}"
                        )));
                    }
                }
                DensityForm::Exponential { weight, rate } => {
                    if !(weight.is_finite() && *weight > 0.0 && rate.is_finite() && *rate > 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "exponential piece needs positive finite weight and rate, \
                             got weight {weight}, rate {rate}"
                        )));
                    }
                }
                DensityForm::LogNormal => {}
                DensityForm::Custom(c) => {
                    // sampled sanity check; exactness is on the caller
                    let lo = p.lower.max(-1e6);
                    for i in 1..=16 {
                        let y = p.upper + (lo - p.upper) * (i as f64) / 17.0;
                        let v = (c.eval)(y);
                        if !v.is_finite() || v < 0.0 {
                            return Err(Error::InvalidModel(format!(
                                "custom density '{}' is negative or non-finite at y = {y}",
                                c.tag
                            )));
                        }
                    }
                }
            }
        }
        pieces.sort_by(|a, b| a.lower.total_cmp(&b.lower));
        for w in pieces.windows(2) {
            if w[0].upper > w[1].lower {
                return Err(Error::InvalidModel(format!(
                    "density pieces overlap: [{}, {}) and [{}, {})",
                    w[0].lower, w[0].upper, w[1].lower, w[1].upper
                )));
            }
        }

        let m = LevyMeasure {
            atoms,
            pieces,
            quad: Quadrature::default(),
        };

        // square-integrability near zero and a finite far tail are required
        // for every valid jump measure
        let xi1 = m.second_moment_interval(-1.0, 0.0)?;
        if !xi1.is_finite() {
            return Err(Error::InvalidModel(
                "second moment over [-1, 0) is not finite".into(),
            ));
        }
        if m.pieces.iter().any(|p| p.lower == f64::NEG_INFINITY) {
            let far = m.tail_mass(1.0)?;
            if !far.is_finite() {
                return Err(Error::InvalidModel("mass below -1 is not finite".into()));
            }
        }
        Ok(m)
    }

    pub fn zero() -> Self {
        LevyMeasure {
            atoms: Vec::new(),
            pieces: Vec::new(),
            quad: Quadrature::default(),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    /// True when the total mass is finite.
    pub fn activity_finite(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.upper < 0.0 || p.form.mass_finite_at_zero())
    }

    /// True when int_[-1,0) |y| d(measure) is finite.
    pub fn kappa_zero_finite(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.upper < 0.0 || p.form.kappa_finite_at_zero())
    }

    fn piece_overlap(p: &DensityPiece, a: f64, b: f64) -> Option<(f64, f64)> {
        let ya = p.lower.max(a);
        let yb = p.upper.min(b);
        if ya < yb {
            let t2 = if ya == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                -ya
            };
            Some((-yb, t2))
        } else {
            None
        }
    }

    /// Mass of [a, b) with a < b <= 0; atoms at a count, atoms at b do not.
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b && b <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}) must satisfy a < b <= 0"
            )));
        }
        if b == 0.0 && !self.activity_finite() {
            return Err(Error::InfiniteMass(
                "interval touches 0 and the measure has infinite activity".into(),
            ));
        }
        let mut total: f64 = self
            .atoms
            .iter()
            .filter(|at| a <= at.location && at.location < b)
            .map(|at| at.mass)
            .sum();
        for p in &self.pieces {
            if let Some((t1, t2)) = Self::piece_overlap(p, a, b) {
                total += p.form.mass_t(t1, t2, &self.quad)?;
            }
        }
        Ok(total)
    }

    /// Mass of the open tail (-inf, -t), t > 0.
    pub fn tail_mass(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tail cut must be positive, got {t}"
            )));
        }
        let mut total: f64 = self
            .atoms
            .iter()
            .filter(|at| at.location < -t)
            .map(|at| at.mass)
            .sum();
        for p in &self.pieces {
            if let Some((t1, t2)) = Self::piece_overlap(p, f64::NEG_INFINITY, -t) {
                total += p.form.mass_t(t1, t2, &self.quad)?;
            }
        }
        Ok(total)
    }

    pub fn total_mass(&self) -> Result<f64> {
        if !self.activity_finite() {
            return Ok(f64::INFINITY);
        }
        let mut total: f64 = self.atoms.iter().map(|a| a.mass).sum();
        for p in &self.pieces {
            if let Some((t1, t2)) = Self::piece_overlap(p, f64::NEG_INFINITY, 0.0) {
                total += p.form.mass_t(t1, t2, &self.quad)?;
            }
        }
        Ok(total)
    }

    /// int_[a,b) |y| d(measure); may be +inf when b = 0 and the small jumps
    /// have infinite variation.
    pub fn abs_moment_interval(&self, a: f64, b: f64) -> Result<f64> {
        self.moment_interval(1, a, b)
    }

    /// int_[a,b) y^2 d(measure).
    pub fn second_moment_interval(&self, a: f64, b: f64) -> Result<f64> {
        self.moment_interval(2, a, b)
    }

    fn moment_interval(&self, k: u32, a: f64, b: f64) -> Result<f64> {
        if !(a < b && b <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}) must satisfy a < b <= 0"
            )));
        }
        let mut total: f64 = self
            .atoms
            .iter()
            .filter(|at| a <= at.location && at.location < b)
            .map(|at| at.mass * (-at.location).powi(k as i32))
            .sum();
        for p in &self.pieces {
            if let Some((t1, t2)) = Self::piece_overlap(p, a, b) {
                total += p.form.moment_t(k, t1, t2, &self.quad)?;
            }
        }
        Ok(total)
    }

    /// Small-jump second moment xi(delta) = int_[-delta,0) y^2 d(measure).
    pub fn second_moment_zero(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {delta}"
            )));
        }
        self.second_moment_interval(-delta, 0.0)
    }

    /// kappa(delta) = int_[-1,-delta) |y| d(measure), delta in (0, 1].
    pub fn kappa(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        if delta == 1.0 {
            return Ok(0.0);
        }
        self.abs_moment_interval(-1.0, -delta)
    }
}
