//! Spectrally negative Levy processes given by (sigma^2, measure, mu) and
//! their Laplace exponent psi.
//!
//! The drift mu is read relative to the cutoff function y 1_[-V,0)(y), where
//! V = 1 when the measure has infinite activity and V = 0 otherwise, so
//! finite-activity models carry no compensation term at all.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{DensityForm, LevyMeasure};
use crate::num::{cexpm1, cexpm1m, expm1m};
use crate::quad::Quadrature;

#[derive(Clone, Debug)]
pub struct LevyTriplet {
    sigma2: f64,
    measure: LevyMeasure,
    mu: f64,
    v: u8,
    mu0: Option<f64>,
    quad: Quadrature,
}

impl LevyTriplet {
    /// Validate and classify a triplet. Rules:
    /// - sigma2 >= 0, mu finite;
    /// - a deterministic drift (no Gaussian part, no jumps) is rejected,
    ///   its paths are monotone;
    /// - when sigma2 = 0 and the small jumps have finite variation, the
    ///   adjusted drift mu0 = mu + V int_[-1,0) |y| d(measure) must be
    ///   strictly positive, otherwise paths are monotone decreasing or the
    ///   process is not spectrally negative with unbounded upward drift.
    pub fn new(sigma2: f64, measure: LevyMeasure, mu: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "Gaussian coefficient must be finite and nonnegative, got {sigma2}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidModel(format!(
                "drift must be finite, got {mu}"
            )));
        }
        if sigma2 == 0.0 && measure.is_zero() {
            return Err(Error::InvalidModel(
                "deterministic drift: no Gaussian part and no jumps".into(),
            ));
        }
        let v: u8 = if measure.activity_finite() { 0 } else { 1 };
        let mu0 = if measure.kappa_zero_finite() {
            let compensation = if v == 1 {
                measure.abs_moment_interval(-1.0, 0.0)?
            } else {
                0.0
            };
            Some(mu + compensation)
        } else {
            None
        };
        if sigma2 == 0.0 {
            if let Some(m0) = mu0 {
                if m0 <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "with no Gaussian part and finite-variation jumps the adjusted \
                         drift must be positive, got mu0 = {m0}"
                    )));
                }
            }
        }
        Ok(LevyTriplet {
            sigma2,
            measure,
            mu,
            v,
            mu0,
            quad: Quadrature::default(),
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    /// Cutoff parameter: 1 on infinite-activity measures, 0 otherwise.
    pub fn truncation_v(&self) -> u8 {
        self.v
    }

    /// Adjusted drift when the small jumps have finite variation.
    pub fn mu0(&self) -> Option<f64> {
        self.mu0
    }

    /// Index shift used when comparing chain tables against the continuous
    /// scale function: 1 on processes of infinite variation (Gaussian part
    /// present or kappa(0) = infinity), 0 otherwise.
    pub fn delta0(&self) -> u8 {
        if self.sigma2 > 0.0 || !self.measure.kappa_zero_finite() {
            1
        } else {
            0
        }
    }

    /// Laplace exponent at complex beta, Re beta >= 0:
    /// psi(beta) = sigma^2 beta^2 / 2 + mu beta
    ///           + int (e^(beta y) - beta y 1_[-V,0)(y) - 1) d(measure).
    pub fn psi(&self, beta: Complex64) -> Result<Complex64> {
        if beta.re < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "psi needs Re beta >= 0, got {}",
                beta.re
            )));
        }
        let mut total = 0.5 * self.sigma2 * beta * beta + self.mu * beta;
        for a in self.measure.atoms() {
            let arg = beta * a.location;
            let term = if self.v == 1 && a.location >= -1.0 {
                cexpm1m(arg)
            } else {
                cexpm1(arg)
            };
            total += a.mass * term;
        }
        for p in self.measure.pieces() {
            // compensated region [-V, 0): integrand e^(by) - by - 1
            if self.v == 1 {
                let lo = p.lower.max(-1.0);
                let hi = p.upper.min(0.0);
                if lo < hi {
                    total += self.jump_integral(beta, &p.form, lo, hi, true)?;
                }
            }
            // plain region: integrand e^(by) - 1
            let hi = if self.v == 1 {
                p.upper.min(-1.0)
            } else {
                p.upper
            };
            if p.lower < hi {
                total += self.jump_integral(beta, &p.form, p.lower, hi, false)?;
            }
        }
        Ok(total)
    }

    /// Laplace exponent on the real axis, beta >= 0.
    pub fn psi_real(&self, beta: f64) -> Result<f64> {
        if beta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "psi needs beta >= 0, got {beta}"
            )));
        }
        let mut total = 0.5 * self.sigma2 * beta * beta + self.mu * beta;
        for a in self.measure.atoms() {
            let arg = beta * a.location;
            let term = if self.v == 1 && a.location >= -1.0 {
                expm1m(arg)
            } else {
                arg.exp_m1()
            };
            total += a.mass * term;
        }
        for p in self.measure.pieces() {
            if self.v == 1 {
                let lo = p.lower.max(-1.0);
                let hi = p.upper.min(0.0);
                if lo < hi {
                    total += self.jump_integral_real(beta, &p.form, lo, hi, true)?;
                }
            }
            let hi = if self.v == 1 {
                p.upper.min(-1.0)
            } else {
                p.upper
            };
            if p.lower < hi {
                total += self.jump_integral_real(beta, &p.form, p.lower, hi, false)?;
            }
        }
        Ok(total)
    }

    /// int_lo^hi g(beta y) density(y) dy with g = e^z - 1 (plain) or
    /// e^z - z - 1 (compensated). When the density has a finite
    /// antiderivative F at both endpoints the integral is taken by parts,
    /// int g dF = [g F] - int g' F, which removes integrable boundary
    /// singularities of the density from the quadrature path.
    fn jump_integral_real(
        &self,
        beta: f64,
        form: &DensityForm,
        lo: f64,
        hi: f64,
        compensated: bool,
    ) -> Result<f64> {
        if beta == 0.0 {
            return Ok(0.0);
        }
        let anti_lo = form.antiderivative_y(lo).filter(|v| v.is_finite());
        let anti_hi = form.antiderivative_y(hi).filter(|v| v.is_finite());
        // with an infinite lower end the parts integrand beta e^(beta y) F(y)
        // only decays for beta > 0
        if let (Some(fl), Some(fh)) = (anti_lo, anti_hi) {
            if lo.is_finite() || beta > 0.0 {
                let g = |y: f64| {
                    if compensated {
                        expm1m(beta * y)
                    } else {
                        (beta * y).exp_m1()
                    }
                };
                let dg = |y: f64| {
                    if compensated {
                        beta * (beta * y).exp_m1()
                    } else {
                        beta * (beta * y).exp()
                    }
                };
                let inner = self.quad.integrate(
                    |y| dg(y) * form.antiderivative_y(y).expect("antiderivative on piece"),
                    lo,
                    hi,
                )?;
                return Ok(g(hi) * fh - g(lo) * fl - inner);
            }
        }
        let g = |y: f64| {
            if compensated {
                expm1m(beta * y)
            } else {
                (beta * y).exp_m1()
            }
        };
        self.quad.integrate(|y| g(y) * form.eval(y), lo, hi)
    }

    fn jump_integral(
        &self,
        beta: Complex64,
        form: &DensityForm,
        lo: f64,
        hi: f64,
        compensated: bool,
    ) -> Result<Complex64> {
        if beta == Complex64::new(0.0, 0.0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let g = |y: f64| -> Complex64 {
            if y == f64::NEG_INFINITY {
                // limit of e^(beta y) - 1 for Re beta > 0
                return Complex64::new(-1.0, 0.0);
            }
            if compensated {
                cexpm1m(beta * y)
            } else {
                cexpm1(beta * y)
            }
        };
        let anti_lo = form.antiderivative_y(lo).filter(|v| v.is_finite());
        let anti_hi = form.antiderivative_y(hi).filter(|v| v.is_finite());
        if let (Some(fl), Some(fh)) = (anti_lo, anti_hi) {
            if lo.is_finite() || beta.re > 0.0 {
                let dg = |y: f64| {
                    if compensated {
                        beta * cexpm1(beta * y)
                    } else {
                        beta * (beta * y).exp()
                    }
                };
                let inner = self.quad.integrate_complex(
                    |y| dg(y) * form.antiderivative_y(y).expect("antiderivative on piece"),
                    lo,
                    hi,
                )?;
                return Ok(g(hi) * fh - g(lo) * fl - inner);
            }
        }
        self.quad.integrate_complex(|y| g(y) * form.eval(y), lo, hi)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::measure::{Atom, DensityForm, DensityPiece};

    fn cp_unit() -> LevyTriplet {
        LevyTriplet::new(
            0.0,
            LevyMeasure::new(
                vec![Atom {
                    location: -1.0,
                    mass: 1.0,
                }],
                vec![],
            )
            .unwrap(),
            1.0,
        )
        .unwrap()
    }

    fn stable_like() -> LevyTriplet {
        LevyTriplet::new(
            0.0,
            LevyMeasure::new(
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
            .unwrap(),
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn compound_poisson_exponent_matches_reference() {
        let t = cp_unit();
        assert_eq!(t.truncation_v(), 0);
        assert_eq!(t.delta0(), 0);
        assert_eq!(t.mu0(), Some(1.0));
        let p1 = t.psi_real(1.0).unwrap();
        let p2 = t.psi_real(2.0).unwrap();
        assert!((p1 - 0.3678794411714423216).abs() < 1e-15, "{p1}");
        assert!((p2 - 1.1353352832366126919).abs() < 1e-15, "{p2}");
    }

    #[test]
    fn brownian_exponent_is_quadratic() {
        let t = LevyTriplet::new(2.0, LevyMeasure::zero(), 0.0).unwrap();
        assert_eq!(t.delta0(), 1);
        let v = t.psi_real(1.5).unwrap();
        assert!((v - 2.25).abs() < 1e-14);
    }

    #[test]
    fn stable_like_exponent_matches_reference() {
        let t = stable_like();
        assert_eq!(t.truncation_v(), 1);
        assert_eq!(t.delta0(), 1);
        assert!(t.mu0().is_none());
        // the compensated small-jump integral has an integrable t^(-1/2)
        // singularity at 0, which caps adaptive accuracy a little above the
        // nominal 1e-10 relative target
        let p1 = t.psi_real(1.0).unwrap();
        let p2 = t.psi_real(2.0).unwrap();
        assert!((p1 - 2.3632718006029908543).abs() < 1e-8, "{p1}");
        assert!((p2 - 6.6843420639862095196).abs() < 1e-8, "{p2}");
    }

    #[test]
    fn exponential_jump_exponent_matches_closed_form() {
        // finite activity (V = 0): psi(b) = mu b - a b/(rho + b)
        let t = LevyTriplet::new(
            0.0,
            LevyMeasure::new(
                vec![],
                vec![DensityPiece {
                    lower: f64::NEG_INFINITY,
                    upper: 0.0,
                    form: DensityForm::Exponential {
                        weight: 1.0,
                        rate: 1.0,
                    },
                }],
            )
            .unwrap(),
            2.0,
        )
        .unwrap();
        assert_eq!(t.truncation_v(), 0);
        assert_eq!(t.mu0(), Some(2.0));
        let v = t.psi_real(1.0).unwrap();
        assert!((v - 1.5).abs() < 1e-10, "{v}");
    }

    #[test]
    fn complex_path_agrees_with_real_path_and_conjugation() {
        let t = stable_like();
        let on_axis = t.psi(Complex64::new(1.0, 0.0)).unwrap();
        let real = t.psi_real(1.0).unwrap();
        assert!((on_axis.re - real).abs() < 1e-10);
        assert!(on_axis.im.abs() < 1e-12);
        let z = Complex64::new(1.0, 2.0);
        let a = t.psi(z).unwrap();
        let b = t.psi(z.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-9, "{a} {b}");
    }

    #[test]
    fn psi_at_zero_vanishes() {
        for t in [cp_unit(), stable_like()] {
            assert_eq!(t.psi_real(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn drift_dominated_model_uses_adjusted_drift_for_validity() {
        let piece = || {
            vec![DensityPiece {
                lower: -1.0,
                upper: 0.0,
                form: DensityForm::PowerLaw {
                    coeff: 1.0,
                    index: 0.5,
                },
            }]
        };
        // kappa(0) = 2, so mu = -1 gives mu0 = 1 > 0: valid despite mu < 0
        let ok = LevyTriplet::new(0.0, LevyMeasure::new(vec![], piece()).unwrap(), -1.0).unwrap();
        assert_eq!(ok.mu0(), Some(1.0));
        assert_eq!(ok.delta0(), 0);
        // mu = -3 gives mu0 = -1: monotone decreasing paths, rejected
        let bad = LevyTriplet::new(0.0, LevyMeasure::new(vec![], piece()).unwrap(), -3.0);
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(LevyTriplet::new(0.0, LevyMeasure::zero(), 1.0).is_err());
        assert!(LevyTriplet::new(-1.0, LevyMeasure::zero(), 1.0).is_err());
        let t = LevyTriplet::new(1.0, LevyMeasure::zero(), 0.0).unwrap();
        assert!(t.psi_real(-0.5).is_err());
    }
}
