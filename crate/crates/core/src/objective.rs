//! Poisson negative log-likelihood over the measured Fourier intensities and
//! its gradient with respect to the real specimen image.
//!
//! The dropped `log(Ytilde!)` term and the `Np / Ybar` scale do not move the
//! minimizer, so objective values are defined only up to that constant and a
//! positive factor.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::detector::Measurement;
use crate::error::{HoloError, Result};
use crate::fourier::{ComplexField, HoloOperator};
use crate::references;

/// Floor on `|u|^2` inside the logarithm and the data quotient.
pub const INTENSITY_FLOOR: f64 = 1e-12;

/// A measurement paired with the forward operator needed to explain it.
#[derive(Debug, Clone)]
pub struct Problem {
    measurement: Measurement,
    operator: HoloOperator,
}

impl Problem {
    pub fn new(measurement: Measurement, operator: HoloOperator) -> Result<Self> {
        if operator.reference_field().shape() != measurement.noisy_intensity().dim() {
            return Err(HoloError::Geometry(
                "reference field and measurement have different shapes".into(),
            ));
        }
        if operator.geometry() != measurement.geometry() {
            return Err(HoloError::Geometry("operator geometry differs from measurement".into()));
        }
        if measurement.mask().measured_count() == 0 {
            return Err(HoloError::Data("beamstop occludes every detector pixel".into()));
        }
        Ok(Problem { measurement, operator })
    }

    /// Rebuilds the reference from the kind recorded in the measurement.
    pub fn from_measurement(measurement: Measurement) -> Result<Self> {
        let g = measurement.geometry();
        let reference = references::generate(measurement.reference(), g.n)?;
        let operator = HoloOperator::new(g, &reference)?;
        Self::new(measurement, operator)
    }

    pub fn measurement(&self) -> &Measurement {
        &self.measurement
    }

    pub fn operator(&self) -> &HoloOperator {
        &self.operator
    }

    pub fn n(&self) -> usize {
        self.operator.geometry().n
    }

    fn check(&self, x: &Array2<f64>) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HoloError::Numeric("estimate contains non-finite values".into()));
        }
        Ok(())
    }

    /// Objective value for a field `u = F(x) + B` already in hand.
    pub(crate) fn value_of_field(&self, u: &Array2<Complex64>) -> f64 {
        let mut acc = 0.0;
        Zip::from(u)
            .and(self.measurement.noisy_intensity())
            .and(self.measurement.mask().values())
            .for_each(|z, &y, &m| {
                if m != 0.0 {
                    let a = z.norm_sqr();
                    acc += a - y * a.max(INTENSITY_FLOOR).ln();
                }
            });
        0.5 * acc
    }

    /// Field-space gradient `M (.) (u - Ytilde / conj(u))`.
    fn field_residual(&self, u: &ComplexField) -> Array2<Complex64> {
        let mut w = u.values().clone();
        Zip::from(&mut w)
            .and(self.measurement.noisy_intensity())
            .and(self.measurement.mask().values())
            .for_each(|z, &y, &m| {
                if m == 0.0 {
                    *z = Complex64::default();
                } else {
                    let a = z.norm_sqr();
                    if a >= INTENSITY_FLOOR {
                        *z -= *z * (y / a);
                    }
                }
            });
        w
    }

    /// Objective value at `x`.
    pub fn nll(&self, x: &Array2<f64>) -> Result<f64> {
        self.check(x)?;
        let u = self.operator.field(x)?;
        Ok(self.value_of_field(u.values()))
    }

    /// Gradient at `x`.
    pub fn grad(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.value_and_grad(x)?.1)
    }

    /// Objective and gradient sharing one forward transform.
    pub fn value_and_grad(&self, x: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
        self.check(x)?;
        let u = self.operator.field(x)?;
        let value = self.value_of_field(u.values());
        let grad = self.operator.adjoint_raw(self.field_residual(&u))?;
        Ok((value, grad))
    }
}
