//! Reconstruction error metrics.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::objective::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `||Y(X^) - Ytilde||_F / ||Ytilde||_F`.
    pub data_relative_error: f64,
    /// `||X^ - X*||_F / ||X*||_F`; simulation-only diagnostic.
    pub truth_relative_error: Option<f64>,
    /// Whether `Y(X^)` was masked by a beamstop.
    pub masked: bool,
}

/// Data-space relative error of an estimate against the measurement.
///
/// `Y(X^) = mask (.) |F(X^) + B|^2`; with no beamstop the mask is all ones.
pub fn data_relative_error(estimate: &Array2<f64>, problem: &Problem) -> Result<f64> {
    let meas = problem.measurement();
    let observed = meas.noisy_intensity();
    let denom = observed.iter().map(|v| v * v).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(HoloError::MetricUndefined("measured intensity is identically zero".into()));
    }
    let u = problem.operator().field(estimate)?;
    let num = Zip::from(u.values())
        .and(observed)
        .and(meas.mask().values())
        .fold(0.0, |acc, z, &y, &m| {
            let r = m * z.norm_sqr() - y;
            acc + r * r
        });
    Ok(num.sqrt() / denom)
}

/// `||X^ - X*||_F / ||X*||_F`.
pub fn truth_relative_error(estimate: &Array2<f64>, truth: &Array2<f64>) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(HoloError::Geometry(format!(
            "estimate {:?} and truth {:?} differ in shape",
            estimate.dim(),
            truth.dim()
        )));
    }
    let denom = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(HoloError::MetricUndefined("ground truth is identically zero".into()));
    }
    let num = Zip::from(estimate).and(truth).fold(0.0, |acc, a, b| acc + (a - b) * (a - b));
    Ok(num.sqrt() / denom)
}

pub fn error_report(
    estimate: &Array2<f64>,
    problem: &Problem,
    truth: Option<&Array2<f64>>,
) -> Result<ErrorReport> {
    Ok(ErrorReport {
        data_relative_error: data_relative_error(estimate, problem)?,
        truth_relative_error: truth.map(|t| truth_relative_error(estimate, t)).transpose()?,
        masked: problem.measurement().mask().has_beamstop(),
    })
}
