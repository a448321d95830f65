//! Deconvolution baselines: inverse filtering and Wiener filtering.
//!
//! Both start from the autocorrelation of the composite object, obtained by
//! inverse-transforming the measured intensities (occluded pixels count as
//! zeros). When the gap is at least `n` and both oversampling ratios are at
//! least two, the autocorrelation contains an isolated copy of the
//! cross-correlation `C(delta) = sum_q X(q + delta) R(q)` at column offset
//! `-(n + d)`. It is deconvolved on a `(2n - 1) x (2n - 1)` grid, large
//! enough that circular and linear correlation coincide, via
//! `X^ = C^ / conj(R^)`.

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::Measurement;
use crate::error::{HoloError, Result};
use crate::fourier::{pad_real, Fft2};
use crate::layout::{Geometry, ImageGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Division guard for inverse filtering, relative to `max |R^|`.
    pub epsilon_div: f64,
    /// Wiener regularization; `None` selects `(Ybar / Np) mean |R^|^2`.
    pub wiener_lambda: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { epsilon_div: 1e-9, wiener_lambda: None }
    }
}

/// Rejects geometries outside the regime the deconvolution needs.
pub fn check_geometry(g: &Geometry) -> Result<()> {
    if g.oversampling_x < 2.0 || g.oversampling_y < 2.0 {
        return Err(HoloError::UnsupportedGeometry(format!(
            "filtering needs oversampling of at least two on both axes, got ({}, {})",
            g.oversampling_x, g.oversampling_y
        )));
    }
    if g.gap < g.n {
        return Err(HoloError::UnsupportedGeometry(format!(
            "filtering needs a specimen-reference gap of at least n = {}, got {}",
            g.n, g.gap
        )));
    }
    Ok(())
}

/// Cross-correlation block and reference spectrum, both on the deconvolution
/// grid with non-unitary scaling.
struct Spectra {
    side: usize,
    fft: Fft2,
    correlation: Array2<Complex64>,
    reference: Array2<Complex64>,
}

fn spectra(measurement: &Measurement, reference: &ImageGrid) -> Result<Spectra> {
    let g = measurement.geometry();
    check_geometry(&g)?;
    let n = g.n;
    if reference.rows() != n || reference.cols() != n {
        return Err(HoloError::Geometry("reference does not match measurement".into()));
    }
    let (m1, m2) = (g.m1, g.m2);

    // autocorrelation A = sqrt(m1 m2) * IDFT(Y)
    let mut auto = measurement.noisy_intensity().mapv(|v| Complex64::new(v, 0.0));
    Fft2::new(m1, m2).inverse_inplace(&mut auto);
    let root = ((m1 * m2) as f64).sqrt();

    let side = 2 * n - 1;
    let shift = (n + g.gap) as i64;
    let mut correlation = Array2::<Complex64>::zeros((side, side));
    let span = n as i64 - 1;
    for dr in -span..=span {
        for dc in -span..=span {
            let ar = dr.rem_euclid(m1 as i64) as usize;
            let ac = (dc - shift).rem_euclid(m2 as i64) as usize;
            let pr = dr.rem_euclid(side as i64) as usize;
            let pc = dc.rem_euclid(side as i64) as usize;
            correlation[[pr, pc]] = Complex64::new(root * auto[[ar, ac]].re, 0.0);
        }
    }

    let fft = Fft2::new(side, side);
    let scale = side as f64;
    fft.forward_inplace(&mut correlation);
    correlation.mapv_inplace(|z| z * scale);
    let mut reference_hat = pad_real(reference.values(), side, side)?;
    fft.forward_inplace(&mut reference_hat);
    reference_hat.mapv_inplace(|z| z * scale);
    Ok(Spectra { side, fft, correlation, reference: reference_hat })
}

fn finish(sp: Spectra, mut estimate: Array2<Complex64>, n: usize) -> Result<ImageGrid> {
    sp.fft.inverse_inplace(&mut estimate);
    let scale = 1.0 / sp.side as f64;
    let image = estimate.slice(s![0..n, 0..n]).mapv(|z| z.re * scale);
    ImageGrid::new(image).map_err(|_| HoloError::Numeric("filter produced non-finite values".into()))
}

/// Inverse filtering with a magnitude guard on `conj(R^)`.
pub fn inverse_filter(
    measurement: &Measurement,
    reference: &ImageGrid,
    config: &FilterConfig,
) -> Result<ImageGrid> {
    if !(config.epsilon_div > 0.0) {
        return Err(HoloError::Config("epsilon_div must be positive".into()));
    }
    let sp = spectra(measurement, reference)?;
    let peak = sp.reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eps = config.epsilon_div * peak;
    let estimate = Zip::from(&sp.correlation).and(&sp.reference).map_collect(|&c, &r| {
        let den = r.conj();
        let mag = den.norm();
        if mag == 0.0 && eps == 0.0 {
            Complex64::default()
        } else if mag < eps {
            let phase = if mag > 0.0 { den / mag } else { Complex64::new(1.0, 0.0) };
            c / (phase * eps)
        } else {
            c / den
        }
    });
    finish(sp, estimate, measurement.geometry().n)
}

/// Automatic Wiener constant `(Ybar / Np) mean |R^|^2`; zero for noiseless data.
pub fn auto_lambda(measurement: &Measurement, reference: &ImageGrid) -> Result<f64> {
    let sp = spectra(measurement, reference)?;
    Ok(lambda_from(measurement, &sp))
}

fn lambda_from(measurement: &Measurement, sp: &Spectra) -> f64 {
    let mean_power = sp.reference.iter().map(|z| z.norm_sqr()).sum::<f64>() / sp.reference.len() as f64;
    measurement.quantum() * mean_power
}

/// Wiener filtering: `X^ = C^ R^ / (|R^|^2 + lambda)`.
pub fn wiener_filter(
    measurement: &Measurement,
    reference: &ImageGrid,
    config: &FilterConfig,
) -> Result<ImageGrid> {
    let sp = spectra(measurement, reference)?;
    let lambda = match config.wiener_lambda {
        Some(l) if l >= 0.0 && l.is_finite() => l,
        Some(l) => return Err(HoloError::Config(format!("wiener_lambda {l} must be >= 0"))),
        None => lambda_from(measurement, &sp),
    };
    let estimate = Zip::from(&sp.correlation).and(&sp.reference).map_collect(|&c, &r| {
        let den = r.norm_sqr() + lambda;
        if den > 0.0 {
            c * r / den
        } else {
            Complex64::default()
        }
    });
    finish(sp, estimate, measurement.geometry().n)
}
