//! Oversampled unitary 2-D DFT, the specimen forward operator and its adjoint.
//!
//! All transforms use `1/sqrt(m1 m2)` normalization in both directions so a
//! forward/inverse round trip is exactly the identity. Arrays are stored in
//! standard DFT order (index 0 is the zero frequency).

use std::sync::Arc;

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{HoloError, Result};
use crate::layout::{Geometry, ImageGrid};

/// Complex `m1 x m2` field in the Fourier domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField(Array2<Complex64>);

impl ComplexField {
    pub fn new(values: Array2<Complex64>) -> Result<Self> {
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HoloError::Numeric("complex field contains non-finite values".into()));
        }
        Ok(ComplexField(values))
    }

    pub fn zeros(m1: usize, m2: usize) -> Self {
        ComplexField(Array2::zeros((m1, m2)))
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<Complex64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }

    /// Pointwise squared magnitude.
    pub fn intensity(&self) -> Array2<f64> {
        self.0.mapv(|z| z.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Maps a storage index to its signed frequency in `[-m/2, m/2)`.
pub fn signed_frequency(index: usize, m: usize) -> i64 {
    if index < m.div_ceil(2) {
        index as i64
    } else {
        index as i64 - m as i64
    }
}

/// Precomputed row and column plans for a fixed `m1 x m2` transform.
#[derive(Clone)]
pub struct Fft2 {
    m1: usize,
    m2: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("m1", &self.m1).field("m2", &self.m2).finish()
    }
}

impl Fft2 {
    pub fn new(m1: usize, m2: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            m1,
            m2,
            row_fwd: planner.plan_fft_forward(m2),
            row_inv: planner.plan_fft_inverse(m2),
            col_fwd: planner.plan_fft_forward(m1),
            col_inv: planner.plan_fft_inverse(m1),
            scale: 1.0 / ((m1 * m2) as f64).sqrt(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    fn run(&self, data: &mut Array2<Complex64>, rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        assert_eq!(data.dim(), (self.m1, self.m2), "transform shape mismatch");
        if !data.is_standard_layout() {
            *data = data.as_standard_layout().into_owned();
        }
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); scratch_len];

        let buf = data.as_slice_mut().expect("standard layout");
        rows.process_with_scratch(buf, &mut scratch);

        let mut transposed = data.t().as_standard_layout().into_owned();
        let tbuf = transposed.as_slice_mut().expect("standard layout");
        cols.process_with_scratch(tbuf, &mut scratch);
        data.assign(&transposed.t());

        let scale = self.scale;
        data.mapv_inplace(|z| z * scale);
    }

    /// In-place unitary forward transform.
    pub fn forward_inplace(&self, data: &mut Array2<Complex64>) {
        self.run(data, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// In-place unitary inverse transform.
    pub fn inverse_inplace(&self, data: &mut Array2<Complex64>) {
        self.run(data, self.row_inv.as_ref(), self.col_inv.as_ref());
    }
}

/// Zero-pads a real array to `m1 x m2` (top-left anchored).
pub fn pad_real(values: &Array2<f64>, m1: usize, m2: usize) -> Result<Array2<Complex64>> {
    let (r, c) = values.dim();
    if m1 < r || m2 < c {
        return Err(HoloError::Geometry(format!(
            "cannot pad {r}x{c} image into {m1}x{m2}"
        )));
    }
    let mut out = Array2::zeros((m1, m2));
    Zip::from(out.slice_mut(s![0..r, 0..c]))
        .and(values)
        .for_each(|o, &v| *o = Complex64::new(v, 0.0));
    Ok(out)
}

/// Unitary `m1 x m2` DFT of a zero-padded real image.
pub fn dft(img: &ImageGrid, m1: usize, m2: usize) -> Result<ComplexField> {
    let mut data = pad_real(img.values(), m1, m2)?;
    Fft2::new(m1, m2).forward_inplace(&mut data);
    Ok(ComplexField(data))
}

/// The specimen forward operator `X -> DFT([X | 0 | 0])` together with the
/// cached reference field `B = DFT([0 | 0 | R])`.
#[derive(Debug, Clone)]
pub struct HoloOperator {
    geometry: Geometry,
    fft: Fft2,
    reference: ImageGrid,
    reference_field: ComplexField,
}

impl HoloOperator {
    pub fn new(geometry: Geometry, reference: &ImageGrid) -> Result<Self> {
        if reference.rows() != geometry.n || reference.cols() != geometry.n {
            return Err(HoloError::Geometry(format!(
                "reference is {}x{}, expected {n}x{n}",
                reference.rows(),
                reference.cols(),
                n = geometry.n
            )));
        }
        let fft = Fft2::new(geometry.m1, geometry.m2);
        let mut data = Array2::zeros((geometry.m1, geometry.m2));
        let off = geometry.reference_offset();
        Zip::from(data.slice_mut(s![0..geometry.n, off..off + geometry.n]))
            .and(reference.values())
            .for_each(|o: &mut Complex64, &v| *o = Complex64::new(v, 0.0));
        fft.forward_inplace(&mut data);
        Ok(HoloOperator {
            geometry,
            fft,
            reference: reference.clone(),
            reference_field: ComplexField(data),
        })
    }

    pub fn from_layout(layout: &crate::layout::Layout) -> Result<Self> {
        Self::new(layout.geometry(), layout.reference())
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// The reference image `R`.
    pub fn reference(&self) -> &ImageGrid {
        &self.reference
    }

    /// `B`, the Fourier field of the reference.
    pub fn reference_field(&self) -> &ComplexField {
        &self.reference_field
    }

    fn check_specimen(&self, x: &Array2<f64>) -> Result<()> {
        let n = self.geometry.n;
        if x.dim() != (n, n) {
            return Err(HoloError::Geometry(format!(
                "specimen estimate is {:?}, expected {n}x{n}",
                x.dim()
            )));
        }
        Ok(())
    }

    /// `F(X)`.
    pub fn forward(&self, x: &Array2<f64>) -> Result<ComplexField> {
        self.check_specimen(x)?;
        let mut data = pad_real(x, self.geometry.m1, self.geometry.m2)?;
        self.fft.forward_inplace(&mut data);
        Ok(ComplexField(data))
    }

    /// `F(X) + B`.
    pub fn field(&self, x: &Array2<f64>) -> Result<ComplexField> {
        let mut u = self.forward(x)?;
        u.0 += &self.reference_field.0;
        Ok(u)
    }

    /// `Re(F^dagger W)`: inverse unitary DFT cropped to the specimen block.
    pub fn adjoint(&self, w: &ComplexField) -> Result<Array2<f64>> {
        self.adjoint_raw(w.0.clone())
    }

    pub(crate) fn adjoint_raw(&self, mut w: Array2<Complex64>) -> Result<Array2<f64>> {
        let (m1, m2) = (self.geometry.m1, self.geometry.m2);
        if w.dim() != (m1, m2) {
            return Err(HoloError::Geometry(format!(
                "field is {:?}, expected {m1}x{m2}",
                w.dim()
            )));
        }
        self.fft.inverse_inplace(&mut w);
        let n = self.geometry.n;
        Ok(w.slice(s![0..n, 0..n]).mapv(|z| z.re))
    }
}
