//! Specimen / gap / reference composite and the detector geometry derived
//! from it.
//!
//! The composite object is `n` rows by `2n + d` columns: the specimen occupies
//! columns `[0, n)`, a zero gap `[n, n + d)` and the reference
//! `[n + d, 2n + d)`. The detector grid is the composite zero-padded to
//! `m1 x m2`, anchored at the top-left corner.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};

/// Real-valued image with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid(Array2<f64>);

impl ImageGrid {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(HoloError::Geometry("image must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HoloError::Data("image contains non-finite values".into()));
        }
        Ok(ImageGrid(values))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ImageGrid(Array2::zeros((rows, cols)))
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let arr = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| HoloError::Geometry(format!("bad image shape: {e}")))?;
        Self::new(arr)
    }

    /// Builds an image clamped to `[0, 1]`, the convention for loaded phantoms.
    pub fn clamped(values: Array2<f64>) -> Result<Self> {
        let img = Self::new(values)?;
        Ok(ImageGrid(img.0.mapv(|v| v.clamp(0.0, 1.0))))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Round half up, the rounding used for detector dimensions.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Plain geometry of a holographic setup: everything but the pixel values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Side length of the square specimen and reference.
    pub n: usize,
    /// Width of the zero gap in pixels.
    pub gap: usize,
    pub oversampling_x: f64,
    pub oversampling_y: f64,
    /// Detector rows.
    pub m1: usize,
    /// Detector columns.
    pub m2: usize,
}

impl Geometry {
    pub fn new(n: usize, gap: usize, oversampling_x: f64, oversampling_y: f64) -> Result<Self> {
        if n == 0 {
            return Err(HoloError::Geometry("specimen size must be positive".into()));
        }
        for os in [oversampling_x, oversampling_y] {
            if !os.is_finite() || os < 1.0 {
                return Err(HoloError::Geometry(format!("oversampling {os} must be >= 1")));
            }
        }
        let width = 2 * n + gap;
        let m1 = round_half_up(oversampling_x * n as f64);
        let m2 = round_half_up(oversampling_y * width as f64);
        if m1 < n || m2 < width {
            return Err(HoloError::Geometry(format!(
                "detector {m1}x{m2} smaller than composite {n}x{width}"
            )));
        }
        Ok(Geometry { n, gap, oversampling_x, oversampling_y, m1, m2 })
    }

    /// Composite width `2n + d`.
    pub fn composite_width(&self) -> usize {
        2 * self.n + self.gap
    }

    /// First column of the reference inside the composite.
    pub fn reference_offset(&self) -> usize {
        self.n + self.gap
    }

    pub fn detector_shape(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    pub fn detector_len(&self) -> usize {
        self.m1 * self.m2
    }
}

/// The ground-truth scene: specimen, gap and reference plus oversampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    specimen: ImageGrid,
    reference: ImageGrid,
    geometry: Geometry,
}

impl Layout {
    pub fn new(
        specimen: ImageGrid,
        reference: ImageGrid,
        gap: usize,
        oversampling_x: f64,
        oversampling_y: f64,
    ) -> Result<Self> {
        if !specimen.is_square() || !reference.is_square() {
            return Err(HoloError::Geometry("specimen and reference must be square".into()));
        }
        if specimen.rows() != reference.rows() {
            return Err(HoloError::Geometry(format!(
                "specimen is {0}x{0} but reference is {1}x{1}",
                specimen.rows(),
                reference.rows()
            )));
        }
        let geometry = Geometry::new(specimen.rows(), gap, oversampling_x, oversampling_y)?;
        Ok(Layout { specimen, reference, geometry })
    }

    pub fn specimen(&self) -> &ImageGrid {
        &self.specimen
    }

    pub fn reference(&self) -> &ImageGrid {
        &self.reference
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Same geometry and reference with a different specimen.
    pub fn with_specimen(&self, specimen: ImageGrid) -> Result<Self> {
        let g = self.geometry;
        Layout::new(specimen, self.reference.clone(), g.gap, g.oversampling_x, g.oversampling_y)
    }

    fn place(&self, specimen: bool, reference: bool) -> ImageGrid {
        let g = self.geometry;
        let mut out = Array2::zeros((g.n, g.composite_width()));
        if specimen {
            out.slice_mut(s![.., 0..g.n]).assign(self.specimen.values());
        }
        if reference {
            let off = g.reference_offset();
            out.slice_mut(s![.., off..off + g.n]).assign(self.reference.values());
        }
        ImageGrid(out)
    }

    /// `[X | 0 | R]`.
    pub fn compose(&self) -> ImageGrid {
        self.place(true, true)
    }

    /// `[X | 0 | 0]`.
    pub fn embed_specimen_only(&self) -> ImageGrid {
        self.place(true, false)
    }

    /// `[0 | 0 | R]`.
    pub fn embed_reference_only(&self) -> ImageGrid {
        self.place(false, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn scalar(v: f64) -> ImageGrid {
        ImageGrid::new(array![[v]]).unwrap()
    }

    #[test]
    fn compose_single_pixel() {
        let layout = Layout::new(scalar(2.0), scalar(3.0), 1, 1.0, 1.0).unwrap();
        assert_eq!(layout.compose().values(), &array![[2.0, 0.0, 3.0]]);
        assert_eq!(layout.embed_specimen_only().values(), &array![[2.0, 0.0, 0.0]]);
        assert_eq!(layout.embed_reference_only().values(), &array![[0.0, 0.0, 3.0]]);
    }

    #[test]
    fn zero_layout_composes_to_zeros() {
        let layout =
            Layout::new(ImageGrid::zeros(3, 3), ImageGrid::zeros(3, 3), 2, 1.0, 1.0).unwrap();
        let c = layout.compose();
        assert_eq!((c.rows(), c.cols()), (3, 8));
        assert!(c.values().iter().all(|&v| v == 0.0));
        assert!(layout.embed_specimen_only().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn paper_scale_composite() {
        let layout =
            Layout::new(ImageGrid::zeros(256, 256), ImageGrid::zeros(256, 256), 256, 2.0, 2.0)
                .unwrap();
        let c = layout.compose();
        assert_eq!((c.rows(), c.cols()), (256, 768));
        assert_eq!(layout.geometry().detector_shape(), (512, 1536));
    }

    #[test]
    fn column_ranges() {
        let n = 4;
        let d = 3;
        let x = ImageGrid::new(Array2::from_elem((n, n), 1.0)).unwrap();
        let r = ImageGrid::new(Array2::from_elem((n, n), 7.0)).unwrap();
        let layout = Layout::new(x, r, d, 1.0, 1.0).unwrap();
        let c = layout.compose();
        for row in c.values().rows() {
            for (j, &v) in row.iter().enumerate() {
                let expected = if j < n {
                    1.0
                } else if j < n + d {
                    0.0
                } else {
                    7.0
                };
                assert_eq!(v, expected, "column {j}");
            }
        }
    }

    #[test]
    fn size_mismatch_is_geometry_error() {
        let err = Layout::new(ImageGrid::zeros(2, 2), ImageGrid::zeros(3, 3), 0, 1.0, 1.0);
        assert!(matches!(err, Err(HoloError::Geometry(_))));
        let err = Layout::new(ImageGrid::zeros(2, 3), ImageGrid::zeros(2, 3), 0, 1.0, 1.0);
        assert!(matches!(err, Err(HoloError::Geometry(_))));
    }

    #[test]
    fn fractional_oversampling_rounds_half_up() {
        // 1.25 * 64 = 80, 1.25 * 192 = 240; 1.5 * 3 = 4.5 -> 5
        let g = Geometry::new(64, 64, 1.25, 1.25).unwrap();
        assert_eq!((g.m1, g.m2), (80, 240));
        let g = Geometry::new(3, 0, 1.5, 1.0).unwrap();
        assert_eq!(g.m1, 5);
        assert!(Geometry::new(4, 0, 0.9, 1.0).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(ImageGrid::new(array![[f64::NAN]]).is_err());
        let c = ImageGrid::clamped(array![[-1.0, 0.5, 2.0]]).unwrap();
        assert_eq!(c.values(), &array![[0.0, 0.5, 1.0]]);
    }

    proptest::proptest! {
        #[test]
        fn compose_is_sum_of_embeddings(
            n in 1usize..6,
            d in 0usize..5,
            seed in proptest::collection::vec(-10.0f64..10.0, 72),
        ) {
            let x = Array2::from_shape_fn((n, n), |(i, j)| seed[i * n + j]);
            let r = Array2::from_shape_fn((n, n), |(i, j)| seed[36 + i * n + j]);
            let layout = Layout::new(
                ImageGrid::new(x).unwrap(), ImageGrid::new(r).unwrap(), d, 1.0, 1.0,
            ).unwrap();
            let sum = layout.embed_specimen_only().values() + layout.embed_reference_only().values();
            let composed = layout.compose();
            proptest::prop_assert_eq!(&sum, composed.values());
        }
    }
}
