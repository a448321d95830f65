//! Data generation: clean far-field intensity, beamstop occlusion and Poisson
//! shot noise, plus the on-disk measurement format.
//!
//! Noise draws use a single `ChaCha8Rng` seeded with `seed_from_u64(seed)`.
//! Pixels are visited in row-major order and exactly one Poisson draw is
//! taken for every measured pixel whose mean is positive; masked pixels and
//! zero-mean pixels consume nothing from the stream.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::fourier::{dft, signed_frequency};
use crate::layout::{Geometry, Layout};
use crate::references::ReferenceKind;

/// Centered zero block blocking the lowest frequencies.
///
/// Pixel `(i, j)` is occluded iff `|i| < omega1` and `|j| < omega2` in signed
/// frequency coordinates, so the block is `(2 omega1 - 1) x (2 omega2 - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamstopMask {
    omega1: usize,
    omega2: usize,
    values: Array2<f64>,
}

impl BeamstopMask {
    pub fn new(omega1: usize, omega2: usize, m1: usize, m2: usize) -> Result<Self> {
        if omega1 > 0 && omega2 > 0 && (2 * omega1 - 1 > m1 || 2 * omega2 - 1 > m2) {
            return Err(HoloError::Parameter(format!(
                "beamstop cutoffs ({omega1}, {omega2}) do not fit a {m1}x{m2} detector"
            )));
        }
        let values = Array2::from_shape_fn((m1, m2), |(i, j)| {
            let fi = signed_frequency(i, m1).unsigned_abs() as usize;
            let fj = signed_frequency(j, m2).unsigned_abs() as usize;
            if fi < omega1 && fj < omega2 {
                0.0
            } else {
                1.0
            }
        });
        Ok(BeamstopMask { omega1, omega2, values })
    }

    pub fn none(m1: usize, m2: usize) -> Self {
        BeamstopMask { omega1: 0, omega2: 0, values: Array2::ones((m1, m2)) }
    }

    /// Square `k x k` beamstop; `k = 0` means no beamstop, even `k` is rejected.
    pub fn from_block(k: usize, m1: usize, m2: usize) -> Result<Self> {
        if k == 0 {
            return Ok(Self::none(m1, m2));
        }
        if k % 2 == 0 {
            return Err(HoloError::Parameter(format!(
                "beamstop block size {k} must be odd"
            )));
        }
        let omega = (k + 1) / 2;
        Self::new(omega, omega, m1, m2)
    }

    pub fn omega(&self) -> (usize, usize) {
        (self.omega1, self.omega2)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn is_measured(&self, i: usize, j: usize) -> bool {
        self.values[[i, j]] != 0.0
    }

    pub fn has_beamstop(&self) -> bool {
        self.omega1 > 0 && self.omega2 > 0
    }

    pub fn occluded_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 0.0).count()
    }

    pub fn measured_count(&self) -> usize {
        self.values.len() - self.occluded_count()
    }
}

/// `|DFT([X | 0 | R])|^2` over the whole detector.
pub fn clean_intensity(layout: &Layout) -> Array2<f64> {
    let g = layout.geometry();
    dft(&layout.compose(), g.m1, g.m2)
        .expect("layout geometry guarantees the detector fits the composite")
        .intensity()
}

/// `Y (.) mask`.
pub fn apply_beamstop(intensity: &Array2<f64>, mask: &BeamstopMask) -> Result<Array2<f64>> {
    if intensity.dim() != mask.shape() {
        return Err(HoloError::Geometry(format!(
            "intensity {:?} does not match mask {:?}",
            intensity.dim(),
            mask.shape()
        )));
    }
    Ok(intensity * mask.values())
}

/// Everything a reconstruction is allowed to see.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    noisy_intensity: Array2<f64>,
    mask: BeamstopMask,
    /// `None` for noiseless data.
    photon_flux: Option<f64>,
    mean_intensity: f64,
    seed: u64,
    geometry: Geometry,
    reference: ReferenceKind,
}

impl Measurement {
    pub fn noisy_intensity(&self) -> &Array2<f64> {
        &self.noisy_intensity
    }

    pub fn mask(&self) -> &BeamstopMask {
        &self.mask
    }

    pub fn photon_flux(&self) -> Option<f64> {
        self.photon_flux
    }

    /// Mean clean intensity over all detector pixels.
    pub fn mean_intensity(&self) -> f64 {
        self.mean_intensity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn reference(&self) -> ReferenceKind {
        self.reference
    }

    /// Photon quantum `Ybar / Np` (zero for noiseless data).
    pub fn quantum(&self) -> f64 {
        self.photon_flux.map_or(0.0, |np| self.mean_intensity / np)
    }

    /// Same measurement with different intensities on the detector.
    pub fn with_intensity(&self, intensity: Array2<f64>) -> Result<Self> {
        if intensity.dim() != self.noisy_intensity.dim() {
            return Err(HoloError::Geometry("intensity shape mismatch".into()));
        }
        Ok(Measurement { noisy_intensity: intensity, ..self.clone() })
    }
}

fn mean_of(values: &Array2<f64>) -> Result<f64> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(HoloError::Data("intensity must be finite and nonnegative".into()));
    }
    Ok(values.mean().unwrap_or(0.0))
}

/// Noiseless data: the masked clean intensity itself.
pub fn noiseless(layout: &Layout, reference: ReferenceKind, mask: BeamstopMask) -> Result<Measurement> {
    let clean = clean_intensity(layout);
    let mean_intensity = mean_of(&clean)?;
    let noisy_intensity = apply_beamstop(&clean, &mask)?;
    Ok(Measurement {
        noisy_intensity,
        mask,
        photon_flux: None,
        mean_intensity,
        seed: 0,
        geometry: layout.geometry(),
        reference,
    })
}

/// Corrupts the clean (pre-beamstop) intensity with Poisson shot noise.
///
/// `Ybar` is the mean of `clean` over every detector pixel. Each measured
/// pixel gets `Ytilde = (Ybar/Np) Z` with `Z ~ Pois((Np/Ybar) Y)`; occluded
/// pixels are zero.
pub fn poisson_corrupt(
    clean: &Array2<f64>,
    mask: &BeamstopMask,
    photon_flux: f64,
    seed: u64,
) -> Result<(Array2<f64>, f64)> {
    if !(photon_flux > 0.0 && photon_flux.is_finite()) {
        return Err(HoloError::Parameter(format!("photon flux {photon_flux} must be positive")));
    }
    if clean.dim() != mask.shape() {
        return Err(HoloError::Geometry("intensity does not match mask".into()));
    }
    let mean = mean_of(clean)?;
    if mean <= 0.0 {
        return Err(HoloError::Data("mean intensity is zero; nothing to illuminate".into()));
    }
    let rate = photon_flux / mean;
    let quantum = mean / photon_flux;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros(clean.dim());
    for ((idx, &y), m) in clean.indexed_iter().zip(mask.values().iter()) {
        if *m == 0.0 {
            continue;
        }
        let lambda = rate * y;
        if lambda > 0.0 {
            let dist = Poisson::new(lambda)
                .map_err(|e| HoloError::Numeric(format!("poisson mean {lambda}: {e}")))?;
            let z: f64 = dist.sample(&mut rng);
            out[idx] = quantum * z;
        }
    }
    Ok((out, mean))
}

/// Full pipeline: clean intensity, beamstop and shot noise.
pub fn simulate(
    layout: &Layout,
    reference: ReferenceKind,
    mask: BeamstopMask,
    photon_flux: f64,
    seed: u64,
) -> Result<Measurement> {
    let clean = clean_intensity(layout);
    let (noisy_intensity, mean_intensity) = poisson_corrupt(&clean, &mask, photon_flux, seed)?;
    Ok(Measurement {
        noisy_intensity,
        mask,
        photon_flux: Some(photon_flux),
        mean_intensity,
        seed,
        geometry: layout.geometry(),
        reference,
    })
}

const MAGIC: &[u8; 8] = b"HOLOMEAS";
const FORMAT_VERSION: u32 = 1;

/// JSON header stored in front of the raw intensity array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementHeader {
    pub version: u32,
    pub n: usize,
    pub gap: usize,
    pub oversampling_x: f64,
    pub oversampling_y: f64,
    pub m1: usize,
    pub m2: usize,
    pub omega1: usize,
    pub omega2: usize,
    pub photon_flux: Option<f64>,
    pub mean_intensity: f64,
    pub seed: u64,
    pub reference: ReferenceKind,
}

impl Measurement {
    pub fn header(&self) -> MeasurementHeader {
        let g = self.geometry;
        let (omega1, omega2) = self.mask.omega();
        MeasurementHeader {
            version: FORMAT_VERSION,
            n: g.n,
            gap: g.gap,
            oversampling_x: g.oversampling_x,
            oversampling_y: g.oversampling_y,
            m1: g.m1,
            m2: g.m2,
            omega1,
            omega2,
            photon_flux: self.photon_flux,
            mean_intensity: self.mean_intensity,
            seed: self.seed,
            reference: self.reference,
        }
    }

    /// Layout: `HOLOMEAS`, u32 LE header length, JSON header, then
    /// `m1 * m2` little-endian f64 values in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let mut out = Vec::with_capacity(12 + header.len() + 8 * self.noisy_intensity.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.noisy_intensity.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let mut magic = [0u8; 8];
        bytes.read_exact(&mut magic).map_err(|_| truncated())?;
        if &magic != MAGIC {
            return Err(HoloError::Format("not a measurement file".into()));
        }
        let mut len = [0u8; 4];
        bytes.read_exact(&mut len).map_err(|_| truncated())?;
        let len = u32::from_le_bytes(len) as usize;
        if bytes.len() < len {
            return Err(truncated());
        }
        let header: MeasurementHeader = serde_json::from_slice(&bytes[..len])
            .map_err(|e| HoloError::Format(format!("bad header: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(HoloError::Format(format!("unsupported version {}", header.version)));
        }
        let body = &bytes[len..];
        let geometry = Geometry::new(header.n, header.gap, header.oversampling_x, header.oversampling_y)?;
        if (geometry.m1, geometry.m2) != (header.m1, header.m2) {
            return Err(HoloError::Format("detector size disagrees with geometry".into()));
        }
        if body.len() != 8 * geometry.detector_len() {
            return Err(truncated());
        }
        let data: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let noisy_intensity = Array2::from_shape_vec((geometry.m1, geometry.m2), data)
            .map_err(|e| HoloError::Format(e.to_string()))?;
        let mask = BeamstopMask::new(header.omega1, header.omega2, geometry.m1, geometry.m2)?;
        if noisy_intensity.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(HoloError::Data("stored intensity must be finite and nonnegative".into()));
        }
        Ok(Measurement {
            noisy_intensity,
            mask,
            photon_flux: header.photon_flux,
            mean_intensity: header.mean_intensity,
            seed: header.seed,
            geometry,
            reference: header.reference,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn truncated() -> HoloError {
    HoloError::Format("measurement file truncated".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::ImageGrid;
    use ndarray::array;

    fn impulse_layout() -> Layout {
        // 1x1 impulse padded to 2x2 (n=1, d=0, reference zero, OS chosen so m=(2,2))
        Layout::new(ImageGrid::new(array![[1.0]]).unwrap(), ImageGrid::zeros(1, 1), 0, 2.0, 1.0)
            .unwrap()
    }

    #[test]
    fn impulse_intensity_is_flat() {
        let y = clean_intensity(&impulse_layout());
        assert_eq!(y.dim(), (2, 2));
        assert!(y.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn zero_layout_zero_intensity() {
        let lay = Layout::new(ImageGrid::zeros(4, 4), ImageGrid::zeros(4, 4), 4, 2.0, 2.0).unwrap();
        assert!(clean_intensity(&lay).iter().all(|&v| v == 0.0));
        let mask = BeamstopMask::none(8, 24);
        assert!(matches!(
            poisson_corrupt(&clean_intensity(&lay), &mask, 1.0, 0),
            Err(HoloError::Data(_))
        ));
    }

    #[test]
    fn beamstop_geometry() {
        let m = BeamstopMask::new(0, 0, 8, 8).unwrap();
        assert_eq!(m.occluded_count(), 0);
        let m = BeamstopMask::new(1, 1, 8, 8).unwrap();
        assert_eq!(m.occluded_count(), 1);
        assert!(!m.is_measured(0, 0));
        let m = BeamstopMask::from_block(25, 512, 1536).unwrap();
        assert_eq!(m.omega(), (13, 13));
        assert_eq!(m.occluded_count(), 625);
        // block wraps around the zero frequency
        assert!(!m.is_measured(511, 1535));
        assert!(!m.is_measured(12, 12));
        assert!(m.is_measured(13, 0));
        assert!(matches!(BeamstopMask::from_block(4, 64, 64), Err(HoloError::Parameter(_))));
        assert!(BeamstopMask::from_block(9, 4, 64).is_err());
    }

    #[test]
    fn beamstop_application() {
        let y = Array2::from_shape_fn((5, 6), |(i, j)| (i * 6 + j) as f64 + 1.0);
        assert_eq!(apply_beamstop(&y, &BeamstopMask::none(5, 6)).unwrap(), y);
        let masked = apply_beamstop(&y, &BeamstopMask::new(1, 1, 5, 6).unwrap()).unwrap();
        assert_eq!(masked[[0, 0]], 0.0);
        assert_eq!((&y - &masked).iter().filter(|&&v| v != 0.0).count(), 1);
        assert!(apply_beamstop(&y, &BeamstopMask::none(6, 5)).is_err());
    }

    #[test]
    fn zero_mean_pixels_stay_zero_and_quantized() {
        let clean = array![[0.0, 1.0, 2.5], [0.0, 4.0, 0.5]];
        let mask = BeamstopMask::none(2, 3);
        let (noisy, mean) = poisson_corrupt(&clean, &mask, 3.0, 9).unwrap();
        assert!((mean - 8.0 / 6.0).abs() < 1e-15);
        assert_eq!(noisy[[0, 0]], 0.0);
        assert_eq!(noisy[[1, 0]], 0.0);
        let quantum = mean / 3.0;
        for v in noisy.iter() {
            let z = v / quantum;
            assert!(z >= 0.0 && (z - z.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_inputs() {
        let mask = BeamstopMask::none(1, 2);
        assert!(poisson_corrupt(&array![[1.0, 1.0]], &mask, 0.0, 0).is_err());
        assert!(matches!(
            poisson_corrupt(&array![[1.0, -1.0]], &mask, 1.0, 0),
            Err(HoloError::Data(_))
        ));
        assert!(matches!(
            poisson_corrupt(&array![[1.0, f64::NAN]], &mask, 1.0, 0),
            Err(HoloError::Data(_))
        ));
    }

    #[test]
    fn reproducible_and_masked() {
        let x = ImageGrid::new(Array2::from_shape_fn((6, 6), |(i, j)| ((i + 2 * j) % 5) as f64 / 4.0)).unwrap();
        let lay = Layout::new(x, crate::references::generate(ReferenceKind::Ura, 6).unwrap(), 6, 2.0, 2.0).unwrap();
        let g = lay.geometry();
        let mask = BeamstopMask::from_block(3, g.m1, g.m2).unwrap();
        let a = simulate(&lay, ReferenceKind::Ura, mask.clone(), 2.0, 42).unwrap();
        let b = simulate(&lay, ReferenceKind::Ura, mask.clone(), 2.0, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&lay, ReferenceKind::Ura, mask.clone(), 2.0, 43).unwrap();
        assert_ne!(a.noisy_intensity(), c.noisy_intensity());
        for ((i, j), v) in a.noisy_intensity().indexed_iter() {
            if !mask.is_measured(i, j) {
                assert_eq!(*v, 0.0);
            }
            let z = v / a.quantum();
            assert!((z - z.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn file_round_trip() {
        let lay = Layout::new(
            ImageGrid::new(Array2::from_elem((4, 4), 0.5)).unwrap(),
            crate::references::generate(ReferenceKind::Block, 4).unwrap(),
            2,
            1.5,
            2.0,
        )
        .unwrap();
        let g = lay.geometry();
        let meas = simulate(&lay, ReferenceKind::Block, BeamstopMask::from_block(3, g.m1, g.m2).unwrap(), 5.0, 7).unwrap();
        let back = Measurement::from_bytes(&meas.to_bytes()).unwrap();
        assert_eq!(meas, back);
        let bytes = meas.to_bytes();
        assert!(Measurement::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Measurement::from_bytes(b"NOTAFILE").is_err());
    }
}
