//! Built-in synthetic specimens.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::layout::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phantom {
    /// Bright disc with an offset dimmer inclusion.
    Disc,
    /// Modified Shepp-Logan head phantom.
    SheppLogan,
    /// Procedural scene: graded sky, dark figure, textured ground.
    Cameraman,
}

impl Phantom {
    pub const ALL: [Phantom; 3] = [Phantom::Disc, Phantom::SheppLogan, Phantom::Cameraman];

    pub fn render(&self, n: usize) -> ImageGrid {
        let values = match self {
            Phantom::Disc => disc(n),
            Phantom::SheppLogan => shepp_logan(n),
            Phantom::Cameraman => cameraman(n),
        };
        ImageGrid::clamped(values).expect("phantoms are finite and non-empty")
    }
}

impl fmt::Display for Phantom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phantom::Disc => "disc",
            Phantom::SheppLogan => "shepp-logan",
            Phantom::Cameraman => "cameraman",
        })
    }
}

impl FromStr for Phantom {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disc" => Ok(Phantom::Disc),
            "shepp-logan" | "shepp_logan" | "shepplogan" => Ok(Phantom::SheppLogan),
            "cameraman" => Ok(Phantom::Cameraman),
            other => Err(HoloError::Config(format!("unknown phantom {other:?}"))),
        }
    }
}

/// Pixel centre in `[-1, 1]^2` with y pointing up.
fn coords(i: usize, j: usize, n: usize) -> (f64, f64) {
    let x = (2.0 * j as f64 + 1.0) / n as f64 - 1.0;
    let y = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    (x, y)
}

fn disc(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = coords(i, j, n);
        let mut v = 0.0;
        if x * x + y * y < 0.7 * 0.7 {
            v = 1.0;
        }
        let (dx, dy) = (x - 0.25, y + 0.15);
        if dx * dx + dy * dy < 0.2 * 0.2 {
            v = 0.5;
        }
        v
    })
}

// (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

fn shepp_logan(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = coords(i, j, n);
        SHEPP_LOGAN
            .iter()
            .filter(|&&(_, a, b, x0, y0, deg)| {
                let (s, c) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            })
            .map(|e| e.0)
            .sum::<f64>()
    })
}

/// Deterministic integer hash mapped to `[0, 1)`.
fn hash_noise(i: usize, j: usize) -> f64 {
    let mut h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 31;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 29;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn cameraman(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = coords(i, j, n);
        // sky brightens upwards, ground is textured
        let mut v = if y > -0.4 {
            0.55 + 0.3 * (y + 0.4) / 1.4 + 0.05 * (3.0 * x).sin()
        } else {
            0.35 + 0.25 * hash_noise(i, j) + 0.1 * (9.0 * x + 4.0 * y).sin()
        };
        // figure: head, coat, tripod legs
        let head = (x + 0.15).powi(2) + (y - 0.45).powi(2) < 0.13 * 0.13;
        let coat = (x + 0.15).abs() < 0.22 - 0.1 * (y - 0.3) && y < 0.33 && y > -0.55;
        let leg = |slope: f64, x0: f64| (x - x0 - slope * (y + 0.2)).abs() < 0.025 && y < 0.0 && y > -0.85;
        if head || coat {
            v = 0.08 + 0.04 * hash_noise(j, i);
        }
        if leg(0.35, 0.35) || leg(-0.2, 0.35) || leg(0.0, 0.35) {
            v = 0.05;
        }
        // camera box
        if (x - 0.35).abs() < 0.09 && (y - 0.05).abs() < 0.06 {
            v = 0.12;
        }
        v
    })
}
