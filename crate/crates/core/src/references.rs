//! Deterministic binary reference objects.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::layout::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReferenceKind {
    /// All zeros: plain (non-holographic) phase retrieval.
    None,
    /// Centered disc of ones. `radius` defaults to `max(1, n/32)` pixels.
    Pinhole { radius: Option<f64> },
    /// All-ones square.
    Block,
    /// Twin-prime uniformly redundant array, tiled periodically from the
    /// top-left corner.
    Ura,
}

impl ReferenceKind {
    pub fn pinhole() -> Self {
        ReferenceKind::Pinhole { radius: None }
    }

    pub fn generate(&self, n: usize) -> Result<ImageGrid> {
        generate(*self, n)
    }
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceKind::None => write!(f, "none"),
            ReferenceKind::Pinhole { radius: None } => write!(f, "pinhole"),
            ReferenceKind::Pinhole { radius: Some(r) } => write!(f, "pinhole:{r}"),
            ReferenceKind::Block => write!(f, "block"),
            ReferenceKind::Ura => write!(f, "ura"),
        }
    }
}

impl FromStr for ReferenceKind {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "none" => Ok(ReferenceKind::None),
            "block" => Ok(ReferenceKind::Block),
            "ura" => Ok(ReferenceKind::Ura),
            "pinhole" => Ok(ReferenceKind::pinhole()),
            other => match other.strip_prefix("pinhole:") {
                Some(r) => {
                    let radius = r
                        .parse::<f64>()
                        .map_err(|_| HoloError::Config(format!("bad pinhole radius {r:?}")))?;
                    Ok(ReferenceKind::Pinhole { radius: Some(radius) })
                }
                None => Err(HoloError::Config(format!("unknown reference kind {s:?}"))),
            },
        }
    }
}

pub fn default_pinhole_radius(n: usize) -> f64 {
    (n as f64 / 32.0).max(1.0)
}

/// Builds the `n x n` reference for `kind`.
pub fn generate(kind: ReferenceKind, n: usize) -> Result<ImageGrid> {
    if n == 0 {
        return Err(HoloError::Parameter("reference size must be positive".into()));
    }
    let values = match kind {
        ReferenceKind::None => Array2::zeros((n, n)),
        ReferenceKind::Block => Array2::ones((n, n)),
        ReferenceKind::Pinhole { radius } => {
            let radius = radius.unwrap_or_else(|| default_pinhole_radius(n));
            if !(radius > 0.0 && radius < n as f64 / 2.0) && !(n <= 2 && radius <= 1.0) {
                return Err(HoloError::Parameter(format!(
                    "pinhole radius {radius} must lie in (0, {})",
                    n as f64 / 2.0
                )));
            }
            let c = (n as f64 - 1.0) / 2.0;
            let r2 = radius * radius;
            Array2::from_shape_fn((n, n), |(i, j)| {
                let (di, dj) = (i as f64 - c, j as f64 - c);
                if di * di + dj * dj <= r2 {
                    1.0
                } else {
                    0.0
                }
            })
        }
        ReferenceKind::Ura => {
            let core = ura_core(n.max(5));
            let (r, s) = core.dim();
            Array2::from_shape_fn((n, n), |(i, j)| core[[i % r, j % s]])
        }
    };
    ImageGrid::new(values)
}

pub fn is_prime(k: usize) -> bool {
    if k < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= k {
        if k % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest twin-prime pair `(p, p + 2)` with `p + 2 <= limit`.
pub fn twin_primes_below(limit: usize) -> Option<(usize, usize)> {
    (3..=limit.saturating_sub(2))
        .rev()
        .find(|&p| is_prime(p) && is_prime(p + 2))
        .map(|p| (p, p + 2))
}

/// `+1` for nonzero quadratic residues mod `p`, `-1` for non-residues, `0` at 0.
fn legendre(x: usize, p: usize) -> i32 {
    let x = x % p;
    if x == 0 {
        return 0;
    }
    if (1..p).any(|k| (k * k) % p == x) {
        1
    } else {
        -1
    }
}

/// Twin-prime URA core of size `p x (p + 2)` for the largest pair fitting in
/// `limit` columns. Its periodic autocorrelation is `(pq - 1)/2` at zero
/// shift and `(pq - 3)/4` everywhere else.
pub fn ura_core(limit: usize) -> Array2<f64> {
    let (p, q) = twin_primes_below(limit).expect("limit >= 5 always has a twin-prime pair");
    let cp: Vec<i32> = (0..p).map(|i| legendre(i, p)).collect();
    let cq: Vec<i32> = (0..q).map(|j| legendre(j, q)).collect();
    Array2::from_shape_fn((p, q), |(i, j)| {
        let open = if j == 0 {
            true
        } else if i == 0 {
            false
        } else {
            cp[i] * cq[j] == 1
        };
        if open {
            1.0
        } else {
            0.0
        }
    })
}
