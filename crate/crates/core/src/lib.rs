//! Holographic phase retrieval from Poisson-corrupted far-field intensities.
//!
//! The pipeline is: assemble a specimen/gap/reference [`layout::Layout`],
//! simulate detector data with [`detector::simulate`], wrap it in an
//! [`objective::Problem`] and reconstruct with [`solvers::solve_cg`],
//! [`solvers::solve_admm`] or one of the [`baselines`]. The
//! [`experiment`] module strings these together for reproducible sweeps.

pub mod baselines;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod imageio;
pub mod layout;
pub mod metrics;
pub mod objective;
pub mod phantoms;
pub mod references;
pub mod solvers;

pub use detector::{BeamstopMask, Measurement};
pub use error::{HoloError, Result};
pub use fourier::{ComplexField, HoloOperator};
pub use layout::{Geometry, ImageGrid, Layout};
pub use metrics::ErrorReport;
pub use objective::Problem;
pub use phantoms::Phantom;
pub use references::ReferenceKind;
pub use solvers::{ReconResult, SolverConfig};
