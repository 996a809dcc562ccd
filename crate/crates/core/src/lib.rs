//! Simulation and reconstruction of fragmented collective-motion
//! trajectories.
//!
//! - [`vicsek`] generates swarm trajectories with a rotation-augmented Vicsek model.
//! - [`trajectory`] holds the `2n x T` data model, fragmentation, normalization and CSV I/O.
//! - [`rank`] estimates linear and nonlinear (geodesic) rank of a dataset.
//! - [`hda`] reconstructs missing entries with a mask-weighted autoencoder.
//! - [`lmc`] reconstructs them by nuclear-norm matrix completion.
//! - [`experiment`] wires these into reproducible fragmentation sweeps.

pub mod error;
pub mod experiment;
pub mod hda;
pub mod lmc;
pub mod numerics;
pub mod rank;
pub mod trajectory;
pub mod vicsek;

pub use error::{Error, Result};
pub use numerics::{Matrix, SvdResult};
pub use rank::{RankFlavor, RankReport};
pub use trajectory::{IndicatorMask, NormalizationRecord, RmseMode, TrajectorySet};
pub use vicsek::{ScheduleKind, SimConfig};
pub use experiment::{ExperimentConfig, ExperimentReport, Scenario};
