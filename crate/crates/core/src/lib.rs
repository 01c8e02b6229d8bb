//! Simulation and phase-space reconstruction for a single atom kicked by the
//! pulsed standing wave of a high-finesse cavity.
//!
//! The atom shifts the cavity resonance through its Kerr response, so the
//! transmitted intensity recorded at each kick encodes the atom's position
//! modulo the reflection `X -> -X`. [`dynamics`] produces ground-truth
//! trajectories and the transmission series, [`reconstruct`] turns the series
//! back into a phase portrait, and [`metrics`] scores the result.

pub mod angle;
pub mod cavity;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod params;
pub mod reconstruct;
pub mod rng;

pub use cavity::{CavityOperatingPoint, SensitivityReport, SolverOptions};
pub use dynamics::{KickRecord, SimOptions, SpontaneousEmission, State, TrajectoryRecord};
pub use error::{Error, Result};
pub use metrics::{EnsembleSummary, FidelityReport};
pub use params::{NormalizedParams, PhysicalParams, Timescales, ValidityReport};
pub use reconstruct::{ReconstructOptions, ReconstructedTrajectory, TransmissionSeries};
