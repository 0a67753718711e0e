//! Closed-form reflection model of a graphene patch reflecting-surface unit
//! cell at THz frequencies.
//!
//! The chain runs from gate bias and material parameters to the intraband
//! sheet conductivity, the patch surface admittance, the quarter-wave slab
//! input admittance, and finally the complex reflection coefficient, its
//! amplitude, and two phase models. On top of that sit Cartesian sweeps with
//! figure presets, a grid-then-refine design optimizer, and configuration /
//! CSV I/O used by the `girs` command-line tool.

pub mod circuit;
pub mod constants;
mod error;
pub mod graphene;
pub mod io;
pub mod optimize;
pub mod sweep;

pub use circuit::{
    reflect, AdmittanceForm, DriveSignal, ModelOptions, ReflectionResult, SlabLength,
    UnitCellGeometry,
};
pub use constants::PhysicalConstants;
pub use error::{Error, ModelError, Stage, StageError};
pub use graphene::{GateBiasParams, GrapheneParams, SheetConductivity};
pub use optimize::{DesignObjective, DesignParameter, ParameterBox, ParameterRange};
pub use sweep::{Execution, Preset, Scenario, SweepAxis, SweepParameter, SweepTable};

pub use num_complex::Complex64;

/// Version string written into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
