use std::fmt;

use thiserror::Error;

/// Failure of a single model evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("non-finite conductivity (driven by {input})")]
    NumericalDomain { input: &'static str },
    #[error("graphene conductivity is zero")]
    SingularMaterial,
    #[error("absolute permittivity is zero")]
    SingularPermittivity,
    #[error("dielectric slab resonance at {frequency:.6e} Hz (cot pole)")]
    SlabResonance { frequency: f64 },
    #[error("degenerate load: Y0 + Yin = 0")]
    DegenerateLoad,
    #[error("phase unreachable by width tuning (SPP propagation term has zero real part)")]
    NoSolution,
    #[error("infeasible phase target: required patch width {width:.6e} m is not positive")]
    InfeasiblePhase { width: f64 },
}

impl ModelError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// Short machine-readable code, used in CSV error columns.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::InvalidParameter { .. } => "invalid_parameter",
            ModelError::NumericalDomain { .. } => "numerical_domain",
            ModelError::SingularMaterial => "singular_material",
            ModelError::SingularPermittivity => "singular_permittivity",
            ModelError::SlabResonance { .. } => "slab_resonance",
            ModelError::DegenerateLoad => "degenerate_load",
            ModelError::NoSolution => "no_solution",
            ModelError::InfeasiblePhase { .. } => "infeasible_phase",
        }
    }
}

/// Stage of the reflection chain an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validation,
    GateBias,
    Conductivity,
    PhaseInversion,
    SurfaceAdmittance,
    InputAdmittance,
    ReflectionCoefficient,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Validation => "validation",
            Stage::GateBias => "gate-bias",
            Stage::Conductivity => "conductivity",
            Stage::PhaseInversion => "phase-inversion",
            Stage::SurfaceAdmittance => "surface-admittance",
            Stage::InputAdmittance => "input-admittance",
            Stage::ReflectionCoefficient => "reflection-coefficient",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: ModelError,
}

impl StageError {
    pub fn code(&self) -> &'static str {
        self.source.code()
    }
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T, ModelError> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Top-level error for configuration-driven runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("validation failed for {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error(transparent)]
    Model(#[from] StageError),
    #[error("no feasible design point: all {evaluated} grid points raised model errors")]
    EmptyFeasibleSet { evaluated: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
