//! Cartesian parameter sweeps and the figure presets.
//!
//! Rows are ordered lexicographically by axis index with the last axis
//! varying fastest. Points are independent; the result is the same whether
//! they are evaluated serially or on a thread pool.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::circuit::{
    invert_phase_to_width, reflect, DriveSignal, ModelOptions, ReflectionResult, SlabLength,
    UnitCellGeometry,
};
use crate::constants::units::{PS, THZ, UM};
use crate::error::{AtStage, Stage, StageError};
use crate::graphene::{
    carrier_density_from_gate, fermi_level_from_density, kubo_conductivity, GateBiasParams,
    GrapheneParams,
};
use crate::Error;

/// Default number of points on a dense axis.
pub const DEFAULT_DENSITY: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepParameter {
    FermiLevel,
    PatchWidth,
    RelaxationTime,
    Frequency,
    FreeSpaceImpedance,
    PhaseTarget,
    GateVoltage,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 7] = [
        SweepParameter::FermiLevel,
        SweepParameter::PatchWidth,
        SweepParameter::RelaxationTime,
        SweepParameter::Frequency,
        SweepParameter::FreeSpaceImpedance,
        SweepParameter::PhaseTarget,
        SweepParameter::GateVoltage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::FermiLevel => "fermi_level",
            SweepParameter::PatchWidth => "patch_width",
            SweepParameter::RelaxationTime => "relaxation_time",
            SweepParameter::Frequency => "frequency",
            SweepParameter::FreeSpaceImpedance => "free_space_impedance",
            SweepParameter::PhaseTarget => "phase_target",
            SweepParameter::GateVoltage => "gate_voltage",
        }
    }

    /// Interface unit, used as the CSV column suffix.
    pub fn unit(self) -> &'static str {
        match self {
            SweepParameter::FermiLevel => "ev",
            SweepParameter::PatchWidth => "um",
            SweepParameter::RelaxationTime => "ps",
            SweepParameter::Frequency => "thz",
            SweepParameter::FreeSpaceImpedance => "ohm",
            SweepParameter::PhaseTarget => "rad",
            SweepParameter::GateVoltage => "v",
        }
    }

    pub fn column(self) -> String {
        format!("{}_{}", self.name(), self.unit())
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown sweep parameter `{s}`")))
    }
}

/// One swept input with its values in interface units.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(parameter: SweepParameter, values: Vec<f64>) -> Self {
        Self { parameter, values }
    }

    pub fn linspace(parameter: SweepParameter, start: f64, stop: f64, count: usize) -> Self {
        Self::new(parameter, linspace(start, stop, count))
    }

    fn validate(&self) -> Result<(), Error> {
        let name = self.parameter.name();
        if self.values.is_empty() {
            return Err(Error::config(format!("axis `{name}` has no values")));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "axis `{name}` has non-finite values"
            )));
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::config(format!(
                "axis `{name}` values must be strictly monotone"
            )));
        }
        Ok(())
    }
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let span = stop - start;
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop
                    } else {
                        start + span * (i as f64) / last
                    }
                })
                .collect()
        }
    }
}

/// A complete model input: everything `reflect` needs plus the optional gate
/// chain and phase-target routing.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graphene: GrapheneParams,
    /// When present, the Fermi level is derived from the gate bias.
    pub gate: Option<GateBiasParams>,
    pub geometry: UnitCellGeometry,
    pub drive: DriveSignal,
    pub options: ModelOptions,
    /// SPP order for the reported phase; `None` picks it automatically.
    pub spp_order: Option<i32>,
    /// SPP order used when inverting a phase target to a patch width.
    pub phase_order: i32,
    /// When set, the patch width is solved from this SPP phase (rad).
    pub phase_target: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        let options = ModelOptions::default();
        Self {
            graphene: GrapheneParams {
                fermi_level: options.constants.ev_to_joule(1.0),
                relaxation_time: 6.0 * PS,
                temperature: 300.0,
                thickness: 0.000345 * UM,
                fermi_velocity: GrapheneParams::DEFAULT_FERMI_VELOCITY,
            },
            gate: None,
            geometry: UnitCellGeometry {
                patch_width: 10.0 * UM,
                period: 90.0 * UM,
                eigenvalue_coeff: 0.221,
                substrate_index: 1.8,
                slab: SlabLength::TrackIncident,
            },
            drive: DriveSignal {
                frequency: THZ,
                free_space_impedance: 377.0,
            },
            options,
            spp_order: None,
            phase_order: 1,
            phase_target: None,
        }
    }
}

/// Outcome of one scenario evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResult {
    /// Patch width actually used (m); differs from the baseline when a phase
    /// target is set.
    pub patch_width: f64,
    /// Fermi level actually used (J); differs when a gate bias is set.
    pub fermi_level: f64,
    pub reflection: ReflectionResult,
}

impl Scenario {
    /// Set one parameter from an interface-unit value.
    pub fn set(&mut self, parameter: SweepParameter, value: f64) {
        let c = &self.options.constants;
        match parameter {
            SweepParameter::FermiLevel => self.graphene.fermi_level = c.ev_to_joule(value),
            SweepParameter::PatchWidth => self.geometry.patch_width = value * UM,
            SweepParameter::RelaxationTime => self.graphene.relaxation_time = value * PS,
            SweepParameter::Frequency => self.drive.frequency = value * THZ,
            SweepParameter::FreeSpaceImpedance => self.drive.free_space_impedance = value,
            SweepParameter::PhaseTarget => self.phase_target = Some(value),
            SweepParameter::GateVoltage => {
                if let Some(gate) = self.gate.as_mut() {
                    gate.gate_voltage = value;
                }
            }
        }
    }

    /// Current value of a parameter in interface units.
    pub fn get(&self, parameter: SweepParameter) -> Option<f64> {
        let c = &self.options.constants;
        match parameter {
            SweepParameter::FermiLevel => Some(c.joule_to_ev(self.graphene.fermi_level)),
            SweepParameter::PatchWidth => Some(self.geometry.patch_width / UM),
            SweepParameter::RelaxationTime => Some(self.graphene.relaxation_time / PS),
            SweepParameter::Frequency => Some(self.drive.frequency / THZ),
            SweepParameter::FreeSpaceImpedance => Some(self.drive.free_space_impedance),
            SweepParameter::PhaseTarget => self.phase_target,
            SweepParameter::GateVoltage => self.gate.map(|g| g.gate_voltage),
        }
    }

    /// Fermi level after resolving the gate chain (J).
    pub fn resolved_fermi_level(&self) -> Result<f64, StageError> {
        match &self.gate {
            None => Ok(self.graphene.fermi_level),
            Some(gate) => {
                gate.validate().at(Stage::GateBias)?;
                let density = carrier_density_from_gate(gate);
                Ok(fermi_level_from_density(
                    &self.options.constants,
                    density,
                    self.graphene.fermi_velocity,
                ))
            }
        }
    }

    pub fn evaluate(&self) -> Result<PointResult, StageError> {
        let c = &self.options.constants;
        let mut graphene = self.graphene;
        graphene.fermi_level = self.resolved_fermi_level()?;
        let mut geometry = self.geometry;
        let mut spp_order = self.spp_order;
        if let Some(theta) = self.phase_target {
            let sigma =
                kubo_conductivity(c, &graphene, self.drive.frequency).at(Stage::Conductivity)?;
            geometry.patch_width =
                invert_phase_to_width(c, theta, sigma, &self.drive, self.phase_order)
                    .at(Stage::PhaseInversion)?;
            spp_order = Some(self.phase_order);
        }
        let reflection = reflect(&self.options, &graphene, &geometry, &self.drive, spp_order)?;
        Ok(PointResult {
            patch_width: geometry.patch_width,
            fermi_level: graphene.fermi_level,
            reflection,
        })
    }
}

/// Serial or pooled evaluation of independent points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Rayon pool; `None` threads uses the global pool.
    #[default]
    Parallel,
    Threads(usize),
}

impl Execution {
    pub(crate) fn map_indexed<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Serial => (0..count).map(f).collect(),
            Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
            Execution::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
                Err(_) => (0..count).map(f).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Per-axis indices, lexicographic order.
    pub index: Vec<usize>,
    /// Per-axis values in interface units.
    pub coordinates: Vec<f64>,
    pub outcome: Result<PointResult, StageError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Preset name when the table came from one.
    pub label: Option<String>,
    /// Free-form provenance notes carried into output metadata.
    pub notes: Vec<String>,
    pub axes: Vec<SweepAxis>,
    pub baseline: Scenario,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// Lexicographic multi-index of flat position `k` (last axis fastest).
pub(crate) fn unravel(mut k: usize, lengths: &[usize]) -> Vec<usize> {
    let mut index = vec![0; lengths.len()];
    for (slot, &len) in index.iter_mut().zip(lengths).rev() {
        *slot = k % len;
        k /= len;
    }
    index
}

pub(crate) fn validate_baseline(baseline: &Scenario) -> Result<(), Error> {
    let as_validation = |e: crate::ModelError| match e {
        crate::ModelError::InvalidParameter { field, reason } => Error::validation(field, reason),
        other => Error::validation("baseline", other.to_string()),
    };
    baseline
        .options
        .constants
        .validate()
        .map_err(as_validation)?;
    baseline.graphene.validate().map_err(as_validation)?;
    baseline.drive.validate().map_err(as_validation)?;
    if let Some(gate) = &baseline.gate {
        gate.validate().map_err(as_validation)?;
    }
    // patch width may be replaced by a phase target, so only check the rest
    let geom = UnitCellGeometry {
        patch_width: baseline.geometry.period.min(baseline.geometry.patch_width),
        ..baseline.geometry
    };
    geom.validate().map_err(as_validation)
}

pub(crate) fn validate_axes(axes: &[SweepAxis], baseline: &Scenario) -> Result<(), Error> {
    for (i, axis) in axes.iter().enumerate() {
        axis.validate()?;
        if axes[..i].iter().any(|a| a.parameter == axis.parameter) {
            return Err(Error::config(format!(
                "axis `{}` appears more than once",
                axis.parameter
            )));
        }
    }
    let has = |p| axes.iter().any(|a| a.parameter == p);
    if has(SweepParameter::GateVoltage) && baseline.gate.is_none() {
        return Err(Error::config(
            "a gate_voltage axis needs gate bias parameters in the baseline",
        ));
    }
    if has(SweepParameter::FermiLevel) && baseline.gate.is_some() {
        return Err(Error::config(
            "fermi_level cannot be swept while the gate bias sets it",
        ));
    }
    if has(SweepParameter::PhaseTarget) && has(SweepParameter::PatchWidth) {
        return Err(Error::config(
            "phase_target and patch_width axes both set the patch width",
        ));
    }
    Ok(())
}

/// Evaluate the model at every point of the Cartesian product of `axes`.
///
/// Model failures at individual points are stored in their rows; only
/// invalid axes or an invalid baseline abort the sweep.
pub fn run_sweep(
    axes: &[SweepAxis],
    baseline: &Scenario,
    exec: Execution,
) -> Result<SweepTable, Error> {
    validate_axes(axes, baseline)?;
    validate_baseline(baseline)?;
    let lengths: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
    let count = lengths.iter().product::<usize>();
    let rows = exec.map_indexed(count, |k| {
        let index = unravel(k, &lengths);
        let mut scenario = baseline.clone();
        let coordinates: Vec<f64> = axes
            .iter()
            .zip(&index)
            .map(|(axis, &i)| {
                let v = axis.values[i];
                scenario.set(axis.parameter, v);
                v
            })
            .collect();
        SweepRow {
            index,
            coordinates,
            outcome: scenario.evaluate(),
        }
    });
    Ok(SweepTable {
        label: None,
        notes: Vec::new(),
        axes: axes.to_vec(),
        baseline: baseline.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Fig3 => "reflection amplitude vs Fermi level at 1, 2, 3 THz",
            Preset::Fig4 => "reflection amplitude vs patch width at 1, 2, 3 THz, E_F = 1.25 eV",
            Preset::Fig5 => "reflection amplitude vs frequency for relaxation times 2, 4, 6 ps",
            Preset::Fig6 => {
                "reflection amplitude vs frequency at SPP phase targets -pi/2, 0, pi/2 (width solved per point)"
            }
            Preset::Fig7 => "reflection amplitude vs free-space impedance at 1, 2, 3 THz, E_F = 2.5 eV",
            Preset::Fig8 => "sheet conductivity vs frequency for E_F = 0.5, 1.5, 2.5 eV",
        }
    }

    /// Fermi level (eV) this preset pins in its baseline, if any.
    pub fn fermi_level_ev(self) -> Option<f64> {
        match self {
            Preset::Fig4 => Some(1.25),
            Preset::Fig7 => Some(2.5),
            _ => None,
        }
    }

    /// Swept axes, family axis first, x axis last. `density` sets the dense axis.
    pub fn axes(self, density: usize) -> Vec<SweepAxis> {
        use SweepParameter::*;
        let thz_123 = || SweepAxis::new(Frequency, vec![1.0, 2.0, 3.0]);
        let dense_f = || SweepAxis::linspace(Frequency, 0.1, 3.0, density);
        match self {
            Preset::Fig3 => vec![
                thz_123(),
                SweepAxis::linspace(FermiLevel, 0.05, 2.5, density),
            ],
            Preset::Fig4 => vec![
                thz_123(),
                SweepAxis::linspace(PatchWidth, 10.0, 25.0, density),
            ],
            Preset::Fig5 => vec![
                SweepAxis::new(RelaxationTime, vec![2.0, 4.0, 6.0]),
                dense_f(),
            ],
            Preset::Fig6 => vec![
                SweepAxis::new(PhaseTarget, vec![-FRAC_PI_2, 0.0, FRAC_PI_2]),
                dense_f(),
            ],
            Preset::Fig7 => vec![
                thz_123(),
                SweepAxis::linspace(FreeSpaceImpedance, 50.0, 1000.0, density),
            ],
            Preset::Fig8 => vec![SweepAxis::new(FermiLevel, vec![0.5, 1.5, 2.5]), dense_f()],
        }
    }

    pub fn notes(self) -> Vec<String> {
        let mut notes = vec![
            format!("preset {}: {}", self.name(), self.description()),
            "axis grids are reconstructed; dense axes use the configured point count".to_string(),
        ];
        if self == Preset::Fig3 {
            notes.push("Fermi-level axis starts at 0.05 eV to resolve the low-E_F region".into());
        }
        if self == Preset::Fig6 {
            notes.push("patch width solved from the SPP phase at order phase_order; widths above the period are reported as errors".into());
        }
        notes
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown preset `{s}` (expected fig3..fig8)")))
    }
}

/// Ready-to-run axes and baseline for a named preset.
pub fn preset(name: &str, density: usize) -> Result<(Vec<SweepAxis>, Scenario), Error> {
    let p: Preset = name.parse()?;
    let mut baseline = Scenario::default();
    if let Some(ef) = p.fermi_level_ev() {
        baseline.set(SweepParameter::FermiLevel, ef);
    }
    Ok((p.axes(density), baseline))
}

/// Run a preset end to end, tagging the table with its name and notes.
pub fn run_preset(
    p: Preset,
    baseline: &Scenario,
    density: usize,
    exec: Execution,
) -> Result<SweepTable, Error> {
    let mut table = run_sweep(&p.axes(density), baseline, exec)?;
    table.label = Some(p.name().to_string());
    table.notes = p.notes();
    Ok(table)
}
