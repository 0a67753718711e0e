//! Strict TOML run configuration.
//!
//! All values are given in interface units:
//!
//! | key                               | unit        | default          |
//! |-----------------------------------|-------------|------------------|
//! | `graphene.fermi_level`            | eV          | 1.0              |
//! | `graphene.relaxation_time`        | ps          | 6.0              |
//! | `graphene.temperature`            | K           | 300.0            |
//! | `graphene.thickness`              | μm          | 0.000345         |
//! | `graphene.fermi_velocity`         | m/s         | 1e6              |
//! | `gate.gate_voltage`               | V           | (no gate)        |
//! | `gate.compensating_voltage`       | V           | 0.0              |
//! | `gate.gate_capacitance_coeff`     | m⁻⁴·V⁻²     | 0.0              |
//! | `gate.residual_density`           | m⁻²         | 0.0              |
//! | `geometry.patch_width`            | μm          | 10.0             |
//! | `geometry.period`                 | μm          | 90.0             |
//! | `geometry.eigenvalue_coeff`       | —           | 0.221            |
//! | `geometry.substrate_index`        | —           | 1.8              |
//! | `geometry.slab_design_frequency`  | THz or `"track-incident"` | `"track-incident"` |
//! | `drive.frequency`                 | THz         | 1.0              |
//! | `drive.free_space_impedance`      | Ω           | 377.0            |
//! | `model.admittance_form`           | `"scaled-reciprocal"` / `"literal"` | `"scaled-reciprocal"` |
//! | `model.spp_order`                 | integer     | automatic        |
//! | `model.phase_order`               | integer     | 1                |
//! | `model.paper_constants`           | bool        | false            |
//! | `constants.*`                     | SI          | CODATA 2018      |
//!
//! `[sweep]` takes either `preset` or `[[sweep.axes]]`; `[optimize]` takes an
//! objective and `[[optimize.ranges]]`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::circuit::{AdmittanceForm, ModelOptions, SlabLength, EIGENVALUE_COEFF_RANGE};
use crate::constants::units::{PS, THZ, UM};
use crate::constants::PhysicalConstants;
use crate::graphene::GateBiasParams;
use crate::optimize::{DesignObjective, ParameterBox, ParameterRange};
use crate::sweep::{Preset, Scenario, SweepAxis, SweepParameter, DEFAULT_DENSITY};
use crate::{DesignParameter, DriveSignal, Error, GrapheneParams, UnitCellGeometry};

/// Where a materialized value came from. Later variants take precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    Default,
    Preset,
    File,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::Preset => "preset",
            Source::File => "file",
            Source::Flag => "flag",
        })
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graphene: Option<GrapheneDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate: Option<GateDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    geometry: Option<GeometryDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drive: Option<DriveDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constants: Option<ConstantsDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimize: Option<OptimizeDoc>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GrapheneDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    fermi_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relaxation_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thickness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fermi_velocity: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GateDoc {
    gate_voltage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    compensating_voltage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate_capacitance_coeff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_density: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum SlabDoc {
    Frequency(f64),
    Policy(String),
}

const TRACK_INCIDENT: &str = "track-incident";

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GeometryDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    patch_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalue_coeff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    substrate_index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slab_design_frequency: Option<SlabDoc>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DriveDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    free_space_impedance: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    admittance_form: Option<AdmittanceForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spp_order: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_order: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    paper_constants: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConstantsDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    electron_charge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced_planck: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boltzmann: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vacuum_permittivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    light_speed: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    axes: Vec<AxisDoc>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AxisDoc {
    parameter: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct OptimizeDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_ra: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refine: Option<bool>,
    #[serde(default)]
    ranges: Vec<RangeDoc>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RangeDoc {
    parameter: String,
    min: f64,
    max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

/// Command-line values layered over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub fermi_level: Option<f64>,
    pub relaxation_time: Option<f64>,
    pub temperature: Option<f64>,
    pub patch_width: Option<f64>,
    pub period: Option<f64>,
    pub eigenvalue_coeff: Option<f64>,
    pub substrate_index: Option<f64>,
    pub frequency: Option<f64>,
    pub free_space_impedance: Option<f64>,
    pub admittance_form: Option<AdmittanceForm>,
    pub spp_order: Option<i32>,
    pub paper_constants: Option<bool>,
    pub preset: Option<Preset>,
    pub points: Option<usize>,
    pub output: Option<PathBuf>,
}

/// Fully materialized model inputs, interface units.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub fermi_level: f64,
    pub relaxation_time: f64,
    pub temperature: f64,
    pub thickness: f64,
    pub fermi_velocity: f64,
    pub gate: Option<GateBiasParams>,
    pub patch_width: f64,
    pub period: f64,
    pub eigenvalue_coeff: f64,
    pub substrate_index: f64,
    /// THz; `None` tracks the incident frequency.
    pub slab_design_frequency: Option<f64>,
    pub frequency: f64,
    pub free_space_impedance: f64,
    pub admittance_form: AdmittanceForm,
    pub spp_order: Option<i32>,
    pub phase_order: i32,
    pub paper_constants: bool,
    pub constants: PhysicalConstants,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub preset: Option<Preset>,
    pub points: usize,
    /// Materialized axes (the preset's when one is named).
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSpec {
    pub objective: DesignObjective,
    pub ranges: Vec<ParameterRange>,
    pub tolerances: Vec<f64>,
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub settings: Settings,
    pub sweep: Option<SweepSpec>,
    pub optimize: Option<OptimizeSpec>,
    pub output: Option<PathBuf>,
    /// Source of every materialized setting, keyed `section.name`.
    pub provenance: BTreeMap<String, Source>,
}

struct Resolver {
    provenance: BTreeMap<String, Source>,
}

impl Resolver {
    fn pick<T>(
        &mut self,
        key: &str,
        flag: Option<T>,
        file: Option<T>,
        preset: Option<T>,
        default: T,
    ) -> T {
        let (value, source) = match (flag, file, preset) {
            (Some(v), _, _) => (v, Source::Flag),
            (None, Some(v), _) => (v, Source::File),
            (None, None, Some(v)) => (v, Source::Preset),
            (None, None, None) => (default, Source::Default),
        };
        self.provenance.insert(key.to_string(), source);
        value
    }
}

/// Parse and validate a configuration document with no overrides.
pub fn parse_config(text: &str) -> Result<RunConfig, Error> {
    parse_config_with(text, &Overrides::default())
}

/// Parse a document, layer `flags` on top, fill defaults and validate.
pub fn parse_config_with(text: &str, flags: &Overrides) -> Result<RunConfig, Error> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut r = Resolver {
        provenance: BTreeMap::new(),
    };

    let sweep_doc = doc.sweep.unwrap_or_default();
    let file_preset = sweep_doc
        .preset
        .as_deref()
        .map(str::parse::<Preset>)
        .transpose()?;
    let preset = flags.preset.or(file_preset);
    if preset.is_some() && !sweep_doc.axes.is_empty() {
        return Err(Error::config(
            "[sweep] takes either `preset` or `axes`, not both",
        ));
    }

    let g = doc.graphene.unwrap_or_default();
    let geo = doc.geometry.unwrap_or_default();
    let dr = doc.drive.unwrap_or_default();
    let md = doc.model.unwrap_or_default();

    let gate = doc.gate.map(|gd| GateBiasParams {
        gate_voltage: gd.gate_voltage,
        compensating_voltage: gd.compensating_voltage.unwrap_or(0.0),
        gate_capacitance_coeff: gd.gate_capacitance_coeff.unwrap_or(0.0),
        residual_density: gd.residual_density.unwrap_or(0.0),
    });
    if gate.is_some() && (g.fermi_level.is_some() || flags.fermi_level.is_some()) {
        return Err(Error::config(
            "graphene.fermi_level cannot be set together with [gate]; the gate bias determines it",
        ));
    }

    let paper_constants = r.pick(
        "model.paper_constants",
        flags.paper_constants,
        md.paper_constants,
        None,
        false,
    );
    let base = if paper_constants {
        PhysicalConstants::ROUNDED_CHARGE
    } else {
        PhysicalConstants::CODATA_2018
    };
    let cd = doc.constants.unwrap_or_default();
    let constants = PhysicalConstants {
        electron_charge: r.pick(
            "constants.electron_charge",
            None,
            cd.electron_charge,
            None,
            base.electron_charge,
        ),
        reduced_planck: r.pick(
            "constants.reduced_planck",
            None,
            cd.reduced_planck,
            None,
            base.reduced_planck,
        ),
        boltzmann: r.pick(
            "constants.boltzmann",
            None,
            cd.boltzmann,
            None,
            base.boltzmann,
        ),
        vacuum_permittivity: r.pick(
            "constants.vacuum_permittivity",
            None,
            cd.vacuum_permittivity,
            None,
            base.vacuum_permittivity,
        ),
        light_speed: r.pick(
            "constants.light_speed",
            None,
            cd.light_speed,
            None,
            base.light_speed,
        ),
    };

    let slab_design_frequency = match geo.slab_design_frequency {
        None => {
            r.provenance
                .insert("geometry.slab_design_frequency".into(), Source::Default);
            None
        }
        Some(slab) => {
            r.provenance
                .insert("geometry.slab_design_frequency".into(), Source::File);
            match slab {
                SlabDoc::Frequency(f) => Some(f),
                SlabDoc::Policy(p) if p == TRACK_INCIDENT => None,
                SlabDoc::Policy(p) => {
                    return Err(Error::validation(
                        "geometry.slab_design_frequency",
                        format!("expected a frequency in THz or \"{TRACK_INCIDENT}\", got \"{p}\""),
                    ))
                }
            }
        }
    };

    let settings = Settings {
        fermi_level: r.pick(
            "graphene.fermi_level",
            flags.fermi_level,
            g.fermi_level,
            preset.and_then(Preset::fermi_level_ev),
            1.0,
        ),
        relaxation_time: r.pick(
            "graphene.relaxation_time",
            flags.relaxation_time,
            g.relaxation_time,
            None,
            6.0,
        ),
        temperature: r.pick(
            "graphene.temperature",
            flags.temperature,
            g.temperature,
            None,
            300.0,
        ),
        thickness: r.pick("graphene.thickness", None, g.thickness, None, 0.000345),
        fermi_velocity: r.pick(
            "graphene.fermi_velocity",
            None,
            g.fermi_velocity,
            None,
            GrapheneParams::DEFAULT_FERMI_VELOCITY,
        ),
        gate,
        patch_width: r.pick(
            "geometry.patch_width",
            flags.patch_width,
            geo.patch_width,
            None,
            10.0,
        ),
        period: r.pick("geometry.period", flags.period, geo.period, None, 90.0),
        eigenvalue_coeff: r.pick(
            "geometry.eigenvalue_coeff",
            flags.eigenvalue_coeff,
            geo.eigenvalue_coeff,
            None,
            0.221,
        ),
        substrate_index: r.pick(
            "geometry.substrate_index",
            flags.substrate_index,
            geo.substrate_index,
            None,
            1.8,
        ),
        slab_design_frequency,
        frequency: r.pick("drive.frequency", flags.frequency, dr.frequency, None, 1.0),
        free_space_impedance: r.pick(
            "drive.free_space_impedance",
            flags.free_space_impedance,
            dr.free_space_impedance,
            None,
            377.0,
        ),
        admittance_form: r.pick(
            "model.admittance_form",
            flags.admittance_form,
            md.admittance_form,
            None,
            AdmittanceForm::ScaledReciprocal,
        ),
        spp_order: r.pick(
            "model.spp_order",
            flags.spp_order.map(Some),
            md.spp_order.map(Some),
            None,
            None,
        ),
        phase_order: r.pick("model.phase_order", None, md.phase_order, None, 1),
        paper_constants,
        constants,
    };
    settings.validate()?;
    let scenario = settings.scenario();

    let points = r.pick(
        "sweep.points",
        flags.points,
        sweep_doc.points,
        None,
        DEFAULT_DENSITY,
    );
    if points == 0 {
        return Err(Error::validation("sweep.points", "must be >= 1"));
    }
    let sweep = if let Some(p) = preset {
        Some(SweepSpec {
            preset: Some(p),
            points,
            axes: p.axes(points),
        })
    } else if !sweep_doc.axes.is_empty() {
        let axes = sweep_doc
            .axes
            .iter()
            .map(AxisDoc::materialize)
            .collect::<Result<Vec<_>, _>>()?;
        crate::sweep::validate_axes(&axes, &scenario)?;
        Some(SweepSpec {
            preset: None,
            points,
            axes,
        })
    } else {
        None
    };

    let optimize = doc
        .optimize
        .map(|od| od.materialize(&scenario))
        .transpose()?;

    let output = flags
        .output
        .clone()
        .or_else(|| doc.output.map(PathBuf::from));

    Ok(RunConfig {
        settings,
        sweep,
        optimize,
        output,
        provenance: r.provenance,
    })
}

impl AxisDoc {
    fn materialize(&self) -> Result<SweepAxis, Error> {
        let parameter: SweepParameter = self.parameter.parse()?;
        let values = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => crate::sweep::linspace(a, b, n),
            _ => {
                return Err(Error::config(format!(
                    "axis `{}` needs either `values` or all of `start`, `stop`, `count`",
                    self.parameter
                )))
            }
        };
        Ok(SweepAxis::new(parameter, values))
    }
}

impl OptimizeDoc {
    fn materialize(self, baseline: &Scenario) -> Result<OptimizeSpec, Error> {
        let phase_weight = self
            .phase_weight
            .unwrap_or(DesignObjective::DEFAULT_PHASE_WEIGHT);
        let objective = match self.objective.as_deref().unwrap_or("maximize-ra") {
            "maximize-ra" => {
                if self.target_ra.is_some() || self.target_phase.is_some() {
                    return Err(Error::config(
                        "target_ra/target_phase need objective = \"match-target\"",
                    ));
                }
                DesignObjective::MaximizeRa
            }
            "match-target" => DesignObjective::MatchTarget {
                target_ra: self
                    .target_ra
                    .ok_or_else(|| Error::config("match-target needs `target_ra`"))?,
                target_phase: self
                    .target_phase
                    .ok_or_else(|| Error::config("match-target needs `target_phase`"))?,
                phase_weight,
            },
            other => {
                return Err(Error::config(format!(
                    "unknown objective `{other}` (expected \"maximize-ra\" or \"match-target\")"
                )))
            }
        };
        objective.validate()?;
        if self.ranges.is_empty() {
            return Err(Error::config(
                "[optimize] needs at least one [[optimize.ranges]] entry",
            ));
        }
        let mut ranges = Vec::with_capacity(self.ranges.len());
        let mut tolerances = Vec::with_capacity(self.ranges.len());
        for rd in &self.ranges {
            let parameter: DesignParameter = rd.parameter.parse()?;
            ranges.push(ParameterRange {
                parameter,
                min: rd.min,
                max: rd.max,
                steps: rd.steps.unwrap_or(21),
            });
            let tol = rd.tolerance.unwrap_or((rd.max - rd.min) * 1e-6);
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::validation(
                    format!("optimize.ranges.{}.tolerance", rd.parameter),
                    "must be finite and >= 0",
                ));
            }
            tolerances.push(tol);
        }
        ParameterBox {
            ranges: ranges.clone(),
            baseline: baseline.clone(),
        }
        .validate()?;
        Ok(OptimizeSpec {
            objective,
            ranges,
            tolerances,
            refine: self.refine.unwrap_or(true),
        })
    }
}

fn check(ok: bool, field: &str, reason: &str, value: f64) -> Result<(), Error> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(field, format!("{reason} (got {value})")))
    }
}

impl Settings {
    pub fn validate(&self) -> Result<(), Error> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        check(
            self.fermi_level.is_finite() && self.fermi_level >= 0.0,
            "graphene.fermi_level",
            "must be >= 0 eV",
            self.fermi_level,
        )?;
        check(
            pos(self.relaxation_time),
            "graphene.relaxation_time",
            "must be > 0 ps",
            self.relaxation_time,
        )?;
        check(
            pos(self.temperature),
            "graphene.temperature",
            "must be > 0 K",
            self.temperature,
        )?;
        check(
            pos(self.thickness),
            "graphene.thickness",
            "must be > 0 um",
            self.thickness,
        )?;
        check(
            pos(self.fermi_velocity),
            "graphene.fermi_velocity",
            "must be > 0 m/s",
            self.fermi_velocity,
        )?;
        if let Some(gate) = &self.gate {
            check(
                gate.gate_voltage.is_finite(),
                "gate.gate_voltage",
                "must be finite",
                gate.gate_voltage,
            )?;
            check(
                gate.compensating_voltage.is_finite(),
                "gate.compensating_voltage",
                "must be finite",
                gate.compensating_voltage,
            )?;
            check(
                gate.gate_capacitance_coeff.is_finite() && gate.gate_capacitance_coeff >= 0.0,
                "gate.gate_capacitance_coeff",
                "must be >= 0",
                gate.gate_capacitance_coeff,
            )?;
            check(
                gate.residual_density.is_finite() && gate.residual_density >= 0.0,
                "gate.residual_density",
                "must be >= 0",
                gate.residual_density,
            )?;
        }
        check(
            pos(self.patch_width),
            "geometry.patch_width",
            "must be > 0 um",
            self.patch_width,
        )?;
        check(
            pos(self.period),
            "geometry.period",
            "must be > 0 um",
            self.period,
        )?;
        check(
            self.patch_width <= self.period,
            "geometry.patch_width",
            "must not exceed geometry.period",
            self.patch_width,
        )?;
        let (lo, hi) = EIGENVALUE_COEFF_RANGE;
        check(
            (lo..=hi).contains(&self.eigenvalue_coeff),
            "geometry.eigenvalue_coeff",
            &format!("must lie in [{lo}, {hi}]"),
            self.eigenvalue_coeff,
        )?;
        check(
            self.substrate_index.is_finite() && self.substrate_index >= 1.0,
            "geometry.substrate_index",
            "must be >= 1",
            self.substrate_index,
        )?;
        if let Some(f) = self.slab_design_frequency {
            check(
                pos(f),
                "geometry.slab_design_frequency",
                "must be > 0 THz",
                f,
            )?;
        }
        check(
            pos(self.frequency),
            "drive.frequency",
            "must be > 0 THz",
            self.frequency,
        )?;
        check(
            pos(self.free_space_impedance),
            "drive.free_space_impedance",
            "must be > 0 ohm",
            self.free_space_impedance,
        )?;
        let c = &self.constants;
        for (field, v) in [
            ("constants.electron_charge", c.electron_charge),
            ("constants.reduced_planck", c.reduced_planck),
            ("constants.boltzmann", c.boltzmann),
            ("constants.vacuum_permittivity", c.vacuum_permittivity),
            ("constants.light_speed", c.light_speed),
        ] {
            check(pos(v), field, "must be > 0", v)?;
        }
        Ok(())
    }

    /// Convert to SI model inputs.
    pub fn scenario(&self) -> Scenario {
        let c = self.constants;
        Scenario {
            graphene: GrapheneParams {
                fermi_level: c.ev_to_joule(self.fermi_level),
                relaxation_time: self.relaxation_time * PS,
                temperature: self.temperature,
                thickness: self.thickness * UM,
                fermi_velocity: self.fermi_velocity,
            },
            gate: self.gate,
            geometry: UnitCellGeometry {
                patch_width: self.patch_width * UM,
                period: self.period * UM,
                eigenvalue_coeff: self.eigenvalue_coeff,
                substrate_index: self.substrate_index,
                slab: match self.slab_design_frequency {
                    None => SlabLength::TrackIncident,
                    Some(f) => SlabLength::DesignFrequency(f * THZ),
                },
            },
            drive: DriveSignal {
                frequency: self.frequency * THZ,
                free_space_impedance: self.free_space_impedance,
            },
            options: ModelOptions {
                constants: c,
                admittance_form: self.admittance_form,
            },
            spp_order: self.spp_order,
            phase_order: self.phase_order,
            phase_target: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        self.settings.scenario()
    }

    /// Keys whose value came from the built-in defaults.
    pub fn defaulted(&self) -> Vec<&str> {
        self.provenance
            .iter()
            .filter(|(_, s)| **s == Source::Default)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// `key = value (source)` lines describing every materialized setting.
    pub fn describe(&self) -> Vec<String> {
        let s = &self.settings;
        let mut entries: Vec<(&str, String)> = vec![
            ("graphene.fermi_level", format!("{} eV", s.fermi_level)),
            (
                "graphene.relaxation_time",
                format!("{} ps", s.relaxation_time),
            ),
            ("graphene.temperature", format!("{} K", s.temperature)),
            ("graphene.thickness", format!("{} um", s.thickness)),
            (
                "graphene.fermi_velocity",
                format!("{} m/s", s.fermi_velocity),
            ),
            ("geometry.patch_width", format!("{} um", s.patch_width)),
            ("geometry.period", format!("{} um", s.period)),
            (
                "geometry.eigenvalue_coeff",
                format!("{}", s.eigenvalue_coeff),
            ),
            ("geometry.substrate_index", format!("{}", s.substrate_index)),
            (
                "geometry.slab_design_frequency",
                match s.slab_design_frequency {
                    None => TRACK_INCIDENT.to_string(),
                    Some(f) => format!("{f} THz"),
                },
            ),
            ("drive.frequency", format!("{} THz", s.frequency)),
            (
                "drive.free_space_impedance",
                format!("{} ohm", s.free_space_impedance),
            ),
            (
                "model.admittance_form",
                s.admittance_form.name().to_string(),
            ),
            (
                "model.spp_order",
                s.spp_order
                    .map_or_else(|| "auto".to_string(), |m| m.to_string()),
            ),
            ("model.phase_order", s.phase_order.to_string()),
            ("model.paper_constants", s.paper_constants.to_string()),
            (
                "constants.electron_charge",
                format!("{:e}", s.constants.electron_charge),
            ),
            (
                "constants.reduced_planck",
                format!("{:e}", s.constants.reduced_planck),
            ),
            (
                "constants.boltzmann",
                format!("{:e}", s.constants.boltzmann),
            ),
            (
                "constants.vacuum_permittivity",
                format!("{:e}", s.constants.vacuum_permittivity),
            ),
            (
                "constants.light_speed",
                format!("{:e}", s.constants.light_speed),
            ),
        ];
        if let Some(g) = &s.gate {
            entries.push(("gate.gate_voltage", format!("{} V", g.gate_voltage)));
            entries.push((
                "gate.compensating_voltage",
                format!("{} V", g.compensating_voltage),
            ));
            entries.push((
                "gate.gate_capacitance_coeff",
                format!("{:e}", g.gate_capacitance_coeff),
            ));
            entries.push(("gate.residual_density", format!("{:e}", g.residual_density)));
        }
        entries
            .into_iter()
            .map(|(k, v)| {
                let src = self.provenance.get(k).copied().unwrap_or(Source::File);
                format!("{k} = {v} ({src})")
            })
            .collect()
    }

    /// Serialize the materialized configuration as a TOML document with
    /// every value explicit.
    pub fn to_document(&self) -> String {
        let s = &self.settings;
        let doc = Document {
            output: self.output.as_ref().map(|p| p.display().to_string()),
            graphene: Some(GrapheneDoc {
                fermi_level: s.gate.is_none().then_some(s.fermi_level),
                relaxation_time: Some(s.relaxation_time),
                temperature: Some(s.temperature),
                thickness: Some(s.thickness),
                fermi_velocity: Some(s.fermi_velocity),
            }),
            gate: s.gate.map(|g| GateDoc {
                gate_voltage: g.gate_voltage,
                compensating_voltage: Some(g.compensating_voltage),
                gate_capacitance_coeff: Some(g.gate_capacitance_coeff),
                residual_density: Some(g.residual_density),
            }),
            geometry: Some(GeometryDoc {
                patch_width: Some(s.patch_width),
                period: Some(s.period),
                eigenvalue_coeff: Some(s.eigenvalue_coeff),
                substrate_index: Some(s.substrate_index),
                slab_design_frequency: Some(match s.slab_design_frequency {
                    None => SlabDoc::Policy(TRACK_INCIDENT.to_string()),
                    Some(f) => SlabDoc::Frequency(f),
                }),
            }),
            drive: Some(DriveDoc {
                frequency: Some(s.frequency),
                free_space_impedance: Some(s.free_space_impedance),
            }),
            model: Some(ModelDoc {
                admittance_form: Some(s.admittance_form),
                spp_order: s.spp_order,
                phase_order: Some(s.phase_order),
                paper_constants: Some(s.paper_constants),
            }),
            constants: Some(ConstantsDoc {
                electron_charge: Some(s.constants.electron_charge),
                reduced_planck: Some(s.constants.reduced_planck),
                boltzmann: Some(s.constants.boltzmann),
                vacuum_permittivity: Some(s.constants.vacuum_permittivity),
                light_speed: Some(s.constants.light_speed),
            }),
            sweep: self.sweep.as_ref().map(|sw| SweepDoc {
                preset: sw.preset.map(|p| p.name().to_string()),
                points: Some(sw.points),
                axes: if sw.preset.is_some() {
                    Vec::new()
                } else {
                    sw.axes
                        .iter()
                        .map(|a| AxisDoc {
                            parameter: a.parameter.name().to_string(),
                            values: Some(a.values.clone()),
                            ..Default::default()
                        })
                        .collect()
                },
            }),
            optimize: self.optimize.as_ref().map(|o| {
                let (objective, target_ra, target_phase, phase_weight) = match o.objective {
                    DesignObjective::MaximizeRa => ("maximize-ra", None, None, None),
                    DesignObjective::MatchTarget {
                        target_ra,
                        target_phase,
                        phase_weight,
                    } => (
                        "match-target",
                        Some(target_ra),
                        Some(target_phase),
                        Some(phase_weight),
                    ),
                };
                OptimizeDoc {
                    objective: Some(objective.to_string()),
                    target_ra,
                    target_phase,
                    phase_weight,
                    refine: Some(o.refine),
                    ranges: o
                        .ranges
                        .iter()
                        .zip(&o.tolerances)
                        .map(|(r, &tol)| RangeDoc {
                            parameter: r.parameter.name().to_string(),
                            min: r.min,
                            max: r.max,
                            steps: Some(r.steps),
                            tolerance: Some(tol),
                        })
                        .collect(),
                }
            }),
        };
        toml::to_string(&doc).expect("configuration document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::units::NM;

    #[test]
    fn empty_document_is_all_defaults() {
        let cfg = parse_config("").unwrap();
        let s = cfg.scenario();
        assert_eq!(s.geometry.period, 90.0 * UM);
        assert_eq!(s.graphene.temperature, 300.0);
        assert_eq!(s.graphene.relaxation_time, 6.0 * PS);
        assert_eq!(s.drive.free_space_impedance, 377.0);
        assert_eq!(s.geometry.eigenvalue_coeff, 0.221);
        assert_eq!(s.graphene.fermi_velocity, 1e6);
        assert_eq!(s.options.constants, PhysicalConstants::CODATA_2018);
        assert!(cfg.defaulted().contains(&"geometry.period"));
        assert!(cfg.sweep.is_none() && cfg.optimize.is_none());
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn thickness_in_micrometres() {
        let cfg = parse_config("[graphene]\nthickness = 0.000345\n").unwrap();
        let t = cfg.scenario().graphene.thickness;
        assert!((t - 0.345 * NM).abs() < 1e-24);
        assert_eq!(cfg.provenance["graphene.thickness"], Source::File);
    }

    #[test]
    fn negative_fermi_level_is_rejected() {
        match parse_config("[graphene]\nfermi_level = -1.0\n") {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "graphene.fermi_level"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            parse_config("[graphene]\nfermi = 1.0\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_config("colour = 1\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_config("[graphene\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn flags_beat_file_beat_preset() {
        let text = "[sweep]\npreset = \"fig4\"\n[drive]\nfrequency = 2.0\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.settings.fermi_level, 1.25);
        assert_eq!(cfg.provenance["graphene.fermi_level"], Source::Preset);
        let flags = Overrides {
            frequency: Some(3.0),
            ..Default::default()
        };
        let cfg = parse_config_with(text, &flags).unwrap();
        assert_eq!(cfg.settings.frequency, 3.0);
        assert_eq!(cfg.provenance["drive.frequency"], Source::Flag);
        let cfg =
            parse_config("[sweep]\npreset = \"fig4\"\n[graphene]\nfermi_level = 0.7\n").unwrap();
        assert_eq!(cfg.settings.fermi_level, 0.7);
    }

    #[test]
    fn paper_constants_switch() {
        let cfg = parse_config("[model]\npaper_constants = true\n").unwrap();
        assert_eq!(cfg.settings.constants.electron_charge, 1.6e-19);
        let cfg = parse_config("[constants]\nboltzmann = 1.38e-23\n").unwrap();
        assert_eq!(cfg.settings.constants.boltzmann, 1.38e-23);
    }

    #[test]
    fn slab_policy() {
        let cfg = parse_config("[geometry]\nslab_design_frequency = 1.5\n").unwrap();
        assert_eq!(
            cfg.scenario().geometry.slab,
            SlabLength::DesignFrequency(1.5 * THZ)
        );
        let cfg = parse_config("[geometry]\nslab_design_frequency = \"track-incident\"\n").unwrap();
        assert_eq!(cfg.scenario().geometry.slab, SlabLength::TrackIncident);
        assert!(parse_config("[geometry]\nslab_design_frequency = \"fixed\"\n").is_err());
    }

    #[test]
    fn axes_and_optimize_sections() {
        let text = r#"
[sweep]
[[sweep.axes]]
parameter = "frequency"
start = 0.5
stop = 1.5
count = 3
[[sweep.axes]]
parameter = "patch_width"
values = [10.0, 20.0]

[optimize]
objective = "match-target"
target_ra = 0.9
target_phase = 1.0
[[optimize.ranges]]
parameter = "fermi_level"
min = 0.1
max = 2.0
steps = 5
"#;
        let cfg = parse_config(text).unwrap();
        let sweep = cfg.sweep.as_ref().unwrap();
        assert_eq!(sweep.axes[0].values, vec![0.5, 1.0, 1.5]);
        let opt = cfg.optimize.as_ref().unwrap();
        assert_eq!(opt.ranges[0].steps, 5);
        assert!(
            matches!(opt.objective, DesignObjective::MatchTarget { phase_weight, .. } if phase_weight == 1.0 / std::f64::consts::PI)
        );
        assert_eq!(
            parse_config(&cfg.to_document()).unwrap(),
            RunConfig {
                provenance: parse_config(&cfg.to_document()).unwrap().provenance,
                ..cfg
            }
        );
    }

    #[test]
    fn gate_conflicts_with_fermi_level() {
        let text = "[gate]\ngate_voltage = 2.0\n[graphene]\nfermi_level = 1.0\n";
        assert!(matches!(parse_config(text), Err(Error::Config(_))));
        let cfg =
            parse_config("[gate]\ngate_voltage = 2.0\ngate_capacitance_coeff = 1e34\n").unwrap();
        let ef = cfg.scenario().resolved_fermi_level().unwrap();
        assert!(ef > 0.0);
    }

    #[test]
    fn preset_and_axes_are_exclusive() {
        let text = "[sweep]\npreset = \"fig3\"\n[[sweep.axes]]\nparameter = \"frequency\"\nvalues = [1.0]\n";
        assert!(matches!(parse_config(text), Err(Error::Config(_))));
        assert!(matches!(
            parse_config("[sweep]\npreset = \"fig12\"\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let again = parse_config(&cfg.to_document()).unwrap();
        assert_eq!(again.settings, cfg.settings);
        assert_eq!(again.sweep, cfg.sweep);
        assert_eq!(again.output, cfg.output);
    }
}
