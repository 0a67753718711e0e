//! `girs`: point evaluations, sweeps and design search for the graphene
//! reflecting-surface unit-cell model.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 model
//! error, 3 I/O error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use girs_core::constants::units::UM;
use girs_core::graphene::kubo_conductivity;
use girs_core::io::csv::format_number;
use girs_core::io::{emit_table, parse_config_with, Overrides, RunConfig};
use girs_core::optimize::{grid_search, refine};
use girs_core::sweep::run_sweep;
use girs_core::{AdmittanceForm, Error, Execution, ParameterBox, Preset, Stage, StageError};

const THREADS_VAR: &str = "GIRS_THREADS";

#[derive(Parser)]
#[command(
    name = "girs",
    version,
    about = "Graphene reflecting-surface unit-cell model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sheet conductivity at one operating point
    Conductivity(PointArgs),
    /// Full reflection result at one operating point
    Reflect(PointArgs),
    /// Parameter sweep to CSV
    Sweep(SweepArgs),
    /// Grid search, then optional refinement, over [optimize] ranges
    Optimize(OptimizeArgs),
    /// Print the fully materialized configuration as TOML
    ShowConfig(PointArgs),
}

#[derive(Args)]
struct PointArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Figure preset (fig3..fig8)
    #[arg(long, required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Points on dense axes
    #[arg(long)]
    points: Option<usize>,
    /// Evaluate on a single thread
    #[arg(long)]
    serial: bool,
    /// CSV destination; stdout when absent
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    serial: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Args)]
struct ModelFlags {
    /// Fermi level (eV)
    #[arg(long, allow_hyphen_values = true)]
    fermi_level: Option<f64>,
    /// Relaxation time (ps)
    #[arg(long, allow_hyphen_values = true)]
    relaxation_time: Option<f64>,
    /// Temperature (K)
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<f64>,
    /// Patch width (um)
    #[arg(long, allow_hyphen_values = true)]
    patch_width: Option<f64>,
    /// Lattice period (um)
    #[arg(long, allow_hyphen_values = true)]
    period: Option<f64>,
    /// Eigenvalue coefficient kappa in q = kappa*pi/W
    #[arg(long, allow_hyphen_values = true)]
    eigenvalue_coeff: Option<f64>,
    /// Substrate refractive index
    #[arg(long, allow_hyphen_values = true)]
    substrate_index: Option<f64>,
    /// Incident frequency (THz)
    #[arg(long, allow_hyphen_values = true)]
    frequency: Option<f64>,
    /// Free-space impedance (ohm)
    #[arg(long, allow_hyphen_values = true)]
    impedance: Option<f64>,
    /// SPP phase order; automatic when absent
    #[arg(long, allow_hyphen_values = true)]
    spp_order: Option<i32>,
    /// scaled-reciprocal or literal
    #[arg(long, value_parser = parse_form)]
    admittance_form: Option<AdmittanceForm>,
    /// Use the rounded elementary charge 1.6e-19 C
    #[arg(long)]
    paper_constants: bool,
}

fn parse_form(s: &str) -> Result<AdmittanceForm, String> {
    match s {
        "scaled-reciprocal" => Ok(AdmittanceForm::ScaledReciprocal),
        "literal" => Ok(AdmittanceForm::Literal),
        _ => Err(format!("expected scaled-reciprocal or literal, got `{s}`")),
    }
}

impl ModelFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            fermi_level: self.fermi_level,
            relaxation_time: self.relaxation_time,
            temperature: self.temperature,
            patch_width: self.patch_width,
            period: self.period,
            eigenvalue_coeff: self.eigenvalue_coeff,
            substrate_index: self.substrate_index,
            frequency: self.frequency,
            free_space_impedance: self.impedance,
            admittance_form: self.admittance_form,
            spp_order: self.spp_order,
            paper_constants: self.paper_constants.then_some(true),
            ..Overrides::default()
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Run(e) => match e {
                Error::Parse(_) | Error::Config(_) | Error::Validation { .. } => 1,
                Error::Model(_) | Error::EmptyFeasibleSet { .. } => 2,
                Error::Io(_) => 3,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Run(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}

fn load(path: Option<&Path>, flags: &Overrides) -> Result<RunConfig, Error> {
    let text = match path {
        Some(p) => fs::read_to_string(p)?,
        None => String::new(),
    };
    parse_config_with(&text, flags)
}

fn execution(serial: bool) -> Result<Execution, Failure> {
    if serial {
        return Ok(Execution::Serial);
    }
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(Execution::Parallel),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Failure::Usage(format!(
                "{THREADS_VAR} must be a positive integer, got `{v}`"
            ))),
            Ok(1) => Ok(Execution::Serial),
            Ok(n) => Ok(Execution::Threads(n)),
        },
    }
}

/// Write to `path`, or stdout when absent. Called only once all output is
/// computed, so failures never leave a partial file behind.
fn deliver(path: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn key_values(lines: &[(&str, String)]) -> String {
    lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Conductivity(a) => {
            let cfg = load(a.config.as_deref(), &a.model.overrides())?;
            let s = cfg.scenario();
            let mut g = s.graphene;
            g.fermi_level = s.resolved_fermi_level().map_err(Error::from)?;
            let c = &s.options.constants;
            let sigma = kubo_conductivity(c, &g, s.drive.frequency)
                .map_err(|source| StageError {
                    stage: Stage::Conductivity,
                    source,
                })
                .map_err(Error::from)?
                .value();
            let text = key_values(&[
                (
                    "fermi_level_ev",
                    format_number(c.joule_to_ev(g.fermi_level)),
                ),
                ("frequency_thz", format_number(cfg.settings.frequency)),
                ("sigma_re_s", format_number(sigma.re)),
                ("sigma_im_s", format_number(sigma.im)),
                ("sigma_abs_s", format_number(sigma.norm())),
            ]);
            deliver(None, text.as_bytes())?;
        }
        Command::Reflect(a) => {
            let cfg = load(a.config.as_deref(), &a.model.overrides())?;
            let p = cfg.scenario().evaluate().map_err(Error::from)?;
            let c = &cfg.settings.constants;
            let r = &p.reflection;
            let sigma = r.conductivity.value();
            let text = key_values(&[
                (
                    "fermi_level_ev",
                    format_number(c.joule_to_ev(p.fermi_level)),
                ),
                ("patch_width_um", format_number(p.patch_width / UM)),
                ("frequency_thz", format_number(cfg.settings.frequency)),
                ("sigma_re_s", format_number(sigma.re)),
                ("sigma_im_s", format_number(sigma.im)),
                (
                    "surface_admittance_re_s",
                    format_number(r.surface_admittance.re),
                ),
                (
                    "surface_admittance_im_s",
                    format_number(r.surface_admittance.im),
                ),
                (
                    "input_admittance_re_s",
                    format_number(r.input_admittance.re),
                ),
                (
                    "input_admittance_im_s",
                    format_number(r.input_admittance.im),
                ),
                ("gamma_re", format_number(r.gamma.re)),
                ("gamma_im", format_number(r.gamma.im)),
                ("ra", format_number(r.reflection_amplitude)),
                ("phase_circuit_rad", format_number(r.phase_circuit)),
                ("phase_spp_rad", format_number(r.phase_spp)),
                ("spp_order", r.spp_order.to_string()),
                ("passivity_warning", r.passivity_warning.to_string()),
            ]);
            if r.passivity_warning {
                eprintln!("warning: Re(Y_in) < 0, reflection amplitude exceeds 1");
            }
            deliver(None, text.as_bytes())?;
        }
        Command::ShowConfig(a) => {
            let cfg = load(a.config.as_deref(), &a.model.overrides())?;
            let mut text = String::new();
            for line in cfg.describe() {
                text.push_str(&format!("# {line}\n"));
            }
            text.push_str(&cfg.to_document());
            deliver(None, text.as_bytes())?;
        }
        Command::Sweep(a) => {
            let mut flags = a.model.overrides();
            flags.preset = a.preset.as_deref().map(str::parse::<Preset>).transpose()?;
            flags.points = a.points;
            flags.output = a.output.clone();
            let cfg = load(a.config.as_deref(), &flags)?;
            let spec = cfg.sweep.as_ref().ok_or_else(|| {
                Failure::Usage("no sweep defined: pass --preset or a config with [sweep]".into())
            })?;
            let exec = execution(a.serial)?;
            let mut table = run_sweep(&spec.axes, &cfg.scenario(), exec)?;
            if let Some(p) = spec.preset {
                table.label = Some(p.name().to_string());
                table.notes = p.notes();
            }
            let mut buf = Vec::new();
            emit_table(&table, &cfg.describe(), &mut buf).map_err(Error::from)?;
            deliver(cfg.output.as_deref(), &buf)?;
            let errors = table.error_count();
            if errors > 0 {
                eprintln!(
                    "{errors} of {} points raised model errors",
                    table.rows.len()
                );
            }
        }
        Command::Optimize(a) => {
            let mut flags = a.model.overrides();
            flags.output = a.output.clone();
            let cfg = load(Some(&a.config), &flags)?;
            let spec = cfg
                .optimize
                .as_ref()
                .ok_or_else(|| Failure::Usage("config has no [optimize] section".into()))?;
            let exec = execution(a.serial)?;
            let bx = ParameterBox {
                ranges: spec.ranges.clone(),
                baseline: cfg.scenario(),
            };
            let grid = grid_search(&bx, &spec.objective, exec)?;
            let mut lines: Vec<(String, String)> = vec![
                ("grid_evaluations".into(), grid.evaluations.to_string()),
                ("grid_skipped".into(), grid.skipped.to_string()),
                ("grid_score".into(), format_number(grid.score)),
            ];
            for (r, v) in spec.ranges.iter().zip(&grid.point) {
                lines.push((format!("grid_{}", r.parameter.name()), format_number(*v)));
            }
            let (point, score) = if spec.refine {
                let refined = refine(&grid.point, &bx, &spec.objective, &spec.tolerances)?;
                lines.push(("refine_evaluations".into(), refined.evaluations.to_string()));
                lines.push(("refine_cycles".into(), refined.cycles.to_string()));
                lines.push(("refine_degraded".into(), refined.degraded.to_string()));
                (refined.point, refined.score)
            } else {
                (grid.point.clone(), grid.score)
            };
            for (r, v) in spec.ranges.iter().zip(&point) {
                lines.push((r.parameter.name().to_string(), format_number(*v)));
            }
            lines.push(("score".into(), format_number(score)));
            let best = bx.scenario_at(&point).evaluate().map_err(Error::from)?;
            lines.push((
                "ra".into(),
                format_number(best.reflection.reflection_amplitude),
            ));
            lines.push((
                "phase_circuit_rad".into(),
                format_number(best.reflection.phase_circuit),
            ));
            lines.push((
                "phase_spp_rad".into(),
                format_number(best.reflection.phase_spp),
            ));
            let mut text = String::new();
            for line in cfg.describe() {
                text.push_str(&format!("# {line}\n"));
            }
            for (k, v) in &lines {
                text.push_str(&format!("{k} = {v}\n"));
            }
            deliver(cfg.output.as_deref(), text.as_bytes())?;
        }
    }
    Ok(())
}
