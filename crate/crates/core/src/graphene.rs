//! Graphene material chain: gate bias → carrier density → Fermi level →
//! intraband (Kubo) sheet conductivity → effective permittivity.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{angular_frequency, PhysicalConstants};
use crate::ModelError;

/// Material state of a graphene patch, all SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrapheneParams {
    /// Fermi level (J)
    pub fermi_level: f64,
    /// Carrier relaxation time (s)
    pub relaxation_time: f64,
    /// Temperature (K)
    pub temperature: f64,
    /// Sheet thickness (m)
    pub thickness: f64,
    /// Fermi velocity (m/s)
    pub fermi_velocity: f64,
}

impl GrapheneParams {
    pub const DEFAULT_FERMI_VELOCITY: f64 = 1e6;

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.fermi_level.is_finite() && self.fermi_level >= 0.0) {
            return Err(ModelError::invalid(
                "fermi_level",
                "must be finite and >= 0",
            ));
        }
        positive("relaxation_time", self.relaxation_time)?;
        positive("temperature", self.temperature)?;
        positive("thickness", self.thickness)?;
        positive("fermi_velocity", self.fermi_velocity)
    }
}

/// Electrostatic gating of the sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateBiasParams {
    /// Applied gate voltage (V)
    pub gate_voltage: f64,
    /// Charge-neutrality (compensating) voltage V_CNP (V)
    pub compensating_voltage: f64,
    /// Gate coupling coefficient α (m⁻⁴·V⁻²), so that α·ΔV² adds to n_res²
    pub gate_capacitance_coeff: f64,
    /// Residual puddle density near the Dirac point (m⁻²)
    pub residual_density: f64,
}

impl GateBiasParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        finite("gate_voltage", self.gate_voltage)?;
        finite("compensating_voltage", self.compensating_voltage)?;
        non_negative("gate_capacitance_coeff", self.gate_capacitance_coeff)?;
        non_negative("residual_density", self.residual_density)
    }
}

/// Complex sheet conductivity (S per square).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetConductivity(pub Complex64);

impl SheetConductivity {
    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// ln(2·cosh x) without overflow: |x| + ln(1 + e^(−2|x|)).
pub(crate) fn ln_two_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p()
}

/// Real prefactor of the intraband conductivity,
/// (2e²/(πħ²))·k_B·T·ln[2cosh(E_F/(2k_B T))], in S/s.
pub fn kubo_prefactor(c: &PhysicalConstants, g: &GrapheneParams) -> f64 {
    let thermal = c.boltzmann * g.temperature;
    2.0 * c.electron_charge * c.electron_charge / (PI * c.reduced_planck * c.reduced_planck)
        * thermal
        * ln_two_cosh(g.fermi_level / (2.0 * thermal))
}

/// Intraband Kubo sheet conductivity σ = C·j/(ω + j/τ).
pub fn kubo_conductivity(
    c: &PhysicalConstants,
    g: &GrapheneParams,
    frequency: f64,
) -> Result<SheetConductivity, ModelError> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(ModelError::invalid("frequency", "must be finite and > 0"));
    }
    g.validate()?;
    let prefactor = kubo_prefactor(c, g);
    if !prefactor.is_finite() {
        let input = if (g.fermi_level / (c.boltzmann * g.temperature)).is_finite() {
            "temperature"
        } else {
            "fermi_level"
        };
        return Err(ModelError::NumericalDomain { input });
    }
    let omega = angular_frequency(frequency);
    let scatter = 1.0 / g.relaxation_time;
    if !scatter.is_finite() {
        return Err(ModelError::NumericalDomain {
            input: "relaxation_time",
        });
    }
    // j/(ω + j/τ) = (1/τ + jω)/(ω² + 1/τ²)
    let denom = omega * omega + scatter * scatter;
    if !denom.is_finite() || denom == 0.0 {
        return Err(ModelError::NumericalDomain { input: "frequency" });
    }
    let sigma = Complex64::new(prefactor * scatter / denom, prefactor * omega / denom);
    if !(sigma.re.is_finite() && sigma.im.is_finite()) {
        return Err(ModelError::NumericalDomain {
            input: "fermi_level",
        });
    }
    Ok(SheetConductivity(sigma))
}

/// n_d = √(n_res² + α·|V_CNP − V_g|²)
pub fn carrier_density_from_gate(b: &GateBiasParams) -> f64 {
    let dv = (b.compensating_voltage - b.gate_voltage).abs();
    (b.residual_density * b.residual_density + b.gate_capacitance_coeff * dv * dv).sqrt()
}

/// |E_F| = ħ·v_F·√(π n_d), in joules.
pub fn fermi_level_from_density(c: &PhysicalConstants, density: f64, fermi_velocity: f64) -> f64 {
    c.reduced_planck * fermi_velocity * (PI * density.max(0.0)).sqrt()
}

/// ε_eff = 1 + jσ/(ω ε₀ t_g), relative.
pub fn effective_permittivity(
    c: &PhysicalConstants,
    sigma: SheetConductivity,
    frequency: f64,
    thickness: f64,
) -> Complex64 {
    let omega = angular_frequency(frequency);
    Complex64::new(1.0, 0.0)
        + Complex64::i() * sigma.0 / (omega * c.vacuum_permittivity * thickness)
}

fn positive(field: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ModelError::invalid(field, "must be finite and > 0"))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::invalid(field, "must be finite and >= 0"))
    }
}

fn finite(field: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::invalid(field, "must be finite"))
    }
}
