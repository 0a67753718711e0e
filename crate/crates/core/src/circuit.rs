//! Unit-cell equivalent circuit: patch surface admittance, quarter-wave slab
//! input admittance, reflection coefficient, and the two phase models.
//!
//! All admittances are absolute siemens: Y₀ = 1/Z₀, Y_s = n_s/Z₀.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{angular_frequency, PhysicalConstants};
use crate::error::{AtStage, Stage, StageError};
use crate::graphene::{
    effective_permittivity, kubo_conductivity, GrapheneParams, SheetConductivity,
};
use crate::ModelError;

/// Patch-area coefficient: S = 1.015·W².
pub const AREA_COEFF_S: f64 = 1.015;
/// Patch-area coefficient: K = 1.163·W².
pub const AREA_COEFF_K: f64 = 1.163;
/// Allowed range of the eigenvalue coefficient κ_q in q = κ_q·π/W.
pub const EIGENVALUE_COEFF_RANGE: (f64, f64) = (0.186, 0.256);

/// |sin(β_s d)| below this is treated as a slab resonance.
const SLAB_POLE_TOL: f64 = 1e-12;

/// How the dielectric slab's quarter-wave length is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SlabLength {
    /// d = λ/4 at the incident frequency, so β_s·d = π·n_s/2 at every f.
    #[default]
    TrackIncident,
    /// d = λ/4 at a fixed design frequency (Hz).
    DesignFrequency(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCellGeometry {
    /// Patch width W (m)
    pub patch_width: f64,
    /// Lattice period D (m)
    pub period: f64,
    /// κ_q, the coefficient of the eigenvalue q = κ_q·π/W
    pub eigenvalue_coeff: f64,
    /// Substrate refractive index n_s
    pub substrate_index: f64,
    pub slab: SlabLength,
}

impl UnitCellGeometry {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.patch_width.is_finite() && self.patch_width > 0.0) {
            return Err(ModelError::invalid("patch_width", "must be finite and > 0"));
        }
        if !(self.period.is_finite() && self.patch_width <= self.period) {
            return Err(ModelError::invalid(
                "patch_width",
                "must not exceed the period",
            ));
        }
        if !(self.substrate_index.is_finite() && self.substrate_index >= 1.0) {
            return Err(ModelError::invalid("substrate_index", "must be >= 1"));
        }
        let (lo, hi) = EIGENVALUE_COEFF_RANGE;
        if !(lo..=hi).contains(&self.eigenvalue_coeff) {
            return Err(ModelError::invalid(
                "eigenvalue_coeff",
                format!("must lie in [{lo}, {hi}]"),
            ));
        }
        if let SlabLength::DesignFrequency(f) = self.slab {
            if !(f.is_finite() && f > 0.0) {
                return Err(ModelError::invalid(
                    "slab_design_frequency",
                    "must be finite and > 0",
                ));
            }
        }
        Ok(())
    }

    /// Eigenvalue q = κ_q·π/W (1/m).
    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue_coeff * PI / self.patch_width
    }

    /// Geometric scale S²/(D²K) = (1.015²/1.163)·W²/D².
    pub fn admittance_scale(&self) -> f64 {
        let w2 = self.patch_width * self.patch_width;
        let s = AREA_COEFF_S * w2;
        let k = AREA_COEFF_K * w2;
        s * s / (self.period * self.period * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSignal {
    /// Incident frequency (Hz)
    pub frequency: f64,
    /// Free-space impedance Z₀ (Ω)
    pub free_space_impedance: f64,
}

impl DriveSignal {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(ModelError::invalid("frequency", "must be finite and > 0"));
        }
        if !(self.free_space_impedance.is_finite() && self.free_space_impedance > 0.0) {
            return Err(ModelError::invalid(
                "free_space_impedance",
                "must be finite and > 0",
            ));
        }
        Ok(())
    }

    /// Characteristic admittance Y₀ = 1/Z₀ (S).
    pub fn characteristic_admittance(&self) -> f64 {
        1.0 / self.free_space_impedance
    }
}

/// Rendering of the patch surface admittance.
///
/// The bracket σ⁻¹ + q/(jωε₀ε_eff) is an impedance (Ω). `ScaledReciprocal`
/// reciprocates it before applying the geometric scale, so the result is in
/// siemens. `Literal` multiplies the scale into the impedance sum as typeset
/// and uses the number directly as an admittance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmittanceForm {
    #[default]
    ScaledReciprocal,
    Literal,
}

impl AdmittanceForm {
    pub fn name(self) -> &'static str {
        match self {
            AdmittanceForm::ScaledReciprocal => "scaled-reciprocal",
            AdmittanceForm::Literal => "literal",
        }
    }
}

/// Model-wide switches shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelOptions {
    pub constants: PhysicalConstants,
    pub admittance_form: AdmittanceForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionResult {
    pub conductivity: SheetConductivity,
    pub surface_admittance: Complex64,
    pub input_admittance: Complex64,
    pub gamma: Complex64,
    /// |Γ|; never clamped.
    pub reflection_amplitude: f64,
    /// arg Γ in (−π, π]
    pub phase_circuit: f64,
    /// SPP-resonance phase shift
    pub phase_spp: f64,
    /// Order m used for `phase_spp`
    pub spp_order: i32,
    /// Re(Y_in) < 0, equivalently |Γ| > 1.
    pub passivity_warning: bool,
}

/// Patch surface admittance 𝒴 (S), with q = κ_q·π/W and ε_abs = ε₀·ε_eff.
///
/// Only the operation's own preconditions are checked here; geometry
/// invariants are enforced by [`reflect`].
pub fn surface_admittance(
    c: &PhysicalConstants,
    sigma: SheetConductivity,
    geom: &UnitCellGeometry,
    g: &GrapheneParams,
    drive: &DriveSignal,
    form: AdmittanceForm,
) -> Result<Complex64, ModelError> {
    let sigma_v = sigma.value();
    if sigma_v.norm_sqr() == 0.0 {
        return Err(ModelError::SingularMaterial);
    }
    let eps_abs =
        c.vacuum_permittivity * effective_permittivity(c, sigma, drive.frequency, g.thickness);
    if eps_abs.norm_sqr() == 0.0 {
        return Err(ModelError::SingularPermittivity);
    }
    let omega = angular_frequency(drive.frequency);
    let impedance = sigma_v.inv() + geom.eigenvalue() / (Complex64::new(0.0, omega) * eps_abs);
    let scale = geom.admittance_scale();
    let y = match form {
        AdmittanceForm::ScaledReciprocal => scale / impedance,
        AdmittanceForm::Literal => scale * impedance,
    };
    if !(y.re.is_finite() && y.im.is_finite()) {
        return Err(ModelError::NumericalDomain {
            input: "eigenvalue_coeff",
        });
    }
    Ok(y)
}

/// Electrical length of the slab in units of π/2: β_s·d = (π/2)·t.
pub fn slab_quarter_turns(geom: &UnitCellGeometry, drive: &DriveSignal) -> f64 {
    match geom.slab {
        SlabLength::TrackIncident => geom.substrate_index,
        SlabLength::DesignFrequency(fd) => geom.substrate_index * drive.frequency / fd,
    }
}

/// cot(π·t/2), with t reduced mod 2 so that odd t gives exactly zero.
/// `None` at the poles (t even).
fn cot_quarter_turns(t: f64) -> Option<f64> {
    let r = t.rem_euclid(2.0);
    let s = (FRAC_PI_2 * r).sin();
    if s.abs() < SLAB_POLE_TOL || (2.0 - r) < SLAB_POLE_TOL {
        return None;
    }
    // cot(πr/2) = tan(π(1 − r)/2)
    Some((FRAC_PI_2 * (1.0 - r)).tan())
}

/// Y_in = 𝒴 − j·Y_s·cot(β_s d), Y_s = n_s/Z₀, β_s = k₀n_s, d = λ/4.
pub fn input_admittance(
    surf: Complex64,
    geom: &UnitCellGeometry,
    drive: &DriveSignal,
) -> Result<Complex64, ModelError> {
    let cot =
        cot_quarter_turns(slab_quarter_turns(geom, drive)).ok_or(ModelError::SlabResonance {
            frequency: drive.frequency,
        })?;
    let slab = geom.substrate_index / drive.free_space_impedance;
    Ok(surf - Complex64::new(0.0, slab * cot))
}

/// Γ = (Y₀ − Y_in)/(Y₀ + Y_in).
pub fn reflection_coefficient(
    y_in: Complex64,
    drive: &DriveSignal,
) -> Result<Complex64, ModelError> {
    let y0 = drive.characteristic_admittance();
    let den = y_in + y0;
    if den.norm() <= f64::EPSILON * y0 {
        return Err(ModelError::DegenerateLoad);
    }
    Ok((Complex64::new(y0, 0.0) - y_in) / den)
}

/// Re√(1 − (2/(Z₀σ))²) on the principal branch.
pub fn spp_propagation_factor(sigma: SheetConductivity, drive: &DriveSignal) -> f64 {
    let ratio = Complex64::new(2.0, 0.0) / (sigma.value() * drive.free_space_impedance);
    (Complex64::new(1.0, 0.0) - ratio * ratio).sqrt().re
}

/// Smallest m with mπ − x in (−π, π].
fn auto_order(x: f64) -> i32 {
    let mut m = (x / PI).floor() as i32;
    while f64::from(m) * PI - x <= -PI {
        m += 1;
    }
    while f64::from(m - 1) * PI - x > -PI {
        m -= 1;
    }
    m
}

/// SPP phase θ = mπ − W·k₀·Re√(1 − (2/(Z₀σ))²) and the order m used.
///
/// With `m = None` the smallest integer placing θ in (−π, π] is chosen.
/// σ must be nonzero.
pub fn phase_shift_spp_with_order(
    c: &PhysicalConstants,
    sigma: SheetConductivity,
    patch_width: f64,
    drive: &DriveSignal,
    m: Option<i32>,
) -> (f64, i32) {
    let x = patch_width * c.wavenumber(drive.frequency) * spp_propagation_factor(sigma, drive);
    let m = m.unwrap_or_else(|| auto_order(x));
    (f64::from(m) * PI - x, m)
}

pub fn phase_shift_spp(
    c: &PhysicalConstants,
    sigma: SheetConductivity,
    patch_width: f64,
    drive: &DriveSignal,
    m: Option<i32>,
) -> f64 {
    phase_shift_spp_with_order(c, sigma, patch_width, drive, m).0
}

/// Patch width that produces SPP phase `theta` at order `m`:
/// W = (mπ − θ)/(k₀·Re√(1 − (2/(Z₀σ))²)).
pub fn invert_phase_to_width(
    c: &PhysicalConstants,
    theta: f64,
    sigma: SheetConductivity,
    drive: &DriveSignal,
    m: i32,
) -> Result<f64, ModelError> {
    let factor = spp_propagation_factor(sigma, drive);
    if !(factor > 0.0) {
        return Err(ModelError::NoSolution);
    }
    let width = (f64::from(m) * PI - theta) / (c.wavenumber(drive.frequency) * factor);
    if !(width > 0.0) || !width.is_finite() {
        return Err(ModelError::InfeasiblePhase { width });
    }
    Ok(width)
}

/// Angle in (−π, π].
pub fn wrap_phase(angle: f64) -> f64 {
    let a = (angle + PI).rem_euclid(TAU) - PI;
    if a <= -PI {
        a + TAU
    } else {
        a
    }
}

/// Full chain from material, geometry and drive to the reflection result.
pub fn reflect(
    opts: &ModelOptions,
    g: &GrapheneParams,
    geom: &UnitCellGeometry,
    drive: &DriveSignal,
    m: Option<i32>,
) -> Result<ReflectionResult, StageError> {
    let c = &opts.constants;
    c.validate()
        .and_then(|_| g.validate())
        .and_then(|_| geom.validate())
        .and_then(|_| drive.validate())
        .at(Stage::Validation)?;
    let sigma = kubo_conductivity(c, g, drive.frequency).at(Stage::Conductivity)?;
    let surf = surface_admittance(c, sigma, geom, g, drive, opts.admittance_form)
        .at(Stage::SurfaceAdmittance)?;
    let y_in = input_admittance(surf, geom, drive).at(Stage::InputAdmittance)?;
    let gamma = reflection_coefficient(y_in, drive).at(Stage::ReflectionCoefficient)?;
    let (phase_spp, spp_order) = phase_shift_spp_with_order(c, sigma, geom.patch_width, drive, m);
    let mut phase_circuit = gamma.arg();
    if phase_circuit <= -PI {
        phase_circuit = PI;
    }
    Ok(ReflectionResult {
        conductivity: sigma,
        surface_admittance: surf,
        input_admittance: y_in,
        gamma,
        reflection_amplitude: gamma.norm(),
        phase_circuit,
        phase_spp,
        spp_order,
        passivity_warning: y_in.re < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::units::{NM, PS, THZ, UM};
    use proptest::prelude::*;

    const C: PhysicalConstants = PhysicalConstants::CODATA_2018;

    fn graphene(ef_ev: f64) -> GrapheneParams {
        GrapheneParams {
            fermi_level: C.ev_to_joule(ef_ev),
            relaxation_time: 6.0 * PS,
            temperature: 300.0,
            thickness: 0.345 * NM,
            fermi_velocity: 1e6,
        }
    }

    fn geometry(n_s: f64) -> UnitCellGeometry {
        UnitCellGeometry {
            patch_width: 10.0 * UM,
            period: 90.0 * UM,
            eigenvalue_coeff: 0.221,
            substrate_index: n_s,
            slab: SlabLength::TrackIncident,
        }
    }

    fn drive(f_thz: f64) -> DriveSignal {
        DriveSignal {
            frequency: f_thz * THZ,
            free_space_impedance: 377.0,
        }
    }

    #[test]
    fn zero_eigenvalue_reduces_to_scaled_conductivity() {
        let g = graphene(1.0);
        let d = drive(1.0);
        let sigma = kubo_conductivity(&C, &g, d.frequency).unwrap();
        let geom = UnitCellGeometry {
            eigenvalue_coeff: 0.0,
            ..geometry(1.8)
        };
        let y =
            surface_admittance(&C, sigma, &geom, &g, &d, AdmittanceForm::ScaledReciprocal).unwrap();
        let prefactor = 1.015f64.powi(2) / 1.163;
        assert!((prefactor - 0.8859).abs() < 1e-4);
        let expected = sigma.value() * prefactor * (10.0f64 / 90.0).powi(2);
        assert!((y - expected).norm() <= 1e-14 * expected.norm());
    }

    #[test]
    fn admittance_scales_with_inverse_period_squared() {
        let g = graphene(1.0);
        let d = drive(2.0);
        let sigma = kubo_conductivity(&C, &g, d.frequency).unwrap();
        let a = geometry(1.8);
        let b = UnitCellGeometry {
            period: 2.0 * a.period,
            ..a
        };
        for form in [AdmittanceForm::ScaledReciprocal, AdmittanceForm::Literal] {
            let ya = surface_admittance(&C, sigma, &a, &g, &d, form).unwrap();
            let yb = surface_admittance(&C, sigma, &b, &g, &d, form).unwrap();
            assert!((ya.norm() / yb.norm() - 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_material() {
        let g = graphene(1.0);
        let zero = SheetConductivity(Complex64::new(0.0, 0.0));
        let r = surface_admittance(
            &C,
            zero,
            &geometry(1.8),
            &g,
            &drive(1.0),
            AdmittanceForm::ScaledReciprocal,
        );
        assert_eq!(r, Err(ModelError::SingularMaterial));
    }

    #[test]
    fn singular_permittivity() {
        let g = graphene(1.0);
        let d = drive(1.0);
        // jσ/(ωε₀t) = −1
        let sigma = SheetConductivity(Complex64::new(
            0.0,
            angular_frequency(d.frequency) * C.vacuum_permittivity * g.thickness,
        ));
        let r = surface_admittance(&C, sigma, &geometry(1.8), &g, &d, AdmittanceForm::Literal);
        assert_eq!(r, Err(ModelError::SingularPermittivity));
    }

    #[test]
    fn quarter_wave_line_vanishes_for_unit_index() {
        let surf = Complex64::new(1.25e-5, 3.5e-4);
        let y = input_admittance(surf, &geometry(1.0), &drive(1.7)).unwrap();
        assert_eq!(y, surf);
        // odd multiples too
        let y = input_admittance(surf, &geometry(3.0), &drive(0.4)).unwrap();
        assert_eq!(y, surf);
    }

    #[test]
    fn half_wave_slab_is_a_resonance() {
        let r = input_admittance(Complex64::new(0.0, 0.0), &geometry(2.0), &drive(1.0));
        assert!(matches!(r, Err(ModelError::SlabResonance { frequency }) if frequency == THZ));
        let geom = UnitCellGeometry {
            slab: SlabLength::DesignFrequency(THZ),
            ..geometry(1.0)
        };
        assert!(input_admittance(Complex64::new(1.0, 0.0), &geom, &drive(2.0)).is_err());
    }

    #[test]
    fn design_frequency_slab_matches_direct_cot() {
        let geom = UnitCellGeometry {
            slab: SlabLength::DesignFrequency(0.8 * THZ),
            ..geometry(1.8)
        };
        let d = drive(1.3);
        let y = input_admittance(Complex64::new(0.0, 0.0), &geom, &d).unwrap();
        let arg = C.wavenumber(d.frequency) * 1.8 * C.wavelength(0.8 * THZ) / 4.0;
        let direct = -(1.8 / 377.0) / arg.tan();
        assert!((y.im - direct).abs() < 1e-13 * direct.abs());
    }

    #[test]
    fn reflection_limits() {
        let d = drive(1.0);
        let y0 = d.characteristic_admittance();
        assert_eq!(
            reflection_coefficient(Complex64::new(y0, 0.0), &d).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            reflection_coefficient(Complex64::new(0.0, 0.0), &d).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let g = reflection_coefficient(Complex64::new(0.0, y0), &d).unwrap();
        assert_eq!(g, Complex64::new(0.0, -1.0));
        assert_eq!(g.norm(), 1.0);
        assert_eq!(
            reflection_coefficient(Complex64::new(-y0, 0.0), &d),
            Err(ModelError::DegenerateLoad)
        );
    }

    #[test]
    fn evanescent_spp_gives_integer_phase() {
        // 2/(Z₀σ) real with magnitude > 1
        let sigma = SheetConductivity(Complex64::new(1e-3, 0.0));
        let d = drive(1.0);
        assert_eq!(spp_propagation_factor(sigma, &d), 0.0);
        assert_eq!(phase_shift_spp(&C, sigma, 10.0 * UM, &d, Some(1)), PI);
        assert_eq!(phase_shift_spp(&C, sigma, 10.0 * UM, &d, None), 0.0);
        assert_eq!(
            invert_phase_to_width(&C, 0.5, sigma, &d, 1),
            Err(ModelError::NoSolution)
        );
    }

    #[test]
    fn consecutive_orders_differ_by_pi() {
        let g = graphene(1.3);
        let d = drive(2.2);
        let sigma = kubo_conductivity(&C, &g, d.frequency).unwrap();
        let a = phase_shift_spp(&C, sigma, 17.0 * UM, &d, Some(2));
        let b = phase_shift_spp(&C, sigma, 17.0 * UM, &d, Some(3));
        assert_eq!(b - a, PI);
    }

    #[test]
    fn linear_inversion() {
        // factor → 1 for huge σ; choose f so that k₀ = 1e5 m⁻¹
        let sigma = SheetConductivity(Complex64::new(0.0, 1e12));
        let d = DriveSignal {
            frequency: 1e5 * C.light_speed / TAU,
            free_space_impedance: 377.0,
        };
        assert_eq!(spp_propagation_factor(sigma, &d), 1.0);
        let w = invert_phase_to_width(&C, 2.0 * PI - 1.0, sigma, &d, 2).unwrap();
        assert!((w - 10.0 * UM).abs() < 1e-15);
    }

    #[test]
    fn infeasible_phase() {
        let g = graphene(1.0);
        let d = drive(1.0);
        let sigma = kubo_conductivity(&C, &g, d.frequency).unwrap();
        assert!(matches!(
            invert_phase_to_width(&C, 1.0, sigma, &d, 0),
            Err(ModelError::InfeasiblePhase { .. })
        ));
        assert!(matches!(
            invert_phase_to_width(&C, 0.0, sigma, &d, 0),
            Err(ModelError::InfeasiblePhase { .. })
        ));
    }

    #[test]
    fn reflect_reports_stage() {
        let opts = ModelOptions::default();
        let err = reflect(&opts, &graphene(1.0), &geometry(2.0), &drive(1.0), None).unwrap_err();
        assert_eq!(err.stage, Stage::InputAdmittance);
        assert_eq!(err.code(), "slab_resonance");
        let bad = UnitCellGeometry {
            patch_width: 100.0 * UM,
            ..geometry(1.8)
        };
        let err = reflect(&opts, &graphene(1.0), &bad, &drive(1.0), None).unwrap_err();
        assert_eq!(err.stage, Stage::Validation);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI + 0.25) - (-PI + 0.25)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn reflect_invariants(
            ef in 0.05f64..2.5, f in 0.1f64..3.0, w in 10.0f64..25.0,
            n_s in 1.05f64..1.95, kq in 0.186f64..0.256, literal in any::<bool>(),
        ) {
            let opts = ModelOptions {
                admittance_form: if literal { AdmittanceForm::Literal } else { AdmittanceForm::ScaledReciprocal },
                ..Default::default()
            };
            let geom = UnitCellGeometry { patch_width: w * UM, eigenvalue_coeff: kq, ..geometry(n_s) };
            let r = reflect(&opts, &graphene(ef), &geom, &drive(f), None).unwrap();
            prop_assert_eq!(r.reflection_amplitude, r.gamma.norm());
            prop_assert!(r.phase_circuit > -PI && r.phase_circuit <= PI);
            prop_assert!(r.phase_spp > -PI && r.phase_spp <= PI);
            prop_assert_eq!(r.passivity_warning, r.input_admittance.re < 0.0);
        }

        #[test]
        fn width_round_trip(ef in 0.3f64..2.5, f in 0.5f64..3.0, w in 1.0f64..90.0, m in -2i32..3) {
            let d = drive(f);
            let sigma = kubo_conductivity(&C, &graphene(ef), d.frequency).unwrap();
            let theta = phase_shift_spp(&C, sigma, w * UM, &d, Some(m));
            let back = invert_phase_to_width(&C, theta, sigma, &d, m).unwrap();
            prop_assert!((back - w * UM).abs() <= 1e-12 * w * UM);
        }

        #[test]
        fn passivity_identity(g in -1.0f64..1.0, b in -1.0f64..1.0, z0 in 10.0f64..1000.0) {
            let d = DriveSignal { frequency: THZ, free_space_impedance: z0 };
            let y_in = Complex64::new(g, b) * (10.0 / z0);
            if let Ok(gamma) = reflection_coefficient(y_in, &d) {
                prop_assert_eq!(gamma.norm() <= 1.0 + 1e-12, y_in.re >= -1e-12 * y_in.norm());
            }
        }
    }
}
