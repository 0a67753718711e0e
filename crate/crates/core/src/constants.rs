//! Physical constants and interface-unit conversions.
//!
//! Every model function works in strict SI. Human-scale units (eV, ps, THz,
//! μm) are converted once, at the configuration boundary.

use serde::{Deserialize, Serialize};

/// Fundamental constants used by the conductivity and circuit chain.
///
/// Defaults are the CODATA 2018 recommended values. The set is injectable so
/// that callers can reproduce arithmetic done with rounded constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Elementary charge (C)
    pub electron_charge: f64,
    /// Reduced Planck constant (J·s)
    pub reduced_planck: f64,
    /// Boltzmann constant (J/K)
    pub boltzmann: f64,
    /// Vacuum permittivity (F/m)
    pub vacuum_permittivity: f64,
    /// Speed of light in vacuum (m/s)
    pub light_speed: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: Self = Self {
        electron_charge: 1.602_176_634e-19,
        reduced_planck: 1.054_571_817e-34,
        boltzmann: 1.380_649e-23,
        vacuum_permittivity: 8.854_187_812_8e-12,
        light_speed: 299_792_458.0,
    };

    /// CODATA 2018 with the elementary charge rounded to 1.6e-19 C.
    pub const ROUNDED_CHARGE: Self = Self {
        electron_charge: 1.6e-19,
        ..Self::CODATA_2018
    };

    pub fn validate(&self) -> Result<(), crate::ModelError> {
        let fields = [
            ("electron_charge", self.electron_charge),
            ("reduced_planck", self.reduced_planck),
            ("boltzmann", self.boltzmann),
            ("vacuum_permittivity", self.vacuum_permittivity),
            ("light_speed", self.light_speed),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(crate::ModelError::invalid(field, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Electron-volts to joules with this constant set.
    pub fn ev_to_joule(&self, ev: f64) -> f64 {
        ev * self.electron_charge
    }

    pub fn joule_to_ev(&self, joule: f64) -> f64 {
        joule / self.electron_charge
    }

    /// Free-space wavenumber k0 = 2πf/c.
    pub fn wavenumber(&self, frequency: f64) -> f64 {
        angular_frequency(frequency) / self.light_speed
    }

    pub fn wavelength(&self, frequency: f64) -> f64 {
        self.light_speed / frequency
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

pub fn angular_frequency(frequency: f64) -> f64 {
    2.0 * std::f64::consts::PI * frequency
}

/// Scale factors from interface units to SI.
pub mod units {
    pub const THZ: f64 = 1e12;
    pub const PS: f64 = 1e-12;
    pub const UM: f64 = 1e-6;
    pub const NM: f64 = 1e-9;
}
