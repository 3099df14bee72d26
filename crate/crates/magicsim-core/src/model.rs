//! Physical constants, ion species, and system configuration.
//!
//! Every frequency held by the types in this crate is angular (rad/s).
//! Configuration files carry ordinary frequencies in Hz and are converted
//! exactly once, at ingestion, through [`angular`].

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fundamental constants (CODATA-2018), fixed so that every run on every
/// platform computes from bit-identical inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Bohr magneton (J/T).
    pub mu_bohr: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Elementary charge (C).
    pub elem_charge: f64,
    /// Atomic mass unit (kg).
    pub amu: f64,
}

/// The one set of constants used throughout the crate.
pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    mu_bohr: 9.274_010_078_3e-24,
    eps0: 8.854_187_812_8e-12,
    elem_charge: 1.602_176_634e-19,
    amu: 1.660_539_066_60e-27,
};

/// Convert an ordinary frequency in Hz to an angular frequency in rad/s.
///
/// This is the single conversion point between the Hz of configuration files
/// and the rad/s used internally.
pub fn angular(freq_hz: f64) -> f64 {
    TAU * freq_hz
}

/// A qubit ion: mass and the effective magnetic dipole moment of the qubit
/// transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    pub name: String,
    /// Mass (kg).
    pub mass: f64,
    /// Effective magnetic dipole moment (J/T); defaults to one Bohr magneton.
    pub mu: f64,
}

impl IonSpecies {
    pub fn new(name: &str, mass: f64, mu: f64) -> Result<Self, ConfigError> {
        if !(mass > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "species {name}: mass must be positive, got {mass}"
            )));
        }
        if !(mu > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "species {name}: magnetic moment must be positive, got {mu}"
            )));
        }
        Ok(Self { name: name.into(), mass, mu })
    }

    /// ⁹Be⁺ with μ = μ_B.
    pub fn beryllium_9() -> Self {
        Self { name: "Be9".into(), mass: 9.012 * CODATA.amu, mu: CODATA.mu_bohr }
    }

    /// ¹⁷¹Yb⁺ with μ = μ_B.
    pub fn ytterbium_171() -> Self {
        Self { name: "Yb171".into(), mass: 170.936 * CODATA.amu, mu: CODATA.mu_bohr }
    }

    /// Look up a built-in species by name.
    pub fn preset(name: &str) -> Option<Self> {
        species_presets().into_iter().find(|s| s.name == name)
    }
}

/// The built-in species.
pub fn species_presets() -> Vec<IonSpecies> {
    vec![IonSpecies::beryllium_9(), IonSpecies::ytterbium_171()]
}

/// Which branch of the crystal's normal modes couples to the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Axial,
    Radial,
}

/// Harmonic trap parameters for a linear crystal of `n_ions` ions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    pub n_ions: usize,
    /// Axial (along-string) trap frequency (rad/s).
    pub nu_axial: f64,
    /// Radial trap frequency (rad/s).
    pub nu_radial: f64,
    pub active_axis: Axis,
}

impl TrapConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_ions < 1 {
            return Err(ConfigError::Invalid("trap: n_ions must be >= 1".into()));
        }
        if !(self.nu_axial > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "trap: nu_axial must be positive, got {} rad/s",
                self.nu_axial
            )));
        }
        if !(self.nu_radial > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "trap: nu_radial must be positive, got {} rad/s",
                self.nu_radial
            )));
        }
        // Linear-crystal precondition for the radial branch; the exact zigzag
        // threshold is detected spectrally in the crystal module.
        if self.active_axis == Axis::Radial && self.nu_radial <= self.nu_axial {
            return Err(ConfigError::Invalid(
                "trap: radial modes require nu_radial > nu_axial".into(),
            ));
        }
        Ok(())
    }
}

/// Magnetic-field arrangement: a static gradient B(z) = B₀ + z·B′, or a
/// dynamic one B(z, t) = cos(ω_B t)·(B₀ + z·B′).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldConfig {
    Static {
        /// Field offset B₀ (T).
        b_offset: f64,
        /// Gradient B′ (T/m).
        gradient: f64,
        /// Bare qubit splitting ω₀ (rad/s).
        omega0: f64,
    },
    Dynamic {
        /// Field amplitude offset B₀ (T); B_j = B₀ + z_j·B′ at each ion.
        b_offset: f64,
        /// Amplitude gradient B′ (T/m).
        gradient: f64,
        /// Drive frequency ω_B (rad/s).
        omega_b: f64,
        /// Bare qubit splitting ω₀ (rad/s).
        omega0: f64,
    },
}

impl FieldConfig {
    pub fn b_offset(&self) -> f64 {
        match *self {
            Self::Static { b_offset, .. } | Self::Dynamic { b_offset, .. } => b_offset,
        }
    }

    pub fn gradient(&self) -> f64 {
        match *self {
            Self::Static { gradient, .. } | Self::Dynamic { gradient, .. } => gradient,
        }
    }

    pub fn omega0(&self) -> f64 {
        match *self {
            Self::Static { omega0, .. } | Self::Dynamic { omega0, .. } => omega0,
        }
    }

    /// Drive frequency; `None` for a static field.
    pub fn omega_b(&self) -> Option<f64> {
        match *self {
            Self::Static { .. } => None,
            Self::Dynamic { omega_b, .. } => Some(omega_b),
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, Self::Dynamic { .. })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.gradient() < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "field: gradient must be >= 0, got {} T/m",
                self.gradient()
            )));
        }
        if let Self::Dynamic { omega_b, .. } = self {
            if !(*omega_b > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "field: dynamic drive requires omega_b > 0, got {omega_b} rad/s"
                )));
            }
        }
        Ok(())
    }
}

/// Numerical controls for simulation runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Fock-space dimension per mode.
    pub fock_cutoff: usize,
    /// Total evolution time (s).
    pub t_final: f64,
    /// Time steps per drive period for time-dependent propagation.
    pub steps_per_drive_period: usize,
    /// Tolerance for operator-algebra checks (hermiticity, unitarity).
    pub algebra_tol: f64,
    /// Tolerance for physics-level comparisons.
    pub physics_tol: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.fock_cutoff < 2 {
            return Err(ConfigError::Invalid(format!(
                "sim: fock_cutoff must be >= 2, got {}",
                self.fock_cutoff
            )));
        }
        if self.steps_per_drive_period < 8 {
            return Err(ConfigError::Invalid(format!(
                "sim: steps_per_drive_period must be >= 8, got {}",
                self.steps_per_drive_period
            )));
        }
        if !(self.t_final >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "sim: t_final must be >= 0, got {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

/// Complete description of a run: ions, trap, field, numerical controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub species: IonSpecies,
    pub trap: TrapConfig,
    pub field: FieldConfig,
    pub sim: SimConfig,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.species.mass > 0.0) || !(self.species.mu > 0.0) {
            return Err(ConfigError::Invalid(
                "species: mass and mu must be positive".into(),
            ));
        }
        self.trap.validate()?;
        self.field.validate()?;
        self.sim.validate()
    }

    /// Parse and validate a JSON configuration. Unknown keys are a hard
    /// error.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let system = raw.into_system()?;
        system.validate()?;
        Ok(system)
    }

    pub fn from_json_file<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Render the JSON form (Hz frequencies, amu masses) of this config.
    pub fn to_json_string(&self) -> String {
        let raw = RawConfig::from_system(self);
        serde_json::to_string_pretty(&raw).expect("config serialization cannot fail")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// JSON schema. Field names and units follow the file format, not the internal
// types: frequencies in Hz, masses in amu, moments in Bohr magnetons.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    species: RawSpecies,
    trap: RawTrap,
    field: RawField,
    sim: RawSim,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    name: String,
    mass_amu: f64,
    mu_bohr: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    n_ions: usize,
    nu_axial_hz: f64,
    nu_radial_hz: f64,
    active_axis: Axis,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum FieldKind {
    Static,
    Dynamic,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    kind: FieldKind,
    b_offset_tesla: f64,
    gradient_t_per_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_b_hz: Option<f64>,
    omega0_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    fock_cutoff: usize,
    t_final_s: f64,
    steps_per_drive_period: usize,
    algebra_tol: f64,
    physics_tol: f64,
}

impl RawConfig {
    fn into_system(self) -> Result<SystemConfig, ConfigError> {
        let species = IonSpecies::new(
            &self.species.name,
            self.species.mass_amu * CODATA.amu,
            self.species.mu_bohr * CODATA.mu_bohr,
        )?;
        let trap = TrapConfig {
            n_ions: self.trap.n_ions,
            nu_axial: angular(self.trap.nu_axial_hz),
            nu_radial: angular(self.trap.nu_radial_hz),
            active_axis: self.trap.active_axis,
        };
        let field = match self.field.kind {
            FieldKind::Static => {
                if self.field.omega_b_hz.is_some() {
                    return Err(ConfigError::Invalid(
                        "field: omega_b_hz is only valid for kind = \"dynamic\"".into(),
                    ));
                }
                FieldConfig::Static {
                    b_offset: self.field.b_offset_tesla,
                    gradient: self.field.gradient_t_per_m,
                    omega0: angular(self.field.omega0_hz),
                }
            }
            FieldKind::Dynamic => {
                let omega_b_hz = self.field.omega_b_hz.ok_or_else(|| {
                    ConfigError::Invalid(
                        "field: kind = \"dynamic\" requires omega_b_hz".into(),
                    )
                })?;
                FieldConfig::Dynamic {
                    b_offset: self.field.b_offset_tesla,
                    gradient: self.field.gradient_t_per_m,
                    omega_b: angular(omega_b_hz),
                    omega0: angular(self.field.omega0_hz),
                }
            }
        };
        let sim = SimConfig {
            fock_cutoff: self.sim.fock_cutoff,
            t_final: self.sim.t_final_s,
            steps_per_drive_period: self.sim.steps_per_drive_period,
            algebra_tol: self.sim.algebra_tol,
            physics_tol: self.sim.physics_tol,
        };
        Ok(SystemConfig { species, trap, field, sim })
    }

    fn from_system(system: &SystemConfig) -> Self {
        Self {
            species: RawSpecies {
                name: system.species.name.clone(),
                mass_amu: system.species.mass / CODATA.amu,
                mu_bohr: system.species.mu / CODATA.mu_bohr,
            },
            trap: RawTrap {
                n_ions: system.trap.n_ions,
                nu_axial_hz: system.trap.nu_axial / TAU,
                nu_radial_hz: system.trap.nu_radial / TAU,
                active_axis: system.trap.active_axis,
            },
            field: match system.field {
                FieldConfig::Static { b_offset, gradient, omega0 } => RawField {
                    kind: FieldKind::Static,
                    b_offset_tesla: b_offset,
                    gradient_t_per_m: gradient,
                    omega_b_hz: None,
                    omega0_hz: omega0 / TAU,
                },
                FieldConfig::Dynamic { b_offset, gradient, omega_b, omega0 } => RawField {
                    kind: FieldKind::Dynamic,
                    b_offset_tesla: b_offset,
                    gradient_t_per_m: gradient,
                    omega_b_hz: Some(omega_b / TAU),
                    omega0_hz: omega0 / TAU,
                },
            },
            sim: RawSim {
                fock_cutoff: system.sim.fock_cutoff,
                t_final_s: system.sim.t_final,
                steps_per_drive_period: system.sim.steps_per_drive_period,
                algebra_tol: system.sim.algebra_tol,
                physics_tol: system.sim.physics_tol,
            },
        }
    }
}
