//! Closed-form experiment-design quantities and the four worked scenarios:
//! addressing separation, cross-talk, gate time, carrier-suppression check,
//! and parameter sweeps over them.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use thiserror::Error;

use crate::crystal::{
    equilibrium_positions, normal_modes, zero_point_extent, Crystal, CrystalError,
};
use crate::hamiltonians::{
    epsilon_matrix, field_at_ions, j_matrix, HamiltonianError,
};
use crate::model::{
    angular, Axis, FieldConfig, IonSpecies, SimConfig, SystemConfig, TrapConfig, CODATA,
};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("unknown scenario '{0}' (expected yb_static_gate | be_axial_35 | \
             be_axial_200 | addressing_be)")]
    UnknownScenario(String),
    #[error("unknown sweep parameter '{0}' (expected gradient | nu_axial | \
             n_ions | fock_cutoff)")]
    UnknownParameter(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Crystal(#[from] CrystalError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// Guidance threshold for the carrier-suppression ratio μB_j/(ħν_n).
pub const CARRIER_GUIDANCE_THRESHOLD: f64 = 0.1;

/// Carrier-suppression ratio max_j μ|B_j| / (ħ·min_n ν_n) of a
/// dynamic-gradient configuration. Values at or above
/// [`CARRIER_GUIDANCE_THRESHOLD`] flag configurations where carrier
/// excitation is no longer negligible next to the sidebands.
pub fn carrier_suppression_ratio(system: &SystemConfig) -> Result<f64, EstimatorError> {
    if !system.field.is_dynamic() {
        return Err(EstimatorError::Invalid(
            "carrier suppression check requires a dynamic field".into(),
        ));
    }
    let crystal = equilibrium_positions(&system.species, &system.trap)?;
    let modes = normal_modes(&system.species, &system.trap, &crystal)?;
    Ok(carrier_ratio_from_parts(system, &crystal, &modes))
}

/// Whether a carrier ratio warrants the caller-facing guidance flag.
pub fn carrier_ratio_is_flagged(ratio: f64) -> bool {
    ratio >= CARRIER_GUIDANCE_THRESHOLD
}

/// Carrier ratio from precomputed crystal structure.
pub fn carrier_ratio_from_parts(
    system: &SystemConfig,
    crystal: &Crystal,
    modes: &crate::crystal::ModeData,
) -> f64 {
    let b_max = field_at_ions(&system.field, crystal)
        .iter()
        .fold(0.0_f64, |m, b| m.max(b.abs()));
    let nu_min = modes
        .frequencies
        .iter()
        .fold(f64::INFINITY, |m, nu| m.min(*nu));
    system.species.mu * b_max / (CODATA.hbar * nu_min)
}

/// Addressing-frequency separation Δω = μ·B′·(z_{j+1} − z_j)/ħ for each
/// adjacent ion pair (rad/s).
pub fn addressing_separation(system: &SystemConfig, crystal: &Crystal) -> Vec<f64> {
    crystal
        .positions
        .windows(2)
        .map(|pair| system.species.mu * system.field.gradient() * (pair[1] - pair[0]) / CODATA.hbar)
        .collect()
}

/// Off-resonant excitation probability p = Ω²/(Ω² + Δω²).
pub fn crosstalk_probability(omega_rabi: f64, delta_omega: f64) -> Result<f64, EstimatorError> {
    if omega_rabi == 0.0 && delta_omega == 0.0 {
        return Err(EstimatorError::Invalid(
            "crosstalk probability is undefined for Ω = Δω = 0".into(),
        ));
    }
    let w2 = omega_rabi * omega_rabi;
    Ok(w2 / (w2 + delta_omega * delta_omega))
}

/// Conditional-phase gate time t = π/(2J).
pub fn gate_time_from_j(j_coupling: f64) -> Result<f64, EstimatorError> {
    if !(j_coupling > 0.0) {
        return Err(EstimatorError::Invalid(format!(
            "gate time requires J > 0, got {j_coupling} rad/s"
        )));
    }
    Ok(PI / (2.0 * j_coupling))
}

/// The four worked examples of the dynamic-gradient scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    YbStaticGate,
    BeAxial35,
    BeAxial200,
    AddressingBe,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::YbStaticGate,
        ScenarioName::BeAxial35,
        ScenarioName::BeAxial200,
        ScenarioName::AddressingBe,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::YbStaticGate => "yb_static_gate",
            Self::BeAxial35 => "be_axial_35",
            Self::BeAxial200 => "be_axial_200",
            Self::AddressingBe => "addressing_be",
        }
    }
}

impl FromStr for ScenarioName {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yb_static_gate" => Ok(Self::YbStaticGate),
            "be_axial_35" => Ok(Self::BeAxial35),
            "be_axial_200" => Ok(Self::BeAxial200),
            "addressing_be" => Ok(Self::AddressingBe),
            other => Err(EstimatorError::UnknownScenario(other.into())),
        }
    }
}

/// One named scalar with its unit and an optional provenance note.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarOutput {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub note: Option<String>,
}

impl ScalarOutput {
    fn new(name: &str, value: f64, unit: &str) -> Self {
        Self { name: name.into(), value, unit: unit.into(), note: None }
    }

    fn with_note(name: &str, value: f64, unit: &str, note: &str) -> Self {
        Self { name: name.into(), value, unit: unit.into(), note: Some(note.into()) }
    }
}

/// Inputs and computed outputs of one scenario evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub name: String,
    pub system: SystemConfig,
    pub outputs: Vec<ScalarOutput>,
}

impl ScenarioResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.outputs.iter().find(|o| o.name == name).map(|o| o.value)
    }
}

const CONVENTION_NOTE: &str = "order-of-magnitude value quoted in the source \
    discussion; differs from the formula-exact value by a q/b convention gap";

fn standard_sim() -> SimConfig {
    SimConfig {
        fock_cutoff: 8,
        t_final: 2e-4,
        steps_per_drive_period: 40,
        algebra_tol: 1e-10,
        physics_tol: 1e-6,
    }
}

/// The configuration behind each named scenario.
pub fn preset_system(name: ScenarioName) -> SystemConfig {
    match name {
        ScenarioName::YbStaticGate => SystemConfig {
            species: IonSpecies::ytterbium_171(),
            trap: TrapConfig {
                n_ions: 2,
                nu_axial: angular(500e3),
                nu_radial: angular(2.5e6),
                active_axis: Axis::Axial,
            },
            field: FieldConfig::Static {
                b_offset: 0.0,
                gradient: 65.0,
                omega0: angular(10e6),
            },
            sim: standard_sim(),
        },
        ScenarioName::BeAxial35 => SystemConfig {
            species: IonSpecies::beryllium_9(),
            trap: TrapConfig {
                n_ions: 2,
                // Quoted as "300 kHz" without an explicit 2π; ingested as
                // ordinary Hz by convention.
                nu_axial: angular(300e3),
                nu_radial: angular(3e6),
                active_axis: Axis::Axial,
            },
            field: FieldConfig::Dynamic {
                b_offset: 0.0,
                gradient: 35.0,
                omega_b: angular(50e6),
                omega0: angular(50e6),
            },
            sim: standard_sim(),
        },
        ScenarioName::BeAxial200 | ScenarioName::AddressingBe => SystemConfig {
            species: IonSpecies::beryllium_9(),
            trap: TrapConfig {
                n_ions: 2,
                nu_axial: angular(1e6),
                nu_radial: angular(5e6),
                active_axis: Axis::Axial,
            },
            field: FieldConfig::Dynamic {
                b_offset: 0.0,
                gradient: 200.0,
                omega_b: angular(50e6),
                omega0: angular(50e6),
            },
            sim: standard_sim(),
        },
    }
}

/// Single-ion test point for the lab ↔ dressed dynamical equivalence run:
/// resonant drive at ω₀ = ω_B = 2π×50 MHz with Ω₀ = 2π×50 kHz and ε = 0.03
/// on a 2π×1 MHz axial mode.
pub fn desk_equivalence_system() -> SystemConfig {
    let species = IonSpecies::beryllium_9();
    let nu = angular(1e6);
    let omega0_rabi = angular(50e3);
    let b_offset = 2.0 * CODATA.hbar * omega0_rabi / species.mu;
    let eps_target = 0.03;
    let q = zero_point_extent(&species, nu);
    let gradient = eps_target * 2.0 * CODATA.hbar * nu / (species.mu * q);
    SystemConfig {
        species,
        trap: TrapConfig {
            n_ions: 1,
            nu_axial: nu,
            nu_radial: angular(5e6),
            active_axis: Axis::Axial,
        },
        field: FieldConfig::Dynamic {
            b_offset,
            gradient,
            omega_b: angular(50e6),
            omega0: angular(50e6),
        },
        sim: SimConfig {
            fock_cutoff: 10,
            t_final: 2e-4,
            steps_per_drive_period: 512,
            algebra_tol: 1e-10,
            physics_tol: 1e-3,
        },
    }
}

/// Rabi frequency assumed for the cross-talk estimate (rad/s).
pub const ADDRESSING_RABI: f64 = TAU * 100e3;
/// Addressing separation quoted in the source discussion (rad/s).
pub const QUOTED_DELTA_OMEGA: f64 = TAU * 10e6;

/// Evaluate the standard scalar set for any configuration. This is the
/// scenario pipeline without per-scenario annotations; sweeps call it
/// row by row.
pub fn evaluate_system(
    label: &str,
    system: &SystemConfig,
) -> Result<ScenarioResult, EstimatorError> {
    system
        .validate()
        .map_err(|e| EstimatorError::Invalid(e.to_string()))?;
    let crystal = equilibrium_positions(&system.species, &system.trap)?;
    let modes = normal_modes(&system.species, &system.trap, &crystal)?;
    let mut outputs = Vec::new();

    // Single-ion (b = 1) coupling at the lowest mode frequency: the
    // convention in which the discussion quotes ε ≈ 0.05.
    let nu1 = modes.frequencies[0];
    let q1 = zero_point_extent(&system.species, nu1);
    let eps0 = system.species.mu * system.field.gradient() * q1
        / (2.0 * CODATA.hbar * nu1);
    outputs.push(ScalarOutput::new("epsilon0", eps0, "dimensionless"));

    let eps = epsilon_matrix(&system.species, &system.field, &modes);
    let j = j_matrix(&eps, &modes.frequencies);
    if system.trap.n_ions >= 2 {
        outputs.push(ScalarOutput::new("j12_hz", j[(0, 1)] / TAU, "Hz"));
        if let Ok(t_gate) = gate_time_from_j(j[(0, 1)]) {
            outputs.push(ScalarOutput::new("gate_time_s", t_gate, "s"));
        }
        let separations = addressing_separation(system, &crystal);
        let delta_omega = separations[0];
        outputs.push(ScalarOutput::new("delta_omega_hz", delta_omega / TAU, "Hz"));
        if delta_omega > 0.0 {
            let p = crosstalk_probability(ADDRESSING_RABI, delta_omega)?;
            outputs.push(ScalarOutput::with_note(
                "crosstalk_p",
                p,
                "dimensionless",
                "at the assumed addressing Rabi frequency 2π×100 kHz",
            ));
        }
    }
    if system.field.is_dynamic() {
        let b_at = field_at_ions(&system.field, &crystal);
        let omega0_rabi = system.species.mu * b_at[0] / (2.0 * CODATA.hbar);
        outputs.push(ScalarOutput::new("omega0_rabi_hz", omega0_rabi / TAU, "Hz"));
        outputs.push(ScalarOutput::new(
            "carrier_ratio",
            carrier_ratio_from_parts(system, &crystal, &modes),
            "dimensionless",
        ));
    }

    Ok(ScenarioResult { name: label.into(), system: system.clone(), outputs })
}

/// Run one of the named scenarios, attaching the values quoted in the source
/// discussion next to the formula-exact ones.
pub fn run_scenario(name: ScenarioName) -> Result<ScenarioResult, EstimatorError> {
    let system = preset_system(name);
    let mut result = evaluate_system(name.as_str(), &system)?;
    match name {
        ScenarioName::YbStaticGate => {
            // The 200 μs / 0.998 gate figures rest on an external dressed-gate
            // scheme and are deliberately not reproduced here.
            result.outputs.retain(|o| o.name != "gate_time_s");
            result.outputs.push(ScalarOutput::with_note(
                "quoted_gate_time_s",
                200e-6,
                "s",
                "from the external dressed-gate scheme; not derived by this tool",
            ));
        }
        ScenarioName::BeAxial35 => {
            result.outputs.push(ScalarOutput::with_note(
                "quoted_epsilon0",
                0.05,
                "dimensionless",
                CONVENTION_NOTE,
            ));
        }
        ScenarioName::BeAxial200 => {
            result.outputs.push(ScalarOutput::with_note(
                "quoted_epsilon0",
                0.05,
                "dimensionless",
                CONVENTION_NOTE,
            ));
            result.outputs.push(ScalarOutput::with_note(
                "quoted_j12_hz",
                1.5e3,
                "Hz",
                CONVENTION_NOTE,
            ));
            result.outputs.push(ScalarOutput::with_note(
                "quoted_gate_time_s",
                170e-6,
                "s",
                CONVENTION_NOTE,
            ));
        }
        ScenarioName::AddressingBe => {
            result.outputs.push(ScalarOutput::with_note(
                "quoted_delta_omega_hz",
                QUOTED_DELTA_OMEGA / TAU,
                "Hz",
                CONVENTION_NOTE,
            ));
            let p_quoted = crosstalk_probability(ADDRESSING_RABI, QUOTED_DELTA_OMEGA)?;
            result.outputs.push(ScalarOutput::with_note(
                "crosstalk_p_quoted_separation",
                p_quoted,
                "dimensionless",
                "cross-talk at the quoted 2π×10 MHz separation",
            ));
        }
    }
    Ok(result)
}

/// Sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Field gradient B′ (T/m).
    Gradient,
    /// Axial trap frequency (rad/s).
    NuAxial,
    NIons,
    FockCutoff,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gradient => "gradient",
            Self::NuAxial => "nu_axial",
            Self::NIons => "n_ions",
            Self::FockCutoff => "fock_cutoff",
        }
    }
}

impl FromStr for SweepParam {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gradient" => Ok(Self::Gradient),
            "nu_axial" => Ok(Self::NuAxial),
            "n_ions" => Ok(Self::NIons),
            "fock_cutoff" => Ok(Self::FockCutoff),
            other => Err(EstimatorError::UnknownParameter(other.into())),
        }
    }
}

fn as_count(value: f64, what: &str) -> Result<usize, EstimatorError> {
    if value < 1.0 || value.fract() != 0.0 {
        return Err(EstimatorError::Invalid(format!(
            "{what} sweep values must be positive integers, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Evaluate the standard scalar set at each value of one parameter; rows are
/// independent and emitted in input order.
pub fn sweep(
    base: &SystemConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<ScenarioResult>, EstimatorError> {
    values
        .iter()
        .map(|&value| {
            let mut system = base.clone();
            match param {
                SweepParam::Gradient => match &mut system.field {
                    FieldConfig::Static { gradient, .. }
                    | FieldConfig::Dynamic { gradient, .. } => *gradient = value,
                },
                SweepParam::NuAxial => {
                    if !(value > 0.0) {
                        return Err(EstimatorError::Invalid(format!(
                            "nu_axial sweep values must be positive, got {value}"
                        )));
                    }
                    system.trap.nu_axial = value;
                }
                SweepParam::NIons => system.trap.n_ions = as_count(value, "n_ions")?,
                SweepParam::FockCutoff => {
                    system.sim.fock_cutoff = as_count(value, "fock_cutoff")?
                }
            }
            let label = format!("{}={:e}", param.as_str(), value);
            evaluate_system(&label, &system)
        })
        .collect()
}

/// Least-squares slope of ln(y) against ln(x).
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "fit_loglog_slope: length mismatch");
    assert!(xs.len() >= 2, "fit_loglog_slope: need at least two points");
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}
