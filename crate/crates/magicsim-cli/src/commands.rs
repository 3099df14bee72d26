//! Subcommand implementations. Each command resolves the configuration,
//! renders its payload files deterministically in memory, and hands them to
//! the output writer; `--seedless` renders everything twice and demands
//! byte-identical results before anything touches disk.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use magicsim_core::crystal::{
    equilibrium_positions, normal_modes, Crystal, CrystalError, ModeData,
};
use magicsim_core::dynamics::{
    self, equivalence_check, evolve_const_sampled, evolve_timedep, frame_transform,
    sample_times, DynamicsError, EvolutionReport, EvolveOptions, Frame, Picture,
};
use magicsim_core::estimators::{
    addressing_separation, carrier_ratio_is_flagged, EstimatorError, SweepParam,
};
use magicsim_core::hamiltonians::{
    epsilon_matrix, h_dressed, h_dynamic_lab, h_dynamic_rwa, h_static, j_matrix,
    rabi_frequencies, HamiltonianError,
};
use magicsim_core::model::ConfigError;
use magicsim_core::operators::{basis_state, HilbertLayout, OperatorError};
use magicsim_core::SystemConfig;

use crate::output::{fmt_float, json_bytes, write_outputs, Csv, RunManifest};

#[derive(Debug)]
pub enum CmdError {
    /// Configuration, argument, or precondition problem (exit 2).
    Config(String),
    /// Equilibrium/mode solver failure (exit 3).
    Solver(String),
    /// Numerical abort: norm drift, identification failure, I/O (exit 4).
    Numerics(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Numerics(_) => 4,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Solver(m) => write!(f, "solver error: {m}"),
            Self::Numerics(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<CrystalError> for CmdError {
    fn from(e: CrystalError) -> Self {
        Self::Solver(e.to_string())
    }
}

impl From<HamiltonianError> for CmdError {
    fn from(e: HamiltonianError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<OperatorError> for CmdError {
    fn from(e: OperatorError) -> Self {
        Self::Numerics(e.to_string())
    }
}

impl From<DynamicsError> for CmdError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Precondition(m) => Self::Config(m),
            DynamicsError::Crystal(c) => Self::Solver(c.to_string()),
            DynamicsError::Hamiltonian(h) => Self::Config(h.to_string()),
            DynamicsError::Operator(o) => Self::Numerics(o.to_string()),
            other => Self::Numerics(other.to_string()),
        }
    }
}

impl From<EstimatorError> for CmdError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Crystal(c) => Self::Solver(c.to_string()),
            EstimatorError::Hamiltonian(h) => Self::Config(h.to_string()),
            other => Self::Config(other.to_string()),
        }
    }
}

type Payload = Vec<(String, Vec<u8>)>;

fn build_structure(system: &SystemConfig) -> Result<(Crystal, ModeData), CmdError> {
    let crystal = equilibrium_positions(&system.species, &system.trap)?;
    let modes = normal_modes(&system.species, &system.trap, &crystal)?;
    Ok((crystal, modes))
}

// ---------------------------------------------------------------------------
// modes
// ---------------------------------------------------------------------------

pub fn render_modes(system: &SystemConfig) -> Result<Payload, CmdError> {
    let (crystal, modes) = build_structure(system)?;
    let n = system.trap.n_ions;

    let mut positions = Csv::new(&["ion_index", "z_m"]);
    for (j, z) in crystal.positions.iter().enumerate() {
        positions.push_row(&[j.to_string(), fmt_float(*z)]);
    }

    let b_headers: Vec<String> = (1..=n).map(|j| format!("b_{j}")).collect();
    let mut header: Vec<&str> = vec!["mode_index", "freq_hz"];
    header.extend(b_headers.iter().map(|s| s.as_str()));
    let mut table = Csv::new(&header);
    for m in 0..modes.n_modes() {
        let mut row = vec![m.to_string(), fmt_float(modes.frequencies[m] / TAU)];
        for j in 0..n {
            row.push(fmt_float(modes.coeffs[(j, m)]));
        }
        table.push_row(&row);
    }

    Ok(vec![
        ("positions.csv".to_string(), positions.into_bytes()),
        ("modes.csv".to_string(), table.into_bytes()),
    ])
}

// ---------------------------------------------------------------------------
// couplings
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct CouplingScalars {
    #[serde(skip_serializing_if = "Option::is_none")]
    omega0_rabi_hz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    carrier_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    carrier_flagged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_omega_hz: Option<Vec<f64>>,
}

pub fn render_couplings(system: &SystemConfig) -> Result<Payload, CmdError> {
    let (crystal, modes) = build_structure(system)?;
    let eps = epsilon_matrix(&system.species, &system.field, &modes);
    let dynamic_table = if system.field.is_dynamic() {
        Some(rabi_frequencies(&system.species, &system.field, &modes, &crystal)?)
    } else {
        None
    };

    let mut couplings = if dynamic_table.is_some() {
        Csv::new(&["ion", "mode", "epsilon", "omega_grad_rabi_hz"])
    } else {
        Csv::new(&["ion", "mode", "epsilon"])
    };
    for j in 0..system.trap.n_ions {
        for m in 0..modes.n_modes() {
            let mut row = vec![j.to_string(), m.to_string(), fmt_float(eps[(j, m)])];
            if let Some(table) = &dynamic_table {
                row.push(fmt_float(table.omega_grad_rabi[(j, m)] / TAU));
            }
            couplings.push_row(&row);
        }
    }

    let j = j_matrix(&eps, &modes.frequencies);
    let mut jcsv = Csv::new(&["i", "j", "j_hz"]);
    for a in 0..system.trap.n_ions {
        for b in 0..system.trap.n_ions {
            if a != b {
                jcsv.push_row(&[a.to_string(), b.to_string(), fmt_float(j[(a, b)] / TAU)]);
            }
        }
    }

    let separations = addressing_separation(system, &crystal);
    let scalars = CouplingScalars {
        omega0_rabi_hz: dynamic_table
            .as_ref()
            .map(|t| t.omega0_rabi.iter().map(|w| w / TAU).collect()),
        carrier_ratio: dynamic_table.as_ref().map(|_| {
            magicsim_core::estimators::carrier_ratio_from_parts(system, &crystal, &modes)
        }),
        carrier_flagged: dynamic_table.as_ref().map(|_| {
            carrier_ratio_is_flagged(magicsim_core::estimators::carrier_ratio_from_parts(
                system, &crystal, &modes,
            ))
        }),
        delta_omega_hz: if separations.is_empty() {
            None
        } else {
            Some(separations.iter().map(|w| w / TAU).collect())
        },
    };

    Ok(vec![
        ("couplings.csv".to_string(), couplings.into_bytes()),
        ("jmatrix.csv".to_string(), jcsv.into_bytes()),
        ("scalars.json".to_string(), json_bytes(&scalars)),
    ])
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveFrame {
    Lab,
    Dressed,
    Rwa,
}

impl std::str::FromStr for EvolveFrame {
    type Err = CmdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lab" => Ok(Self::Lab),
            "dressed" => Ok(Self::Dressed),
            "rwa" => Ok(Self::Rwa),
            other => Err(CmdError::Config(format!(
                "unknown frame '{other}' (expected lab | dressed | rwa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ObservableSet {
    populations: bool,
    sz: bool,
    occupation: bool,
}

impl ObservableSet {
    fn parse(spec: Option<&str>) -> Result<Self, CmdError> {
        let Some(spec) = spec else {
            return Ok(Self { populations: true, sz: true, occupation: true });
        };
        let mut set = Self { populations: false, sz: false, occupation: false };
        for token in spec.split(',') {
            match token.trim() {
                "populations" => set.populations = true,
                "sz" => set.sz = true,
                "n" => set.occupation = true,
                "norm" => {} // always emitted
                other => {
                    return Err(CmdError::Config(format!(
                        "unknown observable '{other}' \
                         (expected populations | sz | n | norm)"
                    )))
                }
            }
        }
        Ok(set)
    }
}

fn spin_pattern_label(pattern: usize, n_ions: usize) -> String {
    (0..n_ions)
        .map(|j| {
            if (pattern >> (n_ions - 1 - j)) & 1 == 0 {
                'e'
            } else {
                'g'
            }
        })
        .collect()
}

pub fn render_evolve(
    system: &SystemConfig,
    frame: EvolveFrame,
    observables: Option<&str>,
) -> Result<Payload, CmdError> {
    let set = ObservableSet::parse(observables)?;
    let (crystal, modes) = build_structure(system)?;
    let layout = HilbertLayout::new(
        system.trap.n_ions,
        modes.n_modes(),
        system.sim.fock_cutoff,
    );
    let ground = basis_state(
        layout.dim(),
        layout.basis_index(
            &vec![1; layout.n_spins],
            &vec![0; layout.n_modes],
        ),
    );
    let t_final = system.sim.t_final;
    let opts = EvolveOptions { max_samples: 1001, richardson: false, picture: Picture::Lab };

    let report: EvolutionReport = match frame {
        EvolveFrame::Lab => {
            if system.field.is_dynamic() {
                let h = h_dynamic_lab(system, &crystal, &modes)?;
                evolve_timedep(&h, &ground, &system.sim, t_final, &opts)?
            } else {
                let h = h_static(system, &crystal, &modes)?;
                let times = sample_times(t_final, opts.max_samples);
                evolve_const_sampled(&h, &ground, &times, Picture::Lab)?
            }
        }
        EvolveFrame::Dressed => {
            let Some(omega_b) = system.field.omega_b() else {
                return Err(CmdError::Config(
                    "frame 'dressed' requires a dynamic field".into(),
                ));
            };
            let h = h_dressed(system, &crystal, &modes)?;
            let psi0 =
                frame_transform(&ground, &Frame::Dressed { omega_b }, &layout, 0.0);
            let times = sample_times(t_final, opts.max_samples);
            evolve_const_sampled(&h, &psi0, &times, Picture::Dressed)?
        }
        EvolveFrame::Rwa => {
            if !system.field.is_dynamic() {
                return Err(CmdError::Config(
                    "frame 'rwa' requires a dynamic field".into(),
                ));
            }
            let h = h_dynamic_rwa(system, &crystal, &modes)?;
            let rwa_opts = EvolveOptions { picture: Picture::Interaction, ..opts };
            evolve_timedep(&h, &ground, &system.sim, t_final, &rwa_opts)?
        }
    };

    let mut header: Vec<String> = vec!["t_s".into()];
    if set.populations {
        for pattern in 0..(1usize << layout.n_spins) {
            header.push(format!("pop_{}", spin_pattern_label(pattern, layout.n_spins)));
        }
    }
    if set.sz {
        for j in 1..=layout.n_spins {
            header.push(format!("sz_{j}"));
        }
    }
    if set.occupation {
        for m in 1..=layout.n_modes {
            header.push(format!("n_{m}"));
        }
    }
    header.push("norm".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);

    for (t, state) in report.times.iter().zip(&report.states) {
        let mut row = vec![fmt_float(*t)];
        if set.populations {
            for p in dynamics::observables::spin_populations(state, &layout) {
                row.push(fmt_float(p));
            }
        }
        if set.sz {
            for j in 0..layout.n_spins {
                row.push(fmt_float(dynamics::observables::sz_expectation(
                    state, &layout, j,
                )));
            }
        }
        if set.occupation {
            for m in 0..layout.n_modes {
                row.push(fmt_float(dynamics::observables::mode_occupation(
                    state, &layout, m,
                )));
            }
        }
        row.push(fmt_float(dynamics::state_norm(state)));
        csv.push_row(&row);
    }

    Ok(vec![("trajectory.csv".to_string(), csv.into_bytes())])
}

// ---------------------------------------------------------------------------
// equivalence
// ---------------------------------------------------------------------------

pub fn render_equivalence(system: &SystemConfig) -> Result<(Payload, bool), CmdError> {
    let (_, modes) = build_structure(system)?;
    let layout = HilbertLayout::new(
        system.trap.n_ions,
        modes.n_modes(),
        system.sim.fock_cutoff,
    );
    let ground = basis_state(
        layout.dim(),
        layout.basis_index(&vec![1; layout.n_spins], &vec![0; layout.n_modes]),
    );
    let report = equivalence_check(system, &ground, system.sim.t_final)?;
    let payload = vec![("equivalence.json".to_string(), json_bytes(&report))];
    Ok((payload, report.passes))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn render_sweep(
    system: &SystemConfig,
    param: &str,
    values: &str,
) -> Result<Payload, CmdError> {
    let param: SweepParam = param
        .parse()
        .map_err(|e: EstimatorError| CmdError::Config(e.to_string()))?;
    let raw_values: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|_| {
                CmdError::Config(format!("could not parse sweep value '{v}'"))
            })
        })
        .collect::<Result<_, _>>()?;
    if raw_values.is_empty() {
        return Err(CmdError::Config("sweep needs at least one value".into()));
    }
    // Config-file units are ordinary Hz; convert at this boundary like every
    // other ingestion path.
    let internal_values: Vec<f64> = match param {
        SweepParam::NuAxial => raw_values.iter().map(|v| magicsim_core::angular(*v)).collect(),
        _ => raw_values.clone(),
    };
    let rows = magicsim_core::estimators::sweep(system, param, &internal_values)?;

    // Column set: union of row outputs in first-appearance order.
    let mut names: Vec<String> = Vec::new();
    for row in &rows {
        for output in &row.outputs {
            if !names.iter().any(|n| n == &output.name) {
                names.push(output.name.clone());
            }
        }
    }
    let mut header: Vec<String> = vec!["param".into(), "value".into()];
    header.extend(names.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    for (raw, row) in raw_values.iter().zip(&rows) {
        let mut cells = vec![param.as_str().to_string(), fmt_float(*raw)];
        for name in &names {
            cells.push(row.value(name).map(fmt_float).unwrap_or_default());
        }
        csv.push_row(&cells);
    }

    Ok(vec![("sweep.csv".to_string(), csv.into_bytes())])
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

pub struct Invocation<'a> {
    pub subcommand: &'a str,
    pub config_path: &'a Path,
    pub out_dir: PathBuf,
    pub seedless: bool,
}

/// Load the config, render the payload (twice under `--seedless`), write the
/// files with a manifest, and return the process exit code.
pub fn execute<F>(invocation: &Invocation, render: F) -> i32
where
    F: Fn(&SystemConfig) -> Result<(Payload, i32), CmdError>,
{
    match execute_inner(invocation, render) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("magicsim {}: {e}", invocation.subcommand);
            e.exit_code()
        }
    }
}

fn execute_inner<F>(invocation: &Invocation, render: F) -> Result<i32, CmdError>
where
    F: Fn(&SystemConfig) -> Result<(Payload, i32), CmdError>,
{
    let config_bytes = std::fs::read(invocation.config_path)
        .map_err(|e| CmdError::Config(format!(
            "failed to read {}: {e}",
            invocation.config_path.display()
        )))?;
    let text = String::from_utf8(config_bytes.clone())
        .map_err(|_| CmdError::Config("config is not valid UTF-8".into()))?;
    let system = SystemConfig::from_json_str(&text)?;

    let (payload, code) = render(&system)?;
    if invocation.seedless {
        let (again, again_code) = render(&system)?;
        if payload != again || code != again_code {
            return Err(CmdError::Numerics(
                "seedless self-check failed: repeated rendering differed".into(),
            ));
        }
    }

    let manifest = RunManifest::new(&config_bytes, invocation.subcommand);
    write_outputs(&invocation.out_dir, &payload, &manifest)
        .map_err(|e| CmdError::Numerics(format!("failed to write outputs: {e}")))?;
    Ok(code)
}
