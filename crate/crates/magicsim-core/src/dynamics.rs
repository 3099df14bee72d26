//! State propagation, frame transformations, and the two certification
//! oracles: the lab ↔ dressed dynamical equivalence check and the spectral
//! extraction of the spin-spin coupling.

use ndarray::{linalg::kron, Array1, Array2};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::crystal::{equilibrium_positions, normal_modes, CrystalError};
use crate::hamiltonians::{
    h_dressed, h_dynamic_lab, h_static, identify_static_equivalent, rabi_frequencies,
    HamiltonianError, TimeDepHamiltonian,
};
use crate::model::{SimConfig, SystemConfig};
use crate::operators::{
    adjoint, eigh_hermitian, expm_apply, herm_expm, identity, HilbertLayout,
    OperatorError,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Crystal(#[from] CrystalError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("norm drift {drift:.3e} at t = {t:.6e} s exceeds 1e-8; \
             increase fock_cutoff or steps_per_drive_period")]
    NormDrift { t: f64, drift: f64 },
    #[error("level identification failed: best overlap {overlap:.4} < 0.9 \
             (fock_cutoff too small for this coupling strength)")]
    LevelIdentification { overlap: f64 },
}

/// A unitary change of picture, applied to states as ψ' = U(t)·ψ_lab.
#[derive(Debug, Clone)]
pub enum Frame {
    Lab,
    /// Spin rotation at `omega`: exp(+i·ω·t·σ_z/2) on every ion.
    Rotating { omega: f64 },
    /// Rotation at the drive frequency followed by the bare → dressed
    /// (Hadamard-type) rotation on every ion.
    Dressed { omega_b: f64 },
    /// Spin-conditioned displacement exp(S), S = Σ_{j,n} ε_{j,n}(a†−a)σ_z^(j).
    Polaron { epsilon: Array2<f64> },
}

/// Picture tag carried by evolution output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Lab,
    Rotating,
    Dressed,
    Polaron,
    Interaction,
}

fn rotating_spin_factor(omega: f64, t: f64) -> Array2<C64> {
    let phase = C64::new(0.0, 0.5 * omega * t).exp();
    let mut u = Array2::zeros((2, 2));
    u[(0, 0)] = phase;
    u[(1, 1)] = phase.conj();
    u
}

/// Bare → dressed rotation: rows are ⟨+| and ⟨−| in the (|e⟩, |g⟩) basis.
fn dressed_rotation() -> Array2<C64> {
    let inv = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut q = Array2::zeros((2, 2));
    q[(0, 0)] = inv;
    q[(0, 1)] = inv;
    q[(1, 0)] = -inv;
    q[(1, 1)] = inv;
    q
}

/// The unitary of `frame` at time `t` on the given layout.
pub fn frame_unitary(frame: &Frame, layout: &HilbertLayout, t: f64) -> Array2<C64> {
    let mode_dim = layout.cutoff.pow(layout.n_modes as u32);
    match frame {
        Frame::Lab => identity(layout.dim()),
        Frame::Rotating { omega } => {
            spin_kron(&rotating_spin_factor(*omega, t), layout.n_spins, mode_dim)
        }
        Frame::Dressed { omega_b } => {
            let per_spin = dressed_rotation().dot(&rotating_spin_factor(*omega_b, t));
            spin_kron(&per_spin, layout.n_spins, mode_dim)
        }
        Frame::Polaron { epsilon } => {
            assert_eq!(epsilon.nrows(), layout.n_spins, "polaron: ion count mismatch");
            assert_eq!(epsilon.ncols(), layout.n_modes, "polaron: mode count mismatch");
            let generator = polaron_generator(epsilon, layout);
            // S is real antisymmetric, so iS is Hermitian and exp(S) follows
            // from the spectral route.
            let herm = generator.mapv(|z| z * C64::new(0.0, 1.0));
            herm_expm(&herm, C64::new(0.0, -1.0))
                .expect("polaron generator is Hermitian by construction")
        }
    }
}

fn spin_kron(per_spin: &Array2<C64>, n_spins: usize, mode_dim: usize) -> Array2<C64> {
    let mut u = identity(1);
    for _ in 0..n_spins {
        u = kron(&u, per_spin);
    }
    kron(&u, &identity(mode_dim))
}

fn polaron_generator(epsilon: &Array2<f64>, layout: &HilbertLayout) -> Array2<C64> {
    let dim = layout.dim();
    let mut s = Array2::<C64>::zeros((dim, dim));
    let dims = layout.dims();
    let (a, a_dag) = crate::operators::fock_ladder(layout.cutoff);
    let diff = &a_dag - &a;
    let p = crate::operators::pauli();
    for j in 0..layout.n_spins {
        let sz = crate::operators::embed(&p.z, j, &dims);
        for n in 0..layout.n_modes {
            let eps = epsilon[(j, n)];
            if eps == 0.0 {
                continue;
            }
            let mode_op = crate::operators::embed(&diff, layout.n_spins + n, &dims);
            let term = mode_op.dot(&sz).mapv(|z| z * C64::new(eps, 0.0));
            s += &term;
        }
    }
    s
}

/// Map a lab-frame state into `frame` at time `t`.
pub fn frame_transform(
    psi: &Array1<C64>,
    frame: &Frame,
    layout: &HilbertLayout,
    t: f64,
) -> Array1<C64> {
    let u = frame_unitary(frame, layout, t);
    assert_eq!(u.nrows(), psi.len(), "frame_transform: dimension mismatch");
    u.dot(psi)
}

pub fn state_norm(psi: &Array1<C64>) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// |⟨ψ|φ⟩|².
///
/// Panics if the dimensions differ.
pub fn fidelity(psi: &Array1<C64>, phi: &Array1<C64>) -> f64 {
    assert_eq!(psi.len(), phi.len(), "fidelity: dimension mismatch");
    psi.iter()
        .zip(phi.iter())
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .norm_sqr()
}

/// ψ(t) = exp(−i·H·t)·ψ₀ for a constant Hermitian H (in rad/s).
pub fn evolve_const(
    h: &Array2<C64>,
    psi0: &Array1<C64>,
    t: f64,
) -> Result<Array1<C64>, DynamicsError> {
    assert_eq!(h.nrows(), psi0.len(), "evolve_const: dimension mismatch");
    let u = herm_expm(h, C64::new(0.0, -t))?;
    Ok(u.dot(psi0))
}

/// Integrator metadata attached to an [`EvolutionReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub steps: usize,
    /// Max-entry distance of the final state from a half-step rerun, when
    /// requested.
    pub richardson_error: Option<f64>,
}

/// Sampled trajectory of a propagation.
#[derive(Debug, Clone)]
pub struct EvolutionReport {
    pub times: Vec<f64>,
    pub states: Vec<Array1<C64>>,
    pub picture: Picture,
    pub norm_drift: f64,
    pub step_control: StepControl,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Upper bound on the number of stored samples (the initial state and
    /// final state are always included).
    pub max_samples: usize,
    /// Rerun at half step and report the final-state difference.
    pub richardson: bool,
    pub picture: Picture,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { max_samples: 1025, richardson: false, picture: Picture::Lab }
    }
}

/// Sample exp(−i·H·t)·ψ₀ on a uniform grid via one eigendecomposition.
pub fn evolve_const_sampled(
    h: &Array2<C64>,
    psi0: &Array1<C64>,
    times: &[f64],
    picture: Picture,
) -> Result<EvolutionReport, DynamicsError> {
    assert_eq!(h.nrows(), psi0.len(), "evolve_const_sampled: dimension mismatch");
    let (evals, vecs) = eigh_hermitian(h)?;
    let coeffs = adjoint(&vecs).dot(psi0);
    let mut states = Vec::with_capacity(times.len());
    let mut norm_drift = 0.0_f64;
    for &t in times {
        let phased: Array1<C64> = coeffs
            .iter()
            .zip(evals.iter())
            .map(|(c, e)| c * C64::new(0.0, -e * t).exp())
            .collect();
        let psi = vecs.dot(&phased);
        norm_drift = norm_drift.max((state_norm(&psi) - 1.0).abs());
        states.push(psi);
    }
    if norm_drift > 1e-8 {
        return Err(DynamicsError::NormDrift {
            t: *times.last().unwrap_or(&0.0),
            drift: norm_drift,
        });
    }
    Ok(EvolutionReport {
        times: times.to_vec(),
        states,
        picture,
        norm_drift,
        step_control: StepControl { dt: 0.0, steps: 0, richardson_error: None },
    })
}

/// Uniform sampling grid over [0, t_final] with at most `max_samples` points.
pub fn sample_times(t_final: f64, max_samples: usize) -> Vec<f64> {
    let n = max_samples.max(2);
    (0..n)
        .map(|k| t_final * k as f64 / (n - 1) as f64)
        .collect()
}

/// Propagate under a time-dependent Hamiltonian with the exponential-midpoint
/// rule: ψ_{k+1} = exp(−i·H(t_k + Δt/2)·Δt)·ψ_k, Δt = period/steps-per-period.
///
/// When every drive term shares one cosine frequency the per-step midpoint
/// propagators repeat exactly with the drive period; they are then built once
/// by spectral decomposition and cycled, which is identical arithmetic at a
/// fraction of the cost. Norm drift beyond 1e-8 aborts.
pub fn evolve_timedep(
    h: &TimeDepHamiltonian,
    psi0: &Array1<C64>,
    sim: &SimConfig,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<EvolutionReport, DynamicsError> {
    assert_eq!(h.dim(), psi0.len(), "evolve_timedep: dimension mismatch");
    let period = match (h.terms.is_empty(), h.period_hint) {
        (true, _) | (_, None) => {
            // Constant generator: the midpoint rule is exact, so take the
            // spectral route directly. evaluate(0) folds in any terms whose
            // declared frequencies are all zero.
            let frozen = h.evaluate(0.0);
            let times = sample_times(t_final, opts.max_samples);
            let mut report = evolve_const_sampled(&frozen, psi0, &times, opts.picture)?;
            report.step_control = StepControl {
                dt: t_final,
                steps: 1,
                richardson_error: opts.richardson.then_some(0.0),
            };
            return Ok(report);
        }
        (false, Some(p)) => p,
    };

    let steps_per_period = sim.steps_per_drive_period;
    let dt = period / steps_per_period as f64;
    let result = run_midpoint(h, psi0, dt, steps_per_period, t_final, opts)?;
    let richardson_error = if opts.richardson {
        let fine = run_midpoint(h, psi0, dt / 2.0, 2 * steps_per_period, t_final, opts)?;
        let coarse_final = result.states.last().unwrap();
        let fine_final = fine.states.last().unwrap();
        let err = coarse_final
            .iter()
            .zip(fine_final.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        Some(err)
    } else {
        None
    };
    let mut report = result;
    report.step_control.richardson_error = richardson_error;
    Ok(report)
}

fn run_midpoint(
    h: &TimeDepHamiltonian,
    psi0: &Array1<C64>,
    dt: f64,
    steps_per_period: usize,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<EvolutionReport, DynamicsError> {
    let n_full = (t_final / dt + 1e-12).floor() as usize;
    let remainder = (t_final - n_full as f64 * dt).max(0.0);
    let has_tail = remainder > 1e-15 * t_final.max(dt);
    let total_steps = n_full + usize::from(has_tail);

    // Stride between stored samples; kept coprime with the steps-per-period
    // so samples walk through the drive phase instead of aliasing onto it.
    let mut stride = (n_full / opts.max_samples.max(2).saturating_sub(1)).max(1);
    while gcd(stride, steps_per_period) != 1 && stride < n_full.max(2) {
        stride += 1;
    }

    let cached = h
        .uniform_cos_frequency()
        .filter(|&omega| omega > 0.0)
        .map(|_| {
            (0..steps_per_period)
                .map(|k| {
                    let t_mid = (k as f64 + 0.5) * dt;
                    herm_expm(&h.evaluate(t_mid), C64::new(0.0, -dt))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;

    let mut psi = psi0.clone();
    let mut times = vec![0.0];
    let mut states = vec![psi.clone()];
    let mut norm_drift = (state_norm(&psi) - 1.0).abs();

    for k in 0..n_full {
        psi = match &cached {
            Some(props) => props[k % steps_per_period].dot(&psi),
            None => {
                let t_mid = (k as f64 + 0.5) * dt;
                expm_apply(&h.evaluate(t_mid), C64::new(0.0, -dt), &psi)
            }
        };
        let done = k + 1 == n_full && !has_tail;
        if (k + 1) % stride == 0 || done {
            let t = (k + 1) as f64 * dt;
            let drift = (state_norm(&psi) - 1.0).abs();
            norm_drift = norm_drift.max(drift);
            if norm_drift > 1e-8 {
                return Err(DynamicsError::NormDrift { t, drift: norm_drift });
            }
            times.push(t);
            states.push(psi.clone());
        }
    }
    if has_tail {
        let t_mid = n_full as f64 * dt + 0.5 * remainder;
        psi = expm_apply(&h.evaluate(t_mid), C64::new(0.0, -remainder), &psi);
        let drift = (state_norm(&psi) - 1.0).abs();
        norm_drift = norm_drift.max(drift);
        if norm_drift > 1e-8 {
            return Err(DynamicsError::NormDrift { t: t_final, drift: norm_drift });
        }
        times.push(t_final);
        states.push(psi);
    }

    Ok(EvolutionReport {
        times,
        states,
        picture: opts.picture,
        norm_drift,
        step_control: StepControl { dt, steps: total_steps, richardson_error: None },
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Calibration constant of the equivalence-check pass bound.
///
/// Fitted once from the infidelity-vs-(Ω₀/ω_B)² scaling study on the
/// single-ion test point (see the acceptance suite); the pass criterion
/// allows 3× headroom over this fit.
pub const EQUIVALENCE_CALIBRATION_C: f64 = 1.9;

/// Outcome of [`equivalence_check`].
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EquivalenceReport {
    /// Max over sampled times of 1 − |⟨ψ_dressed | ψ_lab→dressed⟩|².
    pub max_infidelity: f64,
    /// Max_j Ω₀^(j) / ω_B, the small parameter of the rotating-wave step.
    pub ratio: f64,
    /// Pass bound 3·C·ratio².
    pub bound: f64,
    pub passes: bool,
}

/// Certify that lab-frame evolution under the full cos(ω_B t) drive, mapped
/// into the dressed frame, reproduces evolution under the dressed
/// (static-equivalent) Hamiltonian.
pub fn equivalence_check(
    system: &SystemConfig,
    psi0: &Array1<C64>,
    t_final: f64,
) -> Result<EquivalenceReport, DynamicsError> {
    let Some(omega_b) = system.field.omega_b() else {
        return Err(DynamicsError::Precondition(
            "equivalence check requires a dynamic field".into(),
        ));
    };
    let crystal = equilibrium_positions(&system.species, &system.trap)?;
    let modes = normal_modes(&system.species, &system.trap, &crystal)?;
    let couplings =
        rabi_frequencies(&system.species, &system.field, &modes, &crystal)?;

    let omega0_max = couplings
        .omega0_rabi
        .iter()
        .fold(0.0_f64, |m, w| m.max(w.abs()));
    let ratio = omega0_max / omega_b;
    if ratio >= 0.1 {
        return Err(DynamicsError::Precondition(format!(
            "carrier Rabi frequency too strong for the rotating-wave regime: \
             Ω₀/ω_B = {ratio:.3e} >= 0.1"
        )));
    }
    let nu_min = modes
        .frequencies
        .iter()
        .fold(f64::INFINITY, |m, nu| m.min(*nu));
    let carrier_ratio = 2.0 * omega0_max / nu_min;
    if carrier_ratio >= 1.0 {
        return Err(DynamicsError::Precondition(format!(
            "carrier suppression violated: μB_j/(ħν) = {carrier_ratio:.3e} >= 1"
        )));
    }

    let layout = HilbertLayout::new(system.trap.n_ions, modes.n_modes(), system.sim.fock_cutoff);
    assert_eq!(layout.dim(), psi0.len(), "equivalence_check: state dimension mismatch");

    let lab = h_dynamic_lab(system, &crystal, &modes)?;
    let lab_report = evolve_timedep(&lab, psi0, &system.sim, t_final, &EvolveOptions::default())?;

    let dressed_frame = Frame::Dressed { omega_b };
    let psi_dressed0 = frame_transform(psi0, &dressed_frame, &layout, 0.0);
    let h_dr = h_dressed(system, &crystal, &modes)?;
    let dressed_report =
        evolve_const_sampled(&h_dr, &psi_dressed0, &lab_report.times, Picture::Dressed)?;

    let mut max_infidelity = 0.0_f64;
    for ((t, lab_state), dressed_state) in lab_report
        .times
        .iter()
        .zip(&lab_report.states)
        .zip(&dressed_report.states)
    {
        let mapped = frame_transform(lab_state, &dressed_frame, &layout, *t);
        let infidelity = 1.0 - fidelity(dressed_state, &mapped);
        max_infidelity = max_infidelity.max(infidelity);
    }

    let bound = 3.0 * EQUIVALENCE_CALIBRATION_C * ratio * ratio;
    Ok(EquivalenceReport {
        max_infidelity,
        ratio,
        bound,
        passes: max_infidelity <= bound,
    })
}

/// Extract the two-ion spin-spin coupling from the exact spectrum of the
/// static (or dressed-equivalent) Hamiltonian, evaluated in the motional
/// manifold with every mode at occupation `manifold`.
///
/// Eigenstates are matched to the four spin patterns at that occupation by
/// maximum overlap; an overlap below 0.9 is a loud failure. The returned
/// value is normalized so that it estimates J_{1,2} = Σ_n ν_n ε_{1,n} ε_{2,n}
/// of the σ_z σ_z interaction written as −(J/2)·σ_z^(1)·σ_z^(2).
pub fn extract_j_from_spectrum(
    system: &SystemConfig,
    manifold: usize,
) -> Result<f64, DynamicsError> {
    if system.trap.n_ions != 2 {
        return Err(DynamicsError::Precondition(format!(
            "spectral J extraction is defined for exactly 2 ions, got {}",
            system.trap.n_ions
        )));
    }
    let static_system = if system.field.is_dynamic() {
        identify_static_equivalent(system)?
    } else {
        system.clone()
    };
    let cutoff = static_system.sim.fock_cutoff;
    // Stay below the boundary band (top 3 Fock levels) with one level of
    // headroom for the displaced tails.
    if manifold + 4 > cutoff {
        return Err(DynamicsError::Precondition(format!(
            "manifold {manifold} reaches into the boundary band at cutoff {cutoff}"
        )));
    }

    let crystal = equilibrium_positions(&static_system.species, &static_system.trap)?;
    let modes = normal_modes(&static_system.species, &static_system.trap, &crystal)?;
    let layout = HilbertLayout::new(2, modes.n_modes(), cutoff);
    let h = h_static(&static_system, &crystal, &modes)?;
    let (evals, vecs) = eigh_hermitian(&h)?;

    let occs = vec![manifold; modes.n_modes()];
    let mut energies = [0.0_f64; 4];
    let mut assigned = [usize::MAX; 4];
    for (pattern, energy) in energies.iter_mut().enumerate() {
        let spins = [(pattern >> 1) & 1, pattern & 1];
        let target = layout.basis_index(&spins, &occs);
        let mut best = 0;
        let mut best_overlap = 0.0;
        for col in 0..vecs.ncols() {
            let overlap = vecs[(target, col)].norm();
            if overlap > best_overlap {
                best_overlap = overlap;
                best = col;
            }
        }
        if best_overlap < 0.9 {
            return Err(DynamicsError::LevelIdentification { overlap: best_overlap });
        }
        if assigned.contains(&best) {
            return Err(DynamicsError::LevelIdentification { overlap: best_overlap });
        }
        assigned[pattern] = best;
        *energy = evals[best];
    }

    // energies indexed by spin pattern bits (e=0): [ee, eg, ge, gg].
    let combination = energies[0] + energies[3] - energies[1] - energies[2];
    Ok(-combination / 8.0)
}

/// Observable helpers for trajectory output.
pub mod observables {
    use super::*;

    /// ⟨σ_z⟩ of ion `j`.
    pub fn sz_expectation(psi: &Array1<C64>, layout: &HilbertLayout, j: usize) -> f64 {
        let stride = (1usize << (layout.n_spins - 1 - j))
            * layout.cutoff.pow(layout.n_modes as u32);
        psi.iter()
            .enumerate()
            .map(|(idx, amp)| {
                let digit = (idx / stride) % 2;
                let sign = if digit == 0 { 1.0 } else { -1.0 };
                sign * amp.norm_sqr()
            })
            .sum()
    }

    /// ⟨a†a⟩ of mode `n`.
    pub fn mode_occupation(psi: &Array1<C64>, layout: &HilbertLayout, n: usize) -> f64 {
        let stride = layout.cutoff.pow((layout.n_modes - 1 - n) as u32);
        psi.iter()
            .enumerate()
            .map(|(idx, amp)| ((idx / stride) % layout.cutoff) as f64 * amp.norm_sqr())
            .sum()
    }

    /// Joint spin populations, traced over the modes; index is the spin
    /// bit-pattern with ion 0 as the most significant bit and |e⟩ = 0.
    pub fn spin_populations(psi: &Array1<C64>, layout: &HilbertLayout) -> Vec<f64> {
        let mode_dim = layout.cutoff.pow(layout.n_modes as u32);
        let mut pops = vec![0.0; 1 << layout.n_spins];
        for (idx, amp) in psi.iter().enumerate() {
            pops[idx / mode_dim] += amp.norm_sqr();
        }
        pops
    }
}
