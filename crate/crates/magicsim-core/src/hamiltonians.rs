//! Hamiltonian builders and coupling constants for gradient-coupled ion
//! crystals.
//!
//! Builders return matrices in angular-frequency units (H/ħ, rad/s) over the
//! fixed tensor layout [spins..., modes...]. The σ_z-coupled family
//! (static-gradient and dressed dynamic-gradient) shares one assembly path so
//! the dressed/static correspondence holds entrywise, not just to rounding.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::crystal::{Crystal, ModeData};
use crate::model::{FieldConfig, IonSpecies, SystemConfig, CODATA};
use crate::operators::{adjoint, displacement, pauli, HilbertLayout};

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("operation requires a {expected} field configuration")]
    WrongFieldKind { expected: &'static str },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
}

/// Per-ion, per-mode coupling constants of a dynamic-gradient configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    /// Effective Lamb-Dicke parameters ε_{j,n} (dimensionless), N×M.
    pub epsilon: Array2<f64>,
    /// Carrier Rabi frequencies Ω₀ = μ·B_j/(2ħ) per ion (rad/s).
    pub omega0_rabi: Vec<f64>,
    /// Gradient sideband Rabi frequencies Ω_{n,j} = μ·B′·b_{j,n}·q_n/(2ħ)
    /// (rad/s), indexed [ion, mode].
    pub omega_grad_rabi: Array2<f64>,
    /// Spin-spin coupling matrix J_{j,k} (rad/s), zero diagonal.
    pub j_matrix: Array2<f64>,
}

/// Effective Lamb-Dicke parameter ε_{j,n} = μ·B′·b_{j,n}·q_n / (2ħ·ν_n).
pub fn coupling_epsilon(
    species: &IonSpecies,
    field: &FieldConfig,
    modes: &ModeData,
    ion: usize,
    mode: usize,
) -> f64 {
    species.mu * field.gradient() * modes.coeffs[(ion, mode)] * modes.extents[mode]
        / (2.0 * CODATA.hbar * modes.frequencies[mode])
}

/// All ε_{j,n} as an N×M matrix.
pub fn epsilon_matrix(
    species: &IonSpecies,
    field: &FieldConfig,
    modes: &ModeData,
) -> Array2<f64> {
    let n_ions = modes.coeffs.nrows();
    let n_modes = modes.n_modes();
    Array2::from_shape_fn((n_ions, n_modes), |(j, n)| {
        coupling_epsilon(species, field, modes, j, n)
    })
}

/// Spin-spin couplings J_{j,k} = Σ_n ν_n ε_{j,n} ε_{k,n}; symmetric with zero
/// diagonal.
pub fn j_matrix(epsilon: &Array2<f64>, frequencies: &[f64]) -> Array2<f64> {
    let n_ions = epsilon.nrows();
    assert_eq!(
        epsilon.ncols(),
        frequencies.len(),
        "j_matrix: mode count mismatch"
    );
    // Fill the upper triangle and mirror so symmetry is exact, not merely
    // within rounding.
    let mut j = Array2::zeros((n_ions, n_ions));
    for a in 0..n_ions {
        for b in a + 1..n_ions {
            let coupling: f64 = frequencies
                .iter()
                .enumerate()
                .map(|(n, nu)| nu * epsilon[(a, n)] * epsilon[(b, n)])
                .sum();
            j[(a, b)] = coupling;
            j[(b, a)] = coupling;
        }
    }
    j
}

/// Field amplitude B_j = B₀ + z_j·B′ at each equilibrium position.
pub fn field_at_ions(field: &FieldConfig, crystal: &Crystal) -> Vec<f64> {
    crystal
        .positions
        .iter()
        .map(|z| field.b_offset() + z * field.gradient())
        .collect()
}

/// Carrier and sideband Rabi frequencies of a dynamic-gradient drive,
/// bundled with ε and J.
pub fn rabi_frequencies(
    species: &IonSpecies,
    field: &FieldConfig,
    modes: &ModeData,
    crystal: &Crystal,
) -> Result<CouplingTable, HamiltonianError> {
    if !field.is_dynamic() {
        return Err(HamiltonianError::WrongFieldKind { expected: "dynamic" });
    }
    let epsilon = epsilon_matrix(species, field, modes);
    let omega0_rabi: Vec<f64> = field_at_ions(field, crystal)
        .iter()
        .map(|b| species.mu * b / (2.0 * CODATA.hbar))
        .collect();
    let n_ions = epsilon.nrows();
    let n_modes = epsilon.ncols();
    let omega_grad_rabi = Array2::from_shape_fn((n_ions, n_modes), |(j, n)| {
        species.mu * field.gradient() * modes.coeffs[(j, n)] * modes.extents[n]
            / (2.0 * CODATA.hbar)
    });
    let j = j_matrix(&epsilon, &modes.frequencies);
    Ok(CouplingTable { epsilon, omega0_rabi, omega_grad_rabi, j_matrix: j })
}

fn layout_for(system: &SystemConfig, modes: &ModeData) -> HilbertLayout {
    HilbertLayout::new(system.trap.n_ions, modes.n_modes(), system.sim.fock_cutoff)
}

fn mode_stride(layout: &HilbertLayout, n: usize) -> usize {
    layout.cutoff.pow((layout.n_modes - 1 - n) as u32)
}

fn spin_stride(layout: &HilbertLayout, j: usize) -> usize {
    (1usize << (layout.n_spins - 1 - j)) * layout.cutoff.pow(layout.n_modes as u32)
}

/// Visit every basis index together with its spin digits (0 = |e⟩, 1 = |g⟩)
/// and mode occupations.
fn for_each_basis(layout: &HilbertLayout, mut f: impl FnMut(usize, &[usize], &[usize])) {
    let dim = layout.dim();
    let mut spins = vec![0usize; layout.n_spins];
    let mut occs = vec![0usize; layout.n_modes];
    for idx in 0..dim {
        let mut rem = idx;
        for n in (0..layout.n_modes).rev() {
            occs[n] = rem % layout.cutoff;
            rem /= layout.cutoff;
        }
        for j in (0..layout.n_spins).rev() {
            spins[j] = rem % 2;
            rem /= 2;
        }
        f(idx, &spins, &occs);
    }
}

fn sign(spin_digit: usize) -> f64 {
    if spin_digit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Assemble Σ_j (ω_j/2)·σ_z^(j) + Σ_n ν_n·a†a + Σ_{j,n} g_{j,n}·(a†+a)·σ_z^(j).
///
/// Both the static-gradient Hamiltonian and the dressed form of the dynamic
/// one are instances of this operator; they differ only in where ω_j and
/// g_{j,n} come from.
fn h_sigma_z_coupled(
    layout: &HilbertLayout,
    omega_z: &[f64],
    frequencies: &[f64],
    g: &Array2<f64>,
) -> Array2<C64> {
    let dim = layout.dim();
    let mut h = Array2::<C64>::zeros((dim, dim));
    for_each_basis(layout, |idx, spins, occs| {
        let mut diag = 0.0;
        for (j, &s) in spins.iter().enumerate() {
            diag += 0.5 * omega_z[j] * sign(s);
        }
        for (n, &occ) in occs.iter().enumerate() {
            diag += frequencies[n] * occ as f64;
        }
        h[(idx, idx)] = C64::new(diag, 0.0);
        // Raising part of (a†+a)·σ_z; the lowering part is its mirror image
        // and is written when the raised index comes up in the iteration.
        for (n, &occ) in occs.iter().enumerate() {
            if occ + 1 >= layout.cutoff {
                continue;
            }
            let up = idx + mode_stride(layout, n);
            let root = ((occ + 1) as f64).sqrt();
            let mut amp = 0.0;
            for (j, &s) in spins.iter().enumerate() {
                amp += g[(j, n)] * sign(s);
            }
            let value = C64::new(amp * root, 0.0);
            h[(up, idx)] += value;
            h[(idx, up)] += value;
        }
    });
    h
}

/// Position-dependent level splittings ω(z_j) = ω₀ + μ·(B₀ + z_j·B′)/ħ.
pub fn level_splittings(
    species: &IonSpecies,
    field: &FieldConfig,
    crystal: &Crystal,
) -> Vec<f64> {
    field_at_ions(field, crystal)
        .iter()
        .map(|b| field.omega0() + species.mu * b / CODATA.hbar)
        .collect()
}

/// Static-gradient Hamiltonian:
/// H/ħ = Σ_j ω(z_j)/2·σ_z^(j) + Σ_n ν_n·a†a
///       + Σ_{j,n} ν_n·ε_{j,n}·(a†+a)·σ_z^(j).
pub fn h_static(
    system: &SystemConfig,
    crystal: &Crystal,
    modes: &ModeData,
) -> Result<Array2<C64>, HamiltonianError> {
    if system.field.is_dynamic() {
        return Err(HamiltonianError::WrongFieldKind { expected: "static" });
    }
    let layout = layout_for(system, modes);
    let omega_z = level_splittings(&system.species, &system.field, crystal);
    let eps = epsilon_matrix(&system.species, &system.field, modes);
    let g = Array2::from_shape_fn(eps.raw_dim(), |(j, n)| modes.frequencies[n] * eps[(j, n)]);
    Ok(h_sigma_z_coupled(&layout, &omega_z, &modes.frequencies, &g))
}

/// Dressed-picture Hamiltonian of the dynamic gradient:
/// H/ħ = Σ_j (μB_j/2ħ)·σ_z^(±,j) + Σ_n ν_n·a†a
///       + Σ_{j,n} (μB′b_{j,n}q_n/2ħ)·(a†+a)·σ_z^(±,j),
/// expressed in the dressed basis where σ_z^(±) is numerically the Pauli-z
/// matrix. Identical, entry for entry, to [`h_static`] of
/// [`identify_static_equivalent`].
pub fn h_dressed(
    system: &SystemConfig,
    crystal: &Crystal,
    modes: &ModeData,
) -> Result<Array2<C64>, HamiltonianError> {
    let equivalent = identify_static_equivalent(system)?;
    h_static(&equivalent, crystal, modes)
}

/// Map a dynamic-gradient configuration onto the static-gradient
/// configuration whose Hamiltonian equals the dressed-picture one:
/// ω(z_j) = μ·B_j/ħ and ε_{j,n} = Ω_{n,j}/ν_n.
pub fn identify_static_equivalent(
    system: &SystemConfig,
) -> Result<SystemConfig, HamiltonianError> {
    match system.field {
        FieldConfig::Dynamic { b_offset, gradient, .. } => Ok(SystemConfig {
            field: FieldConfig::Static { b_offset, gradient, omega0: 0.0 },
            ..system.clone()
        }),
        FieldConfig::Static { .. } => {
            Err(HamiltonianError::WrongFieldKind { expected: "dynamic" })
        }
    }
}

/// Gradient-transformed driving Hamiltonian on one spin ⊗ one mode:
/// H/ħ = (Ω_D/2)·(σ₊·D(ε) + σ₋·D(−ε)).
pub fn h_driving_transformed(omega_d: f64, eps: f64, cutoff: usize) -> Array2<C64> {
    let p = pauli();
    let d = displacement(eps, cutoff);
    let half = C64::new(0.5 * omega_d, 0.0);
    let raise = ndarray::linalg::kron(&p.plus, &d);
    (&raise + &adjoint(&raise)).mapv(|z| z * half)
}

/// Spin-spin Hamiltonian H/ħ = −(1/2)·Σ_{j<k} J_{j,k}·σ_z^(j)·σ_z^(k) on the
/// spin space alone (it acts as the identity on every mode).
pub fn h_spin_spin(j: &Array2<f64>) -> Array2<C64> {
    let n_ions = j.nrows();
    assert_eq!(n_ions, j.ncols(), "h_spin_spin: J must be square");
    let dim = 1usize << n_ions;
    let mut h = Array2::<C64>::zeros((dim, dim));
    for idx in 0..dim {
        let mut energy = 0.0;
        for a in 0..n_ions {
            let sa = sign((idx >> (n_ions - 1 - a)) & 1);
            for b in a + 1..n_ions {
                let sb = sign((idx >> (n_ions - 1 - b)) & 1);
                energy -= 0.5 * j[(a, b)] * sa * sb;
            }
        }
        h[(idx, idx)] = C64::new(energy, 0.0);
    }
    h
}

/// Time dependence of one term of a [`TimeDepHamiltonian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveCoeff {
    /// cos(ω t) multiplying a Hermitian matrix.
    Cos { omega: f64 },
    /// e^(−iωt)·M + e^(+iωt)·M†.
    Rotating { omega: f64 },
}

#[derive(Debug, Clone)]
pub struct DriveTerm {
    pub matrix: Array2<C64>,
    pub coeff: DriveCoeff,
}

/// A Hamiltonian of the form H(t) = H₀ + Σ_k c_k(t)·M_k (+ h.c. for rotating
/// terms), Hermitian at every t by construction.
#[derive(Debug, Clone)]
pub struct TimeDepHamiltonian {
    pub h0: Array2<C64>,
    pub terms: Vec<DriveTerm>,
    /// Natural stepping period for integrators (2π/ω_B for a cosine drive).
    pub period_hint: Option<f64>,
}

impl TimeDepHamiltonian {
    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn evaluate(&self, t: f64) -> Array2<C64> {
        let mut h = self.h0.clone();
        for term in &self.terms {
            match term.coeff {
                DriveCoeff::Cos { omega } => {
                    let c = C64::new((omega * t).cos(), 0.0);
                    h.zip_mut_with(&term.matrix, |acc, m| *acc += c * m);
                }
                DriveCoeff::Rotating { omega } => {
                    let c = C64::new(0.0, -omega * t).exp();
                    let n = h.nrows();
                    for i in 0..n {
                        for j in 0..n {
                            let m = term.matrix[(i, j)];
                            let mt = term.matrix[(j, i)].conj();
                            h[(i, j)] += c * m + c.conj() * mt;
                        }
                    }
                }
            }
        }
        h
    }

    /// The single drive frequency shared by every term, if there is one; a
    /// constant Hamiltonian reports `Some(0.0)` only when it has no terms.
    pub fn uniform_cos_frequency(&self) -> Option<f64> {
        let mut freq: Option<f64> = None;
        for term in &self.terms {
            match term.coeff {
                DriveCoeff::Cos { omega } => match freq {
                    None => freq = Some(omega),
                    Some(f) if f == omega => {}
                    _ => return None,
                },
                DriveCoeff::Rotating { .. } => return None,
            }
        }
        freq
    }
}

/// Lab-frame Hamiltonian of ions in a dynamic gradient field:
/// H(t)/ħ = Σ_j (ω₀/2)σ_z^(j) + Σ_n ν_n a†a
///          + cos(ω_B t)·Σ_j σ_x^(j)·[μB_j/ħ + (μB′/ħ)·Σ_n b_{j,n}q_n(a†+a)].
pub fn h_dynamic_lab(
    system: &SystemConfig,
    crystal: &Crystal,
    modes: &ModeData,
) -> Result<TimeDepHamiltonian, HamiltonianError> {
    let FieldConfig::Dynamic { omega_b, omega0, .. } = system.field else {
        return Err(HamiltonianError::WrongFieldKind { expected: "dynamic" });
    };
    let layout = layout_for(system, modes);
    let dim = layout.dim();
    let mu_over_hbar = system.species.mu / CODATA.hbar;
    let b_at_ions = field_at_ions(&system.field, crystal);
    let gradient = system.field.gradient();

    let mut h0 = Array2::<C64>::zeros((dim, dim));
    let mut h1 = Array2::<C64>::zeros((dim, dim));
    for_each_basis(&layout, |idx, spins, occs| {
        let mut diag = 0.0;
        for &s in spins {
            diag += 0.5 * omega0 * sign(s);
        }
        for (n, &occ) in occs.iter().enumerate() {
            diag += modes.frequencies[n] * occ as f64;
        }
        h0[(idx, idx)] = C64::new(diag, 0.0);

        for (j, &s) in spins.iter().enumerate() {
            // σ_x flips spin j regardless of its current value; write the
            // half with s = |g⟩ so each pair is placed exactly once.
            if s != 1 {
                continue;
            }
            let flipped = idx - spin_stride(&layout, j);
            let carrier = C64::new(mu_over_hbar * b_at_ions[j], 0.0);
            h1[(flipped, idx)] += carrier;
            h1[(idx, flipped)] += carrier;
            for (n, &occ) in occs.iter().enumerate() {
                let coupling = mu_over_hbar
                    * gradient
                    * modes.coeffs[(j, n)]
                    * modes.extents[n];
                if occ + 1 < layout.cutoff {
                    let amp = C64::new(coupling * ((occ + 1) as f64).sqrt(), 0.0);
                    let up = flipped + mode_stride(&layout, n);
                    h1[(up, idx)] += amp;
                    h1[(idx, up)] += amp;
                }
                if occ > 0 {
                    let amp = C64::new(coupling * (occ as f64).sqrt(), 0.0);
                    let down = flipped - mode_stride(&layout, n);
                    h1[(down, idx)] += amp;
                    h1[(idx, down)] += amp;
                }
            }
        }
    });

    Ok(TimeDepHamiltonian {
        h0,
        terms: vec![DriveTerm { matrix: h1, coeff: DriveCoeff::Cos { omega: omega_b } }],
        period_hint: Some(std::f64::consts::TAU / omega_b),
    })
}

/// Interaction-picture Hamiltonian of the dynamic drive after the rotating
/// wave approximation:
/// H(t)/ħ = Σ_j σ₊^(j)·(Ω₀^(j)·e^(−iδ₀t) + Σ_n Ω_{n,j}·a_n·e^(−i(δ₀+ν_n)t))
///          + h.c., with δ₀ = ω_B − ω₀.
///
/// The overall sign matches the rotating-wave reduction of
/// [`h_dynamic_lab`]'s +σ_x·cos(ω_B t) coupling, so lab-frame and
/// interaction-picture propagation agree up to counter-rotating corrections.
pub fn h_dynamic_rwa(
    system: &SystemConfig,
    crystal: &Crystal,
    modes: &ModeData,
) -> Result<TimeDepHamiltonian, HamiltonianError> {
    let FieldConfig::Dynamic { omega_b, omega0, .. } = system.field else {
        return Err(HamiltonianError::WrongFieldKind { expected: "dynamic" });
    };
    let delta0 = omega_b - omega0;
    let layout = layout_for(system, modes);
    let dim = layout.dim();
    let couplings = rabi_frequencies(&system.species, &system.field, modes, crystal)?;

    let mut terms = Vec::new();
    // Carrier: one rotating term per ion.
    for j in 0..layout.n_spins {
        let mut m = Array2::<C64>::zeros((dim, dim));
        for_each_basis(&layout, |idx, spins, _| {
            if spins[j] == 1 {
                let up = idx - spin_stride(&layout, j);
                m[(up, idx)] = C64::new(couplings.omega0_rabi[j], 0.0);
            }
        });
        terms.push(DriveTerm { matrix: m, coeff: DriveCoeff::Rotating { omega: delta0 } });
    }
    // Sidebands: σ₊·a per ion and mode.
    for j in 0..layout.n_spins {
        for n in 0..layout.n_modes {
            let omega_nj = couplings.omega_grad_rabi[(j, n)];
            let mut m = Array2::<C64>::zeros((dim, dim));
            for_each_basis(&layout, |idx, spins, occs| {
                if spins[j] == 1 && occs[n] > 0 {
                    let target = idx - spin_stride(&layout, j) - mode_stride(&layout, n);
                    m[(target, idx)] =
                        C64::new(omega_nj * (occs[n] as f64).sqrt(), 0.0);
                }
            });
            terms.push(DriveTerm {
                matrix: m,
                coeff: DriveCoeff::Rotating { omega: delta0 + modes.frequencies[n] },
            });
        }
    }

    let fastest = terms
        .iter()
        .map(|t| match t.coeff {
            DriveCoeff::Cos { omega } | DriveCoeff::Rotating { omega } => omega.abs(),
        })
        .fold(0.0_f64, f64::max);
    let period_hint = if fastest > 0.0 {
        Some(std::f64::consts::TAU / fastest)
    } else {
        None
    };

    Ok(TimeDepHamiltonian { h0: Array2::zeros((dim, dim)), terms, period_hint })
}
