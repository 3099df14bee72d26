//! Equilibrium structure and normal modes of a linear Coulomb crystal.
//!
//! Lengths are expressed through the Coulomb length scale
//! ℓ = (e²/(4πε₀ m ν_ax²))^(1/3); the equilibrium equations are solved in the
//! dimensionless positions u_j = z_j/ℓ.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Solve, UPLO};
use thiserror::Error;

use crate::model::{Axis, IonSpecies, TrapConfig, CODATA};

/// Ion equilibrium positions along the trap axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Crystal {
    /// Positions (m), ascending, centered on the trap origin.
    pub positions: Vec<f64>,
    /// Coulomb length scale ℓ (m).
    pub length_scale: f64,
}

impl Crystal {
    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    /// Positions in units of the length scale.
    pub fn dimensionless(&self) -> Vec<f64> {
        self.positions.iter().map(|z| z / self.length_scale).collect()
    }
}

/// Normal-mode data for one branch (axial or radial) of a crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeData {
    /// Mode frequencies ν_n (rad/s), ascending.
    pub frequencies: Vec<f64>,
    /// Orthonormal mode coefficients b_{j,n}; column n is mode n.
    pub coeffs: Array2<f64>,
    /// Zero-point extents q_n = √(ħ/(2 m ν_n)) (m).
    pub extents: Vec<f64>,
}

impl ModeData {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }
}

#[derive(Debug, Error)]
pub enum CrystalError {
    #[error("equilibrium solve did not converge after {iterations} iterations \
             (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("crystal is unstable on the requested axis: Hessian eigenvalue \
             {eigenvalue:.6e} <= 0 (zigzag threshold crossed)")]
    Unstable { eigenvalue: f64 },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

/// Coulomb length scale ℓ = (e²/(4πε₀ m ν_ax²))^(1/3).
pub fn length_scale(species: &IonSpecies, trap: &TrapConfig) -> f64 {
    let coulomb = CODATA.elem_charge * CODATA.elem_charge
        / (4.0 * std::f64::consts::PI * CODATA.eps0);
    (coulomb / (species.mass * trap.nu_axial * trap.nu_axial)).cbrt()
}

/// Dimensionless force residual: F_j = u_j - Σ_{k<j} (u_j-u_k)^-2
///                                        + Σ_{k>j} (u_k-u_j)^-2.
fn force(u: &[f64]) -> Array1<f64> {
    let n = u.len();
    Array1::from_shape_fn(n, |j| {
        let mut f = u[j];
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = u[j] - u[k];
            f -= d.signum() / (d * d);
        }
        f
    })
}

/// Jacobian of [`force`]; also the dimensionless axial Hessian.
fn axial_hessian(u: &[f64]) -> Array2<f64> {
    let n = u.len();
    let mut a = Array2::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            if k == j {
                continue;
            }
            let w = 2.0 / (u[j] - u[k]).abs().powi(3);
            a[(j, k)] = -w;
            a[(j, j)] += w;
        }
        a[(j, j)] += 1.0;
    }
    a
}

fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

const MAX_NEWTON_ITERATIONS: usize = 200;
const FORCE_TOL: f64 = 1e-13;

/// Solve for the equilibrium positions of `n_ions` equal-mass ions in a
/// harmonic trap, by damped Newton iteration on the dimensionless force
/// equations.
pub fn equilibrium_positions(
    species: &IonSpecies,
    trap: &TrapConfig,
) -> Result<Crystal, CrystalError> {
    let n = trap.n_ions;
    let ell = length_scale(species, trap);
    if n == 1 {
        return Ok(Crystal { positions: vec![0.0], length_scale: ell });
    }

    // Uniformly spaced start over [-0.5, 0.5]·N^0.56; the exponent tracks the
    // slow growth of the crystal extent with ion number.
    let half_span = 0.5 * (n as f64).powf(0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|j| -half_span + 2.0 * half_span * j as f64 / (n as f64 - 1.0))
        .collect();

    let mut residual = max_abs(&force(&u));
    let mut iterations = 0;
    while residual > FORCE_TOL {
        if iterations >= MAX_NEWTON_ITERATIONS {
            return Err(CrystalError::NoConvergence { iterations, residual });
        }
        let f = force(&u);
        let jac = axial_hessian(&u);
        let step = jac
            .solve(&f)
            .map_err(|e| CrystalError::Linalg(e.to_string()))?;
        // Backtrack until the residual decreases and the ion ordering is
        // preserved.
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(uj, sj)| uj - alpha * sj)
                .collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            let trial_residual = if ordered { max_abs(&force(&trial)) } else { f64::INFINITY };
            if trial_residual < residual {
                u = trial;
                residual = trial_residual;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return Err(CrystalError::NoConvergence { iterations, residual });
            }
        }
        iterations += 1;
    }

    // The converged solution sums to zero up to the residual; recenter so the
    // center of mass sits exactly at the origin.
    let mean = u.iter().sum::<f64>() / n as f64;
    let positions: Vec<f64> = u.iter().map(|uj| (uj - mean) * ell).collect();
    Ok(Crystal { positions, length_scale: ell })
}

/// Zero-point extent q = √(ħ/(2 m ν)) of a mode at frequency ν.
pub fn zero_point_extent(species: &IonSpecies, nu: f64) -> f64 {
    (CODATA.hbar / (2.0 * species.mass * nu)).sqrt()
}

/// Compute the normal modes of the crystal branch selected by
/// `trap.active_axis`.
///
/// Mode frequencies are ν_n = ν_ax·√λ_n with λ_n the eigenvalues of the
/// dimensionless Hessian; a non-positive eigenvalue means the linear crystal
/// is unstable on that axis and is reported as an error.
pub fn normal_modes(
    species: &IonSpecies,
    trap: &TrapConfig,
    crystal: &Crystal,
) -> Result<ModeData, CrystalError> {
    let u = crystal.dimensionless();
    let a = axial_hessian(&u);
    let hessian = match trap.active_axis {
        Axis::Axial => a,
        Axis::Radial => {
            let n = u.len();
            let r2 = (trap.nu_radial / trap.nu_axial).powi(2);
            let mut ap = Array2::from_diag_elem(n, r2 + 0.5);
            ap -= &(&a * 0.5);
            ap
        }
    };

    let (lambdas, mut vecs) = hessian
        .eigh(UPLO::Lower)
        .map_err(|e| CrystalError::Linalg(e.to_string()))?;
    if let Some(&bad) = lambdas.iter().find(|&&l| l <= 0.0) {
        return Err(CrystalError::Unstable { eigenvalue: bad });
    }

    // Sign convention: the first component of largest magnitude is positive.
    let n = lambdas.len();
    for col in 0..n {
        let mut pivot = 0;
        for row in 1..n {
            if vecs[(row, col)].abs() > vecs[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if vecs[(pivot, col)] < 0.0 {
            for row in 0..n {
                vecs[(row, col)] = -vecs[(row, col)];
            }
        }
    }

    let frequencies: Vec<f64> = lambdas.iter().map(|l| trap.nu_axial * l.sqrt()).collect();
    let extents: Vec<f64> = frequencies
        .iter()
        .map(|&nu| zero_point_extent(species, nu))
        .collect();
    Ok(ModeData { frequencies, coeffs: vecs, extents })
}
