//! Acceptance suite: the release gate for the simulator. Each test covers
//! one criterion, prints a PASS/FAIL line (visible with `--nocapture`), and
//! enforces its runtime budget.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magicsim_core::crystal::{equilibrium_positions, normal_modes, zero_point_extent};
use magicsim_core::dynamics::{
    equivalence_check, evolve_timedep, extract_j_from_spectrum, frame_unitary,
    EvolveOptions, Frame,
};
use magicsim_core::estimators::{
    crosstalk_probability, desk_equivalence_system, fit_loglog_slope, gate_time_from_j,
    run_scenario, ScenarioName,
};
use magicsim_core::hamiltonians::{
    epsilon_matrix, h_dressed, h_driving_transformed, h_dynamic_lab, h_dynamic_rwa,
    h_spin_spin, h_static, identify_static_equivalent, j_matrix, DriveCoeff, DriveTerm,
    TimeDepHamiltonian,
};
use magicsim_core::model::{
    angular, Axis, FieldConfig, IonSpecies, SimConfig, TrapConfig, CODATA,
};
use magicsim_core::operators::{
    basis_state, eigh_hermitian, herm_expm, hermiticity_defect, max_abs, pauli,
    unitarity_defect, HilbertLayout,
};
use magicsim_core::{C64, SystemConfig};

fn report(tag: &str, ok: bool, detail: &str) {
    println!(
        "[acceptance {tag}] {}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "[acceptance {tag}] {detail}");
}

fn ground_state(layout: &HilbertLayout) -> magicsim_core::ndarray::Array1<C64> {
    basis_state(
        layout.dim(),
        layout.basis_index(&vec![1; layout.n_spins], &vec![0; layout.n_modes]),
    )
}

fn random_dynamic_system(rng: &mut ChaCha8Rng) -> SystemConfig {
    let n_ions = rng.random_range(1..=3usize);
    let cutoff = match n_ions {
        1 | 2 => rng.random_range(2..=12usize),
        _ => rng.random_range(2..=6usize),
    };
    let nu_axial = angular(rng.random_range(0.2..4.0) * 1e6);
    let radial = rng.random_bool(0.3);
    SystemConfig {
        species: IonSpecies::beryllium_9(),
        trap: TrapConfig {
            n_ions,
            nu_axial,
            nu_radial: 8.0 * nu_axial,
            active_axis: if radial { Axis::Radial } else { Axis::Axial },
        },
        field: FieldConfig::Dynamic {
            b_offset: rng.random_range(0.0..2e-5),
            gradient: rng.random_range(0.0..500.0),
            omega_b: angular(rng.random_range(20.0..80.0) * 1e6),
            omega0: angular(50e6),
        },
        sim: SimConfig {
            fock_cutoff: cutoff,
            t_final: 1e-5,
            steps_per_drive_period: 40,
            algebra_tol: 1e-10,
            physics_tol: 1e-6,
        },
    }
}

/// Criterion 1: the dressed-picture Hamiltonian of a dynamic gradient equals
/// the static-gradient Hamiltonian of the identified configuration, entry for
/// entry, across randomized configurations.
#[test]
fn a01_operator_identity_dressed_equals_static() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20160609);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let system = random_dynamic_system(&mut rng);
        let crystal = equilibrium_positions(&system.species, &system.trap).unwrap();
        let modes = normal_modes(&system.species, &system.trap, &crystal).unwrap();
        let dressed = h_dressed(&system, &crystal, &modes).unwrap();
        let equivalent = identify_static_equivalent(&system).unwrap();
        let static_h = h_static(&equivalent, &crystal, &modes).unwrap();
        let scale = max_abs(&dressed).max(1e-300);
        let dev = dressed
            .iter()
            .zip(static_h.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        worst = worst.max(dev / scale);
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-14 && elapsed.as_secs_f64() < 10.0;
    report(
        "1",
        ok,
        &format!("operator identity over 50 random configs: max relative deviation {worst:.1e} ({elapsed:.1?})"),
    );
}

/// Criterion 2: lab-frame evolution mapped to the dressed frame matches
/// dressed-Hamiltonian evolution at the single-ion test point, and the
/// residual infidelity scales as (Ω₀/ω_B)² over a decade of drive strengths.
#[test]
fn a02_dynamical_equivalence_and_scaling() {
    let start = Instant::now();
    let base = desk_equivalence_system();
    let layout = HilbertLayout::new(1, 1, base.sim.fock_cutoff);
    let psi0 = ground_state(&layout);

    let desk = equivalence_check(&base, &psi0, base.sim.t_final).unwrap();
    let desk_ok = desk.max_infidelity <= 1e-3 && desk.passes;

    let mut ratios = Vec::new();
    let mut infidelities = Vec::new();
    for k in 0..5 {
        let omega0_rabi = angular(30e3) * 10f64.powf(k as f64 / 4.0);
        let mut system = base.clone();
        if let FieldConfig::Dynamic { b_offset, .. } = &mut system.field {
            *b_offset = 2.0 * CODATA.hbar * omega0_rabi / system.species.mu;
        }
        let run = equivalence_check(&system, &psi0, base.sim.t_final).unwrap();
        assert!(run.passes, "scaling point Ω₀/2π = {} Hz failed its bound", omega0_rabi / TAU);
        ratios.push(run.ratio);
        infidelities.push(run.max_infidelity);
    }
    let slope = fit_loglog_slope(&ratios, &infidelities);
    let elapsed = start.elapsed();
    let ok = desk_ok && (slope - 2.0).abs() <= 0.2 && elapsed.as_secs_f64() < 120.0;
    report(
        "2",
        ok,
        &format!(
            "dynamical equivalence: test-point infidelity {:.2e} (≤ 1e-3), \
             scaling slope {slope:.3} (2 ± 0.2) ({elapsed:.1?})",
            desk.max_infidelity
        ),
    );
}

fn two_ion_system(eps0_target: f64, cutoff: usize) -> SystemConfig {
    let species = IonSpecies::beryllium_9();
    let nu = angular(1e6);
    let q = zero_point_extent(&species, nu);
    let gradient = eps0_target * 2.0 * CODATA.hbar * nu / (species.mu * q);
    SystemConfig {
        species,
        trap: TrapConfig {
            n_ions: 2,
            nu_axial: nu,
            nu_radial: angular(5e6),
            active_axis: Axis::Axial,
        },
        field: FieldConfig::Dynamic {
            b_offset: 0.0,
            gradient,
            omega_b: angular(50e6),
            omega0: angular(50e6),
        },
        sim: SimConfig {
            fock_cutoff: cutoff,
            t_final: 2e-4,
            steps_per_drive_period: 40,
            algebra_tol: 1e-10,
            physics_tol: 1e-6,
        },
    }
}

/// Criterion 3: the spectral J oracle reproduces the closed-form coupling
/// J = Σ_n ν_n ε_{1,n} ε_{2,n}, in both the cold (k=0) and hot (k=2)
/// motional manifolds.
#[test]
fn a03_spectral_j_oracle() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for eps0 in [0.02, 0.05, 0.1] {
        let system = two_ion_system(eps0, 12);
        let crystal = equilibrium_positions(&system.species, &system.trap).unwrap();
        let modes = normal_modes(&system.species, &system.trap, &crystal).unwrap();
        let eps = epsilon_matrix(&system.species, &system.field, &modes);
        let formula = j_matrix(&eps, &modes.frequencies)[(0, 1)];
        for manifold in [0usize, 2] {
            let measured = extract_j_from_spectrum(&system, manifold).unwrap();
            worst = worst.max((measured - formula).abs() / formula);
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-6 && elapsed.as_secs_f64() < 30.0;
    report(
        "3",
        ok,
        &format!("spectral J vs closed form: worst relative deviation {worst:.1e} over ε₀ ∈ {{0.02, 0.05, 0.1}} × manifolds {{0, 2}} ({elapsed:.1?})"),
    );
}

/// Criterion 4: cross-talk probability at the quoted addressing separation.
#[test]
fn a04_crosstalk_probability() {
    let p = crosstalk_probability(TAU * 100e3, TAU * 10e6).unwrap();
    let ok = (p - 1.0e-4).abs() / 1.0e-4 <= 0.01;
    report("4", ok, &format!("cross-talk p = {p:.6e} (1e-4 ± 1%)"));
}

/// Criterion 5: conditional-phase gate time from the quoted J value.
#[test]
fn a05_gate_time() {
    let t = gate_time_from_j(TAU * 1.5e3).unwrap();
    let ok = (t - 166.7e-6).abs() / 166.7e-6 <= 1e-3 && (t - 170e-6).abs() / 170e-6 <= 0.03;
    report("5", ok, &format!("gate time {:.1} μs (166.7 μs exact, within 3% of 170 μs)", t * 1e6));
}

fn within_factor(ours: f64, quoted: f64, factor: f64) -> bool {
    let ratio = (ours / quoted).abs();
    ratio <= factor && ratio >= 1.0 / factor
}

/// Criterion 6: formula-exact couplings sit within the stated factors of the
/// quoted order-of-magnitude values, and the regression goldens hold.
#[test]
fn a06_coupling_goldens_and_convention_gap() {
    let be200 = run_scenario(ScenarioName::BeAxial200).unwrap();
    let be35 = run_scenario(ScenarioName::BeAxial35).unwrap();
    let addr = run_scenario(ScenarioName::AddressingBe).unwrap();

    let eps200 = be200.value("epsilon0").unwrap();
    let eps35 = be35.value("epsilon0").unwrap();
    let j200 = be200.value("j12_hz").unwrap();
    let dw = addr.value("delta_omega_hz").unwrap();

    // Goldens from independent hand evaluation of the formulas.
    let golden = (eps200 - 0.0331444).abs() < 1e-6
        && (eps35 - 0.0352993).abs() < 1e-6
        && (j200 - 366.183).abs() < 0.01
        && (dw - 25.7788e6).abs() / 25.7788e6 < 1e-4;

    // Order-of-magnitude agreement with the quoted values.
    let factors = within_factor(eps200, 0.05, 2.0)
        && within_factor(eps35, 0.05, 2.0)
        && within_factor(j200, 1.5e3, 5.0)
        && within_factor(dw, 10e6, 3.0);

    // Scenario outputs carry both our values and the quoted ones.
    let annotated = be200.value("quoted_epsilon0") == Some(0.05)
        && be200.value("quoted_j12_hz") == Some(1.5e3)
        && addr.value("quoted_delta_omega_hz").is_some()
        && (addr.value("crosstalk_p_quoted_separation").unwrap() - 1e-4).abs() / 1e-4 < 0.01;

    let ok = golden && factors && annotated;
    report(
        "6",
        ok,
        &format!(
            "couplings: ε₀(200 T/m) = {eps200:.6}, ε₀(35 T/m) = {eps35:.6}, \
             J = {j200:.2} Hz, Δω/2π = {:.3} MHz; quoted values carried alongside",
            dw / 1e6
        ),
    );
}

/// Criterion 7: crystal structure against closed forms.
#[test]
fn a07_crystal_correctness() {
    let start = Instant::now();
    let be = IonSpecies::beryllium_9();
    let trap = |n: usize| TrapConfig {
        n_ions: n,
        nu_axial: angular(1e6),
        nu_radial: angular(5e6),
        active_axis: Axis::Axial,
    };

    let mut ok = true;
    let mut notes = Vec::new();

    for (n, scales) in [
        (2usize, vec![1.0, 3f64.sqrt()]),
        (3, vec![1.0, 3f64.sqrt(), (29f64 / 5.0).sqrt()]),
    ] {
        let crystal = equilibrium_positions(&be, &trap(n)).unwrap();
        let modes = normal_modes(&be, &trap(n), &crystal).unwrap();
        for (freq, scale) in modes.frequencies.iter().zip(&scales) {
            let want = angular(1e6) * scale;
            if (freq - want).abs() / want > 1e-10 {
                ok = false;
                notes.push(format!("mode frequency {freq} != {want} (n={n})"));
            }
        }
        // Center-of-mass eigenvector is uniform 1/√N.
        let uniform = 1.0 / (n as f64).sqrt();
        for j in 0..n {
            if (modes.coeffs[(j, 0)] - uniform).abs() > 1e-12 {
                ok = false;
                notes.push(format!("COM eigenvector component off (n={n})"));
            }
        }
        // Force residual, restated independently of the solver internals:
        // u_j - Σ_{k<j} (u_j-u_k)^-2 + Σ_{k>j} (u_k-u_j)^-2.
        let u = crystal.dimensionless();
        for j in 0..n {
            let mut f = u[j];
            for k in 0..n {
                if k != j {
                    let d = u[j] - u[k];
                    f -= d.signum() / (d * d);
                }
            }
            if f.abs() > 1e-12 {
                ok = false;
                notes.push(format!("force residual {f:.2e} at ion {j} (n={n})"));
            }
        }
    }

    let crystal = equilibrium_positions(&be, &trap(2)).unwrap();
    let sep = crystal.positions[1] - crystal.positions[0];
    if (sep - 9.2e-6).abs() / 9.2e-6 > 1e-3 {
        ok = false;
        notes.push(format!("separation {sep:.4e} not within 0.1% of 9.2 μm"));
    }

    let elapsed = start.elapsed();
    let ok = ok && elapsed.as_secs_f64() < 1.0;
    report(
        "7",
        ok,
        &format!(
            "crystal closed forms, COM vector, residuals, separation {:.4} μm ({elapsed:.1?}){}",
            sep * 1e6,
            if notes.is_empty() { String::new() } else { format!("; issues: {notes:?}") }
        ),
    );
}

/// Criterion 8: numerical hygiene — hermiticity, unitarity, norm
/// conservation, cutoff-doubling stability, and integrator convergence order.
#[test]
fn a08_numerical_hygiene() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ok = true;
    let mut notes: Vec<String> = Vec::new();

    // Hermiticity of every builder over random configurations.
    for _ in 0..8 {
        let system = random_dynamic_system(&mut rng);
        let crystal = equilibrium_positions(&system.species, &system.trap).unwrap();
        let modes = normal_modes(&system.species, &system.trap, &crystal).unwrap();
        let t = rng.random_range(0.0..1e-6);
        let checks = [
            h_dressed(&system, &crystal, &modes).unwrap(),
            h_static(&identify_static_equivalent(&system).unwrap(), &crystal, &modes)
                .unwrap(),
            h_dynamic_lab(&system, &crystal, &modes).unwrap().evaluate(t),
            h_dynamic_rwa(&system, &crystal, &modes).unwrap().evaluate(t),
        ];
        for h in checks {
            if hermiticity_defect(&h) > 1e-12 * max_abs(&h).max(1.0) {
                ok = false;
                notes.push("hermiticity defect".into());
            }
        }
    }
    let eps = epsilon_matrix(
        &IonSpecies::beryllium_9(),
        &FieldConfig::Dynamic {
            b_offset: 0.0,
            gradient: 200.0,
            omega_b: angular(50e6),
            omega0: angular(50e6),
        },
        &{
            let be = IonSpecies::beryllium_9();
            let trap = TrapConfig {
                n_ions: 2,
                nu_axial: angular(1e6),
                nu_radial: angular(5e6),
                active_axis: Axis::Axial,
            };
            let crystal = equilibrium_positions(&be, &trap).unwrap();
            normal_modes(&be, &trap, &crystal).unwrap()
        },
    );
    let hj = h_spin_spin(&j_matrix(&eps, &[angular(1e6), angular(3f64.sqrt() * 1e6)]));
    if hermiticity_defect(&hj) != 0.0 {
        ok = false;
        notes.push("spin-spin hermiticity".into());
    }
    let hd = h_driving_transformed(angular(1e5), 0.1, 12);
    if hermiticity_defect(&hd) > 1e-12 * max_abs(&hd) {
        ok = false;
        notes.push("driving hermiticity".into());
    }

    // Unitarity of propagators and frames.
    let layout = HilbertLayout::new(1, 1, 10);
    let system = desk_equivalence_system();
    let crystal = equilibrium_positions(&system.species, &system.trap).unwrap();
    let modes = normal_modes(&system.species, &system.trap, &crystal).unwrap();
    let h = h_dressed(&system, &crystal, &modes).unwrap();
    let u = herm_expm(&h, C64::new(0.0, -3.7e-6)).unwrap();
    if unitarity_defect(&u) > 1e-10 {
        ok = false;
        notes.push("propagator unitarity".into());
    }
    let eps_desk = epsilon_matrix(&system.species, &system.field, &modes);
    for frame in [
        Frame::Rotating { omega: angular(50e6) },
        Frame::Dressed { omega_b: angular(50e6) },
        Frame::Polaron { epsilon: eps_desk },
    ] {
        for t in [0.0, 7.3e-7, 5.1e-5] {
            if unitarity_defect(&frame_unitary(&frame, &layout, t)) > 1e-10 {
                ok = false;
                notes.push("frame unitarity".into());
            }
        }
    }

    // Norm conservation along a genuine lab-frame propagation.
    let lab = h_dynamic_lab(&system, &crystal, &modes).unwrap();
    let psi0 = ground_state(&layout);
    let lab_run =
        evolve_timedep(&lab, &psi0, &system.sim, 2e-5, &EvolveOptions::default()).unwrap();
    let drift = lab_run.norm_drift;
    if drift >= 1e-8 {
        ok = false;
        notes.push(format!("norm drift {drift:.1e}"));
    }

    // Doubling the Fock cutoff leaves guarded observables fixed: low-lying
    // eigenvalues at the quoted coupling, and the extracted J.
    let guarded_evals = |cutoff: usize| -> Vec<f64> {
        let mut sys = two_ion_system(0.05, cutoff);
        sys.trap.n_ions = 1;
        let equivalent = identify_static_equivalent(&sys).unwrap();
        let crystal = equilibrium_positions(&sys.species, &sys.trap).unwrap();
        let modes = normal_modes(&sys.species, &sys.trap, &crystal).unwrap();
        let h = h_static(&equivalent, &crystal, &modes).unwrap();
        let (evals, _) = eigh_hermitian(&h).unwrap();
        evals.iter().cloned().filter(|e| e.abs() < 8.6 * angular(1e6)).collect()
    };
    let coarse = guarded_evals(12);
    let fine = guarded_evals(24);
    for &e in &coarse {
        let nearest = fine.iter().fold(f64::INFINITY, |b, &f| {
            if (f - e).abs() < (b - e).abs() {
                f
            } else {
                b
            }
        });
        if (nearest - e).abs() > 1e-8 * angular(1e6) {
            ok = false;
            notes.push(format!("cutoff doubling moved eigenvalue by {:.1e}", nearest - e));
        }
    }
    let j10 = extract_j_from_spectrum(&two_ion_system(0.05, 10), 0).unwrap();
    let j20 = extract_j_from_spectrum(&two_ion_system(0.05, 20), 0).unwrap();
    if (j10 - j20).abs() / j20 > 1e-8 {
        ok = false;
        notes.push("cutoff doubling moved J".into());
    }

    // Exponential-midpoint self-convergence at order 2 ± 0.1.
    let omega = angular(2e6);
    let p = pauli();
    let htd = TimeDepHamiltonian {
        h0: p.z.mapv(|z| z * C64::new(0.5 * omega, 0.0)),
        terms: vec![DriveTerm {
            matrix: p.x.mapv(|z| z * C64::new(angular(2e5), 0.0)),
            coeff: DriveCoeff::Cos { omega },
        }],
        period_hint: Some(TAU / omega),
    };
    let psi0 = basis_state(2, 1);
    let t_final = 12.3 * TAU / omega;
    let run = |steps: usize| {
        let sim = SimConfig {
            fock_cutoff: 2,
            t_final,
            steps_per_drive_period: steps,
            algebra_tol: 1e-10,
            physics_tol: 1e-6,
        };
        evolve_timedep(&htd, &psi0, &sim, t_final, &EvolveOptions::default())
            .unwrap()
            .states
            .last()
            .unwrap()
            .clone()
    };
    let reference = run(2048);
    let errs: Vec<f64> = [16usize, 32, 64, 128]
        .iter()
        .map(|&s| {
            run(s)
                .iter()
                .zip(reference.iter())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
        })
        .collect();
    let steps: Vec<f64> = [16.0, 32.0, 64.0, 128.0].into();
    let order = -fit_loglog_slope(&steps, &errs);
    if (order - 2.0).abs() > 0.1 {
        ok = false;
        notes.push(format!("convergence order {order:.3}"));
    }

    let elapsed = start.elapsed();
    let ok = ok && elapsed.as_secs_f64() < 60.0;
    report(
        "8",
        ok,
        &format!(
            "hygiene: hermiticity, unitarity, norm drift {drift:.1e}, cutoff doubling, \
             midpoint order {order:.3} ({elapsed:.1?}){}",
            if notes.is_empty() { String::new() } else { format!("; issues: {notes:?}") }
        ),
    );
}

/// Criterion 9: repeated CLI runs on the shipped preset configurations
/// produce byte-identical outputs.
#[test]
fn a09_cli_determinism() {
    let repo = Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let config_dir = repo.join("configs");

    let run = |sub: &[&str], config: &PathBuf, out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_magicsim"))
            .args(sub)
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(out)
            .env("SOURCE_DATE_EPOCH", "1754700000")
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0), "{sub:?} failed");
    };

    let mut ok = true;
    let mut compared = 0;
    for (sub, preset) in [
        (vec!["modes"], "be_axial_200"),
        (vec!["couplings"], "be_axial_200"),
        (vec!["couplings"], "yb_static_gate"),
        (vec!["sweep", "--param", "gradient", "--values", "35,65,200"], "be_axial_200"),
    ] {
        let config = config_dir.join(format!("{preset}.json"));
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        run(&sub, &config, dir1.path());
        run(&sub, &config, dir2.path());
        for entry in std::fs::read_dir(dir1.path()).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(dir1.path().join(&name)).unwrap();
            let b = std::fs::read(dir2.path().join(&name)).unwrap();
            if a != b {
                ok = false;
            }
            compared += 1;
        }
    }
    report(
        "9",
        ok,
        &format!("CLI determinism: {compared} output files byte-identical across repeated runs"),
    );
}
