//! Shared configurations for the criterion benches.

use magicsim_core::crystal::{equilibrium_positions, normal_modes, Crystal, ModeData};
use magicsim_core::estimators::desk_equivalence_system;
use magicsim_core::model::{angular, Axis, FieldConfig, IonSpecies, SimConfig, TrapConfig};
use magicsim_core::SystemConfig;

/// The single-ion resonant-drive test point used throughout the benches.
pub fn desk_system() -> SystemConfig {
    desk_equivalence_system()
}

/// Two Be⁺ ions at 2π×1 MHz with a 200 T/m dynamic gradient.
pub fn pair_system(cutoff: usize) -> SystemConfig {
    SystemConfig {
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
        sim: SimConfig {
            fock_cutoff: cutoff,
            t_final: 2e-4,
            steps_per_drive_period: 40,
            algebra_tol: 1e-10,
            physics_tol: 1e-6,
        },
    }
}

pub fn structure(system: &SystemConfig) -> (Crystal, ModeData) {
    let crystal = equilibrium_positions(&system.species, &system.trap).unwrap();
    let modes = normal_modes(&system.species, &system.trap, &crystal).unwrap();
    (crystal, modes)
}
