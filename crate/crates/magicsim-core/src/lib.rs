//! Simulation and calculation of trapped-ion spin-motion coupling induced by
//! static and dynamic magnetic-field gradients: crystal structure, normal
//! modes, coupling constants, Hamiltonians, frame transformations, and
//! propagation, together with the dressed-picture equivalence certification
//! and the worked experiment-design scenarios.

pub mod crystal;
pub mod dynamics;
pub mod estimators;
pub mod hamiltonians;
pub mod model;
pub mod operators;

pub use num_complex::Complex64 as C64;
pub use {ndarray, num_complex};

pub use crystal::{Crystal, CrystalError, ModeData};
pub use dynamics::{
    equivalence_check, EquivalenceReport, EvolutionReport, Frame, Picture,
};
pub use hamiltonians::{CouplingTable, TimeDepHamiltonian};
pub use model::{
    angular, Axis, ConfigError, FieldConfig, IonSpecies, PhysicalConstants, SimConfig,
    SystemConfig, TrapConfig, CODATA,
};
pub use operators::HilbertLayout;
