//! Physical parameters, unit handling and Hamiltonian builders.

mod collective;
pub mod config;
mod hamiltonians;
mod params;
pub mod units;

pub use collective::{collective_transform, inverse_hopping, CollectiveModeSpec};
pub use config::{parse_document, Dimension, Document, FinalTime, ModelConfig};
pub use hamiltonians::{
    build_collective_bosonic, build_drive, build_effective_bosonic, build_force_term,
    build_hopping, build_magnetic_term, build_rabi_lattice, build_spin_phonon, RabiLattice,
};
pub use params::{
    hopping_from_trap, CoulombConvention, ForceField, MagneticField, ProbeParams, TrapGeometry,
};
