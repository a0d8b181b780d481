//! Closed-form signals, sensitivities and Fisher informations, with the
//! special functions they need.

pub mod adiabatic;
pub mod cho;
pub mod demkov;
pub mod special;

pub use adiabatic::{
    adiabatic_signal_force, adiabatic_signal_magnetic, classical_fisher, minimal_detectable,
    polaron_signal, CollectiveMode, Detectable, MagneticOrder, Parameter, SpinSignal,
};
pub use cho::{
    kappa_star_solve, mean_phonon_signal, phonon_snr_at_t_star, qfi_cho, squeeze_displace_params,
    KappaStar, Sensitivity, SqueezeDisplaceParams,
};
pub use demkov::{
    demkov_closed_amplitudes, qfi_adiabatic, qfi_alpha, DemkovClosedForm, DemkovForm,
};
