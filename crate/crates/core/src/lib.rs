//! Conditional past-future (CPF) correlation of a dephasing qubit.
//!
//! A qubit is measured three times along x with outcomes `x -> y -> z`,
//! separated by intervals `t` and `τ`. Postselecting on the middle outcome,
//! the correlation `<zx>_y - <z>_y <x>_y` vanishes for memoryless (Markovian)
//! dephasing and is non-zero whenever the environment carries information
//! across the middle measurement.
//!
//! Three independent routes compute it:
//!
//! * [`analytic`] and [`spinbath`]: closed forms for classical noise models
//!   and for an exactly solvable spin bath;
//! * [`stochastic`] and [`spinbath::lorentz`]: Monte Carlo over noise or
//!   coupling realizations, with reproducible counter-based streams;
//! * [`spinbath::oracle`]: a dense statevector replay of the full protocol.

pub mod acceptance;
pub mod analytic;
pub mod error;
pub mod montecarlo;
pub mod protocol;
pub mod rng;
pub mod spinbath;
pub mod stats;
pub mod stochastic;

pub use analytic::NoiseModel;
pub use error::{CpfError, Result};
pub use montecarlo::McConfig;
pub use protocol::{
    cpf_from_moments, cpf_from_table, cpf_probability_table, CpfProbabilityTable, CpfSurface,
    Estimate, MethodTag, MomentSet, Outcome, OutcomeTriple, SurfaceValues, TimePair,
};
pub use spinbath::{
    random_spin_bath, scaled_gaussian_bath, LorentzCouplingSpec, SpinBathSpec, SystemInit,
};
