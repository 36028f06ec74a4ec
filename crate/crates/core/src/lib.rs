//! Hilbert-space dimension estimation for spin chains observed through a
//! single probe qubit.
//!
//! The pipeline: saturate the probe observable under commutation with the
//! Hamiltonian terms ([`closure`]), build the equivalent linear system on those
//! coordinates ([`realization`]), simulate or load the probe signal
//! ([`dynamics`]), read the model order off a Hankel matrix ([`estimation`]),
//! and invert the model's order table to get `N` and `2^N`.

pub mod closure;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod model;
pub mod parallel;
pub mod pauli;
pub mod realization;

pub use closure::{
    accessible_set, correlates_all_qubits, invert_dimension, order_table, AccessibleSet,
    DimensionEstimate, ObservableSet, OrderRow, OrderTable, SystemSpace, TableLimits,
};
pub use dynamics::{add_noise, plan_sampling, simulate_lti, simulate_quantum, SamplingPlan, TimeSeries};
pub use error::{Error, Result};
pub use estimation::{
    build_hankel, estimate_dimension, noiseless_order, noisy_order, svd_ratios, EstimationReport,
    HankelMatrix, Mode, PeakPolicy, SpectrumAnalysis,
};
pub use model::{CouplingType, HamiltonianInstance, InteractionModel};
pub use parallel::Execution;
pub use pauli::{PauliString, ScaledPauli, Symbol};
pub use realization::{build_realization, discretize, minimality, DiscreteSystem, MinimalityReport, Realization};
