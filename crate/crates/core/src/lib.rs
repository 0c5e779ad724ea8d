//! Capacitance-matrix spectra of dislocated chains of subwavelength
//! resonators in the dilute regime: band structures and gaps of the periodic
//! dimer chain, mid-gap frequencies of the infinite dislocated chain via block
//! Toeplitz operators, and spectra of finite truncated arrays under
//! dislocation sweeps and positional disorder.

pub mod capacitance;
pub mod dislocation;
pub mod error;
pub mod export;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod special_sums;
pub mod spectra;
pub mod stability;

pub use capacitance::{
    finite_capacitance, quasi_capacitance, quasi_eigen, sphere_cap_b, CapacitanceMatrix,
    QuasiCapacitance, QuasiEigen,
};
pub use error::{Error, Result};
pub use geometry::{build_finite_chain, perturb_chain, ChainParams, FiniteChain};
pub use special_sums::{dimer_sum, g_of_alpha, lerch_phi, monopole_sum, BrillouinPoint};
