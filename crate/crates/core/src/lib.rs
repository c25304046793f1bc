//! Simulator and analysis toolkit for continuous quantum nondemolition
//! measurement of a qubit's transverse (sigma_x) component in a two-pump
//! circuit-QED system.
//!
//! The crate builds the effective Hamiltonians of the driven
//! transmon-cavity system, evolves the open system under a Lindblad
//! master equation, synthesizes continuous heterodyne measurement
//! records, and analyzes them into histograms, jump traces, rates, and
//! fidelity numbers.

pub mod analysis;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod lindblad;
pub mod measurement;
pub mod operator;
pub mod params;
pub mod rates;
pub mod record;

pub use error::{Error, Result};
pub use linalg::C64;
pub use operator::{HilbertSpace, Operator, StateVector};
pub use params::{DerivedParams, SystemParams};
