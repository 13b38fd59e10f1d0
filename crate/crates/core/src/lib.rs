//! Simulation lab for the probabilistic superposition of two pure states.
//!
//! The crate is layered:
//!
//! * [`qcore`]: kets, density operators, operators and the measurement and
//!   evolution primitives, generic over the [`Real`] scalar;
//! * [`protocol`]: the ideal gate-level protocol and its closed-form oracles;
//! * [`nmr`]: the three-spin NMR model (Hamiltonian, deviation states,
//!   pseudo-pure preparation, gradient crushers and echoes);
//! * [`grape`]: piecewise-constant pulse synthesis;
//! * [`noise`]: relaxation, readout noise and the Monte-Carlo pipeline.
//!
//! The physical layers (`nmr`, `grape`, `noise`) run in double precision and
//! use the aliases below.

pub mod error;
pub mod grape;
pub mod linalg;
pub mod nmr;
pub mod noise;
pub mod optim;
pub mod protocol;
pub mod qcore;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, Tolerances};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex64;
/// Double-precision dense matrix.
pub type CMatrix = linalg::Matrix<f64>;
/// Pure state on `n` qubits.
pub type StateVector = qcore::Ket<f64>;
/// Physical or deviation density operator.
pub type DensityOperator = qcore::Density<f64>;
/// Operator on `n` qubits.
pub type Operator = qcore::Operator<f64>;
/// Protocol instance in double precision.
pub type SuperpositionTask = protocol::SuperpositionTask<f64>;
/// Protocol result in double precision.
pub type ProtocolOutcome = protocol::ProtocolOutcome<f64>;

/// Single-precision counterparts.
pub mod f32 {
    pub type StateVector = crate::qcore::Ket<f32>;
    pub type DensityOperator = crate::qcore::Density<f32>;
    pub type Operator = crate::qcore::Operator<f32>;
    pub type SuperpositionTask = crate::protocol::SuperpositionTask<f32>;
}
