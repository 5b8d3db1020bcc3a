//! Dense state-vector simulation of digital, analog and digital-analog quantum
//! simulation protocols on small qubit ⊗ truncated-boson systems.

pub mod error;
pub mod fermion;
pub mod frames;
pub mod gates;
pub mod hamiltonian;
pub mod hilbert;
pub mod lightmatter;
pub mod linalg;
pub mod noise;
pub mod scattering;
pub mod spin;
pub mod trotter;

pub use error::{Error, Result};
pub use hamiltonian::{assemble, Factor, Hamiltonian, LocalOp, Term};
pub use hilbert::{
    boson_operator, evolve_exact, expectation, qubit_operator, state_fidelity, BosonOp,
    HilbertSpec, OperatorMatrix, QuantumState, QubitOp, Subsystem, SubsystemKind,
    LEAKAGE_THRESHOLD,
};
pub use linalg::{CMatrix, CVector, C64};
