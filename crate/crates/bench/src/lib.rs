//! Shared workloads for the criterion benchmarks.

use daqsim_core::gates::Circuit;
use daqsim_core::lightmatter::DaRabiParams;
use daqsim_core::spin::{heisenberg_trotter_plan, ising_circuit, SpinProtocolParams};
use daqsim_core::trotter::TrotterPlan;
use daqsim_core::{CMatrix, Result};

/// Three-qubit transverse Ising circuit at `l` steps.
pub fn ising_workload(l: usize) -> Result<Circuit> {
    ising_circuit(&SpinProtocolParams::ising_transverse(3, 1.0, 0.5, 1.0, l))
}

/// Heisenberg plan on `n` qubits.
pub fn heisenberg_workload(n: usize, l: usize) -> Result<TrotterPlan> {
    heisenberg_trotter_plan(&SpinProtocolParams::heisenberg(n, 1.0, 1.0, l))
}

pub fn rabi_workload(l: usize, fock: usize) -> DaRabiParams {
    DaRabiParams::from_simulated(1.0, 1.0, 0.6, 1.0, l, fock)
}

/// A dense Hermitian matrix of size `2^n` from the Heisenberg chain.
pub fn hermitian_workload(n: usize) -> Result<CMatrix> {
    Ok(heisenberg_workload(n, 1)?.total_matrix())
}
