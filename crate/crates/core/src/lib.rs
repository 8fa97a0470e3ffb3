//! Leading-order mean-field adiabatic flow for transverse-field Ising problems.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation:
//!
//! * [`ising`] holds problem instances, the classical energy, local fields and
//!   the exhaustive ground-state oracle.
//! * [`generate`] draws seeded random fully connected instances.
//! * [`flow`] integrates the mean-field spin flow in the annealing parameter
//!   `s`, assembles the M-matrix and detects `det(M) = 0` singularities.
//! * [`exact`] builds the full `2^n` Hamiltonian and scans its spectral gap.
//! * [`linalg`] provides the dense LU factorization and symmetric eigensolver
//!   used by the two modules above.
//!
//! File formats, the experiment harness and the command-line tool live in the
//! companion `mfanneal` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod exact;
pub mod flow;
pub mod generate;
pub mod ising;
pub mod linalg;
pub(crate) mod math;

pub use exact::{
    build_hamiltonian, gap_scan, lowest_two, magnetization_trace, DenseHamiltonian, ExactError,
    GapScan, MagnetizationSample, SpectrumPoint, DEFAULT_EXACT_LIMIT, DEFAULT_GAP_GRID,
};
pub use flow::{
    integrate, Degeneracy, FlowDiagnostics, FlowError, FlowState, FlowTrace, Rounding,
    SingularKind, SolveOutcome, SolverConfig,
};
pub use generate::{derive_seed, generate_instance, CouplingDistribution, ZRule};
pub use ising::{
    brute_force_ground, brute_force_ground_with_limit, classical_energy, is_one_flip_local_min,
    local_fields, Coupling, GroundResult, IsingError, IsingInstance, LocalFields, Spin,
    SpinConfiguration, DEFAULT_EXHAUSTIVE_LIMIT,
};
