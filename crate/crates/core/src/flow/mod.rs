//! Leading-order mean-field adiabatic flow.
//!
//! Along the linear schedule `J → sJ`, `B = 1 − s`, each spin in the
//! adiabatic limit sits on the shell
//!
//! ```text
//! S^z_μ = A_μ / (2 √(1 + A_μ²)),   A_μ = [(2/Z) Σ_{ν≠μ} J_{μν} S^z_ν + J_μ] · s/(1 − s)
//! ```
//!
//! and its `s`-derivative obeys the linear system `M ∂_s S^z = S^z ∂A/∂s|_S`.
//! [`integrate`] follows that system from `s0` to `s_max` and stops at the
//! first point where `det(M)` vanishes.

use alloc::vec::Vec;
use core::fmt;

use crate::ising::{IsingError, SpinConfiguration};

mod integrate;
mod model;

pub use integrate::{finalize, integrate, Rounding};
pub use model::{
    assemble_m, diagnostics, drive, flow_rhs, mean_field_energy, on_shell_residual, on_shell_sz,
    transverse, transverse_from_sz, MMatrix, RhsEval,
};

#[derive(Debug, Clone, PartialEq)]
pub enum FlowError {
    InvalidConfig(&'static str),
    /// `s` outside `(0, 1)` or some `|S^z| ≥ ½`.
    InvalidState,
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    /// The integration produced an overflow or NaN.
    NonFinite {
        s: f64,
    },
    /// The rounded final spins are not a fixed point of `σ_μ = sign(b_μ)/2`,
    /// which points at an integrator tolerance problem.
    FixedPointViolation {
        site: usize,
    },
    StepLimit {
        steps: usize,
    },
    Ising(IsingError),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig(why) => write!(f, "invalid solver configuration: {why}"),
            Self::InvalidState => write!(f, "flow state outside 0 < s < 1, |Sz| < 1/2"),
            Self::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} spins, found {found}")
            }
            Self::NonFinite { s } => write!(f, "non-finite flow state near s = {s}"),
            Self::FixedPointViolation { site } => write!(
                f,
                "rounded final spins are not a fixed point (site {site}); tighten tolerances"
            ),
            Self::StepLimit { steps } => write!(f, "step limit of {steps} reached"),
            Self::Ising(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for FlowError {}

impl From<IsingError> for FlowError {
    fn from(e: IsingError) -> Self {
        FlowError::Ising(e)
    }
}

/// Annealing parameter and per-site `S^z`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub s: f64,
    pub sz: Vec<f64>,
}

impl FlowState {
    pub fn new(s: f64, sz: Vec<f64>) -> Result<Self, FlowError> {
        let state = Self { s, sz };
        if state.is_valid() {
            Ok(state)
        } else {
            Err(FlowError::InvalidState)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.s > 0.0 && self.s < 1.0 && self.sz.iter().all(|v| v.abs() < 0.5)
    }
}

/// Quantities derived from a [`FlowState`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDiagnostics {
    /// Drive `A_μ` from the current spins.
    pub a: Vec<f64>,
    /// `S^x_μ = √(¼ − (S^z_μ)²)`.
    pub sx: Vec<f64>,
    pub e_mf: f64,
    /// Sign of `det(M)`; zero if `M` is exactly singular.
    pub det_sign: i8,
    /// Reciprocal 1-norm condition estimate of the row-equilibrated `M`.
    pub rcond: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub state: FlowState,
    pub diagnostics: FlowDiagnostics,
}

/// Accepted integrator steps, `s` strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Accepted steps after the initial point.
    pub fn steps(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&FlowSample> {
        self.samples.last()
    }

    /// Number of sign changes of `S^z_μ` along the trace.
    pub fn sign_changes(&self, mu: usize) -> usize {
        self.samples
            .windows(2)
            .filter(|w| (w[0].state.sz[mu] > 0.0) != (w[1].state.sz[mu] > 0.0))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub s0: f64,
    pub s_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_min: f64,
    pub rcond_floor: f64,
    pub bisect_tol: f64,
    /// Smallest `|S^z(s_max)|` that is rounded to a spin.
    pub decision_threshold: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            s0: 1e-3,
            s_max: 1.0 - 1e-3,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_min: 1e-10,
            rcond_floor: 1e-12,
            bisect_tol: 1e-4,
            decision_threshold: 0.05,
            max_steps: 200_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.s0 > 0.0 && self.s0 < self.s_max && self.s_max < 1.0) {
            return Err(FlowError::InvalidConfig("need 0 < s0 < s_max < 1"));
        }
        let positive = [
            self.rel_tol,
            self.abs_tol,
            self.h_min,
            self.rcond_floor,
            self.bisect_tol,
            self.decision_threshold,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(FlowError::InvalidConfig("tolerances must be positive"));
        }
        if self.decision_threshold >= 0.5 {
            return Err(FlowError::InvalidConfig(
                "decision threshold must be below 1/2",
            ));
        }
        if self.max_steps == 0 {
            return Err(FlowError::InvalidConfig("max_steps must be positive"));
        }
        Ok(())
    }
}

/// Which test flagged the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularKind {
    /// `det(M)` changed sign between accepted steps.
    DetSignChange,
    /// rcond of the row-equilibrated `M` fell below the floor.
    IllConditioned,
    /// The adaptive step shrank below `h_min`.
    StepCollapse,
}

impl SingularKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SingularKind::DetSignChange => "det_sign_change",
            SingularKind::IllConditioned => "ill_conditioned",
            SingularKind::StepCollapse => "step_collapse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Degeneracy {
    /// Every field is zero, so the flow never leaves `S^z = 0`.
    ZeroFields,
    /// `J_μ = 0` leaves row `μ` of `M` identically zero at the start point.
    ZeroInitialPolarization { site: usize },
    /// `|S^z_μ(s_max)|` is below the decision threshold.
    AmbiguousRounding { site: usize, sz: f64 },
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroFields => write!(f, "all fields are zero"),
            Self::ZeroInitialPolarization { site } => {
                write!(f, "site {site} has zero field and no initial polarization")
            }
            Self::AmbiguousRounding { site, sz } => {
                write!(f, "site {site} ends at Sz = {sz}, too small to round")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Converged {
        spins: SpinConfiguration,
        e0: f64,
        trace: FlowTrace,
    },
    Singular {
        s_sing: f64,
        /// Final bisection bracket around `s_sing`.
        bracket: (f64, f64),
        kind: SingularKind,
        trace: FlowTrace,
    },
    Degenerate {
        reason: Degeneracy,
        trace: FlowTrace,
    },
}

impl SolveOutcome {
    pub fn status(&self) -> &'static str {
        match self {
            SolveOutcome::Converged { .. } => "converged",
            SolveOutcome::Singular { .. } => "singular",
            SolveOutcome::Degenerate { .. } => "degenerate",
        }
    }

    pub fn trace(&self) -> &FlowTrace {
        match self {
            SolveOutcome::Converged { trace, .. }
            | SolveOutcome::Singular { trace, .. }
            | SolveOutcome::Degenerate { trace, .. } => trace,
        }
    }

    pub fn s_sing(&self) -> Option<f64> {
        match self {
            SolveOutcome::Singular { s_sing, .. } => Some(*s_sing),
            _ => None,
        }
    }

    pub fn e0(&self) -> Option<f64> {
        match self {
            SolveOutcome::Converged { e0, .. } => Some(*e0),
            _ => None,
        }
    }

    pub fn spins(&self) -> Option<&SpinConfiguration> {
        match self {
            SolveOutcome::Converged { spins, .. } => Some(spins),
            _ => None,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, SolveOutcome::Converged { .. })
    }
}
