//! Exact-diagonalization oracle for small instances.
//!
//! The annealing Hamiltonian
//!
//! ```text
//! H(s) = −(s/Z) Σ_{ν≠μ} J_{νμ} Ŝ^z_μ Ŝ^z_ν − s Σ_μ J_μ Ŝ^z_μ − (1 − s) Σ_μ Ŝ^x_μ
//! ```
//!
//! is built densely in the computational basis. Bit `k` of a basis index is
//! the spin of site `k` (clear = `+½`), site 0 being the least significant.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ising::{basis_spin, IsingInstance};
use crate::linalg::{lowest_pair, symmetric_eigenvalues, EigenError};

/// Largest site count the dense oracle accepts (4096 × 4096 matrices).
pub const DEFAULT_EXACT_LIMIT: usize = 12;
pub const DEFAULT_GAP_GRID: usize = 200;
/// Width the golden-section refinement narrows the gap minimum to.
pub const GAP_REFINE_WIDTH: f64 = 1e-4;
/// Gaps at or below this are treated as an exact ground-state degeneracy.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum ExactError {
    TooLarge { n: usize, limit: usize },
    InvalidSchedule { s: f64 },
    GridTooSmall { grid_size: usize },
    Eigen(EigenError),
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooLarge { n, limit } => write!(
                f,
                "exact diagonalization limited to {limit} sites, instance has {n}"
            ),
            Self::InvalidSchedule { s } => write!(f, "annealing parameter {s} outside [0, 1]"),
            Self::GridTooSmall { grid_size } => {
                write!(
                    f,
                    "grid of {grid_size} points is too small (need at least 3)"
                )
            }
            Self::Eigen(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ExactError {}

impl From<EigenError> for ExactError {
    fn from(e: EigenError) -> Self {
        ExactError::Eigen(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    pub n: usize,
    pub dim: usize,
    /// Row-major `dim × dim`.
    pub matrix: Vec<f64>,
}

impl DenseHamiltonian {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, ExactError> {
        Ok(symmetric_eigenvalues(self.dim, self.matrix.clone())?)
    }
}

pub fn build_hamiltonian(instance: &IsingInstance, s: f64) -> Result<DenseHamiltonian, ExactError> {
    build_hamiltonian_with_limit(instance, s, DEFAULT_EXACT_LIMIT)
}

pub fn build_hamiltonian_with_limit(
    instance: &IsingInstance,
    s: f64,
    limit: usize,
) -> Result<DenseHamiltonian, ExactError> {
    let n = instance.n();
    if n > limit {
        return Err(ExactError::TooLarge { n, limit });
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(ExactError::InvalidSchedule { s });
    }
    let dim = 1usize << n;
    let mut matrix = vec![0.0; dim * dim];
    let hop = -(1.0 - s) * 0.5;
    for index in 0..dim {
        // s · E_classical, so that H(1) carries exactly the classical energies
        matrix[index * dim + index] = s * instance.energy_with(|k| basis_spin(index, k));
        for k in 0..n {
            let other = index ^ (1 << k);
            matrix[index * dim + other] = hop;
        }
    }
    Ok(DenseHamiltonian { n, dim, matrix })
}

/// Ground and first excited energy at one value of `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
}

/// Two lowest eigenvalues of `H(s)` and a unit ground eigenvector.
pub fn lowest_two(
    instance: &IsingInstance,
    s: f64,
) -> Result<(SpectrumPoint, Vec<f64>), ExactError> {
    let h = build_hamiltonian(instance, s)?;
    let pair = lowest_pair(h.dim, h.matrix)?;
    let point = SpectrumPoint {
        s,
        e0: pair.e0,
        e1: pair.e1,
        gap: (pair.e1 - pair.e0).max(0.0),
    };
    Ok((point, pair.ground))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapScan {
    /// Uniform grid over `[0, 1]`, in order.
    pub points: Vec<SpectrumPoint>,
    pub min_gap: f64,
    pub s_gap: f64,
}

fn gap_at(instance: &IsingInstance, s: f64) -> Result<f64, ExactError> {
    Ok(lowest_two(instance, s)?.0.gap)
}

/// Gap on a uniform grid, with the smallest grid value refined by
/// golden-section search between its neighbours.
pub fn gap_scan(instance: &IsingInstance, grid_size: usize) -> Result<GapScan, ExactError> {
    if grid_size < 3 {
        return Err(ExactError::GridTooSmall { grid_size });
    }
    if instance.n() > DEFAULT_EXACT_LIMIT {
        return Err(ExactError::TooLarge {
            n: instance.n(),
            limit: DEFAULT_EXACT_LIMIT,
        });
    }
    let last = (grid_size - 1) as f64;
    let points = (0..grid_size)
        .map(|k| lowest_two(instance, k as f64 / last).map(|(p, _)| p))
        .collect::<Result<Vec<_>, _>>()?;
    let (k_min, grid_min) =
        points
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, bg), (k, p)| {
                if p.gap < bg {
                    (k, p.gap)
                } else {
                    (bk, bg)
                }
            });

    let mut best = (points[k_min].s, grid_min);
    let lo = points[k_min.saturating_sub(1)].s;
    let hi = points[(k_min + 1).min(grid_size - 1)].s;
    let (s_ref, g_ref) = golden_section(lo, hi, |s| gap_at(instance, s))?;
    if g_ref < best.1 {
        best = (s_ref, g_ref);
    }
    Ok(GapScan {
        points,
        min_gap: best.1,
        s_gap: best.0,
    })
}

/// Minimizes `f` on `[lo, hi]` down to [`GAP_REFINE_WIDTH`]. Returns the best
/// point evaluated.
fn golden_section(
    mut lo: f64,
    mut hi: f64,
    mut f: impl FnMut(f64) -> Result<f64, ExactError>,
) -> Result<(f64, f64), ExactError> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    while hi - lo > GAP_REFINE_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    for end in [lo, hi] {
        let g = f(end)?;
        if g < best.1 {
            best = (end, g);
        }
    }
    Ok(best)
}

/// Ground-state magnetizations at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationSample {
    pub s: f64,
    /// `⟨ψ₀| Ŝ^z_μ |ψ₀⟩` per site.
    pub m: Vec<f64>,
    /// Ground level degenerate within [`DEGENERACY_TOL`]; `m` then depends on
    /// the arbitrary choice of vector inside the ground space.
    pub degenerate: bool,
}

/// `⟨Ŝ^z_μ⟩` in the ground state on a uniform grid over `[0, 1]`.
pub fn magnetization_trace(
    instance: &IsingInstance,
    grid_size: usize,
) -> Result<Vec<MagnetizationSample>, ExactError> {
    if grid_size < 2 {
        return Err(ExactError::GridTooSmall { grid_size });
    }
    let n = instance.n();
    let last = (grid_size - 1) as f64;
    (0..grid_size)
        .map(|k| {
            let s = k as f64 / last;
            let (point, psi) = lowest_two(instance, s)?;
            let mut m = vec![0.0; n];
            for (index, amp) in psi.iter().enumerate() {
                let w = amp * amp;
                for (site, mk) in m.iter_mut().enumerate() {
                    *mk += w * basis_spin(index, site);
                }
            }
            Ok(MagnetizationSample {
                s,
                m,
                degenerate: point.gap <= DEGENERACY_TOL,
            })
        })
        .collect()
}
