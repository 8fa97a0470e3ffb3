use alloc::vec;
use alloc::vec::Vec;

use super::{FlowDiagnostics, FlowState};
use crate::ising::IsingInstance;
use crate::linalg::{equilibrate_rows, DenseLu, SingularMatrix};
use crate::math::{abs, sqrt};

/// `A_μ = [(2/Z) Σ_{ν≠μ} J_{μν} S^z_ν + J_μ] · s/(1 − s)`.
pub fn drive(instance: &IsingInstance, state: &FlowState) -> Vec<f64> {
    let ratio = state.s / (1.0 - state.s);
    (0..instance.n())
        .map(|mu| instance.local_field_at(mu, &state.sz) * ratio)
        .collect()
}

/// On-shell spin `A / (2 √(1 + A²))`, written so it stays finite for huge `A`.
pub fn on_shell_sz(a: f64) -> f64 {
    if abs(a) <= 1.0 {
        a / (2.0 * sqrt(1.0 + a * a))
    } else {
        let inv = 1.0 / a;
        let sign = if a > 0.0 { 0.5 } else { -0.5 };
        sign / sqrt(1.0 + inv * inv)
    }
}

/// `S^x = 1 / (2 √(1 + A²))` per site.
pub fn transverse(a: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|&a| {
            if abs(a) <= 1.0 {
                0.5 / sqrt(1.0 + a * a)
            } else {
                let inv = 1.0 / a;
                0.5 * abs(inv) / sqrt(1.0 + inv * inv)
            }
        })
        .collect()
}

/// `S^x = √(¼ − (S^z)²)`, the transverse component of a unit-length spin with
/// `S^y = 0`.
pub fn transverse_from_sz(sz: &[f64]) -> Vec<f64> {
    sz.iter()
        .map(|&v| sqrt(((0.5 - v) * (0.5 + v)).max(0.0)))
        .collect()
}

/// `max_μ |S^z_μ − A_μ / (2 √(1 + A_μ²))|`.
pub fn on_shell_residual(instance: &IsingInstance, state: &FlowState) -> f64 {
    drive(instance, state)
        .iter()
        .zip(&state.sz)
        .map(|(&a, &sz)| abs(sz - on_shell_sz(a)))
        .fold(0.0, f64::max)
}

/// Dense `n × n` flow matrix
///
/// ```text
/// M_{μν} = δ_{μν} (1 + 4S²/(1 − 4S²)) · 2S/√(1 − 4S²) − S^z_μ · 2s/(Z(1 − s)) · J_{μν}
/// ```
///
/// with `S = S^z_μ`. The diagonal factor simplifies to `2S / (1 − 4S²)^{3/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MMatrix {
    pub n: usize,
    /// Row-major.
    pub entries: Vec<f64>,
}

impl MMatrix {
    #[inline]
    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.entries[mu * self.n + nu]
    }
}

pub fn assemble_m(instance: &IsingInstance, state: &FlowState) -> MMatrix {
    let n = instance.n();
    let coupling_scale = 2.0 * state.s / (instance.z() as f64 * (1.0 - state.s));
    let mut entries = vec![0.0; n * n];
    for (mu, row) in entries.chunks_exact_mut(n).enumerate() {
        let sz = state.sz[mu];
        let q = (1.0 - 2.0 * sz) * (1.0 + 2.0 * sz);
        let c = -sz * coupling_scale;
        for (m, j) in row.iter_mut().zip(instance.coupling_row(mu)) {
            *m = c * j;
        }
        row[mu] = 2.0 * sz / (q * sqrt(q));
    }
    MMatrix { n, entries }
}

/// Derivative of the flow at one point plus the factorization that produced
/// it (of the row-equilibrated `M`).
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub dsz: Vec<f64>,
    pub lu: DenseLu,
}

/// Solves `M x = g` with `g_μ = S^z_μ A_μ / (s(1 − s))`, the fixed-spin
/// derivative of the drive being `A_μ / (s(1 − s))` since `A ∝ s/(1 − s)`.
pub fn flow_rhs(instance: &IsingInstance, state: &FlowState) -> Result<RhsEval, SingularMatrix> {
    let n = instance.n();
    let a = drive(instance, state);
    let denom = state.s * (1.0 - state.s);
    let mut g: Vec<f64> = state
        .sz
        .iter()
        .zip(&a)
        .map(|(sz, a)| sz * a / denom)
        .collect();
    let mut m = assemble_m(instance, state).entries;
    equilibrate_rows(n, &mut m, Some(&mut g));
    let lu = DenseLu::factor(n, m)?;
    lu.solve_in_place(&mut g);
    Ok(RhsEval { dsz: g, lu })
}

/// `E_MF = −(1 − s) Σ S^x − (s/Z) Σ_{μν} J_{νμ} S^z_μ S^z_ν − s Σ J_μ S^z_μ`.
///
/// Not restricted to `0 < s < 1`: at `s = 1` and `S^z = ±½` this reduces to the
/// classical energy of that configuration.
pub fn mean_field_energy(instance: &IsingInstance, s: f64, sz: &[f64], sx: &[f64]) -> f64 {
    let transverse: f64 = sx.iter().sum();
    -(1.0 - s) * transverse + s * instance.energy_with(|mu| sz[mu])
}

pub(crate) fn diagnostics_from(
    instance: &IsingInstance,
    state: &FlowState,
    lu: Option<&DenseLu>,
) -> FlowDiagnostics {
    let a = drive(instance, state);
    let sx = transverse_from_sz(&state.sz);
    let e_mf = mean_field_energy(instance, state.s, &state.sz, &sx);
    let (det_sign, rcond) = match lu {
        Some(lu) => (lu.det_sign(), lu.rcond()),
        None => (0, 0.0),
    };
    FlowDiagnostics {
        a,
        sx,
        e_mf,
        det_sign,
        rcond,
    }
}

/// Diagnostics at an arbitrary state, factoring `M` from scratch.
pub fn diagnostics(instance: &IsingInstance, state: &FlowState) -> FlowDiagnostics {
    let n = instance.n();
    let mut m = assemble_m(instance, state).entries;
    equilibrate_rows(n, &mut m, None);
    let lu = DenseLu::factor(n, m).ok();
    diagnostics_from(instance, state, lu.as_ref())
}
