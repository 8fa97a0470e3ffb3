//! Adaptive Dormand–Prince 5(4) integration of the flow with singularity
//! detection.

use alloc::vec::Vec;

use super::model::{diagnostics_from, drive, flow_rhs, on_shell_sz, RhsEval};
use super::{
    Degeneracy, FlowError, FlowSample, FlowState, FlowTrace, SingularKind, SolveOutcome,
    SolverConfig,
};
use crate::ising::{
    classical_energy, is_one_flip_local_min, local_fields, IsingInstance, Spin, SpinConfiguration,
};
use crate::math::{abs, powf, sqrt};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;

/// Why a trial step could not be evaluated.
enum StageFailure {
    /// A stage left `|S^z| < ½` or hit an exactly singular `M`.
    Rejected,
    NonFinite,
}

struct Step {
    y: Vec<f64>,
    err: f64,
    /// Derivative and factorization at the new point (first stage of the
    /// next step).
    last: RhsEval,
}

fn evaluate(instance: &IsingInstance, s: f64, y: &[f64]) -> Result<RhsEval, StageFailure> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StageFailure::NonFinite);
    }
    if !(s > 0.0 && s < 1.0) || y.iter().any(|v| abs(*v) >= 0.5) {
        return Err(StageFailure::Rejected);
    }
    let state = FlowState { s, sz: y.to_vec() };
    let eval = flow_rhs(instance, &state).map_err(|_| StageFailure::Rejected)?;
    if eval.dsz.iter().any(|v| !v.is_finite()) {
        return Err(StageFailure::NonFinite);
    }
    Ok(eval)
}

fn dormand_prince_step(
    instance: &IsingInstance,
    cfg: &SolverConfig,
    s: f64,
    y: &[f64],
    k1: &[f64],
    h: f64,
) -> Result<Step, StageFailure> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(k1.to_vec());
    let mut last = None;
    for stage in 1..7 {
        let y_stage: Vec<f64> = (0..n)
            .map(|i| {
                let incr: f64 = (0..stage).map(|j| A[stage][j] * k[j][i]).sum();
                y[i] + h * incr
            })
            .collect();
        let eval = evaluate(instance, s + C[stage] * h, &y_stage)?;
        k.push(eval.dsz.clone());
        if stage == 6 {
            last = Some((y_stage, eval));
        }
    }
    let (y_new, last) = last.expect("seven stages evaluated");

    let mut sum = 0.0;
    for i in 0..n {
        let err_i: f64 = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
        let scale = cfg.abs_tol + cfg.rel_tol * abs(y[i]).max(abs(y_new[i]));
        sum += (err_i / scale) * (err_i / scale);
    }
    let err = sqrt(sum / n as f64);
    if !err.is_finite() {
        return Err(StageFailure::NonFinite);
    }
    Ok(Step {
        y: y_new,
        err,
        last,
    })
}

/// Integrates the flow from `s0` (with `S^z_μ ≈ s0 J_μ / 2`) to `s_max`.
///
/// The run is declared singular at the first of: a sign change of `det(M)`
/// between accepted steps, rcond of the row-equilibrated `M` below
/// `rcond_floor`, or the step size collapsing below `h_min`. The location is
/// then narrowed by bisection to `bisect_tol`.
pub fn integrate(instance: &IsingInstance, cfg: &SolverConfig) -> Result<SolveOutcome, FlowError> {
    cfg.validate()?;
    let fields = instance.fields();
    let empty = FlowTrace::default();
    if fields.iter().all(|h| *h == 0.0) {
        return Ok(SolveOutcome::Degenerate {
            reason: Degeneracy::ZeroFields,
            trace: empty,
        });
    }
    if let Some(site) = fields.iter().position(|h| *h == 0.0) {
        return Ok(SolveOutcome::Degenerate {
            reason: Degeneracy::ZeroInitialPolarization { site },
            trace: empty,
        });
    }

    let mut s = cfg.s0;
    let mut y = initial_state(instance, cfg.s0);
    let mut current = match evaluate(instance, s, &y) {
        Ok(eval) => eval,
        Err(StageFailure::NonFinite) => return Err(FlowError::NonFinite { s }),
        Err(StageFailure::Rejected) => {
            return Ok(SolveOutcome::Singular {
                s_sing: s,
                bracket: (s, s),
                kind: SingularKind::IllConditioned,
                trace: empty,
            })
        }
    };
    let mut trace = FlowTrace::default();
    let mut det_sign = current.lu.det_sign();
    let state = FlowState { s, sz: y.clone() };
    let diag = diagnostics_from(instance, &state, Some(&current.lu));
    let start_rcond = diag.rcond;
    trace.samples.push(FlowSample {
        state,
        diagnostics: diag,
    });
    if start_rcond < cfg.rcond_floor {
        return Ok(SolveOutcome::Singular {
            s_sing: s,
            bracket: (s, s),
            kind: SingularKind::IllConditioned,
            trace,
        });
    }

    let mut h = (1e-2 * cfg.s0).min(cfg.s_max - cfg.s0);
    let mut steps = 0usize;
    while s < cfg.s_max {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(FlowError::StepLimit {
                steps: cfg.max_steps,
            });
        }
        let landing = s + h >= cfg.s_max;
        let h_try = if landing { cfg.s_max - s } else { h };

        let step = match dormand_prince_step(instance, cfg, s, &y, &current.dsz, h_try) {
            Ok(step) if step.err <= 1.0 => step,
            Ok(step) => {
                h = h_try * (SAFETY * powf(step.err, -0.2)).max(MIN_SHRINK);
                if h < cfg.h_min {
                    return Ok(collapse(s, h_try, trace));
                }
                continue;
            }
            Err(StageFailure::NonFinite) => return Err(FlowError::NonFinite { s }),
            Err(StageFailure::Rejected) => {
                h = h_try * 0.25;
                if h < cfg.h_min {
                    return Ok(collapse(s, h_try, trace));
                }
                continue;
            }
        };

        let s_new = if landing { cfg.s_max } else { s + h_try };
        let new_sign = step.last.lu.det_sign();
        let state = FlowState {
            s: s_new,
            sz: step.y.clone(),
        };
        let diag = diagnostics_from(instance, &state, Some(&step.last.lu));
        let rcond = diag.rcond;
        trace.samples.push(FlowSample {
            state,
            diagnostics: diag,
        });

        let kind = if new_sign != det_sign {
            Some(SingularKind::DetSignChange)
        } else if rcond < cfg.rcond_floor {
            Some(SingularKind::IllConditioned)
        } else {
            None
        };
        if let Some(kind) = kind {
            let (lo, hi) = bisect(instance, cfg, s, &y, &current.dsz, det_sign, s_new);
            return Ok(SolveOutcome::Singular {
                s_sing: 0.5 * (lo + hi),
                bracket: (lo, hi),
                kind,
                trace,
            });
        }

        let growth = if step.err == 0.0 {
            MAX_GROWTH
        } else {
            (SAFETY * powf(step.err, -0.2)).min(MAX_GROWTH)
        };
        h = h_try * growth;
        s = s_new;
        y = step.y;
        det_sign = new_sign;
        current = step.last;
    }

    match finalize(instance, &trace, cfg.decision_threshold)? {
        Rounding::Spins { spins, e0 } => Ok(SolveOutcome::Converged { spins, e0, trace }),
        Rounding::Ambiguous(reason) => Ok(SolveOutcome::Degenerate { reason, trace }),
    }
}

/// `S^z = s0 J / 2` relaxed onto the shell `S^z = A / (2√(1 + A²))` at `s0`.
///
/// The flow only transports the shell, it does not pull back onto it, so the
/// `O(s0²)` error of the small-`s` asymptote would otherwise persist.
fn initial_state(instance: &IsingInstance, s0: f64) -> Vec<f64> {
    let mut y: Vec<f64> = instance.fields().iter().map(|h| s0 * h / 2.0).collect();
    for _ in 0..100 {
        let state = FlowState { s: s0, sz: y };
        let next: Vec<f64> = drive(instance, &state)
            .into_iter()
            .map(on_shell_sz)
            .collect();
        let change = next
            .iter()
            .zip(&state.sz)
            .map(|(a, b)| abs(a - b))
            .fold(0.0, f64::max);
        y = next;
        if change <= 1e-17 {
            break;
        }
    }
    y
}

fn collapse(s: f64, h: f64, trace: FlowTrace) -> SolveOutcome {
    SolveOutcome::Singular {
        s_sing: s + 0.5 * h,
        bracket: (s, s + h),
        kind: SingularKind::StepCollapse,
        trace,
    }
}

/// Narrows `[s_a, s_b]` to the point where the flow stops being regular,
/// re-stepping from the accepted state at `s_a` each time.
fn bisect(
    instance: &IsingInstance,
    cfg: &SolverConfig,
    s_a: f64,
    y_a: &[f64],
    k1_a: &[f64],
    sign_a: i8,
    s_b: f64,
) -> (f64, f64) {
    let (mut lo, mut hi) = (s_a, s_b);
    while hi - lo > cfg.bisect_tol {
        let mid = 0.5 * (lo + hi);
        let regular = match dormand_prince_step(instance, cfg, s_a, y_a, k1_a, mid - s_a) {
            Ok(step) => {
                step.last.lu.det_sign() == sign_a && step.last.lu.rcond() >= cfg.rcond_floor
            }
            Err(_) => false,
        };
        if regular {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Result of rounding the final spins.
#[derive(Debug, Clone, PartialEq)]
pub enum Rounding {
    Spins { spins: SpinConfiguration, e0: f64 },
    Ambiguous(Degeneracy),
}

/// Rounds `S^z(s_max)` to `σ_μ = sign(S^z_μ)/2` and checks that `σ` solves
/// `σ_μ = sign(b_μ)/2`. Any `|S^z_μ|` below `threshold` makes the rounding
/// ambiguous.
pub fn finalize(
    instance: &IsingInstance,
    trace: &FlowTrace,
    threshold: f64,
) -> Result<Rounding, FlowError> {
    let last = trace.last().ok_or(FlowError::InvalidState)?;
    let sz = &last.state.sz;
    if sz.len() != instance.n() {
        return Err(FlowError::LengthMismatch {
            expected: instance.n(),
            found: sz.len(),
        });
    }
    if let Some((site, &v)) = sz.iter().enumerate().find(|(_, v)| abs(**v) < threshold) {
        return Ok(Rounding::Ambiguous(Degeneracy::AmbiguousRounding {
            site,
            sz: v,
        }));
    }
    let spins = SpinConfiguration::new(
        sz.iter()
            .map(|&v| Spin::from_sign(v).expect("nonzero after threshold"))
            .collect(),
    );
    if !is_one_flip_local_min(instance, &spins)? {
        let b = local_fields(instance, &spins)?;
        let site = b
            .values
            .iter()
            .zip(spins.spins())
            .position(|(f, s)| Spin::from_sign(*f).is_some_and(|p| p != *s))
            .unwrap_or(0);
        return Err(FlowError::FixedPointViolation { site });
    }
    let e0 = classical_energy(instance, &spins)?;
    Ok(Rounding::Spins { spins, e0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::model::on_shell_residual;
    use crate::ising::{brute_force_ground, Coupling};
    use alloc::vec;

    fn pair(j1: f64, j2: f64, j12: f64) -> IsingInstance {
        IsingInstance::new(
            2,
            1,
            vec![j1, j2],
            vec![Coupling {
                i: 0,
                j: 1,
                value: j12,
            }],
        )
        .unwrap()
    }

    fn trace_ending(sz: Vec<f64>) -> FlowTrace {
        let state = FlowState { s: 0.999, sz };
        FlowTrace {
            samples: vec![FlowSample {
                diagnostics: crate::flow::diagnostics(&pair(1.0, 1.0, 0.0), &state),
                state,
            }],
        }
    }

    #[test]
    fn single_spin_aligns() {
        let inst = IsingInstance::new(1, 1, vec![1.0], vec![]).unwrap();
        let out = integrate(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(out.status(), "converged");
        assert_eq!(out.spins().unwrap().values(), vec![0.5]);
        assert_eq!(out.e0(), Some(-0.5));
    }

    #[test]
    fn ferromagnetic_pair_converges() {
        let inst = pair(3.0, 3.0, 1.0);
        let out = integrate(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(out.spins().unwrap().values(), vec![0.5, 0.5]);
        assert_eq!(out.e0(), Some(-3.5));
        assert_eq!(out.e0(), Some(brute_force_ground(&inst).unwrap().energy));
    }

    #[test]
    fn trace_is_monotone_and_on_shell() {
        let inst = pair(3.0, 3.0, 1.0);
        let cfg = SolverConfig::default();
        let out = integrate(&inst, &cfg).unwrap();
        let trace = out.trace();
        assert_eq!(trace.samples[0].state.s, cfg.s0);
        assert_eq!(trace.last().unwrap().state.s, cfg.s_max);
        for w in trace.samples.windows(2) {
            assert!(w[1].state.s > w[0].state.s);
        }
        for sample in &trace.samples {
            assert!(on_shell_residual(&inst, &sample.state) <= 1e-6);
            for (&sz, &sx) in sample.state.sz.iter().zip(&sample.diagnostics.sx) {
                assert!((sx * sx + sz * sz - 0.25).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn start_signs_follow_fields() {
        let inst = pair(-0.9, 3.0, 1.0);
        let out = integrate(&inst, &SolverConfig::default()).unwrap();
        let start = &out.trace().samples[0].state.sz;
        assert!(start[0] < 0.0 && start[1] > 0.0);
    }

    #[test]
    fn frustrated_pair_is_singular_where_spin_crosses() {
        let inst = pair(-0.9, 3.0, 1.0);
        let cfg = SolverConfig::default();
        let out = integrate(&inst, &cfg).unwrap();
        let SolveOutcome::Singular {
            s_sing,
            bracket,
            kind,
            trace,
        } = &out
        else {
            panic!("expected singular, got {}", out.status());
        };
        assert_eq!(*kind, SingularKind::DetSignChange);
        assert!(bracket.1 - bracket.0 <= cfg.bisect_tol);
        assert!(bracket.0 <= *s_sing && *s_sing <= bracket.1);
        // the first spin passes through zero, which zeroes row 0 of M
        assert!((s_sing - 0.4077).abs() < 1e-3, "s_sing = {s_sing}");
        assert!(trace.last().unwrap().state.sz[0].abs() < 0.01);
    }

    #[test]
    fn zero_fields_are_degenerate() {
        let out = integrate(&pair(0.0, 0.0, 1.0), &SolverConfig::default()).unwrap();
        assert!(matches!(
            out,
            SolveOutcome::Degenerate {
                reason: Degeneracy::ZeroFields,
                ..
            }
        ));
        let out = integrate(&pair(0.0, 1.0, 1.0), &SolverConfig::default()).unwrap();
        assert!(matches!(
            out,
            SolveOutcome::Degenerate {
                reason: Degeneracy::ZeroInitialPolarization { site: 0 },
                ..
            }
        ));
    }

    #[test]
    fn tied_classical_minimum_is_ambiguous() {
        // b_2 = 2·(−½) + 1 = 0 at the classical minimum
        let out = integrate(&pair(-3.0, 1.0, 1.0), &SolverConfig::default()).unwrap();
        assert!(matches!(
            out,
            SolveOutcome::Degenerate {
                reason: Degeneracy::AmbiguousRounding { site: 1, .. },
                ..
            }
        ));
    }

    #[test]
    fn tighter_tolerance_agrees() {
        for inst in [
            pair(3.0, 3.0, 1.0),
            pair(2.0, -3.0, 1.0),
            pair(-3.0, -1.8, 1.0),
        ] {
            let loose = SolverConfig::default();
            let tight = SolverConfig {
                rel_tol: loose.rel_tol / 10.0,
                ..loose
            };
            let a = integrate(&inst, &loose).unwrap();
            let b = integrate(&inst, &tight).unwrap();
            assert!(a.is_converged() && b.is_converged());
            let ya = &a.trace().last().unwrap().state.sz;
            let yb = &b.trace().last().unwrap().state.sz;
            let diff = ya
                .iter()
                .zip(yb)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-5, "diff = {diff}");
        }
    }

    #[test]
    fn finalize_examples() {
        let ferro = pair(3.0, 3.0, 1.0);
        let r = finalize(&ferro, &trace_ending(vec![0.49, 0.49]), 0.05).unwrap();
        let Rounding::Spins { spins, e0 } = r else {
            panic!("ambiguous")
        };
        assert_eq!(spins.values(), vec![0.5, 0.5]);
        assert_eq!(e0, -3.5);

        let free = pair(1.0, -1.0, 0.0);
        let r = finalize(&free, &trace_ending(vec![0.49, -0.49]), 0.05).unwrap();
        assert_eq!(
            r,
            Rounding::Spins {
                spins: SpinConfiguration::from_values(&[0.5, -0.5]).unwrap(),
                e0: -1.0
            }
        );

        let r = finalize(&ferro, &trace_ending(vec![0.01, 0.49]), 0.05).unwrap();
        assert_eq!(
            r,
            Rounding::Ambiguous(Degeneracy::AmbiguousRounding { site: 0, sz: 0.01 })
        );
    }

    #[test]
    fn finalize_rejects_unstable_rounding() {
        let ferro = pair(3.0, 3.0, 1.0);
        assert_eq!(
            finalize(&ferro, &trace_ending(vec![0.49, -0.49]), 0.05),
            Err(FlowError::FixedPointViolation { site: 1 })
        );
        assert_eq!(
            finalize(&ferro, &FlowTrace::default(), 0.05),
            Err(FlowError::InvalidState)
        );
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolverConfig {
            s0: 0.5,
            s_max: 0.4,
            ..SolverConfig::default()
        };
        assert!(matches!(
            integrate(&pair(1.0, 1.0, 1.0), &cfg),
            Err(FlowError::InvalidConfig(_))
        ));
    }
}
