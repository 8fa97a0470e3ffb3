//! Two-spin scans, seeded multiqubit sweeps and the mean-field versus exact
//! comparison.

use std::fmt::Write as _;

use mfanneal_core::{
    brute_force_ground, derive_seed, gap_scan, generate_instance, integrate, magnetization_trace,
    Coupling, CouplingDistribution, ExactError, FlowError, IsingError, IsingInstance, SolveOutcome,
    SolverConfig, ZRule, DEFAULT_GAP_GRID,
};
use rayon::prelude::*;
use serde::Serialize;

pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self, HarnessError> {
        let r = Self { min, max, steps };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.steps < 2 || !self.min.is_finite() || !self.max.is_finite() || self.min >= self.max
        {
            return Err(HarnessError::Config(format!(
                "grid {}:{}:{} needs min < max and at least 2 steps",
                self.min, self.max, self.steps
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        // weighted form keeps symmetric grids exactly symmetric
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                let k = k as f64;
                (self.min * (last - k) + self.max * k) / last
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordOutcome {
    Converged,
    Singular,
    Degenerate,
    /// The solver returned an error (non-finite state, step limit, rounding
    /// that is not a fixed point).
    Failed,
}

impl RecordOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordOutcome::Converged => "converged",
            RecordOutcome::Singular => "singular",
            RecordOutcome::Degenerate => "degenerate",
            RecordOutcome::Failed => "failed",
        }
    }

    fn of(result: &Result<SolveOutcome, FlowError>) -> Self {
        match result {
            Ok(SolveOutcome::Converged { .. }) => RecordOutcome::Converged,
            Ok(SolveOutcome::Singular { .. }) => RecordOutcome::Singular,
            Ok(SolveOutcome::Degenerate { .. }) => RecordOutcome::Degenerate,
            Err(_) => RecordOutcome::Failed,
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn pair_instance(j1: f64, j2: f64, j12: f64, z: usize) -> Result<IsingInstance, IsingError> {
    IsingInstance::new(
        2,
        z,
        vec![j1, j2],
        vec![Coupling {
            i: 0,
            j: 1,
            value: j12,
        }],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan2Config {
    pub j12: f64,
    pub j1_range: GridRange,
    pub j2_range: GridRange,
    pub z: usize,
    pub solver: SolverConfig,
}

impl Default for Scan2Config {
    fn default() -> Self {
        let range = GridRange {
            min: -3.0,
            max: 3.0,
            steps: 7,
        };
        Self {
            j12: 1.0,
            j1_range: range,
            j2_range: range,
            z: 1,
            solver: SolverConfig::default(),
        }
    }
}

impl Scan2Config {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.j1_range.validate()?;
        self.j2_range.validate()?;
        if !self.j12.is_finite() || self.z == 0 {
            return Err(HarnessError::Config("need finite j12 and z >= 1".into()));
        }
        self.solver.validate()?;
        Ok(())
    }

    /// Grid points, `j1` outer and `j2` inner.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let j2s = self.j2_range.values();
        self.j1_range
            .values()
            .into_iter()
            .flat_map(|j1| j2s.iter().map(move |&j2| (j1, j2)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan2Cell {
    pub j1: f64,
    pub j2: f64,
    pub outcome: RecordOutcome,
    pub s_sing: Option<f64>,
    pub e0_mf: Option<f64>,
    pub e0_exact: f64,
    /// Only for converged cells.
    pub mf_matches_exact: Option<bool>,
}

pub fn run_two_spin_scan(config: &Scan2Config) -> Result<Vec<Scan2Cell>, HarnessError> {
    config.validate()?;
    config
        .cells()
        .into_par_iter()
        .map(|(j1, j2)| {
            let inst = pair_instance(j1, j2, config.j12, config.z)?;
            let ground = brute_force_ground(&inst)?;
            let result = integrate(&inst, &config.solver);
            let outcome = RecordOutcome::of(&result);
            let (s_sing, e0_mf, matches) = match &result {
                Ok(out) => (
                    out.s_sing(),
                    out.e0(),
                    out.spins().map(|s| ground.contains(s)),
                ),
                Err(_) => (None, None, None),
            };
            Ok(Scan2Cell {
                j1,
                j2,
                outcome,
                s_sing,
                e0_mf,
                e0_exact: ground.energy,
                mf_matches_exact: matches,
            })
        })
        .collect()
}

pub fn scan2_csv(cells: &[Scan2Cell]) -> String {
    let mut out = String::from("j1,j2,outcome,s_sing,e0_mf,e0_exact,mf_matches_exact\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.j1,
            c.j2,
            c.outcome.as_str(),
            opt(c.s_sing),
            opt(c.e0_mf),
            c.e0_exact,
            opt_bool(c.mf_matches_exact)
        );
    }
    out
}

/// Exact minimum gap of one two-spin cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCell {
    pub j1: f64,
    pub j2: f64,
    pub min_gap: f64,
    pub s_gap: f64,
}

pub fn two_spin_gaps(config: &Scan2Config, grid_size: usize) -> Result<Vec<GapCell>, HarnessError> {
    config.validate()?;
    config
        .cells()
        .into_par_iter()
        .map(|(j1, j2)| {
            let inst = pair_instance(j1, j2, config.j12, config.z)?;
            let scan = gap_scan(&inst, grid_size)?;
            Ok(GapCell {
                j1,
                j2,
                min_gap: scan.min_gap,
                s_gap: scan.s_gap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub samples_per_n: usize,
    pub master_seed: u64,
    pub dist: CouplingDistribution,
    pub z_rule: ZRule,
    pub solver: SolverConfig,
    /// Largest `n` cross-checked against the exhaustive oracle.
    pub oracle_limit: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_list: vec![4, 8, 16, 32, 64, 128, 256],
            samples_per_n: 200,
            master_seed: 0,
            dist: CouplingDistribution::default(),
            z_rule: ZRule::default(),
            solver: SolverConfig::default(),
            oracle_limit: 16,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n: usize,
    pub sample_index: usize,
    pub derived_seed: u64,
    pub outcome: RecordOutcome,
    pub s_sing: Option<f64>,
    pub e0_mf: Option<f64>,
    pub matches_bruteforce: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessPoint {
    pub n: usize,
    pub total: usize,
    pub converged: usize,
    pub singular: usize,
    pub degenerate: usize,
    pub failed: usize,
}

impl SuccessPoint {
    pub fn success_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.converged as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuccessCurve {
    pub points: Vec<SuccessPoint>,
}

impl SuccessCurve {
    pub fn rate(&self, n: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.n == n)
            .map(SuccessPoint::success_rate)
    }
}

/// Counts of `s_sing` in [`HISTOGRAM_BINS`] uniform bins over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityHistogram {
    pub n: usize,
    pub counts: Vec<usize>,
}

impl SingularityHistogram {
    fn new(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; HISTOGRAM_BINS],
        }
    }

    fn add(&mut self, s: f64) {
        let bin = ((s * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn bin_edges(bin: usize) -> (f64, f64) {
        let w = HISTOGRAM_BINS as f64;
        (bin as f64 / w, (bin + 1) as f64 / w)
    }

    /// Fraction of the mass in bins lying entirely below `s`.
    pub fn fraction_below(&self, s: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let below: usize = (0..HISTOGRAM_BINS)
            .filter(|&b| Self::bin_edges(b).1 <= s + 1e-12)
            .map(|b| self.counts[b])
            .sum();
        below as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Sorted by `(n, sample_index)` in `n_list` order.
    pub records: Vec<SweepRecord>,
    pub curve: SuccessCurve,
    pub histograms: Vec<SingularityHistogram>,
}

fn solve_sample(config: &SweepConfig, n: usize, sample_index: usize) -> SweepRecord {
    let derived_seed = derive_seed(config.master_seed, n, sample_index);
    let base = SweepRecord {
        n,
        sample_index,
        derived_seed,
        outcome: RecordOutcome::Failed,
        s_sing: None,
        e0_mf: None,
        matches_bruteforce: None,
    };
    let Ok(inst) = generate_instance(n, derived_seed, config.dist, config.z_rule) else {
        return base;
    };
    let result = integrate(&inst, &config.solver);
    let outcome = RecordOutcome::of(&result);
    let Ok(out) = result else {
        return base;
    };
    let matches_bruteforce = match out.spins() {
        Some(spins) if n <= config.oracle_limit => {
            brute_force_ground(&inst).ok().map(|g| g.contains(spins))
        }
        _ => None,
    };
    SweepRecord {
        outcome,
        s_sing: out.s_sing(),
        e0_mf: out.e0(),
        matches_bruteforce,
        ..base
    }
}

pub fn run_multiqubit_sweep(config: &SweepConfig) -> Result<SweepReport, HarnessError> {
    if config.samples_per_n == 0 || config.n_list.is_empty() || config.n_list.contains(&0) {
        return Err(HarnessError::Config(
            "need at least one sample and a nonempty list of positive n".into(),
        ));
    }
    config.solver.validate()?;
    // reject bad distributions before spawning anything
    generate_instance(1, 0, config.dist, config.z_rule)?;

    let tasks: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.samples_per_n).map(move |k| (n, k)))
        .collect();
    let run = || -> Vec<SweepRecord> {
        tasks
            .par_iter()
            .map(|&(n, k)| solve_sample(config, n, k))
            .collect()
    };
    let records = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    };

    let mut curve = SuccessCurve::default();
    let mut histograms = Vec::new();
    for &n in &config.n_list {
        let mut point = SuccessPoint {
            n,
            total: 0,
            converged: 0,
            singular: 0,
            degenerate: 0,
            failed: 0,
        };
        let mut hist = SingularityHistogram::new(n);
        for r in records.iter().filter(|r| r.n == n) {
            point.total += 1;
            match r.outcome {
                RecordOutcome::Converged => point.converged += 1,
                RecordOutcome::Singular => {
                    point.singular += 1;
                    hist.add(r.s_sing.expect("singular records carry s_sing"));
                }
                RecordOutcome::Degenerate => point.degenerate += 1,
                RecordOutcome::Failed => point.failed += 1,
            }
        }
        curve.points.push(point);
        histograms.push(hist);
    }
    Ok(SweepReport {
        records,
        curve,
        histograms,
    })
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out =
        String::from("n,sample_index,derived_seed,outcome,s_sing,e0_mf,matches_bruteforce\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.sample_index,
            r.derived_seed,
            r.outcome.as_str(),
            opt(r.s_sing),
            opt(r.e0_mf),
            opt_bool(r.matches_bruteforce)
        );
    }
    out
}

pub fn curve_csv(curve: &SuccessCurve) -> String {
    let mut out = String::from("n,total,converged,singular,degenerate,failed,success_rate\n");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.n,
            p.total,
            p.converged,
            p.singular,
            p.degenerate,
            p.failed,
            p.success_rate()
        );
    }
    out
}

pub fn histogram_csv(histograms: &[SingularityHistogram]) -> String {
    let mut out = String::from("n,bin_low,bin_high,count\n");
    for h in histograms {
        for (bin, count) in h.counts.iter().enumerate() {
            let (lo, hi) = SingularityHistogram::bin_edges(bin);
            let _ = writeln!(out, "{},{},{},{}", h.n, lo, hi, count);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub n: usize,
    pub outcome: String,
    pub s_sing: Option<f64>,
    pub e0_mf: Option<f64>,
    pub e0_exact: f64,
    /// Mean-field configuration is one of the exact minimizers; `None` unless
    /// converged.
    pub energy_match: Option<bool>,
    pub min_gap: f64,
    pub s_gap: f64,
    /// Per site: `S^z_μ` changed sign along the mean-field trace.
    pub mf_sign_change: Vec<bool>,
    /// Per site: `⟨S^z_μ⟩` changed sign in the exact ground state for
    /// `0 < s < 1`.
    pub exact_sign_change: Vec<bool>,
    /// Exact grid points skipped for a degenerate ground level.
    pub exact_degenerate_points: usize,
}

pub fn mf_vs_exact_compare(
    instance: &IsingInstance,
    solver: &SolverConfig,
    grid_size: usize,
) -> Result<CompareReport, HarnessError> {
    let n = instance.n();
    let scan = gap_scan(instance, grid_size)?;
    let mag = magnetization_trace(instance, grid_size)?;
    let ground = brute_force_ground(instance)?;
    let out = integrate(instance, solver)?;

    let interior: Vec<_> = mag
        .iter()
        .filter(|m| m.s > 0.0 && m.s < 1.0 && !m.degenerate)
        .collect();
    let exact_sign_change = (0..n)
        .map(|mu| {
            let signs: Vec<bool> = interior
                .iter()
                .map(|m| m.m[mu])
                .filter(|v| *v != 0.0)
                .map(|v| v > 0.0)
                .collect();
            signs.windows(2).any(|w| w[0] != w[1])
        })
        .collect();
    let mf_sign_change = (0..n).map(|mu| out.trace().sign_changes(mu) > 0).collect();

    Ok(CompareReport {
        n,
        outcome: out.status().to_string(),
        s_sing: out.s_sing(),
        e0_mf: out.e0(),
        e0_exact: ground.energy,
        energy_match: out.spins().map(|s| ground.contains(s)),
        min_gap: scan.min_gap,
        s_gap: scan.s_gap,
        mf_sign_change,
        exact_sign_change,
        exact_degenerate_points: mag.iter().filter(|m| m.degenerate).count(),
    })
}

pub fn default_compare(instance: &IsingInstance) -> Result<CompareReport, HarnessError> {
    mf_vs_exact_compare(instance, &SolverConfig::default(), DEFAULT_GAP_GRID)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values_hit_endpoints() {
        let g = GridRange::new(-3.0, 3.0, 7).unwrap();
        assert_eq!(g.values(), vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert!(GridRange::new(1.0, 1.0, 3).is_err());
        assert!(GridRange::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn histogram_binning() {
        let mut h = SingularityHistogram::new(4);
        for s in [0.0, 0.019, 0.02, 0.5, 0.999, 1.0] {
            h.add(s);
        }
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[25], 1);
        assert_eq!(h.counts[49], 2);
        assert_eq!(h.total(), 6);
        assert!((h.fraction_below(0.3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scan_cells_order() {
        let cfg = Scan2Config {
            j1_range: GridRange::new(0.0, 1.0, 2).unwrap(),
            j2_range: GridRange::new(0.0, 2.0, 3).unwrap(),
            ..Scan2Config::default()
        };
        assert_eq!(
            cfg.cells(),
            vec![
                (0.0, 0.0),
                (0.0, 1.0),
                (0.0, 2.0),
                (1.0, 0.0),
                (1.0, 1.0),
                (1.0, 2.0)
            ]
        );
    }

    #[test]
    fn ferromagnetic_cell() {
        let cfg = Scan2Config {
            j1_range: GridRange::new(3.0, 4.0, 2).unwrap(),
            j2_range: GridRange::new(3.0, 4.0, 2).unwrap(),
            ..Scan2Config::default()
        };
        let cells = run_two_spin_scan(&cfg).unwrap();
        let c = &cells[0];
        assert_eq!((c.j1, c.j2), (3.0, 3.0));
        assert_eq!(c.outcome, RecordOutcome::Converged);
        assert_eq!(c.e0_mf, Some(-3.5));
        assert_eq!(c.mf_matches_exact, Some(true));
    }

    #[test]
    fn single_spin_compare() {
        let inst = IsingInstance::new(1, 1, vec![1.0], vec![]).unwrap();
        let rep = default_compare(&inst).unwrap();
        assert_eq!(rep.e0_mf, Some(-0.5));
        assert_eq!(rep.e0_exact, -0.5);
        assert_eq!(rep.energy_match, Some(true));
        assert_eq!(rep.exact_sign_change, vec![false]);
    }

    #[test]
    fn sweep_accounting() {
        let cfg = SweepConfig {
            n_list: vec![3, 5],
            samples_per_n: 12,
            master_seed: 9,
            ..SweepConfig::default()
        };
        let rep = run_multiqubit_sweep(&cfg).unwrap();
        assert_eq!(rep.records.len(), 24);
        for (p, h) in rep.curve.points.iter().zip(&rep.histograms) {
            assert_eq!(p.converged + p.singular + p.degenerate + p.failed, p.total);
            assert_eq!(h.total(), p.singular);
            assert!((0.0..=1.0).contains(&p.success_rate()));
        }
        for r in &rep.records {
            assert_eq!(r.derived_seed, derive_seed(9, r.n, r.sample_index));
            assert_eq!(
                r.matches_bruteforce.is_some(),
                r.outcome == RecordOutcome::Converged
            );
        }
    }
}
