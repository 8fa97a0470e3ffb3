//! Ising problem instances and the classical side of the problem.
//!
//! The classical energy of a configuration `σ ∈ {−½, +½}^n` is
//!
//! ```text
//! E(σ) = −(1/Z) Σ_{ν≠μ} J_{νμ} σ_μ σ_ν − Σ_μ J_μ σ_μ
//! ```
//!
//! where the double sum runs over ordered pairs. Couplings are stored once per
//! unordered pair `(i, j)` with `i < j`, so every stored pair contributes
//! `−2 J_{ij} σ_i σ_j / Z`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Largest instance [`brute_force_ground`] will enumerate.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum IsingError {
    /// An instance needs at least one site.
    NoSites,
    ZeroCoordination,
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    SelfCoupling {
        site: usize,
    },
    NonCanonicalPair {
        i: usize,
        j: usize,
    },
    DuplicatePair {
        i: usize,
        j: usize,
    },
    SiteOutOfRange {
        site: usize,
        n: usize,
    },
    CoordinationExceeded {
        site: usize,
        count: usize,
        z: usize,
    },
    NonFinite {
        what: &'static str,
        index: usize,
    },
    InvalidSpin {
        index: usize,
        value: f64,
    },
    TooLarge {
        n: usize,
        limit: usize,
    },
    InvalidDistribution {
        lo: f64,
        hi: f64,
    },
}

impl fmt::Display for IsingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoSites => write!(f, "instance has no sites"),
            Self::ZeroCoordination => write!(f, "coordination number z must be at least 1"),
            Self::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} per-site values, found {found}")
            }
            Self::SelfCoupling { site } => write!(f, "self-coupling on site {site}"),
            Self::NonCanonicalPair { i, j } => {
                write!(f, "coupling ({i}, {j}) is not canonical: i < j required")
            }
            Self::DuplicatePair { i, j } => write!(f, "coupling ({i}, {j}) given twice"),
            Self::SiteOutOfRange { site, n } => {
                write!(f, "site index {site} out of range for {n} sites")
            }
            Self::CoordinationExceeded { site, count, z } => write!(
                f,
                "site {site} has {count} nonzero couplings, more than z = {z}"
            ),
            Self::NonFinite { what, index } => write!(f, "non-finite {what} at index {index}"),
            Self::InvalidSpin { index, value } => {
                write!(f, "spin {index} is {value}, expected +0.5 or -0.5")
            }
            Self::TooLarge { n, limit } => write!(
                f,
                "instance with {n} sites exceeds the exhaustive limit of {limit}"
            ),
            Self::InvalidDistribution { lo, hi } => {
                write!(f, "invalid coupling distribution bounds [{lo}, {hi}]")
            }
        }
    }
}

impl core::error::Error for IsingError {}

/// One stored coupling `J_{ij}` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// A problem instance: `n` sites, coordination number `z`, symmetric couplings
/// and per-site fields.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    z: usize,
    fields: Vec<f64>,
    couplings: Vec<Coupling>,
    // row-major n×n symmetric copy with a zero diagonal
    dense: Vec<f64>,
}

impl IsingInstance {
    /// Validates and builds an instance. Couplings are kept in the order given.
    pub fn new(
        n: usize,
        z: usize,
        fields: Vec<f64>,
        couplings: Vec<Coupling>,
    ) -> Result<Self, IsingError> {
        if n == 0 {
            return Err(IsingError::NoSites);
        }
        if z == 0 {
            return Err(IsingError::ZeroCoordination);
        }
        if fields.len() != n {
            return Err(IsingError::LengthMismatch {
                expected: n,
                found: fields.len(),
            });
        }
        if let Some(index) = fields.iter().position(|v| !v.is_finite()) {
            return Err(IsingError::NonFinite {
                what: "field",
                index,
            });
        }

        let mut dense = vec![0.0; n * n];
        let mut present = vec![false; n * n];
        let mut degree = vec![0usize; n];
        for (index, c) in couplings.iter().enumerate() {
            if c.i == c.j {
                return Err(IsingError::SelfCoupling { site: c.i });
            }
            if c.i > c.j {
                return Err(IsingError::NonCanonicalPair { i: c.i, j: c.j });
            }
            if c.j >= n {
                return Err(IsingError::SiteOutOfRange { site: c.j, n });
            }
            if !c.value.is_finite() {
                return Err(IsingError::NonFinite {
                    what: "coupling",
                    index,
                });
            }
            if present[c.i * n + c.j] {
                return Err(IsingError::DuplicatePair { i: c.i, j: c.j });
            }
            present[c.i * n + c.j] = true;
            dense[c.i * n + c.j] = c.value;
            dense[c.j * n + c.i] = c.value;
            if c.value != 0.0 {
                degree[c.i] += 1;
                degree[c.j] += 1;
            }
        }
        if let Some((site, &count)) = degree.iter().enumerate().find(|(_, &d)| d > z) {
            return Err(IsingError::CoordinationExceeded { site, count, z });
        }

        Ok(Self {
            z,
            fields,
            couplings,
            dense,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.fields.len()
    }

    #[inline]
    pub fn z(&self) -> usize {
        self.z
    }

    /// Per-site fields `J_μ`.
    #[inline]
    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    #[inline]
    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// `J_{μν}` for any ordered pair; zero on the diagonal and for absent pairs.
    #[inline]
    pub fn coupling(&self, mu: usize, nu: usize) -> f64 {
        self.dense[mu * self.n() + nu]
    }

    /// Row `μ` of the symmetric coupling matrix.
    #[inline]
    pub fn coupling_row(&self, mu: usize) -> &[f64] {
        let n = self.n();
        &self.dense[mu * n..(mu + 1) * n]
    }

    /// Copy with every field negated. Used by the spin-flip symmetry checks.
    pub fn with_negated_fields(&self) -> Self {
        let mut out = self.clone();
        out.fields.iter_mut().for_each(|f| *f = -*f);
        out
    }

    /// `Σ_{i<j} J_{ij} x_i x_j` over stored pairs, in storage order.
    pub(crate) fn pair_sum(&self, x: impl Fn(usize) -> f64) -> f64 {
        self.couplings
            .iter()
            .map(|c| c.value * x(c.i) * x(c.j))
            .sum()
    }

    /// `Σ_μ J_μ x_μ`.
    pub(crate) fn field_sum(&self, x: impl Fn(usize) -> f64) -> f64 {
        self.fields
            .iter()
            .enumerate()
            .map(|(mu, &h)| h * x(mu))
            .sum()
    }

    /// Classical energy with the spin of site `μ` given by `sigma(μ)`.
    ///
    /// Every energy in the crate (brute force, Hamiltonian diagonal, the final
    /// mean-field energy) goes through this so that they agree bit for bit.
    pub(crate) fn energy_with(&self, sigma: impl Fn(usize) -> f64) -> f64 {
        let z = self.z as f64;
        -(2.0 / z) * self.pair_sum(&sigma) - self.field_sum(&sigma)
    }

    /// `b_μ = (2/Z) Σ_ν J_{μν} x_ν + J_μ`.
    pub(crate) fn local_field_at(&self, mu: usize, x: &[f64]) -> f64 {
        let row = self.coupling_row(mu);
        let coupled: f64 = row.iter().zip(x).map(|(j, v)| j * v).sum();
        (2.0 / self.z as f64) * coupled + self.fields[mu]
    }
}

/// A classical spin, `S^z = ±½`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }

    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    /// Sign rounding; zero maps to `None`.
    pub fn from_sign(x: f64) -> Option<Self> {
        if x > 0.0 {
            Some(Spin::Up)
        } else if x < 0.0 {
            Some(Spin::Down)
        } else {
            None
        }
    }
}

/// A classical assignment of `±½` to every site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<Spin>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<Spin>) -> Self {
        Self { spins }
    }

    /// Accepts only values that are exactly `+0.5` or `-0.5`.
    pub fn from_values(values: &[f64]) -> Result<Self, IsingError> {
        values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if value == 0.5 {
                    Ok(Spin::Up)
                } else if value == -0.5 {
                    Ok(Spin::Down)
                } else {
                    Err(IsingError::InvalidSpin { index, value })
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    /// Configuration encoded by the bits of `index`: bit `k` clear means site
    /// `k` is up. This is also the basis order of the exact Hamiltonian.
    pub fn from_index(n: usize, index: usize) -> Self {
        Self::new(
            (0..n)
                .map(|k| {
                    if (index >> k) & 1 == 0 {
                        Spin::Up
                    } else {
                        Spin::Down
                    }
                })
                .collect(),
        )
    }

    /// Inverse of [`SpinConfiguration::from_index`].
    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Spin::Down)
            .map(|(k, _)| 1usize << k)
            .sum()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    #[inline]
    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    #[inline]
    pub fn value(&self, mu: usize) -> f64 {
        self.spins[mu].value()
    }

    pub fn values(&self) -> Vec<f64> {
        self.spins.iter().map(|s| s.value()).collect()
    }

    pub fn flipped_at(&self, mu: usize) -> Self {
        let mut out = self.clone();
        out.spins[mu] = out.spins[mu].flipped();
        out
    }

    /// Global spin flip.
    pub fn negated(&self) -> Self {
        Self::new(self.spins.iter().map(|s| s.flipped()).collect())
    }
}

/// Effective per-site fields `b_μ` on a classical configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFields {
    pub values: Vec<f64>,
}

/// Minimum classical energy and every configuration that attains it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundResult {
    pub energy: f64,
    /// In enumeration (basis index) order.
    pub minimizers: Vec<SpinConfiguration>,
}

impl GroundResult {
    pub fn contains(&self, config: &SpinConfiguration) -> bool {
        self.minimizers.iter().any(|m| m == config)
    }

    pub fn is_degenerate(&self) -> bool {
        self.minimizers.len() > 1
    }
}

fn check_len(instance: &IsingInstance, config: &SpinConfiguration) -> Result<(), IsingError> {
    if config.len() != instance.n() {
        return Err(IsingError::LengthMismatch {
            expected: instance.n(),
            found: config.len(),
        });
    }
    Ok(())
}

pub fn classical_energy(
    instance: &IsingInstance,
    config: &SpinConfiguration,
) -> Result<f64, IsingError> {
    check_len(instance, config)?;
    Ok(instance.energy_with(|mu| config.value(mu)))
}

pub fn local_fields(
    instance: &IsingInstance,
    config: &SpinConfiguration,
) -> Result<LocalFields, IsingError> {
    check_len(instance, config)?;
    let sigma = config.values();
    Ok(LocalFields {
        values: (0..instance.n())
            .map(|mu| instance.local_field_at(mu, &sigma))
            .collect(),
    })
}

/// True when every spin points along its nonzero local field, i.e. no single
/// flip strictly lowers the energy (the flip gain is `2 σ_μ b_μ`).
pub fn is_one_flip_local_min(
    instance: &IsingInstance,
    config: &SpinConfiguration,
) -> Result<bool, IsingError> {
    let b = local_fields(instance, config)?;
    Ok(b.values
        .iter()
        .zip(config.spins())
        .all(|(&field, spin)| match Spin::from_sign(field) {
            Some(preferred) => preferred == *spin,
            None => true,
        }))
}

pub fn brute_force_ground(instance: &IsingInstance) -> Result<GroundResult, IsingError> {
    brute_force_ground_with_limit(instance, DEFAULT_EXHAUSTIVE_LIMIT)
}

/// Exhaustive minimum over all `2^n` configurations. Ties are exact
/// floating-point equalities of the computed energies.
pub fn brute_force_ground_with_limit(
    instance: &IsingInstance,
    limit: usize,
) -> Result<GroundResult, IsingError> {
    let n = instance.n();
    if n > limit || n >= usize::BITS as usize {
        return Err(IsingError::TooLarge { n, limit });
    }
    let mut best = f64::INFINITY;
    let mut winners: Vec<usize> = Vec::new();
    for index in 0..(1usize << n) {
        let e = instance.energy_with(|k| basis_spin(index, k));
        if e < best {
            best = e;
            winners.clear();
            winners.push(index);
        } else if e == best {
            winners.push(index);
        }
    }
    Ok(GroundResult {
        energy: best,
        minimizers: winners
            .into_iter()
            .map(|index| SpinConfiguration::from_index(n, index))
            .collect(),
    })
}

/// `S^z` of site `k` in basis state `index`.
#[inline]
pub(crate) fn basis_spin(index: usize, k: usize) -> f64 {
    if (index >> k) & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}
