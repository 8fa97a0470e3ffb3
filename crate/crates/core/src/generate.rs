//! Seeded random instances.

use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ising::{Coupling, IsingError, IsingInstance};

/// Distribution of every coupling and field value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingDistribution {
    /// Uniform on the closed interval `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

impl Default for CouplingDistribution {
    fn default() -> Self {
        CouplingDistribution::Uniform { lo: -1.0, hi: 1.0 }
    }
}

/// How the coordination number follows from the site count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZRule {
    /// `z = n − 1`, at least 1.
    #[default]
    FullyConnected,
    Fixed(usize),
}

impl ZRule {
    pub fn coordination(self, n: usize) -> usize {
        match self {
            ZRule::FullyConnected => n.saturating_sub(1).max(1),
            ZRule::Fixed(z) => z,
        }
    }
}

/// Fully connected instance. Fields are drawn first, then couplings in
/// lexicographic `(i, j)` order with `i < j`.
pub fn generate_instance(
    n: usize,
    seed: u64,
    dist: CouplingDistribution,
    z_rule: ZRule,
) -> Result<IsingInstance, IsingError> {
    if n == 0 {
        return Err(IsingError::NoSites);
    }
    let CouplingDistribution::Uniform { lo, hi } = dist;
    let uniform = Uniform::new_inclusive(lo, hi)
        .ok()
        .filter(|_| lo.is_finite() && hi.is_finite())
        .ok_or(IsingError::InvalidDistribution { lo, hi })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<f64> = (0..n).map(|_| uniform.sample(&mut rng)).collect();
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            couplings.push(Coupling {
                i,
                j,
                value: uniform.sample(&mut rng),
            });
        }
    }
    IsingInstance::new(n, z_rule.coordination(n), fields, couplings)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-sample seed, a pure function of `(master_seed, n, sample_index)`.
pub fn derive_seed(master_seed: u64, n: usize, sample_index: usize) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ n as u64);
    splitmix64(b ^ (sample_index as u64).rotate_left(32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = generate_instance(7, 42, Default::default(), ZRule::default()).unwrap();
        let b = generate_instance(7, 42, Default::default(), ZRule::default()).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(7, 43, Default::default(), ZRule::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_bounds_and_coordination() {
        let inst = generate_instance(50, 3, Default::default(), ZRule::default()).unwrap();
        assert_eq!(inst.z(), 49);
        assert_eq!(inst.couplings().len(), 50 * 49 / 2);
        assert!(inst.fields().iter().all(|h| h.abs() <= 1.0));
        assert!(inst.couplings().iter().all(|c| c.value.abs() <= 1.0));
    }

    #[test]
    fn single_site() {
        let inst = generate_instance(1, 9, Default::default(), ZRule::default()).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.z(), 1);
        assert!(inst.couplings().is_empty());
    }

    #[test]
    fn custom_bounds() {
        let dist = CouplingDistribution::Uniform { lo: 0.5, hi: 2.0 };
        let inst = generate_instance(6, 1, dist, ZRule::Fixed(5)).unwrap();
        assert!(inst.fields().iter().all(|h| (0.5..=2.0).contains(h)));
    }

    #[test]
    fn bad_bounds() {
        for (lo, hi) in [(1.0, -1.0), (f64::NAN, 1.0), (0.0, f64::INFINITY)] {
            let dist = CouplingDistribution::Uniform { lo, hi };
            assert!(matches!(
                generate_instance(3, 1, dist, ZRule::default()),
                Err(IsingError::InvalidDistribution { .. })
            ));
        }
    }

    #[test]
    fn seeds_differ_across_keys() {
        let s = derive_seed(1, 4, 0);
        assert_eq!(s, derive_seed(1, 4, 0));
        assert_ne!(s, derive_seed(1, 4, 1));
        assert_ne!(s, derive_seed(1, 8, 0));
        assert_ne!(s, derive_seed(2, 4, 0));
    }
}
