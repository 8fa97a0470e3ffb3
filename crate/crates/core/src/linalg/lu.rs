use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::abs;

/// A zero pivot was met while factoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix {
    pub column: usize,
}

impl fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "matrix is exactly singular (zero pivot in column {})",
            self.column
        )
    }
}

impl core::error::Error for SingularMatrix {}

/// `P A = L U` with partial pivoting. `L` is unit lower triangular and shares
/// storage with `U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    // row i of P A is row perm[i] of A
    perm: Vec<usize>,
    odd_swaps: bool,
    norm1: f64,
}

impl DenseLu {
    /// Factors the row-major `n × n` matrix `a`.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Self, SingularMatrix> {
        assert_eq!(a.len(), n * n, "matrix buffer does not match dimension");
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| abs(a[i * n + j])).sum::<f64>())
            .fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd_swaps = false;

        for k in 0..n {
            let (p, pivot_abs) =
                (k..n)
                    .map(|i| (i, abs(a[i * n + k])))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_abs == 0.0 || !pivot_abs.is_finite() {
                return Err(SingularMatrix { column: k });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd_swaps = !odd_swaps;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                a[i * n + k] = factor;
                if factor != 0.0 {
                    let (upper, lower) = a.split_at_mut(i * n);
                    let row_k = &upper[k * n + k + 1..k * n + n];
                    let row_i = &mut lower[k + 1..n];
                    for (x, u) in row_i.iter_mut().zip(row_k) {
                        *x -= factor * u;
                    }
                }
            }
        }

        Ok(Self {
            n,
            lu: a,
            perm,
            odd_swaps,
            norm1,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Sign of the determinant, `+1` or `-1` (a factored matrix is never
    /// exactly singular).
    pub fn det_sign(&self) -> i8 {
        let negatives = (0..self.n)
            .filter(|&i| self.lu[i * self.n + i] < 0.0)
            .count();
        if (negatives % 2 == 1) ^ self.odd_swaps {
            -1
        } else {
            1
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&y);
    }

    /// Solves `Aᵀ x = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut w = b.to_vec();
        // Uᵀ w = b
        for i in 0..n {
            let mut s = w[i];
            for k in 0..i {
                s -= self.lu[k * n + i] * w[k];
            }
            w[i] = s / self.lu[i * n + i];
        }
        // Lᵀ v = w
        for i in (0..n).rev() {
            let mut s = w[i];
            for k in i + 1..n {
                s -= self.lu[k * n + i] * w[k];
            }
            w[i] = s;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = w[i];
        }
    }

    /// Reciprocal 1-norm condition number, with `‖A⁻¹‖₁` estimated by the
    /// Hager–Higham power iteration (at most five sweeps plus the alternating
    /// test vector).
    pub fn rcond(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        if self.norm1 == 0.0 {
            return 0.0;
        }
        let inv_norm = self.inverse_norm1_estimate();
        if !inv_norm.is_finite() || inv_norm == 0.0 {
            return 0.0;
        }
        1.0 / (self.norm1 * inv_norm)
    }

    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let norm1 = |v: &[f64]| v.iter().map(|x| abs(*x)).sum::<f64>();

        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            estimate = norm1(&y);
            let mut z: Vec<f64> = y
                .iter()
                .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            self.solve_transpose_in_place(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, abs(*v)))
                .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if iter > 0 && (zmax <= ztx || j == last_j) {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }

        // Higham's extra test vector guards against the iteration stalling.
        let mut alt: Vec<f64> = (0..n)
            .map(|i| {
                let mag = 1.0 + i as f64 / (n.max(2) - 1) as f64;
                if i % 2 == 0 {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        self.solve_in_place(&mut alt);
        let alt_est = 2.0 * norm1(&alt) / (3.0 * n as f64);
        estimate.max(alt_est)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn matmul_vec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    // Cofactor expansion; independent of elimination.
    fn det_cofactor(n: usize, a: &[f64]) -> f64 {
        if n == 1 {
            return a[0];
        }
        let mut det = 0.0;
        for c in 0..n {
            let minor: Vec<f64> = (1..n)
                .flat_map(|i| (0..n).filter(move |&j| j != c).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j])
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * a[c] * det_cofactor(n - 1, &minor);
        }
        det
    }

    fn inverse_norm1_exact(n: usize, lu: &DenseLu) -> f64 {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                lu.solve_in_place(&mut e);
                e.iter().map(|v| v.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed;
        (0..n * n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn solves_and_signs() {
        for n in 1..7 {
            for seed in 0..20u64 {
                let a = pseudo_random(n, seed * 31 + n as u64);
                let lu = DenseLu::factor(n, a.clone()).unwrap();
                let x_true: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
                let mut b = matmul_vec(n, &a, &x_true);
                lu.solve_in_place(&mut b);
                for (got, want) in b.iter().zip(&x_true) {
                    assert_relative_eq!(got, want, epsilon = 1e-8);
                }
                let det = det_cofactor(n, &a);
                assert_eq!(lu.det_sign() as f64, det.signum(), "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn transpose_solve() {
        let n = 5;
        let a = pseudo_random(n, 77);
        let lu = DenseLu::factor(n, a.clone()).unwrap();
        let mut at = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                at[j * n + i] = a[i * n + j];
            }
        }
        let x_true = [0.3, -1.0, 2.0, 0.5, -0.25];
        let mut b = matmul_vec(n, &at, &x_true);
        lu.solve_transpose_in_place(&mut b);
        for (got, want) in b.iter().zip(&x_true) {
            assert_relative_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        // elimination gives an exact zero second pivot
        assert_eq!(
            DenseLu::factor(2, a).unwrap_err(),
            SingularMatrix { column: 1 }
        );
        assert!(DenseLu::factor(2, vec![0.0; 4]).is_err());
    }

    #[test]
    fn rcond_bounds_true_value() {
        for n in 2..8 {
            for seed in 0..10u64 {
                let a = pseudo_random(n, seed + 100 * n as u64);
                let lu = DenseLu::factor(n, a).unwrap();
                let exact = 1.0 / (lu.norm1 * inverse_norm1_exact(n, &lu));
                let est = lu.rcond();
                // the estimator underestimates ‖A⁻¹‖, so rcond is overestimated
                assert!(
                    est >= exact * (1.0 - 1e-12),
                    "n={n} est={est} exact={exact}"
                );
                assert!(est <= exact * 10.0, "n={n} est={est} exact={exact}");
            }
        }
    }

    #[test]
    fn rcond_of_identity_and_ill_conditioned() {
        let mut id = vec![0.0; 9];
        id[0] = 1.0;
        id[4] = 1.0;
        id[8] = 1.0;
        assert_relative_eq!(DenseLu::factor(3, id).unwrap().rcond(), 1.0);
        let a = vec![1.0, 1.0, 1.0, 1.0 + 1e-13];
        assert!(DenseLu::factor(2, a).unwrap().rcond() < 1e-12);
    }

    #[test]
    fn row_equilibration_keeps_det_sign() {
        for seed in 0..20u64 {
            let n = 4;
            let a = pseudo_random(n, seed + 999);
            let mut b = a.clone();
            crate::linalg::equilibrate_rows(n, &mut b, None);
            let s1 = DenseLu::factor(n, a).unwrap().det_sign();
            let s2 = DenseLu::factor(n, b).unwrap().det_sign();
            assert_eq!(s1, s2);
        }
    }
}
