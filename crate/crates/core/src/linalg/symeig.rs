//! Dense real symmetric eigenproblems: Householder reduction to tridiagonal
//! form followed by implicit QL on the tridiagonal.
//!
//! Only the two lowest eigenvalues and the lowest eigenvector are ever needed
//! downstream, so the reflectors are kept and the ground vector is obtained
//! by inverse iteration on the tridiagonal matrix and back-transformation.
//! That avoids accumulating the full orthogonal factor.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{abs, copysign, hypot, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenError {
    /// QL iteration did not converge for the eigenvalue with this index.
    NoConvergence { index: usize },
    /// Need a matrix of dimension at least two for a lowest pair.
    TooSmall,
}

impl fmt::Display for EigenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoConvergence { index } => {
                write!(f, "QL iteration failed to converge for eigenvalue {index}")
            }
            Self::TooSmall => write!(f, "matrix dimension must be at least 2"),
        }
    }
}

impl core::error::Error for EigenError {}

struct Tridiagonal {
    diag: Vec<f64>,
    // off[k] couples k and k+1
    off: Vec<f64>,
    // reflector k acts on indices k+1.. ; `None` when no reflection was needed
    reflectors: Vec<Option<Vec<f64>>>,
}

fn tridiagonalize(n: usize, mut a: Vec<f64>) -> Tridiagonal {
    assert_eq!(a.len(), n * n, "matrix buffer does not match dimension");
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(1));

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let x: Vec<f64> = (k + 1..n).map(|i| a[i * n + k]).collect();
        let tail: f64 = x[1..].iter().map(|v| v * v).sum();
        diag[k] = a[k * n + k];
        if tail == 0.0 {
            off[k] = x[0];
            reflectors.push(None);
            continue;
        }
        let norm = sqrt(x[0] * x[0] + tail);
        let alpha = -copysign(norm, x[0]);
        let mut v = x;
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        let beta = 2.0 / vtv;

        // p = beta * A22 v
        let mut p = vec![0.0; m];
        for (r, pr) in p.iter_mut().enumerate() {
            let row = &a[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            *pr = beta * row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        let kappa = 0.5 * beta * v.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for r in 0..m {
            let row = &mut a[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            let (vr, wr) = (v[r], w[r]);
            for ((x, vc), wc) in row.iter_mut().zip(&v).zip(&w) {
                *x -= vr * wc + wr * vc;
            }
        }
        off[k] = alpha;
        reflectors.push(Some(v));
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1) * n + n - 1];
    }
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix, unsorted.
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, EigenError> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..off.len()].copy_from_slice(off);
    // absolute floor so blocks with a vanishing diagonal still deflate
    let norm = (0..n)
        .map(|i| abs(d[i]) + abs(e[i]) + if i > 0 { abs(e[i - 1]) } else { 0.0 })
        .fold(0.0, f64::max);
    let floor = f64::EPSILON * norm;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = abs(d[m]) + abs(d[m + 1]);
                if abs(e[m]) <= f64::EPSILON * dd || abs(e[m]) <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(EigenError::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// All eigenvalues in ascending order.
pub fn symmetric_eigenvalues(n: usize, a: Vec<f64>) -> Result<Vec<f64>, EigenError> {
    let t = tridiagonalize(n, a);
    let mut values = tridiagonal_eigenvalues(&t.diag, &t.off)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// The two lowest eigenvalues and a unit eigenvector for the lowest.
#[derive(Debug, Clone, PartialEq)]
pub struct LowestPair {
    pub e0: f64,
    pub e1: f64,
    pub ground: Vec<f64>,
}

pub fn lowest_pair(n: usize, a: Vec<f64>) -> Result<LowestPair, EigenError> {
    if n < 2 {
        return Err(EigenError::TooSmall);
    }
    let t = tridiagonalize(n, a);
    let mut values = tridiagonal_eigenvalues(&t.diag, &t.off)?;
    values.sort_by(f64::total_cmp);
    let (e0, e1) = (values[0], values[1]);

    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(abs(*v)))
        .max(f64::MIN_POSITIVE);
    let mut y = inverse_iteration(&t.diag, &t.off, e0, scale);

    for (k, reflector) in t.reflectors.iter().enumerate().rev() {
        if let Some(v) = reflector {
            let seg = &mut y[k + 1..];
            let vtv: f64 = v.iter().map(|t| t * t).sum();
            let dot: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vtv;
            seg.iter_mut().zip(v).for_each(|(x, vi)| *x -= f * vi);
        }
    }
    normalize(&mut y);
    // fixed sign convention: largest component positive
    let (_, big) = y.iter().fold(
        (0.0, 0.0),
        |(m, s), &v| if abs(v) > m { (abs(v), v) } else { (m, s) },
    );
    if big < 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(LowestPair { e0, e1, ground: y })
}

fn normalize(v: &mut [f64]) {
    let norm = sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Eigenvector of the tridiagonal matrix for the eigenvalue `lambda`.
fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, scale: f64) -> Vec<f64> {
    let n = diag.len();
    let shift = lambda - 1e-12 * scale;
    let tiny = f64::EPSILON * scale;

    // Gaussian elimination with partial pivoting on T - shift I, producing
    // an upper triangle with two superdiagonals.
    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut up1: Vec<f64> = off.to_vec();
    up1.push(0.0);
    let mut up2 = vec![0.0; n];
    let mut low: Vec<f64> = off.to_vec();
    let mut mult = vec![0.0; n];
    let mut swapped = vec![false; n];
    for k in 0..n.saturating_sub(1) {
        if abs(low[k]) > abs(d[k]) {
            // swap rows k and k+1
            swapped[k] = true;
            let (dk, u1k, u2k) = (d[k], up1[k], up2[k]);
            d[k] = low[k];
            up1[k] = d[k + 1];
            up2[k] = up1[k + 1];
            low[k] = dk;
            d[k + 1] = u1k;
            up1[k + 1] = u2k;
        }
        if d[k] == 0.0 {
            d[k] = tiny;
        }
        let m = low[k] / d[k];
        mult[k] = m;
        d[k + 1] -= m * up1[k];
        up1[k + 1] -= m * up2[k];
    }
    if n > 0 && d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }

    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i * 7919 % 97) as f64 / 97.0))
        .collect();
    for _ in 0..3 {
        // forward elimination
        for k in 0..n.saturating_sub(1) {
            if swapped[k] {
                x.swap(k, k + 1);
            }
            x[k + 1] -= mult[k] * x[k];
        }
        // back substitution
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= up1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= up2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        normalize(&mut x);
    }
    x
}
