//! Dense linear algebra on row-major `f64` buffers.

mod lu;
mod symeig;

pub use lu::{DenseLu, SingularMatrix};
pub use symeig::{lowest_pair, symmetric_eigenvalues, EigenError, LowestPair};

/// Divides every row by its largest absolute entry. Zero rows are left as
/// they are. The scalers are positive, so the sign of the determinant is
/// unchanged.
pub fn equilibrate_rows(n: usize, a: &mut [f64], rhs: Option<&mut [f64]>) {
    let mut scales = alloc::vec![1.0; n];
    for (row, scale) in a.chunks_exact_mut(n).zip(scales.iter_mut()) {
        let m = row.iter().fold(0.0f64, |m, v| m.max(crate::math::abs(*v)));
        if m > 0.0 {
            *scale = 1.0 / m;
            row.iter_mut().for_each(|v| *v *= *scale);
        }
    }
    if let Some(b) = rhs {
        b.iter_mut().zip(&scales).for_each(|(v, s)| *v *= s);
    }
}
