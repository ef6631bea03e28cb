//! Small dense Hermitian helpers on top of `nalgebra`.

use nalgebra::SymmetricEigen;

use crate::{CMat, CVec, C64};

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let eig = SymmetricEigen::new(hermitian_part(m));
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let n = m.nrows();
        let mut vectors = CMat::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (dst, &src) in order.iter().enumerate() {
            values.push(eig.eigenvalues[src]);
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("empty matrix")
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// Rebuilds `V f(Λ) Vᴴ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = f(v);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// `(M + Mᴴ) / 2`
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise deviation `|M_ij − conj(M_ji)|`.
pub fn max_asymmetry(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `vᴴ M v`
pub fn quad_form(v: &CVec, m: &CMat) -> C64 {
    v.dotc(&(m * v))
}

/// `a aᴴ`
pub fn outer(a: &CVec) -> CMat {
    a * a.adjoint()
}

/// Euclidean projection onto the PSD cone (negative eigenvalues clamped to zero).
pub fn project_psd(m: &CMat) -> CMat {
    HermitianEigen::new(m).reconstruct_with(|v| v.max(0.0))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn vec_is_finite(v: &CVec) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Real part of `tr(A B)` for Hermitian `A`, `B`.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_two_by_two() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)],
        );
        let eig = HermitianEigen::new(&m);
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
        let back = eig.reconstruct_with(|v| v);
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn psd_projection_clamps() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(-1.0, 0.0), C64::new(2.0, 0.0)]));
        let p = project_psd(&m);
        assert!((p[(0, 0)].re).abs() < 1e-12);
        assert!((p[(1, 1)].re - 2.0).abs() < 1e-12);
    }
}
