//! Small dense complex linear-algebra helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    hermitian_eigen(m).0
}

/// Rebuilds `V diag(values) V†`.
pub fn from_eigen(values: &DVector<f64>, vectors: &CMatrix) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    scaled * vectors.adjoint()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, c| acc.max(c.norm()))
}

/// Spectral norm.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `|v⟩⟨v|`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Diagonal `e^{-iθn}` on a truncated single mode.
pub fn number_phase(dim: usize, theta: f64) -> CVector {
    CVector::from_iterator(
        dim,
        (0..dim).map(|n| Complex64::from_polar(1.0, -theta * n as f64)),
    )
}

/// `e^{-iθn̂} m e^{iθn̂}`, i.e. entry (n, m) picks up `e^{-i(n-m)θ}`.
pub fn rotate_number_phase(m: &CMatrix, theta: f64) -> CMatrix {
    let phase = number_phase(m.nrows(), theta);
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        phase[i] * m[(i, j)] * phase[j].conj()
    })
}

/// Leading `dim × dim` block.
pub fn project(m: &CMatrix, dim: usize) -> CMatrix {
    m.view((0, 0), (dim, dim)).into_owned()
}

pub fn real_diagonal(values: impl IntoIterator<Item = f64>) -> CMatrix {
    let v: Vec<Complex64> = values.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    CMatrix::from_diagonal(&CVector::from_vec(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_round_trip() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(3.0, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals[0] <= vals[1]);
        let back = from_eigen(&vals, &vecs);
        assert!((back - &m).norm() < 1e-12);
    }

    #[test]
    fn rotation_matches_conjugation() {
        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 1.0, j as f64));
        let theta = 0.7;
        let d = CMatrix::from_diagonal(&number_phase(3, theta));
        let direct = &d * &m * d.adjoint();
        assert!((direct - rotate_number_phase(&m, theta)).norm() < 1e-14);
    }
}
