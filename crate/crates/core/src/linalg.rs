//! Small dense linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// Relative singular-value threshold used for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-8;

/// Numerical rank: singular values below `RANK_RTOL * max(sigma_max, 1)` count as zero.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let cut = RANK_RTOL * smax.max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Orthonormalizes `vectors` by twice-applied modified Gram-Schmidt, dropping
/// directions whose residual norm falls below `tol`.
pub fn orthonormal_basis(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let n = w.norm();
        if n > tol {
            basis.push(w / n);
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of span(`vectors`) in R^dim.
pub fn orthogonal_complement(vectors: &[DVector<f64>], dim: usize, tol: f64) -> Vec<DVector<f64>> {
    let span = orthonormal_basis(vectors, tol);
    let r = span.len();
    let mut all = span;
    for k in 0..dim {
        if all.len() == dim {
            break;
        }
        let mut e = DVector::zeros(dim);
        e[k] = 1.0;
        let mut w = e;
        for _ in 0..2 {
            for b in &all {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let n = w.norm();
        // a standard basis vector always leaves a residual of at least
        // 1/sqrt(dim) for some k, so a fixed cut is safe
        if n > 1e-6 {
            all.push(w / n);
        }
    }
    all.split_off(r)
}

/// Proper rotation of R^3 taking unit vector `from` onto unit vector `to`.
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    let k = from.cross(to);
    let s = k.norm();
    let c = from.dot(to);
    if s < 1e-15 {
        if c > 0.0 {
            return Matrix3::identity();
        }
        // half-turn about any axis orthogonal to `from`
        let helper = if from.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let axis = from.cross(&helper).normalize();
        return 2.0 * axis * axis.transpose() - Matrix3::identity();
    }
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx + kx * kx * ((1.0 - c) / (s * s))
}

/// Symmetric eigen-decomposition with eigenvalues sorted ascending.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_of_plane_in_r3() {
        let v = vec![DVector::from_vec(vec![1.0, 1.0, 0.0]), DVector::from_vec(vec![1.0, -1.0, 0.0])];
        let c = orthogonal_complement(&v, 3, 1e-10);
        assert_eq!(c.len(), 1);
        assert!((c[0][2].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_maps_vectors() {
        let a = Vector3::new(0.3, -0.4, 0.5).normalize();
        for b in [Vector3::z(), -a, a, Vector3::new(-1.0, 2.0, 0.1).normalize()] {
            let r = rotation_between(&a, &b);
            assert!((r * a - b).norm() < 1e-14);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
            assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-14);
        }
    }

    #[test]
    fn rank_of_rank_one() {
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let m = &u * u.transpose();
        assert_eq!(numerical_rank(&m), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3)), 0);
    }
}
