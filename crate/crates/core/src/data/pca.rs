use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Principal axes fitted on a reference set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    /// `1 × d` feature mean.
    pub mean: Matrix,
    /// `k × d`, orthonormal rows ordered by decreasing explained variance.
    pub components: Matrix,
}

impl PcaBasis {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.components.cols()
    }
}

/// Top-`k` eigenvectors of the sample covariance of `x`.
///
/// Each component's sign is fixed so that its largest-magnitude entry is
/// positive.
pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaBasis> {
    let (n, d) = x.shape();
    if k == 0 || k > n.min(d) {
        return Err(Error::contract(format!(
            "pca_fit: k={k} must be in 1..={} for {n} rows of dimension {d}",
            n.min(d)
        )));
    }
    let mean = x.mean_rows();
    let mut centered = x.clone();
    centered.add_row_broadcast(&mean.scale(-1.0))?;
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let cov = centered.t_matmul(&centered)?.scale(1.0 / denom);

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.data()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut components = Matrix::zeros(k, d);
    for (row, &col) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(col);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, e| if e.abs() > acc.abs() { e } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components.set(row, j, sign * v[j]);
        }
    }
    Ok(PcaBasis { mean, components })
}

/// Coordinates of `x` in the basis: `(x - mean) · componentsᵀ`.
pub fn pca_project(basis: &PcaBasis, x: &Matrix) -> Result<Matrix> {
    if x.cols() != basis.dim() {
        return Err(Error::shape(
            "pca_project",
            format!("{} columns for a basis of dimension {}", x.cols(), basis.dim()),
        ));
    }
    let mut centered = x.clone();
    centered.add_row_broadcast(&basis.mean.scale(-1.0))?;
    centered.matmul_t(&basis.components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{sq_dist, Rng};

    #[test]
    fn single_axis_variance() {
        let mut rng = Rng::new(4);
        let rows: Vec<[f64; 2]> = (0..50).map(|_| [rng.normal(), 0.0]).collect();
        let b = pca_fit(&Matrix::from_rows(&rows).unwrap(), 1).unwrap();
        assert!((b.components.get(0, 0).abs() - 1.0).abs() < 1e-12);
        assert!(b.components.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn isometry_on_span() {
        // points in a 2-D subspace of R^4
        let mut rng = Rng::new(9);
        let u = [0.5, 0.5, 0.5, 0.5];
        let v = [0.5, -0.5, 0.5, -0.5];
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                let (a, c) = (rng.normal(), rng.normal());
                (0..4).map(|j| a * u[j] + c * v[j] + 0.25).collect()
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let b = pca_fit(&x, 2).unwrap();
        let p = pca_project(&b, &x).unwrap();
        for i in 0..30 {
            for j in 0..i {
                let d0 = sq_dist(x.row(i), x.row(j)).sqrt();
                let d1 = sq_dist(p.row(i), p.row(j)).sqrt();
                assert!((d0 - d1).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn k_too_large() {
        assert!(pca_fit(&Matrix::zeros(3, 5), 4).is_err());
        assert!(pca_fit(&Matrix::zeros(10, 2), 3).is_err());
        assert!(pca_fit(&Matrix::zeros(10, 2), 0).is_err());
    }
}
