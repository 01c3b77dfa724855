//! Small dense linear-algebra helpers shared by the closed-form fitters.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};

/// Accumulated weighted normal equations `Σ w·xᵀx` and `Σ w·xᵀy`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub gram: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub rows: usize,
}

impl NormalEquations {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Self {
            gram: DMatrix::zeros(in_dim, in_dim),
            cross: DMatrix::zeros(in_dim, out_dim),
            rows: 0,
        }
    }

    /// Adds a block of design rows `x` (n×d) with targets `y` (n×m).
    pub fn accumulate(&mut self, x: &DMatrix<f64>, y: &DMatrix<f64>, weight: f64) {
        assert_eq!(x.nrows(), y.nrows());
        self.gram.gemm_tr(weight, x, x, 1.0);
        self.cross.gemm_tr(weight, x, y, 1.0);
        self.rows += x.nrows();
    }

    pub fn merge(&mut self, other: &NormalEquations) {
        self.gram += &other.gram;
        self.cross += &other.cross;
        self.rows += other.rows;
    }

    /// Solves `(G + λI) W = C + λ·prior`.
    ///
    /// With a prior the penalty is `λ‖W − prior‖²`, so the returned solution
    /// never has a larger data loss than the prior itself.
    pub fn solve_ridge(&self, lambda: f64, prior: Option<&DMatrix<f64>>) -> DMatrix<f64> {
        let d = self.gram.nrows();
        let mut lhs = self.gram.clone();
        for i in 0..d {
            lhs[(i, i)] += lambda;
        }
        let mut rhs = self.cross.clone();
        if let Some(p) = prior {
            rhs += p * lambda;
        }
        solve_spd(lhs, rhs)
    }
}

/// Solves a symmetric positive (semi)definite system, falling back to LU.
pub fn solve_spd(lhs: DMatrix<f64>, rhs: DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = lhs.clone().cholesky() {
        return chol.solve(&rhs);
    }
    warn!("normal equations are not positive definite; falling back to LU");
    lhs.lu()
        .solve(&rhs)
        .unwrap_or_else(|| DMatrix::zeros(rhs.nrows(), rhs.ncols()))
}

/// Eigen-decomposition of a symmetric matrix with eigenpairs sorted by
/// descending eigenvalue. Columns of the returned matrix are eigenvectors.
pub fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}
