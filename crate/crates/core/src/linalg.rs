//! Dense symmetric matrices, Jacobi eigendecomposition, and the
//! positive-semidefinite repair used before Monte Carlo sampling.
//!
//! Band grids are small (tens of points), so the cyclic Jacobi method is
//! fast, deterministic, and keeps the crate free of linear-algebra
//! dependencies.

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    data: Vec<f64>,
    dim: usize,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![0.0; dim * dim],
            dim,
        }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        Self { data, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// y = M x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.dim)) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Eigendecomposition of a symmetric matrix: M = Q diag(values) Q^T.
pub struct SymEigen {
    /// Eigenvalues, unsorted (Jacobi order).
    pub values: Vec<f64>,
    /// Orthogonal matrix with eigenvectors as columns.
    pub vectors: SquareMatrix,
}

/// Cyclic Jacobi eigendecomposition for symmetric matrices.
pub fn sym_eigen(m: &SquareMatrix) -> SymEigen {
    let n = m.dim();
    let mut a = m.clone();
    // enforce exact symmetry against accumulated asymmetries
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, s);
            a.set(j, i, s);
        }
    }
    let mut q = SquareMatrix::zeros(n);
    for i in 0..n {
        q.set(i, i, 1.0);
    }
    let scale: f64 = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j).abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a.get(i, j).abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for qi in (p + 1)..n {
                let apq = a.get(p, qi);
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(qi, qi);
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e12 {
                    0.5 / theta
                } else {
                    let s = theta.signum();
                    s / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rows/cols p and q of A
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, qi);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, qi, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(qi, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(qi, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkq = q.get(k, qi);
                    q.set(k, p, c * qkp - s * qkq);
                    q.set(k, qi, s * qkp + c * qkq);
                }
            }
        }
    }
    let values = (0..n).map(|i| a.get(i, i)).collect();
    SymEigen { values, vectors: q }
}

/// Result of forcing a symmetric matrix to be positive semidefinite.
pub struct PsdFactor {
    /// Factor A with A A^T equal to the repaired matrix; columns are
    /// eigenvectors scaled by sqrt(max(eigenvalue, 0)).
    pub factor: SquareMatrix,
    /// Sum of clipped negative eigenvalue magnitudes divided by the trace.
    pub clipped_fraction: f64,
}

/// Clip negative eigenvalues to zero and return a sampling factor.
pub fn psd_factor(m: &SquareMatrix) -> PsdFactor {
    let n = m.dim();
    let eig = sym_eigen(m);
    let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
    let clipped: f64 = eig.values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let mut factor = SquareMatrix::zeros(n);
    for j in 0..n {
        let s = eig.values[j].max(0.0).sqrt();
        for i in 0..n {
            factor.set(i, j, eig.vectors.get(i, j) * s);
        }
    }
    let clipped_fraction = if trace > 0.0 {
        clipped / trace
    } else if clipped > 0.0 {
        1.0
    } else {
        0.0
    };
    PsdFactor {
        factor,
        clipped_fraction,
    }
}
