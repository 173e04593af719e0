//! Cyclic Jacobi eigenvalue iteration for dense real symmetric matrices.

/// Target for the off-diagonal Frobenius norm.
pub const OFF_DIAGONAL_TOL: f64 = 1e-11;

const MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix, row-major `dim x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    sum += self.get(i, j).powi(2);
                }
            }
        }
        sum.sqrt()
    }

    fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut a = self.clone();
        let n = a.dim;
        // floating-point floor for matrices with large entries
        let floor = 1e-15 * a.frobenius_norm();
        let tol = OFF_DIAGONAL_TOL.max(floor);
        for _ in 0..MAX_SWEEPS {
            if a.off_diagonal_norm() <= tol {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    a.rotate(p, q);
                }
            }
        }
        let mut values: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// One Jacobi rotation annihilating `(p, q)`.
    fn rotate(&mut self, p: usize, q: usize) {
        let apq = self.get(p, q);
        if apq == 0.0 {
            return;
        }
        let app = self.get(p, p);
        let aqq = self.get(q, q);
        let theta = (aqq - app) / (2.0 * apq);
        let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
        let c = 1.0 / t.hypot(1.0);
        let s = t * c;
        for k in 0..self.dim {
            if k == p || k == q {
                continue;
            }
            let akp = self.get(k, p);
            let akq = self.get(k, q);
            self.set(k, p, c * akp - s * akq);
            self.set(k, q, s * akp + c * akq);
        }
        self.set(p, p, app - t * apq);
        self.set(q, q, aqq + t * apq);
        self.set(p, q, 0.0);
    }
}
