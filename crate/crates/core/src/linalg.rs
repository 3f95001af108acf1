//! Minimal dense symmetric linear algebra: storage, a semidefinite-tolerant
//! Cholesky factorization, and the triangular products the sampler needs.

use crate::scalar::Scalar;

/// Dense square matrix, row-major.
#[derive(Debug, Clone)]
pub struct SquareMat<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> SquareMat<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![F::zero(); n * n],
        }
    }

    /// Fill a symmetric matrix from an upper-triangle generator.
    pub fn from_symmetric_fn(n: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn max_diag(&self) -> F {
        (0..self.n).fold(F::zero(), |m, i| m.max(self.get(i, i)))
    }

    /// Average out the floating-point asymmetry left by a two-sided product.
    pub fn symmetrize(&mut self) {
        let half = F::of(0.5);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = (self.get(i, j) + self.get(j, i)) * half;
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }
}

/// Outcome of a failed pivot, reported to the caller for the jitter schedule.
#[derive(Debug, Clone, Copy)]
pub struct PivotFailure<F> {
    pub pivot: usize,
    pub residual: F,
}

/// Lower-triangular Cholesky factor of a symmetric positive *semi*definite
/// matrix.
///
/// A pivot whose residual lies in `[-tol, tol]` (with `tol = rel_tol *
/// max_diag`) is treated as an exactly deterministic direction: the whole
/// column is zeroed.  A residual below `-tol` aborts with the failing pivot.
pub fn cholesky_semidefinite<F: Scalar>(
    a: &SquareMat<F>,
    rel_tol: F,
) -> Result<SquareMat<F>, PivotFailure<F>> {
    let n = a.n();
    let tol = rel_tol * a.max_diag().max(F::min_positive_value());
    let mut l = SquareMat::zeros(n);
    for j in 0..n {
        let mut d = a.get(j, j);
        {
            let row_j = &l.data[j * n..j * n + j];
            d -= dot(row_j, row_j);
        }
        if d > tol {
            let pivot = d.sqrt();
            l.data[j * n + j] = pivot;
            let inv = F::one() / pivot;
            for i in (j + 1)..n {
                let s = {
                    let (rows_i, rows_j) = (&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                    dot(rows_i, rows_j)
                };
                l.data[i * n + j] = (a.get(i, j) - s) * inv;
            }
        } else if d >= -tol {
            // Semidefinite direction: the component is deterministic.
            l.data[j * n + j] = F::zero();
        } else {
            return Err(PivotFailure {
                pivot: j,
                residual: d,
            });
        }
    }
    Ok(l)
}

/// `y = L z` for lower-triangular `L`.
pub fn lower_tri_mul<F: Scalar>(l: &SquareMat<F>, z: &[F]) -> Vec<F> {
    let n = l.n();
    debug_assert_eq!(z.len(), n);
    (0..n)
        .map(|i| dot(&l.row(i)[..=i], &z[..=i]))
        .collect()
}

#[inline]
fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}
