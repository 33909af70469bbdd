//! Minimal dense linear algebra: a Cholesky factorization sized for
//! desk-scale symmetric positive definite systems (hundreds of centers).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower-triangular factor L with A = L Lᵀ, stored row-major with the
/// strictly upper part zeroed.
#[derive(Debug, Clone)]
pub struct Cholesky<F> {
    n: usize,
    lower: Vec<F>,
}

impl<F: Real> Cholesky<F> {
    /// Factors a symmetric matrix given as a row-major n x n slice.
    /// Fails when a pivot is not strictly positive or turns non-finite.
    pub fn factor(matrix: &[F], n: usize) -> Result<Self> {
        assert_eq!(matrix.len(), n * n, "matrix storage must be n*n");
        let mut l = vec![F::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut acc = matrix[i * n + j];
                for k in 0..j {
                    acc -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(acc > F::zero()) || !acc.is_finite() {
                        return Err(Error::GramNotPositiveDefinite);
                    }
                    l[i * n + j] = acc.sqrt();
                } else {
                    l[i * n + j] = acc / l[j * n + j];
                }
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower(&self, i: usize, j: usize) -> F {
        self.lower[i * self.n + j]
    }

    /// Entry (i, j) of L Lᵀ, used to audit the factorization.
    pub fn reconstruct(&self, i: usize, j: usize) -> F {
        let upto = i.min(j);
        let mut acc = F::zero();
        for k in 0..=upto {
            acc += self.lower(i, k) * self.lower(j, k);
        }
        acc
    }

    /// Solves A x = b in place via forward then backward substitution.
    pub fn solve_in_place(&self, b: &mut [F]) {
        assert_eq!(b.len(), self.n, "rhs length must match system size");
        let n = self.n;
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc -= self.lower[i * n + k] * b[k];
            }
            b[i] = acc / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in (i + 1)..n {
                acc -= self.lower[k * n + i] * b[k];
            }
            b[i] = acc / self.lower[i * n + i];
        }
    }
}

/// Neumaier compensated accumulator. Used wherever a sum must not depend
/// on how work was split across threads.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<F> {
    sum: F,
    compensation: F,
}

impl<F: Real> Default for CompensatedSum<F> {
    fn default() -> Self {
        Self {
            sum: F::zero(),
            compensation: F::zero(),
        }
    }
}

impl<F: Real> CompensatedSum<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: F) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_identity() {
        let a = vec![1.0, 0.0, 0.0, 1.0];
        let c = Cholesky::<f64>::factor(&a, 2).unwrap();
        assert_eq!(c.lower(0, 0), 1.0);
        assert_eq!(c.lower(1, 1), 1.0);
        assert_eq!(c.lower(1, 0), 0.0);
    }

    #[test]
    fn solves_small_spd_system() {
        // A = [[4,2],[2,3]], b = [2,1] -> x = [0.5, 0].
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let c = Cholesky::<f64>::factor(&a, 2).unwrap();
        let mut b = vec![2.0, 1.0];
        c.solve_in_place(&mut b);
        assert!((b[0] - 0.5).abs() < 1e-14);
        assert!(b[1].abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert_eq!(
            Cholesky::<f64>::factor(&a, 2).unwrap_err(),
            Error::GramNotPositiveDefinite
        );
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);
    }
}
