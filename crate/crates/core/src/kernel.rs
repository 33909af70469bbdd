//! Scalar kernels on R^d and their Gram matrices.
//!
//! Every family here is normalized, k(x, x) = 1, so the embedding constant
//! sup_x sqrt(k(x, x)) is exactly one. All families are strictly positive
//! definite on pairwise-distinct point sets, which is what makes the Gram
//! factorization below succeed and keeps representers linearly independent.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::scalar::Real;

/// Supported radial kernel families, all with unit peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// exp(-|x - x'|^2 / (2 gamma^2))
    Gaussian,
    /// exp(-|x - x'| / gamma)
    Laplacian,
    /// (1 + sqrt(3) t) exp(-sqrt(3) t) with t = |x - x'| / gamma
    Matern32,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
            KernelFamily::Matern32 => "matern32",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(KernelFamily::Gaussian),
            "laplacian" => Some(KernelFamily::Laplacian),
            "matern32" => Some(KernelFamily::Matern32),
            _ => None,
        }
    }
}

/// A kernel family together with a positive bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<F> {
    family: KernelFamily,
    bandwidth: F,
}

impl<F: Real> KernelSpec<F> {
    pub fn new(family: KernelFamily, bandwidth: F) -> Result<Self> {
        if !(bandwidth > F::zero()) || !bandwidth.is_finite() {
            return Err(Error::InvalidBandwidth);
        }
        Ok(Self { family, bandwidth })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> F {
        self.bandwidth
    }

    /// k(x, y). Symmetry is structural: the squared distance is a sum of
    /// squared differences, and (a - b)^2 == (b - a)^2 exactly in floats.
    pub fn eval(&self, x: &[F], y: &[F]) -> Result<F> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let mut dist_sq = F::zero();
        for (a, b) in x.iter().zip(y.iter()) {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            let diff = *a - *b;
            dist_sq += diff * diff;
        }
        Ok(self.eval_dist_sq(dist_sq))
    }

    fn eval_dist_sq(&self, dist_sq: F) -> F {
        match self.family {
            KernelFamily::Gaussian => {
                let two = F::cast(2.0);
                (-dist_sq / (two * self.bandwidth * self.bandwidth)).exp()
            }
            KernelFamily::Laplacian => (-dist_sq.sqrt() / self.bandwidth).exp(),
            KernelFamily::Matern32 => {
                let sqrt3 = F::cast(3.0).sqrt();
                let t = sqrt3 * dist_sq.sqrt() / self.bandwidth;
                (F::one() + t) * (-t).exp()
            }
        }
    }

    /// sup_x sqrt(k(x, x)), equal to one for every normalized family here.
    pub fn embedding_constant(&self) -> F {
        F::one()
    }
}

/// Gram matrix of a kernel over a fixed set of pairwise-distinct centers.
///
/// Symmetry holds exactly (each off-diagonal entry is computed once and
/// mirrored) and the diagonal is exactly one. The Cholesky factor is
/// computed lazily on first request and cached; concurrent callers race on
/// nothing because the cache is single-initialization.
#[derive(Debug)]
pub struct GramMatrix<F> {
    n: usize,
    entries: Vec<F>,
    cholesky: OnceLock<Result<Cholesky<F>>>,
}

impl<F: Real> GramMatrix<F> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> F {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Lower Cholesky factor, computed once. An indefinite matrix (possible
    /// only with corrupted entries or heavy jitter misuse) reports
    /// `GramNotPositiveDefinite`.
    pub fn cholesky(&self) -> Result<&Cholesky<F>> {
        self.cholesky
            .get_or_init(|| Cholesky::factor(&self.entries, self.n))
            .as_ref()
            .map_err(Error::clone)
    }

    /// Test hook: breaks the i,j mirror by `delta` so negative controls can
    /// watch the symmetry and reproducing-property checks fail.
    #[doc(hidden)]
    pub fn corrupt_entry(&mut self, i: usize, j: usize, delta: F) {
        self.entries[i * self.n + j] += delta;
        self.cholesky = OnceLock::new();
    }
}

/// Builds the Gram matrix of `spec` over `points` (row-major, n rows of
/// dimension d). Points must be pairwise distinct under exact comparison;
/// near-duplicates are the caller's problem and belong behind
/// [`gram_with_jitter`].
pub fn gram<F: Real>(spec: &KernelSpec<F>, points: &[Vec<F>]) -> Result<GramMatrix<F>> {
    gram_impl(spec, points, None)
}

/// Same as [`gram`] but adds `jitter` to the diagonal, trading the exact
/// unit diagonal for factorization headroom on nearly coincident centers.
pub fn gram_with_jitter<F: Real>(
    spec: &KernelSpec<F>,
    points: &[Vec<F>],
    jitter: F,
) -> Result<GramMatrix<F>> {
    gram_impl(spec, points, Some(jitter))
}

fn gram_impl<F: Real>(
    spec: &KernelSpec<F>,
    points: &[Vec<F>],
    jitter: Option<F>,
) -> Result<GramMatrix<F>> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidConfig(
            "at least one center is required".into(),
        ));
    }
    let d = points[0].len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i] == points[j] {
                return Err(Error::DuplicateCenters { first: i, second: j });
            }
        }
    }
    let mut entries = vec![F::zero(); n * n];
    for i in 0..n {
        entries[i * n + i] = F::one();
        for j in (i + 1)..n {
            let v = spec.eval(&points[i], &points[j])?;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    if let Some(eps) = jitter {
        for i in 0..n {
            entries[i * n + i] += eps;
        }
    }
    Ok(GramMatrix {
        n,
        entries,
        cholesky: OnceLock::new(),
    })
}
