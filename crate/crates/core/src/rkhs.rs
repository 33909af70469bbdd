//! Finite expansions in a vector-valued reproducing kernel Hilbert space.
//!
//! The space is built from a scalar kernel k times the identity on R^m, so
//! an element is a function A -> R^m and the representer of evaluation at
//! (x, v) is the function k(., x) v. Everything the solver and the descent
//! loop touch lives in the span of the representers at the dataset centers:
//!
//!   f = sum_i k(., x_i) c_i        with c_i in R^m.
//!
//! That span is closed under every operation used here. Gradients of the
//! objective stay in it, the exact minimizer lies in it, and projection
//! onto a centered ball only rescales coefficients. Inner products reduce
//! to Gram-weighted coefficient sums:
//!
//!   (f, g)_H = sum_{i,j} G[i][j] <c_i coeffs of f, c_j coeffs of g>.
//!
//! Two expansions interoperate only when they share the same space object
//! (same dataset, same Gram matrix); mixing spaces is a caller bug and is
//! reported as `MismatchedSpace`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::{gram, gram_with_jitter, GramMatrix, KernelSpec};
use crate::scalar::Real;

/// Negative round-off below this magnitude is treated as zero in
/// `norm_squared`, which keeps square roots well defined.
const NORM_CLAMP: f64 = 1e-12;

/// Scattered data: n pairwise-distinct points in R^d with targets in R^m.
#[derive(Debug, Clone)]
pub struct Dataset<F> {
    points: Vec<Vec<F>>,
    targets: Vec<Vec<F>>,
    d: usize,
    m: usize,
}

impl<F: Real> Dataset<F> {
    pub fn new(points: Vec<Vec<F>>, targets: Vec<Vec<F>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig(
                "dataset must contain at least one point".into(),
            ));
        }
        if points.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: targets.len(),
            });
        }
        let d = points[0].len();
        let m = targets[0].len();
        if d == 0 || m == 0 {
            return Err(Error::InvalidConfig(
                "point and target dimensions must be at least 1".into(),
            ));
        }
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
        }
        for t in &targets {
            if t.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: t.len(),
                });
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::DuplicateCenters { first: i, second: j });
                }
            }
        }
        Ok(Self {
            points,
            targets,
            d,
            m,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn point(&self, i: usize) -> &[F] {
        &self.points[i]
    }

    pub fn target(&self, i: usize) -> &[F] {
        &self.targets[i]
    }

    pub fn points(&self) -> &[Vec<F>] {
        &self.points
    }

    /// Same points, new targets. Used to restate a problem around a known
    /// minimizer without touching geometry.
    pub fn with_targets(&self, targets: Vec<Vec<F>>) -> Result<Self> {
        Dataset::new(self.points.clone(), targets)
    }
}

/// Kernel, dataset and Gram matrix bundled as one immutable space object.
/// Shared behind `Arc` by every expansion over these centers.
#[derive(Debug)]
pub struct Rkhs<F> {
    kernel: KernelSpec<F>,
    dataset: Dataset<F>,
    gram: GramMatrix<F>,
}

impl<F: Real> Rkhs<F> {
    pub fn build(kernel: KernelSpec<F>, dataset: Dataset<F>) -> Result<Arc<Self>> {
        let gram = gram(&kernel, &dataset.points)?;
        Ok(Arc::new(Self {
            kernel,
            dataset,
            gram,
        }))
    }

    /// Escape hatch for nearly coincident centers; see `gram_with_jitter`.
    pub fn build_with_jitter(
        kernel: KernelSpec<F>,
        dataset: Dataset<F>,
        jitter: F,
    ) -> Result<Arc<Self>> {
        let gram = gram_with_jitter(&kernel, &dataset.points, jitter)?;
        Ok(Arc::new(Self {
            kernel,
            dataset,
            gram,
        }))
    }

    /// Test hook: rebuilds the space with one Gram entry bumped on a single
    /// side, so corruption detectors have something to detect.
    #[doc(hidden)]
    pub fn build_corrupted(
        kernel: KernelSpec<F>,
        dataset: Dataset<F>,
        i: usize,
        j: usize,
        delta: F,
    ) -> Result<Arc<Self>> {
        let mut gram = gram(&kernel, &dataset.points)?;
        gram.corrupt_entry(i, j, delta);
        Ok(Arc::new(Self {
            kernel,
            dataset,
            gram,
        }))
    }

    pub fn kernel(&self) -> &KernelSpec<F> {
        &self.kernel
    }

    pub fn dataset(&self) -> &Dataset<F> {
        &self.dataset
    }

    pub fn gram(&self) -> &GramMatrix<F> {
        &self.gram
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn m(&self) -> usize {
        self.dataset.m()
    }

    /// The zero element of the span.
    pub fn zero(self: &Arc<Self>) -> Expansion<F> {
        Expansion {
            space: Arc::clone(self),
            coeffs: vec![F::zero(); self.n() * self.m()],
        }
    }

    /// Representer of evaluation at center i against direction v: the
    /// expansion with coefficient row i equal to v and all other rows zero.
    pub fn representer(self: &Arc<Self>, i: usize, v: &[F]) -> Result<Expansion<F>> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            });
        }
        if v.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: v.len(),
            });
        }
        let mut e = self.zero();
        e.coeffs[i * self.m()..(i + 1) * self.m()].copy_from_slice(v);
        Ok(e)
    }

    /// Expansion with explicit coefficients, row-major n x m.
    pub fn expansion_from_coeffs(self: &Arc<Self>, coeffs: Vec<F>) -> Result<Expansion<F>> {
        if coeffs.len() != self.n() * self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.n() * self.m(),
                got: coeffs.len(),
            });
        }
        Ok(Expansion {
            space: Arc::clone(self),
            coeffs,
        })
    }
}

fn clamp_norm_sq<F: Real>(v: F) -> F {
    if v < F::zero() && v > -F::cast(NORM_CLAMP) {
        F::zero()
    } else {
        v
    }
}

/// f = sum_i k(., x_i) c_i over the centers of a shared space.
#[derive(Debug, Clone)]
pub struct Expansion<F> {
    space: Arc<Rkhs<F>>,
    coeffs: Vec<F>,
}

impl<F: Real> Expansion<F> {
    pub fn space(&self) -> &Arc<Rkhs<F>> {
        &self.space
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn coeff_row(&self, i: usize) -> &[F] {
        let m = self.space.m();
        &self.coeffs[i * m..(i + 1) * m]
    }

    pub(crate) fn coeff_row_mut(&mut self, i: usize) -> &mut [F] {
        let m = self.space.m();
        &mut self.coeffs[i * m..(i + 1) * m]
    }

    fn same_space(&self, other: &Expansion<F>) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::MismatchedSpace)
        }
    }

    /// Pointwise value f(x) in R^m, at an arbitrary (finite) point.
    pub fn evaluate(&self, x: &[F]) -> Result<Vec<F>> {
        let ds = self.space.dataset();
        let m = ds.m();
        let mut out = vec![F::zero(); m];
        for i in 0..ds.n() {
            let kv = self.space.kernel().eval(x, ds.point(i))?;
            let row = self.coeff_row(i);
            for l in 0..m {
                out[l] += kv * row[l];
            }
        }
        Ok(out)
    }

    /// f(x_i) through the Gram row, avoiding kernel re-evaluation.
    pub fn evaluate_at_center(&self, i: usize) -> Result<Vec<F>> {
        let mut out = vec![F::zero(); self.space.m()];
        self.evaluate_at_center_into(i, &mut out)?;
        Ok(out)
    }

    pub(crate) fn evaluate_at_center_into(&self, i: usize, out: &mut [F]) -> Result<()> {
        let n = self.space.n();
        let m = self.space.m();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        let grow = self.space.gram().row(i);
        for v in out.iter_mut() {
            *v = F::zero();
        }
        for j in 0..n {
            let g = grow[j];
            let row = &self.coeffs[j * m..(j + 1) * m];
            for l in 0..m {
                out[l] += g * row[l];
            }
        }
        Ok(())
    }

    /// (f, g)_H = sum_{i,j} G[i][j] <c_i, c'_j>.
    pub fn inner_product(&self, other: &Expansion<F>) -> Result<F> {
        self.same_space(other)?;
        let n = self.space.n();
        let m = self.space.m();
        let mut acc = F::zero();
        let mut gc = vec![F::zero(); m];
        for i in 0..n {
            let grow = self.space.gram().row(i);
            for v in gc.iter_mut() {
                *v = F::zero();
            }
            for j in 0..n {
                let g = grow[j];
                let row = &other.coeffs[j * m..(j + 1) * m];
                for l in 0..m {
                    gc[l] += g * row[l];
                }
            }
            let row = self.coeff_row(i);
            for l in 0..m {
                acc += row[l] * gc[l];
            }
        }
        Ok(acc)
    }

    /// |f|_H^2 with tiny negative round-off clamped to zero.
    pub fn norm_squared(&self) -> F {
        clamp_norm_sq(self.inner_product(self).expect("same space"))
    }

    pub fn norm(&self) -> F {
        self.norm_squared().sqrt()
    }

    /// a f, as a new expansion.
    pub fn scale(&self, a: F) -> Expansion<F> {
        let mut out = self.clone();
        out.scale_in_place(a);
        out
    }

    pub(crate) fn scale_in_place(&mut self, a: F) {
        for c in self.coeffs.iter_mut() {
            *c *= a;
        }
    }

    /// f + a g.
    pub fn axpy(&self, a: F, g: &Expansion<F>) -> Result<Expansion<F>> {
        self.same_space(g)?;
        let mut out = self.clone();
        for (c, gc) in out.coeffs.iter_mut().zip(g.coeffs.iter()) {
            *c += a * *gc;
        }
        Ok(out)
    }

    pub fn sub(&self, g: &Expansion<F>) -> Result<Expansion<F>> {
        self.same_space(g)?;
        let mut out = self.clone();
        for (c, gc) in out.coeffs.iter_mut().zip(g.coeffs.iter()) {
            *c -= *gc;
        }
        Ok(out)
    }

    /// Metric projection onto the centered ball of radius r: rescale by
    /// 1 / max(1, |f|_H / r). Radius may be infinite, in which case f is
    /// returned unchanged.
    pub fn project_ball(&self, r: F) -> Result<Expansion<F>> {
        if !(r > F::zero()) {
            return Err(Error::InvalidRadius);
        }
        if r.is_infinite() {
            return Ok(self.clone());
        }
        let s = (self.norm() / r).max(F::one());
        Ok(self.scale(F::one() / s))
    }
}

/// Expansion with iid standard normal coefficients scaled by `scale`.
/// Draws in f64 so the stream does not depend on the scalar type. This is
/// the competitor/state generator for audits and property suites.
pub fn random_expansion<F: Real, R: Rng + ?Sized>(
    space: &Arc<Rkhs<F>>,
    scale: F,
    rng: &mut R,
) -> Expansion<F> {
    let mut e = space.zero();
    for i in 0..space.n() {
        let row = e.coeff_row_mut(i);
        for v in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = scale * F::cast(z);
        }
    }
    e
}

/// An expansion kept in arrival order: one (center, weight) atom per
/// append, with global rescalings applied eagerly to every stored weight.
/// This is the bookkeeping-friendly mirror of `Expansion`; the two must
/// agree wherever both are defined, which is exactly what the trajectory
/// oracle checks.
#[derive(Debug, Clone, Default)]
pub struct AtomList<F> {
    atoms: Vec<(usize, Vec<F>)>,
}

impl<F: Real> AtomList<F> {
    pub fn new() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[(usize, Vec<F>)] {
        &self.atoms
    }

    pub fn push(&mut self, center: usize, weight: Vec<F>) {
        self.atoms.push((center, weight));
    }

    /// Multiplies every stored weight by `a` now. Applying scalars eagerly
    /// keeps each atom's stored weight equal to its contribution, at
    /// O(len) per call, which is fine at desk scale.
    pub fn scale_all(&mut self, a: F) {
        for (_, w) in self.atoms.iter_mut() {
            for v in w.iter_mut() {
                *v *= a;
            }
        }
    }

    /// Pointwise value, summed atom by atom in arrival order. Deliberately
    /// does not go through `Expansion`, so the two representations stay
    /// independent checks on one another.
    pub fn evaluate(&self, space: &Rkhs<F>, x: &[F]) -> Result<Vec<F>> {
        let m = space.m();
        let mut out = vec![F::zero(); m];
        for (c, w) in &self.atoms {
            if *c >= space.n() {
                return Err(Error::IndexOutOfRange {
                    index: *c,
                    len: space.n(),
                });
            }
            if w.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: w.len(),
                });
            }
            let kv = space.kernel().eval(x, space.dataset().point(*c))?;
            for l in 0..m {
                out[l] += kv * w[l];
            }
        }
        Ok(out)
    }

    /// Same as `evaluate` at a dataset center, through Gram entries.
    pub fn evaluate_at_center(&self, space: &Rkhs<F>, i: usize) -> Result<Vec<F>> {
        if i >= space.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: space.n(),
            });
        }
        let m = space.m();
        let mut out = vec![F::zero(); m];
        for (c, w) in &self.atoms {
            if *c >= space.n() {
                return Err(Error::IndexOutOfRange {
                    index: *c,
                    len: space.n(),
                });
            }
            let g = space.gram().entry(i, *c);
            for l in 0..m {
                out[l] += g * w[l];
            }
        }
        Ok(out)
    }

    /// Collapses atoms into per-center coefficient rows.
    pub fn to_expansion(&self, space: &Arc<Rkhs<F>>) -> Result<Expansion<F>> {
        let m = space.m();
        let mut e = space.zero();
        for (c, w) in &self.atoms {
            if *c >= space.n() {
                return Err(Error::IndexOutOfRange {
                    index: *c,
                    len: space.n(),
                });
            }
            if w.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: w.len(),
                });
            }
            let row = e.coeff_row_mut(*c);
            for l in 0..m {
                row[l] += w[l];
            }
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn toy_space() -> Arc<Rkhs<f64>> {
        let kernel = KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap();
        let points = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let targets = vec![vec![1.0, -1.0], vec![0.5, 0.0], vec![-0.25, 2.0]];
        Rkhs::build(kernel, Dataset::new(points, targets).unwrap()).unwrap()
    }

    #[test]
    fn dataset_rejects_duplicates_and_shape_errors() {
        let pts = vec![vec![0.0], vec![0.0]];
        let ys = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            Dataset::new(pts, ys),
            Err(Error::DuplicateCenters { .. })
        ));
        let pts = vec![vec![0.0], vec![1.0, 2.0]];
        let ys = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            Dataset::new(pts, ys),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn representer_norm_is_gram_weighted() {
        // |k(., x_i) v|^2 = k(x_i, x_i) |v|^2 = |v|^2 on the unit diagonal.
        let space = toy_space();
        let e = space.representer(1, &[3.0, 4.0]).unwrap();
        assert!((e.norm_squared() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn representer_rejects_bad_index_and_dimension() {
        let space = toy_space();
        assert!(matches!(
            space.representer(3, &[0.0, 0.0]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            space.representer(0, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reproducing_identity_on_a_small_case() {
        let space = toy_space();
        let phi = space
            .expansion_from_coeffs(vec![0.3, -0.2, 1.0, 0.5, -0.7, 0.25])
            .unwrap();
        let v = [0.9, -1.3];
        for i in 0..3 {
            let rep = space.representer(i, &v).unwrap();
            let lhs = rep.inner_product(&phi).unwrap();
            let phi_at = phi.evaluate_at_center(i).unwrap();
            let rhs = v[0] * phi_at[0] + v[1] * phi_at[1];
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn evaluate_matches_evaluate_at_center() {
        let space = toy_space();
        let f = space
            .expansion_from_coeffs(vec![1.0, 0.0, -0.5, 2.0, 0.25, -1.0])
            .unwrap();
        for i in 0..3 {
            let a = f.evaluate(space.dataset().point(i)).unwrap();
            let b = f.evaluate_at_center(i).unwrap();
            for l in 0..2 {
                assert!((a[l] - b[l]).abs() < 1e-12 * (1.0 + a[l].abs()));
            }
        }
    }

    #[test]
    fn zero_expansion_evaluates_to_zero() {
        let space = toy_space();
        let z = space.zero();
        assert_eq!(z.norm_squared(), 0.0);
        assert_eq!(z.evaluate(&[0.3, 0.4]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn norm_scales_quadratically() {
        let space = toy_space();
        let f = space
            .expansion_from_coeffs(vec![1.0, 2.0, 0.0, -1.0, 0.5, 0.5])
            .unwrap();
        let n1 = f.norm_squared();
        let n2 = f.scale(3.0).norm_squared();
        assert!((n2 - 9.0 * n1).abs() < 1e-12 * (1.0 + n2.abs()));
    }

    #[test]
    fn projection_cases() {
        let space = toy_space();
        let f = space.representer(0, &[2.0, 0.0]).unwrap(); // norm 2
        let inside = f.project_ball(3.0).unwrap();
        assert_eq!(inside.coeffs(), f.coeffs());
        let shrunk = f.project_ball(1.0).unwrap();
        assert!((shrunk.norm() - 1.0).abs() < 1e-12);
        let untouched = f.project_ball(f64::INFINITY).unwrap();
        assert_eq!(untouched.coeffs(), f.coeffs());
        assert!(matches!(f.project_ball(0.0), Err(Error::InvalidRadius)));
        assert!(matches!(f.project_ball(-1.0), Err(Error::InvalidRadius)));
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = toy_space();
        let b = toy_space();
        let fa = a.zero();
        let fb = b.zero();
        assert_eq!(fa.inner_product(&fb).unwrap_err(), Error::MismatchedSpace);
        assert_eq!(fa.axpy(1.0, &fb).unwrap_err(), Error::MismatchedSpace);
        assert_eq!(fa.sub(&fb).unwrap_err(), Error::MismatchedSpace);
    }

    #[test]
    fn single_atom_matches_representer() {
        let space = toy_space();
        let mut atoms = AtomList::new();
        atoms.push(2, vec![1.5, -0.5]);
        let via_atoms = atoms.evaluate(&space, &[0.2, 0.8]).unwrap();
        let rep = space.representer(2, &[1.5, -0.5]).unwrap();
        let via_exp = rep.evaluate(&[0.2, 0.8]).unwrap();
        for l in 0..2 {
            assert!((via_atoms[l] - via_exp[l]).abs() < 1e-14);
        }
    }

    #[test]
    fn atoms_merge_per_center() {
        let space = toy_space();
        let mut atoms = AtomList::new();
        atoms.push(0, vec![1.0, 0.0]);
        atoms.push(0, vec![0.5, 2.0]);
        atoms.push(1, vec![-1.0, 1.0]);
        atoms.scale_all(2.0);
        let e = atoms.to_expansion(&space).unwrap();
        assert_eq!(e.coeff_row(0), &[3.0, 4.0]);
        assert_eq!(e.coeff_row(1), &[-2.0, 2.0]);
        assert_eq!(e.coeff_row(2), &[0.0, 0.0]);
        assert_eq!(atoms.len(), 3);
    }

    #[test]
    fn norm_clamp_only_touches_tiny_negatives() {
        assert_eq!(clamp_norm_sq(-1e-13), 0.0);
        assert_eq!(clamp_norm_sq(1e-13), 1e-13);
        assert_eq!(clamp_norm_sq(-1e-11), -1e-11);
    }
}
