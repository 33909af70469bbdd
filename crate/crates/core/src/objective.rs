//! The regularized scattered-data objective and its randomized components.
//!
//! For a dataset of n pairs and a mixing weight q in (0, 1),
//!
//!   u(f) = q * |f|_H^2 / 2 + (1 - q) / n * sum_i |f(x_i) - y_i|^2 / 2,
//!
//! which is the expectation of a single randomly drawn component: the
//! regularizer with probability q, or one data misfit with probability
//! (1 - q) / n each. Gradients are exposed as their Riesz representers,
//! which live in the same span as every iterate:
//!
//!   grad u_0 at f  -> f itself,
//!   grad u_i at f  -> k(., x_i) (f(x_i) - y_i).
//!
//! The descent loop only ever touches one component per step; the exact
//! solver and the verification suites use the full objective.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rkhs::{Expansion, Rkhs};
use crate::scalar::Real;
use crate::sgd::ScalingLaw;

/// Which component of the objective a draw selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossTerm {
    /// The norm part |f|_H^2 / 2, drawn with probability q.
    Regularizer,
    /// The misfit at data point i (0-based), drawn with probability (1-q)/n.
    Data(usize),
}

/// Problem instance: a space, the mixing weight q, and the feasible radius.
#[derive(Debug, Clone)]
pub struct Problem<F> {
    space: Arc<Rkhs<F>>,
    q: F,
    radius: F,
}

/// Constants the step-size schedule is built from.
///
/// `lambda` is the strong monotonicity modulus of the expected gradient,
/// `lambda_sq` the squared Lipschitz bound of the component family in
/// expectation, `embedding` the sup of sqrt(k(x, x)), and `rho` the second
/// moment of the step scaling law (one when no law is applied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants<F> {
    pub lambda: F,
    pub lambda_sq: F,
    pub embedding: F,
    pub rho: F,
}

impl<F: Real> Problem<F> {
    pub fn new(space: Arc<Rkhs<F>>, q: F, radius: F) -> Result<Self> {
        if !q.is_finite() || !(q > F::zero()) || !(q < F::one()) {
            return Err(Error::InvalidMixingWeight);
        }
        if r_invalid(radius) {
            return Err(Error::InvalidRadius);
        }
        Ok(Self { space, q, radius })
    }

    pub fn space(&self) -> &Arc<Rkhs<F>> {
        &self.space
    }

    pub fn q(&self) -> F {
        self.q
    }

    pub fn radius(&self) -> F {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    fn check_space(&self, f: &Expansion<F>) -> Result<()> {
        if Arc::ptr_eq(&self.space, f.space()) {
            Ok(())
        } else {
            Err(Error::MismatchedSpace)
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            })
        }
    }

    /// Value of a single component at f.
    pub fn loss_component(&self, term: LossTerm, f: &Expansion<F>) -> Result<F> {
        self.check_space(f)?;
        let half = F::cast(0.5);
        match term {
            LossTerm::Regularizer => Ok(half * f.norm_squared()),
            LossTerm::Data(i) => {
                self.check_index(i)?;
                Ok(half * self.residual_norm_sq(f, i)?)
            }
        }
    }

    fn residual_norm_sq(&self, f: &Expansion<F>, i: usize) -> Result<F> {
        let m = self.space.m();
        let fx = f.evaluate_at_center(i)?;
        let y = self.space.dataset().target(i);
        let mut acc = F::zero();
        for l in 0..m {
            let r = fx[l] - y[l];
            acc += r * r;
        }
        Ok(acc)
    }

    /// u(f), the exact expectation of a sampled component.
    pub fn full_objective(&self, f: &Expansion<F>) -> Result<F> {
        self.check_space(f)?;
        let half = F::cast(0.5);
        let mut data = F::zero();
        for i in 0..self.n() {
            data += self.residual_norm_sq(f, i)?;
        }
        let n = F::from_count(self.n());
        Ok(self.q * half * f.norm_squared() + (F::one() - self.q) * half * data / n)
    }

    /// Riesz representer of the gradient of one component at f.
    pub fn grad_representer(&self, term: LossTerm, f: &Expansion<F>) -> Result<Expansion<F>> {
        self.check_space(f)?;
        match term {
            LossTerm::Regularizer => Ok(f.clone()),
            LossTerm::Data(i) => {
                self.check_index(i)?;
                let fx = f.evaluate_at_center(i)?;
                let y = self.space.dataset().target(i);
                let resid: Vec<F> = fx.iter().zip(y.iter()).map(|(a, b)| *a - *b).collect();
                self.space.representer(i, &resid)
            }
        }
    }

    /// Riesz representer of the full gradient,
    /// q f + (1-q)/n sum_i k(., x_i)(f(x_i) - y_i).
    pub fn full_gradient(&self, f: &Expansion<F>) -> Result<Expansion<F>> {
        self.check_space(f)?;
        let n = self.n();
        let m = self.space.m();
        let w = (F::one() - self.q) / F::from_count(n);
        let mut out = f.scale(self.q);
        let mut fx = vec![F::zero(); m];
        for i in 0..n {
            f.evaluate_at_center_into(i, &mut fx)?;
            let y = self.space.dataset().target(i);
            let row = out.coeff_row_mut(i);
            for l in 0..m {
                row[l] += w * (fx[l] - y[l]);
            }
        }
        Ok(out)
    }

    /// Draws the regularizer with probability q, else a uniform data index.
    /// One f64 uniform per call, so the draw stream is scalar-type agnostic.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> LossTerm {
        let u: f64 = rng.gen();
        let q = self.q.to_f64().expect("q fits f64");
        if u < q {
            LossTerm::Regularizer
        } else {
            let n = self.n();
            let t = (u - q) / (1.0 - q);
            let i = ((t * n as f64) as usize).min(n - 1);
            LossTerm::Data(i)
        }
    }

    /// Schedule constants for this problem, optionally under a scaling law.
    pub fn constants(&self, law: Option<&ScalingLaw<F>>) -> Constants<F> {
        let m = self.space.kernel().embedding_constant();
        let m4 = m * m * m * m;
        Constants {
            lambda: self.q,
            lambda_sq: self.q + (F::one() - self.q) * m4,
            embedding: m,
            rho: law.map_or(F::one(), ScalingLaw::second_moment),
        }
    }

    /// E |grad representer of a drawn component at f|^2, as an exact sum:
    /// q |f|^2 + (1-q)/n sum_i k(x_i, x_i) |f(x_i) - y_i|^2.
    pub fn expected_grad_norm_sq_at(&self, f: &Expansion<F>) -> Result<F> {
        self.check_space(f)?;
        let n = self.n();
        let mut data = F::zero();
        for i in 0..n {
            data += self.space.gram().entry(i, i) * self.residual_norm_sq(f, i)?;
        }
        Ok(self.q * f.norm_squared() + (F::one() - self.q) * data / F::from_count(n))
    }
}

fn r_invalid<F: Real>(radius: F) -> bool {
    radius.is_nan() || !(radius > F::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelFamily, KernelSpec};
    use crate::rkhs::Dataset;
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_problem(q: f64) -> Problem<f64> {
        let kernel = KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap();
        let points = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let targets = vec![vec![1.0], vec![-2.0], vec![0.5]];
        let space = Rkhs::build(kernel, Dataset::new(points, targets).unwrap()).unwrap();
        Problem::new(space, q, f64::INFINITY).unwrap()
    }

    #[test]
    fn rejects_bad_q_and_radius() {
        let p = toy_problem(0.5);
        let space = Arc::clone(p.space());
        for q in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(Problem::new(Arc::clone(&space), q, 1.0).is_err());
        }
        assert!(Problem::new(Arc::clone(&space), 0.5, 0.0).is_err());
        assert!(Problem::new(Arc::clone(&space), 0.5, f64::NAN).is_err());
        assert!(Problem::new(space, 0.5, f64::INFINITY).is_ok());
    }

    #[test]
    fn losses_at_zero() {
        let p = toy_problem(0.5);
        let z = p.space().zero();
        assert_eq!(p.loss_component(LossTerm::Regularizer, &z).unwrap(), 0.0);
        assert_eq!(p.loss_component(LossTerm::Data(1), &z).unwrap(), 2.0);
        // (1-q)/(2n) * sum |y_i|^2 = 0.5 / 6 * 5.25
        let expect = 0.5 * (1.0 + 4.0 + 0.25) / 6.0;
        assert!((p.full_objective(&z).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn regularizer_gradient_is_the_point_itself() {
        let p = toy_problem(0.25);
        let f = p
            .space()
            .expansion_from_coeffs(vec![0.1, -0.4, 2.0])
            .unwrap();
        let g = p.grad_representer(LossTerm::Regularizer, &f).unwrap();
        assert_eq!(g.coeffs(), f.coeffs());
    }

    #[test]
    fn data_gradient_at_zero_is_negative_target_representer() {
        let p = toy_problem(0.5);
        let z = p.space().zero();
        let g = p.grad_representer(LossTerm::Data(0), &z).unwrap();
        let want = p.space().representer(0, &[-1.0]).unwrap();
        assert_eq!(g.coeffs(), want.coeffs());
    }

    #[test]
    fn data_index_out_of_range() {
        let p = toy_problem(0.5);
        let z = p.space().zero();
        assert!(matches!(
            p.loss_component(LossTerm::Data(3), &z),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            p.grad_representer(LossTerm::Data(7), &z),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn sample_index_branches_are_forced_by_the_draw() {
        let p = toy_problem(0.5);
        // u = 0 -> regularizer; u near 1 -> last data index.
        let mut low = StepRng::new(0, 0);
        assert_eq!(p.sample_index(&mut low), LossTerm::Regularizer);
        let mut high = StepRng::new(u64::MAX, 0);
        assert_eq!(p.sample_index(&mut high), LossTerm::Data(2));
    }

    #[test]
    fn sample_index_support_is_complete_for_tiny_n() {
        let p = toy_problem(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut saw_reg = false;
        let mut saw = [false; 3];
        for _ in 0..1000 {
            match p.sample_index(&mut rng) {
                LossTerm::Regularizer => saw_reg = true,
                LossTerm::Data(i) => saw[i] = true,
            }
        }
        assert!(saw_reg && saw.iter().all(|s| *s));
    }

    #[test]
    fn constants_without_law() {
        let p = toy_problem(0.5);
        let c = p.constants(None);
        assert_eq!(c.lambda, 0.5);
        assert_eq!(c.lambda_sq, 1.0);
        assert_eq!(c.embedding, 1.0);
        assert_eq!(c.rho, 1.0);
    }

    #[test]
    fn expected_grad_norm_at_zero_is_weighted_target_energy() {
        let p = toy_problem(0.5);
        let z = p.space().zero();
        let got = p.expected_grad_norm_sq_at(&z).unwrap();
        let want = 0.5 * (1.0 + 4.0 + 0.25) / 3.0;
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn full_gradient_matches_component_average() {
        let p = toy_problem(0.3);
        let f = p
            .space()
            .expansion_from_coeffs(vec![0.2, -1.0, 0.7])
            .unwrap();
        let mut acc = p
            .grad_representer(LossTerm::Regularizer, &f)
            .unwrap()
            .scale(p.q());
        let w = (1.0 - p.q()) / 3.0;
        for i in 0..3 {
            let gi = p.grad_representer(LossTerm::Data(i), &f).unwrap();
            acc = acc.axpy(w, &gi).unwrap();
        }
        let direct = p.full_gradient(&f).unwrap();
        for (a, b) in acc.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() < 1e-14 * (1.0 + b.abs()));
        }
    }
}
