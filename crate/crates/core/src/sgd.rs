//! Projected stochastic gradient descent over the expansion span.
//!
//! The iteration starts at F_1 = 0 and, at step k with rate eta_k, draws a
//! component index. Drawing the regularizer contracts the whole expansion:
//!
//!   F_{k+1} = (1 - eta_k) F_k,
//!
//! and drawing data point i adds one representer atom and reprojects:
//!
//!   Ftilde  = F_k + eta_k k(., x_i)(y_i - F_k(x_i)),
//!   F_{k+1} = Ftilde / max(1, |Ftilde|_H / r).
//!
//! So after k - 1 steps the iterate is a rescaled sum of at most k - 1
//! atoms, and the number of atoms N_k is binomial over k - 1 draws with
//! success probability 1 - q. [`sgd_step`] implements exactly the update
//! above; [`sgd_step_general`] implements the generic projected step
//! through gradient representers, an axpy and a metric projection, with an
//! optional random step scaling. The two routes are kept separate on
//! purpose: their agreement is one of the trajectory oracles.
//!
//! The step size schedule is eta_k = (s / lambda) / (b + k) with
//! b = 2 rho (Lambda / lambda)^2 s, which keeps every eta_k at or below
//! lambda / (2 Lambda^2 rho) and hence keeps the per-step contraction
//! inequality 1 - 2 lambda eta + 2 Lambda^2 rho eta^2 <= 1 - lambda eta
//! valid for all k.

use rand::Rng;

use crate::error::{Error, Result};
use crate::objective::{Constants, LossTerm, Problem};
use crate::rkhs::{AtomList, Expansion, Rkhs};
use crate::scalar::Real;
use std::sync::Arc;

/// Discrete law for the random step scaling, mean one by construction.
/// Values may be negative; zero is rejected because a zero scaling wastes
/// a draw without moving the iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingLaw<F> {
    atoms: Vec<(F, F)>,
}

const LAW_SUM_TOL: f64 = 1e-12;

impl<F: Real> ScalingLaw<F> {
    /// Builds a law from (value, probability) pairs. Probabilities must be
    /// positive and sum to one; values must be finite, nonzero, and have
    /// mean one. Sums are checked in f64 within 1e-12.
    pub fn new(atoms: Vec<(F, F)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidScalingLaw("law must have at least one atom".into()));
        }
        let mut prob_sum = 0.0f64;
        let mut mean = 0.0f64;
        for (value, prob) in &atoms {
            let v = value.to_f64().unwrap_or(f64::NAN);
            let p = prob.to_f64().unwrap_or(f64::NAN);
            if !v.is_finite() || v == 0.0 {
                return Err(Error::InvalidScalingLaw(
                    "values must be finite and nonzero".into(),
                ));
            }
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidScalingLaw(
                    "probabilities must be positive".into(),
                ));
            }
            prob_sum += p;
            mean += p * v;
        }
        if (prob_sum - 1.0).abs() > LAW_SUM_TOL {
            return Err(Error::InvalidScalingLaw(format!(
                "weights must sum to 1, got {prob_sum}"
            )));
        }
        if (mean - 1.0).abs() > LAW_SUM_TOL {
            return Err(Error::InvalidScalingLaw(format!(
                "mean must equal 1, got {mean}"
            )));
        }
        Ok(Self { atoms })
    }

    /// The deterministic unit scaling.
    pub fn identity() -> Self {
        Self {
            atoms: vec![(F::one(), F::one())],
        }
    }

    pub fn atoms(&self) -> &[(F, F)] {
        &self.atoms
    }

    /// rho = E[gamma^2] >= 1, with equality only for the unit law.
    pub fn second_moment(&self) -> F {
        let mut acc = F::zero();
        for (value, prob) in &self.atoms {
            acc += *prob * *value * *value;
        }
        acc
    }

    /// Draws a value. A single-atom law consumes no randomness, so runs
    /// under the unit law replay the exact draw stream of plain runs.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        if self.atoms.len() == 1 {
            return self.atoms[0].0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0f64;
        for (value, prob) in &self.atoms {
            acc += prob.to_f64().expect("probability fits f64");
            if u < acc {
                return *value;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
}

/// eta_k = (s / lambda) / (b + k), with b chosen so the contraction
/// inequality holds at every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule<F> {
    s: F,
    lambda: F,
    lambda_cap: F,
    rho: F,
    b: F,
}

impl<F: Real> StepSchedule<F> {
    pub fn new(constants: &Constants<F>, s: F) -> Result<Self> {
        if !s.is_finite() || !(s > F::one()) {
            return Err(Error::InvalidStepScale);
        }
        let lambda = constants.lambda;
        let lambda_cap = constants.lambda_sq.sqrt();
        let rho = constants.rho;
        let ratio = lambda_cap / lambda;
        let b = F::cast(2.0) * rho * ratio * ratio * s;
        Ok(Self {
            s,
            lambda,
            lambda_cap,
            rho,
            b,
        })
    }

    pub fn eta(&self, k: u64) -> F {
        (self.s / self.lambda) / (self.b + F::cast(k as f64))
    }

    pub fn s(&self) -> F {
        self.s
    }

    pub fn b(&self) -> F {
        self.b
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn rho(&self) -> F {
        self.rho
    }

    /// Largest step size the contraction argument tolerates.
    pub fn eta_cap(&self) -> F {
        self.lambda / (F::cast(2.0) * self.lambda_cap * self.lambda_cap * self.rho)
    }

    /// Left and right side of the per-step contraction inequality at k.
    pub fn decay_inequality(&self, k: u64) -> (F, F) {
        let eta = self.eta(k);
        let two = F::cast(2.0);
        let lhs = F::one() - two * self.lambda * eta
            + two * self.lambda_cap * self.lambda_cap * self.rho * eta * eta;
        let rhs = F::one() - self.lambda * eta;
        (lhs, rhs)
    }
}

/// Mutable descent state: the step counter (starting at 1), the iterate,
/// the count of data-index draws so far, and the optional atom mirror.
#[derive(Debug, Clone)]
pub struct SgdState<F> {
    k: u64,
    f: Expansion<F>,
    n_atoms: u64,
    atoms: Option<AtomList<F>>,
    scratch: Vec<F>,
}

impl<F: Real> SgdState<F> {
    /// Fresh state at F_1 = 0.
    pub fn new(space: &Arc<Rkhs<F>>) -> Self {
        let m = space.m();
        Self {
            k: 1,
            f: space.zero(),
            n_atoms: 0,
            atoms: None,
            scratch: vec![F::zero(); m],
        }
    }

    /// Warm start from an arbitrary feasible expansion. The atom mirror is
    /// unavailable for warm starts, since the start is not a sum of atoms.
    pub fn with_initial(f: Expansion<F>) -> Self {
        let m = f.space().m();
        Self {
            k: 1,
            f,
            n_atoms: 0,
            atoms: None,
            scratch: vec![F::zero(); m],
        }
    }

    /// Turns on the arrival-order mirror. Only valid before any step has
    /// been taken and only from the zero start.
    pub fn enable_atom_mirror(&mut self) -> Result<()> {
        if self.k != 1 || self.f.coeffs().iter().any(|c| *c != F::zero()) {
            return Err(Error::InvalidConfig(
                "atom mirror must be enabled on a fresh zero state".into(),
            ));
        }
        self.atoms = Some(AtomList::new());
        Ok(())
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn f(&self) -> &Expansion<F> {
        &self.f
    }

    /// N_k: how many of the k - 1 draws so far selected a data index.
    pub fn n_atoms(&self) -> u64 {
        self.n_atoms
    }

    pub fn atoms(&self) -> Option<&AtomList<F>> {
        self.atoms.as_ref()
    }

    fn check_problem(&self, p: &Problem<F>) -> Result<()> {
        if Arc::ptr_eq(self.f.space(), p.space()) {
            Ok(())
        } else {
            Err(Error::MismatchedSpace)
        }
    }
}

/// One specialized step: contract on a regularizer draw, otherwise add the
/// residual atom at the drawn center and rescale into the ball.
pub fn sgd_step<F: Real, R: Rng + ?Sized>(
    state: &mut SgdState<F>,
    p: &Problem<F>,
    sched: &StepSchedule<F>,
    rng: &mut R,
) -> Result<()> {
    state.check_problem(p)?;
    let eta = sched.eta(state.k);
    match p.sample_index(rng) {
        LossTerm::Regularizer => {
            let c = F::one() - eta;
            state.f.scale_in_place(c);
            if let Some(atoms) = state.atoms.as_mut() {
                atoms.scale_all(c);
            }
        }
        LossTerm::Data(i) => {
            let m = p.space().m();
            let SgdState { f, scratch, .. } = state;
            f.evaluate_at_center_into(i, scratch)?;
            let y = p.space().dataset().target(i);
            let mut w = vec![F::zero(); m];
            for l in 0..m {
                w[l] = eta * (y[l] - scratch[l]);
            }
            {
                let row = f.coeff_row_mut(i);
                for l in 0..m {
                    row[l] += w[l];
                }
            }
            let r = p.radius();
            if r.is_finite() {
                let scale = F::one() / (f.norm() / r).max(F::one());
                f.scale_in_place(scale);
                if let Some(atoms) = state.atoms.as_mut() {
                    atoms.push(i, w);
                    atoms.scale_all(scale);
                }
            } else if let Some(atoms) = state.atoms.as_mut() {
                atoms.push(i, w);
            }
            state.n_atoms += 1;
        }
    }
    state.k += 1;
    Ok(())
}

/// One generic projected step, F <- Proj(F - eta gamma grad), composed
/// from the objective's gradient representers and the ball projection.
/// With the unit law this must reproduce [`sgd_step`] coefficientwise up
/// to round-off; it is deliberately a different arithmetic route.
pub fn sgd_step_general<F: Real, R: Rng + ?Sized>(
    state: &mut SgdState<F>,
    p: &Problem<F>,
    sched: &StepSchedule<F>,
    law: &ScalingLaw<F>,
    rng: &mut R,
) -> Result<()> {
    state.check_problem(p)?;
    if state.atoms.is_some() {
        return Err(Error::InvalidConfig(
            "atom mirror is only maintained by the specialized step".into(),
        ));
    }
    let eta = sched.eta(state.k);
    let term = p.sample_index(rng);
    let gamma = law.sample(rng);
    let grad = p.grad_representer(term, &state.f)?;
    let stepped = state.f.axpy(-(eta * gamma), &grad)?;
    state.f = stepped.project_ball(p.radius())?;
    if let LossTerm::Data(_) = term {
        state.n_atoms += 1;
    }
    state.k += 1;
    Ok(())
}

/// One checkpoint row of a run: iterate index, squared distance to the
/// reference minimizer, and the atom count so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord<F> {
    pub k: u64,
    pub error_sq: F,
    pub n_atoms: u64,
}

/// Runs one trajectory from F_1 = 0 to F_{k_max}, recording the squared
/// error against `f_star` at each checkpoint. Checkpoints must be strictly
/// increasing and within [1, k_max]. A scaling law routes every step
/// through the generic update; otherwise the specialized update runs.
pub fn run<F: Real, R: Rng + ?Sized>(
    p: &Problem<F>,
    sched: &StepSchedule<F>,
    f_star: &Expansion<F>,
    k_max: u64,
    checkpoints: &[u64],
    law: Option<&ScalingLaw<F>>,
    rng: &mut R,
) -> Result<Vec<RunRecord<F>>> {
    if k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    for w in checkpoints.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidConfig(
                "checkpoints must be strictly increasing".into(),
            ));
        }
    }
    if checkpoints.iter().any(|&c| c == 0 || c > k_max) {
        return Err(Error::InvalidConfig(
            "checkpoints must lie in [1, k_max]".into(),
        ));
    }
    let mut state = SgdState::new(p.space());
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for k in 1..=k_max {
        if next < checkpoints.len() && checkpoints[next] == k {
            let error_sq = state.f.sub(f_star)?.norm_squared();
            out.push(RunRecord {
                k,
                error_sq,
                n_atoms: state.n_atoms,
            });
            next += 1;
        }
        if k < k_max {
            match law {
                None => sgd_step(&mut state, p, sched, rng)?,
                Some(l) => sgd_step_general(&mut state, p, sched, l, rng)?,
            }
        }
    }
    Ok(out)
}

/// Empirical audit of the atom-count distribution at step k: N_k must stay
/// at or below k - 1 on every trajectory and its mean must sit within
/// `band_sigmas` standard errors of (k - 1)(1 - q).
#[derive(Debug, Clone, Copy)]
pub struct BinomialCheck<F> {
    pub k: u64,
    pub trials: u64,
    pub mean: F,
    pub expected_mean: F,
    pub band: F,
    pub max_count: u64,
    pub pass: bool,
}

pub fn binomial_atom_check<F: Real, R: Rng + ?Sized>(
    p: &Problem<F>,
    sched: &StepSchedule<F>,
    k: u64,
    trials: u64,
    band_sigmas: F,
    rng: &mut R,
) -> Result<BinomialCheck<F>> {
    if k == 0 || trials == 0 {
        return Err(Error::InvalidConfig(
            "binomial check needs k >= 1 and trials >= 1".into(),
        ));
    }
    let mut sum: u64 = 0;
    let mut max_count: u64 = 0;
    for _ in 0..trials {
        let mut state = SgdState::new(p.space());
        while state.k < k {
            sgd_step(&mut state, p, sched, rng)?;
        }
        sum += state.n_atoms;
        max_count = max_count.max(state.n_atoms);
    }
    let q = p.q();
    let draws = F::cast((k - 1) as f64);
    let t = F::cast(trials as f64);
    let mean = F::cast(sum as f64) / t;
    let expected_mean = draws * (F::one() - q);
    let band = band_sigmas * (draws * q * (F::one() - q) / t).sqrt();
    let pass = (mean - expected_mean).abs() <= band && max_count < k;
    Ok(BinomialCheck {
        k,
        trials,
        mean,
        expected_mean,
        band,
        max_count,
        pass,
    })
}

/// Exact conditional expectation of |F' - f_star|^2 after one generic
/// unconstrained step from `f`, as a finite sum over the component index
/// and the scaling law. This is the quantity the per-step contraction
/// inequality bounds; the radius must be infinite so no projection enters.
pub fn expected_error_sq_after_step<F: Real>(
    p: &Problem<F>,
    f: &Expansion<F>,
    f_star: &Expansion<F>,
    eta: F,
    law: Option<&ScalingLaw<F>>,
) -> Result<F> {
    if !p.radius().is_infinite() {
        return Err(Error::InvalidConfig(
            "step expectation is defined for the unconstrained radius".into(),
        ));
    }
    let identity = ScalingLaw::identity();
    let law = law.unwrap_or(&identity);
    let q = p.q();
    let n = p.n();
    let data_prob = (F::one() - q) / F::from_count(n);
    let mut acc = F::zero();
    for (gamma, prob) in law.atoms() {
        let step = -(eta * *gamma);
        let g0 = p.grad_representer(LossTerm::Regularizer, f)?;
        let moved = f.axpy(step, &g0)?.sub(f_star)?.norm_squared();
        acc += q * *prob * moved;
        for i in 0..n {
            let gi = p.grad_representer(LossTerm::Data(i), f)?;
            let moved = f.axpy(step, &gi)?.sub(f_star)?.norm_squared();
            acc += data_prob * *prob * moved;
        }
    }
    Ok(acc)
}
