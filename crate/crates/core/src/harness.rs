//! Experiment harness: dataset synthesis and ingestion, the Monte Carlo
//! error-curve driver, and the rate/constant diagnostics the gates read.
//!
//! Trials are embarrassingly parallel. Each trial seeds its own generator
//! as stream `t` of the master seed (counter-based splitting), so results
//! do not depend on which worker ran which trial, and the per-checkpoint
//! merge folds trial results in index order with compensated summation.
//! Re-running with the same config and seed reproduces the curve bit for
//! bit at any worker count.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{solve_ball, ExactSolution};
use crate::kernel::KernelSpec;
use crate::linalg::CompensatedSum;
use crate::objective::{Constants, Problem};
use crate::rkhs::{Dataset, Rkhs};
use crate::scalar::Real;
use crate::sgd::{self, ScalingLaw, StepSchedule};

/// Deterministic target functions for synthetic data, evaluated in f64 so
/// every scalar type sees the same values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetFn {
    /// g = 0 in every output coordinate.
    Zero,
    /// g_j(x) = sin(2 pi sum_t x_t + j)
    Sine,
    /// Output-dependent mix of two frequencies; the default target.
    SinMix,
}

impl TargetFn {
    pub fn name(&self) -> &'static str {
        match self {
            TargetFn::Zero => "zero",
            TargetFn::Sine => "sine",
            TargetFn::SinMix => "sinmix",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "zero" => Some(TargetFn::Zero),
            "sine" => Some(TargetFn::Sine),
            "sinmix" => Some(TargetFn::SinMix),
            _ => None,
        }
    }

    /// Output coordinate j of the target at x.
    pub fn eval<F: Real>(&self, x: &[F], j: usize) -> F {
        let tau = std::f64::consts::TAU;
        let v = match self {
            TargetFn::Zero => 0.0,
            TargetFn::Sine => {
                let s: f64 = x.iter().map(|v| v.to_f64().unwrap()).sum();
                (tau * s + j as f64).sin()
            }
            TargetFn::SinMix => {
                let mut a = 0.0;
                let mut b = 0.0;
                for (t, xv) in x.iter().enumerate() {
                    let xv = xv.to_f64().unwrap();
                    a += (1.0 + 0.5 * ((t + j) % 3) as f64) * xv;
                    b += (0.5 + ((t + 2 * j + 1) % 2) as f64) * xv;
                }
                (tau * a + 0.7 * j as f64).sin() + 0.5 * (tau * b - 0.3 * j as f64).cos()
            }
        };
        F::cast(v)
    }
}

/// Recipe for a synthetic dataset: n points uniform in the unit cube of
/// R^d, m target coordinates from `target` plus centered Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec<F> {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub target: TargetFn,
    pub noise: F,
    pub seed: u64,
}

/// Draws the dataset. Points are redrawn on exact collision, so the
/// pairwise-distinct contract holds by construction; draw order is fixed
/// (all points first, then row-major noise), so a seed pins the dataset.
pub fn synthesize_dataset<F: Real>(spec: &SyntheticSpec<F>) -> Result<Dataset<F>> {
    if spec.n == 0 || spec.d == 0 || spec.m == 0 {
        return Err(Error::InvalidConfig(
            "synthetic datasets need n, d, m all at least 1".into(),
        ));
    }
    let noise = spec.noise.to_f64().unwrap_or(f64::NAN);
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::InvalidConfig(
            "noise level must be finite and nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points: Vec<Vec<F>> = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut attempts = 0;
        loop {
            let candidate: Vec<F> = (0..spec.d).map(|_| F::cast(rng.gen::<f64>())).collect();
            if !points.contains(&candidate) {
                points.push(candidate);
                break;
            }
            attempts += 1;
            if attempts > 1000 {
                return Err(Error::InvalidConfig(
                    "could not draw pairwise-distinct points".into(),
                ));
            }
        }
    }
    let mut targets: Vec<Vec<F>> = Vec::with_capacity(spec.n);
    for p in &points {
        let mut row = Vec::with_capacity(spec.m);
        for j in 0..spec.m {
            let z: f64 = rng.sample(StandardNormal);
            row.push(spec.target.eval(p, j) + spec.noise * F::cast(z));
        }
        targets.push(row);
    }
    Dataset::new(points, targets)
}

/// 17 significant decimal digits: enough to round-trip any f64 exactly.
pub fn format_f64_17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Dataset as CSV with header x1..xd,y1..ym and full-precision values.
pub fn dataset_to_csv<F: Real>(ds: &Dataset<F>) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = (1..=ds.d()).map(|i| format!("x{i}")).collect();
    header.extend((1..=ds.m()).map(|j| format!("y{j}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..ds.n() {
        let mut row: Vec<String> = ds
            .point(i)
            .iter()
            .map(|v| format_f64_17(v.to_f64().unwrap()))
            .collect();
        row.extend(
            ds.target(i)
                .iter()
                .map(|v| format_f64_17(v.to_f64().unwrap())),
        );
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn dataset_from_csv<F: Real>(text: &str) -> Result<Dataset<F>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dataset file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let d = cols.iter().take_while(|c| c.starts_with('x')).count();
    let m = cols.len() - d;
    if d == 0 || m == 0 || !cols[d..].iter().all(|c| c.starts_with('y')) {
        return Err(Error::Parse(
            "dataset header must be x1..xd,y1..ym".into(),
        ));
    }
    let mut points = Vec::new();
    let mut targets = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d + m {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {}",
                lineno + 2,
                fields.len(),
                d + m
            )));
        }
        let parse = |s: &str| -> Result<F> {
            s.parse::<f64>()
                .map(F::cast)
                .map_err(|_| Error::Parse(format!("bad float {s:?} on row {}", lineno + 2)))
        };
        let row_x: Result<Vec<F>> = fields[..d].iter().map(|s| parse(s)).collect();
        let row_y: Result<Vec<F>> = fields[d..].iter().map(|s| parse(s)).collect();
        points.push(row_x?);
        targets.push(row_y?);
    }
    Dataset::new(points, targets)
}

pub fn write_dataset_csv<F: Real>(ds: &Dataset<F>, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(dataset_to_csv(ds).as_bytes())?;
    Ok(())
}

pub fn read_dataset_csv<F: Real>(path: &Path) -> Result<Dataset<F>> {
    let text = std::fs::read_to_string(path)?;
    dataset_from_csv(&text)
}

/// Where the dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource<F> {
    Synthetic(SyntheticSpec<F>),
    File(std::path::PathBuf),
}

/// Full experiment description. `seed` drives the trial streams only; the
/// synthetic dataset has its own seed inside the source.
#[derive(Debug, Clone)]
pub struct ExperimentConfig<F> {
    pub source: DatasetSource<F>,
    pub kernel: KernelSpec<F>,
    pub q: F,
    pub radius: F,
    pub s: F,
    pub trials: u64,
    pub k_max: u64,
    pub checkpoints: Vec<u64>,
    pub law: Option<ScalingLaw<F>>,
    pub seed: u64,
    pub workers: Option<usize>,
}

/// Powers of two from 2^4 up to k_max; just k_max when it is below 16.
pub fn default_checkpoints(k_max: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (4..64)
        .map(|e| 1u64 << e)
        .take_while(|c| *c <= k_max)
        .collect();
    if out.is_empty() {
        out.push(k_max);
    }
    out
}

impl<F: Real> ExperimentConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::InvalidConfig(
                "at least 2 trials are required for standard errors".into(),
            ));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::InvalidConfig("checkpoints must be nonempty".into()));
        }
        for w in self.checkpoints.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidConfig(
                    "checkpoints must be strictly increasing".into(),
                ));
            }
        }
        if self.checkpoints.iter().any(|&c| c == 0 || c > self.k_max) {
            return Err(Error::InvalidConfig(
                "checkpoints must lie in [1, k_max]".into(),
            ));
        }
        Ok(())
    }
}

/// One point of the mean error curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<F> {
    pub k: u64,
    pub mean: F,
    pub std_error: F,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve<F> {
    pub points: Vec<CurvePoint<F>>,
}

impl<F: Real> ErrorCurve<F> {
    /// CSV with header k,mean,stderr,trials and full-precision values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mean,stderr,trials\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.k,
                format_f64_17(p.mean.to_f64().unwrap()),
                format_f64_17(p.std_error.to_f64().unwrap()),
                p.trials
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// A built experiment: everything derived from the config exactly once.
#[derive(Debug)]
pub struct Experiment<F> {
    pub config: ExperimentConfig<F>,
    pub problem: Problem<F>,
    pub constants: Constants<F>,
    pub schedule: StepSchedule<F>,
    pub solution: ExactSolution<F>,
}

/// Resolves the dataset, builds the space and problem, derives the
/// schedule constants and solves for the exact minimizer once.
pub fn build_experiment<F: Real>(config: ExperimentConfig<F>) -> Result<Experiment<F>> {
    config.validate()?;
    let dataset = match &config.source {
        DatasetSource::Synthetic(spec) => synthesize_dataset(spec)?,
        DatasetSource::File(path) => read_dataset_csv(path)?,
    };
    let space = Rkhs::build(config.kernel, dataset)?;
    let problem = Problem::new(space, config.q, config.radius)?;
    let constants = problem.constants(config.law.as_ref());
    let schedule = StepSchedule::new(&constants, config.s)?;
    let solution = solve_ball(&problem)?;
    Ok(Experiment {
        config,
        problem,
        constants,
        schedule,
        solution,
    })
}

impl<F: Real> Experiment<F> {
    /// Mean squared error against the exact minimizer at each checkpoint,
    /// averaged over independent trials. Trial t uses stream t of the
    /// master seed, so the estimate is independent of scheduling; the
    /// merge is a fixed-order compensated fold over trial indices.
    pub fn error_curve(&self) -> Result<ErrorCurve<F>> {
        let cfg = &self.config;
        let run_trials = || -> Result<Vec<Vec<F>>> {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(t);
                    let recs = sgd::run(
                        &self.problem,
                        &self.schedule,
                        &self.solution.f_star,
                        cfg.k_max,
                        &cfg.checkpoints,
                        cfg.law.as_ref(),
                        &mut rng,
                    )?;
                    Ok(recs.into_iter().map(|r| r.error_sq).collect())
                })
                .collect()
        };
        let per_trial = match cfg.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
                .install(run_trials),
            None => run_trials(),
        }?;
        let trials = cfg.trials;
        let t_f = F::cast(trials as f64);
        let mut points = Vec::with_capacity(cfg.checkpoints.len());
        for (j, &k) in cfg.checkpoints.iter().enumerate() {
            let mut sum = CompensatedSum::new();
            for row in &per_trial {
                sum.add(row[j]);
            }
            let mean = sum.value() / t_f;
            let mut dev = CompensatedSum::new();
            for row in &per_trial {
                let d = row[j] - mean;
                dev.add(d * d);
            }
            let var = dev.value() / F::cast((trials - 1) as f64);
            let std_error = (var / t_f).sqrt();
            points.push(CurvePoint {
                k,
                mean,
                std_error,
                trials,
            });
        }
        Ok(ErrorCurve { points })
    }
}

/// Convenience wrapper: build and run in one call.
pub fn monte_carlo_error<F: Real>(config: ExperimentConfig<F>) -> Result<ErrorCurve<F>> {
    build_experiment(config)?.error_curve()
}

/// Pass band for the fitted log-log slope; a clean 1/k decay sits at -1.
pub const SLOPE_GATE: (f64, f64) = (-1.3, -0.8);
/// Largest accepted max/min spread of k*mean over the plateau window.
pub const PLATEAU_GATE: f64 = 3.0;

/// Least-squares fit of ln(mean) against ln(k) over a checkpoint window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit<F> {
    pub slope: F,
    pub intercept: F,
    pub residual_rms: F,
    pub window: (u64, u64),
    pub points_used: usize,
}

/// The window the gates read: the top half of the checkpoint list.
pub fn default_fit_window<F: Real>(curve: &ErrorCurve<F>) -> (u64, u64) {
    let len = curve.points.len();
    let start = len - len.div_ceil(2);
    (curve.points[start].k, curve.points[len - 1].k)
}

pub fn fit_rate<F: Real>(curve: &ErrorCurve<F>, window: (u64, u64)) -> Result<RateFit<F>> {
    let pts: Vec<&CurvePoint<F>> = curve
        .points
        .iter()
        .filter(|p| p.k >= window.0 && p.k <= window.1)
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateCurve(format!(
            "need at least 4 checkpoints in the fit window, found {}",
            pts.len()
        )));
    }
    if pts.iter().any(|p| !(p.mean > F::zero())) {
        return Err(Error::DegenerateCurve(
            "nonpositive mean inside the fit window".into(),
        ));
    }
    let n = F::from_count(pts.len());
    let xs: Vec<F> = pts.iter().map(|p| F::cast(p.k as f64).ln()).collect();
    let ys: Vec<F> = pts.iter().map(|p| p.mean.ln()).collect();
    let x_bar = xs.iter().copied().sum::<F>() / n;
    let y_bar = ys.iter().copied().sum::<F>() / n;
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (*x - x_bar) * (*x - x_bar);
        sxy += (*x - x_bar) * (*y - y_bar);
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let mut rss = F::zero();
    for (x, y) in xs.iter().zip(ys.iter()) {
        let r = *y - (intercept + slope * *x);
        rss += r * r;
    }
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: (rss / n).sqrt(),
        window,
        points_used: pts.len(),
    })
}

/// k * mean_k per checkpoint plus the plateau statistic over the top-half
/// window. A bounded plateau is the observable trace of a 1/k rate with a
/// stable constant; `reference_scale` is the gradient noise at the
/// minimizer divided by lambda^2, the natural scale of that constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantBoundReport<F> {
    pub k_times_mean: Vec<(u64, F)>,
    pub window: (u64, u64),
    pub plateau: F,
    pub grad_norm_sq_at_fstar: F,
    pub reference_scale: F,
}

pub fn constant_bound_report<F: Real>(
    problem: &Problem<F>,
    solution: &ExactSolution<F>,
    curve: &ErrorCurve<F>,
) -> Result<ConstantBoundReport<F>> {
    let k_times_mean: Vec<(u64, F)> = curve
        .points
        .iter()
        .map(|p| (p.k, F::cast(p.k as f64) * p.mean))
        .collect();
    let window = default_fit_window(curve);
    let in_window: Vec<F> = k_times_mean
        .iter()
        .filter(|(k, _)| *k >= window.0 && *k <= window.1)
        .map(|(_, v)| *v)
        .collect();
    let mut lo = F::infinity();
    let mut hi = F::zero();
    for v in &in_window {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !(lo > F::zero()) {
        return Err(Error::DegenerateCurve(
            "nonpositive k*mean inside the plateau window".into(),
        ));
    }
    let grad_norm_sq = problem.expected_grad_norm_sq_at(&solution.f_star)?;
    let q = problem.q();
    Ok(ConstantBoundReport {
        k_times_mean,
        window,
        plateau: hi / lo,
        grad_norm_sq_at_fstar: grad_norm_sq,
        reference_scale: grad_norm_sq / (q * q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn tiny_config(trials: u64, workers: Option<usize>) -> ExperimentConfig<f64> {
        ExperimentConfig {
            source: DatasetSource::Synthetic(SyntheticSpec {
                n: 8,
                d: 2,
                m: 1,
                target: TargetFn::SinMix,
                noise: 0.1,
                seed: 3,
            }),
            kernel: KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap(),
            q: 0.5,
            radius: f64::INFINITY,
            s: 2.0,
            trials,
            k_max: 64,
            checkpoints: vec![1, 16, 32, 64],
            law: None,
            seed: 17,
            workers,
        }
    }

    #[test]
    fn synthesis_is_seed_deterministic() {
        let spec = SyntheticSpec {
            n: 20,
            d: 2,
            m: 2,
            target: TargetFn::SinMix,
            noise: 0.3,
            seed: 44,
        };
        let a = synthesize_dataset::<f64>(&spec).unwrap();
        let b = synthesize_dataset::<f64>(&spec).unwrap();
        for i in 0..20 {
            assert_eq!(a.point(i), b.point(i));
            assert_eq!(a.target(i), b.target(i));
        }
        let c = synthesize_dataset::<f64>(&SyntheticSpec { seed: 45, ..spec }).unwrap();
        assert_ne!(a.point(0), c.point(0));
    }

    #[test]
    fn zero_target_without_noise_is_identically_zero() {
        let ds = synthesize_dataset::<f64>(&SyntheticSpec {
            n: 10,
            d: 3,
            m: 2,
            target: TargetFn::Zero,
            noise: 0.0,
            seed: 1,
        })
        .unwrap();
        for i in 0..10 {
            assert_eq!(ds.target(i), &[0.0, 0.0]);
        }
    }

    #[test]
    fn synthesis_draws_distinct_points_at_scale() {
        let ds = synthesize_dataset::<f64>(&SyntheticSpec {
            n: 200,
            d: 2,
            m: 1,
            target: TargetFn::Sine,
            noise: 0.0,
            seed: 9,
        })
        .unwrap();
        assert_eq!(ds.n(), 200);
    }

    #[test]
    fn dataset_csv_roundtrip_is_exact() {
        let spec = SyntheticSpec {
            n: 12,
            d: 2,
            m: 2,
            target: TargetFn::SinMix,
            noise: 0.2,
            seed: 7,
        };
        let ds = synthesize_dataset::<f64>(&spec).unwrap();
        let text = dataset_to_csv(&ds);
        let back = dataset_from_csv::<f64>(&text).unwrap();
        for i in 0..ds.n() {
            assert_eq!(ds.point(i), back.point(i));
            assert_eq!(ds.target(i), back.target(i));
        }
        assert!(text.starts_with("x1,x2,y1,y2\n"));
    }

    #[test]
    fn config_requires_two_trials() {
        let cfg = tiny_config(1, None);
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn default_checkpoints_are_the_power_grid() {
        assert_eq!(
            default_checkpoints(16384),
            vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384]
        );
        assert_eq!(default_checkpoints(100), vec![16, 32, 64]);
        assert_eq!(default_checkpoints(5), vec![5]);
    }

    #[test]
    fn error_curve_runs_and_records_trials() {
        let curve = monte_carlo_error(tiny_config(4, Some(2))).unwrap();
        assert_eq!(curve.points.len(), 4);
        assert!(curve.points.iter().all(|p| p.trials == 4));
        assert!(curve.points.iter().all(|p| p.mean.is_finite()));
        // k = 1 is the zero start, so the mean error there is |f*|^2 with
        // zero spread across trials.
        assert_eq!(curve.points[0].std_error, 0.0);
    }

    #[test]
    fn error_curve_is_invariant_to_worker_count() {
        let a = monte_carlo_error(tiny_config(6, Some(1))).unwrap();
        let b = monte_carlo_error(tiny_config(6, Some(4))).unwrap();
        for (pa, pb) in a.points.iter().zip(b.points.iter()) {
            assert_eq!(pa.mean.to_bits(), pb.mean.to_bits());
            assert_eq!(pa.std_error.to_bits(), pb.std_error.to_bits());
        }
    }

    #[test]
    fn exact_power_law_fits_exactly() {
        let points: Vec<CurvePoint<f64>> = (4..=12)
            .map(|e| {
                let k = 1u64 << e;
                CurvePoint {
                    k,
                    mean: 7.0 / k as f64,
                    std_error: 0.0,
                    trials: 10,
                }
            })
            .collect();
        let curve = ErrorCurve { points };
        let fit = fit_rate(&curve, (16, 4096)).unwrap();
        assert!((fit.slope - (-1.0)).abs() < 1e-12);
        assert!((fit.intercept - 7.0f64.ln()).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn constant_curve_fits_zero_slope() {
        let points: Vec<CurvePoint<f64>> = (4..=10)
            .map(|e| CurvePoint {
                k: 1u64 << e,
                mean: 3.25,
                std_error: 0.0,
                trials: 5,
            })
            .collect();
        let fit = fit_rate(&ErrorCurve { points }, (16, 1024)).unwrap();
        assert!(fit.slope.abs() < 1e-13);
    }

    #[test]
    fn degenerate_windows_are_rejected() {
        let points: Vec<CurvePoint<f64>> = (4..=10)
            .map(|e| CurvePoint {
                k: 1u64 << e,
                mean: 1.0,
                std_error: 0.0,
                trials: 5,
            })
            .collect();
        let curve = ErrorCurve { points };
        assert!(matches!(
            fit_rate(&curve, (16, 64)),
            Err(Error::DegenerateCurve(_))
        ));
        let mut bad = curve.clone();
        bad.points[5].mean = 0.0;
        assert!(matches!(
            fit_rate(&bad, (16, 1024)),
            Err(Error::DegenerateCurve(_))
        ));
    }

    #[test]
    fn plateau_statistic_arithmetic() {
        // Exact 1/k curve: k * mean is constant, plateau exactly 1.
        let exp = build_experiment(tiny_config(2, None)).unwrap();
        let one_over_k: Vec<CurvePoint<f64>> = (4..=12)
            .map(|e| {
                let k = 1u64 << e;
                CurvePoint {
                    k,
                    mean: 7.0 / k as f64,
                    std_error: 0.0,
                    trials: 2,
                }
            })
            .collect();
        let rep = constant_bound_report(
            &exp.problem,
            &exp.solution,
            &ErrorCurve { points: one_over_k },
        )
        .unwrap();
        assert_eq!(rep.plateau, 1.0);
        assert!(rep.reference_scale >= rep.grad_norm_sq_at_fstar);

        // Slope -1/2 over 2^4..2^12: the top-half window spans 2^8..2^12,
        // so k * mean grows by 2^(4/2) = 4 across it.
        let half: Vec<CurvePoint<f64>> = (4..=12)
            .map(|e| {
                let k = 1u64 << e;
                CurvePoint {
                    k,
                    mean: 1.0 / (k as f64).sqrt(),
                    std_error: 0.0,
                    trials: 2,
                }
            })
            .collect();
        let rep =
            constant_bound_report(&exp.problem, &exp.solution, &ErrorCurve { points: half })
                .unwrap();
        assert_eq!(rep.window, (256, 4096));
        assert!((rep.plateau - 4.0).abs() < 1e-12);
    }
}
