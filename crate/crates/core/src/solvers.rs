//! Maximum-likelihood reconstruction: nonlinear conjugate gradient and ADMM.

use std::io::Write;
use std::time::Instant;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, FilterConfig};
use crate::error::{HoloError, Result};
use crate::objective::Problem;

/// Starting point for an iterative solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    #[default]
    Zeros,
    /// Start from the Wiener-filter estimate (needs OS >= 2 and d >= n).
    WienerWarmStart,
    #[serde(skip)]
    Given(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `||grad||_F / n` falls below this.
    pub grad_tol: f64,
    pub admm_rho: f64,
    /// Stop once `||U - F(X) - B||_F / max(1, ||B||_F)` falls below this.
    pub admm_primal_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Largest ratio between consecutive backtracking trials.
    pub backtrack_factor: f64,
    /// First trial step, and lower bound on later first trials.
    pub initial_step: f64,
    pub max_backtracks: usize,
    pub init_mode: InitMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            grad_tol: 1e-7,
            admm_rho: 10.0,
            admm_primal_tol: 1e-6,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            initial_step: 1.0,
            max_backtracks: 60,
            init_mode: InitMode::Zeros,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("admm_rho", self.admm_rho),
            ("admm_primal_tol", self.admm_primal_tol),
            ("armijo_c1", self.armijo_c1),
            ("initial_step", self.initial_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HoloError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.armijo_c1 < 1.0) {
            return Err(HoloError::Config("armijo_c1 must be < 1".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(HoloError::Config("backtrack_factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    GradientTolerance,
    PrimalTolerance,
    MaxIterations,
    LineSearchFailed,
    /// Direct (non-iterative) reconstruction.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    /// Gradient norm for CG, scaled primal residual for ADMM.
    pub residual: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub image: Array2<f64>,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub reason: StopReason,
}

impl ReconResult {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |t| t.iter)
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.trace.last().map_or(0.0, |t| t.elapsed_seconds)
    }

    /// `iter,objective,residual,elapsed_seconds` with a header row.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "objective", "residual", "elapsed_seconds"])
            .map_err(csv_err)?;
        for t in &self.trace {
            w.write_record([
                t.iter.to_string(),
                format!("{:e}", t.objective),
                format!("{:e}", t.residual),
                format!("{:.6}", t.elapsed_seconds),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> HoloError {
    HoloError::Io(std::io::Error::other(e))
}

fn frob_sqr(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

fn initial_estimate(problem: &Problem, config: &SolverConfig) -> Result<Array2<f64>> {
    let n = problem.n();
    match &config.init_mode {
        InitMode::Zeros => Ok(Array2::zeros((n, n))),
        InitMode::WienerWarmStart => Ok(baselines::wiener_filter(
            problem.measurement(),
            problem.operator().reference(),
            &FilterConfig::default(),
        )?
            .into_inner()),
        InitMode::Given(x) => {
            if x.dim() != (n, n) {
                return Err(HoloError::Geometry(format!(
                    "initial estimate is {:?}, expected {n}x{n}",
                    x.dim()
                )));
            }
            Ok(x.clone())
        }
    }
}

const MIN_SHRINK: f64 = 1e-3;

/// Armijo backtracking along `dir`; returns the accepted step, point and value.
fn backtrack(
    problem: &Problem,
    config: &SolverConfig,
    x: &Array2<f64>,
    f: f64,
    slope: f64,
    dir: &Array2<f64>,
    mut step: f64,
) -> Result<Option<(f64, Array2<f64>, f64)>> {
    for _ in 0..config.max_backtracks {
        let trial = x + &(dir * step);
        let ft = problem.nll(&trial)?;
        if ft.is_finite() && ft <= f + config.armijo_c1 * step * slope {
            return Ok(Some((step, trial, ft)));
        }
        // minimizer of the quadratic through f, slope and ft, kept within
        // [MIN_SHRINK, backtrack_factor] times the failed step
        let q = -slope * step * step / (2.0 * (ft - f - slope * step));
        step = if q.is_finite() {
            q.clamp(MIN_SHRINK * step, config.backtrack_factor * step)
        } else {
            MIN_SHRINK * step
        };
    }
    Ok(None)
}

/// Polak-Ribiere+ nonlinear conjugate gradient with Armijo backtracking.
///
/// The search direction restarts to steepest descent whenever `beta` clips at
/// zero or the direction fails to descend. A failed line search retries once
/// along `-grad`; a second failure ends the run unconverged at the current
/// (best) iterate.
pub fn solve_cg(problem: &Problem, config: &SolverConfig) -> Result<ReconResult> {
    config.validate()?;
    let start = Instant::now();
    let n = problem.n() as f64;
    let mut x = initial_estimate(problem, config)?;
    let (mut f, mut g) = problem.value_and_grad(&x)?;
    let mut trace = vec![TraceEntry {
        iter: 0,
        objective: f,
        residual: frob_sqr(&g).sqrt() / n,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }];
    let mut dir = -&g;
    let mut prev: Option<(f64, f64)> = None; // (step, slope)
    let mut reason = StopReason::MaxIterations;

    for iter in 1..=config.max_iters {
        let gnorm2 = frob_sqr(&g);
        if gnorm2.sqrt() / n <= config.grad_tol {
            reason = StopReason::GradientTolerance;
            break;
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            dir = -&g;
            slope = -gnorm2;
        }
        // scaled previous step, never below the unit step: the quadratic
        // part of the objective has unit curvature
        let guess = match prev {
            Some((step, prev_slope)) => (step * prev_slope / slope).clamp(1e-12, 1e12).max(config.initial_step),
            None => config.initial_step,
        };
        let accepted = match backtrack(problem, config, &x, f, slope, &dir, guess)? {
            Some(a) => Some((a, slope)),
            None => {
                dir = -&g;
                let sd_slope = -gnorm2;
                backtrack(problem, config, &x, f, sd_slope, &dir, config.initial_step)?
                    .map(|a| (a, sd_slope))
            }
        };
        let Some(((step, x_new, f_new), used_slope)) = accepted else {
            reason = StopReason::LineSearchFailed;
            break;
        };
        let g_new = problem.grad(&x_new)?;
        let beta = (dot(&g_new, &(&g_new - &g)) / gnorm2).max(0.0);
        dir = &dir * beta - &g_new;
        prev = Some((step, used_slope));
        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(TraceEntry {
            iter,
            objective: f,
            residual: frob_sqr(&g).sqrt() / n,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }
    if reason == StopReason::MaxIterations && frob_sqr(&g).sqrt() / n <= config.grad_tol {
        reason = StopReason::GradientTolerance;
    }
    Ok(ReconResult {
        image: x,
        trace,
        converged: reason == StopReason::GradientTolerance,
        reason,
    })
}

/// Minimizer over `gamma >= 0` of `gamma^2 - y ln gamma^2 + rho (gamma - c)^2`.
pub fn prox_magnitude(c_abs: f64, y: f64, rho: f64) -> f64 {
    (rho * c_abs + (rho * rho * c_abs * c_abs + 4.0 * (1.0 + rho) * y).sqrt()) / (2.0 * (1.0 + rho))
}

/// Per-pixel field update. Occluded pixels carry no data term, so the
/// penalty alone is minimized at `U = C`.
pub fn admm_field_update(c: Complex64, y: f64, rho: f64, measured: bool) -> Complex64 {
    if !measured {
        return c;
    }
    let c_abs = c.norm();
    if c_abs == 0.0 {
        Complex64::new((y / (1.0 + rho)).sqrt(), 0.0)
    } else {
        c * (prox_magnitude(c_abs, y, rho) / c_abs)
    }
}

/// ADMM on the split `U = F(X) + B` with scaled dual `V`.
pub fn solve_admm(problem: &Problem, config: &SolverConfig) -> Result<ReconResult> {
    config.validate()?;
    let rho = config.admm_rho;
    let start = Instant::now();
    let op = problem.operator();
    let meas = problem.measurement();
    let b = op.reference_field().values();
    let b_scale = op.reference_field().norm_sqr().sqrt().max(1.0);

    let mut x = initial_estimate(problem, config)?;
    let mut fx = op.forward(&x)?.into_inner();
    let mut v: Array2<Complex64> = Array2::zeros(b.dim());
    let mut u = &fx + b;
    let mut trace = vec![TraceEntry {
        iter: 0,
        objective: problem.nll(&x)?,
        residual: 0.0,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }];
    let mut reason = StopReason::MaxIterations;
    let inv_rho = 1.0 / rho;

    for iter in 1..=config.max_iters {
        Zip::from(&mut u)
            .and(&fx)
            .and(b)
            .and(&v)
            .and(meas.noisy_intensity())
            .and(meas.mask().values())
            .for_each(|u, &f, &b, &v, &y, &m| {
                let c = f + b - v * inv_rho;
                *u = admm_field_update(c, y, rho, m != 0.0);
            });

        let target = Zip::from(&u).and(&v).and(b).map_collect(|&u, &v, &b| u + v * inv_rho - b);
        x = op.adjoint_raw(target)?;
        fx = op.forward(&x)?.into_inner();

        let mut primal = 0.0;
        Zip::from(&mut v).and(&u).and(&fx).and(b).for_each(|v, &u, &f, &b| {
            let r = u - f - b;
            primal += r.norm_sqr();
            *v += r * rho;
        });
        let primal = primal.sqrt() / b_scale;
        let objective = problem.value_of_field(&(&fx + b));
        if !objective.is_finite() {
            return Err(HoloError::Numeric(format!("ADMM objective diverged at iteration {iter}")));
        }
        trace.push(TraceEntry {
            iter,
            objective,
            residual: primal,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        if primal <= config.admm_primal_tol {
            reason = StopReason::PrimalTolerance;
            break;
        }
    }
    Ok(ReconResult {
        image: x,
        trace,
        converged: reason == StopReason::PrimalTolerance,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{self, BeamstopMask};
    use crate::layout::{ImageGrid, Layout};
    use crate::references::{self, ReferenceKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_problem(n: usize, np: f64, seed: u64) -> Problem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..1.0));
        let lay = Layout::new(
            ImageGrid::new(x).unwrap(),
            references::generate(ReferenceKind::Ura, n).unwrap(),
            n,
            2.0,
            2.0,
        )
        .unwrap();
        let meas = detector::simulate(&lay, ReferenceKind::Ura, BeamstopMask::none(2 * n, 6 * n), np, seed).unwrap();
        Problem::from_measurement(meas).unwrap()
    }

    #[test]
    fn zero_field_branch() {
        let u = admm_field_update(Complex64::default(), 4.0, 1.0, true);
        assert!((u.norm() - 2f64.sqrt()).abs() < 1e-15);
        let c = Complex64::new(0.3, -0.7);
        assert_eq!(admm_field_update(c, 5.0, 2.0, false), c);
    }

    #[test]
    fn field_update_keeps_phase() {
        let c = Complex64::new(-1.5, 0.25);
        let u = admm_field_update(c, 3.0, 2.0, true);
        let (pu, pc) = (u / u.norm(), c / c.norm());
        assert!((pu - pc).norm() < 1e-15);
    }

    #[test]
    fn x_update_inverts_forward() {
        let p = small_problem(6, 1.0, 1);
        let op = p.operator();
        let x0 = Array2::from_shape_fn((6, 6), |(i, j)| (i as f64 - j as f64) * 0.1);
        let u = op.forward(&x0).unwrap();
        let back = op.adjoint(&u).unwrap();
        assert!((&back - &x0).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn cg_trace_is_monotone() {
        for (k, np) in [0.1, 1.0, 10.0].into_iter().enumerate() {
            let p = small_problem(8, np, 10 + k as u64);
            let cfg = SolverConfig { max_iters: 200, ..Default::default() };
            let r = solve_cg(&p, &cfg).unwrap();
            for w in r.trace.windows(2) {
                assert!(w[1].objective <= w[0].objective, "np {np}");
            }
        }
    }

    #[test]
    fn cg_solves_zero_data_quadratic() {
        let p = small_problem(8, 1.0, 3);
        let zero = p.measurement().with_intensity(Array2::zeros((16, 48))).unwrap();
        let p = Problem::new(zero, p.operator().clone()).unwrap();
        let expect = -p.operator().adjoint(p.operator().reference_field()).unwrap();
        let r = solve_cg(&p, &SolverConfig::default()).unwrap();
        let err = (&r.image - &expect).iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn deterministic_runs() {
        let p = small_problem(8, 1.0, 4);
        let cfg = SolverConfig { max_iters: 50, ..Default::default() };
        assert_eq!(solve_cg(&p, &cfg).unwrap().image, solve_cg(&p, &cfg).unwrap().image);
        assert_eq!(solve_admm(&p, &cfg).unwrap().image, solve_admm(&p, &cfg).unwrap().image);
    }

    #[test]
    fn bad_rho_is_config_error() {
        let p = small_problem(4, 1.0, 5);
        let cfg = SolverConfig { admm_rho: 0.0, ..Default::default() };
        assert!(matches!(solve_admm(&p, &cfg), Err(HoloError::Config(_))));
        let cfg = SolverConfig { admm_rho: -1.0, ..Default::default() };
        assert!(matches!(solve_admm(&p, &cfg), Err(HoloError::Config(_))));
    }

    #[test]
    fn trace_csv_has_header() {
        let p = small_problem(4, 1.0, 6);
        let r = solve_cg(&p, &SolverConfig { max_iters: 3, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,objective,residual,elapsed_seconds\n"));
        assert_eq!(text.lines().count(), r.trace.len() + 1);
    }
}
