//! L1 baseline: `min ||y - A v||^2 / 2 + lambda ||v||_1` by accelerated
//! proximal gradient, followed by per-group top-`l` selection and a
//! least-squares debias on the selected columns.

use faer::MatRef;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lstsq::{
    adjoint_mat_vec, gather_columns, mat_vec, min_norm_least_squares, norm, residual_norm,
};
use super::{
    global_support, group_top_l, GroupShape, GroupSparseEstimate, SolverReport, StopReason,
};
use crate::error::{Error, Result};

/// Regularization weight, expressed as a fraction of `||A^* y||_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaSchedule {
    Fixed {
        fraction: f64,
    },
    /// Start at `start`, halve each stage, finish at `end` (warm-started).
    Continuation {
        start: f64,
        end: f64,
    },
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule::Continuation {
            start: 0.1,
            end: 1e-3,
        }
    }
}

impl LambdaSchedule {
    fn stages(&self, scale: f64) -> Vec<f64> {
        match *self {
            LambdaSchedule::Fixed { fraction } => vec![fraction * scale],
            LambdaSchedule::Continuation { start, end } => {
                let mut out = Vec::new();
                let mut frac = start;
                while frac > end {
                    out.push(frac * scale);
                    frac /= 2.0;
                }
                out.push(end * scale);
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoSettings {
    pub lambda: LambdaSchedule,
    /// Iteration cap per continuation stage.
    pub max_iterations: usize,
    /// Relative step tolerance `||v_k - v_{k-1}|| <= tol * ||v_k||`.
    pub tolerance: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self {
            lambda: LambdaSchedule::default(),
            max_iterations: 2000,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaOutcome {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

fn soft_threshold(z: Complex64, threshold: f64) -> Complex64 {
    let magnitude = z.norm();
    if magnitude <= threshold {
        Complex64::new(0.0, 0.0)
    } else {
        z * (1.0 - threshold / magnitude)
    }
}

/// Upper bound on `||A||_2^2` by power iteration on `A^* A`.
fn lipschitz(a: MatRef<'_, Complex64>) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 1.0;
    }
    let mut v = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let mut estimate = 0.0;
    for _ in 0..500 {
        let w = adjoint_mat_vec(a, &mat_vec(a, &v));
        let w_norm = norm(&w);
        if w_norm == 0.0 {
            return 1.0;
        }
        let converged = (w_norm - estimate).abs() <= 1e-9 * w_norm;
        estimate = w_norm;
        v = w.into_iter().map(|x| x / w_norm).collect();
        if converged {
            break;
        }
    }
    estimate * 1.01
}

/// FISTA with adaptive momentum restart for a fixed `lambda`.
pub fn fista_lasso(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    lambda: f64,
    warm_start: Option<&[Complex64]>,
    max_iterations: usize,
    tolerance: f64,
) -> FistaOutcome {
    fista_with_step(
        y,
        a,
        lambda,
        warm_start,
        max_iterations,
        tolerance,
        1.0 / lipschitz(a),
    )
}

fn fista_with_step(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    lambda: f64,
    warm_start: Option<&[Complex64]>,
    max_iterations: usize,
    tolerance: f64,
    step: f64,
) -> FistaOutcome {
    let n = a.ncols();
    let mut x: Vec<Complex64> =
        warm_start.map_or_else(|| vec![Complex64::new(0.0, 0.0); n], <[_]>::to_vec);
    let mut z = x.clone();
    let mut momentum = 1.0f64;
    for k in 1..=max_iterations {
        let residual: Vec<Complex64> = mat_vec(a, &z).iter().zip(y).map(|(p, q)| p - q).collect();
        let gradient = adjoint_mat_vec(a, &residual);
        let next: Vec<Complex64> = z
            .iter()
            .zip(&gradient)
            .map(|(zi, gi)| soft_threshold(zi - gi * step, lambda * step))
            .collect();

        let delta: Vec<Complex64> = next.iter().zip(&x).map(|(p, q)| p - q).collect();
        let delta_norm = norm(&delta);
        let next_norm = norm(&next);

        // restart momentum when the step opposes the extrapolation direction
        let alignment: f64 = z
            .iter()
            .zip(&next)
            .zip(&delta)
            .map(|((zi, ni), di)| ((zi - ni).conj() * di).re)
            .sum();
        let next_momentum = if alignment > 0.0 {
            1.0
        } else {
            (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0
        };
        let beta = if alignment > 0.0 {
            0.0
        } else {
            (momentum - 1.0) / next_momentum
        };
        z = next
            .iter()
            .zip(&delta)
            .map(|(ni, di)| ni + di * beta)
            .collect();
        momentum = next_momentum;
        x = next;

        if delta_norm <= tolerance * next_norm.max(f64::MIN_POSITIVE) {
            return FistaOutcome {
                solution: x,
                iterations: k,
                converged: true,
            };
        }
    }
    FistaOutcome {
        solution: x,
        iterations: max_iterations,
        converged: false,
    }
}

fn enforce_groups(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    shape: GroupShape,
    raw: &[Complex64],
    iterations: usize,
    converged: bool,
) -> Result<SolverReport> {
    let magnitudes: Vec<f64> = raw.iter().map(|v| v.norm()).collect();
    let supports = group_top_l(&magnitudes, shape.weight, shape.span, shape.groups);
    let columns = global_support(&supports, shape.span);
    let coefficients = min_norm_least_squares(gather_columns(a, &columns).as_ref(), y)?;
    let finite = coefficients
        .iter()
        .all(|c| c.re.is_finite() && c.im.is_finite());
    let estimate = GroupSparseEstimate::from_supports(&shape, supports, &coefficients);
    Ok(SolverReport {
        residual_norm: residual_norm(a, y, estimate.values()),
        estimate,
        iterations,
        converged: converged && finite,
        stop: if !finite {
            StopReason::NonFinite
        } else if converged {
            StopReason::Tolerance
        } else {
            StopReason::IterationCap
        },
        trace: Vec::new(),
    })
}

fn check_inputs(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    shape: &GroupShape,
    settings: &LassoSettings,
) -> Result<()> {
    shape.check(a, y)?;
    if settings.max_iterations == 0 {
        return Err(Error::param("max_iterations", "must be at least 1"));
    }
    Ok(())
}

/// Fixed-`lambda` LASSO followed by group enforcement and debiasing.
pub fn lasso_solve(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    lambda: f64,
    shape: GroupShape,
    settings: &LassoSettings,
) -> Result<SolverReport> {
    check_inputs(y, a, &shape, settings)?;
    if !(lambda > 0.0) {
        return Err(Error::param(
            "lambda",
            format!("must be positive, got {lambda}"),
        ));
    }
    let outcome = fista_lasso(
        y,
        a,
        lambda,
        None,
        settings.max_iterations,
        settings.tolerance,
    );
    enforce_groups(
        y,
        a,
        shape,
        &outcome.solution,
        outcome.iterations,
        outcome.converged,
    )
}

/// LASSO with the weight schedule from `settings`, each stage warm-started
/// from the previous one.
pub fn lasso_solve_scheduled(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    shape: GroupShape,
    settings: &LassoSettings,
) -> Result<SolverReport> {
    check_inputs(y, a, &shape, settings)?;
    let scale = adjoint_mat_vec(a, y)
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return enforce_groups(
            y,
            a,
            shape,
            &vec![Complex64::new(0.0, 0.0); shape.len()],
            0,
            true,
        );
    }
    let step = 1.0 / lipschitz(a);
    let mut solution: Option<Vec<Complex64>> = None;
    let mut iterations = 0;
    let mut converged = true;
    for lambda in settings.lambda.stages(scale) {
        let outcome = fista_with_step(
            y,
            a,
            lambda,
            solution.as_deref(),
            settings.max_iterations,
            settings.tolerance,
            step,
        );
        iterations += outcome.iterations;
        converged = outcome.converged;
        solution = Some(outcome.solution);
    }
    enforce_groups(
        y,
        a,
        shape,
        &solution.unwrap_or_default(),
        iterations,
        converged,
    )
}
