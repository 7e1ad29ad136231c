//! Group Subspace Pursuit.
//!
//! Subspace pursuit with the support selection done block by block, so every
//! iterate keeps exactly `l` columns in each of the `N` groups:
//!
//! 1. correlate the residual with every column, `A^* r`;
//! 2. take the `l` strongest correlations of each group;
//! 3. merge them with the current support;
//! 4. least squares on the merged columns;
//! 5. prune back to the `l` largest coefficients of each group;
//! 6. least squares on the pruned support and update `r = y - A v`.

use faer::MatRef;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gram::GramCache;
use super::lstsq::{
    adjoint_mat_vec, gather_columns, mat_vec, min_norm_least_squares, norm, residual_norm,
};
use super::{
    global_support, group_top_l, GroupShape, GroupSparseEstimate, IterationTrace, SolverReport,
    StopReason,
};
use crate::error::{Error, Result};

/// Right-hand side of the two least-squares steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateTarget {
    /// Regress on the measurement `y` (classical subspace pursuit).
    #[default]
    Measurement,
    /// Regress on the previous residual `r_{t-1}`.
    Residual,
}

/// How the least-squares steps are solved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeastSquaresMethod {
    /// Cholesky on a Gram matrix cached across iterations, falling back to
    /// `Qr` when a block is ill conditioned.
    #[default]
    CachedGram,
    /// Householder QR from scratch at every step.
    Qr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GspSettings {
    pub max_iterations: usize,
    /// Stop once `||r|| <= residual_tolerance * ||y||`.
    pub residual_tolerance: f64,
    pub estimate_target: EstimateTarget,
    pub least_squares: LeastSquaresMethod,
}

impl Default for GspSettings {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            residual_tolerance: 1e-6,
            estimate_target: EstimateTarget::Measurement,
            least_squares: LeastSquaresMethod::CachedGram,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GspConfig {
    pub shape: GroupShape,
    pub settings: GspSettings,
    /// Record one [`IterationTrace`] per iteration.
    pub trace: bool,
}

impl GspConfig {
    pub fn new(shape: GroupShape) -> Self {
        Self {
            shape,
            settings: GspSettings::default(),
            trace: false,
        }
    }
}

struct Iterate {
    supports: Vec<Vec<usize>>,
    coefficients: Vec<Complex64>,
    residual_norm: f64,
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out.dedup();
    out
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> usize {
    let union = sorted_union(a, b).len();
    let common = a.len() + b.len() - union;
    union - common
}

/// Runs group subspace pursuit and returns the iterate with the smallest residual.
pub fn gsp_solve(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    config: &GspConfig,
) -> Result<SolverReport> {
    let shape = config.shape;
    let settings = config.settings;
    shape.check(a, y)?;
    if settings.max_iterations == 0 {
        return Err(Error::param("max_iterations", "must be at least 1"));
    }
    if !(settings.residual_tolerance >= 0.0) {
        return Err(Error::param("residual_tolerance", "must be non-negative"));
    }

    let dense = |supports: &[Vec<usize>], coefficients: &[Complex64]| {
        GroupSparseEstimate::from_supports(&shape, supports.to_vec(), coefficients)
    };
    let failure = |iterations: usize, trace: Vec<IterationTrace>, best: Option<Iterate>| {
        let estimate = match best {
            Some(it) => dense(&it.supports, &it.coefficients),
            None => GroupSparseEstimate::zeros(&shape),
        };
        let residual_norm = residual_norm(a, y, estimate.values());
        SolverReport {
            estimate,
            residual_norm,
            iterations,
            converged: false,
            stop: StopReason::NonFinite,
            trace,
        }
    };

    let mut cache = GramCache::new(a, y);
    let mut lstsq = |cols: &[usize], rhs: Option<&[Complex64]>| -> Result<Vec<Complex64>> {
        if settings.least_squares == LeastSquaresMethod::CachedGram {
            if let Some(x) = cache.solve(cols, rhs) {
                return Ok(x);
            }
        }
        min_norm_least_squares(gather_columns(a, cols).as_ref(), rhs.unwrap_or(y))
    };

    let mut trace = Vec::new();
    if !all_finite(y) {
        return Ok(failure(0, trace, None));
    }
    let y_norm = norm(y);
    let threshold = settings.residual_tolerance * y_norm;

    let mut residual = y.to_vec();
    let mut previous_norm = y_norm;
    let mut support: Vec<usize> = Vec::new();
    let mut best: Option<Iterate> = None;
    let mut stop = StopReason::IterationCap;
    let mut iterations = 0;

    for t in 1..=settings.max_iterations {
        iterations = t;
        // Identify
        let correlation = adjoint_mat_vec(a, &residual);
        if !all_finite(&correlation) {
            return Ok(failure(t, trace, best));
        }
        let scores: Vec<f64> = correlation.iter().map(|c| c.norm()).collect();
        let identified = global_support(
            &group_top_l(&scores, shape.weight, shape.span, shape.groups),
            shape.span,
        );

        // Merge
        let merged = sorted_union(&support, &identified);

        // Estimate
        let target: Option<&[Complex64]> = match settings.estimate_target {
            EstimateTarget::Measurement => None,
            EstimateTarget::Residual => Some(&residual),
        };
        let merged_coefficients = lstsq(&merged, target)?;
        if !all_finite(&merged_coefficients) {
            return Ok(failure(t, trace, best));
        }

        // Prune
        let mut magnitudes = vec![0.0; shape.len()];
        for (&col, c) in merged.iter().zip(&merged_coefficients) {
            magnitudes[col] = c.norm();
        }
        let pruned_supports = group_top_l(&magnitudes, shape.weight, shape.span, shape.groups);
        let pruned = global_support(&pruned_supports, shape.span);

        // Iterate
        let coefficients = if pruned == merged {
            merged_coefficients
        } else {
            lstsq(&pruned, target)?
        };
        if !all_finite(&coefficients) {
            return Ok(failure(t, trace, best));
        }
        let estimate = dense(&pruned_supports, &coefficients);
        let fitted = mat_vec(a, estimate.values());
        let next_residual: Vec<Complex64> = y.iter().zip(&fitted).map(|(p, q)| p - q).collect();
        let current_norm = norm(&next_residual);
        if !current_norm.is_finite() {
            return Ok(failure(t, trace, best));
        }
        if config.trace {
            trace.push(IterationTrace {
                iteration: t,
                residual: current_norm,
                churn: symmetric_difference(&support, &pruned),
            });
        }
        if best
            .as_ref()
            .map_or(true, |b| current_norm < b.residual_norm)
        {
            best = Some(Iterate {
                supports: pruned_supports,
                coefficients,
                residual_norm: current_norm,
            });
        }

        if current_norm <= threshold {
            stop = StopReason::Tolerance;
            break;
        }
        if current_norm >= previous_norm {
            stop = StopReason::Stalled;
            break;
        }
        previous_norm = current_norm;
        residual = next_residual;
        support = pruned;
    }

    let best = best.expect("at least one iteration ran");
    let estimate = dense(&best.supports, &best.coefficients);
    Ok(SolverReport {
        residual_norm: residual_norm(a, y, estimate.values()),
        estimate,
        iterations,
        converged: matches!(stop, StopReason::Tolerance | StopReason::Stalled),
        stop,
        trace,
    })
}
