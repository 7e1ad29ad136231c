//! Group-sparse recovery of `v` from `y = A v + z`, where `v` is `N` blocks
//! of length `L`, each with exactly `l` nonzeros.

mod gram;
mod gsp;
mod lasso;
mod lstsq;

use std::fmt;

use faer::MatRef;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gsp::{gsp_solve, EstimateTarget, GspConfig, GspSettings, LeastSquaresMethod};
pub use lasso::{
    fista_lasso, lasso_solve, lasso_solve_scheduled, FistaOutcome, LambdaSchedule, LassoSettings,
};
pub use lstsq::{
    adjoint_mat_vec, gather_columns, least_squares, mat_vec, min_norm_least_squares, norm,
    residual_norm,
};

/// Block structure of the unknown: `groups` blocks of `span` entries, `weight` active per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupShape {
    pub groups: usize,
    pub span: usize,
    pub weight: usize,
}

impl GroupShape {
    pub fn new(groups: usize, span: usize, weight: usize) -> Result<Self> {
        if span == 0 || weight == 0 || weight > span {
            return Err(Error::param(
                "l",
                format!("need 1 <= l <= L, got l = {weight}, L = {span}"),
            ));
        }
        Ok(Self {
            groups,
            span,
            weight,
        })
    }

    /// `N L`
    pub fn len(&self) -> usize {
        self.groups * self.span
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `N l`
    pub fn active(&self) -> usize {
        self.groups * self.weight
    }

    fn check(&self, a: MatRef<'_, Complex64>, y: &[Complex64]) -> Result<()> {
        if a.ncols() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, group shape needs {}",
                a.ncols(),
                self.len()
            )));
        }
        if a.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, measurement has {}",
                a.nrows(),
                y.len()
            )));
        }
        Ok(())
    }
}

/// For each block, the `l` local indices with the largest scores, ascending.
/// Ties go to the lower index.
pub fn group_top_l(scores: &[f64], weight: usize, span: usize, groups: usize) -> Vec<Vec<usize>> {
    assert_eq!(
        scores.len(),
        span * groups,
        "score vector must have N L entries"
    );
    scores
        .chunks(span)
        .map(|block| {
            let mut order: Vec<usize> = (0..span).collect();
            order.sort_by(|&a, &b| block[b].total_cmp(&block[a]).then(a.cmp(&b)));
            let mut chosen = order[..weight.min(span)].to_vec();
            chosen.sort_unstable();
            chosen
        })
        .collect()
}

/// Flattens per-group local supports into sorted global column indices.
pub fn global_support(supports: &[Vec<usize>], span: usize) -> Vec<usize> {
    supports
        .iter()
        .enumerate()
        .flat_map(|(g, s)| s.iter().map(move |&i| g * span + i))
        .collect()
}

/// Solver output `v^`: dense values plus the `l` chosen indices of every group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSparseEstimate {
    values: Vec<Complex64>,
    supports: Vec<Vec<usize>>,
    span: usize,
}

impl GroupSparseEstimate {
    /// Keeps the coefficients on the given supports and zeroes everything else.
    pub fn from_supports(
        shape: &GroupShape,
        supports: Vec<Vec<usize>>,
        coefficients: &[Complex64],
    ) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); shape.len()];
        for (col, &c) in global_support(&supports, shape.span)
            .into_iter()
            .zip(coefficients)
        {
            values[col] = c;
        }
        Self {
            values,
            supports,
            span: shape.span,
        }
    }

    pub fn zeros(shape: &GroupShape) -> Self {
        let supports = vec![(0..shape.weight).collect(); shape.groups];
        Self::from_supports(shape, supports, &[])
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Local supports, one sorted list per group.
    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn group_count(&self) -> usize {
        self.supports.len()
    }

    /// Length-`L` block `c_j`.
    pub fn group(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.span..(j + 1) * self.span]
    }
}

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Residual fell below the relative tolerance.
    Tolerance,
    /// Residual stopped decreasing; the best iterate is returned.
    Stalled,
    IterationCap,
    /// A NaN or infinity appeared.
    NonFinite,
}

/// One line of solver trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub residual: f64,
    /// Size of the symmetric difference between consecutive supports.
    pub churn: usize,
}

impl fmt::Display for IterationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iter={} residual={:e} churn={}",
            self.iteration, self.residual, self.churn
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub estimate: GroupSparseEstimate,
    /// `||y - A v^||_2` recomputed from `estimate`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub trace: Vec<IterationTrace>,
}

/// Solver selection as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSettings {
    Gsp(GspSettings),
    Lasso(LassoSettings),
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings::Gsp(GspSettings::default())
    }
}

impl SolverSettings {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSettings::Gsp(_) => "gsp",
            SolverSettings::Lasso(_) => "lasso",
        }
    }
}

/// Runs the selected solver on `y = A v`.
pub fn solve(
    y: &[Complex64],
    a: MatRef<'_, Complex64>,
    shape: GroupShape,
    settings: &SolverSettings,
) -> Result<SolverReport> {
    match settings {
        SolverSettings::Gsp(s) => gsp_solve(
            y,
            a,
            &GspConfig {
                shape,
                settings: *s,
                trace: false,
            },
        ),
        SolverSettings::Lasso(s) => lasso_solve_scheduled(y, a, shape, s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn top_l_dominant_entries() {
        let mut scores = vec![0.0; 12];
        scores[1] = 3.0;
        scores[3] = 1.0;
        scores[4 + 2] = 5.0;
        scores[4 + 0] = 0.5;
        scores[8 + 3] = 2.0;
        scores[8 + 1] = 2.5;
        assert_eq!(
            group_top_l(&scores, 2, 4, 3),
            vec![vec![1, 3], vec![0, 2], vec![1, 3]]
        );
    }

    #[test]
    fn top_l_ties_prefer_low_index() {
        assert_eq!(group_top_l(&[1.0; 12], 2, 4, 3), vec![vec![0, 1]; 3]);
        assert_eq!(
            group_top_l(&[0.0, 2.0, 2.0, 2.0], 2, 4, 1),
            vec![vec![1, 2]]
        );
    }

    #[test]
    fn top_l_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let scores: Vec<f64> = (0..24).map(|_| rng.gen::<f64>()).collect();
            let got = group_top_l(&scores, 2, 8, 3);
            for (g, chosen) in got.iter().enumerate() {
                let mut block: Vec<(f64, usize)> = (0..8).map(|i| (scores[g * 8 + i], i)).collect();
                block.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                let mut expected = vec![block[0].1, block[1].1];
                expected.sort_unstable();
                assert_eq!(chosen, &expected);
            }
        }
    }

    #[test]
    fn estimate_layout() {
        let shape = GroupShape::new(2, 4, 2).unwrap();
        let c = |x: f64| Complex64::new(x, 0.0);
        let est = GroupSparseEstimate::from_supports(
            &shape,
            vec![vec![0, 3], vec![1, 2]],
            &[c(1.0), c(2.0), c(3.0), c(4.0)],
        );
        assert_eq!(est.group(0), &[c(1.0), c(0.0), c(0.0), c(2.0)]);
        assert_eq!(est.group(1), &[c(0.0), c(3.0), c(4.0), c(0.0)]);
        assert_eq!(global_support(est.supports(), 4), vec![0, 3, 5, 6]);
    }

    #[test]
    fn trace_line_format() {
        let t = IterationTrace {
            iteration: 3,
            residual: 0.5,
            churn: 4,
        };
        assert_eq!(t.to_string(), "iter=3 residual=5e-1 churn=4");
    }
}
