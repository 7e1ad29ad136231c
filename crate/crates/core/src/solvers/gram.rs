//! Cached normal equations for pursuit loops that revisit the same columns.
//!
//! Inner products `a_p^* a_q` and `a_p^* y` are computed once per column
//! pair and reused by every later least-squares solve on any subset of the
//! cached columns. Each solve is a Cholesky factorization of the gathered
//! Gram block; a block that is not safely positive definite is reported so
//! the caller can fall back to an orthogonal factorization.

use faer::linalg::matmul::matmul;
use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::linalg::solvers::Solve;
use faer::{Accum, ColRef, Mat, MatRef, Par, Side};
use num_complex::Complex64;

/// Smallest accepted `min L_kk^2 / max G_kk` of the Cholesky factor.
const PIVOT_TOLERANCE: f64 = 1e-10;

const UNCACHED: usize = usize::MAX;

pub(crate) struct GramCache<'a> {
    a: MatRef<'a, Complex64>,
    y: &'a [Complex64],
    slot: Vec<usize>,
    columns: Vec<usize>,
    /// Cached columns of `A`, in slot order.
    basis: Mat<Complex64>,
    /// Lower triangle of the Gram matrix of `basis`.
    gram: Mat<Complex64>,
    capacity: usize,
    /// `A^* y` per slot.
    aty: Vec<Complex64>,
}

impl<'a> GramCache<'a> {
    pub(crate) fn new(a: MatRef<'a, Complex64>, y: &'a [Complex64]) -> Self {
        Self {
            a,
            y,
            slot: vec![UNCACHED; a.ncols()],
            columns: Vec::new(),
            basis: Mat::new(),
            gram: Mat::new(),
            capacity: 0,
            aty: Vec::new(),
        }
    }

    fn ensure(&mut self, cols: &[usize]) {
        let fresh: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&c| self.slot[c] == UNCACHED)
            .collect();
        if fresh.is_empty() {
            return;
        }
        let rows = self.a.nrows();
        let old = self.columns.len();
        let added = fresh.len();
        let total = old + added;
        if total > self.capacity {
            self.capacity = total.max(2 * self.capacity).min(self.a.ncols());
            self.basis.reserve(rows, self.capacity);
            self.gram.reserve(self.capacity, self.capacity);
        }
        let zero = |_, _| Complex64::new(0.0, 0.0);
        self.basis.resize_with(rows, total, zero);
        self.gram.resize_with(total, total, zero);

        for (k, &c) in fresh.iter().enumerate() {
            self.basis
                .as_mut()
                .col_mut(old + k)
                .copy_from(self.a.col(c));
        }
        let (cached, block) = self.basis.as_ref().split_at_col(old);
        matmul(
            self.gram.as_mut().submatrix_mut(old, 0, added, old),
            Accum::Replace,
            block.adjoint(),
            cached,
            Complex64::new(1.0, 0.0),
            Par::Seq,
        );
        triangular::matmul(
            self.gram.as_mut().submatrix_mut(old, old, added, added),
            BlockStructure::TriangularLower,
            Accum::Replace,
            block.adjoint(),
            BlockStructure::Rectangular,
            block,
            BlockStructure::Rectangular,
            Complex64::new(1.0, 0.0),
            Par::Seq,
        );
        let aty = block.adjoint() * ColRef::from_slice(self.y);
        for (k, &c) in fresh.iter().enumerate() {
            self.slot[c] = old + k;
            self.aty.push(aty[k]);
        }
        self.columns.extend_from_slice(&fresh);
    }

    fn entry(&self, p: usize, q: usize) -> Complex64 {
        if p >= q {
            self.gram[(p, q)]
        } else {
            self.gram[(q, p)].conj()
        }
    }

    /// Least squares on `cols` against `y`, or against `rhs` when given.
    /// `None` when the Gram block is numerically singular.
    pub(crate) fn solve(
        &mut self,
        cols: &[usize],
        rhs: Option<&[Complex64]>,
    ) -> Option<Vec<Complex64>> {
        if cols.is_empty() {
            return Some(Vec::new());
        }
        if cols.len() > self.a.nrows() {
            return None;
        }
        self.ensure(cols);
        let slots: Vec<usize> = cols.iter().map(|&c| self.slot[c]).collect();
        let g = Mat::from_fn(slots.len(), slots.len(), |i, j| {
            if i >= j {
                self.entry(slots[i], slots[j])
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let b = match rhs {
            None => Mat::from_fn(slots.len(), 1, |i, _| self.aty[slots[i]]),
            Some(r) => {
                let r = ColRef::from_slice(r);
                Mat::from_fn(slots.len(), 1, |i, _| {
                    let col = self.basis.col(slots[i]);
                    (0..col.nrows()).map(|k| col[k].conj() * r[k]).sum()
                })
            }
        };
        let llt = g.llt(Side::Lower).ok()?;
        let l = llt.L();
        let max_diag = (0..g.nrows()).map(|k| g[(k, k)].re).fold(0.0, f64::max);
        let min_pivot = (0..l.nrows())
            .map(|k| l[(k, k)].norm_sqr())
            .fold(f64::INFINITY, f64::min);
        if !(max_diag > 0.0) || !(min_pivot > PIVOT_TOLERANCE * max_diag) {
            return None;
        }
        let x = llt.solve(&b);
        Some((0..slots.len()).map(|i| x[(i, 0)]).collect())
    }
}
