//! Sparse direct solves backed by faer's LU.
//!
//! A row-major matrix is handed to faer as the column-major storage of its
//! transpose, and the transposed system is solved, so no copy is made. The
//! symbolic analysis is kept while the pattern does not change.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Default)]
pub struct LinearSolver {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
    analyses: usize,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of symbolic analyses performed so far.
    pub fn analyses(&self) -> usize {
        self.analyses
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n {
            return Err(Error::DimensionMismatch(format!("{}x{} system with rhs {}", a.nrows(), a.ncols(), b.len())));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        if b.iter().any(|v| !v.is_finite()) || a.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite entries in linear system".into()));
        }
        faer::set_global_parallelism(Par::Seq);
        let sym = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        let reuse = matches!(&self.cached, Some((rp, ci, _)) if rp == a.row_ptr() && ci == a.col_idx());
        if !reuse {
            let symbolic = SymbolicLu::try_new(sym).map_err(|e| Error::Singular(format!("symbolic LU: {e:?}")))?;
            self.cached = Some((a.row_ptr().to_vec(), a.col_idx().to_vec(), symbolic));
            self.analyses += 1;
        }
        let symbolic = self.cached.as_ref().unwrap().2.clone();
        let at = SparseColMatRef::new(sym, a.values());
        // faer panics on an exactly zero pivot instead of returning an error
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| Lu::try_new_with_symbolic(symbolic, at)))
            .map_err(|_| Error::Singular("zero pivot in LU".into()))?
            .map_err(|e| Error::Singular(format!("LU: {e:?}")))?;
        let mut x = b.to_vec();
        lu.solve_transpose_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(&mut x, n, 1));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("LU produced non-finite solution".into()));
        }
        let r = a.mul_vec(&x);
        let res = r.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let scale = a.max_abs() * x.iter().fold(0.0f64, |m, v| m.max(v.abs())) + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res > 1e-6 * scale {
            return Err(Error::Singular(format!("residual {res:e} after solve (scale {scale:e})")));
        }
        Ok(x)
    }
}

/// One-off solve of `a x = b`.
pub fn solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LinearSolver::new().solve(a, b)
}
