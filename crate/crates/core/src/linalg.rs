//! Compressed sparse rows plus a thin wrapper over faer's sparse factorizations.

use std::io::Write;

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets; duplicates are summed, explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: vec![], values: vec![] }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let trip = (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v))).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, trip)
    }

    /// `self + s * other`, over the union of both patterns.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            trip.extend(self.row(r).map(|(c, v)| (r, c, v)));
            trip.extend(other.row(r).map(|(c, v)| (r, c, s * v)));
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, trip)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(k, _)| k == c).map_or(0.0, |(_, v)| v)
    }

    /// Largest |a_ij - a_ji| relative to the largest |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = self.add_scaled(&t, -1.0);
        let amax = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dmax = d.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if amax == 0.0 {
            0.0
        } else {
            dmax / amax
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trip: Vec<Triplet<usize, usize, f64>> = (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::LinearSolve(format!("matrix conversion: {e:?}")))
    }

    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const MAX_REFINEMENTS: usize = 3;

/// Sparse LU that keeps the symbolic analysis for matrices sharing a pattern.
#[derive(Default)]
pub struct LuSolver {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

/// Result of a checked linear solve.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub relative_residual: f64,
}

impl LuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `a x = b` with iterative refinement until the relative residual is below `tol`.
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64], tol: f64) -> Result<LinearSolution> {
        let n = a.nrows;
        if a.ncols != n || b.len() != n {
            return Err(Error::LinearSolve("dimension mismatch".into()));
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(LinearSolution { x: vec![0.0; n], relative_residual: 0.0 });
        }
        let fa = a.to_faer()?;
        let reuse = matches!(&self.symbolic, Some((p, r, _)) if *p == a.row_ptr && *r == a.col_idx);
        if !reuse {
            let sym = SymbolicLu::try_new(fa.symbolic())
                .map_err(|e| Error::LinearSolve(format!("symbolic analysis: {e:?}")))?;
            self.symbolic = Some((a.row_ptr.clone(), a.col_idx.clone(), sym));
        }
        let sym = self.symbolic.as_ref().map(|s| s.2.clone()).unwrap();
        let lu = Lu::try_new_with_symbolic(sym, fa.as_ref())
            .map_err(|e| Error::LinearSolve(format!("numeric factorization: {e:?}")))?;
        let solve = |rhs: &[f64]| -> Vec<f64> {
            use faer::prelude::Solve;
            let m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
            let x = lu.solve(&m);
            (0..n).map(|i| x[(i, 0)]).collect()
        };
        let residual = |x: &[f64]| -> Vec<f64> { a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
        // Residual relative to max(‖b‖, ‖|A||x|‖), which stays meaningful when the solution
        // is much larger than the load.
        let relative = |x: &[f64], r: &[f64]| {
            let abs_ax: Vec<f64> = (0..n).map(|i| a.row(i).map(|(c, v)| (v * x[c]).abs()).sum()).collect();
            norm2(r) / bnorm.max(norm2(&abs_ax))
        };
        let mut x = solve(b);
        let mut r = residual(&x);
        let mut rel = relative(&x, &r);
        for _ in 0..MAX_REFINEMENTS {
            if rel <= tol {
                break;
            }
            let dx = solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            r = residual(&x);
            rel = relative(&x, &r);
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        if !(rel <= tol) {
            return Err(Error::LinearResidual { residual: rel, tol });
        }
        Ok(LinearSolution { x, relative_residual: rel })
    }
}

/// Attempts a sparse Cholesky factorization; success certifies positive definiteness.
pub fn cholesky_succeeds(a: &CsrMatrix) -> Result<bool> {
    let fa = a.to_faer()?;
    Ok(fa.sp_cholesky(Side::Lower).is_ok())
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return None;
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_keep_zeros() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 0, 2.0), (1, 0, 3.0), (0, 1, 0.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![2.0, 4.0]);
    }

    #[test]
    fn lu_solves_and_reuses_pattern() {
        let n = 50;
        let build = |s: f64| {
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, 4.0 + s));
                if i > 0 {
                    t.push((i, i - 1, -1.0));
                }
                if i + 1 < n {
                    t.push((i, i + 1, -1.5 * s));
                }
            }
            CsrMatrix::from_triplets(n, n, t)
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut lu = LuSolver::new();
        for s in [0.0, 1.0, 0.5] {
            let a = build(s);
            let sol = lu.solve(&a, &b, 1e-12).unwrap();
            let r: Vec<f64> = a.matvec(&sol.x).iter().zip(&b).map(|(x, y)| x - y).collect();
            assert!(norm2(&r) < 1e-12);
        }
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let spd = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.5)]);
        let ind = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(cholesky_succeeds(&spd).unwrap());
        assert!(!cholesky_succeeds(&ind).unwrap());
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [0.0, 1.0, 1.0, 1.0];
        let diag = [-4.0, -4.0, -4.0, -4.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let x = solve_tridiagonal(&lower, &diag, &upper, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let ax = [
            diag[0] * x[0] + upper[0] * x[1],
            lower[1] * x[0] + diag[1] * x[1] + upper[1] * x[2],
            lower[2] * x[1] + diag[2] * x[2] + upper[2] * x[3],
            lower[3] * x[2] + diag[3] * x[3],
        ];
        for (a, b) in ax.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn matrix_market_header() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(0, 2, 1.5)]);
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 3 1.5"));
    }
}
