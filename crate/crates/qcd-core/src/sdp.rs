//! Thin semidefinite-programming layer over the Clarabel conic solver.
//!
//! Models are linear programs over real scalar variables with three constraint
//! kinds: affine equalities, affine inequalities (`expr ≥ rhs`), and affine
//! Hermitian matrix expressions constrained to the PSD cone. Hermitian matrix
//! variables are parameterized by real scalars (diagonal entries plus
//! real/imaginary parts of the upper triangle), so every model is a real conic
//! program.
//!
//! Complex Hermitian PSD blocks are passed to the solver through the standard
//! real embedding `M ↦ [[Re M, -Im M], [Im M, Re M]]`, which is PSD exactly
//! when `M` is. Blocks whose data is entirely real (common here: real channels
//! and states produce real SDP data throughout) skip the embedding and enter
//! the cone at their native dimension — roughly an 8x reduction in cone size,
//! which is what makes the larger tensor-power programs tractable.

use crate::error::{Error, Result};
use crate::qlinalg::ComplexMatrix;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus,
    SupportedConeT::{self, NonnegativeConeT, PSDTriangleConeT, ZeroConeT},
};
use ndarray::Array2;
use num_complex::Complex64;

/// Options controlling a single solve.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Duality-gap and feasibility tolerance handed to the interior-point solver.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: u32,
    /// Print solver progress.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 200, verbose: false }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }
}

/// Termination status, condensed to what callers act on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    AlmostOptimal,
    PrimalInfeasible,
    DualInfeasible,
    Failed(String),
}

impl SolveStatus {
    pub fn is_optimal(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::AlmostOptimal)
    }
}

/// Result of a solve: status, objective value, and the primal variables.
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
}

impl Solution {
    /// Unwraps an optimal solution or converts the status into an error.
    pub fn optimal_or_err(self, context: &str) -> Result<Solution> {
        if self.status.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver { status: format!("{:?}", self.status), context: context.into() })
        }
    }
}

/// Affine expression `constant + Σ coeff_j · x_j` over model variables.
#[derive(Clone, Debug, Default)]
pub struct LinExpr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(j: usize) -> Self {
        LinExpr { terms: vec![(j, 1.0)], constant: 0.0 }
    }

    /// Adds `coeff · x_j`, merging with an existing term for the same variable.
    pub fn add_term(&mut self, j: usize, coeff: f64) {
        if let Some(t) = self.terms.iter_mut().find(|(v, _)| *v == j) {
            t.1 += coeff;
        } else {
            self.terms.push((j, coeff));
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) {
        self.constant += scale * other.constant;
        for &(j, c) in &other.terms {
            self.add_term(j, scale * c);
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// Evaluates the expression on a variable assignment.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

/// Affine Hermitian-matrix expression `C + Σ x_j · A_j` (all `A_j` Hermitian).
#[derive(Clone, Debug)]
pub struct MatExpr {
    dim: usize,
    constant: Array2<Complex64>,
    terms: Vec<(usize, Array2<Complex64>)>,
}

impl MatExpr {
    pub fn zero(dim: usize) -> Self {
        MatExpr { dim, constant: Array2::zeros((dim, dim)), terms: Vec::new() }
    }

    pub fn from_constant(m: &ComplexMatrix) -> Self {
        MatExpr { dim: m.dim(), constant: m.array().clone(), terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_constant(&mut self, m: &ComplexMatrix, scale: f64) {
        assert_eq!(m.dim(), self.dim, "constant dimension mismatch");
        self.constant
            .iter_mut()
            .zip(m.array().iter())
            .for_each(|(a, b)| *a += scale * b);
    }

    /// Adds `x_var · basis`; the basis matrix must be Hermitian.
    pub fn add_term(&mut self, var: usize, basis: &ComplexMatrix, scale: f64) {
        assert_eq!(basis.dim(), self.dim, "basis dimension mismatch");
        if let Some((_, existing)) = self.terms.iter_mut().find(|(v, _)| *v == var) {
            existing
                .iter_mut()
                .zip(basis.array().iter())
                .for_each(|(a, b)| *a += scale * b);
        } else {
            self.terms.push((var, basis.array().mapv(|v| scale * v)));
        }
    }

    /// Adds `scale · other` into this expression (same dimension).
    pub fn add_expr(&mut self, other: &MatExpr, scale: f64) {
        assert_eq!(other.dim, self.dim, "expression dimension mismatch");
        self.constant
            .iter_mut()
            .zip(other.constant.iter())
            .for_each(|(a, b)| *a += scale * b);
        for (var, basis) in &other.terms {
            if let Some((_, existing)) = self.terms.iter_mut().find(|(v, _)| v == var) {
                existing
                    .iter_mut()
                    .zip(basis.iter())
                    .for_each(|(a, b)| *a += scale * b);
            } else {
                self.terms.push((*var, basis.mapv(|v| scale * v)));
            }
        }
    }

    /// Embeds this expression as a diagonal block of a larger expression.
    pub fn embedded(&self, big_dim: usize, offset: usize) -> MatExpr {
        assert!(offset + self.dim <= big_dim, "embedding out of range");
        let place = |m: &Array2<Complex64>| {
            let mut out = Array2::<Complex64>::zeros((big_dim, big_dim));
            for ((i, j), v) in m.indexed_iter() {
                out[(offset + i, offset + j)] = *v;
            }
            out
        };
        MatExpr {
            dim: big_dim,
            constant: place(&self.constant),
            terms: self.terms.iter().map(|(v, b)| (*v, place(b))).collect(),
        }
    }

    /// Rebuilds the expression by applying a linear, Hermiticity-preserving
    /// map (such as a tensor embedding) to the constant and every basis.
    pub fn map_bases<F>(&self, new_dim: usize, f: F) -> MatExpr
    where
        F: Fn(&Array2<Complex64>) -> Array2<Complex64>,
    {
        let constant = f(&self.constant);
        assert_eq!(constant.nrows(), new_dim, "mapped constant has wrong dimension");
        MatExpr {
            dim: new_dim,
            constant,
            terms: self.terms.iter().map(|(v, b)| (*v, f(b))).collect(),
        }
    }

    /// Evaluates the expression on a variable assignment.
    pub fn eval(&self, x: &[f64]) -> ComplexMatrix {
        let mut out = self.constant.clone();
        for (var, basis) in &self.terms {
            let xv = x[*var];
            if xv != 0.0 {
                out.iter_mut().zip(basis.iter()).for_each(|(a, b)| *a += xv * b);
            }
        }
        ComplexMatrix::new(out).expect("finite evaluation")
    }

    fn is_real(&self) -> bool {
        let scale = self
            .constant
            .iter()
            .chain(self.terms.iter().flat_map(|(_, b)| b.iter()))
            .map(|v| v.norm())
            .fold(1.0, f64::max);
        let tol = 1e-13 * scale;
        self.constant.iter().all(|v| v.im.abs() <= tol)
            && self
                .terms
                .iter()
                .all(|(_, b)| b.iter().all(|v| v.im.abs() <= tol))
    }
}

/// Scalar expression `Tr(M(x) · B)` for a Hermitian `B`.
pub fn trace_product(expr: &MatExpr, b: &ComplexMatrix) -> LinExpr {
    assert_eq!(expr.dim, b.dim(), "trace_product dimension mismatch");
    let tr = |m: &Array2<Complex64>| -> f64 {
        let mut acc = Complex64::ZERO;
        for ((i, j), v) in m.indexed_iter() {
            acc += v * b.at(j, i);
        }
        debug_assert!(acc.im.abs() <= 1e-9 * (1.0 + acc.norm()), "non-real trace product");
        acc.re
    };
    let mut out = LinExpr::constant(tr(&expr.constant));
    for (var, basis) in &expr.terms {
        let c = tr(basis);
        if c != 0.0 {
            out.add_term(*var, c);
        }
    }
    out
}

/// Handle to a Hermitian matrix variable.
///
/// Parameters are the `dim` diagonal entries, then the real parts of the upper
/// triangle (row-major over `i < j`), then — unless the variable is declared
/// real-symmetric — the matching imaginary parts.
#[derive(Clone, Debug)]
pub struct HermVar {
    dim: usize,
    real: bool,
    diag: Vec<usize>,
    off_re: Vec<usize>,
    off_im: Vec<usize>,
}

impl HermVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn off_index(&self, i: usize, j: usize) -> usize {
        // Row-major position of (i, j), i < j, in the strict upper triangle.
        debug_assert!(i < j && j < self.dim);
        i * self.dim - i * (i + 1) / 2 + (j - i - 1)
    }

    /// The matrix expression representing this variable.
    pub fn expr(&self) -> MatExpr {
        let mut out = MatExpr::zero(self.dim);
        for (i, &v) in self.diag.iter().enumerate() {
            let mut b = ComplexMatrix::zeros(self.dim, self.dim);
            b.set(i, i, Complex64::ONE);
            out.add_term(v, &b, 1.0);
        }
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let k = self.off_index(i, j);
                let mut br = ComplexMatrix::zeros(self.dim, self.dim);
                br.set(i, j, Complex64::ONE);
                br.set(j, i, Complex64::ONE);
                out.add_term(self.off_re[k], &br, 1.0);
                if !self.real {
                    let mut bi = ComplexMatrix::zeros(self.dim, self.dim);
                    bi.set(i, j, Complex64::new(0.0, 1.0));
                    bi.set(j, i, Complex64::new(0.0, -1.0));
                    out.add_term(self.off_im[k], &bi, 1.0);
                }
            }
        }
        out
    }

    /// `Tr(V)` as a linear expression.
    pub fn trace_expr(&self) -> LinExpr {
        let mut out = LinExpr::zero();
        for &v in &self.diag {
            out.add_term(v, 1.0);
        }
        out
    }

    /// `Tr(V · B)` as a linear expression, for Hermitian `B`.
    pub fn trace_product(&self, b: &ComplexMatrix) -> LinExpr {
        assert_eq!(b.dim(), self.dim, "trace_product dimension mismatch");
        let mut out = LinExpr::zero();
        for (i, &v) in self.diag.iter().enumerate() {
            let c = b.at(i, i).re;
            if c != 0.0 {
                out.add_term(v, c);
            }
        }
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let k = self.off_index(i, j);
                // Tr((E_ij + E_ji) B) = B_ji + B_ij = 2 Re B_ij for Hermitian B.
                let re_c = 2.0 * b.at(i, j).re;
                if re_c != 0.0 {
                    out.add_term(self.off_re[k], re_c);
                }
                if !self.real {
                    // Tr((iE_ij - iE_ji) B) = i B_ji - i B_ij = 2 Im B_ij.
                    let im_c = 2.0 * b.at(i, j).im;
                    if im_c != 0.0 {
                        out.add_term(self.off_im[k], im_c);
                    }
                }
            }
        }
        out
    }

    /// Reconstructs the matrix value from a solved variable assignment.
    pub fn value(&self, x: &[f64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (i, &v) in self.diag.iter().enumerate() {
            out.set(i, i, Complex64::new(x[v], 0.0));
        }
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let k = self.off_index(i, j);
                let re = x[self.off_re[k]];
                let im = if self.real { 0.0 } else { x[self.off_im[k]] };
                out.set(i, j, Complex64::new(re, im));
                out.set(j, i, Complex64::new(re, -im));
            }
        }
        out
    }
}

/// Handle to a free (not Hermitian) complex or real matrix block variable,
/// meant to be placed off-diagonal inside a larger Hermitian expression.
#[derive(Clone, Debug)]
pub struct FreeBlockVar {
    rows: usize,
    cols: usize,
    real: bool,
    re: Vec<usize>,
    im: Vec<usize>,
}

impl FreeBlockVar {
    /// Adds `X` into `big` at `(row_off, col_off)` and `X†` at the mirrored
    /// position, keeping `big` Hermitian.
    pub fn embed_off_diagonal(&self, big: &mut MatExpr, row_off: usize, col_off: usize) {
        let d = big.dim();
        assert!(row_off + self.rows <= d && col_off + self.cols <= d);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let k = i * self.cols + j;
                let mut br = ComplexMatrix::zeros(d, d);
                br.set(row_off + i, col_off + j, Complex64::ONE);
                br.set(col_off + j, row_off + i, Complex64::ONE);
                big.add_term(self.re[k], &br, 1.0);
                if !self.real {
                    let mut bi = ComplexMatrix::zeros(d, d);
                    bi.set(row_off + i, col_off + j, Complex64::new(0.0, 1.0));
                    bi.set(col_off + j, row_off + i, Complex64::new(0.0, -1.0));
                    big.add_term(self.im[k], &bi, 1.0);
                }
            }
        }
    }

    /// `Re Tr(X)` as a linear expression (square blocks only).
    pub fn re_trace_expr(&self) -> LinExpr {
        assert_eq!(self.rows, self.cols, "re_trace_expr on non-square block");
        let mut out = LinExpr::zero();
        for i in 0..self.rows {
            out.add_term(self.re[i * self.cols + i], 1.0);
        }
        out
    }

    /// Reconstructs the block value from a solved variable assignment.
    pub fn value(&self, x: &[f64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let k = i * self.cols + j;
                let im = if self.real { 0.0 } else { x[self.im[k]] };
                out.set(i, j, Complex64::new(x[self.re[k]], im));
            }
        }
        out
    }
}

/// A conic model: minimize a linear objective over equality, inequality, and
/// PSD constraints.
#[derive(Default)]
pub struct Model {
    n_vars: usize,
    objective: LinExpr,
    eqs: Vec<(LinExpr, f64)>,
    ges: Vec<(LinExpr, f64)>,
    psd: Vec<MatExpr>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn var_count(&self) -> usize {
        self.n_vars
    }

    /// Allocates `k` fresh scalar variables.
    pub fn add_vars(&mut self, k: usize) -> std::ops::Range<usize> {
        let start = self.n_vars;
        self.n_vars += k;
        start..self.n_vars
    }

    /// Allocates a Hermitian matrix variable (real-symmetric when `real`).
    pub fn add_hermitian_var(&mut self, dim: usize, real: bool) -> HermVar {
        let diag: Vec<usize> = self.add_vars(dim).collect();
        let p = dim * (dim - 1) / 2;
        let off_re: Vec<usize> = self.add_vars(p).collect();
        let off_im: Vec<usize> = if real { Vec::new() } else { self.add_vars(p).collect() };
        HermVar { dim, real, diag, off_re, off_im }
    }

    /// Allocates a free matrix block variable (real-entried when `real`).
    pub fn add_free_block(&mut self, rows: usize, cols: usize, real: bool) -> FreeBlockVar {
        let re: Vec<usize> = self.add_vars(rows * cols).collect();
        let im: Vec<usize> =
            if real { Vec::new() } else { self.add_vars(rows * cols).collect() };
        FreeBlockVar { rows, cols, real, re, im }
    }

    /// Sets the objective to minimize.
    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    /// Adds `expr == rhs`.
    pub fn add_eq(&mut self, expr: LinExpr, rhs: f64) {
        self.eqs.push((expr, rhs));
    }

    /// Adds `expr >= rhs`.
    pub fn add_ge(&mut self, expr: LinExpr, rhs: f64) {
        self.ges.push((expr, rhs));
    }

    /// Adds `expr ⪰ 0`.
    pub fn add_psd(&mut self, expr: MatExpr) {
        self.psd.push(expr);
    }

    /// Solves the model.
    pub fn solve(&self, opts: &SolverOptions) -> Result<Solution> {
        let n = self.n_vars;
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut b: Vec<f64> = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0usize;

        if !self.eqs.is_empty() {
            for (expr, rhs) in &self.eqs {
                for &(j, c) in expr.terms() {
                    cols[j].push((row, c));
                }
                b.push(rhs - expr.constant_part());
                row += 1;
            }
            cones.push(ZeroConeT(self.eqs.len()));
        }
        if !self.ges.is_empty() {
            for (expr, rhs) in &self.ges {
                for &(j, c) in expr.terms() {
                    cols[j].push((row, -c));
                }
                b.push(expr.constant_part() - rhs);
                row += 1;
            }
            cones.push(NonnegativeConeT(self.ges.len()));
        }
        for block in &self.psd {
            let real = block.is_real();
            let side = if real { block.dim() } else { 2 * block.dim() };
            let len = side * (side + 1) / 2;
            let constant_svec = svec_of(&block.constant, block.dim(), real);
            for (var, basis) in &block.terms {
                for (k, v) in svec_of(basis, block.dim(), real).into_iter().enumerate() {
                    if v != 0.0 {
                        cols[*var].push((row + k, -v));
                    }
                }
            }
            b.extend_from_slice(&constant_svec);
            row += len;
            cones.push(PSDTriangleConeT(side));
        }

        let m_rows = row;
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in &mut cols {
            col.sort_unstable_by_key(|&(r, _)| r);
            // Merge duplicate rows defensively.
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(r, v) in col.iter() {
                if let Some(last) = merged.last_mut() {
                    if last.0 == r {
                        last.1 += v;
                        continue;
                    }
                }
                merged.push((r, v));
            }
            for (r, v) in merged {
                if v != 0.0 {
                    rowval.push(r);
                    nzval.push(v);
                }
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m_rows, n, colptr, rowval, nzval);
        let p = CscMatrix::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(j, c) in self.objective.terms() {
            q[j] += c;
        }

        let settings = DefaultSettingsBuilder::default()
            .verbose(opts.verbose)
            .max_iter(opts.max_iter)
            .tol_gap_abs(opts.tol)
            .tol_gap_rel(opts.tol)
            .tol_feas(opts.tol)
            .build()
            .map_err(|e| Error::Solver { status: "settings".into(), context: e.to_string() })?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver { status: "setup".into(), context: e.to_string() })?;
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => SolveStatus::AlmostOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::PrimalInfeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::DualInfeasible
            }
            other => SolveStatus::Failed(format!("{other:?}")),
        };
        let x = solver.solution.x.clone();
        let objective = self.objective.eval(&x);
        Ok(Solution { status, objective, x })
    }
}

/// Scaled upper-triangle vectorization in Clarabel's PSD-cone order
/// (column-major over the upper triangle, off-diagonal entries times √2).
/// For complex input the real embedding `[[Re, -Im], [Im, Re]]` is vectorized.
fn svec_of(m: &Array2<Complex64>, dim: usize, real: bool) -> Vec<f64> {
    let sqrt2 = std::f64::consts::SQRT_2;
    if real {
        let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
        for j in 0..dim {
            for i in 0..=j {
                // Symmetrize defensively; data is Hermitian so Re is symmetric.
                let v = 0.5 * (m[(i, j)].re + m[(j, i)].re);
                out.push(if i == j { v } else { sqrt2 * v });
            }
        }
        out
    } else {
        let side = 2 * dim;
        let entry = |i: usize, j: usize| -> f64 {
            // Real embedding E = [[Re, -Im], [Im, Re]] of the Hermitian block.
            let (bi, ii) = (i / dim, i % dim);
            let (bj, jj) = (j / dim, j % dim);
            let v = m[(ii, jj)];
            match (bi, bj) {
                (0, 0) | (1, 1) => v.re,
                (0, 1) => -v.im,
                (1, 0) => v.im,
                _ => unreachable!(),
            }
        };
        let mut out = Vec::with_capacity(side * (side + 1) / 2);
        for j in 0..side {
            for i in 0..=j {
                let v = 0.5 * (entry(i, j) + entry(j, i));
                out.push(if i == j { v } else { sqrt2 * v });
            }
        }
        out
    }
}
