//! Finite-dimensional quantum linear algebra.
//!
//! The types here form a small validation ladder: [`ComplexMatrix`] is any
//! finite complex matrix, [`HermitianOperator`] adds the Hermiticity check (and
//! stores the symmetrized matrix), [`PositiveOperator`] adds positive
//! semidefiniteness, and [`DensityMatrix`] adds unit trace. [`PureState`] wraps
//! a normalized vector, [`SystemLayout`] names the tensor factors of a composite
//! system, and [`Channel`] holds a completely positive trace-preserving map in
//! both Kraus and Choi form.
//!
//! Hermiticity and normalization checks use fixed tolerances chosen for
//! double-precision desk-scale work: `1e-10` (relative) for Hermiticity,
//! `1e-9` for eigenvalue positivity and traces. Constructors that take solver
//! output at face value would fail these checks sporadically, so projection
//! helpers ([`PositiveOperator::project`], [`DensityMatrix::normalized`]) are
//! provided for that path.

mod channel;
mod io;
mod ops;

pub use channel::{apply_channel, Channel};
pub use io::{channel_from_json, channel_to_json, matrix_from_json, matrix_to_json, ChannelJson, MatrixJson};
pub use ops::{
    canonical_purification, mat_func, mat_inv_sqrt, mat_pow, mat_sqrt, partial_trace,
    permutation_index_map, permutation_matrix, permute_systems, support_projector, tensor,
    tensor_power,
};

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

/// Relative tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Absolute tolerance on eigenvalue negativity (relative to the largest eigenvalue).
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Absolute tolerance on unit-trace and trace-preservation checks.
pub const TRACE_TOL: f64 = 1e-9;
/// Absolute tolerance on state-vector normalization.
pub const NORM_TOL: f64 = 1e-10;
/// Relative eigenvalue cutoff below which spectra are treated as exact zeros.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// Dense complex matrix with finite entries; the workhorse of the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    data: Array2<Complex64>,
}

impl ComplexMatrix {
    /// Wraps an array after checking every entry is finite.
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        for v in data.iter() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidArgument("matrix entry is not finite".into()));
            }
        }
        Ok(ComplexMatrix { data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimMismatch("ragged rows".into()));
        }
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        let data = Array2::from_shape_vec((r, c), flat)
            .map_err(|e| Error::DimMismatch(e.to_string()))?;
        ComplexMatrix::new(data)
    }

    /// Builds a matrix with real entries.
    pub fn from_real_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        ComplexMatrix::from_rows(
            rows.into_iter()
                .map(|row| row.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    /// The zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { data: Array2::zeros((rows, cols)) }
    }

    /// The identity matrix.
    pub fn identity(dim: usize) -> Self {
        ComplexMatrix { data: Array2::eye(dim) }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    /// Side length of a square matrix; panics if called on a non-square one.
    pub fn dim(&self) -> usize {
        assert_eq!(self.data.nrows(), self.data.ncols(), "dim() on non-square matrix");
        self.data.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.data.nrows() == self.data.ncols()
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[(i, j)] = v;
    }

    pub fn array(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<Complex64> {
        self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        let mut out = Array2::zeros((self.cols(), self.rows()));
        for ((i, j), v) in self.data.indexed_iter() {
            out[(j, i)] = v.conj();
        }
        ComplexMatrix { data: out }
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix { data: self.data.t().to_owned() }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix { data: self.data.mapv(|v| v.conj()) }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols(), other.rows(), "matrix product dimension mismatch");
        ComplexMatrix { data: self.data.dot(&other.data) }
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data + &other.data }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data - &other.data }
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix { data: self.data.mapv(|v| v * factor) }
    }

    pub fn scale_re(&self, factor: f64) -> ComplexMatrix {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    /// Largest entry magnitude; used as the scale in relative tolerance checks.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let (r1, c1) = (self.rows(), self.cols());
        let (r2, c2) = (other.rows(), other.cols());
        let mut out = Array2::zeros((r1 * r2, c1 * c2));
        for ((i1, j1), &a) in self.data.indexed_iter() {
            if a == Complex64::ZERO {
                continue;
            }
            for ((i2, j2), &b) in other.data.indexed_iter() {
                out[(i1 * r2 + i2, j1 * c2 + j2)] = a * b;
            }
        }
        ComplexMatrix { data: out }
    }

    /// Measures the deviation from Hermiticity relative to the matrix scale.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square(), "hermiticity of non-square matrix");
        let d = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_deviation() <= tol * self.max_abs().max(1.0)
    }

    /// True when every entry's imaginary part is negligible at the matrix scale.
    pub fn is_real(&self) -> bool {
        let scale = self.max_abs().max(1.0);
        self.data.iter().all(|v| v.im.abs() <= 1e-13 * scale)
    }

    /// Entrywise distance to another matrix (max norm).
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.data.dim(), other.data.dim(), "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Applies the matrix to a vector.
    pub fn apply_vec(&self, v: &Array1<Complex64>) -> Array1<Complex64> {
        self.data.dot(v)
    }
}

/// A square matrix verified (and stored) Hermitian.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: ComplexMatrix,
}

impl HermitianOperator {
    /// Validates Hermiticity within [`HERMITICITY_TOL`] and stores `(M + M†)/2`.
    pub fn try_new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimMismatch("Hermitian operator must be square".into()));
        }
        let dev = m.hermiticity_deviation();
        let tol = HERMITICITY_TOL * m.max_abs().max(1.0);
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev, tolerance: tol });
        }
        Ok(HermitianOperator { mat: symmetrize(&m) })
    }

    /// The zero operator.
    pub fn zeros(dim: usize) -> Self {
        HermitianOperator { mat: ComplexMatrix::zeros(dim, dim) }
    }

    /// The identity operator.
    pub fn identity(dim: usize) -> Self {
        HermitianOperator { mat: ComplexMatrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Eigendecomposition; eigenvalues ascending, eigenvectors as columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let (vals, vecs) = self
            .mat
            .array()
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Linalg(format!("eigh failed: {e}")))?;
        // The backend sees the row-major buffer as its transpose, so it
        // diagonalizes conj(A) and hands back conjugated eigenvectors;
        // conjugate once more so columns satisfy A v = λ v exactly.
        Ok((vals.to_vec(), ComplexMatrix { data: vecs.mapv(|z| z.conj()) }))
    }

    pub fn add(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { mat: self.mat.add(&other.mat) }
    }

    pub fn sub(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { mat: self.mat.sub(&other.mat) }
    }

    pub fn scale(&self, factor: f64) -> HermitianOperator {
        HermitianOperator { mat: self.mat.scale_re(factor) }
    }

    /// Real expectation value `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let hv = self.mat.apply_vec(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(hv.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Symmetrizes a square matrix to `(M + M†)/2`.
pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    m.add(&m.dagger()).scale_re(0.5)
}

/// A Hermitian operator verified positive semidefinite.
#[derive(Clone, Debug)]
pub struct PositiveOperator {
    op: HermitianOperator,
}

impl PositiveOperator {
    /// Validates `λ_min ≥ -1e-9 · max(λ_max, 0)` (with a tiny absolute slack so
    /// that all-zero matrices with roundoff-scale entries pass).
    pub fn try_new(op: HermitianOperator) -> Result<Self> {
        let (vals, _) = op.eigh()?;
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min < -(POSITIVITY_TOL * max.max(0.0) + 1e-14) {
            return Err(Error::NotPositive { min_eig: min });
        }
        Ok(PositiveOperator { op })
    }

    /// Projects onto the PSD cone by clipping negative eigenvalues to zero.
    ///
    /// Intended for solver output that is PSD only up to solver tolerance.
    pub fn project(op: &HermitianOperator) -> Result<Self> {
        let (vals, vecs) = op.eigh()?;
        let mat = from_spectrum(&vals.iter().map(|v| v.max(0.0)).collect::<Vec<_>>(), &vecs);
        Ok(PositiveOperator { op: HermitianOperator { mat } })
    }

    pub fn zeros(dim: usize) -> Self {
        PositiveOperator { op: HermitianOperator::zeros(dim) }
    }

    pub fn identity(dim: usize) -> Self {
        PositiveOperator { op: HermitianOperator::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn hermitian(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn trace(&self) -> f64 {
        self.op.trace()
    }

    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        self.op.eigh()
    }

    pub fn scale(&self, factor: f64) -> Result<PositiveOperator> {
        if factor < 0.0 {
            return Err(Error::InvalidArgument("scaling a positive operator by a negative factor".into()));
        }
        Ok(PositiveOperator { op: self.op.scale(factor) })
    }
}

/// Rebuilds `Σ λ_i v_i v_i†` from spectral data.
pub(crate) fn from_spectrum(vals: &[f64], vecs: &ComplexMatrix) -> ComplexMatrix {
    let d = vecs.rows();
    let mut out = Array2::<Complex64>::zeros((d, d));
    for (k, &lam) in vals.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        for i in 0..d {
            let vi = vecs.at(i, k);
            if vi == Complex64::ZERO {
                continue;
            }
            for j in 0..d {
                out[(i, j)] += lam * vi * vecs.at(j, k).conj();
            }
        }
    }
    ComplexMatrix { data: out }
}

/// A positive operator with unit trace: a quantum state.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: PositiveOperator,
}

impl DensityMatrix {
    /// Validates `|Tr ρ - 1| ≤ 1e-9`.
    pub fn try_new(op: PositiveOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace { trace: tr });
        }
        Ok(DensityMatrix { op })
    }

    /// Builds a density matrix directly from a verified-Hermitian matrix.
    pub fn from_hermitian(op: HermitianOperator) -> Result<Self> {
        DensityMatrix::try_new(PositiveOperator::try_new(op)?)
    }

    /// Builds from a raw matrix, running the whole validation ladder.
    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        DensityMatrix::from_hermitian(HermitianOperator::try_new(m)?)
    }

    /// Exactly normalizes a positive operator with strictly positive trace.
    pub fn normalized(op: PositiveOperator) -> Result<Self> {
        let tr = op.trace();
        if tr <= 0.0 {
            return Err(Error::InvalidArgument(format!("cannot normalize trace {tr}")));
        }
        Ok(DensityMatrix { op: op.scale(1.0 / tr)? })
    }

    /// Projects solver output to the nearest-in-spirit legitimate state:
    /// symmetrize, clip negative eigenvalues, renormalize the trace.
    pub fn sanitize(m: &ComplexMatrix) -> Result<Self> {
        let herm = HermitianOperator { mat: symmetrize(m) };
        DensityMatrix::normalized(PositiveOperator::project(&herm)?)
    }

    /// The rank-one state `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &PureState) -> Self {
        let d = psi.dim();
        let mut out = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = psi.amplitudes()[i] * psi.amplitudes()[j].conj();
            }
        }
        DensityMatrix {
            op: PositiveOperator { op: HermitianOperator { mat: ComplexMatrix { data: out } } },
        }
    }

    /// The maximally mixed state `1/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            op: PositiveOperator {
                op: HermitianOperator { mat: ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64) },
            },
        }
    }

    /// A diagonal state from a probability vector.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument("probabilities must be nonnegative and sum to 1".into()));
        }
        let d = p.len();
        let mut m = Array2::zeros((d, d));
        for (i, &pi) in p.iter().enumerate() {
            m[(i, i)] = Complex64::new(pi, 0.0);
        }
        DensityMatrix::from_matrix(ComplexMatrix { data: m })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn hermitian(&self) -> &HermitianOperator {
        self.op.hermitian()
    }

    pub fn positive(&self) -> &PositiveOperator {
        &self.op
    }

    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        self.op.eigh()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace()
    }
}

/// A normalized state vector.
#[derive(Clone, Debug)]
pub struct PureState {
    amps: Array1<Complex64>,
}

impl PureState {
    /// Validates `|‖ψ‖ - 1| ≤ 1e-10`.
    pub fn try_new(amps: Array1<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { amps })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(amps: Array1<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { amps: amps.mapv(|v| v / norm) })
    }

    /// The computational basis state `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = Array1::zeros(dim);
        amps[k] = Complex64::ONE;
        PureState { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amps
    }

    /// The projector `|ψ⟩⟨ψ|` as a density matrix.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Inner product `⟨self|other⟩`.
    pub fn braket(&self, other: &PureState) -> Complex64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Tensor product of two pure states.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Array1::zeros(self.dim() * other.dim());
        for (i, a) in self.amps.iter().enumerate() {
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * other.dim() + j] = a * b;
            }
        }
        PureState { amps }
    }
}

/// Ordered list of labeled tensor factors making up a composite system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemLayout {
    parts: Vec<(String, usize)>,
}

impl SystemLayout {
    pub fn new(parts: Vec<(impl Into<String>, usize)>) -> Result<Self> {
        let parts: Vec<(String, usize)> = parts.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if parts.iter().any(|(_, d)| *d == 0) {
            return Err(Error::InvalidArgument("zero-dimensional subsystem".into()));
        }
        for (i, (li, _)) in parts.iter().enumerate() {
            if parts.iter().skip(i + 1).any(|(lj, _)| lj == li) {
                return Err(Error::InvalidArgument(format!("duplicate subsystem label {li:?}")));
            }
        }
        Ok(SystemLayout { parts })
    }

    /// A single unnamed-system layout of the given dimension.
    pub fn single(label: impl Into<String>, dim: usize) -> Self {
        SystemLayout { parts: vec![(label.into(), dim)] }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parts.iter().map(|(_, d)| *d).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.parts.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.parts.iter().map(|(_, d)| d).product()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.parts
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, d)| *d)
            .ok_or_else(|| Error::UnknownLabel(label.into()))
    }

    pub fn position_of(&self, label: &str) -> Result<usize> {
        self.parts
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.into()))
    }

    /// Returns a new layout with `label`'s dimension replaced.
    pub fn with_dim(&self, label: &str, dim: usize) -> Result<SystemLayout> {
        let mut parts = self.parts.clone();
        let pos = self.position_of(label)?;
        parts[pos].1 = dim;
        Ok(SystemLayout { parts })
    }

    /// Returns the layout restricted to the given labels, in their current order.
    pub fn restricted_to(&self, keep: &[&str]) -> Result<SystemLayout> {
        for l in keep {
            self.position_of(l)?;
        }
        Ok(SystemLayout {
            parts: self
                .parts
                .iter()
                .filter(|(l, _)| keep.contains(&l.as_str()))
                .cloned()
                .collect(),
        })
    }
}
