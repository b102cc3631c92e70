//! Quantum channels in Kraus and Choi form.

use super::{
    ComplexMatrix, DensityMatrix, HermitianOperator, PositiveOperator, SystemLayout, TRACE_TOL,
};
use super::ops::permute_systems;
use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

/// A completely positive trace-preserving map between finite systems.
///
/// Both representations are kept: the Kraus form drives state evolution, the
/// Choi matrix is the data entering semidefinite programs. The Choi matrix is
/// unnormalized (`Tr_B Γ = 1_R`) and lives on `[R, B]` with `R` a copy of the
/// input system, indexed row-major as `i·dim_out + a`.
#[derive(Clone, Debug)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
    choi: PositiveOperator,
}

impl Channel {
    /// Builds a channel from Kraus operators, validating trace preservation.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != dim_out || k.cols() != dim_in) {
            return Err(Error::InvalidChannel("inconsistent Kraus shapes".into()));
        }
        let mut acc = ComplexMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            acc = acc.add(&k.dagger().mul(k));
        }
        let dev = acc.max_abs_diff(&ComplexMatrix::identity(dim_in));
        if dev > TRACE_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus operators are not trace preserving: deviation {dev:.3e}"
            )));
        }
        let choi = choi_from_kraus(&kraus, dim_in, dim_out)?;
        Ok(Channel { dim_in, dim_out, kraus, choi })
    }

    /// Builds a channel from its (unnormalized) Choi matrix.
    ///
    /// Positivity is certified by the `PositiveOperator` type; trace
    /// preservation (`Tr_B Γ = 1_R`) is validated here. Kraus operators are
    /// extracted from the spectral decomposition of the Choi matrix.
    pub fn from_choi(choi: PositiveOperator, dim_in: usize, dim_out: usize) -> Result<Self> {
        if choi.dim() != dim_in * dim_out {
            return Err(Error::DimMismatch(format!(
                "Choi dimension {} does not equal dim_in*dim_out = {}",
                choi.dim(),
                dim_in * dim_out
            )));
        }
        for i in 0..dim_in {
            for j in 0..dim_in {
                let mut acc = Complex64::ZERO;
                for a in 0..dim_out {
                    acc += choi.matrix().at(i * dim_out + a, j * dim_out + a);
                }
                let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
                if (acc - expected).norm() > TRACE_TOL {
                    return Err(Error::InvalidChannel(format!(
                        "Choi marginal deviates from identity at ({i},{j})"
                    )));
                }
            }
        }
        let (vals, vecs) = choi.eigh()?;
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let mut kraus = Vec::new();
        for (k, &lam) in vals.iter().enumerate() {
            if lam <= 1e-12 * max.max(1.0) {
                continue;
            }
            let s = lam.sqrt();
            let mut km = Array2::<Complex64>::zeros((dim_out, dim_in));
            for i in 0..dim_in {
                for a in 0..dim_out {
                    km[(a, i)] = s * vecs.at(i * dim_out + a, k);
                }
            }
            kraus.push(ComplexMatrix::new(km)?);
        }
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("Choi matrix has empty support".into()));
        }
        Ok(Channel { dim_in, dim_out, kraus, choi })
    }

    /// The identity channel on a `dim`-dimensional system.
    pub fn identity(dim: usize) -> Self {
        Channel::from_kraus(vec![ComplexMatrix::identity(dim)])
            .expect("identity channel is trace preserving")
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// The unnormalized Choi matrix (`Tr_B Γ = 1_R`).
    pub fn choi(&self) -> &PositiveOperator {
        &self.choi
    }

    /// The Choi state `Γ / dim_in`, i.e. the output on one half of a maximally
    /// entangled input.
    pub fn normalized_choi(&self) -> Result<DensityMatrix> {
        DensityMatrix::try_new(self.choi.scale(1.0 / self.dim_in as f64)?)
    }

    /// Applies the channel to a raw matrix (not necessarily a state).
    ///
    /// Evaluated by direct contraction with the stored Choi matrix,
    /// `E(x)[a,b] = Σ_{ij} x[i,j] Γ[(i,a),(j,b)]`, so that channels built from
    /// an exactly-known Choi matrix act without an eigendecomposition round
    /// trip; this preserves output-matrix entries far smaller than the
    /// round-off scale of the Choi spectrum.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !x.is_square() || x.dim() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "channel input dimension {} does not match operator dimension {}",
                self.dim_in,
                x.rows()
            )));
        }
        let j = self.choi.matrix();
        let mut out = Array2::<Complex64>::zeros((self.dim_out, self.dim_out));
        for i in 0..self.dim_in {
            for jj in 0..self.dim_in {
                let xv = x.at(i, jj);
                if xv == Complex64::ZERO {
                    continue;
                }
                for a in 0..self.dim_out {
                    for b in 0..self.dim_out {
                        out[(a, b)] += xv * j.at(i * self.dim_out + a, jj * self.dim_out + b);
                    }
                }
            }
        }
        ComplexMatrix::new(out)
    }

    /// Applies the channel to a whole state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.apply_matrix(rho.matrix())?)
    }

    /// Tensor product of two channels (inputs and outputs concatenate).
    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kron(b));
            }
        }
        Channel::from_kraus(kraus)
    }

    /// `n`-fold tensor power of the channel (`n ≥ 1`).
    pub fn tensor_power(&self, n: usize) -> Result<Channel> {
        if n == 0 {
            return Err(Error::InvalidArgument("tensor power requires n >= 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self)?;
        }
        Ok(out)
    }
}

/// Builds the unnormalized Choi matrix `Σ_k vec(K_k) vec(K_k)†`.
fn choi_from_kraus(
    kraus: &[ComplexMatrix],
    dim_in: usize,
    dim_out: usize,
) -> Result<PositiveOperator> {
    let d = dim_in * dim_out;
    let mut out = Array2::<Complex64>::zeros((d, d));
    for k in kraus {
        // vec(K)[(i,a)] = K[a,i]
        for i in 0..dim_in {
            for a in 0..dim_out {
                let va = k.at(a, i);
                if va == Complex64::ZERO {
                    continue;
                }
                for j in 0..dim_in {
                    for b in 0..dim_out {
                        out[(i * dim_out + a, j * dim_out + b)] += va * k.at(b, j).conj();
                    }
                }
            }
        }
    }
    PositiveOperator::try_new(HermitianOperator::try_new(ComplexMatrix::new(out)?)?)
}

/// Applies a channel to one named subsystem of a composite state.
///
/// The target subsystem's dimension must equal the channel input dimension;
/// it is replaced by the channel output dimension in the returned layout, with
/// all subsystem positions unchanged.
pub fn apply_channel(
    ch: &Channel,
    state: &DensityMatrix,
    layout: &SystemLayout,
    target: &str,
) -> Result<(DensityMatrix, SystemLayout)> {
    let total = layout.total_dim();
    if state.dim() != total {
        return Err(Error::DimMismatch("state does not match layout".into()));
    }
    let d_t = layout.dim_of(target)?;
    if d_t != ch.dim_in() {
        return Err(Error::DimMismatch(format!(
            "target dimension {} does not match channel input {}",
            d_t,
            ch.dim_in()
        )));
    }
    let labels: Vec<String> = layout.labels().iter().map(|s| s.to_string()).collect();

    // Move the target to the front, act with K ⊗ 1_rest, move it back.
    let mut front_order: Vec<&str> = vec![target];
    front_order.extend(labels.iter().map(|s| s.as_str()).filter(|l| *l != target));
    let (x_front, layout_front) = permute_systems(state.matrix(), layout, &front_order)?;

    let rest_dim = total / d_t;
    let id_rest = ComplexMatrix::identity(rest_dim);
    let mut out = ComplexMatrix::zeros(ch.dim_out() * rest_dim, ch.dim_out() * rest_dim);
    for k in ch.kraus() {
        let big = k.kron(&id_rest);
        out = out.add(&big.mul(&x_front).mul(&big.dagger()));
    }

    let layout_front_out = layout_front.with_dim(target, ch.dim_out())?;
    let original_order: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let (x_back, layout_back) = permute_systems(&out, &layout_front_out, &original_order)?;
    Ok((DensityMatrix::from_matrix(x_back)?, layout_back))
}
