//! Tensor-product bookkeeping and spectral matrix functions.

use super::{
    from_spectrum, symmetrize, ComplexMatrix, DensityMatrix, HermitianOperator, PureState,
    SystemLayout, SUPPORT_CUTOFF,
};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Kronecker product of two matrices.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// `n`-fold Kronecker power; `n = 0` gives the scalar identity.
pub fn tensor_power(a: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1);
    for _ in 0..n {
        out = out.kron(a);
    }
    out
}

/// Row-major strides of a dimension list.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Enumerates all flat offsets generated by the digits of the given positions.
fn offsets(dims: &[usize], positions: &[usize], all_strides: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &base in &out {
            for digit in 0..dims[p] {
                next.push(base + digit * all_strides[p]);
            }
        }
        out = next;
    }
    out
}

/// Traces out every subsystem not listed in `keep`, preserving layout order.
///
/// Returns the reduced matrix together with its layout.
pub fn partial_trace(
    x: &ComplexMatrix,
    layout: &SystemLayout,
    keep: &[&str],
) -> Result<(ComplexMatrix, SystemLayout)> {
    let dims = layout.dims();
    let total: usize = dims.iter().product();
    if !x.is_square() || x.dim() != total {
        return Err(Error::DimMismatch(format!(
            "matrix dimension {} does not match layout dimension {}",
            x.rows(),
            total
        )));
    }
    let keep_positions: Vec<usize> = {
        let mut pos: Vec<usize> = Vec::new();
        for l in keep {
            pos.push(layout.position_of(l)?);
        }
        pos.sort_unstable();
        pos.dedup();
        if pos.len() != keep.len() {
            return Err(Error::InvalidArgument("duplicate label in keep list".into()));
        }
        pos
    };
    let traced_positions: Vec<usize> =
        (0..dims.len()).filter(|p| !keep_positions.contains(p)).collect();
    let st = strides(&dims);
    let keep_offsets = offsets(&dims, &keep_positions, &st);
    let traced_offsets = offsets(&dims, &traced_positions, &st);

    let dk = keep_offsets.len();
    let mut out = Array2::<Complex64>::zeros((dk, dk));
    for (a, &ra) in keep_offsets.iter().enumerate() {
        for (b, &rb) in keep_offsets.iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for &t in &traced_offsets {
                acc += x.at(ra + t, rb + t);
            }
            out[(a, b)] = acc;
        }
    }
    let kept_labels: Vec<&str> = keep_positions
        .iter()
        .map(|&p| layout.labels()[p])
        .collect();
    Ok((ComplexMatrix::new(out)?, layout.restricted_to(&kept_labels)?))
}

/// Unitary permutation matrix `P` reordering tensor factors.
///
/// `perm[j]` is the old position of the subsystem that ends up at new position
/// `j`; `P` maps old basis vector `|i⟩` to the reordered basis vector, i.e.
/// `P[new_index, old_index] = 1`.
pub fn permutation_matrix(dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let map = permutation_index_map(dims, perm)?;
    let total = map.len();
    let mut out = Array2::<Complex64>::zeros((total, total));
    for (old, &new) in map.iter().enumerate() {
        out[(new, old)] = Complex64::ONE;
    }
    ComplexMatrix::new(out)
}

/// Flat-index remap underlying [`permutation_matrix`]: `map[old] = new`.
pub fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let k = dims.len();
    if perm.len() != k {
        return Err(Error::DimMismatch("permutation length mismatch".into()));
    }
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::InvalidArgument("invalid permutation".into()));
        }
        seen[p] = true;
    }
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_strides = strides(&new_dims);
    let total: usize = dims.iter().product();
    let mut map = vec![0usize; total];
    for old in 0..total {
        let mut new = 0usize;
        for (j, &p) in perm.iter().enumerate() {
            let digit = (old / old_strides[p]) % dims[p];
            new += digit * new_strides[j];
        }
        map[old] = new;
    }
    Ok(map)
}

/// Reorders the tensor factors of an operator to the given label order.
pub fn permute_systems(
    x: &ComplexMatrix,
    layout: &SystemLayout,
    new_order: &[&str],
) -> Result<(ComplexMatrix, SystemLayout)> {
    let labels = layout.labels();
    if new_order.len() != labels.len() {
        return Err(Error::DimMismatch("new_order must mention every subsystem".into()));
    }
    let perm: Vec<usize> = new_order
        .iter()
        .map(|l| layout.position_of(l))
        .collect::<Result<_>>()?;
    let dims = layout.dims();
    let total: usize = dims.iter().product();
    if !x.is_square() || x.dim() != total {
        return Err(Error::DimMismatch("matrix does not match layout".into()));
    }
    let map = permutation_index_map(&dims, &perm)?;
    let mut out = Array2::<Complex64>::zeros((total, total));
    for r in 0..total {
        for c in 0..total {
            out[(map[r], map[c])] = x.at(r, c);
        }
    }
    let new_layout = SystemLayout::new(
        perm.iter()
            .map(|&p| (labels[p].to_string(), dims[p]))
            .collect::<Vec<_>>(),
    )?;
    Ok((ComplexMatrix::new(out)?, new_layout))
}

/// Applies a scalar function to a Hermitian operator through its spectrum.
///
/// Eigenvalues with `|λ| ≤ support_cutoff · max|λ|` are treated as exact zeros
/// and mapped to zero (the support convention shared by `log`, fractional
/// powers, and pseudo-inverses). Retained eigenvalues must map to finite
/// values, otherwise [`Error::SpectralDomain`] is returned.
pub fn mat_func(
    h: &HermitianOperator,
    f: impl Fn(f64) -> f64,
    support_cutoff: f64,
) -> Result<HermitianOperator> {
    let (vals, vecs) = h.eigh()?;
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let threshold = support_cutoff * scale;
    let mapped: Vec<f64> = vals
        .iter()
        .map(|&v| {
            if v.abs() <= threshold {
                Ok(0.0)
            } else {
                let fv = f(v);
                if fv.is_finite() {
                    Ok(fv)
                } else {
                    Err(Error::SpectralDomain { eig: v })
                }
            }
        })
        .collect::<Result<_>>()?;
    let mat = symmetrize(&from_spectrum(&mapped, &vecs));
    Ok(HermitianOperator { mat })
}

/// Matrix square root (kernel maps to zero).
pub fn mat_sqrt(h: &HermitianOperator) -> Result<HermitianOperator> {
    mat_func(h, f64::sqrt, SUPPORT_CUTOFF)
}

/// Matrix power on the support (kernel maps to zero; negative powers are
/// pseudo-inverse powers).
pub fn mat_pow(h: &HermitianOperator, p: f64) -> Result<HermitianOperator> {
    mat_func(h, |x| x.powf(p), SUPPORT_CUTOFF)
}

/// Pseudo-inverse square root on the support.
pub fn mat_inv_sqrt(h: &HermitianOperator) -> Result<HermitianOperator> {
    mat_func(h, |x| 1.0 / x.sqrt(), SUPPORT_CUTOFF)
}

/// The support projector (eigenvalues above the cutoff map to one).
pub fn support_projector(h: &HermitianOperator) -> Result<HermitianOperator> {
    mat_func(h, |_| 1.0, SUPPORT_CUTOFF)
}

/// Canonical purification `|ψ⟩ = (1 ⊗ √ρ) Σ_i |i⟩|i⟩` of a state.
///
/// The output lives on `[R, A]` with both factors of dimension `dim(ρ)`, and
/// satisfies `Tr_R |ψ⟩⟨ψ| = ρ`.
pub fn canonical_purification(rho: &DensityMatrix) -> Result<PureState> {
    let d = rho.dim();
    let sq = mat_sqrt(rho.hermitian())?;
    let mut amps = Array1::<Complex64>::zeros(d * d);
    for i in 0..d {
        for a in 0..d {
            amps[i * d + a] = sq.matrix().at(a, i);
        }
    }
    PureState::normalized(amps)
}
