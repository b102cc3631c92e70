//! Seeded random generators for states, operators, and channels.
//!
//! Everything here is driven by a caller-supplied [`rand::Rng`], so a fixed
//! seed reproduces the exact same objects across runs and platforms (we only
//! draw through `rand_distr`'s normal and uniform samplers). Densities are
//! produced via Wishart-style `G G†` constructions, unitaries via QR with the
//! usual phase fix, and channels via Haar-random Stinespring isometries.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::qlinalg::{Channel, ComplexMatrix, DensityMatrix, PositiveOperator, PureState};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

/// A Haar-random unit vector of the given dimension.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Array1<Complex64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("zero-dimensional vector".into()));
    }
    loop {
        let v = Array1::from_iter((0..dim).map(|_| gaussian_complex(rng)));
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return Ok(v.mapv(|a| a / norm));
        }
    }
}

/// A Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    PureState::normalized(random_unit_vector(dim, rng)?)
}

/// A random full-rank density matrix (Wishart construction `G G† / Tr`).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    random_density_rank(dim, dim, rng)
}

/// A random density matrix of the given rank.
pub fn random_density_rank<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} is outside 1..={dim}"
        )));
    }
    let g = Array2::from_shape_fn((dim, rank), |_| gaussian_complex(rng));
    let m = ComplexMatrix::new(g)?;
    let w = m.mul(&m.dagger());
    DensityMatrix::sanitize(&w)
}

/// A random strictly positive operator with trace in `[0.5, 2]`.
pub fn random_positive<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PositiveOperator> {
    let rho = random_density(dim, rng)?;
    let t: f64 = rng.random_range(0.5..2.0);
    rho.positive().scale(t)
}

/// A random diagonal (classical) density matrix with strictly positive entries.
pub fn random_diag_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    let mut p: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    DensityMatrix::from_probabilities(&p)
}

/// A Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    use ndarray_linalg::QR;
    let g = Array2::from_shape_fn((dim, dim), |_| gaussian_complex(rng));
    let (q, r) = g.qr().map_err(Error::from)?;
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::new(q)
}

/// A random channel from a Haar-random Stinespring isometry with an
/// environment of dimension `env_dim`.
pub fn random_channel<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    env_dim: usize,
    rng: &mut R,
) -> Result<Channel> {
    let g = Array2::from_shape_fn((dim_out * env_dim, dim_in), |_| gaussian_complex(rng));
    channel_from_tall_matrix(g, dim_in, dim_out, env_dim)
}

/// Like [`random_channel`] but with all-real Kraus operators, which keeps the
/// derived Choi matrices real as well.
pub fn random_real_channel<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    env_dim: usize,
    rng: &mut R,
) -> Result<Channel> {
    let g = Array2::from_shape_fn((dim_out * env_dim, dim_in), |_| {
        Complex64::new(gaussian(rng), 0.0)
    });
    channel_from_tall_matrix(g, dim_in, dim_out, env_dim)
}

fn channel_from_tall_matrix(
    g: Array2<Complex64>,
    dim_in: usize,
    dim_out: usize,
    env_dim: usize,
) -> Result<Channel> {
    use ndarray_linalg::QR;
    if dim_out * env_dim < dim_in {
        return Err(Error::InvalidArgument(format!(
            "environment too small: {dim_out}x{env_dim} < {dim_in}"
        )));
    }
    // Thin QR of the tall Ginibre matrix yields a Haar-random isometry
    // V: in -> out ⊗ env; slicing out the environment rows gives the Kraus set.
    let (q, _) = g.qr().map_err(Error::from)?;
    let mut kraus = Vec::with_capacity(env_dim);
    for e in 0..env_dim {
        let mut k = Array2::<Complex64>::zeros((dim_out, dim_in));
        for a in 0..dim_out {
            for i in 0..dim_in {
                k[(a, i)] = q[(a * env_dim + e, i)];
            }
        }
        kraus.push(ComplexMatrix::new(k)?);
    }
    Channel::from_kraus(kraus)
}
