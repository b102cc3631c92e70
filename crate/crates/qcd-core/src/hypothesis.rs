//! Binary quantum hypothesis testing.
//!
//! Computes the optimal type-II error `β_ε(ρ‖σ) = min { Tr(Πσ) : 0 ≤ Π ≤ 1,
//! Tr(Πρ) ≥ 1-ε }` and the hypothesis-testing relative entropy
//! `D_H^ε = -log β_ε` in bits, for states and (in parallel form) for channels.
//! Two independent routes are provided for states — a semidefinite program and
//! a Neyman–Pearson eigenbasis construction — so each can check the other.

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::qlinalg::{
    from_spectrum, permutation_matrix, support_projector, symmetrize, tensor_power, Channel,
    ComplexMatrix, DensityMatrix, HermitianOperator, PositiveOperator,
};
use crate::sdp::{MatExpr, Model, SolverOptions};
use ndarray::Array2;
use num_complex::Complex64;

/// Solver-path type-II errors below this are reported as `D_H = +∞`.
pub const SOLVER_BETA_FLOOR: f64 = 1e-12;

/// Outcome of an optimal binary test between two states.
#[derive(Clone, Debug)]
pub struct TestResult {
    /// The measurement operator `Π` (Hermitian, eigenvalues in `[0, 1]`).
    pub pi: ComplexMatrix,
    /// Type-I error `1 - Tr(Πρ)` of the returned test.
    pub alpha: f64,
    /// Type-II error `Tr(Πσ)` of the returned test.
    pub beta: f64,
    /// `-log β` in bits; `+∞` when `β` is below the route's floor.
    pub dh: ExtendedReal,
}

/// `-log2 β` with a floor below which the value is declared infinite.
fn dh_from_beta(beta: f64, floor: f64) -> ExtendedReal {
    if beta <= floor {
        ExtendedReal::PosInf
    } else {
        ExtendedReal::Finite(-beta.log2())
    }
}

/// Roundoff-scale floor for analytically constructed tests.
fn analytic_floor(sigma: &ComplexMatrix) -> f64 {
    1e-30 * sigma.max_abs().max(1.0)
}

fn re_trace_prod(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.mul(b).trace().re
}

/// Clips a Hermitian matrix's eigenvalues to `[0, 1]`.
fn clip_to_test(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = HermitianOperator::try_new(symmetrize(m))?;
    let (vals, vecs) = h.eigh()?;
    let clipped: Vec<f64> = vals.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(from_spectrum(&clipped, &vecs))
}

fn build_result(
    pi: ComplexMatrix,
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    floor: f64,
) -> TestResult {
    let alpha = (1.0 - re_trace_prod(&pi, rho)).clamp(0.0, 1.0);
    let beta = re_trace_prod(&pi, sigma).max(0.0);
    let dh = dh_from_beta(beta, floor);
    TestResult { pi, alpha, beta, dh }
}

/// Optimal type-II error between states, `β_ε(ρ‖σ)`, via semidefinite programming.
///
/// At `ε = 0` the optimum is known in closed form — `Π` is the support
/// projector of `ρ` and `β₀ = Tr(Π_ρ σ)` — so that case skips the solver and
/// only treats roundoff-scale `β` as infinite. For `ε > 0` the SDP is solved
/// and the returned test operator is re-certified: `α` and `β` are recomputed
/// from the clipped `Π`, and `β < 1e-12` reports `D_H = +∞`.
pub fn dh_state(
    rho: &DensityMatrix,
    sigma: &PositiveOperator,
    eps: f64,
    opts: &SolverOptions,
) -> Result<TestResult> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch("dh_state with mismatched dimensions".into()));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("dh_state needs ε in [0,1), got {eps}")));
    }
    if eps == 0.0 {
        let pi = support_projector(rho.hermitian())?;
        return Ok(build_result(
            pi.matrix().clone(),
            rho.matrix(),
            sigma.matrix(),
            analytic_floor(sigma.matrix()),
        ));
    }
    let d = rho.dim();
    let real = rho.matrix().is_real() && sigma.matrix().is_real();
    let mut model = Model::new();
    let pi = model.add_hermitian_var(d, real);
    model.add_psd(pi.expr());
    let mut upper = MatExpr::from_constant(&ComplexMatrix::identity(d));
    upper.add_expr(&pi.expr(), -1.0);
    model.add_psd(upper);
    model.add_ge(pi.trace_product(rho.matrix()), 1.0 - eps);
    model.minimize(pi.trace_product(sigma.matrix()));
    let sol = model.solve(opts)?;
    if !sol.status.is_optimal() {
        return Err(Error::Solver {
            status: format!("{:?}", sol.status),
            context: "dh_state SDP".into(),
        });
    }
    let pi_mat = clip_to_test(&pi.value(&sol.x))?;
    Ok(build_result(pi_mat, rho.matrix(), sigma.matrix(), SOLVER_BETA_FLOOR))
}

/// Optimal type-II error between states via the Neyman–Pearson construction.
///
/// The optimal test has the form `Π(t) = P_{ρ - tσ > 0} + λ P_{ρ - tσ = 0}`:
/// a bisection over `t` locates the threshold where the hard projector's
/// type-I error crosses `ε`, and the near-null eigenvectors of the pencil are
/// then admitted with the mixing weight `λ` that makes `Tr(Πρ) = 1 - ε` hold
/// exactly. Independent of the SDP route in [`dh_state`].
pub fn dh_neyman_pearson(
    rho: &DensityMatrix,
    sigma: &PositiveOperator,
    eps: f64,
) -> Result<TestResult> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch("dh_neyman_pearson with mismatched dimensions".into()));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "dh_neyman_pearson needs ε in [0,1), got {eps}"
        )));
    }
    let floor = analytic_floor(sigma.matrix());
    if eps == 0.0 {
        let pi = support_projector(rho.hermitian())?;
        return Ok(build_result(pi.matrix().clone(), rho.matrix(), sigma.matrix(), floor));
    }

    // Hard test at threshold t: the strictly-positive eigenspace of ρ - tσ,
    // excluding a relative zero window that later receives the mixing weight.
    let pencil = |t: f64| -> Result<(Vec<f64>, ComplexMatrix, f64)> {
        let a = rho.matrix().sub(&sigma.matrix().scale_re(t));
        let h = HermitianOperator::try_new(symmetrize(&a))?;
        let (vals, vecs) = h.eigh()?;
        let norm = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Ok((vals, vecs, 1e-9 * norm))
    };
    let hard_alpha = |t: f64| -> Result<f64> {
        let (vals, vecs, w) = pencil(t)?;
        let select: Vec<f64> =
            vals.iter().map(|&a| if a > w { 1.0 } else { 0.0 }).collect();
        let p = from_spectrum(&select, &vecs);
        Ok(1.0 - re_trace_prod(&p, rho.matrix()))
    };

    // Bracket the threshold: α(t) is nondecreasing, α(0) ≈ 0.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut bracketed = false;
    while hi <= 1e30 {
        if hard_alpha(hi)? > eps {
            bracketed = true;
            break;
        }
        lo = hi;
        hi *= 4.0;
    }
    if !bracketed {
        // Even an arbitrarily strict threshold keeps enough of ρ: the
        // surviving eigenspace is essentially off σ's support, so β ≈ 0.
        let (vals, vecs, w) = pencil(hi)?;
        let select: Vec<f64> =
            vals.iter().map(|&a| if a > w { 1.0 } else { 0.0 }).collect();
        let pi = from_spectrum(&select, &vecs);
        return Ok(build_result(pi, rho.matrix(), sigma.matrix(), floor));
    }
    if hard_alpha(lo)? > eps {
        // ε is below even the t = 0 spectral-cutoff noise; mix at t = lo.
        hi = lo;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if hard_alpha(mid)? > eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // At the upper end of the bracket the hard test is just too small; the
    // eigenvectors whose pencil eigenvalue sits in the zero window are exactly
    // the ones crossing at the threshold. Mix them in to meet 1 - ε.
    let (vals, vecs, w) = pencil(hi)?;
    let base: Vec<f64> = vals.iter().map(|&a| if a > w { 1.0 } else { 0.0 }).collect();
    let window: Vec<f64> =
        vals.iter().map(|&a| if a.abs() <= w { 1.0 } else { 0.0 }).collect();
    let p_base = from_spectrum(&base, &vecs);
    let p_win = from_spectrum(&window, &vecs);
    let deficit = (1.0 - eps) - re_trace_prod(&p_base, rho.matrix());
    let mut pi = p_base;
    if deficit > 0.0 {
        let r = re_trace_prod(&p_win, rho.matrix());
        if r > 0.0 {
            let lam = (deficit / r).min(1.0);
            pi = pi.add(&p_win.scale_re(lam));
        }
    }
    Ok(build_result(pi, rho.matrix(), sigma.matrix(), floor))
}

/// Max-relative entropy between channels, `D_max(E‖F)`, in bits.
///
/// Equals the max-relative entropy of the normalized Choi states; the
/// supremum over input states is attained there.
pub fn channel_dmax(e: &Channel, f: &Channel) -> Result<ExtendedReal> {
    if e.dim_in() != f.dim_in() || e.dim_out() != f.dim_out() {
        return Err(Error::DimMismatch("channel_dmax with mismatched channels".into()));
    }
    let ce = e.normalized_choi()?;
    let cf = f.normalized_choi()?;
    crate::divergences::dmax(&ce, cf.positive())
}

/// Outcome of the parallel channel-discrimination program.
#[derive(Clone, Debug)]
pub struct ChannelTestResult {
    /// Optimal strategy operator `Ω` on `[R^n, B^n]` (inputs first, outputs second).
    pub omega: ComplexMatrix,
    /// Optimal input marginal `ρ_{R^n}`.
    pub input_marginal: DensityMatrix,
    /// Type-I error of the returned strategy.
    pub alpha: f64,
    /// Type-II error `Tr(Ω Γ_F^{⊗n})` of the returned strategy.
    pub beta: f64,
    /// `-log β` in bits.
    pub dh: ExtendedReal,
}

/// Largest direct parallel program dimension `(d_in · d_out)^n` accepted.
pub const PARALLEL_DIM_CAP: usize = 4096;

/// Optimal parallel discrimination of `n` channel uses,
///
/// `β_ε^n(E‖F) = min { Tr(Ω Γ_F^{⊗n}) : Tr(Ω Γ_E^{⊗n}) ≥ 1-ε,
///                     0 ≤ Ω ≤ ρ_{R^n} ⊗ 1_{B^n}, Tr ρ_{R^n} = 1 }`,
///
/// where `Γ` are the unnormalized Choi operators (`Tr_B Γ = 1_R`). The program
/// jointly optimizes the input state and the measurement; `n = 1` with `E = F`
/// has optimum exactly `1 - ε`. Dimensions above [`PARALLEL_DIM_CAP`] are
/// refused.
pub fn channel_dh_parallel(
    e: &Channel,
    f: &Channel,
    n: usize,
    eps: f64,
    opts: &SolverOptions,
) -> Result<ChannelTestResult> {
    if e.dim_in() != f.dim_in() || e.dim_out() != f.dim_out() {
        return Err(Error::DimMismatch("channel_dh_parallel with mismatched channels".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("channel_dh_parallel needs n >= 1".into()));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "channel_dh_parallel needs ε in [0,1), got {eps}"
        )));
    }
    let di = e.dim_in();
    let dout = e.dim_out();
    let dd = (di * dout)
        .checked_pow(n as u32)
        .filter(|&v| v <= PARALLEL_DIM_CAP)
        .ok_or_else(|| {
            Error::ResourceCap(format!(
                "parallel program dimension ({di}·{dout})^{n} exceeds {PARALLEL_DIM_CAP}"
            ))
        })?;
    let dr = di.pow(n as u32);
    let db = dout.pow(n as u32);

    // Tensor powers come out interleaved [R1 B1 … Rn Bn]; collect to [R^n, B^n].
    let ge = tensor_power(e.choi().matrix(), n);
    let gf = tensor_power(f.choi().matrix(), n);
    let (ge_c, gf_c) = if n == 1 {
        (ge, gf)
    } else {
        let dims: Vec<usize> =
            (0..2 * n).map(|k| if k % 2 == 0 { di } else { dout }).collect();
        let perm: Vec<usize> = (0..n).map(|j| 2 * j).chain((0..n).map(|j| 2 * j + 1)).collect();
        let p = permutation_matrix(&dims, &perm)?;
        let pd = p.dagger();
        (p.mul(&ge).mul(&pd), p.mul(&gf).mul(&pd))
    };

    let real = ge_c.is_real() && gf_c.is_real();
    let mut model = Model::new();
    let omega = model.add_hermitian_var(dd, real);
    let rho = model.add_hermitian_var(dr, real);
    model.add_psd(omega.expr());
    model.add_psd(rho.expr());
    // ρ_{R^n} ⊗ 1_{B^n} - Ω ⪰ 0, with the identity factor applied basis-wise.
    let mut gap = rho.expr().map_bases(dd, |b| kron_eye(b, db));
    gap.add_expr(&omega.expr(), -1.0);
    model.add_psd(gap);
    model.add_eq(rho.trace_expr(), 1.0);
    model.add_ge(omega.trace_product(&ge_c), 1.0 - eps);
    model.minimize(omega.trace_product(&gf_c));

    let sol = model.solve(opts)?;
    if !sol.status.is_optimal() {
        return Err(Error::Solver {
            status: format!("{:?}", sol.status),
            context: "channel_dh_parallel SDP".into(),
        });
    }
    let omega_mat = omega.value(&sol.x);
    let alpha = (1.0 - re_trace_prod(&omega_mat, &ge_c)).clamp(0.0, 1.0);
    let beta = re_trace_prod(&omega_mat, &gf_c).max(0.0);
    Ok(ChannelTestResult {
        omega: omega_mat,
        input_marginal: DensityMatrix::sanitize(&rho.value(&sol.x))?,
        alpha,
        beta,
        dh: dh_from_beta(beta, SOLVER_BETA_FLOOR),
    })
}

/// `B ⊗ 1_k` on raw arrays, used to lift input-marginal bases.
fn kron_eye(b: &Array2<Complex64>, k: usize) -> Array2<Complex64> {
    let n = b.nrows();
    let mut out = Array2::<Complex64>::zeros((n * k, n * k));
    for ((i, j), v) in b.indexed_iter() {
        if *v != Complex64::ZERO {
            for t in 0..k {
                out[(i * k + t, j * k + t)] = *v;
            }
        }
    }
    out
}
