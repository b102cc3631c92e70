//! Entropic divergences between quantum states.
//!
//! All logarithms are base 2 and all divergence values are in bits. Support
//! conditions are decided numerically: eigenvalues within a relative cutoff of
//! zero count as zero, and the first argument's mass on the second's kernel
//! must stay below [`SUPPORT_LEAK_TOL`] for a divergence to be finite.
//!
//! Two cutoff tiers are in play. Quantities evaluated as double sums over the
//! two eigensystems ([`relative_entropy`], [`petz_renyi`],
//! [`state_pair_stats`]) classify kernel directions at the round-off scale
//! [`PAIR_KERNEL_CUTOFF`], so genuinely tiny eigenvalues (down to a few times
//! machine epsilon relative to the largest) still count as support — the
//! extreme-parameter regimes of the showcase channels live there. Quantities
//! that pass through a spectral pseudo-inverse ([`dmax`], [`geometric_renyi`])
//! keep the coarser spectral-calculus cutoff, consistent with the inverse they
//! compute.

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::qlinalg::{
    mat_inv_sqrt, mat_pow, mat_sqrt, symmetrize, DensityMatrix, HermitianOperator,
    PositiveOperator, SUPPORT_CUTOFF,
};
use crate::sdp::{LinExpr, MatExpr, Model, SolveStatus, SolverOptions};
use ndarray::Array2;

/// Maximum tolerated overlap `Tr(ρ Π_σ^⊥)` before a divergence is declared infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// Round-off-scale relative cutoff (2⁻⁵⁴) for eigenpair double sums.
///
/// An eigenvalue counts as support when it exceeds this fraction of the largest
/// eigenvalue magnitude. The threshold sits a factor of a few below machine
/// epsilon so that exactly-representable spectra with genuinely tiny components
/// — such as the showcase channels' outputs at dyadic κ near 2⁻⁵⁰ — are
/// resolved rather than truncated, while exact kernels (computed as ±0 by the
/// eigensolver) are still classified as kernel.
pub const PAIR_KERNEL_CUTOFF: f64 = f64::EPSILON * 0.25;

/// Eigen-data of a state pair: spectra, squared eigenvector overlaps, maxima.
struct PairSpectra {
    lam: Vec<f64>,
    mu: Vec<f64>,
    /// `w[(i, j)] = |⟨x_i|y_j⟩|²`.
    w: Array2<f64>,
    lam_cut: f64,
    mu_cut: f64,
    mu_max: f64,
}

impl PairSpectra {
    fn compute(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<PairSpectra> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimMismatch("state pair has mismatched dimensions".into()));
        }
        let (lam, x) = rho.eigh()?;
        let (mu, y) = sigma.eigh()?;
        let overlap = x.dagger().mul(&y);
        let d = rho.dim();
        let mut w = Array2::<f64>::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                w[(i, j)] = overlap.at(i, j).norm_sqr();
            }
        }
        let lam_max = lam.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mu_max = mu.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Ok(PairSpectra {
            lam,
            mu,
            w,
            lam_cut: PAIR_KERNEL_CUTOFF * lam_max,
            mu_cut: PAIR_KERNEL_CUTOFF * mu_max,
            mu_max,
        })
    }

    /// Mass of the first state on the second's kernel, `Tr(ρ Π_σ^⊥)`, with the
    /// kernel classified at the round-off-scale cutoff.
    fn support_leak(&self) -> f64 {
        self.leak_at(self.mu_cut)
    }

    /// Support leak with the second state's kernel classified at the coarser
    /// spectral-calculus cutoff, for use by pseudo-inverse-based quantities.
    fn support_leak_coarse(&self) -> f64 {
        self.leak_at(SUPPORT_CUTOFF * self.mu_max)
    }

    fn leak_at(&self, mu_cut: f64) -> f64 {
        let mut leak = 0.0;
        for (i, &l) in self.lam.iter().enumerate() {
            if l <= self.lam_cut {
                continue;
            }
            for (j, &m) in self.mu.iter().enumerate() {
                if m <= mu_cut {
                    leak += l * self.w[(i, j)];
                }
            }
        }
        leak
    }
}

/// Umegaki relative entropy `D(ρ‖σ) = Tr ρ(log ρ - log σ)` in bits.
///
/// Returns `+∞` when the support of `ρ` leaks outside the support of `σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &PositiveOperator) -> Result<ExtendedReal> {
    let sp = PairSpectra::compute(rho.hermitian(), sigma.hermitian())?;
    if sp.support_leak() > SUPPORT_LEAK_TOL {
        return Ok(ExtendedReal::PosInf);
    }
    let mut d = 0.0;
    for (i, &l) in sp.lam.iter().enumerate() {
        if l <= sp.lam_cut {
            continue;
        }
        d += l * l.log2();
        for (j, &m) in sp.mu.iter().enumerate() {
            if m > sp.mu_cut {
                d -= l * sp.w[(i, j)] * m.log2();
            }
        }
    }
    Ok(ExtendedReal::Finite(d))
}

/// Binary entropy `h(p) = -p log p - (1-p) log(1-p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("binary entropy needs p in [0,1], got {p}")));
    }
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// Uhlmann fidelity `F(ρ, σ) = Tr √(√σ ρ √σ)`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch("fidelity of mismatched dimensions".into()));
    }
    let s = mat_sqrt(sigma.hermitian())?;
    let inner = symmetrize(&s.matrix().mul(rho.matrix()).mul(s.matrix()));
    let m = HermitianOperator::try_new(inner)?;
    let (vals, _) = m.eigh()?;
    let f: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Sine distance `P(ρ, σ) = √(1 - F(ρ, σ)²)`.
pub fn sine_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// Max-relative entropy `D_max(ρ‖σ) = log inf{λ : ρ ≤ λσ}` in bits.
pub fn dmax(rho: &DensityMatrix, sigma: &PositiveOperator) -> Result<ExtendedReal> {
    let sp = PairSpectra::compute(rho.hermitian(), sigma.hermitian())?;
    if sp.support_leak_coarse() > SUPPORT_LEAK_TOL {
        return Ok(ExtendedReal::PosInf);
    }
    let si = mat_inv_sqrt(sigma.hermitian())?;
    let g = HermitianOperator::try_new(symmetrize(
        &si.matrix().mul(rho.matrix()).mul(si.matrix()),
    ))?;
    let (vals, _) = g.eigh()?;
    let lam_max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lam_max <= 0.0 {
        return Err(Error::InvalidArgument("dmax of a zero state".into()));
    }
    Ok(ExtendedReal::Finite(lam_max.log2()))
}

/// Output of the smoothed max-relative entropy SDP.
#[derive(Clone, Debug)]
pub struct SmoothingResult {
    /// `D_max^ε(ρ‖σ)` in bits; `+∞` when the program is infeasible.
    pub value: ExtendedReal,
    /// The optimizing state `ν̃` (absent when infeasible).
    pub optimizer: Option<DensityMatrix>,
    /// Recomputed sine distance `P(ρ, ν̃)` of the returned optimizer.
    pub achieved_distance: Option<f64>,
}

/// Smoothed max-relative entropy over the sine-distance ball of normalized states,
///
/// `D_max^ε(ρ‖σ) = min { D_max(ν̃‖σ) : ν̃ ⪰ 0, Tr ν̃ = 1, P(ρ, ν̃) ≤ ε }`,
///
/// solved as an SDP with the fidelity constraint in its linear-matrix-inequality
/// form (`F(ρ, ν̃) = max Re Tr X` over `[[ρ, X], [X†, ν̃]] ⪰ 0`).
pub fn dmax_smoothed(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps: f64,
    opts: &SolverOptions,
) -> Result<SmoothingResult> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch("smoothing with mismatched dimensions".into()));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("smoothing needs ε in [0,1), got {eps}")));
    }
    if eps == 0.0 {
        // The ball degenerates to {ρ}.
        return Ok(SmoothingResult {
            value: dmax(rho, sigma.positive())?,
            optimizer: Some(rho.clone()),
            achieved_distance: Some(0.0),
        });
    }
    let d = rho.dim();
    let real = rho.matrix().is_real() && sigma.matrix().is_real();
    let fid_target = (1.0 - eps * eps).max(0.0).sqrt();

    let mut model = Model::new();
    let lam = model.add_vars(1).start;
    let nu = model.add_hermitian_var(d, real);
    let x = model.add_free_block(d, d, real);

    // ν̃ ⪰ 0.
    model.add_psd(nu.expr());
    // λσ - ν̃ ⪰ 0.
    let mut gap = MatExpr::zero(d);
    gap.add_term(lam, sigma.matrix(), 1.0);
    gap.add_expr(&nu.expr(), -1.0);
    model.add_psd(gap);
    // [[ρ, X], [X†, ν̃]] ⪰ 0.
    let mut big = MatExpr::from_constant(rho.matrix()).embedded(2 * d, 0);
    big.add_expr(&nu.expr().embedded(2 * d, d), 1.0);
    x.embed_off_diagonal(&mut big, 0, d);
    model.add_psd(big);
    // Tr ν̃ = 1 and F(ρ, ν̃) ≥ √(1-ε²).
    model.add_eq(nu.trace_expr(), 1.0);
    model.add_ge(x.re_trace_expr(), fid_target);
    model.minimize(LinExpr::var(lam));

    let sol = model.solve(opts)?;
    match sol.status {
        SolveStatus::PrimalInfeasible => Ok(SmoothingResult {
            value: ExtendedReal::PosInf,
            optimizer: None,
            achieved_distance: None,
        }),
        ref s if s.is_optimal() => {
            let lam_star = sol.x[lam];
            if lam_star <= 0.0 {
                return Err(Error::Solver {
                    status: "degenerate".into(),
                    context: format!("smoothing SDP returned λ = {lam_star}"),
                });
            }
            let nu_star = DensityMatrix::sanitize(&nu.value(&sol.x))?;
            let achieved = sine_distance(rho, &nu_star)?;
            Ok(SmoothingResult {
                value: ExtendedReal::Finite(lam_star.log2()),
                optimizer: Some(nu_star),
                achieved_distance: Some(achieved),
            })
        }
        other => Err(Error::Solver {
            status: format!("{other:?}"),
            context: "smoothing SDP".into(),
        }),
    }
}

/// Petz–Rényi divergence `D_α(ρ‖σ) = log Tr(ρ^α σ^{1-α}) / (α-1)` in bits.
///
/// Valid for `α ∈ [0, 1) ∪ (1, 2]`; values of `α` within `1e-6` of 1 are
/// rejected rather than silently evaluated in a numerically hostile regime.
/// For `α > 1` a support violation gives `+∞`; for `α < 1` the value is `+∞`
/// exactly when the supports are disjoint.
pub fn petz_renyi(
    alpha: f64,
    rho: &DensityMatrix,
    sigma: &PositiveOperator,
) -> Result<ExtendedReal> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("Petz–Rényi order {alpha} outside [0, 2]")));
    }
    if (alpha - 1.0).abs() < 1e-6 {
        return Err(Error::InvalidArgument(
            "Petz–Rényi order too close to 1; use relative_entropy".into(),
        ));
    }
    let sp = PairSpectra::compute(rho.hermitian(), sigma.hermitian())?;
    if alpha > 1.0 && sp.support_leak() > SUPPORT_LEAK_TOL {
        return Ok(ExtendedReal::PosInf);
    }
    let mut t = 0.0;
    for (i, &l) in sp.lam.iter().enumerate() {
        if l <= sp.lam_cut {
            continue;
        }
        for (j, &m) in sp.mu.iter().enumerate() {
            if m <= sp.mu_cut {
                continue;
            }
            t += l.powf(alpha) * m.powf(1.0 - alpha) * sp.w[(i, j)];
        }
    }
    if t <= 0.0 {
        return Ok(ExtendedReal::PosInf);
    }
    Ok(ExtendedReal::Finite(t.log2() / (alpha - 1.0)))
}

/// Geometric (maximal) Rényi divergence
/// `D̂_α(ρ‖σ) = log Tr[σ^{1/2} (σ^{-1/2} ρ σ^{-1/2})^α σ^{1/2}] / (α-1)` in bits.
///
/// Valid for `α ∈ (0, 1) ∪ (1, 2]` (orders within `1e-6` of 1 rejected);
/// inverses are pseudo-inverses on the support of `σ`, and a support violation
/// gives `+∞`.
pub fn geometric_renyi(
    alpha: f64,
    rho: &DensityMatrix,
    sigma: &PositiveOperator,
) -> Result<ExtendedReal> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "geometric Rényi order {alpha} outside (0, 2]"
        )));
    }
    if (alpha - 1.0).abs() < 1e-6 {
        return Err(Error::InvalidArgument(
            "geometric Rényi order too close to 1; use relative_entropy".into(),
        ));
    }
    let sp = PairSpectra::compute(rho.hermitian(), sigma.hermitian())?;
    if sp.support_leak_coarse() > SUPPORT_LEAK_TOL {
        return Ok(ExtendedReal::PosInf);
    }
    let si = mat_inv_sqrt(sigma.hermitian())?;
    let g = HermitianOperator::try_new(symmetrize(
        &si.matrix().mul(rho.matrix()).mul(si.matrix()),
    ))?;
    let g_pow = mat_pow(&g, alpha)?;
    let t = g_pow.matrix().mul(sigma.matrix()).trace().re;
    if t <= 0.0 {
        return Ok(ExtendedReal::PosInf);
    }
    Ok(ExtendedReal::Finite(t.log2() / (alpha - 1.0)))
}

/// The Rényi-sandwich coefficient
/// `c_γ(ρ‖σ) = (1/γ) log(2^{γ D_{1+γ}} + 2^{-γ D_{1-γ}} + 1)`,
///
/// evaluated with a log-sum-exp to stay finite for large divergences. Requires
/// `γ ∈ (0, 1]` (and effectively `γ ≥ 1e-6`, inherited from the Petz–Rényi
/// guard near order 1). Infinite `D_{1+γ}` makes the value `+∞`.
pub fn c_gamma(gamma: f64, rho: &DensityMatrix, sigma: &PositiveOperator) -> Result<ExtendedReal> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("c_γ needs γ in (0, 1], got {gamma}")));
    }
    let d_plus = petz_renyi(1.0 + gamma, rho, sigma)?;
    let d_minus = petz_renyi(1.0 - gamma, rho, sigma)?;
    let Some(dp) = d_plus.finite() else {
        return Ok(ExtendedReal::PosInf);
    };
    // Exponents of the three summands, in bits.
    let mut exps = vec![gamma * dp, 0.0];
    if let Some(dm) = d_minus.finite() {
        exps.push(-gamma * dm);
    }
    Ok(ExtendedReal::Finite(log_sum_exp2(&exps) / gamma))
}

/// `log2(Σ_k 2^{e_k})`, computed stably.
pub(crate) fn log_sum_exp2(exps: &[f64]) -> f64 {
    let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + exps.iter().map(|e| (e - m).exp2()).sum::<f64>().log2()
}

/// First three moments of the log-likelihood ratio under `ρ`.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct StatePairStats {
    /// Relative entropy `D(ρ‖σ)` in bits.
    pub d: f64,
    /// Relative-entropy variance `V(ρ‖σ)` in bits².
    pub v: f64,
    /// Absolute centered third moment `T³(ρ‖σ)` in bits³.
    pub t3: f64,
}

/// Computes `D`, `V`, and `T³` for a state pair with `ρ ≪ σ`.
///
/// `V = Σ_{ij} λ_i |⟨x_i|y_j⟩|² (log λ_i - log μ_j - D)²` and `T³` is the same
/// sum with the absolute third power. A support violation is an error here
/// (the moments would be meaningless).
pub fn state_pair_stats(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<StatePairStats> {
    let sp = PairSpectra::compute(rho.hermitian(), sigma.hermitian())?;
    let leak = sp.support_leak();
    if leak > SUPPORT_LEAK_TOL {
        return Err(Error::SupportViolation(format!(
            "state_pair_stats needs ρ ≪ σ (leak {leak:.3e})"
        )));
    }
    let mut d = 0.0;
    let mut pairs: Vec<(f64, f64)> = Vec::new(); // (weight, log-likelihood ratio)
    for (i, &l) in sp.lam.iter().enumerate() {
        if l <= sp.lam_cut {
            continue;
        }
        for (j, &m) in sp.mu.iter().enumerate() {
            if m <= sp.mu_cut {
                continue;
            }
            let wgt = l * sp.w[(i, j)];
            if wgt == 0.0 {
                continue;
            }
            let llr = l.log2() - m.log2();
            d += wgt * llr;
            pairs.push((wgt, llr));
        }
    }
    let mut v = 0.0;
    let mut t3 = 0.0;
    for (wgt, llr) in pairs {
        let c = llr - d;
        v += wgt * c * c;
        t3 += wgt * c.abs().powi(3);
    }
    Ok(StatePairStats { d, v: v.max(0.0), t3 })
}
