//! Adaptive discrimination protocols: trace simulation under both channel
//! hypotheses, per-step distinguishability gains, amortization bookkeeping,
//! the one-shot smoothing chain rule, and construction of the parallel input
//! state that transfers an adaptive strategy's performance to a parallel one.
//!
//! An adaptive strategy interleaves uses of the unknown channel (`E` or `F`)
//! with caller-chosen preparation maps on a fixed reference register. Both
//! branches evolve from the same initial state, so every quantity here comes
//! in a (ρ-branch, σ-branch) pair.

use serde::{Deserialize, Serialize};

use crate::divergences::{dmax_smoothed, relative_entropy, SmoothingResult};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::qlinalg::{
    canonical_purification, channel_from_json, channel_to_json, matrix_from_json, matrix_to_json,
    partial_trace, tensor_power, Channel, ChannelJson, DensityMatrix, MatrixJson, PureState,
    SystemLayout,
};
use crate::sdp::SolverOptions;

/// Tolerance for the amortization inequality chain.
pub const AMORTIZATION_TOL: f64 = 1e-7;

/// Largest total dimension on which the parallel-input smoothing SDP runs;
/// beyond it the product proxy is returned instead.
pub const PARALLEL_SMOOTHING_DIM_CAP: usize = 16;

/// An adaptive strategy: initial state on `R⊗A` plus the preparation maps
/// `Λ_i : R⊗B → R⊗A` applied between channel uses.
#[derive(Clone, Debug)]
pub struct AdaptiveStrategy {
    /// Dimension of the reference register `R` carried along the protocol.
    pub ra_dim: usize,
    /// Initial input `ρ₁ = σ₁` on `R⊗A`.
    pub rho1: DensityMatrix,
    /// Preparation maps; entry `i` produces the input for channel use `i+2`.
    pub preps: Vec<Channel>,
    /// Optional final binary test operator on `R⊗B` (purely descriptive here;
    /// optimal tests come from the hypothesis module).
    pub final_povm: Option<crate::qlinalg::ComplexMatrix>,
}

impl AdaptiveStrategy {
    /// Number of channel uses.
    pub fn n(&self) -> usize {
        self.preps.len() + 1
    }
}

/// Everything recorded while running a strategy against a channel pair.
#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    /// Reference-register dimension (needed to split `R` from `A` later).
    pub ra_dim: usize,
    /// Channel inputs `ρ_1..ρ_n` under the `E` hypothesis.
    pub rho: Vec<DensityMatrix>,
    /// Channel inputs `σ_1..σ_n` under the `F` hypothesis.
    pub sigma: Vec<DensityMatrix>,
    /// Channel outputs `(1⊗E)(ρ_i)`.
    pub rho_out: Vec<DensityMatrix>,
    /// Channel outputs `(1⊗F)(σ_i)`.
    pub sigma_out: Vec<DensityMatrix>,
    /// Per-step gains `g_k = D((1⊗E)(ρ_k)‖(1⊗F)(σ_k)) − D(ρ_k‖σ_k)`; may be
    /// `±∞` when a support violation appears on one side of the difference.
    pub gains: Vec<f64>,
    /// 1-based index of the maximal gain (ties resolved toward smaller k).
    pub ell: usize,
}

impl ProtocolTrace {
    /// Number of channel uses.
    pub fn n(&self) -> usize {
        self.rho.len()
    }

    /// The gain at the selected step ℓ.
    pub fn gain_at_ell(&self) -> f64 {
        self.gains[self.ell - 1]
    }

    /// True when every per-step gain is finite.
    pub fn gains_finite(&self) -> bool {
        self.gains.iter().all(|g| g.is_finite())
    }

    /// Serializable form (states in the JSON matrix encoding).
    pub fn to_json(&self) -> Result<ProtocolTraceJson> {
        let a_dim = self.rho[0].dim() / self.ra_dim;
        let in_dims = [self.ra_dim, a_dim];
        let b_dim = self.rho_out[0].dim() / self.ra_dim;
        let out_dims = [self.ra_dim, b_dim];
        let enc = |states: &[DensityMatrix], dims: &[usize]| -> Result<Vec<MatrixJson>> {
            states.iter().map(|s| matrix_to_json(s.matrix(), dims)).collect()
        };
        let sum: f64 = self.gains.iter().sum();
        let final_div = relative_entropy(
            self.rho_out.last().unwrap(),
            self.sigma_out.last().unwrap().positive(),
        )?;
        Ok(ProtocolTraceJson {
            n: self.n(),
            ra_dim: self.ra_dim,
            rho: enc(&self.rho, &in_dims)?,
            sigma: enc(&self.sigma, &in_dims)?,
            rho_out: enc(&self.rho_out, &out_dims)?,
            sigma_out: enc(&self.sigma_out, &out_dims)?,
            gains: self.gains.clone(),
            ell: self.ell,
            sum_gains: sum,
            final_divergence: final_div.as_f64(),
        })
    }

    /// Rebuilds a trace from its JSON form, revalidating the states.
    pub fn from_json(j: &ProtocolTraceJson) -> Result<ProtocolTrace> {
        if j.rho.is_empty()
            || j.sigma.len() != j.rho.len()
            || j.rho_out.len() != j.rho.len()
            || j.sigma_out.len() != j.rho.len()
            || j.gains.len() != j.rho.len()
        {
            return Err(Error::InvalidArgument("trace JSON with inconsistent lengths".into()));
        }
        if j.ell == 0 || j.ell > j.rho.len() {
            return Err(Error::InvalidArgument(format!("trace ell {} out of range", j.ell)));
        }
        let dec = |ms: &[MatrixJson]| -> Result<Vec<DensityMatrix>> {
            ms.iter().map(|m| DensityMatrix::sanitize(&matrix_from_json(m)?)).collect()
        };
        Ok(ProtocolTrace {
            ra_dim: j.ra_dim,
            rho: dec(&j.rho)?,
            sigma: dec(&j.sigma)?,
            rho_out: dec(&j.rho_out)?,
            sigma_out: dec(&j.sigma_out)?,
            gains: j.gains.clone(),
            ell: j.ell,
        })
    }
}

/// On-disk form of a [`ProtocolTrace`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolTraceJson {
    pub n: usize,
    pub ra_dim: usize,
    pub rho: Vec<MatrixJson>,
    pub sigma: Vec<MatrixJson>,
    pub rho_out: Vec<MatrixJson>,
    pub sigma_out: Vec<MatrixJson>,
    #[serde(with = "crate::extended::serde_inf_vec")]
    pub gains: Vec<f64>,
    pub ell: usize,
    #[serde(with = "crate::extended::serde_inf")]
    pub sum_gains: f64,
    #[serde(with = "crate::extended::serde_inf")]
    pub final_divergence: f64,
}

/// On-disk form of an [`AdaptiveStrategy`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptiveStrategyJson {
    pub ra_dim: usize,
    pub rho1: MatrixJson,
    pub preps: Vec<ChannelJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_povm: Option<MatrixJson>,
}

impl AdaptiveStrategy {
    pub fn to_json(&self) -> Result<AdaptiveStrategyJson> {
        let a_dim = self.rho1.dim() / self.ra_dim;
        Ok(AdaptiveStrategyJson {
            ra_dim: self.ra_dim,
            rho1: matrix_to_json(self.rho1.matrix(), &[self.ra_dim, a_dim])?,
            preps: self.preps.iter().map(channel_to_json).collect::<Result<_>>()?,
            final_povm: match &self.final_povm {
                Some(p) => Some(matrix_to_json(p, &[p.dim()])?),
                None => None,
            },
        })
    }

    pub fn from_json(j: &AdaptiveStrategyJson) -> Result<AdaptiveStrategy> {
        if j.ra_dim == 0 {
            return Err(Error::InvalidArgument("zero reference dimension".into()));
        }
        Ok(AdaptiveStrategy {
            ra_dim: j.ra_dim,
            rho1: DensityMatrix::sanitize(&matrix_from_json(&j.rho1)?)?,
            preps: j.preps.iter().map(channel_from_json).collect::<Result<_>>()?,
            final_povm: match &j.final_povm {
                Some(m) => Some(matrix_from_json(m)?),
                None => None,
            },
        })
    }
}

/// Difference of two extended reals as an IEEE float.
///
/// Convention for the doubly-infinite case: a step whose output divergence is
/// `+∞` counts as gain `+∞` even if the input divergence is also `+∞` — the
/// distinguishability after the channel use is still maximal, and the
/// downstream guarantee calculators refuse non-finite gains anyway.
fn gain_value(out_div: ExtendedReal, in_div: ExtendedReal) -> f64 {
    match (out_div, in_div) {
        (ExtendedReal::PosInf, _) => f64::INFINITY,
        (ExtendedReal::Finite(_), ExtendedReal::PosInf) => f64::NEG_INFINITY,
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a - b,
    }
}

/// Runs an adaptive strategy against both channel hypotheses.
///
/// Produces the full interleaved trace `ρ_i = Λ_i((1⊗E)(ρ_{i−1}))` (and the
/// same for σ under `F`), the per-step gains, and the argmax step ℓ.
pub fn simulate(strategy: &AdaptiveStrategy, e: &Channel, f: &Channel) -> Result<ProtocolTrace> {
    if e.dim_in() != f.dim_in() || e.dim_out() != f.dim_out() {
        return Err(Error::DimMismatch(format!(
            "channel pair shapes differ: {}x{} vs {}x{}",
            e.dim_in(),
            e.dim_out(),
            f.dim_in(),
            f.dim_out()
        )));
    }
    let ra = strategy.ra_dim;
    if ra == 0 || strategy.rho1.dim() % ra != 0 {
        return Err(Error::DimMismatch(format!(
            "initial state dimension {} is not a multiple of reference dimension {ra}",
            strategy.rho1.dim()
        )));
    }
    if strategy.rho1.dim() != ra * e.dim_in() {
        return Err(Error::DimMismatch(format!(
            "initial state dimension {} does not match reference {} x input {}",
            strategy.rho1.dim(),
            ra,
            e.dim_in()
        )));
    }
    // With no reference system the channels act directly; skipping the tensor
    // construction keeps their Choi matrices bit-exact (tensoring rebuilds the
    // Choi from extracted Kraus operators, which costs round-off precision).
    let (e_full, f_full) = if ra == 1 {
        (e.clone(), f.clone())
    } else {
        let id_ref = Channel::identity(ra);
        (id_ref.tensor(e)?, id_ref.tensor(f)?)
    };

    let n = strategy.n();
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut rho_out = Vec::with_capacity(n);
    let mut sigma_out = Vec::with_capacity(n);
    rho.push(strategy.rho1.clone());
    sigma.push(strategy.rho1.clone());

    for i in 0..n {
        let step = i + 1;
        rho_out.push(e_full.apply(&rho[i])?);
        sigma_out.push(f_full.apply(&sigma[i])?);
        if i + 1 < n {
            let prep = &strategy.preps[i];
            if prep.dim_in() != ra * e.dim_out() || prep.dim_out() != ra * e.dim_in() {
                return Err(Error::DimMismatch(format!(
                    "preparation map for step {} has shape {}x{}, expected {}x{}",
                    step + 1,
                    prep.dim_in(),
                    prep.dim_out(),
                    ra * e.dim_out(),
                    ra * e.dim_in()
                )));
            }
            rho.push(prep.apply(&rho_out[i])?);
            sigma.push(prep.apply(&sigma_out[i])?);
        }
    }

    let mut gains = Vec::with_capacity(n);
    for i in 0..n {
        let out_div = relative_entropy(&rho_out[i], sigma_out[i].positive())?;
        let in_div = relative_entropy(&rho[i], sigma[i].positive())?;
        gains.push(gain_value(out_div, in_div));
    }
    let mut ell = 1;
    for (i, &g) in gains.iter().enumerate() {
        if g > gains[ell - 1] {
            ell = i + 1;
        }
    }

    Ok(ProtocolTrace { ra_dim: ra, rho, sigma, rho_out, sigma_out, gains, ell })
}

/// Sum of the per-step gains, certified against the two amortization
/// inequalities: the final output divergence never exceeds the sum, and the
/// sum never exceeds `n` times the best single step.
///
/// A non-finite gain anywhere makes the bound vacuous and reports `+∞`.
pub fn amortization_bound(trace: &ProtocolTrace) -> Result<ExtendedReal> {
    if !trace.gains_finite() {
        return Ok(ExtendedReal::PosInf);
    }
    let sum: f64 = trace.gains.iter().sum();
    let n = trace.n() as f64;
    let final_div = relative_entropy(
        trace.rho_out.last().unwrap(),
        trace.sigma_out.last().unwrap().positive(),
    )?;
    match final_div {
        ExtendedReal::PosInf => {
            return Err(Error::InvariantViolation(
                "final divergence is infinite but every per-step gain is finite".into(),
            ));
        }
        ExtendedReal::Finite(d) => {
            if d > sum + AMORTIZATION_TOL {
                return Err(Error::InvariantViolation(format!(
                    "amortization failed: final divergence {d} exceeds gain sum {sum}"
                )));
            }
        }
    }
    let cap = n * trace.gain_at_ell();
    if sum > cap + AMORTIZATION_TOL {
        return Err(Error::InvariantViolation(format!(
            "amortization failed: gain sum {sum} exceeds n·g_ℓ = {cap}"
        )));
    }
    Ok(ExtendedReal::Finite(sum))
}

/// Result of the one-shot smoothing chain rule.
#[derive(Clone, Debug)]
pub struct ChainSmoothing {
    /// The intermediate state ν (the smoothing optimizer of the input pair).
    pub nu: DensityMatrix,
    /// `D_max^{ε+ε'}(E(ρ)‖F(σ))`.
    pub lhs: ExtendedReal,
    /// `D_max^ε(ρ‖σ) + D_max^{ε'}(E(ν)‖F(ν))`.
    pub rhs: ExtendedReal,
}

/// Verifies the chain rule for the smoothed max-divergence,
///
/// `D_max^{ε+ε'}(E(ρ)‖F(σ)) ≤ D_max^ε(ρ‖σ) + D_max^{ε'}(E(ν)‖F(ν))`,
///
/// with ν the optimizer of the first right-hand term. The check is an error
/// (not a report) when violated beyond 1e−6: the inequality is load-bearing
/// for everything built on top of it.
pub fn chain_smoothing(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    e: &Channel,
    f: &Channel,
    eps: f64,
    eps_prime: f64,
    opts: &SolverOptions,
) -> Result<ChainSmoothing> {
    if !(0.0..1.0).contains(&eps) || !(0.0..1.0).contains(&eps_prime) || eps + eps_prime >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "smoothing budgets ε={eps}, ε'={eps_prime} outside ε,ε' ≥ 0, ε+ε' < 1"
        )));
    }
    let in_smooth = dmax_smoothed(rho, sigma, eps, opts)?;
    let nu = in_smooth
        .optimizer
        .clone()
        .ok_or_else(|| Error::Solver {
            status: "infeasible".into(),
            context: "input-pair smoothing produced no optimizer".into(),
        })?;
    let e_rho = e.apply(rho)?;
    let f_sigma = f.apply(sigma)?;
    let e_nu = e.apply(&nu)?;
    let f_nu = f.apply(&nu)?;
    let lhs = dmax_smoothed(&e_rho, &f_sigma, eps + eps_prime, opts)?.value;
    let step = dmax_smoothed(&e_nu, &f_nu, eps_prime, opts)?.value;
    let rhs = in_smooth.value.add(step);
    if lhs.as_f64() > rhs.as_f64() + 1e-6 {
        return Err(Error::InvariantViolation(format!(
            "smoothing chain rule violated: lhs {lhs} > rhs {rhs}"
        )));
    }
    Ok(ChainSmoothing { nu, lhs, rhs })
}

/// Which form of the parallel input state to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParallelChoice {
    /// The smoothing optimizer itself, on `(R⊗A)^m`.
    Smoothed,
    /// The canonical purification of its `A^m`-marginal, on `A^m ⊗ A^m`.
    Purified,
}

/// The constructed parallel input state.
#[derive(Clone, Debug)]
pub struct ParallelInput {
    /// The state ν̃ on `(R⊗A)^m` (or the product proxy when over budget).
    pub nu: DensityMatrix,
    /// Its `A^m` marginal.
    pub marginal: DensityMatrix,
    /// For [`ParallelChoice::Purified`]: the purification of the marginal.
    pub purification: Option<PureState>,
    /// True when the smoothing SDP was skipped and `ρ_ℓ^{⊗m}` returned.
    pub product_proxy: bool,
    /// The smoothing radius `ε = ½(1 − √(1−α_p))`.
    pub eps: f64,
}

/// Builds the parallel input state for `m` parallel copies of step ℓ.
///
/// The state is the smoothing optimizer of `D_max^ε(ρ_ℓ^{⊗m} ‖ σ_ℓ^{⊗m})`
/// with `ε = ½(1 − √(1−α_p))`; when the tensor-power dimension exceeds
/// [`PARALLEL_SMOOTHING_DIM_CAP`] the product state `ρ_ℓ^{⊗m}` is returned
/// instead, flagged as a proxy.
pub fn parallel_input(
    trace: &ProtocolTrace,
    m: usize,
    alpha_p: f64,
    choice: ParallelChoice,
    opts: &SolverOptions,
) -> Result<ParallelInput> {
    if m == 0 {
        return Err(Error::InvalidArgument("need m ≥ 1 parallel copies".into()));
    }
    if !(alpha_p > 0.0 && alpha_p <= 1.0) {
        return Err(Error::InvalidArgument(format!("α_p = {alpha_p} outside (0,1]")));
    }
    let eps = 0.5 * (1.0 - (1.0 - alpha_p).sqrt());
    let rho_l = &trace.rho[trace.ell - 1];
    let sigma_l = &trace.sigma[trace.ell - 1];
    let local = rho_l.dim();
    let over_budget = local.checked_pow(m as u32).map(|d| d > PARALLEL_SMOOTHING_DIM_CAP)
        .unwrap_or(true);

    let rho_m = DensityMatrix::sanitize(&tensor_power(rho_l.matrix(), m))?;
    let (nu, product_proxy) = if over_budget {
        (rho_m, true)
    } else {
        let sigma_m = DensityMatrix::sanitize(&tensor_power(sigma_l.matrix(), m))?;
        let SmoothingResult { optimizer, .. } = dmax_smoothed(&rho_m, &sigma_m, eps, opts)?;
        match optimizer {
            Some(state) => (state, false),
            // Infeasible smoothing cannot happen for normalized targets (the
            // ball always contains ρ itself), but fall back defensively.
            None => (rho_m, true),
        }
    };

    // Split off the reference factors: ν lives on (R⊗A)^m interleaved.
    let ra = trace.ra_dim;
    let a_dim = local / ra;
    let mut parts: Vec<(String, usize)> = Vec::with_capacity(2 * m);
    for k in 0..m {
        parts.push((format!("R{k}"), ra));
        parts.push((format!("A{k}"), a_dim));
    }
    let layout = SystemLayout::new(parts)?;
    let keep: Vec<String> = (0..m).map(|k| format!("A{k}")).collect();
    let keep_refs: Vec<&str> = keep.iter().map(String::as_str).collect();
    let (marg, _) = partial_trace(nu.matrix(), &layout, &keep_refs)?;
    let marginal = DensityMatrix::sanitize(&marg)?;

    let purification = match choice {
        ParallelChoice::Smoothed => None,
        ParallelChoice::Purified => Some(canonical_purification(&marginal)?),
    };

    Ok(ParallelInput { nu, marginal, purification, product_proxy, eps })
}
