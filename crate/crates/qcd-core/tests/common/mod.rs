//! Shared test fixtures: seeded RNGs and independent classical oracles.
//!
//! The oracles here are deliberately self-contained — plain `f64` arithmetic on
//! probability vectors — so that the library's spectral/SDP routes are checked
//! against computations that share none of their code.

#![allow(dead_code)]

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for a named test.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kullback–Leibler divergence of probability vectors in bits; `+∞` on a
/// support violation.
pub fn classical_kl(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return f64::INFINITY;
        }
        d += pi * (pi / qi).log2();
    }
    d
}

/// Classical Rényi divergence `(1/(α-1)) log Σ p^α q^{1-α}` in bits.
pub fn classical_renyi(alpha: f64, p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    assert!((alpha - 1.0).abs() > 1e-9);
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 && (alpha > 0.0) {
            continue;
        }
        if qi <= 0.0 {
            if alpha > 1.0 && pi > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        s += pi.powf(alpha) * qi.powf(1.0 - alpha);
    }
    if s <= 0.0 {
        return f64::INFINITY;
    }
    s.log2() / (alpha - 1.0)
}

/// Classical max-relative entropy `log max_i p_i/q_i` in bits.
pub fn classical_max_ratio(p: &[f64], q: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return f64::INFINITY;
        }
        best = best.max((pi / qi).log2());
    }
    best
}

/// Mean, variance, and absolute centered third moment of the log-likelihood
/// ratio `log(p_i/q_i)` under `p`, in bits / bits² / bits³.
pub fn classical_llr_moments(p: &[f64], q: &[f64]) -> (f64, f64, f64) {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            assert!(qi > 0.0, "oracle needs p ≪ q");
            d += pi * (pi / qi).log2();
        }
    }
    let mut v = 0.0;
    let mut t3 = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            let c = (pi / qi).log2() - d;
            v += pi * c * c;
            t3 += pi * c.abs().powi(3);
        }
    }
    (d, v, t3)
}

/// Optimal classical type-II error at type-I budget `ε`: the Neyman–Pearson
/// test takes atoms in decreasing likelihood-ratio order, fractionally at the
/// boundary.
pub fn classical_np_beta(p: &[f64], q: &[f64], eps: f64) -> f64 {
    assert_eq!(p.len(), q.len());
    assert!((0.0..1.0).contains(&eps));
    let mut idx: Vec<usize> = (0..p.len()).collect();
    let ratio = |i: usize| -> f64 {
        if q[i] <= 0.0 {
            if p[i] > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            p[i] / q[i]
        }
    };
    idx.sort_by(|&a, &b| ratio(b).partial_cmp(&ratio(a)).unwrap());
    let need = 1.0 - eps;
    let mut got = 0.0;
    let mut beta = 0.0;
    for &i in &idx {
        if got >= need - 1e-15 {
            break;
        }
        if p[i] <= 0.0 {
            break; // remaining atoms cannot add type-I success probability
        }
        if got + p[i] <= need {
            got += p[i];
            beta += q[i];
        } else {
            let f = (need - got) / p[i];
            beta += f * q[i];
            got = need;
        }
    }
    beta.max(0.0)
}

/// Classical smoothed max-relative entropy on diagonal pairs, in bits:
///
/// `min { log λ : ∃ν, 0 ≤ ν_i ≤ λ q_i, Σν_i = 1, Σ√(p_i ν_i) ≥ √(1-ε²) }`,
///
/// solved by bisection over `λ` with an inner water-filling step for the
/// fidelity-maximizing `ν` at fixed cap. Valid as an oracle for the quantum
/// smoothing program because a computational-basis pinching moves any feasible
/// `ν̃` to a diagonal one that is no worse.
pub fn classical_smooth_dmax(p: &[f64], q: &[f64], eps: f64) -> f64 {
    assert_eq!(p.len(), q.len());
    assert!((0.0..1.0).contains(&eps));
    let target = (1.0 - eps * eps).max(0.0).sqrt();

    // Max fidelity Σ√(p_i ν_i) subject to ν_i ≤ c_i, Σν_i = 1 (−∞ if infeasible).
    let best_fid = |caps: &[f64]| -> f64 {
        let total: f64 = caps.iter().sum();
        if total < 1.0 - 1e-12 {
            return f64::NEG_INFINITY;
        }
        // ν_i = min(c_i, t·p_i); mass not placeable on p-support atoms goes to
        // p-kernel atoms (fidelity-neutral).
        let mass_at = |t: f64| -> f64 {
            p.iter().zip(caps).map(|(&pi, &ci)| ci.min(t * pi)).sum::<f64>()
        };
        let support_cap: f64 =
            p.iter().zip(caps).filter(|(&pi, _)| pi > 0.0).map(|(_, &ci)| ci).sum();
        let kernel_cap = total - support_cap;
        let (mut lo, mut hi) = (0.0, 1.0);
        while mass_at(hi) < (1.0 - kernel_cap).min(support_cap) - 1e-15 && hi < 1e18 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass_at(mid) + kernel_cap >= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t = hi;
        p.iter()
            .zip(caps)
            .map(|(&pi, &ci)| (pi * ci.min(t * pi)).sqrt())
            .sum::<f64>()
    };

    let feasible = |log_lam: f64| -> bool {
        let lam = log_lam.exp2();
        let caps: Vec<f64> = q.iter().map(|&qi| lam * qi).collect();
        best_fid(&caps) >= target - 1e-12
    };

    let mut hi = classical_max_ratio(p, q);
    if !hi.is_finite() {
        hi = 60.0; // smoothing can still be finite when the raw ratio is not
        while !feasible(hi) && hi < 1e6 {
            hi *= 2.0;
        }
        if !feasible(hi) {
            return f64::INFINITY;
        }
    }
    let mut lo = -60.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Number of multisets of size `n` over an alphabet of `k` letters,
/// `C(k+n-1, n)`.
pub fn multiset_count(k: usize, n: usize) -> usize {
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 0..n {
        num *= k + n - 1 - i;
        den *= i + 1;
    }
    num / den
}

/// All orbits of index-word pairs under simultaneous permutation, brute-forced:
/// returns sorted multiset keys with orbit sizes, for cross-checking the
/// library's enumeration. Alphabet is `d` letters per position on each side.
pub fn brute_force_orbits(d: usize, n: usize) -> std::collections::HashMap<Vec<(usize, usize)>, usize> {
    let mut map: std::collections::HashMap<Vec<(usize, usize)>, usize> =
        std::collections::HashMap::new();
    let total = d.pow(n as u32);
    for i_word in 0..total {
        for j_word in 0..total {
            let mut letters: Vec<(usize, usize)> = (0..n)
                .map(|k| {
                    let ik = (i_word / d.pow(k as u32)) % d;
                    let jk = (j_word / d.pow(k as u32)) % d;
                    (ik, jk)
                })
                .collect();
            letters.sort();
            *map.entry(letters).or_insert(0) += 1;
        }
    }
    map
}

/// Convex mixture of two channels at the Choi level: `(1−t)·E + t·G`.
/// Useful for building channel pairs at a controlled separation, which keeps
/// discrimination SDP optima away from numerically extreme magnitudes.
pub fn channel_mix(
    e: &qcd_core::qlinalg::Channel,
    g: &qcd_core::qlinalg::Channel,
    t: f64,
) -> qcd_core::qlinalg::Channel {
    use qcd_core::qlinalg::{Channel, HermitianOperator, PositiveOperator};
    let j = e
        .choi()
        .matrix()
        .scale_re(1.0 - t)
        .add(&g.choi().matrix().scale_re(t));
    let pos = PositiveOperator::try_new(HermitianOperator::try_new(j).unwrap()).unwrap();
    Channel::from_choi(pos, e.dim_in(), e.dim_out()).unwrap()
}
