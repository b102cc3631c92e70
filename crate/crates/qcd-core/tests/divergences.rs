//! Integration tests for the divergence zoo: classical-case agreement against
//! independent scalar implementations, data processing, ordering relations,
//! additivity, smoothing, and the log-likelihood-ratio moments.

mod common;

use approx::assert_abs_diff_eq;
use ndarray::array;
use num_complex::Complex64;
use qcd_core::divergences::{
    binary_entropy, c_gamma, dmax, dmax_smoothed, fidelity, geometric_renyi, petz_renyi,
    relative_entropy, sine_distance, state_pair_stats, SUPPORT_LEAK_TOL,
};
use qcd_core::qlinalg::{ComplexMatrix, DensityMatrix, PositiveOperator};
use qcd_core::sampling::{random_channel, random_density, random_diag_density};
use qcd_core::sdp::SolverOptions;
use qcd_core::{Error, ExtendedReal};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn diag_density(probs: &[f64]) -> DensityMatrix {
    DensityMatrix::from_probabilities(probs).unwrap()
}

fn diag_probs(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|i| rho.matrix().at(i, i).re).collect()
}

fn finite(v: ExtendedReal) -> f64 {
    v.finite().expect("expected a finite divergence value")
}

#[test]
fn binary_entropy_shape() {
    assert_abs_diff_eq!(binary_entropy(0.0).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(binary_entropy(1.0).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(
        binary_entropy(0.11).unwrap(),
        binary_entropy(0.89).unwrap(),
        epsilon = 1e-14
    );
    assert!(binary_entropy(-0.1).is_err());
    assert!(binary_entropy(1.1).is_err());
}

#[test]
fn relative_entropy_matches_classical_on_diagonal_pairs() {
    // Hand-checked two-level case.
    let rho = diag_density(&[0.5, 0.5]);
    let sigma = diag_density(&[0.25, 0.75]);
    let d = finite(relative_entropy(&rho, sigma.positive()).unwrap());
    // 0.5·log2(0.5/0.25) + 0.5·log2(0.5/0.75) = 1 − log2(3)/2
    assert_abs_diff_eq!(d, 1.0 - 3f64.log2() / 2.0, epsilon = 1e-12);

    let mut rng = common::rng(31);
    for _ in 0..40 {
        for dim in [2usize, 3, 5] {
            let rho = random_diag_density(dim, &mut rng).unwrap();
            let sigma = random_diag_density(dim, &mut rng).unwrap();
            let p = diag_probs(&rho);
            let q = diag_probs(&sigma);
            let quantum = finite(relative_entropy(&rho, sigma.positive()).unwrap());
            let classical = common::classical_kl(&p, &q);
            assert_abs_diff_eq!(quantum, classical, epsilon = 1e-9);
        }
    }
}

#[test]
fn renyi_families_match_classical_on_diagonal_pairs() {
    let mut rng = common::rng(32);
    for _ in 0..25 {
        let dim = 3;
        let rho = random_diag_density(dim, &mut rng).unwrap();
        let sigma = random_diag_density(dim, &mut rng).unwrap();
        let p = diag_probs(&rho);
        let q = diag_probs(&sigma);
        for alpha in [0.3, 0.5, 0.75, 1.25, 1.5, 2.0] {
            let quantum = finite(petz_renyi(alpha, &rho, sigma.positive()).unwrap());
            let classical = common::classical_renyi(alpha, &p, &q);
            assert_abs_diff_eq!(quantum, classical, epsilon = 1e-9);
        }
        // In the commuting case the two Rényi families coincide.
        for alpha in [1.25, 1.5, 2.0] {
            let geom = finite(geometric_renyi(alpha, &rho, sigma.positive()).unwrap());
            let classical = common::classical_renyi(alpha, &p, &q);
            assert_abs_diff_eq!(geom, classical, epsilon = 1e-8);
        }
        // And the max-divergence is the log of the largest ratio.
        let dm = finite(dmax(&rho, sigma.positive()).unwrap());
        assert_abs_diff_eq!(dm, common::classical_max_ratio(&p, &q), epsilon = 1e-9);
    }
}

#[test]
fn petz_renyi_approaches_relative_entropy_near_order_one() {
    let mut rng = common::rng(42);
    for _ in 0..10 {
        let rho = random_density(3, &mut rng).unwrap();
        let sigma = random_density(3, &mut rng).unwrap();
        let d = finite(relative_entropy(&rho, sigma.positive()).unwrap());
        for alpha in [1.0 - 1e-5, 1.0 + 1e-5] {
            let v = finite(petz_renyi(alpha, &rho, sigma.positive()).unwrap());
            assert_abs_diff_eq!(v, d, epsilon = 1e-4);
        }
    }
}

#[test]
fn petz_renyi_rejects_bad_orders() {
    let rho = diag_density(&[0.5, 0.5]);
    let sigma = diag_density(&[0.25, 0.75]);
    assert!(petz_renyi(1.0, &rho, sigma.positive()).is_err());
    assert!(petz_renyi(1.0 + 1e-8, &rho, sigma.positive()).is_err());
    assert!(petz_renyi(2.5, &rho, sigma.positive()).is_err());
    assert!(petz_renyi(-0.1, &rho, sigma.positive()).is_err());
    assert!(geometric_renyi(0.0, &rho, sigma.positive()).is_err());
    assert!(geometric_renyi(1.0, &rho, sigma.positive()).is_err());
}

#[test]
fn support_violations_produce_infinity_with_tolerance() {
    // Orthogonal pure states: every order-(>1) divergence diverges.
    let rho = diag_density(&[1.0, 0.0]);
    let sigma_op = PositiveOperator::try_new(
        qcd_core::qlinalg::HermitianOperator::try_new(
            ComplexMatrix::new(array![
                [c(0.0, 0.0), c(0.0, 0.0)],
                [c(0.0, 0.0), c(1.0, 0.0)]
            ])
            .unwrap(),
        )
        .unwrap(),
    )
    .unwrap();
    assert_eq!(relative_entropy(&rho, &sigma_op).unwrap(), ExtendedReal::PosInf);
    assert_eq!(dmax(&rho, &sigma_op).unwrap(), ExtendedReal::PosInf);
    assert_eq!(petz_renyi(1.5, &rho, &sigma_op).unwrap(), ExtendedReal::PosInf);

    // Support leakage below the tolerance is forgiven…
    let slightly = diag_density(&[1.0 - 1e-12, 1e-12]);
    let target = PositiveOperator::try_new(
        qcd_core::qlinalg::HermitianOperator::try_new(
            ComplexMatrix::new(array![
                [c(1.0, 0.0), c(0.0, 0.0)],
                [c(0.0, 0.0), c(0.0, 0.0)]
            ])
            .unwrap(),
        )
        .unwrap(),
    )
    .unwrap();
    let d = finite(relative_entropy(&slightly, &target).unwrap());
    assert!(d.abs() < 1e-9);

    // …while leakage above it is reported as infinite.
    assert!(1e-6 > SUPPORT_LEAK_TOL);
    let badly = diag_density(&[1.0 - 1e-6, 1e-6]);
    assert_eq!(relative_entropy(&badly, &target).unwrap(), ExtendedReal::PosInf);
}

#[test]
fn tiny_genuine_eigenvalues_are_resolved() {
    // A dyadic eigenvalue of 2⁻⁵⁰ sits far below the coarse spectral cutoff
    // but is still genuine support and must not be treated as kernel by the
    // eigenpair double sums.
    let kappa = 2f64.powi(-50);
    let rho = diag_density(&[1.0 - kappa, kappa]);
    let sigma = diag_density(&[0.5, 0.5]);
    let d = finite(relative_entropy(&rho, sigma.positive()).unwrap());
    let classical = common::classical_kl(&[1.0 - kappa, kappa], &[0.5, 0.5]);
    assert_abs_diff_eq!(d, classical, epsilon = 1e-10);

    let stats = state_pair_stats(&rho, &sigma).unwrap();
    let (cd, cv, ct3) = common::classical_llr_moments(&[1.0 - kappa, kappa], &[0.5, 0.5]);
    assert_abs_diff_eq!(stats.d, cd, epsilon = 1e-9);
    assert_abs_diff_eq!(stats.v, cv, epsilon = 1e-9);
    assert_abs_diff_eq!(stats.t3, ct3, epsilon = 1e-6);
}

#[test]
fn data_processing_inequality() {
    let mut rng = common::rng(33);
    for trial in 0..30 {
        let dim = 2 + trial % 3; // 2, 3, 4
        let rho = random_density(dim, &mut rng).unwrap();
        let sigma = random_density(dim, &mut rng).unwrap();
        let ch = random_channel(dim, 2 + (trial % 2), 2, &mut rng).unwrap();
        let rho_out = ch.apply(&rho).unwrap();
        let sigma_out = ch.apply(&sigma).unwrap();

        let before = finite(relative_entropy(&rho, sigma.positive()).unwrap());
        let after = finite(relative_entropy(&rho_out, sigma_out.positive()).unwrap());
        assert!(
            after <= before + 1e-8,
            "relative entropy increased under a channel: {after} > {before}"
        );

        let before = finite(dmax(&rho, sigma.positive()).unwrap());
        let after = finite(dmax(&rho_out, sigma_out.positive()).unwrap());
        assert!(after <= before + 1e-8, "max-divergence increased: {after} > {before}");

        let before = sine_distance(&rho, &sigma).unwrap();
        let after = sine_distance(&rho_out, &sigma_out).unwrap();
        assert!(after <= before + 1e-8, "sine distance increased: {after} > {before}");

        for alpha in [0.5, 2.0] {
            let before = finite(petz_renyi(alpha, &rho, sigma.positive()).unwrap());
            let after = finite(petz_renyi(alpha, &rho_out, sigma_out.positive()).unwrap());
            assert!(
                after <= before + 1e-8,
                "Petz–Rényi({alpha}) increased: {after} > {before}"
            );
        }

        let before = finite(geometric_renyi(1.5, &rho, sigma.positive()).unwrap());
        let after = finite(geometric_renyi(1.5, &rho_out, sigma_out.positive()).unwrap());
        assert!(
            after <= before + 1e-8,
            "geometric Rényi(1.5) increased: {after} > {before}"
        );
    }
}

#[test]
fn divergence_ordering_chain() {
    // D_{1−γ} ≤ D ≤ D_{1+γ} ≤ D̂_{1+γ} ≤ D_max for γ ∈ (0, 1].
    let mut rng = common::rng(34);
    for trial in 0..25 {
        let dim = 2 + trial % 3;
        let rho = random_density(dim, &mut rng).unwrap();
        let sigma = random_density(dim, &mut rng).unwrap();
        let d = finite(relative_entropy(&rho, sigma.positive()).unwrap());
        let dm = finite(dmax(&rho, sigma.positive()).unwrap());
        for gamma in [0.25, 0.5, 1.0] {
            let lo = finite(petz_renyi(1.0 - gamma, &rho, sigma.positive()).unwrap());
            let hi = finite(petz_renyi(1.0 + gamma, &rho, sigma.positive()).unwrap());
            let geo = finite(geometric_renyi(1.0 + gamma, &rho, sigma.positive()).unwrap());
            assert!(lo <= d + 1e-8, "γ={gamma}: {lo} > {d}");
            assert!(d <= hi + 1e-8, "γ={gamma}: {d} > {hi}");
            assert!(hi <= geo + 1e-8, "γ={gamma}: {hi} > {geo}");
            assert!(geo <= dm + 1e-8, "γ={gamma}: {geo} > {dm}");
        }
    }
}

#[test]
fn additivity_under_tensor_products() {
    let mut rng = common::rng(35);
    for _ in 0..10 {
        let rho1 = random_density(2, &mut rng).unwrap();
        let sigma1 = random_density(2, &mut rng).unwrap();
        let rho2 = random_density(3, &mut rng).unwrap();
        let sigma2 = random_density(3, &mut rng).unwrap();
        let joint_rho = DensityMatrix::from_matrix(rho1.matrix().kron(rho2.matrix())).unwrap();
        let joint_sigma =
            DensityMatrix::from_matrix(sigma1.matrix().kron(sigma2.matrix())).unwrap();

        let sum = finite(relative_entropy(&rho1, sigma1.positive()).unwrap())
            + finite(relative_entropy(&rho2, sigma2.positive()).unwrap());
        let joint = finite(relative_entropy(&joint_rho, joint_sigma.positive()).unwrap());
        assert_abs_diff_eq!(joint, sum, epsilon = 1e-8);

        let sum = finite(dmax(&rho1, sigma1.positive()).unwrap())
            + finite(dmax(&rho2, sigma2.positive()).unwrap());
        let joint = finite(dmax(&joint_rho, joint_sigma.positive()).unwrap());
        assert_abs_diff_eq!(joint, sum, epsilon = 1e-8);

        let sum = finite(petz_renyi(1.5, &rho1, sigma1.positive()).unwrap())
            + finite(petz_renyi(1.5, &rho2, sigma2.positive()).unwrap());
        let joint = finite(petz_renyi(1.5, &joint_rho, joint_sigma.positive()).unwrap());
        assert_abs_diff_eq!(joint, sum, epsilon = 1e-8);
    }
}

#[test]
fn fidelity_and_sine_distance_geometry() {
    let mut rng = common::rng(36);

    // Fidelity of a pure state with the maximally mixed state.
    let pure = diag_density(&[1.0, 0.0]);
    let mixed = DensityMatrix::maximally_mixed(2);
    assert_abs_diff_eq!(fidelity(&pure, &mixed).unwrap(), 0.5f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(
        sine_distance(&pure, &mixed).unwrap(),
        0.5f64.sqrt(),
        epsilon = 1e-12
    );

    for _ in 0..20 {
        let a = random_density(3, &mut rng).unwrap();
        let b = random_density(3, &mut rng).unwrap();
        let cst = random_density(3, &mut rng).unwrap();

        // Symmetry and normalization.
        let f_ab = fidelity(&a, &b).unwrap();
        let f_ba = fidelity(&b, &a).unwrap();
        assert_abs_diff_eq!(f_ab, f_ba, epsilon = 1e-10);
        assert!((0.0..=1.0 + 1e-12).contains(&f_ab));
        assert_abs_diff_eq!(fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sine_distance(&a, &a).unwrap(), 0.0, epsilon = 1e-7);

        // Multiplicativity under tensor products.
        let aa = DensityMatrix::from_matrix(a.matrix().kron(cst.matrix())).unwrap();
        let bb = DensityMatrix::from_matrix(b.matrix().kron(cst.matrix())).unwrap();
        assert_abs_diff_eq!(fidelity(&aa, &bb).unwrap(), f_ab, epsilon = 1e-9);

        // Triangle inequality for the sine distance.
        let p_ab = sine_distance(&a, &b).unwrap();
        let p_ac = sine_distance(&a, &cst).unwrap();
        let p_cb = sine_distance(&cst, &b).unwrap();
        assert!(p_ab <= p_ac + p_cb + 1e-9, "{p_ab} > {p_ac} + {p_cb}");
    }
}

#[test]
fn smoothing_reduces_to_plain_dmax_at_zero() {
    let mut rng = common::rng(37);
    let opts = SolverOptions::default();
    for _ in 0..5 {
        let rho = random_density(3, &mut rng).unwrap();
        let sigma = random_density(3, &mut rng).unwrap();
        let plain = finite(dmax(&rho, sigma.positive()).unwrap());
        let res = dmax_smoothed(&rho, &sigma, 0.0, &opts).unwrap();
        assert_abs_diff_eq!(finite(res.value), plain, epsilon = 1e-9);
    }
    // Invalid radii are rejected.
    let rho = random_density(2, &mut rng).unwrap();
    let sigma = random_density(2, &mut rng).unwrap();
    assert!(dmax_smoothed(&rho, &sigma, 1.0, &opts).is_err());
    assert!(dmax_smoothed(&rho, &sigma, -0.1, &opts).is_err());
}

#[test]
fn smoothing_is_monotone_and_feasible() {
    let mut rng = common::rng(38);
    let opts = SolverOptions::default();
    for _ in 0..4 {
        let rho = random_density(3, &mut rng).unwrap();
        let sigma = random_density(3, &mut rng).unwrap();
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.05, 0.1, 0.2] {
            let res = dmax_smoothed(&rho, &sigma, eps, &opts).unwrap();
            let v = finite(res.value);
            // Larger balls can only lower the optimum (up to solver slack).
            assert!(v <= last + 5e-6, "ε={eps}: {v} > {last}");
            last = v;
            if eps > 0.0 {
                let opt = res.optimizer.expect("finite smoothing should return its optimizer");
                assert_abs_diff_eq!(opt.positive().trace(), 1.0, epsilon = 1e-6);
                let dist = res.achieved_distance.unwrap();
                assert!(dist <= eps + 1e-5, "optimizer left the ball: {dist} > {eps}");
            }
        }
    }
}

#[test]
fn smoothing_matches_classical_water_filling() {
    // On commuting pairs the optimizer can be taken diagonal, so an
    // independent scalar bisection provides a cross-check of the SDP.
    let mut rng = common::rng(39);
    let opts = SolverOptions::default();
    for trial in 0..6 {
        let dim = 2 + trial % 2;
        let rho = random_diag_density(dim, &mut rng).unwrap();
        let sigma = random_diag_density(dim, &mut rng).unwrap();
        let p = diag_probs(&rho);
        let q = diag_probs(&sigma);
        for eps in [0.05, 0.15] {
            let quantum = finite(dmax_smoothed(&rho, &sigma, eps, &opts).unwrap().value);
            let classical = common::classical_smooth_dmax(&p, &q, eps);
            assert_abs_diff_eq!(quantum, classical, epsilon = 2e-3);
        }
    }
}

#[test]
fn llr_moments_match_classical_and_degenerate_cleanly() {
    let mut rng = common::rng(40);
    for _ in 0..25 {
        let dim = 3;
        let rho = random_diag_density(dim, &mut rng).unwrap();
        let sigma = random_diag_density(dim, &mut rng).unwrap();
        let p = diag_probs(&rho);
        let q = diag_probs(&sigma);
        let stats = state_pair_stats(&rho, &sigma).unwrap();
        let (cd, cv, ct3) = common::classical_llr_moments(&p, &q);
        assert_abs_diff_eq!(stats.d, cd, epsilon = 1e-8);
        assert_abs_diff_eq!(stats.v, cv, epsilon = 1e-8);
        assert_abs_diff_eq!(stats.t3, ct3, epsilon = 1e-7);
        assert!(stats.v >= -1e-12);
        assert!(stats.t3 >= -1e-12);
    }

    // Identical states: all moments vanish.
    let rho = random_density(3, &mut rng).unwrap();
    let stats = state_pair_stats(&rho, &rho).unwrap();
    assert_abs_diff_eq!(stats.d, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(stats.v, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(stats.t3, 0.0, epsilon = 1e-8);

    // Support violation is an error, not a silent number.
    let rho = diag_density(&[0.5, 0.5]);
    let sigma = diag_density(&[1.0, 0.0]);
    assert!(matches!(
        state_pair_stats(&rho, &sigma),
        Err(Error::SupportViolation(_))
    ));
}

#[test]
fn c_gamma_matches_its_renyi_building_blocks() {
    let mut rng = common::rng(41);
    for _ in 0..10 {
        let rho = random_density(3, &mut rng).unwrap();
        let sigma = random_density(3, &mut rng).unwrap();
        for gamma in [0.25, 0.5, 1.0] {
            let v = finite(c_gamma(gamma, &rho, sigma.positive()).unwrap());
            let dp = finite(petz_renyi(1.0 + gamma, &rho, sigma.positive()).unwrap());
            let dm = finite(petz_renyi(1.0 - gamma, &rho, sigma.positive()).unwrap());
            let expect = ((gamma * dp).exp2() + (-gamma * dm).exp2() + 1.0).log2() / gamma;
            assert_abs_diff_eq!(v, expect, epsilon = 1e-9);
            // The interval width is strictly positive.
            assert!(v > 0.0);
        }
        assert!(c_gamma(0.0, &rho, sigma.positive()).is_err());
        assert!(c_gamma(1.5, &rho, sigma.positive()).is_err());
    }
}
