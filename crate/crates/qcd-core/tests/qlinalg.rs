//! Integration tests for the linear-algebra layer: validated wrapper types,
//! tensor-network plumbing (partial trace, permutations), spectral calculus,
//! channels, and JSON serialization.

mod common;

use approx::assert_abs_diff_eq;
use ndarray::{array, Array1, Array2};
use num_complex::Complex64;
use qcd_core::qlinalg::{
    apply_channel, canonical_purification, channel_from_json, channel_to_json, mat_func,
    mat_inv_sqrt, mat_sqrt, matrix_from_json, matrix_to_json, partial_trace, permutation_matrix,
    permute_systems, support_projector, symmetrize, Channel, ChannelJson, ComplexMatrix,
    DensityMatrix, HermitianOperator, MatrixJson, PositiveOperator, PureState, SystemLayout,
    SUPPORT_CUTOFF,
};
use qcd_core::sampling::{random_channel, random_density, random_unitary};
use qcd_core::Error;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cm(data: Array2<Complex64>) -> ComplexMatrix {
    ComplexMatrix::new(data).unwrap()
}

fn max_entry_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.rows(), b.rows());
    assert_eq!(a.cols(), b.cols());
    let mut worst = 0.0f64;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            worst = worst.max((a.at(i, j) - b.at(i, j)).norm());
        }
    }
    worst
}

#[test]
fn complex_matrix_rejects_non_finite_entries() {
    let data = array![[c(1.0, 0.0), c(f64::NAN, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    assert!(matches!(
        ComplexMatrix::new(data),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn hermitian_validation_ladder() {
    // Non-Hermitian input is rejected…
    let skew = cm(array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
    assert!(HermitianOperator::try_new(skew.clone()).is_err());
    // …but symmetrizing it first produces a valid operator.
    let h = HermitianOperator::try_new(symmetrize(&skew)).unwrap();
    assert_abs_diff_eq!(h.matrix().at(0, 1).re, 0.5, epsilon = 1e-14);

    // Indefinite matrices fail positivity, and positivity failure reports the
    // offending eigenvalue.
    let indef = HermitianOperator::try_new(cm(array![
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(-0.5, 0.0)]
    ]))
    .unwrap();
    assert!(PositiveOperator::try_new(indef.clone()).is_err());
    // `project` clips the negative part instead.
    let proj = PositiveOperator::project(&indef).unwrap();
    assert_abs_diff_eq!(proj.trace(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(proj.matrix().at(1, 1).re, 0.0, epsilon = 1e-12);

    // Density matrices additionally need unit trace.
    let unnorm = PositiveOperator::try_new(
        HermitianOperator::try_new(cm(array![
            [c(0.5, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.3, 0.0)]
        ]))
        .unwrap(),
    )
    .unwrap();
    assert!(DensityMatrix::try_new(unnorm.clone()).is_err());
    let fixed = DensityMatrix::normalized(unnorm).unwrap();
    assert_abs_diff_eq!(fixed.positive().trace(), 1.0, epsilon = 1e-14);
}

#[test]
fn sanitize_repairs_numerical_noise() {
    // A slightly negative eigenvalue and slightly off trace, as produced by a
    // long chain of floating-point ops, is repaired by `sanitize`.
    let noisy = cm(array![
        [c(1.0 + 3e-11, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(-2e-11, 0.0)]
    ]);
    let rho = DensityMatrix::sanitize(&noisy).unwrap();
    assert_abs_diff_eq!(rho.positive().trace(), 1.0, epsilon = 1e-13);
    let (evals, _) = rho.eigh().unwrap();
    assert!(evals.iter().all(|&l| l >= 0.0));
}

#[test]
fn pure_state_basics() {
    let zero = PureState::basis(2, 0);
    let one = PureState::basis(2, 1);
    assert_abs_diff_eq!(zero.braket(&one).norm(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(zero.braket(&zero).re, 1.0, epsilon = 1e-15);

    let plus = PureState::normalized(Array1::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
    assert_abs_diff_eq!(plus.braket(&zero).norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);

    let prod = zero.tensor(&plus);
    assert_eq!(prod.amplitudes().len(), 4);
    assert_abs_diff_eq!(prod.projector().positive().trace(), 1.0, epsilon = 1e-14);

    // The zero vector cannot be normalized.
    assert!(PureState::normalized(Array1::from_vec(vec![c(0.0, 0.0); 3])).is_err());
}

#[test]
fn system_layout_validation() {
    assert!(SystemLayout::new(vec![("A", 2usize), ("A", 3)]).is_err());
    assert!(SystemLayout::new(vec![("A", 0usize)]).is_err());
    let layout = SystemLayout::new(vec![("A", 2usize), ("B", 3)]).unwrap();
    assert_eq!(layout.total_dim(), 6);
    assert_eq!(layout.dim_of("B").unwrap(), 3);
    assert!(layout.position_of("C").is_err());
    let sub = layout.restricted_to(&["B"]).unwrap();
    assert_eq!(sub.total_dim(), 3);
}

#[test]
fn partial_trace_matches_manual_contraction() {
    let mut rng = common::rng(11);
    for _ in 0..20 {
        let rho = random_density(6, &mut rng).unwrap();
        let layout = SystemLayout::new(vec![("A", 2usize), ("B", 3)]).unwrap();
        let (red, red_layout) = partial_trace(rho.matrix(), &layout, &["A"]).unwrap();
        assert_eq!(red_layout.labels(), vec!["A"]);
        assert_eq!(red.rows(), 2);

        // Manual contraction over the B index.
        let full = rho.matrix();
        for a in 0..2 {
            for ap in 0..2 {
                let mut s = Complex64::ZERO;
                for b in 0..3 {
                    s += full.at(a * 3 + b, ap * 3 + b);
                }
                assert_abs_diff_eq!((red.at(a, ap) - s).norm(), 0.0, epsilon = 1e-13);
            }
        }
        // Trace is preserved.
        assert_abs_diff_eq!(red.trace().re, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn partial_trace_of_product_state_factorizes() {
    let mut rng = common::rng(12);
    let rho_a = random_density(2, &mut rng).unwrap();
    let rho_b = random_density(3, &mut rng).unwrap();
    let joint = rho_a.matrix().kron(rho_b.matrix());
    let layout = SystemLayout::new(vec![("A", 2usize), ("B", 3)]).unwrap();
    let (marg_b, _) = partial_trace(&joint, &layout, &["B"]).unwrap();
    assert!(max_entry_diff(&marg_b, rho_b.matrix()) < 1e-13);
    let (marg_a, _) = partial_trace(&joint, &layout, &["A"]).unwrap();
    assert!(max_entry_diff(&marg_a, rho_a.matrix()) < 1e-13);
}

#[test]
fn permutations_roundtrip_and_match_matrix_form() {
    let mut rng = common::rng(13);
    let dims = [2usize, 3, 2];
    let layout = SystemLayout::new(vec![("X", 2usize), ("Y", 3), ("Z", 2)]).unwrap();
    let rho = random_density(12, &mut rng).unwrap();

    // permute via the high-level API
    let (permuted, player) = permute_systems(rho.matrix(), &layout, &["Z", "X", "Y"]).unwrap();
    assert_eq!(player.labels(), vec!["Z", "X", "Y"]);
    assert_eq!(player.dims(), vec![2, 2, 3]);

    // and via the explicit permutation matrix: new position j holds old system perm[j].
    let p = permutation_matrix(&dims, &[2, 0, 1]).unwrap();
    let direct = p.mul(rho.matrix()).mul(&p.dagger());
    assert!(max_entry_diff(&permuted, &direct) < 1e-13);

    // Undoing the permutation restores the original matrix exactly.
    let (back, blayer) = permute_systems(&permuted, &player, &["X", "Y", "Z"]).unwrap();
    assert_eq!(blayer.labels(), vec!["X", "Y", "Z"]);
    assert!(max_entry_diff(&back, rho.matrix()) < 1e-13);

    // Invalid permutations are rejected.
    assert!(permutation_matrix(&dims, &[0, 0, 1]).is_err());
    assert!(permute_systems(rho.matrix(), &layout, &["X", "Y"]).is_err());
}

#[test]
fn permutation_preserves_partial_trace_marginals() {
    let mut rng = common::rng(14);
    let layout = SystemLayout::new(vec![("A", 2usize), ("B", 2), ("C", 3)]).unwrap();
    let rho = random_density(12, &mut rng).unwrap();
    let (before, _) = partial_trace(rho.matrix(), &layout, &["C"]).unwrap();
    let (permuted, player) = permute_systems(rho.matrix(), &layout, &["C", "B", "A"]).unwrap();
    let (after, _) = partial_trace(&permuted, &player, &["C"]).unwrap();
    assert!(max_entry_diff(&before, &after) < 1e-13);
}

#[test]
fn spectral_calculus_consistency() {
    let mut rng = common::rng(15);
    for _ in 0..10 {
        let rho = random_density(4, &mut rng).unwrap();
        let h = rho.hermitian();
        let root = mat_sqrt(h).unwrap();
        let squared = root.matrix().mul(root.matrix());
        assert!(max_entry_diff(&squared, h.matrix()) < 1e-12);
    }

    // Pseudo-inverse square root acts only on the support.
    let proj = HermitianOperator::try_new(cm(array![
        [c(4.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(0.0, 0.0)]
    ]))
    .unwrap();
    let inv_root = mat_inv_sqrt(&proj).unwrap();
    assert_abs_diff_eq!(inv_root.matrix().at(0, 0).re, 0.5, epsilon = 1e-13);
    assert_abs_diff_eq!(inv_root.matrix().at(1, 1).re, 0.0, epsilon = 1e-13);

    let supp = support_projector(&proj).unwrap();
    assert_abs_diff_eq!(supp.matrix().trace().re, 1.0, epsilon = 1e-13);

    // Mapping an eigenvalue outside the function's domain is a reported error,
    // not a silent NaN: log of an indefinite operator.
    let indef = HermitianOperator::try_new(cm(array![
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(-1.0, 0.0)]
    ]))
    .unwrap();
    let err = mat_func(&indef, |x| x.ln(), SUPPORT_CUTOFF);
    assert!(matches!(err, Err(Error::SpectralDomain { .. })));
}

#[test]
fn purification_has_correct_marginal() {
    let mut rng = common::rng(16);
    for dim in [2usize, 3, 4] {
        let rho = random_density(dim, &mut rng).unwrap();
        let psi = canonical_purification(&rho).unwrap();
        assert_eq!(psi.amplitudes().len(), dim * dim);
        let layout = SystemLayout::new(vec![("R", dim), ("A", dim)]).unwrap();
        let proj = psi.projector();
        let (marg, _) = partial_trace(proj.matrix(), &layout, &["A"]).unwrap();
        assert!(max_entry_diff(&marg, rho.matrix()) < 1e-11);
    }
}

#[test]
fn channel_construction_and_application() {
    let mut rng = common::rng(17);

    // Kraus operators must satisfy the trace-preservation condition.
    let half = cm(array![[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.5, 0.0)]]);
    assert!(Channel::from_kraus(vec![half]).is_err());

    // Identity channel fixes every state.
    let id = Channel::identity(3);
    let rho = random_density(3, &mut rng).unwrap();
    let out = id.apply(&rho).unwrap();
    assert!(max_entry_diff(out.matrix(), rho.matrix()) < 1e-13);

    // A unitary conjugation channel acts as expected.
    let u = random_unitary(2, &mut rng).unwrap();
    let ch = Channel::from_kraus(vec![u.clone()]).unwrap();
    let rho2 = random_density(2, &mut rng).unwrap();
    let expect = u.mul(rho2.matrix()).mul(&u.dagger());
    let got = ch.apply(&rho2).unwrap();
    assert!(max_entry_diff(got.matrix(), &expect) < 1e-12);

    // apply_matrix agrees with explicit Kraus summation on random channels.
    for _ in 0..10 {
        let ch = random_channel(3, 2, 2, &mut rng).unwrap();
        let rho = random_density(3, &mut rng).unwrap();
        let via_choi = ch.apply_matrix(rho.matrix()).unwrap();
        let mut via_kraus = ComplexMatrix::zeros(2, 2);
        for k in ch.kraus() {
            via_kraus = via_kraus.add(&k.mul(rho.matrix()).mul(&k.dagger()));
        }
        assert!(max_entry_diff(&via_choi, &via_kraus) < 1e-11);
        // The output is a valid state.
        let out = ch.apply(&rho).unwrap();
        assert_abs_diff_eq!(out.positive().trace(), 1.0, epsilon = 1e-10);
    }
}

#[test]
fn choi_roundtrip_preserves_channel_action() {
    let mut rng = common::rng(18);
    for _ in 0..10 {
        let ch = random_channel(2, 3, 2, &mut rng).unwrap();
        let choi = ch.choi().clone();
        assert_abs_diff_eq!(choi.trace(), 2.0, epsilon = 1e-10);
        let rebuilt = Channel::from_choi(choi, 2, 3).unwrap();
        let rho = random_density(2, &mut rng).unwrap();
        let a = ch.apply(&rho).unwrap();
        let b = rebuilt.apply(&rho).unwrap();
        assert!(max_entry_diff(a.matrix(), b.matrix()) < 1e-10);
    }

    // A Choi matrix whose partial trace is not the identity is rejected.
    let bad = PositiveOperator::try_new(
        HermitianOperator::try_new(cm(array![
            [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        ]))
        .unwrap(),
    )
    .unwrap();
    assert!(Channel::from_choi(bad, 2, 2).is_err());
}

#[test]
fn channel_tensor_acts_factorwise() {
    let mut rng = common::rng(19);
    let ch_a = random_channel(2, 2, 2, &mut rng).unwrap();
    let ch_b = random_channel(2, 2, 2, &mut rng).unwrap();
    let joint = ch_a.tensor(&ch_b).unwrap();
    assert_eq!(joint.dim_in(), 4);
    assert_eq!(joint.dim_out(), 4);

    let rho_a = random_density(2, &mut rng).unwrap();
    let rho_b = random_density(2, &mut rng).unwrap();
    let prod = rho_a.matrix().kron(rho_b.matrix());
    let out_joint = joint.apply_matrix(&prod).unwrap();
    let out_a = ch_a.apply(&rho_a).unwrap();
    let out_b = ch_b.apply(&rho_b).unwrap();
    let expect = out_a.matrix().kron(out_b.matrix());
    assert!(max_entry_diff(&out_joint, &expect) < 1e-11);

    // tensor_power(2) of a channel equals tensor with itself.
    let sq = ch_a.tensor_power(2).unwrap();
    let both = ch_a.tensor(&ch_a).unwrap();
    assert!(max_entry_diff(sq.choi().matrix(), both.choi().matrix()) < 1e-11);
}

#[test]
fn apply_channel_targets_one_subsystem() {
    let mut rng = common::rng(20);
    let layout = SystemLayout::new(vec![("R", 2usize), ("A", 2)]).unwrap();
    let rho = random_density(4, &mut rng).unwrap();
    let ch = random_channel(2, 3, 2, &mut rng).unwrap();

    let (out, out_layout) = apply_channel(&ch, &rho, &layout, "A").unwrap();
    assert_eq!(out_layout.dim_of("A").unwrap(), 3);
    assert_eq!(out_layout.dim_of("R").unwrap(), 2);

    // Compare against the explicit (id ⊗ ch) construction.
    let ext = Channel::identity(2).tensor(&ch).unwrap();
    let expect = ext.apply_matrix(rho.matrix()).unwrap();
    assert!(max_entry_diff(out.matrix(), &expect) < 1e-10);

    // The untouched marginal is preserved.
    let (marg_before, _) = partial_trace(rho.matrix(), &layout, &["R"]).unwrap();
    let (marg_after, _) = partial_trace(out.matrix(), &out_layout, &["R"]).unwrap();
    assert!(max_entry_diff(&marg_before, &marg_after) < 1e-10);
}

#[test]
fn json_roundtrips() {
    let mut rng = common::rng(21);
    let rho = random_density(3, &mut rng).unwrap();
    let json = matrix_to_json(rho.matrix(), &[3]).unwrap();
    let back = matrix_from_json(&json).unwrap();
    assert!(max_entry_diff(&back, rho.matrix()) < 1e-15);

    // Declared dims must match the matrix shape.
    assert!(matrix_to_json(rho.matrix(), &[2, 2]).is_err());

    let ch = random_channel(2, 3, 2, &mut rng).unwrap();
    let cj = channel_to_json(&ch).unwrap();
    let text = serde_json::to_string(&cj).unwrap();
    let parsed: ChannelJson = serde_json::from_str(&text).unwrap();
    let back = channel_from_json(&parsed).unwrap();
    assert_eq!(back.dim_in(), 2);
    assert_eq!(back.dim_out(), 3);
    assert!(max_entry_diff(back.choi().matrix(), ch.choi().matrix()) < 1e-10);

    // Malformed payloads are rejected with an error rather than a panic.
    let bad =
        serde_json::from_str::<MatrixJson>(r#"{"dims":[2],"re":[[1.0]],"im":[[0.0]]}"#).unwrap();
    assert!(matrix_from_json(&bad).is_err());
}
