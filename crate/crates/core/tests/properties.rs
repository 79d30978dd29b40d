//! Property tests for the algebraic invariants the simulator relies on.

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use qctx::experiment::{
    expectation_closed_form, expectation_trace, interlinked_contexts, interlinked_distribution,
    opposite_outcomes_check, rotation_invariance_check, sample, singlet_state, FORBIDDEN_CELLS,
};
use qctx::ks::{context_of, ks_operator, KSLabels, C_PRIME_BLUE, C_RED};
use qctx::linalg::{
    hermitian_eigen, kron, projector, unitary_from_generator, ComplexMatrix, StateVector,
};
use qctx::logic::{diagram_from_operators, parse_diagram, validate_diagram};
use qctx::spin::{rotation_operator, spin_observable, spin_squared, Direction};
use qctx::{Complex64, Tolerances};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), rows * cols)
        .prop_map(move |e| ComplexMatrix::from_entries(rows, cols, e).unwrap())
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n, n).prop_map(|m| (&m + &m.adjoint()).scale_real(0.5))
}

fn ket(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(complex(), n)
        .prop_filter_map("nonzero", |a| StateVector::normalized(a).ok())
}

fn direction() -> impl Strategy<Value = Direction> {
    (0.0..=PI, 0.0..2.0 * PI).prop_map(|(t, p)| Direction::new(t, p).unwrap())
}

fn labels(lo: f64, hi: f64) -> impl Strategy<Value = KSLabels> {
    (lo..hi, lo..hi, lo..hi).prop_filter_map("separated labels", |(a, b, c)| {
        KSLabels::with_gap(a, b, c, 1e-3).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_bilinear(a in matrix(2, 3), b in matrix(2, 3), c in matrix(3, 2), z in complex()) {
        let lhs = kron(&(&a + &b.scale(z)), &c);
        let rhs = &kron(&a, &c) + &kron(&b, &c).scale(z);
        prop_assert!(lhs.distance(&rhs) < 1e-12);
        let lhs = kron(&c, &(&a + &b));
        let rhs = &kron(&c, &a) + &kron(&c, &b);
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn kron_is_associative(a in matrix(2, 2), b in matrix(3, 1), c in matrix(1, 2)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.distance(&right) < 1e-12);
    }

    #[test]
    fn kron_mixed_product(a in matrix(3, 3), b in matrix(3, 3), c in matrix(3, 3), d in matrix(3, 3)) {
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(lhs.distance(&rhs) < 1e-11);
    }

    #[test]
    fn projectors_are_rank_one_idempotents(v in ket(3)) {
        let p = projector(&v).unwrap();
        prop_assert!(p.distance(&p.adjoint()) < 1e-12);
        prop_assert!(p.distance(&(&p * &p)) < 1e-12);
        prop_assert!((p.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // Global phase does not change the ray.
        let q = projector(&v.scaled(Complex64::from_polar(1.0, 0.7))).unwrap();
        prop_assert!(p.distance(&q) < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_3x3(a in hermitian(3)) {
        let eig = hermitian_eigen(&a).unwrap();
        prop_assert!(eig.reconstruct().distance(&a) < 1e-9);
        prop_assert!(eig.orthonormality_deviation() < 1e-10);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = eig.eigenvalues.iter().sum();
        prop_assert!((trace - a.trace().re).abs() < 1e-10);
    }

    #[test]
    fn eigen_reconstructs_9x9(a in hermitian(9)) {
        let eig = hermitian_eigen(&a).unwrap();
        prop_assert!(eig.reconstruct().distance(&a) < 1e-9);
        prop_assert!(eig.orthonormality_deviation() < 1e-10);
    }

    #[test]
    fn unitary_group_law(h in hermitian(3), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let ua = unitary_from_generator(&h, a).unwrap();
        let ub = unitary_from_generator(&h, b).unwrap();
        let uab = unitary_from_generator(&h, a + b).unwrap();
        prop_assert!((&ua * &ub).distance(&uab) < 1e-10);
        prop_assert!(ua.unitarity_deviation() < 1e-10);
    }

    #[test]
    fn spin_observable_invariants(d in direction()) {
        let j = spin_observable(d).matrix;
        prop_assert!(j.distance(&j.adjoint()) < 1e-15);
        prop_assert!(j.trace().norm() < 1e-15);
        let eig = hermitian_eigen(&j).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip([-1.0, 0.0, 1.0]) {
            prop_assert!((got - want).abs() < 1e-10);
        }
        // J² has eigenvalues {0, 1, 1}, so J³ = J.
        let j2 = spin_squared(d);
        prop_assert!((&j2 * &j).distance(&j) < 1e-12);
    }

    #[test]
    fn antipodal_direction_flips_sign(d in direction()) {
        let anti = Direction::new(PI - d.theta(), d.phi() + PI).unwrap();
        let sum = &spin_observable(d).matrix + &spin_observable(anti).matrix;
        prop_assert!(sum.frobenius_norm() < 1e-12);
    }

    #[test]
    fn orthogonal_triad_squares_sum_to_two(d in direction(), psi in 0.0..2.0 * PI) {
        // Build an orthonormal triad (d, e1, e2) around d.
        let n = d.unit_vector();
        let seed = if n[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
        let dot = n[0] * seed[0] + n[1] * seed[1] + n[2] * seed[2];
        let mut e1 = [seed[0] - dot * n[0], seed[1] - dot * n[1], seed[2] - dot * n[2]];
        let len = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        e1.iter_mut().for_each(|x| *x /= len);
        let e2 = [
            n[1] * e1[2] - n[2] * e1[1],
            n[2] * e1[0] - n[0] * e1[2],
            n[0] * e1[1] - n[1] * e1[0],
        ];
        let (s, c) = psi.sin_cos();
        let a: Vec<f64> = (0..3).map(|k| c * e1[k] + s * e2[k]).collect();
        let b: Vec<f64> = (0..3).map(|k| -s * e1[k] + c * e2[k]).collect();
        let da = Direction::from_cartesian(a[0], a[1], a[2]).unwrap();
        let db = Direction::from_cartesian(b[0], b[1], b[2]).unwrap();
        let total = &(&spin_squared(d) + &spin_squared(da)) + &spin_squared(db);
        prop_assert!(total.distance(&ComplexMatrix::identity(3).scale_real(2.0)) < 1e-12);
        // Squares along orthogonal axes commute.
        prop_assert!(spin_squared(d).commutator(&spin_squared(da)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn z_rotation_shifts_azimuth(phi in 0.0..2.0 * PI, omega in -PI..PI) {
        let u = rotation_operator(Direction::Z, omega).unwrap();
        let j = spin_observable(Direction::new(FRAC_PI_2, phi).unwrap()).matrix;
        let rotated = &(&u * &j) * &u.adjoint();
        let expected = spin_observable(Direction::new(FRAC_PI_2, phi + omega).unwrap()).matrix;
        prop_assert!(rotated.distance(&expected) < 1e-10);
    }

    #[test]
    fn ks_spectrum_is_labels(l in labels(-5.0, 5.0), red in any::<bool>()) {
        let az = if red { C_RED } else { C_PRIME_BLUE };
        let op = ks_operator(l, az).unwrap();
        prop_assert!(op.matrix.distance(&op.matrix.adjoint()) < 1e-12);
        let eig = hermitian_eigen(&op.matrix).unwrap();
        let mut want = l.as_array();
        want.sort_by(f64::total_cmp);
        for (got, w) in eig.eigenvalues.iter().zip(want) {
            prop_assert!((got - w).abs() < 1e-10);
        }
    }

    #[test]
    fn ks_rays_do_not_depend_on_labels(l in labels(-5.0, 5.0), red in any::<bool>()) {
        let az = if red { C_RED } else { C_PRIME_BLUE };
        let reference = context_of(&ks_operator(KSLabels::new(1.0, 2.0, 3.0).unwrap(), az).unwrap()).unwrap();
        let ctx = context_of(&ks_operator(l, az).unwrap()).unwrap();
        for k in 0..3 {
            let got = projector(&ctx.rays[k]).unwrap();
            let want = projector(&reference.rays[k]).unwrap();
            prop_assert!(got.distance(&want) < 1e-8);
            // Each ray carries the label in the same slot.
            prop_assert_eq!(ctx.labels[k], l.as_array()[k]);
        }
    }

    #[test]
    fn trace_matches_closed_form(l1 in labels(-2.0, 2.0), l2 in labels(-2.0, 2.0)) {
        let s = singlet_state();
        let t = expectation_trace(&ks_operator(l1, C_RED).unwrap(), &ks_operator(l2, C_PRIME_BLUE).unwrap(), &s).unwrap();
        prop_assert!((t - expectation_closed_form(l1, l2)).abs() < 1e-10);
        let d = interlinked_distribution(l1, l2, false).unwrap();
        prop_assert!((d.correlation() - t).abs() < 1e-10);
    }

    #[test]
    fn distribution_invariants(l1 in labels(-3.0, 3.0), l2 in labels(-3.0, 3.0), swap in any::<bool>()) {
        let d = interlinked_distribution(l1, l2, swap).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
        for m in d.side1_marginal().iter().chain(d.side2_marginal().iter()) {
            prop_assert!((m - 1.0 / 3.0).abs() < 1e-12);
        }
        let canonical = if swap { d.transposed() } else { d };
        for (i, j) in FORBIDDEN_CELLS {
            prop_assert!(canonical.probabilities[i][j] < 1e-12);
        }
    }

    #[test]
    fn forbidden_amplitudes_vanish(l1 in labels(-3.0, 3.0), l2 in labels(-3.0, 3.0)) {
        let (red, blue) = interlinked_contexts(l1, l2).unwrap();
        let s = singlet_state();
        for (i, j) in FORBIDDEN_CELLS {
            let amp = red.rays[i].kron(&blue.rays[j]).inner(s.vector());
            prop_assert!(amp.norm() < 1e-13);
        }
    }

    #[test]
    fn singlet_gives_opposite_outcomes(d in direction()) {
        let r = opposite_outcomes_check(d, &singlet_state(), &Tolerances::default()).unwrap();
        prop_assert!(r.non_opposite_mass < 1e-10);
    }

    #[test]
    fn singlet_is_rotation_invariant(axis in direction(), angle in -2.0 * PI..2.0 * PI) {
        let r = rotation_invariance_check(axis, angle, &singlet_state(), &Tolerances::default()).unwrap();
        prop_assert!(r.deviation < 1e-9);
    }

    #[test]
    fn operator_diagrams_validate(l1 in labels(-3.0, 3.0), l2 in labels(-3.0, 3.0)) {
        let ops = [ks_operator(l1, C_RED).unwrap(), ks_operator(l2, C_PRIME_BLUE).unwrap()];
        let diagram = diagram_from_operators(&ops).unwrap();
        prop_assert_eq!(diagram.rays.len(), 5);
        prop_assert_eq!(diagram.contexts.len(), 2);
        let report = validate_diagram(&diagram);
        prop_assert!(report.valid, "{:?}", report.failures);
        prop_assert_eq!(report.interlinks.len(), 1);

        let again = parse_diagram(&diagram.to_gdl()).unwrap();
        prop_assert_eq!(&again.contexts, &diagram.contexts);
        for (a, b) in again.rays.iter().zip(&diagram.rays) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.components, b.components);
        }
    }
}

/// Pearson statistic against the exact table stays below the 99.9% point
/// of χ² with 4 degrees of freedom (five allowed cells, 18.467) for every
/// seed in a fixed batch.
#[test]
fn sampled_counts_fit_exact_table() {
    let l1 = KSLabels::new(1.0, 2.0, 3.0).unwrap();
    let l2 = KSLabels::new(4.0, 5.0, 6.0).unwrap();
    let d = interlinked_distribution(l1, l2, false).unwrap();
    for seed in 0..20 {
        let t = sample(&d, 20_000, seed).unwrap();
        let (stat, dof) = t.chi_square(&d);
        assert_eq!(dof, 4);
        assert!(stat < 18.467, "seed {seed}: chi-square {stat}");
        for (i, j) in FORBIDDEN_CELLS {
            assert_eq!(t.counts[i][j], 0);
        }
    }
}
