use proptest::prelude::*;
use triproj::assembly::{non_cauchy_certificate, Term, Word};
use triproj::exponent::Exponent;
use triproj::gram::GramCompression;
use triproj::hilbert::{op_norm, orthonormalize, plane_rotation, unit, HVector, LinOp, Unitary};
use triproj::proj::{conjugate, principal_angles, proj_distance, proj_from_basis, spectral_power, Flag, Projection};
use triproj::synthesis::schedule::level_error;
use triproj::synthesis::{adapted_schedule, stage_lower_bound};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = LinOp> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| LinOp::from_vec(rows, cols, v))
}

fn vectors(dim: usize, count: usize) -> impl Strategy<Value = Vec<HVector>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim).prop_map(HVector::from_vec), count)
}

fn small_rotation(dim: usize) -> impl Strategy<Value = Unitary> {
    (vectors(dim, 2), -1.0f64..1.0).prop_filter_map("independent pair", move |(vs, a)| {
        let b = orthonormalize(&vs).ok()?;
        plane_rotation(&b[0], &b[1], a).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composed_deviation_matches_dense_product(u in small_rotation(5), v in small_rotation(5)) {
        let dense = u.matrix() * v.matrix() - LinOp::identity(5, 5);
        prop_assert!((u.compose(&v).delta() - dense).norm() < 1e-13);
        prop_assert!(u.compose(&v).defect() < 1e-13);
    }

    #[test]
    fn conjugation_defect_matches_dense(u in small_rotation(4), x in matrix(4, 4)) {
        let dense = u.matrix() * &x * u.matrix().transpose() - &x;
        prop_assert!((u.conjugation_defect(&x) - dense).norm() < 1e-13);
    }

    #[test]
    fn rotation_fixes_the_orthogonal_complement(vs in vectors(6, 3), a in -3.0f64..3.0) {
        if let Ok(b) = orthonormalize(&vs) {
            let r = plane_rotation(&b[0], &b[1], a).unwrap();
            let w = &b[2];
            prop_assert!((r.apply(w) - w).norm() < 1e-13);
            prop_assert!(r.defect() < 1e-13);
        }
    }

    #[test]
    fn conjugated_projection_stays_a_projection(vs in vectors(5, 2), u in small_rotation(5)) {
        if let Ok(p) = proj_from_basis(&vs) {
            let q = conjugate(&u, &p).unwrap();
            prop_assert!(q.defect() < 1e-13);
            prop_assert_eq!(q.rank(), p.rank());
        }
    }

    #[test]
    fn distance_is_the_largest_angle_sine(a in vectors(6, 3), b in vectors(6, 3)) {
        if let (Ok(p), Ok(q)) = (proj_from_basis(&a), proj_from_basis(&b)) {
            let d = proj_distance(&p, &q).unwrap();
            let largest = principal_angles(&p, &q).unwrap().into_iter().fold(0.0, f64::max);
            prop_assert!((d - largest.sin()).abs() < 1e-10);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
            prop_assert!((d - proj_distance(&q, &p).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_power_extremes(m in matrix(4, 4)) {
        let t = (&m + m.transpose()) * 0.25;
        prop_assert!((spectral_power(&t, 0).unwrap() - LinOp::identity(4, 4)).norm() < 1e-12);
        prop_assert!((spectral_power(&t, 1).unwrap() - &t).norm() < 1e-12);
        prop_assert!((spectral_power(&t, 3).unwrap() - &t * &t * &t).norm() < 1e-12);
    }

    #[test]
    fn gram_powers_match_dense_powers(f in matrix(3, 5), n in 1u64..60) {
        let f = &f / (op_norm(&f) * 1.01);
        let c = GramCompression::new(f);
        let dense = spectral_power(&c.matrix(), n).unwrap();
        prop_assert!((c.power(&Exponent::from_u64(n).unwrap()) - dense).norm() < 1e-10);
    }

    #[test]
    fn nested_coordinate_sets_form_a_flag(dim in 3usize..10, cut in prop::collection::btree_set(1usize..9, 1..4)) {
        let cuts: Vec<usize> = cut.into_iter().filter(|&c| c < dim).collect();
        let mut sizes = vec![dim];
        sizes.extend(cuts.iter().rev().copied());
        let members: Vec<Projection> = sizes.iter().map(|&s| Projection::coordinates(dim, &(0..s).collect::<Vec<_>>())).collect();
        let drops = sizes.windows(2).map(|w| w[0] - w[1]).collect();
        let flag = Flag::new(members, drops).unwrap();
        let slabs = flag.slabs().unwrap();
        prop_assert_eq!(slabs.iter().map(Vec::len).sum::<usize>(), dim);
    }

    #[test]
    fn stage_bound_shrinks_as_tolerance_grows(a in 0.001f64..0.9, b in 0.001f64..0.9) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(stage_lower_bound(hi) <= stage_lower_bound(lo));
    }

    #[test]
    fn adapted_schedule_meets_every_level(deltas in prop::collection::vec(1e-30f64..0.4, 1..12)) {
        let mut deltas = deltas;
        deltas.sort_by(|a, b| b.total_cmp(a));
        let s = adapted_schedule(&deltas).unwrap();
        for (k, d) in deltas.iter().enumerate() {
            let err = level_error(&s.ln_rates, k, s.exponents[k].ln());
            prop_assert!(err < *d, "level {}: {} >= {}", k, err, d);
        }
        prop_assert!(s.exponents.windows(2).all(|w| w[0].value() <= w[1].value()));
    }

    #[test]
    fn flattened_and_grouped_words_agree(
        p in 1u64..6, m in 1u64..4, q in 1u64..6,
        a in vectors(5, 2), b in vectors(5, 3), c in vectors(5, 2),
    ) {
        if let (Ok(e), Ok(top), Ok(interp)) = (proj_from_basis(&a), proj_from_basis(&b), proj_from_basis(&c)) {
            let ex = |n| Exponent::from_u64(n).unwrap();
            let word = Word {
                terms: vec![Term::stage_factor(ex(p), ex(m)), Term::Letter(1), Term::stage_factor(ex(q), ex(1))],
                stage_marks: vec![2, 3],
            };
            let gens = [e.matrix().clone(), top.matrix().clone(), interp.matrix().clone()];
            let x = unit(5, 0);
            let flat = word.apply_flattened(&gens, &x, 1000).unwrap();
            let grouped = word.apply_grouped(&gens, &x).unwrap();
            for (f, g) in flat.iter().zip(&grouped) {
                prop_assert!((f - g).norm() < 1e-12);
            }
            let letters = word.letters(1000).unwrap();
            prop_assert_eq!(num_bigint::BigUint::from(letters.len()), word.flattened_len());
            prop_assert!(flat.windows(2).all(|w| w[1].norm() <= w[0].norm() + 1e-12));
        }
    }
}

#[test]
fn plane_letter_fixes_its_range() {
    let e = Projection::coordinates(4, &[0, 1]);
    let gens = [e.matrix().clone(), LinOp::identity(4, 4), LinOp::identity(4, 4)];
    let x = unit(4, 1) * 0.5 + unit(4, 0);
    let w = Word { terms: vec![Term::Letter(1)], stage_marks: vec![1] };
    let out = w.apply_flattened(&gens, &x, 10).unwrap();
    assert_eq!(out[1], x);
}

#[test]
fn orthonormal_iterates_are_root_two_apart() {
    let c = non_cauchy_certificate(&[unit(3, 0), unit(3, 1), unit(3, 2)]);
    assert!((c.min_pairwise - 2f64.sqrt()).abs() < 1e-15);
    assert!((c.threshold - 0.41421356237309515).abs() < 1e-15);
    assert!(c.pass());
}
