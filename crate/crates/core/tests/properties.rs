use frokaweil_core::dilation::{sample_hull, verify_dilation_structural, HullStrategy};
use frokaweil_core::domain::MatrixPolyQ;
use frokaweil_core::experiments::{configuration_from_seed, nc_axiom_suite, DEFAULT_MARGIN};
use frokaweil_core::linalg::{self, block_diag, c64, spectral_norm};
use frokaweil_core::mattuple::random_tuple;
use frokaweil_core::ncalg::Word;
use frokaweil_core::realization::{Colligation, Mode};
use frokaweil_core::zariski::{interpolate, stabilization_degree, IdealBasis};
use frokaweil_core::{parse_poly, CMat, FreePolynomial};
use proptest::prelude::*;

const D: usize = 2;

/// Polynomials with small Gaussian-integer coefficients, so ring identities
/// hold exactly in floating point.
fn int_poly() -> impl Strategy<Value = FreePolynomial> {
    let term = (prop::collection::vec(1..=D as u32, 0..=3), -3i8..=3, -3i8..=3);
    prop::collection::vec(term, 0..6).prop_map(|terms| {
        let terms = terms.into_iter().map(|(w, re, im)| (Word::new(w, D).unwrap(), c64(re as f64, im as f64)));
        FreePolynomial::from_terms(D, terms).unwrap()
    })
}

fn real_poly() -> impl Strategy<Value = FreePolynomial> {
    let term = (prop::collection::vec(1..=D as u32, 0..=3), -1e3f64..1e3, -1e3f64..1e3);
    prop::collection::vec(term, 0..6).prop_map(|terms| {
        let terms = terms.into_iter().map(|(w, re, im)| (Word::new(w, D).unwrap(), c64(re, im)));
        FreePolynomial::from_terms(D, terms).unwrap()
    })
}

fn close(a: &CMat, b: &CMat, scale: f64) -> bool {
    spectral_norm(&(a - b)).unwrap() <= 1e-11 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms_hold_exactly(p in int_poly(), q in int_poly(), r in int_poly()) {
        prop_assert_eq!(p.add(&q).unwrap(), q.add(&p).unwrap());
        prop_assert_eq!(p.add(&q).unwrap().add(&r).unwrap(), p.add(&q.add(&r).unwrap()).unwrap());
        prop_assert_eq!(p.mul(&q).unwrap().mul(&r).unwrap(), p.mul(&q.mul(&r).unwrap()).unwrap());
        prop_assert_eq!(p.mul(&q.add(&r).unwrap()).unwrap(), p.mul(&q).unwrap().add(&p.mul(&r).unwrap()).unwrap());
        prop_assert_eq!(q.add(&r).unwrap().mul(&p).unwrap(), q.mul(&p).unwrap().add(&r.mul(&p).unwrap()).unwrap());
        prop_assert!(p.sub(&p).unwrap().is_zero());
        prop_assert_eq!(FreePolynomial::one(D).mul(&p).unwrap(), p.clone());
    }

    #[test]
    fn degree_of_product(p in int_poly(), q in int_poly()) {
        // Free algebras have no zero divisors.
        let pq = p.mul(&q).unwrap();
        match (p.degree(), q.degree()) {
            (Some(a), Some(b)) => prop_assert_eq!(pq.degree(), Some(a + b)),
            _ => prop_assert!(pq.is_zero()),
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism(p in int_poly(), q in int_poly(), n in 1usize..=4, seed in any::<u64>()) {
        let z = random_tuple(n, D, 0.8, seed).unwrap();
        let (pz, qz) = (p.eval(&z).unwrap(), q.eval(&z).unwrap());
        let scale = spectral_norm(&pz).unwrap() * spectral_norm(&qz).unwrap();
        prop_assert!(close(&p.mul(&q).unwrap().eval(&z).unwrap(), &(&pz * &qz), scale));
        prop_assert!(close(&p.add(&q).unwrap().eval(&z).unwrap(), &(&pz + &qz), scale));
        prop_assert_eq!(pz.shape(), (n, n));
    }

    #[test]
    fn evaluation_respects_direct_sums(p in int_poly(), n in 1usize..=3, k in 1usize..=3, seed in any::<u64>()) {
        let a = random_tuple(n, D, 0.9, seed).unwrap();
        let b = random_tuple(k, D, 0.9, seed ^ 1).unwrap();
        let (pa, pb) = (p.eval(&a).unwrap(), p.eval(&b).unwrap());
        let sum = block_diag(&[&pa, &pb]);
        prop_assert!(close(&p.eval(&a.direct_sum(&b).unwrap()).unwrap(), &sum, spectral_norm(&sum).unwrap()));
    }

    #[test]
    fn evaluation_respects_similarities(p in int_poly(), n in 1usize..=4, seed in any::<u64>(), cond in 1.0f64..50.0) {
        let z = random_tuple(n, D, 0.9, seed).unwrap();
        let s = linalg::random_invertible(n, cond, &mut linalg::rng_from_seed(seed ^ 7));
        let inv = s.clone().try_inverse().unwrap();
        let expect = &s * p.eval(&z).unwrap() * &inv;
        let scale = spectral_norm(&s).unwrap() * spectral_norm(&inv).unwrap() * spectral_norm(&p.eval(&z).unwrap()).unwrap();
        prop_assert!(close(&p.eval(&z.conjugate(&s).unwrap()).unwrap(), &expect, scale));
    }

    #[test]
    fn print_parse_round_trip(p in real_poly()) {
        let text = p.to_string();
        prop_assert_eq!(parse_poly(&text, D).unwrap(), p);
    }

    #[test]
    fn neumann_error_within_tail_bound(seed in 0u64..500, terms in 0usize..40) {
        let cfg = configuration_from_seed(seed, 2, DEFAULT_MARGIN).unwrap();
        let f = cfg.col.eval_closed(&cfg.q, &cfg.lambda).unwrap();
        let p = cfg.col.eval_neumann(&cfg.q, &cfg.lambda, terms, 1.0).unwrap();
        let bound = cfg.col.neumann_tail_bound(&cfg.q, &cfg.lambda, terms).unwrap();
        prop_assert!(spectral_norm(&(f - p)).unwrap() <= bound + 1e-12);
    }

    #[test]
    fn schur_agler_values_are_contractive(seed in any::<u64>(), n in 1usize..=4) {
        let q = MatrixPolyQ::row_ball(2);
        let col = Colligation::random(1, 2, 2, seed, Mode::Contractive).unwrap();
        let z = q.sample_point(n, 0.01, &mut linalg::rng_from_seed(seed)).unwrap();
        prop_assert!(spectral_norm(&col.eval_closed(&q, &z).unwrap()).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn hull_samples_are_certified(seed in any::<u64>(), n in 1usize..=3, strategy in 0usize..5) {
        let strategy = [HullStrategy::Unitary, HullStrategy::Summand, HullStrategy::Krylov,
            HullStrategy::Quotient, HullStrategy::Mix][strategy];
        let x = random_tuple(n, D, 0.9, seed).unwrap();
        for s in sample_hull(&x, 3, seed, strategy).unwrap() {
            let v = verify_dilation_structural(&s.tuple, &x, &s.witness, 1e-9).unwrap();
            prop_assert!(v.ok, "{:?}", v);
        }
    }

    #[test]
    fn ideal_kernel_vanishes_and_interpolation_is_exact(seed in any::<u64>(), n in 1usize..=3) {
        let x = random_tuple(n, D, 0.9, seed).unwrap();
        let stab = stabilization_degree(&x, None).unwrap();
        prop_assert!(stab.ranks.windows(2).all(|w| w[0] <= w[1]));
        let basis = IdealBasis::new(&x, stab.degree + 1, None).unwrap();
        for p in basis.polys() {
            prop_assert!(spectral_norm(&p.eval(&x).unwrap()).unwrap() <= 10.0 * basis.rank_tol());
        }
        // Any polynomial value at x is reached at degree D*.
        let target = parse_poly("x1*x2*x1 - 2*x2*x2 + 1", D).unwrap().eval(&x).unwrap();
        prop_assert!(interpolate(&target, &x, stab.degree).unwrap().residual <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn reports_are_deterministic(seed in any::<u64>()) {
        let a = nc_axiom_suite(seed, 3).unwrap().to_json().unwrap();
        let b = nc_axiom_suite(seed, 3).unwrap().to_json().unwrap();
        prop_assert_eq!(a, b);
    }
}
