use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use robba::error::Error;
use robba::fixtures::{random_constant_unit, random_plus_unit};
use robba::series::Q;
use robba::unitroot::{unit_root_reduce, verify_descent, DEFAULT_MAX_DEGREE};
use robba::{CoeffRing, SeriesCtx, SeriesMatrix};

fn ctx(p: u64, prec: u32) -> Arc<SeriesCtx> {
    SeriesCtx::with_default_window(CoeffRing::new(p, 1, 1, prec).unwrap(), Q::new(1, 2)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn degree_is_basis_independent(seed in any::<u64>(), p in prop::sample::select(vec![3u64, 5, 7]), n in 1usize..=2) {
        let c = ctx(p, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_plus_unit(&c, n, &mut rng, 2);
        let basis = random_constant_unit(&c, n, &mut rng);
        // constants over Z_p are fixed by Frobenius
        let conj = basis.inverse().unwrap().mul(&phi).unwrap().mul(&basis).unwrap();
        let a = unit_root_reduce(&phi, 12, DEFAULT_MAX_DEGREE).unwrap();
        let b = unit_root_reduce(&conj, 12, DEFAULT_MAX_DEGREE).unwrap();
        prop_assert_eq!((a.m, a.d), (b.m, b.d));
    }

    #[test]
    fn descent_substitutes_back(seed in any::<u64>(), p in prop::sample::select(vec![2u64, 3, 5]), n in 1usize..=2) {
        let c = ctx(p, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_plus_unit(&c, n, &mut rng, 3);
        let desc = unit_root_reduce(&phi, 20, DEFAULT_MAX_DEGREE).unwrap();
        let v = verify_descent(&phi, &desc).unwrap();
        prop_assert!(v.is_none_or(|v| v >= desc.d as i64));
        prop_assert_eq!(desc.residual, v);
    }
}

#[test]
fn lang_example_needs_degree_four() {
    let c = ctx(5, 10);
    let phi = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 2), (1, 5)]]]).unwrap();
    let desc = unit_root_reduce(&phi, 30, DEFAULT_MAX_DEGREE).unwrap();
    assert_eq!((desc.d, desc.m), (1, 4));
    assert!(desc.transcript.iter().any(|l| l.starts_with("step 1") && l.contains("F_5^4")));
}

#[test]
fn laurent_input_is_rejected() {
    let c = ctx(5, 10);
    let phi = SeriesMatrix::from_int_terms(&c, &[vec![vec![(-1, 5), (0, 1)]]]).unwrap();
    assert!(matches!(unit_root_reduce(&phi, 10, DEFAULT_MAX_DEGREE), Err(Error::NotUnitRoot(_))));
}

#[test]
fn small_degree_bound_reports_no_solution() {
    let c = ctx(5, 10);
    let phi = SeriesMatrix::from_int_terms(&c, &[vec![vec![(0, 2)]]]).unwrap();
    assert!(matches!(unit_root_reduce(&phi, 10, 3), Err(Error::NoSolution { bound: 3, .. })));
}
