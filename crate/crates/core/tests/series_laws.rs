use std::sync::Arc;

use proptest::prelude::*;

use robba::series::Q;
use robba::{CoeffRing, FrobeniusLift, LaurentSeries, SeriesCtx};

fn ctx() -> Arc<SeriesCtx> {
    SeriesCtx::with_default_window(CoeffRing::new(5, 1, 1, 20).unwrap(), Q::new(1, 2)).unwrap()
}

/// Laurent polynomial from `(exponent, v_p, prime-to-p part)` triples.
fn poly(c: &Arc<SeriesCtx>, terms: &[(i64, u32, i64)]) -> LaurentSeries {
    let ring = c.ring().clone();
    LaurentSeries::from_terms(
        c,
        terms.iter().map(|&(i, v, u)| (i, ring.from_int(5i64.pow(v) * u))).collect::<Vec<_>>(),
    )
}

fn terms(span: i64) -> impl Strategy<Value = Vec<(i64, u32, i64)>> {
    prop::collection::vec((-span..=span, 0u32..5, prop_oneof![1i64..5, -4i64..0]), 0..6)
}

fn same(a: &LaurentSeries, b: &LaurentSeries) -> bool {
    a.sub(b).unwrap().num_terms() == 0
}

proptest! {
    #[test]
    fn gauss_value_is_multiplicative(f in terms(10), g in terms(10), s in prop::sample::select(vec![(1, 3), (1, 2), (1, 1), (2, 1)])) {
        let c = ctx();
        let (f, g) = (poly(&c, &f), poly(&c, &g));
        let s = Q::new(s.0, s.1);
        let wf = f.gauss_norm(s).unwrap().w;
        let wg = g.gauss_norm(s).unwrap().w;
        let wp = f.mul(&g).unwrap().gauss_norm(s).unwrap().w;
        prop_assert_eq!(wp, wf.zip(wg).map(|(a, b)| a + b));
    }

    #[test]
    fn gauss_value_of_sum_is_at_least_min(f in terms(10), g in terms(10)) {
        let c = ctx();
        let (f, g) = (poly(&c, &f), poly(&c, &g));
        let s = Q::new(1, 2);
        let lower = f.gauss_norm(s).unwrap().min(g.gauss_norm(s).unwrap());
        let sum = f.add(&g).unwrap().gauss_norm(s).unwrap();
        prop_assert!(lower.w.is_none_or(|w| sum.at_least(w)));
    }

    #[test]
    fn theta_is_a_derivation(f in terms(10), g in terms(10)) {
        let c = ctx();
        let (f, g) = (poly(&c, &f), poly(&c, &g));
        let lhs = f.mul(&g).unwrap().theta();
        let rhs = f.theta().mul(&g).unwrap().add(&f.mul(&g.theta()).unwrap()).unwrap();
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn frobenius_is_multiplicative(f in terms(4), g in terms(4)) {
        let c = ctx();
        let (f, g) = (poly(&c, &f), poly(&c, &g));
        let lift = FrobeniusLift::standard(5);
        let lhs = f.mul(&g).unwrap().frobenius_substitute(&lift).unwrap();
        let rhs = f.frobenius_substitute(&lift).unwrap().mul(&g.frobenius_substitute(&lift).unwrap()).unwrap();
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn split_recombines(f in terms(10)) {
        let c = ctx();
        let f = poly(&c, &f);
        let (minus, plus) = f.split_plus_minus();
        prop_assert!(minus.is_strict_minus() && plus.is_plus());
        prop_assert!(same(&minus.add(&plus).unwrap(), &f));
    }

    #[test]
    fn inverse_multiplies_back(k in -3i64..=3, u in 1i64..5, rest in terms(6)) {
        let c = ctx();
        // every extra term has w_{1/2} > k
        let rest: Vec<_> = rest.into_iter().filter(|&(i, v, _)| Q::new(v as i64, 2) + Q::from_integer(i) > Q::from_integer(k)).collect();
        let f = LaurentSeries::monomial(&c, c.ring().from_int(u), k).add(&poly(&c, &rest)).unwrap();
        let inv = f.inv().unwrap();
        prop_assert!(same(&f.mul(&inv).unwrap(), &LaurentSeries::one(&c)));
    }
}
