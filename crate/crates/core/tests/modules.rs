use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use robba::fixtures::{random_plus_unit, random_twist, random_unipotent_constants};
use robba::series::Q;
use robba::sigma_nabla::{base_change, check_compatibility, SigmaNablaModule};
use robba::{CoeffRing, SeriesCtx, SeriesMatrix};

fn ctx() -> Arc<SeriesCtx> {
    SeriesCtx::new(CoeffRing::new(5, 1, 1, 12).unwrap(), Q::new(1, 2), -80, 80).unwrap()
}

fn same(a: &SeriesMatrix, b: &SeriesMatrix) -> bool {
    a.sub(b).unwrap().num_terms() == 0
}

fn same_module(a: &SigmaNablaModule, b: &SigmaNablaModule) -> bool {
    same(&a.phi, &b.phi) && same(&a.nconn, &b.nconn)
}

fn change(c: &Arc<SeriesCtx>, rng: &mut ChaCha8Rng, plus: bool) -> SeriesMatrix {
    if plus {
        random_plus_unit(c, 2, rng, 2)
    } else {
        random_twist(c, 2, rng, 1)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn base_change_composes(seed in any::<u64>(), a_plus in any::<bool>(), b_plus in any::<bool>()) {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_unipotent_constants(&c, 2, &mut rng);
        let a = change(&c, &mut rng, a_plus);
        let b = change(&c, &mut rng, b_plus);
        let stepwise = base_change(&base_change(&m, &a).unwrap(), &b).unwrap();
        let direct = base_change(&m, &a.mul(&b).unwrap()).unwrap();
        prop_assert!(same_module(&stepwise, &direct));
    }

    #[test]
    fn base_change_round_trips(seed in any::<u64>(), plus in any::<bool>()) {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_unipotent_constants(&c, 2, &mut rng);
        let a = change(&c, &mut rng, plus);
        let back = base_change(&base_change(&m, &a).unwrap(), &a.inverse().unwrap()).unwrap();
        prop_assert!(same_module(&back, &m));
    }

    #[test]
    fn base_change_preserves_compatibility(seed in any::<u64>(), plus in any::<bool>()) {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_unipotent_constants(&c, 2, &mut rng);
        prop_assert!(check_compatibility(&m).unwrap().holds);
        let a = change(&c, &mut rng, plus);
        prop_assert!(check_compatibility(&base_change(&m, &a).unwrap()).unwrap().holds);
    }
}

#[test]
fn identity_change_is_trivial() {
    let c = ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = random_unipotent_constants(&c, 3, &mut rng);
    let same_m = base_change(&m, &SeriesMatrix::identity(&c, 3)).unwrap();
    assert!(same_module(&same_m, &m));
    assert_eq!(same_m.ring, m.ring);
}
