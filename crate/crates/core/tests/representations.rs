use hexloop::config::{decompose_loops, is_coherent, validate_height, Spin};
use hexloop::exact::instances::{
    fkg_negative_control, four_arc_failure, search_fkg_negative_control, search_four_arc_failure,
};
use hexloop::exact::EnumCaps;
use hexloop::lattice::{build_ball, build_parallelogram, Domain};
use hexloop::transform::{
    color_loops_uniform, height_to_oriented_loops, loops_to_spins, oriented_loops_to_height, spins_to_loops,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random valid height function by accepted single-face moves of size one.
fn random_height(d: &Domain, seed: u64, moves: usize) -> Vec<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0i32; d.num_faces()];
    let interior = d.interior_faces();
    for _ in 0..moves {
        let u = interior[rng.gen_range(0..interior.len())];
        let x = v[u] + if rng.gen() { 1 } else { -1 };
        if d.neighbors(u).iter().all(|&w| (v[w] - x).abs() <= 1) {
            v[u] = x;
        }
    }
    v
}

fn domain(which: u8) -> Domain {
    match which {
        0 => build_ball(3).unwrap(),
        1 => build_ball(5).unwrap(),
        _ => build_parallelogram(6, 4).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn heights_survive_the_loop_round_trip(which in 0u8..3, seed in any::<u64>(), moves in 0usize..4000) {
        let d = domain(which);
        let phi = validate_height(&d, random_height(&d, seed, moves)).unwrap();
        let ol = height_to_oriented_loops(&d, &phi);
        prop_assert_eq!(ol.clockwise.len(), decompose_loops(&d, &ol.loops).len());
        prop_assert_eq!(oriented_loops_to_height(&d, &ol), phi);
    }

    #[test]
    fn coloured_loops_give_coherent_pairs_and_return(which in 0u8..3, seed in any::<u64>(), moves in 0usize..4000) {
        let d = domain(which);
        let phi = validate_height(&d, random_height(&d, seed, moves)).unwrap();
        let omega = height_to_oriented_loops(&d, &phi).loops;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
        let (r, b) = color_loops_uniform(&d, &omega, &mut rng);
        prop_assert!(r.is_disjoint(&b));
        prop_assert_eq!(r.union(&b), omega.clone());
        for (rb, bb) in [(Spin::P, Spin::P), (Spin::P, Spin::M), (Spin::M, Spin::M)] {
            let pair = loops_to_spins(&d, &r, &b, rb, bb).unwrap();
            prop_assert!(is_coherent(d.graph(), &pair.red, &pair.blue));
            let (r2, b2) = spins_to_loops(&d, &pair).unwrap();
            prop_assert_eq!(&r2, &r);
            prop_assert_eq!(&b2, &b);
            for i in d.inner_boundary() {
                prop_assert_eq!((pair.red[i], pair.blue[i]), (rb, bb));
            }
        }
    }
}

#[test]
fn frozen_negative_controls_equal_search_results() {
    let caps = EnumCaps::default();
    let (found, _) = search_fkg_negative_control(&caps).expect("search finds a control");
    let frozen = fkg_negative_control();
    assert_eq!(found.name, frozen.name);
    assert_eq!(found.kind, frozen.kind);
    assert_eq!(found.constraints, frozen.constraints);

    let (found, _) = search_four_arc_failure(&caps).expect("search finds a failure");
    let frozen = four_arc_failure();
    assert_eq!(found.name, frozen.name);
    assert_eq!(found.arcs, frozen.arcs);
    // Spins inside the small domain's interior play no part in the instance.
    let ignored: Vec<usize> =
        frozen.small.interior_faces().iter().map(|&i| frozen.big.index_of(frozen.small.face(i)).unwrap()).collect();
    for i in 0..frozen.big.num_faces() {
        if !ignored.contains(&i) {
            assert_eq!(found.tau_red[i], frozen.tau_red[i], "face {}", frozen.big.face(i));
        }
    }
}
