use hexloop::config::{BoundaryCondition, Space, Spin};
use hexloop::lattice::{build_annulus, build_parallelogram, Annulus};
use hexloop::mcmc::{run_chain, ChainParams, Dynamics, Target};
use hexloop::observe::{circuit_double_exists, CircuitDetector, CrossingDetector, CrossingMode, Direction, Endpoints};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Planar dual of the circuit event: a double-`sign` circuit surrounds the
/// hole iff no face path from the hole reaches the outer boundary without
/// crossing a double-`sign` edge of the annulus.
fn hole_sealed(annulus: &Annulus, sigma: &[Spin], sign: Spin) -> bool {
    let d = annulus.outer();
    let hole = annulus.hole_mask();
    let blocks = |a: usize, b: usize| !(hole[a] && hole[b]) && sigma[a] == sign && sigma[b] == sign;
    let mut seen: Vec<bool> = hole.to_vec();
    let mut stack: Vec<usize> = (0..d.num_faces()).filter(|&i| hole[i]).collect();
    while let Some(a) = stack.pop() {
        if d.is_inner_boundary(a) {
            return false;
        }
        for &b in d.neighbors(a) {
            if !seen[b] && !blocks(a, b) {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    true
}

fn spins(bits: &[bool]) -> Vec<Spin> {
    bits.iter().map(|&b| Spin::from_bool(b)).collect()
}

#[test]
fn circuits_agree_with_dual_oracle_on_thousand_configurations() {
    let annulus = build_annulus(1, 3).unwrap();
    let n = annulus.outer().num_faces();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut found = [0usize; 2];
    for k in 0..1000 {
        // Bias towards plus so both outcomes occur often.
        let p = 0.7 + 0.3 * (k % 5) as f64 / 4.0;
        let sigma: Vec<Spin> = (0..n).map(|_| Spin::from_bool(rng.gen_bool(p))).collect();
        for sign in [Spin::P, Spin::M] {
            let got = circuit_double_exists(&annulus, &sigma, sign);
            assert_eq!(got, hole_sealed(&annulus, &sigma, sign), "configuration {k}");
            found[got as usize] += 1;
        }
    }
    assert!(found[0] > 100 && found[1] > 100, "{found:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn circuit_detection_matches_oracle_and_ignores_the_ray(
        shape in prop::sample::select(vec![(1, 2), (1, 3), (2, 4)]),
        seed in any::<u64>(),
        density in 0.3f64..0.95,
    ) {
        let annulus = build_annulus(shape.0, shape.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma: Vec<Spin> = (0..annulus.outer().num_faces()).map(|_| Spin::from_bool(rng.gen_bool(density))).collect();
        let expected = hole_sealed(&annulus, &sigma, Spin::P);
        for ray in 0..6 {
            let det = CircuitDetector::with_ray(&annulus, ray).unwrap();
            prop_assert_eq!(det.detect(&annulus, &sigma, Spin::P), expected, "ray {}", ray);
        }
    }

    #[test]
    fn plus_circuits_are_increasing(bits in prop::collection::vec(any::<bool>(), 37), flips in prop::collection::vec(0usize..37, 1..8)) {
        let annulus = build_annulus(1, 3).unwrap();
        let mut sigma = spins(&bits);
        let mut before = circuit_double_exists(&annulus, &sigma, Spin::P);
        for i in flips {
            sigma[i] = Spin::P;
            let after = circuit_double_exists(&annulus, &sigma, Spin::P);
            prop_assert!(!before || after);
            before = after;
        }
    }

    #[test]
    fn simple_crossings_are_dual_and_double_implies_simple(bits in prop::collection::vec(any::<bool>(), 16)) {
        // On a parallelogram, a simple plus crossing one way and a simple
        // minus crossing the other way cannot both be absent.
        let par = build_parallelogram(3, 3).unwrap();
        let sigma = spins(&bits);
        let h = CrossingDetector::new(&par, Direction::Horizontal, CrossingMode::Simple).unwrap();
        let v = CrossingDetector::new(&par, Direction::Vertical, CrossingMode::Simple).unwrap();
        let hp = h.detect(&par, &sigma, Spin::P);
        let vm = v.detect(&par, &sigma, Spin::M);
        prop_assert!(hp != vm, "horizontal plus {} vertical minus {}", hp, vm);
        let dp = CrossingDetector::new(&par, Direction::Horizontal, CrossingMode::Double).unwrap();
        if dp.detect(&par, &sigma, Spin::P) {
            prop_assert!(hp);
            let all_plus = vec![Spin::P; sigma.len()];
            prop_assert!(dp.detect(&par, &all_plus, Spin::P));
        }
    }
}

#[test]
fn sampled_pairs_satisfy_the_crossing_dichotomy() {
    // Without a horizontal double red crossing of either sign, blue has a
    // vertical double crossing of some sign.
    for (m, n, bc) in [
        (4, 4, BoundaryCondition::Free),
        (5, 3, BoundaryCondition::Free),
        (4, 4, BoundaryCondition::RedPM),
        (6, 5, BoundaryCondition::RedMM),
    ] {
        let par = build_parallelogram(m, n).unwrap();
        let h =
            CrossingDetector::with_endpoints(&par, Direction::Horizontal, CrossingMode::Double, Endpoints::SideFaces)
                .unwrap();
        let v = CrossingDetector::with_endpoints(&par, Direction::Vertical, CrossingMode::Double, Endpoints::SideFaces)
            .unwrap();
        let target = Target::new(Space::Planar(par.clone()), bc.clone(), Dynamics::Spin).unwrap();
        let mut red_fails = 0;
        run_chain(&target, ChainParams::new(20_000, 100, 1, 8, 0).unwrap(), |c| {
            let pair = c.pair().unwrap();
            let red = h.detect(&par, &pair.red, Spin::P) || h.detect(&par, &pair.red, Spin::M);
            if !red {
                red_fails += 1;
                let blue = v.detect(&par, &pair.blue, Spin::P) || v.detect(&par, &pair.blue, Spin::M);
                assert!(blue, "par {m}x{n} {}: sweep {} has neither crossing", bc.name(), c.sweeps_done());
            }
        })
        .unwrap();
        assert!(red_fails > 0 || bc != BoundaryCondition::Free, "par {m}x{n}: dichotomy never exercised");
    }
}
