use hexloop::config::{is_coherent, validate_height, BoundaryCondition, HeightFn, Space, Spin, SpinPair};
use hexloop::exact::{enumerate_heights, enumerate_pairs, EnumCaps};
use hexloop::lattice::{
    build_ball, build_cylinder, build_parallelogram, build_rectangle, face_distance, Domain, FaceCoord,
};
use hexloop::mcmc::{run_chain, ChainParams, Dynamics, HeatBath, State, Target};
use hexloop::observe::SeriesSummary;
use hexloop::transform::{color_loops_uniform, height_to_oriented_loops, loops_to_spins};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random 1-Lipschitz function vanishing on the boundary, built from an
/// extremal or flat function by random single-face moves of size one.
fn random_height(d: &Domain, rng: &mut ChaCha8Rng) -> Vec<i32> {
    let depth = |i: usize| {
        let f = d.face(i);
        (0..d.num_faces()).filter(|&j| d.is_inner_boundary(j)).map(|j| face_distance(f, d.face(j))).min().unwrap()
    };
    let mut v: Vec<i32> = match rng.gen_range(0..3) {
        0 => vec![0; d.num_faces()],
        1 => (0..d.num_faces()).map(depth).collect(),
        _ => (0..d.num_faces()).map(|i| -depth(i)).collect(),
    };
    let interior = d.interior_faces();
    for _ in 0..rng.gen_range(0..2000) {
        let u = interior[rng.gen_range(0..interior.len())];
        let x = v[u] + if rng.gen() { 1 } else { -1 };
        if d.neighbors(u).iter().all(|&w| (v[w] - x).abs() <= 1) {
            v[u] = x;
        }
    }
    validate_height(d, v.clone()).expect("moves keep the function valid");
    v
}

#[test]
fn heat_bath_connects_random_starts_to_zero_on_ball_three() {
    // Lower a maximal face (or raise a minimal one) through the chain's own
    // single-face update until the function vanishes.
    let d = build_ball(3).unwrap();
    let kernel = HeatBath::new(&d);
    let slots = d.interior_faces();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let mut v = random_height(&d, &mut rng);
        let mut steps = 0;
        while let Some(p) = (0..slots.len()).filter(|&p| v[slots[p]] != 0).max_by_key(|&p| v[slots[p]].abs()) {
            let u = slots[p];
            let target = v[u] - v[u].signum();
            let mut tries = 0;
            while v[u] != target {
                let before = v.clone();
                kernel.sweep(&mut v, &[p as u32], &mut rng);
                assert!(v.iter().zip(&before).enumerate().all(|(i, (a, b))| i == u || a == b));
                tries += 1;
                assert!(tries < 200, "update at {} never reached {target}", d.face(u));
            }
            steps += 1;
            assert!(steps < 10_000);
        }
        assert!(v.iter().all(|&x| x == 0));
    }
}

#[test]
fn heat_bath_chain_hits_zero_on_ball_two() {
    let d = build_ball(2).unwrap();
    let total = enumerate_heights(&d, &EnumCaps::default()).unwrap().len();
    let kernel = HeatBath::new(&d);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut order: Vec<u32> = (0..kernel.len() as u32).collect();
    for _ in 0..100 {
        let mut v = random_height(&d, &mut rng);
        let mut sweeps = 0;
        while v.iter().any(|&x| x != 0) {
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            kernel.sweep(&mut v, &order, &mut rng);
            sweeps += 1;
            assert!(sweeps < 200 * total, "no visit to zero after {sweeps} sweeps");
        }
    }
}

fn check_spin_validity(space: Space, bc: BoundaryCondition) {
    let target = Target::new(space, bc.clone(), Dynamics::Spin).unwrap();
    let graph = target.graph().clone();
    let params = ChainParams::new(3000, 0, 1, 5, 0).unwrap();
    let mut seen = 0;
    run_chain(&target, params, |c| {
        let pair = c.pair().unwrap();
        assert!(is_coherent(&graph, &pair.red, &pair.blue), "{} sweep {}", bc.name(), c.sweeps_done());
        let raw = match c.state() {
            State::Pair(p) => p.clone(),
            State::Height(_) => unreachable!(),
        };
        assert!(target.constraints().allows(&raw), "{} sweep {}", bc.name(), c.sweeps_done());
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 3000);
}

#[test]
fn spin_chain_keeps_pairs_valid() {
    let par = || Space::Planar(build_parallelogram(4, 3).unwrap());
    for bc in [
        BoundaryCondition::Free,
        BoundaryCondition::RedPP,
        BoundaryCondition::RedMM,
        BoundaryCondition::RedPM,
        BoundaryCondition::RedMP,
        BoundaryCondition::BluePM,
    ] {
        check_spin_validity(par(), bc);
    }
    check_spin_validity(Space::Planar(build_rectangle(4, 3).unwrap()), BoundaryCondition::DobrushinRect);
    check_spin_validity(Space::Cylinder(build_cylinder(4, 3).unwrap()), BoundaryCondition::DobrushinCyl);
}

#[test]
fn height_chain_keeps_functions_valid() {
    let d = build_ball(4).unwrap();
    let target = Target::new(Space::Planar(d.clone()), BoundaryCondition::RedPM, Dynamics::Height).unwrap();
    let params = ChainParams::new(2000, 0, 1, 9, 0).unwrap();
    run_chain(&target, params, |c| {
        let State::Height(phi) = c.state() else { unreachable!() };
        validate_height(&d, phi.values().to_vec()).unwrap();
    })
    .unwrap();
}

/// `(red centre plus, red and blue agree at the centre, fraction of red plus)`.
fn pair_stats(pair: &SpinPair, centre: usize) -> [f64; 3] {
    let n = pair.red.len() as f64;
    [
        pair.red[centre].is_p() as u8 as f64,
        (pair.red[centre] == pair.blue[centre]) as u8 as f64,
        pair.red.iter().filter(|s| s.is_p()).count() as f64 / n,
    ]
}

fn coloured_pair(d: &Domain, phi: &HeightFn, rng: &mut ChaCha8Rng) -> SpinPair {
    let omega = height_to_oriented_loops(d, phi).loops;
    let (r, b) = color_loops_uniform(d, &omega, rng);
    loops_to_spins(d, &r, &b, Spin::P, Spin::from_bool(rng.gen())).unwrap()
}

fn series_mean(xs: &[f64]) -> (f64, f64) {
    let s = SeriesSummary::of(xs);
    (s.stats.mean(), s.mean_variance().sqrt())
}

#[test]
fn height_chain_pushforward_matches_spin_chain_and_exact_law() {
    let d = build_ball(2).unwrap();
    let centre = d.index_of(FaceCoord::ORIGIN).unwrap();
    let space = Space::Planar(d.clone());
    let exact = enumerate_pairs(&space, &BoundaryCondition::RedPM, &EnumCaps::default()).unwrap();
    let exact_stats: Vec<f64> = (0..3)
        .map(|k| exact.expectation(|p| num_rational::BigRational::from_float(pair_stats(p, centre)[k]).unwrap()))
        .map(|q| q.to_f64().unwrap())
        .collect();

    let sweeps = 60_000;
    let heights = Target::new(space.clone(), BoundaryCondition::RedPM, Dynamics::Height).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut from_heights: [Vec<f64>; 3] = Default::default();
    run_chain(&heights, ChainParams::new(sweeps, 1000, 1, 1, 0).unwrap(), |c| {
        let State::Height(phi) = c.state() else { unreachable!() };
        let s = pair_stats(&coloured_pair(&d, phi, &mut rng), centre);
        for k in 0..3 {
            from_heights[k].push(s[k]);
        }
    })
    .unwrap();

    let spins = Target::new(space, BoundaryCondition::RedPM, Dynamics::Spin).unwrap();
    let mut from_spins: [Vec<f64>; 3] = Default::default();
    run_chain(&spins, ChainParams::new(sweeps, 1000, 1, 2, 0).unwrap(), |c| {
        let s = pair_stats(&c.pair().unwrap(), centre);
        for k in 0..3 {
            from_spins[k].push(s[k]);
        }
    })
    .unwrap();

    for k in 0..3 {
        let (a, ea) = series_mean(&from_heights[k]);
        let (b, eb) = series_mean(&from_spins[k]);
        let joint = (ea * ea + eb * eb).sqrt();
        assert!((a - b).abs() < 4.0 * joint, "stat {k}: heights {a} spins {b} (sigma {joint})");
        assert!((a - exact_stats[k]).abs() < 4.0 * ea, "stat {k}: heights {a} exact {}", exact_stats[k]);
        assert!((b - exact_stats[k]).abs() < 4.0 * eb, "stat {k}: spins {b} exact {}", exact_stats[k]);
    }
}

#[test]
fn red_centre_marginal_under_pp_matches_exact() {
    let d = build_ball(2).unwrap();
    let centre = d.index_of(FaceCoord::ORIGIN).unwrap();
    let space = Space::Planar(d);
    let exact = enumerate_pairs(&space, &BoundaryCondition::RedPP, &EnumCaps::default())
        .unwrap()
        .prob(|p| p.red[centre].is_p())
        .to_f64()
        .unwrap();
    let target = Target::new(space, BoundaryCondition::RedPP, Dynamics::Spin).unwrap();
    let mut xs = Vec::new();
    run_chain(&target, ChainParams::new(50_000, 1000, 1, 4, 0).unwrap(), |c| {
        xs.push(c.pair().unwrap().red[centre].is_p() as u8 as f64);
    })
    .unwrap();
    let (mean, err) = series_mean(&xs);
    assert!((mean - exact).abs() < 3.0 * err, "sampled {mean} +- {err}, exact {exact}");
}
