//! Maps between the configuration spaces: heights and oriented loops, loops
//! and spin pairs, and the random colourings and orientations linking the
//! measures.

use std::collections::VecDeque;

use rand::Rng;

use crate::config::{
    decompose_loops, loop_labels, omega_of, theta_clusters, theta_of, validate_height, ConfigError, HeightFn,
    LoopConfig, OrientedLoopConfig, Spin, SpinPair,
};
use crate::lattice::{Domain, FaceGraph};

/// Level lines of `phi`; a loop is clockwise when `phi` is higher inside.
pub fn height_to_oriented_loops(d: &Domain, phi: &HeightFn) -> OrientedLoopConfig {
    let mask = d.edges().iter().map(|&(a, b)| phi.get(a) != phi.get(b)).collect();
    let loops = LoopConfig::from_mask_unchecked(mask);
    let clockwise = decompose_loops(d, &loops)
        .iter()
        .map(|lp| {
            let (a, b) = d.edges()[lp.edges[0]];
            let inside = lp.inside_faces(d)[0];
            let outside = if inside == a { b } else { a };
            phi.get(inside) > phi.get(outside)
        })
        .collect();
    OrientedLoopConfig { loops, clockwise }
}

/// Height equal to the number of clockwise minus counter-clockwise loops
/// surrounding each face.
pub fn oriented_loops_to_height(d: &Domain, ol: &OrientedLoopConfig) -> HeightFn {
    let loops = decompose_loops(d, &ol.loops);
    assert_eq!(loops.len(), ol.clockwise.len(), "one orientation flag per loop");
    let label = loop_labels(d, &loops);
    let mut inside = vec![usize::MAX; d.num_edges()];
    for lp in &loops {
        for (&e, f) in lp.edges.iter().zip(lp.inside_faces(d)) {
            inside[e] = f;
        }
    }
    let n = d.num_faces();
    let mut values = vec![0i32; n];
    let mut done = vec![false; n];
    let start = d.inner_boundary()[0];
    done[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        for &b in d.neighbors(a) {
            if done[b] {
                continue;
            }
            let e = d.edge_between(a, b).expect("neighbours share an interior edge");
            let step = if label[e] == usize::MAX {
                0
            } else {
                let sign = if ol.clockwise[label[e]] { 1 } else { -1 };
                if inside[e] == b {
                    sign
                } else {
                    -sign
                }
            };
            values[b] = values[a] + step;
            done[b] = true;
            queue.push_back(b);
        }
    }
    validate_height(d, values).expect("oriented loops give a Lipschitz function")
}

pub fn orient_uniform<R: Rng + ?Sized>(d: &Domain, omega: &LoopConfig, rng: &mut R) -> OrientedLoopConfig {
    let count = decompose_loops(d, omega).len();
    OrientedLoopConfig { loops: omega.clone(), clockwise: (0..count).map(|_| rng.gen()).collect() }
}

/// Colours each loop red or blue with probability one half.
pub fn color_loops_uniform<R: Rng + ?Sized>(d: &Domain, omega: &LoopConfig, rng: &mut R) -> (LoopConfig, LoopConfig) {
    let mut red = vec![false; d.num_edges()];
    let mut blue = vec![false; d.num_edges()];
    for lp in decompose_loops(d, omega) {
        let target = if rng.gen::<bool>() { &mut red } else { &mut blue };
        for e in lp.edges {
            target[e] = true;
        }
    }
    (LoopConfig::from_mask_unchecked(red), LoopConfig::from_mask_unchecked(blue))
}

/// `(omega(red), omega(blue))`; both colours must be constant on the inner
/// boundary.
pub fn spins_to_loops(d: &Domain, pair: &SpinPair) -> Result<(LoopConfig, LoopConfig), ConfigError> {
    Ok((omega_of(d, &pair.red)?, omega_of(d, &pair.blue)?))
}

/// Spins equal to the boundary value flipped once per surrounding loop of
/// the matching colour.
pub fn loops_to_spins(
    d: &Domain,
    omega_r: &LoopConfig,
    omega_b: &LoopConfig,
    red_boundary: Spin,
    blue_boundary: Spin,
) -> Result<SpinPair, ConfigError> {
    if !omega_r.is_disjoint(omega_b) {
        return Err(ConfigError::OverlappingLoops);
    }
    Ok(SpinPair { red: flip_across(d, omega_r, red_boundary), blue: flip_across(d, omega_b, blue_boundary) })
}

fn flip_across(d: &Domain, omega: &LoopConfig, boundary: Spin) -> Vec<Spin> {
    let n = d.num_faces();
    let mut spins = vec![boundary; n];
    let mut done = vec![false; n];
    let start = d.inner_boundary()[0];
    done[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        for &b in d.neighbors(a) {
            if !done[b] {
                let e = d.edge_between(a, b).expect("neighbours share an interior edge");
                spins[b] = if omega.contains(e) { spins[a].flip() } else { spins[a] };
                done[b] = true;
                queue.push_back(b);
            }
        }
    }
    spins
}

/// Blue spins constant on each cluster of `theta(red)`, one fair coin per
/// cluster.
pub fn assign_blue_uniform<R: Rng + ?Sized>(graph: &FaceGraph, red: &[Spin], rng: &mut R) -> Vec<Spin> {
    let mut uf = theta_clusters(graph, &theta_of(graph, red));
    let n = graph.num_faces();
    let mut root_spin = vec![None; n];
    let mut blue = Vec::with_capacity(n);
    for i in 0..n {
        let r = uf.find_mut(i);
        let s = *root_spin[r].get_or_insert_with(|| Spin::from_bool(rng.gen()));
        blue.push(s);
    }
    blue
}
