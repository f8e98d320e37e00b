//! Markov chains for the height and spin-pair measures.
//!
//! The height chain is a random-order heat bath for the uniform Lipschitz
//! function vanishing on the inner boundary. The spin chain proposes
//! single-face flips of either colour and accepts exactly when the pair stays
//! coherent and compatible with the boundary condition, so its stationary law
//! is uniform on admissible pairs. Irreducibility of the spin chain is not
//! proved; it is checked against exact enumeration on small domains.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{is_coherent, BoundaryCondition, ConfigError, Constraints, HeightFn, Space, Spin, SpinPair};
use crate::lattice::{Domain, FaceGraph};
use crate::observe::stats::{integrated_autocorrelation, RunningStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McmcError {
    #[error("invalid chain parameters: {0}")]
    Params(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("need at least two chains, got {0}")]
    TooFewChains(usize),
    #[error("chains are identical or constant; the variance ratio is undefined")]
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    /// Heat bath on heights; the spin image is the `pm` measure.
    Height,
    /// Single-face Metropolis on coherent pairs.
    Spin,
}

/// Initial configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    /// Zero heights, or red plus on free faces with constant blue.
    #[default]
    Flat,
    /// Lowest heights (minus the distance to the boundary), or red minus on free faces.
    Low,
    /// Highest heights, or red plus on free faces.
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub sweeps: u64,
    pub burnin: u64,
    pub thin: u64,
    pub seed: u64,
    pub chain: u64,
}

impl ChainParams {
    pub fn new(sweeps: u64, burnin: u64, thin: u64, seed: u64, chain: u64) -> Result<Self, McmcError> {
        let p = ChainParams { sweeps, burnin, thin, seed, chain };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), McmcError> {
        if self.burnin >= self.sweeps {
            return Err(McmcError::Params(format!("burn-in {} must be below sweeps {}", self.burnin, self.sweeps)));
        }
        if self.thin == 0 {
            return Err(McmcError::Params("thinning must be at least 1".into()));
        }
        Ok(())
    }

    pub fn num_samples(&self) -> u64 {
        (self.sweeps - self.burnin) / self.thin
    }

    /// `count` chains sharing everything except the chain id.
    pub fn family(&self, count: u64) -> Vec<ChainParams> {
        (0..count).map(|c| ChainParams { chain: self.chain + c, ..*self }).collect()
    }
}

/// Random stream for one sweep of one chain. The key holds the seed, chain
/// id and purpose; the sweep number selects the ChaCha stream, so any sweep
/// can be replayed independently of the others.
pub fn keyed_rng(seed: u64, chain: u64, sweep: u64, purpose: u8) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&chain.to_le_bytes());
    key[16] = purpose;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(sweep);
    rng
}

pub const PURPOSE_SWEEP: u8 = 0;
pub const PURPOSE_OBSERVE: u8 = 1;

/// A measure together with the dynamics used to sample it.
#[derive(Clone, Debug)]
pub struct Target {
    pub space: Space,
    pub bc: BoundaryCondition,
    pub dynamics: Dynamics,
    constraints: Constraints,
}

/// Largest FourArc domain (free red faces) the spin chain accepts.
pub const FOUR_ARC_MAX_FREE: usize = 16;

impl Target {
    pub fn new(space: Space, bc: BoundaryCondition, dynamics: Dynamics) -> Result<Self, McmcError> {
        let constraints = Constraints::compile(&space, &bc)?;
        match dynamics {
            Dynamics::Height => {
                if space.planar().is_none() {
                    return Err(McmcError::Unsupported("the height chain needs a planar domain".into()));
                }
                if bc != BoundaryCondition::RedPM {
                    return Err(McmcError::Unsupported(format!(
                        "the height chain samples the pm measure, not {}",
                        bc.name()
                    )));
                }
            }
            Dynamics::Spin => {
                if matches!(bc, BoundaryCondition::FourArc(_)) && constraints.free_red_faces().len() > FOUR_ARC_MAX_FREE
                {
                    return Err(McmcError::Unsupported(format!(
                        "four-arc sampling is limited to {FOUR_ARC_MAX_FREE} free faces"
                    )));
                }
            }
        }
        Ok(Target { space, bc, dynamics, constraints })
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    pub fn graph(&self) -> &FaceGraph {
        self.space.graph()
    }
}

/// Current configuration of a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum State {
    Height(HeightFn),
    /// In the frame of the compiled constraints; see `Chain::pair`.
    Pair(SpinPair),
}

/// What a sample refers to: the chain, the sweep after which it was taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleTag {
    pub seed: u64,
    pub chain: u64,
    pub sweep: u64,
}

impl SampleTag {
    pub fn rng(&self) -> ChaCha8Rng {
        keyed_rng(self.seed, self.chain, self.sweep, PURPOSE_OBSERVE)
    }
}

pub struct Chain<'a> {
    target: &'a Target,
    params: ChainParams,
    state: State,
    sweep: u64,
    order: Vec<usize>,
    heat: Option<(HeatBath, Vec<u32>)>,
}

impl<'a> Chain<'a> {
    pub fn new(target: &'a Target, params: ChainParams, start: Start) -> Result<Self, McmcError> {
        params.validate()?;
        let state = match target.dynamics {
            Dynamics::Height => State::Height(height_start(target.space.planar().unwrap(), start)),
            Dynamics::Spin => State::Pair(pair_start(target.graph(), &target.constraints, start)?),
        };
        let (order, heat) = match target.dynamics {
            Dynamics::Height => {
                let kernel = HeatBath::new(target.space.planar().unwrap());
                let positions = (0..kernel.len() as u32).collect();
                (Vec::new(), Some((kernel, positions)))
            }
            Dynamics::Spin => ((0..target.graph().num_faces()).collect(), None),
        };
        Ok(Chain { target, params, state, sweep: 0, order, heat })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweep
    }

    pub fn tag(&self) -> SampleTag {
        SampleTag { seed: self.params.seed, chain: self.params.chain, sweep: self.sweep }
    }

    /// The current pair in the frame of the measure (colours swapped back
    /// for `Blue*` conditions). `None` for the height chain.
    pub fn pair(&self) -> Option<SpinPair> {
        match &self.state {
            State::Pair(p) if self.target.constraints.swapped => Some(p.swapped()),
            State::Pair(p) => Some(p.clone()),
            State::Height(_) => None,
        }
    }

    pub fn sweep(&mut self) {
        self.sweep += 1;
        let mut rng = keyed_rng(self.params.seed, self.params.chain, self.sweep, PURPOSE_SWEEP);
        match &mut self.state {
            State::Height(phi) => {
                let (kernel, order) = self.heat.as_mut().expect("height chains carry a kernel");
                order.shuffle(&mut rng);
                kernel.sweep(phi.values_mut(), order, &mut rng);
                debug_assert!(crate::config::validate_height(
                    self.target.space.planar().unwrap(),
                    phi.values().to_vec()
                )
                .is_ok());
            }
            State::Pair(pair) => {
                self.order.shuffle(&mut rng);
                spin_metropolis_sweep(self.target.graph(), &self.target.constraints, pair, &self.order, &mut rng);
            }
        }
    }

    /// Runs the remaining sweeps, calling `f` after every retained sweep.
    pub fn run(&mut self, mut f: impl FnMut(&Chain<'a>)) {
        while self.sweep < self.params.sweeps {
            self.sweep();
            if self.sweep > self.params.burnin && (self.sweep - self.params.burnin) % self.params.thin == 0 {
                f(self);
            }
        }
    }
}

/// Runs one chain from the default start and calls `f` on each retained
/// sample.
pub fn run_chain(target: &Target, params: ChainParams, f: impl FnMut(&Chain<'_>)) -> Result<(), McmcError> {
    let mut chain = Chain::new(target, params, Start::Flat)?;
    chain.run(f);
    Ok(())
}

fn height_start(d: &Domain, start: Start) -> HeightFn {
    let sign = match start {
        Start::Flat => return HeightFn::zero(d),
        Start::Low => -1,
        Start::High => 1,
    };
    let mut dist = vec![i32::MAX; d.num_faces()];
    let mut queue = std::collections::VecDeque::new();
    for i in d.inner_boundary() {
        dist[i] = 0;
        queue.push_back(i);
    }
    while let Some(a) = queue.pop_front() {
        for &b in d.neighbors(a) {
            if dist[b] == i32::MAX {
                dist[b] = dist[a] + 1;
                queue.push_back(b);
            }
        }
    }
    crate::config::validate_height(d, dist.into_iter().map(|x| sign * x).collect()).expect("distance is Lipschitz")
}

fn pair_start(graph: &FaceGraph, c: &Constraints, start: Start) -> Result<SpinPair, McmcError> {
    let fill = if start == Start::Low { Spin::M } else { Spin::P };
    let red: Vec<Spin> = c.red.iter().map(|s| s.unwrap_or(fill)).collect();
    let mut fixed_blue = c.blue.iter().flatten();
    let blue_value = fixed_blue.next().copied().unwrap_or(Spin::P);
    if fixed_blue.any(|&s| s != blue_value) {
        return Err(McmcError::Unsupported("no constant-blue start for these blue constraints".into()));
    }
    let blue = vec![blue_value; graph.num_faces()];
    debug_assert!(is_coherent(graph, &red, &blue));
    Ok(SpinPair { red, blue })
}

/// Heat-bath kernel for heights: the interior faces with their six
/// neighbours in a flat table.
#[derive(Clone, Debug)]
pub struct HeatBath {
    faces: Vec<u32>,
    nbr: Vec<[u32; 6]>,
}

impl HeatBath {
    pub fn new(d: &Domain) -> Self {
        let faces: Vec<u32> = d.interior_faces().iter().map(|&u| u as u32).collect();
        let nbr = faces
            .iter()
            .map(|&u| {
                let ns = d.neighbors(u as usize);
                debug_assert_eq!(ns.len(), 6, "interior faces have six neighbours");
                std::array::from_fn(|i| ns[i] as u32)
            })
            .collect();
        HeatBath { faces, nbr }
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// One pass over the interior faces in the order given by `order` (a
    /// permutation of `0..len`): each face is redrawn uniformly among the
    /// values within one of all its neighbours.
    pub fn sweep<R: Rng + ?Sized>(&self, values: &mut [i32], order: &[u32], rng: &mut R) {
        for &p in order {
            let p = p as usize;
            let (mut lo, mut hi) = (i32::MIN, i32::MAX);
            for &w in &self.nbr[p] {
                let x = values[w as usize];
                lo = lo.max(x - 1);
                hi = hi.min(x + 1);
            }
            values[self.faces[p] as usize] = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        }
    }
}

/// One heat-bath pass over the interior of `d` in a uniformly random order.
pub fn height_heatbath_sweep<R: Rng + ?Sized>(d: &Domain, phi: &mut HeightFn, rng: &mut R) {
    let kernel = HeatBath::new(d);
    let mut order: Vec<u32> = (0..kernel.len() as u32).collect();
    order.shuffle(rng);
    kernel.sweep(phi.values_mut(), &order, rng);
}

fn red_flip_ok(graph: &FaceGraph, pair: &SpinPair, i: usize) -> bool {
    let r = pair.red[i].flip();
    graph.neighbors(i).iter().all(|&j| r == pair.red[j] || pair.blue[i] == pair.blue[j])
}

fn blue_flip_ok(graph: &FaceGraph, pair: &SpinPair, i: usize) -> bool {
    let b = pair.blue[i].flip();
    graph.neighbors(i).iter().all(|&j| b == pair.blue[j] || pair.red[i] == pair.red[j])
}

/// One Metropolis pass over `order`. At each face a red flip and then a blue
/// flip are proposed, each held with probability one half. Faces whose blue
/// spin is tied to others only move through the global blue flip proposed at
/// the end of the pass, which is allowed when no blue spin is fixed.
pub fn spin_metropolis_sweep<R: Rng + ?Sized>(
    graph: &FaceGraph,
    c: &Constraints,
    pair: &mut SpinPair,
    order: &[usize],
    rng: &mut R,
) {
    let tied_group = c.blue_tied.len() > 1;
    let mut tied = vec![false; graph.num_faces()];
    if tied_group {
        c.blue_tied.iter().for_each(|&i| tied[i] = true);
    }
    for &i in order {
        if rng.gen::<bool>() && c.red[i].is_none() && red_flip_ok(graph, pair, i) {
            pair.red[i] = pair.red[i].flip();
        }
        if rng.gen::<bool>() && c.blue[i].is_none() && !tied[i] && blue_flip_ok(graph, pair, i) {
            pair.blue[i] = pair.blue[i].flip();
        }
    }
    if rng.gen::<bool>() && c.blue.iter().all(Option::is_none) {
        pair.blue.iter_mut().for_each(|s| *s = s.flip());
    }
    debug_assert!(is_coherent(graph, &pair.red, &pair.blue) && c.allows(pair));
}

/// Between/within-chain variance ratio and autocorrelation summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub chains: usize,
    pub rhat: f64,
    /// Integrated autocorrelation time of each chain, in samples.
    pub iat: Vec<f64>,
    pub flagged: bool,
}

pub const RHAT_THRESHOLD: f64 = 1.1;

/// Gelman-Rubin ratio over equal-length prefixes of the streams.
pub fn convergence_diagnostics(streams: &[Vec<f64>]) -> Result<Diagnostics, McmcError> {
    if streams.len() < 2 {
        return Err(McmcError::TooFewChains(streams.len()));
    }
    let n = streams.iter().map(Vec::len).min().unwrap_or(0);
    if n < 2 {
        return Err(McmcError::Params("each chain needs at least two samples".into()));
    }
    if streams.iter().skip(1).all(|s| s[..n] == streams[0][..n]) {
        return Err(McmcError::Degenerate);
    }
    let per_chain: Vec<RunningStats> = streams.iter().map(|s| RunningStats::from_slice(&s[..n])).collect();
    let w = per_chain.iter().map(RunningStats::sample_variance).sum::<f64>() / per_chain.len() as f64;
    let means = RunningStats::from_iter(per_chain.iter().map(RunningStats::mean));
    let b = n as f64 * means.sample_variance();
    if w <= 0.0 {
        return Err(McmcError::Degenerate);
    }
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    let rhat = (var_plus / w).sqrt();
    let iat = streams.iter().map(|s| integrated_autocorrelation(&s[..n])).collect();
    Ok(Diagnostics { chains: streams.len(), rhat, iat, flagged: rhat > RHAT_THRESHOLD })
}

/// Writes one length-prefixed record: the face count as a little-endian
/// `u32`, then one little-endian `i32` per face. Spin pairs are encoded as
/// `red + 2 * blue` with plus as 1.
pub fn spool_record<W: Write>(out: &mut W, state: &State) -> io::Result<()> {
    let values: Vec<i32> = match state {
        State::Height(phi) => phi.values().to_vec(),
        State::Pair(p) => p.red.iter().zip(&p.blue).map(|(r, b)| r.is_p() as i32 + 2 * b.is_p() as i32).collect(),
    };
    out.write_all(&(values.len() as u32).to_le_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads records written by `spool_record`.
pub fn read_spool(bytes: &[u8]) -> io::Result<Vec<Vec<i32>>> {
    let mut out = Vec::new();
    let mut pos = 0;
    let truncated = || io::Error::new(io::ErrorKind::UnexpectedEof, "truncated spool record");
    while pos < bytes.len() {
        let head: [u8; 4] = bytes.get(pos..pos + 4).ok_or_else(truncated)?.try_into().unwrap();
        let n = u32::from_le_bytes(head) as usize;
        pos += 4;
        let body = bytes.get(pos..pos + 4 * n).ok_or_else(truncated)?;
        out.push(body.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect());
        pos += 4 * n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ball, FaceCoord};

    fn ball_target(n: i32, bc: BoundaryCondition, dynamics: Dynamics) -> Target {
        Target::new(Space::Planar(build_ball(n).unwrap()), bc, dynamics).unwrap()
    }

    #[test]
    fn sample_count() {
        let p = ChainParams::new(1000, 100, 10, 1, 0).unwrap();
        assert_eq!(p.num_samples(), 90);
        let t = ball_target(1, BoundaryCondition::RedPM, Dynamics::Height);
        let mut count = 0;
        run_chain(&t, p, |_| count += 1).unwrap();
        assert_eq!(count, 90);
        assert!(ChainParams::new(10, 10, 1, 0, 0).is_err());
        assert!(ChainParams::new(10, 1, 0, 0, 0).is_err());
    }

    #[test]
    fn height_chain_is_deterministic_and_valid() {
        let t = ball_target(3, BoundaryCondition::RedPM, Dynamics::Height);
        let d = t.space.planar().unwrap().clone();
        let collect = |seed| {
            let mut out = Vec::new();
            run_chain(&t, ChainParams::new(50, 0, 1, seed, 0).unwrap(), |c| {
                let State::Height(phi) = c.state() else { unreachable!() };
                assert!(crate::config::validate_height(&d, phi.values().to_vec()).is_ok());
                out.push(phi.clone());
            })
            .unwrap();
            out
        };
        assert_eq!(collect(5), collect(5));
        assert_ne!(collect(5), collect(6));
    }

    #[test]
    fn height_centre_marginal_on_ball_one() {
        let t = ball_target(1, BoundaryCondition::RedPM, Dynamics::Height);
        let c = t.space.planar().unwrap().index_of(FaceCoord::ORIGIN).unwrap();
        let mut counts = [0usize; 3];
        let p = ChainParams::new(10_100, 100, 1, 3, 0).unwrap();
        run_chain(&t, p, |ch| {
            let State::Height(phi) = ch.state() else { unreachable!() };
            counts[(phi.get(c) + 1) as usize] += 1;
        })
        .unwrap();
        let tv: f64 = counts.iter().map(|&k| (k as f64 / 10_000.0 - 1.0 / 3.0).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.01, "{counts:?}");
    }

    #[test]
    fn incoherent_flips_are_rejected() {
        let d = build_ball(1).unwrap();
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let ring = d.inner_boundary()[0];
        let mut pair = SpinPair::constant(7, Spin::P, Spin::P);
        pair.red[c] = Spin::M;
        assert!(!blue_flip_ok(d.graph(), &pair, c));
        assert!(red_flip_ok(d.graph(), &pair, ring));
        let mut pair = SpinPair::constant(7, Spin::P, Spin::P);
        pair.blue[c] = Spin::M;
        assert!(!red_flip_ok(d.graph(), &pair, c));
        assert!(blue_flip_ok(d.graph(), &pair, ring));
    }

    #[test]
    fn unsupported_targets() {
        let d = build_ball(1).unwrap();
        assert!(Target::new(Space::Planar(d.clone()), BoundaryCondition::RedPP, Dynamics::Height).is_err());
        assert!(Target::new(Space::Planar(d), BoundaryCondition::DobrushinRect, Dynamics::Spin).is_err());
        let big = build_ball(3).unwrap();
        let vs = crate::exact::instances::ball_one_corners();
        let arcs = [vs[0], vs[1], vs[2], vs[3]];
        // Corners of the unit ball are not boundary vertices of the larger ball.
        assert!(Target::new(Space::Planar(big), BoundaryCondition::FourArc(arcs), Dynamics::Spin).is_err());
    }

    #[test]
    fn diagnostics() {
        let a: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        assert_eq!(convergence_diagnostics(&[a.clone()]), Err(McmcError::TooFewChains(1)));
        assert_eq!(convergence_diagnostics(&[a.clone(), a.clone()]), Err(McmcError::Degenerate));
        let shifted: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(convergence_diagnostics(&[a.clone(), shifted]).unwrap().flagged);
        let b: Vec<f64> = (0..100).map(|i| ((i + 3) % 7) as f64).collect();
        assert!(!convergence_diagnostics(&[a, b]).unwrap().flagged);
    }

    #[test]
    fn spool_round_trip() {
        let t = ball_target(1, BoundaryCondition::RedPM, Dynamics::Spin);
        let mut buf = Vec::new();
        let mut states = Vec::new();
        run_chain(&t, ChainParams::new(20, 0, 5, 1, 0).unwrap(), |c| {
            spool_record(&mut buf, c.state()).unwrap();
            states.push(c.state().clone());
        })
        .unwrap();
        let records = read_spool(&buf).unwrap();
        assert_eq!(records.len(), 4);
        assert_eq!(buf.len(), 4 * (4 + 4 * 7));
        let State::Pair(p) = &states[0] else { unreachable!() };
        assert_eq!(records[0][0], p.red[0].is_p() as i32 + 2 * p.blue[0].is_p() as i32);
        assert!(read_spool(&buf[..buf.len() - 1]).is_err());
    }
}
