//! Events evaluated on chain samples and their pooled estimates.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{BoundaryCondition, Space, Spin, SpinPair};
use crate::lattice::{build_annulus, build_ball, Annulus, Domain, DomainError, FaceCoord, Shape, ShapeSpec};
use crate::mcmc::{convergence_diagnostics, Chain, ChainParams, Dynamics, McmcError, Start, State, Target};
use crate::transform::{color_loops_uniform, height_to_oriented_loops, loops_to_spins};

use super::detect::{CircuitDetector, CrossingDetector, CrossingMode, DetectError, Direction, RayLoopCounter};
use super::stats::{pooled, SeriesSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("{0}")]
    Incompatible(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

/// A quantity measured on each sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventSpec {
    /// Number of loops surrounding a face.
    SurroundLoopCount { face: FaceCoord },
    /// Some loop surrounds every face of `Lambda_radius`.
    LoopSurrounding { radius: i32 },
    /// At least two loops each surround every face of `Lambda_radius`.
    TwoLoopsSurrounding { radius: i32 },
    /// A double-`sign` circuit of the colour in `Lambda_outer \ Lambda_inner`.
    CircuitDouble { inner: i32, outer: i32, color: Color, sign: Spin },
    /// A face path of red `sign` across the region.
    CrossingSimple { region: ShapeSpec, direction: Direction, sign: Spin },
    /// A double-`sign` edge path of the colour across the region.
    CrossingDouble { region: ShapeSpec, direction: Direction, color: Color, sign: Spin },
    /// `(phi(x) - phi(y))^2`.
    HeightDiffSq { x: FaceCoord, y: FaceCoord },
}

fn dir_symbol(d: Direction) -> &'static str {
    match d {
        Direction::Horizontal => "h",
        Direction::Vertical => "v",
    }
}

fn color_symbol(c: Color) -> &'static str {
    match c {
        Color::Red => "red",
        Color::Blue => "blue",
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSpec::SurroundLoopCount { face } => write!(f, "surround-count@{},{}", face.k, face.l),
            EventSpec::LoopSurrounding { radius } => write!(f, "loop-surrounding@{radius}"),
            EventSpec::TwoLoopsSurrounding { radius } => write!(f, "two-loops-surrounding@{radius}"),
            EventSpec::CircuitDouble { inner, outer, color, sign } => {
                write!(f, "circuit-{}-{}{}@{inner},{outer}", color_symbol(*color), sign.symbol(), sign.symbol())
            }
            EventSpec::CrossingSimple { region, direction, sign } => {
                write!(f, "crossing-{}-{}@{region}", dir_symbol(*direction), sign.symbol())
            }
            EventSpec::CrossingDouble { region, direction, color, sign } => write!(
                f,
                "crossing-{}-{}-{}{}@{region}",
                dir_symbol(*direction),
                color_symbol(*color),
                sign.symbol(),
                sign.symbol()
            ),
            EventSpec::HeightDiffSq { x, y } => write!(f, "height-diff-sq@{},{};{},{}", x.k, x.l, y.k, y.l),
        }
    }
}

enum Item {
    Surround { counter: RayLoopCounter, at_least: Option<usize> },
    HeightDiff { x: usize, y: usize },
    Circuit { annulus: Annulus, map: Vec<usize>, detector: CircuitDetector, color: Color, sign: Spin },
    Crossing { region: Domain, map: Vec<usize>, detector: CrossingDetector, color: Color, sign: Spin },
}

/// Evaluates a list of events on the samples of one chain.
pub struct Observer {
    domain: Domain,
    items: Vec<Item>,
    needs_pair: bool,
}

fn face_map(sub: &Domain, d: &Domain, what: &str) -> Result<Vec<usize>, EstimateError> {
    sub.faces()
        .iter()
        .map(|&f| {
            d.index_of(f).ok_or_else(|| EstimateError::Incompatible(format!("{what} face {f} lies outside the domain")))
        })
        .collect()
}

fn face_index(d: &Domain, f: FaceCoord) -> Result<usize, EstimateError> {
    d.index_of(f).ok_or_else(|| EstimateError::Incompatible(format!("face {f} lies outside the domain")))
}

impl Observer {
    pub fn new(target: &Target, events: &[EventSpec]) -> Result<Self, EstimateError> {
        let domain = target
            .space
            .planar()
            .ok_or_else(|| EstimateError::Incompatible("events need a planar domain".into()))?
            .clone();
        let d = &domain;
        let heights = target.dynamics == Dynamics::Height;
        let mut needs_pair = false;
        let mut items = Vec::with_capacity(events.len());
        for ev in events {
            let item = match ev {
                EventSpec::SurroundLoopCount { face } => {
                    face_index(d, *face)?;
                    Item::Surround { counter: RayLoopCounter::new(d, *face, None), at_least: None }
                }
                EventSpec::LoopSurrounding { radius } | EventSpec::TwoLoopsSurrounding { radius } => {
                    let ball = build_ball(*radius)?;
                    face_map(&ball, d, "region")?;
                    let mask: Vec<bool> = d.faces().iter().map(|&f| ball.contains(f)).collect();
                    let k = if matches!(ev, EventSpec::LoopSurrounding { .. }) { 1 } else { 2 };
                    Item::Surround {
                        counter: RayLoopCounter::new(d, FaceCoord::ORIGIN, Some(&mask)),
                        at_least: Some(k),
                    }
                }
                EventSpec::HeightDiffSq { x, y } => {
                    if !heights {
                        return Err(EstimateError::Incompatible(format!("{ev} needs the height chain")));
                    }
                    Item::HeightDiff { x: face_index(d, *x)?, y: face_index(d, *y)? }
                }
                EventSpec::CircuitDouble { inner, outer, color, sign } => {
                    let annulus = build_annulus(*inner, *outer)?;
                    let map = face_map(annulus.outer(), d, "annulus")?;
                    needs_pair = true;
                    let detector = CircuitDetector::new(&annulus);
                    Item::Circuit { annulus, map, detector, color: *color, sign: *sign }
                }
                EventSpec::CrossingSimple { region, direction, sign }
                | EventSpec::CrossingDouble { region, direction, sign, .. } => {
                    let Shape::Planar(r) = region.build()? else {
                        return Err(EstimateError::Incompatible(format!("{region} is not a labelled planar region")));
                    };
                    let map = face_map(&r, d, "region")?;
                    let (mode, color) = match ev {
                        EventSpec::CrossingDouble { color, .. } => (CrossingMode::Double, *color),
                        _ => (CrossingMode::Simple, Color::Red),
                    };
                    let detector = CrossingDetector::new(&r, *direction, mode)?;
                    needs_pair = true;
                    Item::Crossing { region: r, map, detector, color, sign: *sign }
                }
            };
            items.push(item);
        }
        Ok(Observer { domain, items, needs_pair })
    }

    /// One value per event for the chain's current sample.
    pub fn observe(&mut self, chain: &Chain<'_>) -> Vec<f64> {
        let d = &self.domain;
        let pair: Option<SpinPair> = if self.needs_pair {
            Some(match chain.state() {
                State::Height(phi) => {
                    // Colour the level lines and read the spins off, red plus
                    // and blue uniform on the boundary.
                    let mut rng = chain.tag().rng();
                    let omega = height_to_oriented_loops(d, phi).loops;
                    let (r, b) = color_loops_uniform(d, &omega, &mut rng);
                    let blue_boundary = Spin::from_bool(rng.gen());
                    loops_to_spins(d, &r, &b, Spin::P, blue_boundary).expect("colour classes are disjoint")
                }
                State::Pair(_) => chain.pair().unwrap(),
            })
        } else {
            None
        };
        let state = chain.state();
        let in_omega = |e: usize| -> bool {
            let (a, b) = d.edges()[e];
            match state {
                State::Height(phi) => phi.get(a) != phi.get(b),
                State::Pair(p) => p.red[a] != p.red[b] || p.blue[a] != p.blue[b],
            }
        };
        let pick = |c: Color| -> &[Spin] {
            let p = pair.as_ref().unwrap();
            match c {
                Color::Red => &p.red,
                Color::Blue => &p.blue,
            }
        };
        let mut out = Vec::with_capacity(self.items.len());
        for item in &mut self.items {
            let v = match item {
                Item::Surround { counter, at_least } => {
                    let c = counter.count(d, in_omega);
                    match at_least {
                        None => c.surrounding as f64,
                        Some(k) => (c.surrounding_region >= *k) as u8 as f64,
                    }
                }
                Item::HeightDiff { x, y } => {
                    let State::Height(phi) = state else { unreachable!("checked at construction") };
                    let diff = (phi.get(*x) - phi.get(*y)) as f64;
                    diff * diff
                }
                Item::Circuit { annulus, map, detector, color, sign } => {
                    let src = pick(*color);
                    let sigma: Vec<Spin> = map.iter().map(|&i| src[i]).collect();
                    detector.detect(annulus, &sigma, *sign) as u8 as f64
                }
                Item::Crossing { region, map, detector, color, sign } => {
                    let src = pick(*color);
                    let sigma: Vec<Spin> = map.iter().map(|&i| src[i]).collect();
                    detector.detect(region, &sigma, *sign) as u8 as f64
                }
            };
            out.push(v);
        }
        out
    }
}

/// Per-chain series, indexed `[chain][event][sample]`. Chains run in
/// parallel; the result does not depend on the number of worker threads.
pub fn collect_series(
    target: &Target,
    events: &[EventSpec],
    chains: &[ChainParams],
    start: Start,
) -> Result<Vec<Vec<Vec<f64>>>, EstimateError> {
    Observer::new(target, events)?;
    chains
        .par_iter()
        .map(|&params| {
            let mut observer = Observer::new(target, events)?;
            let mut series = vec![Vec::with_capacity(params.num_samples() as usize); events.len()];
            let mut chain = Chain::new(target, params, start)?;
            chain.run(|c| {
                for (s, v) in series.iter_mut().zip(observer.observe(c)) {
                    s.push(v);
                }
            });
            Ok(series)
        })
        .collect()
}

/// One row of an estimation table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventEstimate {
    pub event: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    /// Mean integrated autocorrelation time over chains, in samples.
    pub iat: f64,
    pub rhat: Option<f64>,
    pub warning: Option<String>,
}

/// Pools per-chain series into one row per event.
pub fn summarize(events: &[EventSpec], series: &[Vec<Vec<f64>>]) -> Vec<EventEstimate> {
    events
        .iter()
        .enumerate()
        .map(|(j, ev)| {
            let per_chain: Vec<SeriesSummary> = series.iter().map(|c| SeriesSummary::of(&c[j])).collect();
            let (stats, stderr) = pooled(&per_chain);
            let iat = per_chain.iter().map(|s| s.iat).sum::<f64>() / per_chain.len().max(1) as f64;
            let streams: Vec<Vec<f64>> = series.iter().map(|c| c[j].clone()).collect();
            let (rhat, warning) = if streams.len() < 2 {
                (None, None)
            } else {
                match convergence_diagnostics(&streams) {
                    Ok(diag) if diag.flagged => {
                        (Some(diag.rhat), Some(format!("rhat {:.3} above threshold", diag.rhat)))
                    }
                    Ok(diag) => (Some(diag.rhat), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            };
            EventEstimate {
                event: ev.to_string(),
                mean: stats.mean(),
                stderr,
                count: stats.count(),
                iat,
                rhat,
                warning,
            }
        })
        .collect()
}

/// Runs every chain and returns one row per event.
pub fn estimate(
    target: &Target,
    events: &[EventSpec],
    chains: &[ChainParams],
) -> Result<Vec<EventEstimate>, EstimateError> {
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let series = collect_series(target, events, chains, Start::Flat)?;
    Ok(summarize(events, &series))
}

/// The circuit event behind `alpha_n`: a double-plus red circuit in
/// `Lambda_{2n} \ Lambda_n`.
pub fn alpha_event(n: i32) -> EventSpec {
    EventSpec::CircuitDouble { inner: n, outer: 2 * n, color: Color::Red, sign: Spin::P }
}

/// Monte Carlo estimate of the `mm` probability of a double-plus red
/// circuit in `Lambda_{2n} \ Lambda_n`, sampled on `Lambda_{rho n}`.
pub fn alpha_hat(n: i32, rho: i32, chains: &[ChainParams]) -> Result<EventEstimate, EstimateError> {
    if n < 3 {
        return Err(EstimateError::Incompatible(format!("annulus {n}..{} is thinner than 3 faces", 2 * n)));
    }
    if rho <= 2 {
        return Err(EstimateError::Incompatible(format!("rho must exceed 2, got {rho}")));
    }
    let target = Target::new(Space::Planar(build_ball(rho * n)?), BoundaryCondition::RedMM, Dynamics::Spin)?;
    let events = [alpha_event(n)];
    Ok(estimate(&target, &events, chains)?.remove(0))
}
