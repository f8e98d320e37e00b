//! Exhaustive enumeration on small domains: height functions, loop
//! configurations and coherent spin pairs with exact rational weights.

mod checks;
pub mod instances;
pub mod suites;

pub use checks::*;

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{
    decompose_loops, is_coherent, validate_height, BoundaryCondition, ConfigError, Constraints, HeightFn, LoopConfig,
    Space, Spin, SpinPair,
};
use crate::lattice::Domain;
use crate::observe::DetectError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("{what} count {size} exceeds the enumeration cap {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },
    #[error("support of size {size} exceeds the flow cap {cap}")]
    FlowCapExceeded { size: usize, cap: usize },
    #[error("no configuration satisfies the boundary condition")]
    EmptySupport,
    #[error("red configuration is inconsistent with the boundary condition")]
    Inconsistent,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("not applicable: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Size limits for brute-force enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumCaps {
    /// Free faces (interior faces for heights, unfixed red faces for pairs).
    pub free_faces: usize,
    pub edges: usize,
    /// Total number of coherent pairs materialised.
    pub pairs: usize,
    /// Support size of each side of a domination check.
    pub flow_support: usize,
}

impl Default for EnumCaps {
    fn default() -> Self {
        EnumCaps { free_faces: 16, edges: 64, pairs: 1 << 22, flow_support: 1 << 12 }
    }
}

impl EnumCaps {
    pub fn with_free_faces(mut self, n: usize) -> Self {
        self.free_faces = n;
        self
    }
}

fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<(), ExactError> {
    if size > cap {
        Err(ExactError::CapExceeded { what, size, cap })
    } else {
        Ok(())
    }
}

pub fn pow2(k: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << k)
}

/// Finite distribution with exact positive weights.
#[derive(Clone, Debug)]
pub struct ExactDist<C> {
    items: Vec<(C, BigRational)>,
    total: BigRational,
}

impl<C> ExactDist<C> {
    /// Drops zero weights; fails if nothing is left or a weight is negative.
    pub fn from_weights(items: Vec<(C, BigRational)>) -> Result<Self, ExactError> {
        assert!(items.iter().all(|(_, w)| !w.is_negative()), "weights are nonnegative");
        let items: Vec<_> = items.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        if items.is_empty() {
            return Err(ExactError::EmptySupport);
        }
        let total = items.iter().fold(BigRational::zero(), |acc, (_, w)| acc + w);
        Ok(ExactDist { items, total })
    }

    pub fn uniform(items: Vec<C>) -> Result<Self, ExactError> {
        Self::from_weights(items.into_iter().map(|c| (c, BigRational::one())).collect())
    }

    pub fn items(&self) -> &[(C, BigRational)] {
        &self.items
    }

    pub fn total(&self) -> &BigRational {
        &self.total
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn prob(&self, event: impl Fn(&C) -> bool) -> BigRational {
        let hit = self.items.iter().filter(|(c, _)| event(c)).fold(BigRational::zero(), |acc, (_, w)| acc + w);
        hit / &self.total
    }

    pub fn expectation(&self, f: impl Fn(&C) -> BigRational) -> BigRational {
        let sum = self.items.iter().fold(BigRational::zero(), |acc, (c, w)| acc + f(c) * w);
        sum / &self.total
    }

    /// Push-forward under `f`, merging equal images. Items come out sorted.
    pub fn map<K: Ord>(&self, f: impl Fn(&C) -> K) -> ExactDist<K> {
        let mut merged: BTreeMap<K, BigRational> = BTreeMap::new();
        for (c, w) in &self.items {
            *merged.entry(f(c)).or_insert_with(BigRational::zero) += w;
        }
        ExactDist { items: merged.into_iter().collect(), total: self.total.clone() }
    }

    /// Configurations with their probabilities.
    pub fn probabilities(&self) -> impl Iterator<Item = (&C, BigRational)> {
        self.items.iter().map(|(c, w)| (c, w / &self.total))
    }
}

impl<C: Ord + Clone> ExactDist<C> {
    /// Probabilities keyed by configuration.
    pub fn law(&self) -> BTreeMap<C, BigRational> {
        let mut out = BTreeMap::new();
        for (c, p) in self.probabilities() {
            *out.entry(c.clone()).or_insert_with(BigRational::zero) += p;
        }
        out
    }

    pub fn same_law(&self, other: &ExactDist<C>) -> bool {
        self.law() == other.law()
    }
}

/// Weights `x^{|omega|} n^{#loops}` of the loop model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopWeights {
    pub n: BigRational,
    pub x: BigRational,
}

impl Default for LoopWeights {
    fn default() -> Self {
        LoopWeights::new(2, 1)
    }
}

impl LoopWeights {
    pub fn new(n: i64, x: i64) -> Self {
        LoopWeights { n: BigRational::from_integer(n.into()), x: BigRational::from_integer(x.into()) }
    }
}

/// A measure to enumerate: spin pairs under `bc`, or the loop model when
/// `loop_weights` is set (planar domains only, free boundary).
#[derive(Clone, Debug)]
pub struct MeasureSpec {
    pub space: Space,
    pub bc: BoundaryCondition,
    pub loop_weights: Option<LoopWeights>,
}

impl MeasureSpec {
    pub fn pairs(space: Space, bc: BoundaryCondition) -> Self {
        MeasureSpec { space, bc, loop_weights: None }
    }

    pub fn loops(d: Domain, weights: LoopWeights) -> Self {
        MeasureSpec { space: Space::Planar(d), bc: BoundaryCondition::Free, loop_weights: Some(weights) }
    }
}

/// What an event predicate of `exact_prob` sees.
#[derive(Clone, Copy, Debug)]
pub enum Outcome<'a> {
    Loops(&'a LoopConfig),
    Pair(&'a SpinPair),
}

/// Interior faces in breadth-first order from the inner boundary.
fn interior_order(d: &Domain) -> Vec<usize> {
    let mut seen: Vec<bool> = (0..d.num_faces()).map(|i| d.is_inner_boundary(i)).collect();
    let mut queue: std::collections::VecDeque<usize> = d.inner_boundary().into();
    let mut order = Vec::new();
    while let Some(a) = queue.pop_front() {
        for &b in d.neighbors(a) {
            if !seen[b] {
                seen[b] = true;
                order.push(b);
                queue.push_back(b);
            }
        }
    }
    order
}

/// All Lipschitz height functions vanishing on the inner boundary.
pub fn enumerate_heights(d: &Domain, caps: &EnumCaps) -> Result<Vec<HeightFn>, ExactError> {
    check_cap("interior face", d.interior_faces().len(), caps.free_faces)?;
    let order = interior_order(d);
    let mut values = vec![0i32; d.num_faces()];
    let mut assigned: Vec<bool> = (0..d.num_faces()).map(|i| d.is_inner_boundary(i)).collect();
    let mut out = Vec::new();
    heights_rec(d, &order, 0, &mut values, &mut assigned, &mut out);
    Ok(out.into_iter().map(|v| validate_height(d, v).expect("enumerated heights are Lipschitz")).collect())
}

fn heights_rec(
    d: &Domain,
    order: &[usize],
    pos: usize,
    values: &mut Vec<i32>,
    assigned: &mut Vec<bool>,
    out: &mut Vec<Vec<i32>>,
) {
    let Some(&f) = order.get(pos) else {
        out.push(values.clone());
        return;
    };
    let (mut lo, mut hi) = (i32::MIN, i32::MAX);
    for &g in d.neighbors(f) {
        if assigned[g] {
            lo = lo.max(values[g] - 1);
            hi = hi.min(values[g] + 1);
        }
    }
    assigned[f] = true;
    for v in lo..=hi {
        values[f] = v;
        heights_rec(d, order, pos + 1, values, assigned, out);
    }
    assigned[f] = false;
}

pub fn height_dist(d: &Domain, caps: &EnumCaps) -> Result<ExactDist<HeightFn>, ExactError> {
    ExactDist::uniform(enumerate_heights(d, caps)?)
}

/// All even subgraphs of the interior edges.
pub fn enumerate_loops(d: &Domain, caps: &EnumCaps) -> Result<Vec<LoopConfig>, ExactError> {
    let m = d.num_edges();
    check_cap("edge", m, caps.edges)?;
    // Vertices whose parity is settled once edge e is decided.
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); m];
    for v in 0..d.vertices().len() {
        if let Some(&last) = d.vertex_edges(v).iter().max() {
            closes[last].push(v);
        }
    }
    let mut degree = vec![0u8; d.vertices().len()];
    let mut mask = vec![false; m];
    let mut out = Vec::new();
    loops_rec(d, &closes, 0, &mut degree, &mut mask, &mut out);
    Ok(out.into_iter().map(LoopConfig::from_mask_unchecked).collect())
}

fn loops_rec(
    d: &Domain,
    closes: &[Vec<usize>],
    e: usize,
    degree: &mut Vec<u8>,
    mask: &mut Vec<bool>,
    out: &mut Vec<Vec<bool>>,
) {
    if e == mask.len() {
        out.push(mask.clone());
        return;
    }
    let ends = d.edge_ends(e);
    for take in [false, true] {
        if take {
            mask[e] = true;
            ends.iter().for_each(|&v| degree[v] += 1);
        }
        if closes[e].iter().all(|&v| degree[v] % 2 == 0) {
            loops_rec(d, closes, e + 1, degree, mask, out);
        }
        if take {
            mask[e] = false;
            ends.iter().for_each(|&v| degree[v] -= 1);
        }
    }
}

pub fn loop_measure(d: &Domain, weights: &LoopWeights, caps: &EnumCaps) -> Result<ExactDist<LoopConfig>, ExactError> {
    if !weights.n.is_positive() || !weights.x.is_positive() {
        return Err(ExactError::Inapplicable("loop weights must be positive".into()));
    }
    let items = enumerate_loops(d, caps)?
        .into_iter()
        .map(|omega| {
            let loops = decompose_loops(d, &omega).len();
            let w = num_traits::pow(weights.x.clone(), omega.len()) * num_traits::pow(weights.n.clone(), loops);
            (omega, w)
        })
        .collect();
    ExactDist::from_weights(items)
}

/// Red configurations indexed by bitmasks over the free faces.
struct RedCube {
    base: Vec<Spin>,
    free: Vec<usize>,
}

impl RedCube {
    fn new(constraints: &Constraints, cap: usize) -> Result<Self, ExactError> {
        let free = constraints.free_red_faces();
        check_cap("free face", free.len(), cap)?;
        let base = constraints.red.iter().map(|s| s.unwrap_or(Spin::M)).collect();
        Ok(RedCube { base, free })
    }

    fn size(&self) -> u64 {
        1u64 << self.free.len()
    }

    fn config(&self, mask: u64) -> Vec<Spin> {
        let mut red = self.base.clone();
        for (bit, &f) in self.free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                red[f] = Spin::P;
            }
        }
        red
    }

    /// `blue_completion_exponent` for every mask, in mask order.
    fn exponents(&self, space: &Space, constraints: &Constraints) -> Vec<Option<u32>> {
        (0..self.size())
            .into_par_iter()
            .map(|mask| constraints.blue_completion_exponent(space.graph(), &self.config(mask)))
            .collect()
    }
}

/// All coherent pairs allowed by `bc`, each with weight one.
pub fn enumerate_pairs(
    space: &Space,
    bc: &BoundaryCondition,
    caps: &EnumCaps,
) -> Result<ExactDist<SpinPair>, ExactError> {
    let constraints = Constraints::compile(space, bc)?;
    pairs_under(space, &constraints, caps)
}

/// Pairs satisfying explicit constraints, in the real (unswapped) frame.
pub fn pairs_under(
    space: &Space,
    constraints: &Constraints,
    caps: &EnumCaps,
) -> Result<ExactDist<SpinPair>, ExactError> {
    let cube = RedCube::new(constraints, caps.free_faces)?;
    let exps = cube.exponents(space, constraints);
    let count: u128 = exps.iter().flatten().map(|&e| 1u128 << e).sum();
    check_cap("pair", usize::try_from(count).unwrap_or(usize::MAX), caps.pairs)?;
    let graph = space.graph();
    let mut pairs = Vec::with_capacity(count as usize);
    for (mask, e) in exps.iter().enumerate() {
        if e.is_none() {
            continue;
        }
        let red = cube.config(mask as u64);
        let (mut uf, forced) = constraints.blue_clusters(graph, &red).expect("exponent exists");
        let roots: Vec<usize> = (0..graph.num_faces()).map(|i| uf.find_mut(i)).collect();
        let free_roots: Vec<usize> = {
            let mut r: Vec<usize> = roots.iter().copied().filter(|&r| forced[r].is_none()).collect();
            r.sort_unstable();
            r.dedup();
            r
        };
        for bmask in 0..1u64 << free_roots.len() {
            let blue: Vec<Spin> = roots
                .iter()
                .map(|&r| match forced[r] {
                    Some(s) => s,
                    None => {
                        let bit = free_roots.binary_search(&r).unwrap();
                        Spin::from_bool(bmask >> bit & 1 == 1)
                    }
                })
                .collect();
            let pair = SpinPair { red: red.clone(), blue };
            pairs.push(if constraints.swapped { pair.swapped() } else { pair });
        }
    }
    ExactDist::uniform(pairs)
}

/// Law of the red spins under `bc`.
pub fn red_marginal(
    space: &Space,
    bc: &BoundaryCondition,
    caps: &EnumCaps,
) -> Result<ExactDist<Vec<Spin>>, ExactError> {
    let constraints = Constraints::compile(space, bc)?;
    red_marginal_under(space, &constraints, caps)
}

pub fn red_marginal_under(
    space: &Space,
    constraints: &Constraints,
    caps: &EnumCaps,
) -> Result<ExactDist<Vec<Spin>>, ExactError> {
    if constraints.swapped {
        return Ok(pairs_under(space, constraints, caps)?.map(|p| p.red.clone()));
    }
    let cube = RedCube::new(constraints, caps.free_faces)?;
    let items = cube
        .exponents(space, constraints)
        .into_iter()
        .enumerate()
        .filter_map(|(mask, e)| e.map(|e| (cube.config(mask as u64), pow2(e))))
        .collect();
    ExactDist::from_weights(items)
}

/// Unnormalised red-marginal weight of `red` under `bc`: the number of blue
/// configurations completing it into an admissible coherent pair.
pub fn red_marginal_weight(
    space: &Space,
    bc: &BoundaryCondition,
    red: &[Spin],
    caps: &EnumCaps,
) -> Result<BigUint, ExactError> {
    let constraints = Constraints::compile(space, bc)?;
    let graph = space.graph();
    if red.len() != graph.num_faces() {
        return Err(ConfigError::WrongLength { expected: graph.num_faces(), got: red.len() }.into());
    }
    if !constraints.swapped {
        if !constraints.red_allowed(red) {
            return Err(ExactError::Inconsistent);
        }
        return Ok(constraints.blue_completion_exponent(graph, red).map_or(BigUint::zero(), |e| BigUint::one() << e));
    }
    // The constrained colour is blue here: count its admissible values.
    if !constraints.blue_allowed(red) {
        return Err(ExactError::Inconsistent);
    }
    let cube = RedCube::new(&constraints, caps.free_faces)?;
    let count = (0..cube.size())
        .into_par_iter()
        .filter(|&mask| {
            let other = cube.config(mask);
            is_coherent(graph, &other, red)
        })
        .count();
    Ok(BigUint::from(count))
}

/// Probability of `event` under `spec`.
pub fn exact_prob(
    spec: &MeasureSpec,
    caps: &EnumCaps,
    event: impl Fn(Outcome<'_>) -> bool,
) -> Result<BigRational, ExactError> {
    match &spec.loop_weights {
        Some(w) => {
            let d = spec
                .space
                .planar()
                .ok_or_else(|| ExactError::Inapplicable("loop measure needs a planar domain".into()))?;
            if spec.bc != BoundaryCondition::Free {
                return Err(ExactError::Inapplicable("loop measure takes no boundary condition".into()));
            }
            Ok(loop_measure(d, w, caps)?.prob(|omega| event(Outcome::Loops(omega))))
        }
        None => Ok(enumerate_pairs(&spec.space, &spec.bc, caps)?.prob(|p| event(Outcome::Pair(p)))),
    }
}

/// Expectation of `f` under the uniform height function.
pub fn exact_height_expectation(
    d: &Domain,
    caps: &EnumCaps,
    f: impl Fn(&HeightFn) -> BigRational,
) -> Result<BigRational, ExactError> {
    Ok(height_dist(d, caps)?.expectation(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{cluster_count, omega_of, theta_of};
    use crate::lattice::{build_ball, build_parallelogram, validate_domain, FaceCoord};

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn ball(n: i32) -> Domain {
        build_ball(n).unwrap()
    }

    #[test]
    fn height_counts() {
        let caps = EnumCaps::default();
        assert_eq!(enumerate_heights(&ball(1), &caps).unwrap().len(), 3);
        let pair = validate_domain(&[FaceCoord::new(0, 0), FaceCoord::new(1, 0)]).unwrap();
        let only = enumerate_heights(&pair, &caps).unwrap();
        assert_eq!(only.len(), 1);
        assert!(only[0].values().iter().all(|&v| v == 0));
        let big = build_ball(3).unwrap();
        assert!(matches!(enumerate_heights(&big, &caps.with_free_faces(4)), Err(ExactError::CapExceeded { .. })));
    }

    #[test]
    fn loop_counts() {
        let caps = EnumCaps::default();
        let l1 = enumerate_loops(&ball(1), &caps).unwrap();
        assert_eq!(l1.len(), 2);
        assert!(l1.iter().any(|o| o.is_empty()) && l1.iter().any(|o| o.len() == 6));
        let p11 = enumerate_loops(&build_parallelogram(1, 1).unwrap(), &caps).unwrap();
        assert_eq!(p11.len(), 1);
        assert!(p11[0].is_empty());
    }

    /// Brute force over all edge subsets, checking vertex parity directly.
    fn brute_even_subgraphs(d: &Domain) -> usize {
        let m = d.num_edges();
        (0..1u64 << m)
            .filter(|mask| {
                (0..d.vertices().len())
                    .all(|v| d.vertex_edges(v).iter().filter(|&&e| mask >> e & 1 == 1).count() % 2 == 0)
            })
            .count()
    }

    #[test]
    fn loop_enumeration_matches_brute_force() {
        let caps = EnumCaps::default();
        for d in [build_parallelogram(1, 1).unwrap(), build_parallelogram(2, 1).unwrap(), ball(1)] {
            assert!(d.num_edges() <= 20);
            assert_eq!(enumerate_loops(&d, &caps).unwrap().len(), brute_even_subgraphs(&d));
        }
    }

    #[test]
    fn pair_counts_on_ball_one() {
        let caps = EnumCaps::default();
        let space = Space::Planar(ball(1));
        let pm = enumerate_pairs(&space, &BoundaryCondition::RedPM, &caps).unwrap();
        assert_eq!(pm.len(), 6);
        let pp = enumerate_pairs(&space, &BoundaryCondition::RedPP, &caps).unwrap();
        // Center p: 2^7 blue; center m: blue constant, 2 choices.
        assert_eq!(pp.len(), 130);
        assert!(pp.items().iter().all(|(p, _)| is_coherent(space.graph(), &p.red, &p.blue)));
        let bpp = enumerate_pairs(&space, &BoundaryCondition::BluePP, &caps).unwrap();
        assert_eq!(bpp.len(), 130);
        assert!(bpp.items().iter().all(|(p, _)| space.inner_boundary().iter().all(|&i| p.blue[i] == Spin::P)));
    }

    #[test]
    fn red_marginal_weights() {
        let caps = EnumCaps::default();
        let d = ball(1);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let space = Space::Planar(d);
        let all_p = vec![Spin::P; 7];
        let mut center_m = all_p.clone();
        center_m[c] = Spin::M;
        let w = |bc: BoundaryCondition, red: &[Spin]| red_marginal_weight(&space, &bc, red, &caps).unwrap();
        assert_eq!(w(BoundaryCondition::Free, &all_p), BigUint::from(128u32));
        assert_eq!(w(BoundaryCondition::Free, &center_m), BigUint::from(2u32));
        assert_eq!(w(BoundaryCondition::RedPM, &center_m), BigUint::from(2u32));
        assert_eq!(w(BoundaryCondition::RedPM, &all_p), BigUint::from(4u32));
        assert_eq!(
            red_marginal_weight(&space, &BoundaryCondition::RedMM, &all_p, &caps),
            Err(ExactError::Inconsistent)
        );
        // Swapped frame: count the constrained red spins by brute force.
        let pairs = enumerate_pairs(&space, &BoundaryCondition::BluePP, &caps).unwrap();
        let direct = pairs.items().iter().filter(|(p, _)| p.red == center_m).count();
        assert_eq!(w(BoundaryCondition::BluePP, &center_m), BigUint::from(direct));
    }

    #[test]
    fn marginal_weight_counts_blue_completions() {
        // Independent oracle: count blue configurations by brute force.
        let caps = EnumCaps::default();
        let d = build_parallelogram(2, 1).unwrap();
        let n = d.num_faces();
        let space = Space::Planar(d);
        for rmask in 0..1u32 << n {
            let red: Vec<Spin> = (0..n).map(|i| Spin::from_bool(rmask >> i & 1 == 1)).collect();
            let direct = (0..1u32 << n)
                .filter(|bmask| {
                    let blue: Vec<Spin> = (0..n).map(|i| Spin::from_bool(bmask >> i & 1 == 1)).collect();
                    is_coherent(space.graph(), &red, &blue)
                })
                .count();
            let k = cluster_count(space.graph(), &theta_of(space.graph(), &red), None);
            assert_eq!(direct, 1 << k);
            assert_eq!(
                red_marginal_weight(&space, &BoundaryCondition::Free, &red, &caps).unwrap(),
                BigUint::from(direct)
            );
        }
    }

    #[test]
    fn probabilities_on_ball_one() {
        let caps = EnumCaps::default();
        let d = ball(1);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let spec = MeasureSpec::pairs(Space::Planar(d.clone()), BoundaryCondition::RedPM);
        let hexagon = exact_prob(&spec, &caps, |o| match o {
            Outcome::Pair(p) => {
                let r = omega_of(&d, &p.red).unwrap();
                let b = omega_of(&d, &p.blue).unwrap();
                !r.union(&b).is_empty()
            }
            Outcome::Loops(_) => unreachable!(),
        })
        .unwrap();
        assert_eq!(hexagon, rat(2, 3));
        let var =
            exact_height_expectation(&d, &caps, |h| BigRational::from_integer((h.get(c) * h.get(c)).into())).unwrap();
        assert_eq!(var, rat(2, 3));
        let half = exact_prob(&MeasureSpec::loops(d.clone(), LoopWeights::new(1, 1)), &caps, |o| match o {
            Outcome::Loops(w) => !w.is_empty(),
            Outcome::Pair(_) => unreachable!(),
        })
        .unwrap();
        assert_eq!(half, rat(1, 2));
        let two = exact_prob(&MeasureSpec::loops(d, LoopWeights::default()), &caps, |o| match o {
            Outcome::Loops(w) => !w.is_empty(),
            Outcome::Pair(_) => unreachable!(),
        })
        .unwrap();
        assert_eq!(two, rat(2, 3));
    }

    #[test]
    fn empty_support_and_bad_weights() {
        let caps = EnumCaps::default();
        assert_eq!(ExactDist::<u8>::uniform(Vec::new()).unwrap_err(), ExactError::EmptySupport);
        let d = ball(1);
        assert!(matches!(loop_measure(&d, &LoopWeights::new(0, 1), &caps), Err(ExactError::Inapplicable(_))));
    }
}
