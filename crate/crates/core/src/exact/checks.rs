//! Exhaustive checks of structural properties of the coherent-pair measures
//! on small domains. Each check returns a report carrying the number of
//! cases examined and, on failure, a counterexample that can be replayed.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use petgraph::graph::{Graph, NodeIndex};
use petgraph::visit::EdgeRef;
use petgraph::Direction as EdgeDir;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{enumerate_pairs, pow2, red_marginal, red_marginal_under, EnumCaps, ExactDist, ExactError, RedCube};
use crate::config::{
    cluster_count, decompose_loops, four_arc_spins, is_coherent, theta_of, BoundaryCondition, ConfigError, Constraints,
    LoopConfig, Space, Spin, SpinPair,
};
use crate::lattice::{
    build_cylinder, build_parallelogram, build_rectangle, validate_domain, Annulus, Domain, FaceCoord, FaceGraph,
    HexVertex, Side,
};
use crate::observe::{CircuitDetector, CrossingDetector, CrossingMode, Direction, Endpoints};
use crate::transform::height_to_oriented_loops;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub domain: String,
    pub cases: u64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
    /// Exact values recorded by the check, as strings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Value>,
}

impl CheckReport {
    fn new(check: &str, domain: &str) -> Self {
        CheckReport {
            check: check.into(),
            domain: domain.into(),
            cases: 0,
            pass: true,
            counterexample: None,
            values: None,
        }
    }

    fn fail(&mut self, cx: Value) {
        if self.pass {
            self.pass = false;
            self.counterexample = Some(cx);
        }
    }

    /// Combines two reports of the same check; the first counterexample wins.
    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.cases += other.cases;
        if !other.pass {
            if let Some(cx) = other.counterexample {
                self.fail(cx);
            }
        }
        self
    }
}

pub fn spins_to_json(graph: &FaceGraph, spins: &[Spin]) -> Value {
    let map: serde_json::Map<String, Value> =
        graph.faces().iter().zip(spins).map(|(f, s)| (f.key(), Value::from(s.symbol()))).collect();
    Value::Object(map)
}

pub fn spins_from_json(graph: &FaceGraph, value: &Value) -> Result<Vec<Spin>, ExactError> {
    let map = value.as_object().ok_or_else(|| ConfigError::Malformed("expected an object of spins".into()))?;
    if map.len() != graph.num_faces() {
        return Err(ConfigError::WrongLength { expected: graph.num_faces(), got: map.len() }.into());
    }
    let mut out = vec![Spin::M; graph.num_faces()];
    for (k, v) in map {
        let f = FaceCoord::parse_key(k).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let i = graph.index_of(f).ok_or(ConfigError::UnknownFace(f))?;
        out[i] = serde_json::from_value(v.clone()).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    }
    Ok(out)
}

fn rational_json(r: &BigRational) -> Value {
    Value::from(r.to_string())
}

// ---------------------------------------------------------------- FKG

/// Lattice condition `k(pp) + k(mm) >= k(pm) + k(mp)` for every pair of free
/// faces and every configuration of the others, where `k` is the blue
/// completion exponent under `constraints` (minus infinity when there is no
/// completion).
pub fn check_fkg_lattice(
    space: &Space,
    constraints: &Constraints,
    name: &str,
    caps: &EnumCaps,
) -> Result<CheckReport, ExactError> {
    if constraints.swapped {
        return Err(ExactError::Inapplicable("lattice condition is checked on the unswapped frame".into()));
    }
    let cube = RedCube::new(constraints, caps.free_faces)?;
    let exps = cube.exponents(space, constraints);
    let n = cube.free.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results: Vec<(u64, Option<(usize, usize, u64)>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (bi, bj) = (1u64 << i, 1u64 << j);
            let mut cases = 0;
            for mask in 0..cube.size() {
                if mask & (bi | bj) != 0 {
                    continue;
                }
                cases += 1;
                let e = |m: u64| exps[m as usize];
                if !fkg_holds(e(mask | bi | bj), e(mask), e(mask | bi), e(mask | bj)) {
                    return (cases, Some((i, j, mask)));
                }
            }
            (cases, None)
        })
        .collect();
    let mut report = CheckReport::new("fkg", name);
    for (cases, bad) in results {
        report.cases += cases;
        if let Some((i, j, mask)) = bad {
            let red = cube.config(mask);
            let e = |m: u64| exps[m as usize];
            report.fail(json!({
                "u": space.graph().face(cube.free[i]).key(),
                "v": space.graph().face(cube.free[j]).key(),
                "red": spins_to_json(space.graph(), &red),
                "exponents": [e(mask | 1 << i | 1 << j), e(mask), e(mask | 1 << i), e(mask | 1 << j)],
            }));
        }
    }
    Ok(report)
}

fn fkg_holds(pp: Option<u32>, mm: Option<u32>, pm: Option<u32>, mp: Option<u32>) -> bool {
    match (pm, mp) {
        (Some(pm), Some(mp)) => match (pp, mm) {
            (Some(pp), Some(mm)) => pp + mm >= pm + mp,
            _ => false,
        },
        _ => true,
    }
}

/// Recomputes an FKG counterexample from its face keys and spins. Returns
/// whether the violation is confirmed.
pub fn replay_fkg(space: &Space, constraints: &Constraints, cx: &Value) -> Result<bool, ExactError> {
    let graph = space.graph();
    let face = |key: &str| -> Result<usize, ExactError> {
        let f = FaceCoord::parse_key(key).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        graph.index_of(f).ok_or(ExactError::Config(ConfigError::UnknownFace(f)))
    };
    let u = face(cx["u"].as_str().unwrap_or_default())?;
    let v = face(cx["v"].as_str().unwrap_or_default())?;
    let base = spins_from_json(graph, &cx["red"])?;
    let k = |su: Spin, sv: Spin| {
        let mut red = base.clone();
        red[u] = su;
        red[v] = sv;
        if constraints.red_allowed(&red) {
            constraints.blue_completion_exponent(graph, &red)
        } else {
            None
        }
    };
    Ok(!fkg_holds(k(Spin::P, Spin::P), k(Spin::M, Spin::M), k(Spin::P, Spin::M), k(Spin::M, Spin::P)))
}

/// Adds the constraint that blue equals `spin` on `faces`.
pub fn with_blue_fixed(mut constraints: Constraints, faces: &[usize], spin: Spin) -> Constraints {
    for &i in faces {
        constraints.blue[i] = Some(spin);
    }
    constraints
}

// ---------------------------------------------------------------- spatial Markov

fn embed(small: &Domain, big: &Domain) -> Result<Vec<usize>, ExactError> {
    small
        .faces()
        .iter()
        .map(|&f| {
            big.index_of(f).ok_or_else(|| ExactError::Hypothesis(format!("face {f} is not in the larger domain")))
        })
        .collect()
}

/// Conditional law inside `small` of the uniform coherent pair on `big`
/// given `tau` outside `Int(small)` (red) and outside `small` (blue),
/// compared with the pp measure (red `tau` plus on both boundary layers) or
/// the pm measure with blue fixed to the outside value (red `tau` plus
/// inside, minus outside).
pub fn check_spatial_markov(
    small: &Domain,
    big: &Domain,
    tau: &SpinPair,
    name: &str,
    caps: &EnumCaps,
) -> Result<CheckReport, ExactError> {
    let map = embed(small, big)?;
    let bg = big.graph();
    if !is_coherent(bg, &tau.red, &tau.blue) {
        return Err(ExactError::Hypothesis("tau is not coherent".into()));
    }
    let outer: Vec<usize> = small
        .outer_boundary()
        .iter()
        .map(|&f| {
            big.index_of(f).ok_or_else(|| ExactError::Hypothesis(format!("outer face {f} is not in the larger domain")))
        })
        .collect::<Result<_, _>>()?;
    if small.inner_boundary().iter().any(|&i| tau.red[map[i]] != Spin::P) {
        return Err(ExactError::Hypothesis("red tau must be plus on the inner boundary".into()));
    }
    let case_two = if outer.iter().all(|&i| tau.red[i] == Spin::P) {
        false
    } else if outer.iter().all(|&i| tau.red[i] == Spin::M) {
        true
    } else {
        return Err(ExactError::Hypothesis("red tau must be constant on the outer boundary".into()));
    };

    let interior: Vec<usize> = small.interior_faces().iter().map(|&i| map[i]).collect();
    let bits = interior.len() + map.len();
    super::check_cap("free spin", bits, caps.free_faces + 12)?;
    let mut conditional = BTreeSet::new();
    let mut red = tau.red.clone();
    let mut blue = tau.blue.clone();
    for rmask in 0..1u64 << interior.len() {
        for (b, &i) in interior.iter().enumerate() {
            red[i] = Spin::from_bool(rmask >> b & 1 == 1);
        }
        for bmask in 0..1u64 << map.len() {
            for (b, &i) in map.iter().enumerate() {
                blue[i] = Spin::from_bool(bmask >> b & 1 == 1);
            }
            if is_coherent(bg, &red, &blue) {
                conditional.insert(SpinPair {
                    red: map.iter().map(|&i| red[i]).collect(),
                    blue: map.iter().map(|&i| blue[i]).collect(),
                });
            }
        }
    }
    if conditional.is_empty() {
        return Err(ExactError::Hypothesis("tau admits no completion".into()));
    }

    let space = Space::Planar(small.clone());
    let reference: BTreeSet<SpinPair> = if case_two {
        let s = tau.blue[outer[0]];
        let boundary = small.inner_boundary();
        enumerate_pairs(&space, &BoundaryCondition::RedPM, caps)?
            .items()
            .iter()
            .map(|(p, _)| p.clone())
            .filter(|p| boundary.iter().all(|&i| p.blue[i] == s))
            .collect()
    } else {
        enumerate_pairs(&space, &BoundaryCondition::RedPP, caps)?.items().iter().map(|(p, _)| p.clone()).collect()
    };

    // Both sides are uniform on their supports, so equal laws means equal sets.
    let mut report = CheckReport::new(if case_two { "markov-pm" } else { "markov-pp" }, name);
    report.cases = conditional.union(&reference).count() as u64;
    if let Some(p) = conditional.symmetric_difference(&reference).next() {
        report.fail(json!({
            "pair": p.to_json(small.graph()),
            "in_conditional": conditional.contains(p),
            "in_reference": reference.contains(p),
        }));
    }
    Ok(report)
}

// ---------------------------------------------------------------- four arcs

/// `small` inside `big` with four marked boundary vertices of `small` and red
/// spins on `big` (values on `Int(small)` are ignored).
#[derive(Clone, Debug)]
pub struct FourArcInstance {
    pub name: String,
    pub small: Domain,
    pub big: Domain,
    pub arcs: [HexVertex; 4],
    pub tau_red: Vec<Spin>,
}

/// The two red laws on `small` compared by the four-arc bounds.
#[derive(Clone, Debug)]
pub struct FourArcComparison {
    /// Free measure on `big` conditioned on `tau_red` outside `Int(small)`.
    pub conditional: ExactDist<Vec<Spin>>,
    /// Four-arc measure on `small`.
    pub reference: ExactDist<Vec<Spin>>,
    /// `conditional / reference` per configuration; `None` off the common support.
    pub ratios: Vec<(Vec<Spin>, Option<BigRational>)>,
}

impl FourArcComparison {
    pub fn min_ratio(&self) -> Option<BigRational> {
        self.ratios.iter().map(|(_, r)| r.clone()).collect::<Option<Vec<_>>>()?.into_iter().min()
    }

    pub fn max_ratio(&self) -> Option<BigRational> {
        self.ratios.iter().map(|(_, r)| r.clone()).collect::<Option<Vec<_>>>()?.into_iter().max()
    }
}

pub fn four_arc_comparison(inst: &FourArcInstance, caps: &EnumCaps) -> Result<FourArcComparison, ExactError> {
    let map = embed(&inst.small, &inst.big)?;
    let imposed = four_arc_spins(&inst.small, &inst.arcs)?;
    for i in inst.small.inner_boundary() {
        if imposed[i] != Some(inst.tau_red[map[i]]) {
            return Err(ExactError::Hypothesis(format!("tau does not impose the arcs at {}", inst.small.face(i))));
        }
    }
    let interior: Vec<usize> = inst.small.interior_faces().to_vec();
    super::check_cap("free face", interior.len(), caps.free_faces)?;
    let bg = inst.big.graph();
    let items: Vec<(Vec<Spin>, BigRational)> = (0..1u64 << interior.len())
        .into_par_iter()
        .map(|mask| {
            let mut red = inst.tau_red.clone();
            for (b, &i) in interior.iter().enumerate() {
                red[map[i]] = Spin::from_bool(mask >> b & 1 == 1);
            }
            let k = cluster_count(bg, &theta_of(bg, &red), None) as u32;
            (map.iter().map(|&i| red[i]).collect(), pow2(k))
        })
        .collect();
    let conditional = ExactDist::from_weights(items)?;
    let reference = red_marginal(&Space::Planar(inst.small.clone()), &BoundaryCondition::FourArc(inst.arcs), caps)?;
    let cond_law = conditional.law();
    let ref_law = reference.law();
    let keys: BTreeSet<&Vec<Spin>> = cond_law.keys().chain(ref_law.keys()).collect();
    let ratios = keys
        .into_iter()
        .map(|c| {
            let r = match (cond_law.get(c), ref_law.get(c)) {
                (Some(a), Some(b)) => Some(a / b),
                _ => None,
            };
            (c.clone(), r)
        })
        .collect();
    Ok(FourArcComparison { conditional, reference, ratios })
}

/// Passes when the conditional law equals the four-arc law. Expected to fail
/// on instances where the outside connects the arcs.
pub fn check_four_arc_markov(inst: &FourArcInstance, caps: &EnumCaps) -> Result<CheckReport, ExactError> {
    let cmp = four_arc_comparison(inst, caps)?;
    let mut report = CheckReport::new("four-arc-markov", &inst.name);
    report.cases = cmp.ratios.len() as u64;
    if let Some((c, r)) = cmp.ratios.iter().find(|(_, r)| r.as_ref() != Some(&BigRational::one())) {
        report.fail(json!({
            "red": spins_to_json(inst.small.graph(), c),
            "ratio": r.as_ref().map(rational_json),
        }));
    }
    Ok(report)
}

/// Passes when every ratio lies in `[1/8, 8]`.
pub fn check_four_arc_bounds(inst: &FourArcInstance, caps: &EnumCaps) -> Result<CheckReport, ExactError> {
    let cmp = four_arc_comparison(inst, caps)?;
    let mut report = CheckReport::new("four-arc-bounds", &inst.name);
    report.cases = cmp.ratios.len() as u64;
    let lo = BigRational::new(1.into(), 8.into());
    let hi = BigRational::from_integer(8.into());
    for (c, r) in &cmp.ratios {
        let ok = r.as_ref().is_some_and(|r| *r >= lo && *r <= hi);
        if !ok {
            report.fail(json!({
                "red": spins_to_json(inst.small.graph(), c),
                "ratio": r.as_ref().map(rational_json),
            }));
        }
    }
    report.values = Some(json!({
        "min_ratio": cmp.min_ratio().as_ref().map(rational_json),
        "max_ratio": cmp.max_ratio().as_ref().map(rational_json),
    }));
    Ok(report)
}

// ---------------------------------------------------------------- domination

/// Outcome of a Strassen feasibility test.
#[derive(Clone, Debug)]
pub struct Domination {
    pub holds: bool,
    /// On failure: generators of an increasing event more likely under the
    /// lower law than under the upper one.
    pub witness: Option<Vec<Vec<Spin>>>,
}

fn scaled_weights(dist: &ExactDist<Vec<Spin>>) -> Vec<BigInt> {
    let denom = dist.items().iter().fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
    let nums: Vec<BigInt> =
        dist.items().iter().map(|(_, w)| (w * BigRational::from_integer(denom.clone())).to_integer()).collect();
    let g = nums.iter().fold(BigInt::zero(), |acc, n| acc.gcd(n));
    nums.into_iter().map(|n| n / &g).collect()
}

fn to_mask(spins: &[Spin]) -> Vec<u64> {
    let mut out = vec![0u64; spins.len().div_ceil(64)];
    for (i, s) in spins.iter().enumerate() {
        if s.is_p() {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

fn below(x: &[u64], y: &[u64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a & !b == 0)
}

/// Whether `low` is stochastically dominated by `high` for the pointwise
/// order (p above m), decided by max-flow on the bipartite comparability
/// graph of the two supports.
pub fn dominates(
    low: &ExactDist<Vec<Spin>>,
    high: &ExactDist<Vec<Spin>>,
    caps: &EnumCaps,
) -> Result<Domination, ExactError> {
    for d in [low, high] {
        if d.len() > caps.flow_support {
            return Err(ExactError::FlowCapExceeded { size: d.len(), cap: caps.flow_support });
        }
    }
    let a = scaled_weights(low);
    let b = scaled_weights(high);
    let s1: BigInt = a.iter().sum();
    let s2: BigInt = b.iter().sum();
    let total = (&s1 * &s2)
        .to_u128()
        .filter(|t| *t < u128::MAX / 4)
        .ok_or_else(|| ExactError::Inapplicable("weights too large for the flow network".into()))?;
    let cap = |x: BigInt| x.to_u128().expect("bounded by the total");

    let lows: Vec<Vec<u64>> = low.items().iter().map(|(c, _)| to_mask(c)).collect();
    let highs: Vec<Vec<u64>> = high.items().iter().map(|(c, _)| to_mask(c)).collect();
    let mut g: Graph<(), u128> = Graph::new();
    let src = g.add_node(());
    let sink = g.add_node(());
    let xs: Vec<NodeIndex> = lows.iter().map(|_| g.add_node(())).collect();
    let ys: Vec<NodeIndex> = highs.iter().map(|_| g.add_node(())).collect();
    for (i, w) in a.iter().enumerate() {
        g.add_edge(src, xs[i], cap(w * &s2));
    }
    for (j, w) in b.iter().enumerate() {
        g.add_edge(ys[j], sink, cap(w * &s1));
    }
    let comparable: Vec<Vec<usize>> =
        lows.par_iter().map(|x| (0..highs.len()).filter(|&j| below(x, &highs[j])).collect()).collect();
    for (i, js) in comparable.iter().enumerate() {
        for &j in js {
            g.add_edge(xs[i], ys[j], total);
        }
    }
    let (flow, flows) = petgraph::algo::dinics(&g, src, sink);
    if flow == total {
        return Ok(Domination { holds: true, witness: None });
    }
    // Source side of a minimum cut: its low configurations generate the event.
    let mut reach = vec![false; g.node_count()];
    reach[src.index()] = true;
    let mut stack = vec![src];
    while let Some(v) = stack.pop() {
        for e in g.edges_directed(v, EdgeDir::Outgoing) {
            if flows[e.id().index()] < *e.weight() && !reach[e.target().index()] {
                reach[e.target().index()] = true;
                stack.push(e.target());
            }
        }
        for e in g.edges_directed(v, EdgeDir::Incoming) {
            if flows[e.id().index()] > 0 && !reach[e.source().index()] {
                reach[e.source().index()] = true;
                stack.push(e.source());
            }
        }
    }
    let witness =
        xs.iter().enumerate().filter(|(_, x)| reach[x.index()]).map(|(i, _)| low.items()[i].0.clone()).collect();
    Ok(Domination { holds: false, witness: Some(witness) })
}

/// Probability of the increasing event generated by `generators`.
pub fn upset_prob(dist: &ExactDist<Vec<Spin>>, generators: &[Vec<Spin>]) -> BigRational {
    let gens: Vec<Vec<u64>> = generators.iter().map(|g| to_mask(g)).collect();
    dist.prob(|c| {
        let m = to_mask(c);
        gens.iter().any(|g| below(g, &m))
    })
}

/// `nu^{low} <=st nu^{high}` for the red marginals of two boundary conditions.
pub fn check_domination(
    space: &Space,
    low: &BoundaryCondition,
    high: &BoundaryCondition,
    name: &str,
    caps: &EnumCaps,
) -> Result<CheckReport, ExactError> {
    let lo = red_marginal(space, low, caps)?;
    let hi = red_marginal(space, high, caps)?;
    let mut report = check_domination_of(&lo, &hi, space.graph(), name, caps)?;
    report.check = format!("domination {} <= {}", low.name(), high.name());
    Ok(report)
}

pub fn check_domination_of(
    lo: &ExactDist<Vec<Spin>>,
    hi: &ExactDist<Vec<Spin>>,
    graph: &FaceGraph,
    name: &str,
    caps: &EnumCaps,
) -> Result<CheckReport, ExactError> {
    let result = dominates(lo, hi, caps)?;
    let mut report = CheckReport::new("domination", name);
    report.cases = (lo.len() * hi.len()) as u64;
    if let Some(w) = result.witness {
        report.fail(json!({
            "upset_generators": w.iter().map(|c| spins_to_json(graph, c)).collect::<Vec<_>>(),
            "low_prob": rational_json(&upset_prob(lo, &w)),
            "high_prob": rational_json(&upset_prob(hi, &w)),
        }));
    }
    Ok(report)
}

// ---------------------------------------------------------------- monochrome duality

/// Every coherent pair on the labelled region has a horizontal double
/// crossing of constant red spin or a vertical double crossing of constant
/// blue spin. With corners excluded as endpoints this already fails on
/// `Par_{1,1}`; counting corner faces for both sides it holds.
pub fn check_monochrome(
    region: &Domain,
    endpoints: Endpoints,
    name: &str,
    caps: &EnumCaps,
) -> Result<CheckReport, ExactError> {
    let horizontal = CrossingDetector::with_endpoints(region, Direction::Horizontal, CrossingMode::Double, endpoints)?;
    let vertical = CrossingDetector::with_endpoints(region, Direction::Vertical, CrossingMode::Double, endpoints)?;
    let red_ok = |red: &[Spin]| horizontal.detect(region, red, Spin::P) || horizontal.detect(region, red, Spin::M);
    let blue_ok = |blue: &[Spin]| vertical.detect(region, blue, Spin::P) || vertical.detect(region, blue, Spin::M);
    monochrome_scan(&Space::Planar(region.clone()), "monochrome", name, caps, red_ok, blue_ok)
}

/// Annulus variant: without a constant-red double circuit around the hole,
/// some blue double path joins the hole to the outer boundary.
pub fn check_monochrome_annulus(annulus: &Annulus, name: &str, caps: &EnumCaps) -> Result<CheckReport, ExactError> {
    let circuits = CircuitDetector::new(annulus);
    let red_ok = |red: &[Spin]| circuits.detect(annulus, red, Spin::P) || circuits.detect(annulus, red, Spin::M);
    let blue_ok = |blue: &[Spin]| {
        crate::observe::double_path_to_outside(annulus, blue, Spin::P)
            || crate::observe::double_path_to_outside(annulus, blue, Spin::M)
    };
    monochrome_scan(&Space::Planar(annulus.outer().clone()), "monochrome-annulus", name, caps, red_ok, blue_ok)
}

fn monochrome_scan(
    space: &Space,
    check: &str,
    name: &str,
    caps: &EnumCaps,
    red_ok: impl Fn(&[Spin]) -> bool + Sync,
    blue_ok: impl Fn(&[Spin]) -> bool + Sync,
) -> Result<CheckReport, ExactError> {
    let constraints = Constraints::free(space.graph().num_faces());
    let cube = RedCube::new(&constraints, caps.free_faces)?;
    let graph = space.graph();
    let chunk = 1u64 << cube.free.len().min(10);
    let reports: Vec<CheckReport> = (0..cube.size() / chunk)
        .into_par_iter()
        .map(|c| {
            let mut report = CheckReport::new(check, name);
            for mask in c * chunk..(c + 1) * chunk {
                let red = cube.config(mask);
                let mut uf = crate::config::theta_clusters(graph, &theta_of(graph, &red));
                let roots: Vec<usize> = (0..graph.num_faces()).map(|i| uf.find_mut(i)).collect();
                let mut distinct = roots.clone();
                distinct.sort_unstable();
                distinct.dedup();
                if red_ok(&red) {
                    report.cases += 1 << distinct.len();
                    continue;
                }
                for bmask in 0..1u64 << distinct.len() {
                    report.cases += 1;
                    let blue: Vec<Spin> = roots
                        .iter()
                        .map(|r| Spin::from_bool(bmask >> distinct.binary_search(r).unwrap() & 1 == 1))
                        .collect();
                    if !blue_ok(&blue) {
                        report.fail(json!({ "pair": SpinPair { red: red.clone(), blue }.to_json(graph) }));
                        return report;
                    }
                }
            }
            report
        })
        .collect();
    Ok(reports.into_iter().reduce(CheckReport::merge).unwrap_or_else(|| CheckReport::new(check, name)))
}

// ---------------------------------------------------------------- crossing bounds

/// Exact values behind the crossing lower bounds on `Par_{n,n}`.
#[derive(Clone, Debug)]
pub struct CrossingValues {
    pub n: i32,
    /// Number of boundary configurations `zeta` swept.
    pub zetas: u64,
    /// Minimum over `zeta` of the conditional simple-p vertical crossing probability.
    pub simple_min: BigRational,
    /// The same probability for `zeta` minus off the top and bottom sides.
    pub simple_all_minus: BigRational,
    /// `mu^{pm}_D[double-p horizontal crossing]` for `D = Par_{n,n}` and for
    /// `Par_{n,n}` with its outer layer.
    pub double_par: BigRational,
    pub double_padded: BigRational,
}

fn padded(par: &Domain) -> Result<Domain, ExactError> {
    let mut faces: Vec<FaceCoord> = par.faces().to_vec();
    faces.extend(par.outer_boundary().iter().copied());
    validate_domain(&faces).map_err(|e| ExactError::Inapplicable(e.to_string()))
}

pub fn crossing_values(n: i32, caps: &EnumCaps) -> Result<CrossingValues, ExactError> {
    let par = build_parallelogram(n, n).map_err(|e| ExactError::Inapplicable(e.to_string()))?;
    let big = padded(&par)?;
    let map = embed(&par, &big)?;
    let vertical = CrossingDetector::new(&par, Direction::Vertical, CrossingMode::Simple)?;
    let horizontal = CrossingDetector::new(&par, Direction::Horizontal, CrossingMode::Double)?;

    let mut plus_faces: BTreeSet<FaceCoord> = BTreeSet::new();
    for side in [Side::Top, Side::Bottom] {
        plus_faces.extend(par.side_inner_faces(side).into_iter().map(|i| par.face(i)));
        plus_faces.extend(par.side_outer_faces(side));
    }
    let interior: Vec<usize> = par.interior_faces().iter().map(|&i| map[i]).collect();
    let is_interior: BTreeSet<usize> = interior.iter().copied().collect();
    let zeta_free: Vec<usize> =
        (0..big.num_faces()).filter(|i| !is_interior.contains(i) && !plus_faces.contains(&big.face(*i))).collect();
    super::check_cap("free face", zeta_free.len() + interior.len(), caps.free_faces + 8)?;
    let bg = big.graph();
    let probs: Vec<BigRational> = (0..1u64 << zeta_free.len())
        .into_par_iter()
        .map(|zmask| {
            let mut red = vec![Spin::P; big.num_faces()];
            for (b, &i) in zeta_free.iter().enumerate() {
                red[i] = Spin::from_bool(zmask >> b & 1 == 1);
            }
            let (mut hit, mut total) = (BigRational::zero(), BigRational::zero());
            for smask in 0..1u64 << interior.len() {
                for (b, &i) in interior.iter().enumerate() {
                    red[i] = Spin::from_bool(smask >> b & 1 == 1);
                }
                let w = pow2(cluster_count(bg, &theta_of(bg, &red), None) as u32);
                let inside: Vec<Spin> = map.iter().map(|&i| red[i]).collect();
                if vertical.detect(&par, &inside, Spin::P) {
                    hit += &w;
                }
                total += w;
            }
            hit / total
        })
        .collect();
    let simple_min = probs.iter().min().cloned().expect("at least one zeta");

    let double = |d: &Domain| -> Result<BigRational, ExactError> {
        let m = embed(&par, d)?;
        let law = red_marginal(&Space::Planar(d.clone()), &BoundaryCondition::RedPM, caps)?;
        Ok(law.prob(|red| {
            let inside: Vec<Spin> = m.iter().map(|&i| red[i]).collect();
            horizontal.detect(&par, &inside, Spin::P)
        }))
    };
    Ok(CrossingValues {
        n,
        zetas: probs.len() as u64,
        simple_min,
        simple_all_minus: probs[0].clone(),
        double_par: double(&par)?,
        double_padded: double(&big)?,
    })
}

/// Conditional simple crossing at least 1/3 for every admissible `zeta`, and
/// double crossing under pm at least 1/4 on both symmetric domains.
pub fn check_crossing_bounds(n: i32, caps: &EnumCaps) -> Result<CheckReport, ExactError> {
    let v = crossing_values(n, caps)?;
    let mut report = CheckReport::new("crossing-bounds", &format!("par {n}x{n}"));
    report.cases = v.zetas + 2;
    let third = BigRational::new(1.into(), 3.into());
    let quarter = BigRational::new(1.into(), 4.into());
    if v.simple_min < third {
        report.fail(json!({ "simple_min": rational_json(&v.simple_min) }));
    }
    for (which, p) in [("par", &v.double_par), ("padded", &v.double_padded)] {
        if *p < quarter {
            report.fail(json!({ "double": which, "value": rational_json(p) }));
        }
    }
    report.values = Some(json!({
        "simple_min": rational_json(&v.simple_min),
        "simple_all_minus": rational_json(&v.simple_all_minus),
        "double_par": rational_json(&v.double_par),
        "double_padded": rational_json(&v.double_padded),
    }));
    Ok(report)
}

// ---------------------------------------------------------------- heights and loops

/// The number of height functions equals `sum_omega 2^{loops(omega)}`, and
/// forgetting the orientation of level lines maps the uniform height measure
/// onto the loop measure: each loop configuration has exactly
/// `2^{loops(omega)}` preimages.
pub fn check_bijection(d: &Domain, name: &str, caps: &EnumCaps) -> Result<CheckReport, ExactError> {
    let heights = super::enumerate_heights(d, caps)?;
    let loops = super::enumerate_loops(d, caps)?;
    let weight = |w: &LoopConfig| BigInt::one() << decompose_loops(d, w).len();
    let weighted: BigInt = loops.iter().map(weight).sum();
    let mut preimages: BTreeMap<LoopConfig, u64> = BTreeMap::new();
    for phi in &heights {
        *preimages.entry(height_to_oriented_loops(d, phi).loops).or_default() += 1;
    }
    let mut report = CheckReport::new("bijection", name);
    report.cases = (heights.len() + loops.len()) as u64;
    if BigInt::from(heights.len()) != weighted {
        report.fail(json!({ "heights": heights.len(), "weighted_loops": weighted.to_string() }));
    }
    for w in &loops {
        let got = preimages.remove(w).unwrap_or(0);
        if BigInt::from(got) != weight(w) {
            report.fail(json!({ "loops": w.to_json(d), "preimages": got, "expected": weight(w).to_string() }));
        }
    }
    if let Some((w, _)) = preimages.into_iter().next() {
        report.fail(json!({ "unlisted_loops": w.to_json(d) }));
    }
    // Group the right-hand side by number of loops: term k is n_k 2^k.
    let mut by_count: BTreeMap<usize, u64> = BTreeMap::new();
    for w in &loops {
        *by_count.entry(decompose_loops(d, w).len()).or_default() += 1;
    }
    let terms: Vec<String> = by_count.iter().map(|(&k, &n)| (BigInt::from(n) << k).to_string()).collect();
    report.values = Some(json!({
        "heights": heights.len(),
        "weighted_loops": weighted.to_string(),
        "loop_configs": loops.len(),
        "identity": format!("{} = {}", heights.len(), terms.join(" + ")),
    }));
    Ok(report)
}

// ---------------------------------------------------------------- cylinder

/// The Dobrushin measure on `Rect_{m,n}` equals the Dobrushin measure on the
/// cylinder conditioned on red plus along the seam (the faces next to the
/// identified vertical sides, away from the top and bottom rows).
pub fn check_cylinder_identity(m: i32, n: i32, caps: &EnumCaps) -> Result<CheckReport, ExactError> {
    let rect = build_rectangle(m, n).map_err(|e| ExactError::Inapplicable(e.to_string()))?;
    let cyl = build_cylinder(m, n).map_err(|e| ExactError::Inapplicable(e.to_string()))?;
    let top = cyl.top_row();
    let to_rect: Vec<usize> = cyl
        .graph()
        .faces()
        .iter()
        .map(|&f| rect.index_of(f).ok_or_else(|| ExactError::Hypothesis(format!("cylinder face {f} not in rectangle"))))
        .collect::<Result<_, _>>()?;
    let seam: Vec<usize> = [Side::Left, Side::Right]
        .into_iter()
        .flat_map(|s| rect.side_inner_faces(s))
        .filter(|&i| rect.face(i).l != 0 && rect.face(i).l != top)
        .collect();
    let rect_law: BTreeSet<SpinPair> =
        enumerate_pairs(&Space::Planar(rect.clone()), &BoundaryCondition::DobrushinRect, caps)?
            .items()
            .iter()
            .map(|(p, _)| p.clone())
            .collect();
    let mut cyl_law = BTreeSet::new();
    for (p, _) in enumerate_pairs(&Space::Cylinder(cyl.clone()), &BoundaryCondition::DobrushinCyl, caps)?.items() {
        let mut red = vec![Spin::M; rect.num_faces()];
        let mut blue = vec![Spin::M; rect.num_faces()];
        for (i, &j) in to_rect.iter().enumerate() {
            red[j] = p.red[i];
            blue[j] = p.blue[i];
        }
        if seam.iter().all(|&i| red[i] == Spin::P) {
            cyl_law.insert(SpinPair { red, blue });
        }
    }
    let mut report = CheckReport::new("cylinder-identity", &format!("rect {m}x{n}"));
    report.cases = rect_law.union(&cyl_law).count() as u64;
    if let Some(p) = rect_law.symmetric_difference(&cyl_law).next() {
        report.fail(json!({
            "pair": p.to_json(rect.graph()),
            "in_rectangle": rect_law.contains(p),
            "in_cylinder": cyl_law.contains(p),
        }));
    }
    Ok(report)
}

/// Red-marginal consistency: the number of coherent blue completions of
/// every red configuration is `2^k(theta)`, counted by brute force.
pub fn check_marginal_consistency(d: &Domain, name: &str, caps: &EnumCaps) -> Result<CheckReport, ExactError> {
    let n = d.num_faces();
    super::check_cap("face", 2 * n, caps.free_faces + 8)?;
    let graph = d.graph();
    let bad: Vec<(u64, u64)> = (0..1u64 << n)
        .into_par_iter()
        .filter_map(|rmask| {
            let red: Vec<Spin> = (0..n).map(|i| Spin::from_bool(rmask >> i & 1 == 1)).collect();
            let count = (0..1u64 << n)
                .filter(|bmask| {
                    let blue: Vec<Spin> = (0..n).map(|i| Spin::from_bool(bmask >> i & 1 == 1)).collect();
                    is_coherent(graph, &red, &blue)
                })
                .count() as u64;
            let k = cluster_count(graph, &theta_of(graph, &red), None);
            (count != 1 << k).then_some((rmask, count))
        })
        .collect();
    let mut report = CheckReport::new("marginal-consistency", name);
    report.cases = 1 << n;
    if let Some(&(rmask, count)) = bad.first() {
        let red: Vec<Spin> = (0..n).map(|i| Spin::from_bool(rmask >> i & 1 == 1)).collect();
        report.fail(json!({ "red": spins_to_json(graph, &red), "completions": count }));
    }
    Ok(report)
}

/// Red law of explicit constraints, keyed for comparisons across domains.
pub fn red_law_by_face(
    space: &Space,
    constraints: &Constraints,
    caps: &EnumCaps,
) -> Result<BTreeMap<Vec<(FaceCoord, Spin)>, BigRational>, ExactError> {
    let graph = space.graph();
    let dist = red_marginal_under(space, constraints, caps)?;
    Ok(dist.probabilities().map(|(c, p)| (graph.faces().iter().copied().zip(c.iter().copied()).collect(), p)).collect())
}
