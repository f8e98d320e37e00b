//! Configuration spaces: height functions, loop configurations and coherent
//! spin pairs, together with the structures derived from them.

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CylDomain, Domain, FaceCoord, FaceGraph, HexEdge, HexVertex, Side};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("height difference larger than one across {}", .0.key())]
    NotLipschitz(HexEdge),
    #[error("nonzero height on boundary face {0}")]
    NonzeroBoundary(FaceCoord),
    #[error("vertex {0:?} meets an odd number of loop edges")]
    OddVertex(HexVertex),
    #[error("edge id {0} is not an interior edge")]
    UnknownEdge(usize),
    #[error("spins are not constant on the inner boundary")]
    NonconstantBoundary,
    #[error("red and blue loop configurations share an edge")]
    OverlappingLoops,
    #[error("spin pair is not coherent across {}", .0.key())]
    Incoherent(HexEdge),
    #[error("boundary condition {0} does not apply to this domain: {1}")]
    Inapplicable(String, String),
    #[error("invalid four-arc vertices: {0}")]
    InvalidFourArc(String),
    #[error("face {0} is not in the domain")]
    UnknownFace(FaceCoord),
    #[error("malformed configuration: {0}")]
    Malformed(String),
}

/// A red or blue spin. `M < P` in the pointwise order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    M,
    P,
}

impl Spin {
    pub fn flip(self) -> Spin {
        match self {
            Spin::M => Spin::P,
            Spin::P => Spin::M,
        }
    }

    pub fn from_bool(p: bool) -> Spin {
        if p {
            Spin::P
        } else {
            Spin::M
        }
    }

    pub fn is_p(self) -> bool {
        self == Spin::P
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Spin::M => "m",
            Spin::P => "p",
        }
    }
}

/// Red and blue spins indexed by face index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinPair {
    pub red: Vec<Spin>,
    pub blue: Vec<Spin>,
}

impl SpinPair {
    pub fn constant(n: usize, red: Spin, blue: Spin) -> Self {
        SpinPair { red: vec![red; n], blue: vec![blue; n] }
    }

    pub fn swapped(&self) -> Self {
        SpinPair { red: self.blue.clone(), blue: self.red.clone() }
    }

    pub fn to_json(&self, graph: &FaceGraph) -> serde_json::Value {
        let map = |s: &[Spin]| -> BTreeMap<String, Spin> {
            s.iter().enumerate().map(|(i, &x)| (graph.face(i).key(), x)).collect()
        };
        serde_json::json!({ "red": map(&self.red), "blue": map(&self.blue) })
    }

    pub fn from_json(graph: &FaceGraph, value: &serde_json::Value) -> Result<Self, ConfigError> {
        let read = |name: &str| -> Result<Vec<Spin>, ConfigError> {
            let map: BTreeMap<String, Spin> =
                serde_json::from_value(value[name].clone()).map_err(|e| ConfigError::Malformed(e.to_string()))?;
            spin_vec_from_map(graph, &map)
        };
        Ok(SpinPair { red: read("red")?, blue: read("blue")? })
    }
}

fn spin_vec_from_map(graph: &FaceGraph, map: &BTreeMap<String, Spin>) -> Result<Vec<Spin>, ConfigError> {
    let mut out = vec![None; graph.num_faces()];
    for (key, &s) in map {
        let f = FaceCoord::parse_key(key).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let i = graph.index_of(f).ok_or(ConfigError::UnknownFace(f))?;
        out[i] = Some(s);
    }
    out.into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| ConfigError::WrongLength { expected: graph.num_faces(), got: map.len() })
}

/// A Lipschitz function on the faces of a domain vanishing on the inner
/// boundary.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeightFn {
    values: Vec<i32>,
}

impl HeightFn {
    pub fn zero(d: &Domain) -> Self {
        HeightFn { values: vec![0; d.num_faces()] }
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    /// Mutable access for samplers; callers keep the Lipschitz condition.
    pub(crate) fn values_mut(&mut self) -> &mut [i32] {
        &mut self.values
    }

    pub fn get(&self, i: usize) -> i32 {
        self.values[i]
    }

    pub fn into_values(self) -> Vec<i32> {
        self.values
    }

    pub fn to_json(&self, d: &Domain) -> serde_json::Value {
        let map: BTreeMap<String, i32> = self.values.iter().enumerate().map(|(i, &v)| (d.face(i).key(), v)).collect();
        serde_json::json!(map)
    }

    pub fn from_json(d: &Domain, value: &serde_json::Value) -> Result<Self, ConfigError> {
        let map: BTreeMap<String, i32> =
            serde_json::from_value(value.clone()).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let mut values = vec![None; d.num_faces()];
        for (key, &v) in &map {
            let f = FaceCoord::parse_key(key).map_err(|e| ConfigError::Malformed(e.to_string()))?;
            values[d.index_of(f).ok_or(ConfigError::UnknownFace(f))?] = Some(v);
        }
        let values = values
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or(ConfigError::WrongLength { expected: d.num_faces(), got: map.len() })?;
        validate_height(d, values)
    }
}

pub fn validate_height(d: &Domain, values: Vec<i32>) -> Result<HeightFn, ConfigError> {
    if values.len() != d.num_faces() {
        return Err(ConfigError::WrongLength { expected: d.num_faces(), got: values.len() });
    }
    for &(a, b) in d.edges() {
        if (values[a] - values[b]).abs() > 1 {
            return Err(ConfigError::NotLipschitz(HexEdge::new(d.face(a), d.face(b))));
        }
    }
    for i in d.inner_boundary() {
        if values[i] != 0 {
            return Err(ConfigError::NonzeroBoundary(d.face(i)));
        }
    }
    Ok(HeightFn { values })
}

/// A set of interior edges in which every vertex has even degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopConfig {
    edges: Vec<bool>,
}

impl LoopConfig {
    pub fn empty(d: &Domain) -> Self {
        LoopConfig { edges: vec![false; d.num_edges()] }
    }

    /// Builds a configuration without checking parity; callers guarantee it.
    pub(crate) fn from_mask_unchecked(edges: Vec<bool>) -> Self {
        LoopConfig { edges }
    }

    pub fn mask(&self) -> &[bool] {
        &self.edges
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges[e]
    }

    /// Number of edges, `|omega|`.
    pub fn len(&self) -> usize {
        self.edges.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.edges.iter().any(|&b| b)
    }

    pub fn edge_ids(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e]).collect()
    }

    pub fn is_disjoint(&self, other: &LoopConfig) -> bool {
        self.edges.iter().zip(&other.edges).all(|(&a, &b)| !(a && b))
    }

    pub fn union(&self, other: &LoopConfig) -> LoopConfig {
        LoopConfig { edges: self.edges.iter().zip(&other.edges).map(|(&a, &b)| a || b).collect() }
    }

    /// Sorted list of edges as pairs of face keys.
    pub fn to_json(&self, d: &Domain) -> serde_json::Value {
        let list: Vec<[String; 2]> = self
            .edge_ids()
            .into_iter()
            .map(|e| {
                let h = d.hex_edge(e);
                [h.a.key(), h.b.key()]
            })
            .collect();
        serde_json::json!(list)
    }

    pub fn from_json(d: &Domain, value: &serde_json::Value) -> Result<Self, ConfigError> {
        let list: Vec<[String; 2]> =
            serde_json::from_value(value.clone()).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let mut ids = Vec::with_capacity(list.len());
        for [a, b] in &list {
            let fa = FaceCoord::parse_key(a).map_err(|e| ConfigError::Malformed(e.to_string()))?;
            let fb = FaceCoord::parse_key(b).map_err(|e| ConfigError::Malformed(e.to_string()))?;
            let ia = d.index_of(fa).ok_or(ConfigError::UnknownFace(fa))?;
            let ib = d.index_of(fb).ok_or(ConfigError::UnknownFace(fb))?;
            let e = d.edge_between(ia, ib).ok_or_else(|| ConfigError::Malformed(format!("{a}|{b} is not an edge")))?;
            ids.push(e);
        }
        validate_loops(d, &ids)
    }
}

pub fn validate_loops(d: &Domain, edge_ids: &[usize]) -> Result<LoopConfig, ConfigError> {
    let mut edges = vec![false; d.num_edges()];
    for &e in edge_ids {
        if e >= edges.len() {
            return Err(ConfigError::UnknownEdge(e));
        }
        edges[e] = true;
    }
    for v in 0..d.vertices().len() {
        let deg = d.vertex_edges(v).iter().filter(|&&e| edges[e]).count();
        if deg % 2 == 1 {
            return Err(ConfigError::OddVertex(d.vertices()[v]));
        }
    }
    Ok(LoopConfig { edges })
}

/// One loop of a configuration: its edges in traversal order and the vertex
/// at which each edge starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
}

impl Loop {
    /// Signed area enclosed, positive for counter-clockwise traversal.
    fn signed_area(&self, d: &Domain) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = d.vertices()[self.vertices[i]].position();
                let (x1, y1) = d.vertices()[self.vertices[(i + 1) % n]].position();
                x0 * y1 - x1 * y0
            })
            .sum::<f64>()
            / 2.0
    }

    /// For each edge of the loop, the face index on its inner side.
    pub fn inside_faces(&self, d: &Domain) -> Vec<usize> {
        let ccw = self.signed_area(d) > 0.0;
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = d.vertices()[self.vertices[i]].position();
                let (x1, y1) = d.vertices()[self.vertices[(i + 1) % n]].position();
                let (a, b) = d.edges()[self.edges[i]];
                let (cx, cy) = d.face(a).center();
                let a_left = (x1 - x0) * (cy - y0) - (y1 - y0) * (cx - x0) > 0.0;
                if a_left == ccw {
                    a
                } else {
                    b
                }
            })
            .collect()
    }
}

/// Splits a loop configuration into its loops, ordered by smallest edge id;
/// each loop starts at its smallest edge.
pub fn decompose_loops(d: &Domain, omega: &LoopConfig) -> Vec<Loop> {
    let mut seen = vec![false; d.num_edges()];
    let mut loops = Vec::new();
    for start in 0..d.num_edges() {
        if !omega.edges[start] || seen[start] {
            continue;
        }
        let mut lp = Loop { edges: Vec::new(), vertices: Vec::new() };
        let [v0, _] = d.edge_ends(start);
        let mut e = start;
        let mut v = v0;
        loop {
            seen[e] = true;
            lp.edges.push(e);
            lp.vertices.push(v);
            let [p, q] = d.edge_ends(e);
            v = if p == v { q } else { p };
            match d.vertex_edges(v).iter().copied().find(|&f| f != e && omega.edges[f]) {
                Some(next) if next != start => e = next,
                _ => break,
            }
        }
        loops.push(lp);
    }
    loops
}

/// Loop id of every edge of `omega` (`usize::MAX` off the configuration).
pub fn loop_labels(d: &Domain, loops: &[Loop]) -> Vec<usize> {
    let mut label = vec![usize::MAX; d.num_edges()];
    for (i, lp) in loops.iter().enumerate() {
        for &e in &lp.edges {
            label[e] = i;
        }
    }
    label
}

/// Number of loops of `omega` surrounding face `u`, by crossing parity along
/// the horizontal ray from `u`.
pub fn loops_surrounding(d: &Domain, omega: &LoopConfig, u: FaceCoord) -> usize {
    let loops = decompose_loops(d, omega);
    surrounding_loop_ids(d, &loops, u).len()
}

/// Indices into `loops` of the loops surrounding `u`.
pub fn surrounding_loop_ids(d: &Domain, loops: &[Loop], u: FaceCoord) -> Vec<usize> {
    let label = loop_labels(d, loops);
    let mut parity = vec![false; loops.len()];
    for e in d.ray_edges(u) {
        if label[e] != usize::MAX {
            parity[label[e]] ^= true;
        }
    }
    (0..loops.len()).filter(|&i| parity[i]).collect()
}

/// A loop configuration with an orientation flag per loop, aligned with the
/// order of [`decompose_loops`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedLoopConfig {
    pub loops: LoopConfig,
    pub clockwise: Vec<bool>,
}

pub fn is_coherent(graph: &FaceGraph, red: &[Spin], blue: &[Spin]) -> bool {
    graph.edges().iter().all(|&(a, b)| red[a] == red[b] || blue[a] == blue[b])
}

pub fn check_coherent(graph: &FaceGraph, pair: &SpinPair) -> Result<(), ConfigError> {
    for &(a, b) in graph.edges() {
        if pair.red[a] != pair.red[b] && pair.blue[a] != pair.blue[b] {
            return Err(ConfigError::Incoherent(HexEdge::new(graph.face(a), graph.face(b))));
        }
    }
    Ok(())
}

/// Interior edges separating faces of different spin. The spin must be
/// constant on the inner boundary.
pub fn omega_of(d: &Domain, sigma: &[Spin]) -> Result<LoopConfig, ConfigError> {
    let boundary = d.inner_boundary();
    if boundary.iter().any(|&i| sigma[i] != sigma[boundary[0]]) {
        return Err(ConfigError::NonconstantBoundary);
    }
    let edges = d.edges().iter().map(|&(a, b)| sigma[a] != sigma[b]).collect();
    Ok(LoopConfig { edges })
}

/// Mask over graph edges of the dual edges across which red spins differ.
pub fn theta_of(graph: &FaceGraph, red: &[Spin]) -> Vec<bool> {
    graph.edges().iter().map(|&(a, b)| red[a] != red[b]).collect()
}

/// Union-find of the faces under the dual edges in `theta`.
pub fn theta_clusters(graph: &FaceGraph, theta: &[bool]) -> UnionFind<usize> {
    let mut uf = UnionFind::new(graph.num_faces());
    for (&(a, b), _) in graph.edges().iter().zip(theta).filter(|(_, &t)| t) {
        uf.union(a, b);
    }
    uf
}

/// Number of connected components of `(F, theta)`, isolated faces included.
/// With `merge`, all components meeting the given faces count as one.
pub fn cluster_count(graph: &FaceGraph, theta: &[bool], merge: Option<&[usize]>) -> usize {
    let mut uf = UnionFind::new(graph.num_faces());
    let mut count = graph.num_faces();
    for (&(a, b), _) in graph.edges().iter().zip(theta).filter(|(_, &t)| t) {
        if uf.union(a, b) {
            count -= 1;
        }
    }
    if let Some(set) = merge {
        for w in set.windows(2) {
            if uf.union(w[0], w[1]) {
                count -= 1;
            }
        }
    }
    count
}

/// Mask over interior edges whose two faces both carry spin `s`.
pub fn double_edges(d: &Domain, sigma: &[Spin], s: Spin) -> Vec<bool> {
    d.edges().iter().map(|&(a, b)| sigma[a] == s && sigma[b] == s).collect()
}

/// Boundary conditions on spin pairs. `RedXY` fixes red spin `X` on the inner
/// boundary; `Y = P` leaves blue free there, `Y = M` forces blue constant
/// (either value). `Blue*` swaps the roles of the colours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    Free,
    RedPP,
    RedMM,
    RedPM,
    RedMP,
    BluePP,
    BlueMM,
    BluePM,
    BlueMP,
    /// Red `p` on faces next to arcs `(ab)` and `(cd)`, `m` next to `(bc)` and
    /// `(da)`; vertices in counter-clockwise order.
    FourArc([HexVertex; 4]),
    /// Red `m` on the bottom side, `p` on the rest of the inner boundary.
    DobrushinRect,
    /// Red `m` on the bottom row, `p` on the top row of a cylinder.
    DobrushinCyl,
    /// Red spins fixed at the listed faces, everything else free.
    Pinned(Vec<(FaceCoord, Spin)>),
}

impl BoundaryCondition {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::RedPP => "pp",
            BoundaryCondition::RedMM => "mm",
            BoundaryCondition::RedPM => "pm",
            BoundaryCondition::RedMP => "mp",
            BoundaryCondition::BluePP => "blue-pp",
            BoundaryCondition::BlueMM => "blue-mm",
            BoundaryCondition::BluePM => "blue-pm",
            BoundaryCondition::BlueMP => "blue-mp",
            BoundaryCondition::FourArc(_) => "four-arc",
            BoundaryCondition::DobrushinRect => "dobrushin",
            BoundaryCondition::DobrushinCyl => "dobrushin-cyl",
            BoundaryCondition::Pinned(_) => "pinned",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "free" => BoundaryCondition::Free,
            "pp" => BoundaryCondition::RedPP,
            "mm" => BoundaryCondition::RedMM,
            "pm" => BoundaryCondition::RedPM,
            "mp" => BoundaryCondition::RedMP,
            "blue-pp" => BoundaryCondition::BluePP,
            "blue-mm" => BoundaryCondition::BlueMM,
            "blue-pm" => BoundaryCondition::BluePM,
            "blue-mp" => BoundaryCondition::BlueMP,
            "dobrushin" => BoundaryCondition::DobrushinRect,
            "dobrushin-cyl" => BoundaryCondition::DobrushinCyl,
            _ => return None,
        })
    }

    fn swaps_colours(&self) -> bool {
        matches!(
            self,
            BoundaryCondition::BluePP
                | BoundaryCondition::BlueMM
                | BoundaryCondition::BluePM
                | BoundaryCondition::BlueMP
        )
    }
}

/// A planar domain or a cylinder; the spaces on which spin pairs live.
#[derive(Clone, Debug)]
pub enum Space {
    Planar(Domain),
    Cylinder(CylDomain),
}

impl Space {
    pub fn graph(&self) -> &FaceGraph {
        match self {
            Space::Planar(d) => d.graph(),
            Space::Cylinder(c) => c.graph(),
        }
    }

    pub fn planar(&self) -> Option<&Domain> {
        match self {
            Space::Planar(d) => Some(d),
            Space::Cylinder(_) => None,
        }
    }

    /// Faces on the boundary: the inner boundary of a domain, the top and
    /// bottom rows of a cylinder.
    pub fn inner_boundary(&self) -> Vec<usize> {
        match self {
            Space::Planar(d) => d.inner_boundary(),
            Space::Cylinder(c) => {
                let mut v = c.row(0);
                v.extend(c.row(c.top_row()));
                v.sort_unstable();
                v
            }
        }
    }
}

/// Pointwise constraints a boundary condition puts on spin pairs, after
/// undoing a colour swap (see `swapped`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraints {
    pub red: Vec<Option<Spin>>,
    pub blue: Vec<Option<Spin>>,
    /// Faces whose blue spins must all agree.
    pub blue_tied: Vec<usize>,
    /// The real measure is obtained by swapping red and blue.
    pub swapped: bool,
}

impl Constraints {
    pub fn free(n: usize) -> Self {
        Constraints { red: vec![None; n], blue: vec![None; n], blue_tied: Vec::new(), swapped: false }
    }

    pub fn compile(space: &Space, bc: &BoundaryCondition) -> Result<Self, ConfigError> {
        let graph = space.graph();
        let n = graph.num_faces();
        let mut c = Constraints::free(n);
        c.swapped = bc.swaps_colours();
        let boundary = space.inner_boundary();
        let inapplicable = |why: &str| ConfigError::Inapplicable(bc.name().to_string(), why.to_string());
        match bc {
            BoundaryCondition::Free => {}
            BoundaryCondition::RedPP | BoundaryCondition::BluePP => {
                boundary.iter().for_each(|&i| c.red[i] = Some(Spin::P))
            }
            BoundaryCondition::RedMM | BoundaryCondition::BlueMM => {
                boundary.iter().for_each(|&i| c.red[i] = Some(Spin::M))
            }
            BoundaryCondition::RedPM | BoundaryCondition::BluePM => {
                boundary.iter().for_each(|&i| c.red[i] = Some(Spin::P));
                c.blue_tied = boundary;
            }
            BoundaryCondition::RedMP | BoundaryCondition::BlueMP => {
                boundary.iter().for_each(|&i| c.red[i] = Some(Spin::M));
                c.blue_tied = boundary;
            }
            BoundaryCondition::DobrushinRect => {
                let d = space.planar().ok_or_else(|| inapplicable("needs a planar domain"))?;
                if !d.has_sides() {
                    return Err(inapplicable("domain has no side labels"));
                }
                boundary.iter().for_each(|&i| c.red[i] = Some(Spin::P));
                d.side_inner_faces(Side::Bottom).into_iter().for_each(|i| c.red[i] = Some(Spin::M));
            }
            BoundaryCondition::DobrushinCyl => {
                let Space::Cylinder(cyl) = space else { return Err(inapplicable("needs a cylinder")) };
                cyl.row(0).into_iter().for_each(|i| c.red[i] = Some(Spin::M));
                cyl.row(cyl.top_row()).into_iter().for_each(|i| c.red[i] = Some(Spin::P));
            }
            BoundaryCondition::FourArc(vs) => {
                let d = space.planar().ok_or_else(|| inapplicable("needs a planar domain"))?;
                for (i, s) in four_arc_spins(d, vs)?.into_iter().enumerate() {
                    c.red[i] = s;
                }
            }
            BoundaryCondition::Pinned(list) => {
                for &(f, s) in list {
                    let i = graph.index_of(f).ok_or(ConfigError::UnknownFace(f))?;
                    c.red[i] = Some(s);
                }
            }
        }
        Ok(c)
    }

    /// Faces whose red spin is not fixed.
    pub fn free_red_faces(&self) -> Vec<usize> {
        (0..self.red.len()).filter(|&i| self.red[i].is_none()).collect()
    }

    pub fn red_allowed(&self, red: &[Spin]) -> bool {
        self.red.iter().zip(red).all(|(c, s)| c.map_or(true, |c| c == *s))
    }

    pub fn blue_allowed(&self, blue: &[Spin]) -> bool {
        self.blue.iter().zip(blue).all(|(c, s)| c.map_or(true, |c| c == *s))
            && self.blue_tied.windows(2).all(|w| blue[w[0]] == blue[w[1]])
    }

    /// Whether a pair (in the unswapped frame) satisfies the constraints.
    pub fn allows(&self, pair: &SpinPair) -> bool {
        self.red_allowed(&pair.red) && self.blue_allowed(&pair.blue)
    }

    /// Blue clusters compatible with `red`: the union-find over theta plus
    /// the tie group, and the forced value of each root (`None` for free
    /// clusters). `Err` if some cluster is forced to both values.
    pub fn blue_clusters(&self, graph: &FaceGraph, red: &[Spin]) -> Result<(UnionFind<usize>, Vec<Option<Spin>>), ()> {
        let mut uf = theta_clusters(graph, &theta_of(graph, red));
        for w in self.blue_tied.windows(2) {
            uf.union(w[0], w[1]);
        }
        let mut forced = vec![None; graph.num_faces()];
        for i in 0..graph.num_faces() {
            if let Some(s) = self.blue[i] {
                let r = uf.find_mut(i);
                match forced[r] {
                    None => forced[r] = Some(s),
                    Some(t) if t != s => return Err(()),
                    _ => {}
                }
            }
        }
        Ok((uf, forced))
    }

    /// `log2` of the number of blue configurations completing `red` into an
    /// admissible coherent pair, or `None` if there are none.
    pub fn blue_completion_exponent(&self, graph: &FaceGraph, red: &[Spin]) -> Option<u32> {
        let (mut uf, forced) = self.blue_clusters(graph, red).ok()?;
        let mut free = 0;
        for i in 0..graph.num_faces() {
            if uf.find_mut(i) == i && forced[i].is_none() {
                free += 1;
            }
        }
        Some(free)
    }
}

/// Red spins imposed by four marked boundary vertices on the inner boundary.
pub fn four_arc_spins(d: &Domain, vs: &[HexVertex; 4]) -> Result<Vec<Option<Spin>>, ConfigError> {
    let cycle = d.boundary_cycle();
    let mut pos = Vec::with_capacity(4);
    for v in vs {
        let ok = d.vertex_id(*v).is_some_and(|id| d.is_boundary_vertex(id));
        if !ok {
            return Err(ConfigError::InvalidFourArc(format!("{v:?} is not a boundary vertex with an interior edge")));
        }
        pos.push(cycle.iter().position(|c| c.0 == *v).expect("boundary vertex lies on the cycle"));
    }
    // Counter-clockwise order up to rotation.
    let rot = pos.iter().enumerate().min_by_key(|(_, &p)| p).map(|(i, _)| i).unwrap();
    let ordered: Vec<usize> = (0..4).map(|j| pos[(rot + j) % 4]).collect();
    if ordered.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::InvalidFourArc("vertices are not distinct and counter-clockwise".into()));
    }
    // Arc j runs from vs[j] to vs[j+1]; arcs 0 and 2 are plus.
    let mut spins: Vec<Option<Spin>> = vec![None; d.num_faces()];
    let n = cycle.len();
    for j in 0..4 {
        let s = if j % 2 == 0 { Spin::P } else { Spin::M };
        let mut p = pos[j];
        while p != pos[(j + 1) % 4] {
            let (inner, _) = d.boundary_edges()[cycle[p].1];
            match spins[inner] {
                Some(t) if t != s => {
                    return Err(ConfigError::InvalidFourArc(format!(
                        "face {} touches arcs of both signs",
                        d.face(inner)
                    )))
                }
                _ => spins[inner] = Some(s),
            }
            p = (p + 1) % n;
        }
    }
    Ok(spins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ball, build_parallelogram};

    fn center_m(d: &Domain) -> Vec<Spin> {
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        (0..d.num_faces()).map(|i| if i == c { Spin::M } else { Spin::P }).collect()
    }

    fn hexagon(d: &Domain) -> Vec<usize> {
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        d.neighbors(c).iter().map(|&j| d.edge_between(c, j).unwrap()).collect()
    }

    #[test]
    fn height_validation() {
        let d = build_ball(1).unwrap();
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let mut v = vec![0; 7];
        v[c] = 1;
        assert!(validate_height(&d, v.clone()).is_ok());
        v[c] = 2;
        assert!(matches!(validate_height(&d, v.clone()), Err(ConfigError::NotLipschitz(_))));
        let mut w = vec![0; 7];
        w[(c + 1) % 7] = 1;
        assert!(matches!(validate_height(&d, w), Err(ConfigError::NonzeroBoundary(_))));
    }

    #[test]
    fn loop_validation() {
        let d = build_ball(1).unwrap();
        let h = hexagon(&d);
        assert_eq!(validate_loops(&d, &h).unwrap().len(), 6);
        assert!(matches!(validate_loops(&d, &h[..5]), Err(ConfigError::OddVertex(_))));
        assert!(validate_loops(&d, &[]).unwrap().is_empty());
    }

    #[test]
    fn coherence() {
        let d = build_ball(1).unwrap();
        let g = d.graph();
        let red = vec![Spin::P; 7];
        let blue: Vec<Spin> = (0..7).map(|i| Spin::from_bool(i % 2 == 0)).collect();
        assert!(is_coherent(g, &red, &blue));
        let red = center_m(&d);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let mut blue = vec![Spin::P; 7];
        blue[c] = Spin::M;
        assert!(!is_coherent(g, &red, &blue));
    }

    #[test]
    fn omega_and_theta() {
        let d = build_ball(1).unwrap();
        assert!(omega_of(&d, &[Spin::P; 7]).unwrap().is_empty());
        let sigma = center_m(&d);
        let omega = omega_of(&d, &sigma).unwrap();
        assert_eq!(omega.edge_ids(), {
            let mut h = hexagon(&d);
            h.sort();
            h
        });
        let theta = theta_of(d.graph(), &sigma);
        assert_eq!(theta.iter().filter(|&&t| t).count(), 6);
        assert_eq!(theta, omega.mask());
        let neg: Vec<Spin> = sigma.iter().map(|s| s.flip()).collect();
        assert_eq!(theta_of(d.graph(), &neg), theta);
        let mut bad = vec![Spin::P; 7];
        bad[d.inner_boundary()[0]] = Spin::M;
        assert_eq!(omega_of(&d, &bad), Err(ConfigError::NonconstantBoundary));
    }

    #[test]
    fn cluster_counts() {
        let d = build_ball(1).unwrap();
        let g = d.graph();
        let none = vec![false; d.num_edges()];
        assert_eq!(cluster_count(g, &none, None), 7);
        assert_eq!(cluster_count(g, &theta_of(g, &center_m(&d)), None), 1);
        assert_eq!(cluster_count(g, &none, Some(&d.inner_boundary())), 2);
    }

    #[test]
    fn double_edge_sets() {
        let d = build_ball(1).unwrap();
        assert_eq!(double_edges(&d, &[Spin::P; 7], Spin::P).iter().filter(|&&b| b).count(), 12);
        assert_eq!(double_edges(&d, &[Spin::P; 7], Spin::M).iter().filter(|&&b| b).count(), 0);
        let dp = double_edges(&d, &center_m(&d), Spin::P);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let ring: Vec<usize> = (0..12).filter(|&e| dp[e]).collect();
        assert_eq!(ring.len(), 6);
        assert!(ring.iter().all(|&e| d.edges()[e].0 != c && d.edges()[e].1 != c));
    }

    #[test]
    fn nested_loops_on_ball_two() {
        let d = build_ball(2).unwrap();
        // Level lines of the height 2 at the centre, 1 on the first ring.
        let values: Vec<i32> =
            d.faces().iter().map(|&f| 2 - crate::lattice::face_distance(f, FaceCoord::ORIGIN)).collect();
        let phi = validate_height(&d, values).unwrap();
        let edges: Vec<usize> =
            (0..d.num_edges()).filter(|&e| phi.get(d.edges()[e].0) != phi.get(d.edges()[e].1)).collect();
        let omega = validate_loops(&d, &edges).unwrap();
        let loops = decompose_loops(&d, &omega);
        assert_eq!(loops.len(), 2);
        assert_eq!(loops.iter().map(|l| l.edges.len()).sum::<usize>(), omega.len());
        assert_eq!(loops_surrounding(&d, &omega, FaceCoord::ORIGIN), 2);
        assert_eq!(loops_surrounding(&d, &omega, FaceCoord::new(1, 0)), 1);
        assert_eq!(loops_surrounding(&d, &omega, FaceCoord::new(2, 0)), 0);
    }

    #[test]
    fn central_loop_geometry() {
        let d = build_ball(1).unwrap();
        let omega = validate_loops(&d, &hexagon(&d)).unwrap();
        let loops = decompose_loops(&d, &omega);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].edges.len(), 6);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        assert!(loops[0].inside_faces(&d).iter().all(|&i| i == c));
        assert_eq!(loops_surrounding(&d, &omega, FaceCoord::ORIGIN), 1);
        assert_eq!(loops_surrounding(&d, &omega, FaceCoord::new(1, 0)), 0);
    }

    #[test]
    fn boundary_condition_constraints() {
        let d = build_ball(1).unwrap();
        let space = Space::Planar(d.clone());
        let c = Constraints::compile(&space, &BoundaryCondition::RedPM).unwrap();
        assert_eq!(c.free_red_faces(), vec![d.index_of(FaceCoord::ORIGIN).unwrap()]);
        assert_eq!(c.blue_tied.len(), 6);
        assert_eq!(c.blue_completion_exponent(d.graph(), &[Spin::P; 7]), Some(2));
        assert_eq!(c.blue_completion_exponent(d.graph(), &center_m(&d)), Some(1));
        let free = Constraints::free(7);
        assert_eq!(free.blue_completion_exponent(d.graph(), &[Spin::P; 7]), Some(7));
        assert!(Constraints::compile(&space, &BoundaryCondition::DobrushinCyl).is_err());
        let par = Space::Planar(build_parallelogram(2, 2).unwrap());
        let dob = Constraints::compile(&par, &BoundaryCondition::DobrushinRect).unwrap();
        assert_eq!(dob.red.iter().filter(|s| **s == Some(Spin::M)).count(), 3);
    }

    #[test]
    fn four_arc_on_small_domains() {
        let two = crate::lattice::validate_domain(&[FaceCoord::new(0, 0), FaceCoord::new(1, 0)]).unwrap();
        let bv: Vec<HexVertex> =
            (0..two.vertices().len()).filter(|&v| two.is_boundary_vertex(v)).map(|v| two.vertices()[v]).collect();
        assert_eq!(bv.len(), 2);
        let vs = [bv[0], bv[1], bv[0], bv[1]];
        assert!(matches!(four_arc_spins(&two, &vs), Err(ConfigError::InvalidFourArc(_))));

        let d = build_ball(1).unwrap();
        let cycle = d.boundary_cycle();
        let marked: Vec<HexVertex> =
            cycle.iter().map(|c| c.0).filter(|&v| d.vertex_id(v).is_some_and(|id| d.is_boundary_vertex(id))).collect();
        assert_eq!(marked.len(), 6);
        let spins = four_arc_spins(&d, &[marked[0], marked[1], marked[3], marked[4]]).unwrap();
        let plus = spins.iter().filter(|s| **s == Some(Spin::P)).count();
        let minus = spins.iter().filter(|s| **s == Some(Spin::M)).count();
        assert_eq!((plus, minus), (2, 4));
        assert_eq!(spins[d.index_of(FaceCoord::ORIGIN).unwrap()], None);
        assert!(four_arc_spins(&d, &[marked[1], marked[0], marked[3], marked[4]]).is_err());
        let center = HexVertex::from_faces([FaceCoord::new(0, 0), FaceCoord::new(1, 0), FaceCoord::new(0, 1)]);
        assert!(four_arc_spins(&d, &[center, marked[1], marked[3], marked[4]]).is_err());
    }

    #[test]
    fn json_round_trips() {
        let d = build_ball(1).unwrap();
        let omega = validate_loops(&d, &hexagon(&d)).unwrap();
        assert_eq!(LoopConfig::from_json(&d, &omega.to_json(&d)).unwrap(), omega);
        let pair = SpinPair { red: center_m(&d), blue: vec![Spin::M; 7] };
        assert_eq!(SpinPair::from_json(d.graph(), &pair.to_json(d.graph())).unwrap(), pair);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let mut v = vec![0; 7];
        v[c] = -1;
        let phi = validate_height(&d, v).unwrap();
        assert_eq!(HeightFn::from_json(&d, &phi.to_json(&d)).unwrap(), phi);
    }
}
