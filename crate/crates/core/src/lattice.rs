//! Faces, edges and vertices of the hexagonal lattice, and finite domains.
//!
//! Faces of the hexagonal lattice are labelled by the vertices of the dual
//! triangular lattice: `(k, l)` sits at `k * (1, 0) + l * (1/2, sqrt(3)/2)`.
//! Hexagon edges are pairs of adjacent faces and hexagon vertices are
//! triangles of mutually adjacent faces.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Offsets to the six neighbours of a face, in counter-clockwise order
/// starting from the right.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain has no faces")]
    Empty,
    #[error("duplicate face {0}")]
    DuplicateFace(FaceCoord),
    #[error("domain is not connected")]
    Disconnected,
    #[error("domain is not simply connected (face {0} is enclosed)")]
    HasHole(FaceCoord),
    #[error("domain has no interior edges")]
    NoInteriorEdges,
    #[error("malformed face key {0:?}")]
    BadKey(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceCoord {
    pub k: i32,
    pub l: i32,
}

impl FaceCoord {
    pub const ORIGIN: FaceCoord = FaceCoord { k: 0, l: 0 };

    pub const fn new(k: i32, l: i32) -> Self {
        FaceCoord { k, l }
    }

    pub fn offset(self, dk: i32, dl: i32) -> Self {
        FaceCoord::new(self.k + dk, self.l + dl)
    }

    pub fn neighbors(self) -> [FaceCoord; 6] {
        NEIGHBOR_OFFSETS.map(|(dk, dl)| self.offset(dk, dl))
    }

    pub fn is_adjacent(self, other: FaceCoord) -> bool {
        face_distance(self, other) == 1
    }

    /// Cartesian position of the face centre.
    pub fn center(self) -> (f64, f64) {
        (self.k as f64 + 0.5 * self.l as f64, SQRT3_2 * self.l as f64)
    }

    /// Twice the horizontal coordinate of the centre, as an integer.
    pub fn double_x(self) -> i32 {
        2 * self.k + self.l
    }

    /// The `"k,l"` key used in JSON maps.
    pub fn key(self) -> String {
        format!("{},{}", self.k, self.l)
    }

    pub fn parse_key(s: &str) -> Result<Self, DomainError> {
        let bad = || DomainError::BadKey(s.to_string());
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let k = a.trim().parse().map_err(|_| bad())?;
        let l = b.trim().parse().map_err(|_| bad())?;
        Ok(FaceCoord::new(k, l))
    }
}

impl fmt::Display for FaceCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.l)
    }
}

/// Graph distance on the triangular lattice.
pub fn face_distance(a: FaceCoord, b: FaceCoord) -> i32 {
    let dk = a.k - b.k;
    let dl = a.l - b.l;
    (dk.abs() + dl.abs() + (dk + dl).abs()) / 2
}

/// An edge of the hexagonal lattice, stored as the pair of faces it separates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HexEdge {
    pub a: FaceCoord,
    pub b: FaceCoord,
}

impl HexEdge {
    /// Panics if the faces are not adjacent.
    pub fn new(x: FaceCoord, y: FaceCoord) -> Self {
        assert!(x.is_adjacent(y), "faces {x} and {y} are not adjacent");
        if x < y {
            HexEdge { a: x, b: y }
        } else {
            HexEdge { a: y, b: x }
        }
    }

    pub fn endpoints(self) -> [HexVertex; 2] {
        let (c0, c1) = common_neighbors(self.a, self.b);
        [HexVertex::from_faces([self.a, self.b, c0]), HexVertex::from_faces([self.a, self.b, c1])]
    }

    pub fn key(self) -> String {
        format!("{}|{}", self.a.key(), self.b.key())
    }
}

fn common_neighbors(a: FaceCoord, b: FaceCoord) -> (FaceCoord, FaceCoord) {
    let d = (b.k - a.k, b.l - a.l);
    let i = NEIGHBOR_OFFSETS.iter().position(|&o| o == d).expect("adjacent faces");
    let prev = NEIGHBOR_OFFSETS[(i + 5) % 6];
    let next = NEIGHBOR_OFFSETS[(i + 1) % 6];
    (a.offset(prev.0, prev.1), a.offset(next.0, next.1))
}

/// A vertex of the hexagonal lattice, i.e. a triangle of the dual lattice.
///
/// An up triangle with base `b` has faces `b, b+(1,0), b+(0,1)`; a down
/// triangle has faces `b+(1,0), b+(0,1), b+(1,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HexVertex {
    pub base: FaceCoord,
    pub up: bool,
}

impl HexVertex {
    /// Panics if the faces are not mutually adjacent.
    pub fn from_faces(faces: [FaceCoord; 3]) -> Self {
        let sk: i32 = faces.iter().map(|f| f.k).sum();
        let sl: i32 = faces.iter().map(|f| f.l).sum();
        let up = (sk - 1).rem_euclid(3) == 0;
        let shift = if up { 1 } else { 2 };
        let v = HexVertex { base: FaceCoord::new((sk - shift).div_euclid(3), (sl - shift).div_euclid(3)), up };
        let mut expected = v.faces();
        let mut given = faces;
        expected.sort();
        given.sort();
        assert_eq!(expected, given, "faces do not form a hexagon vertex");
        v
    }

    pub fn faces(self) -> [FaceCoord; 3] {
        let b = self.base;
        if self.up {
            [b, b.offset(1, 0), b.offset(0, 1)]
        } else {
            [b.offset(1, 0), b.offset(0, 1), b.offset(1, 1)]
        }
    }

    pub fn position(self) -> (f64, f64) {
        let mut x = 0.0;
        let mut y = 0.0;
        for f in self.faces() {
            let (a, b) = f.center();
            x += a;
            y += b;
        }
        (x / 3.0, y / 3.0)
    }
}

/// Faces with an adjacency structure. Shared by planar domains and cylinders.
#[derive(Clone, Debug)]
pub struct FaceGraph {
    faces: Vec<FaceCoord>,
    index: HashMap<FaceCoord, usize>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl FaceGraph {
    /// `faces` must be sorted and distinct; `adjacent` lists the in-graph
    /// neighbours of a face.
    fn build(faces: Vec<FaceCoord>, adjacent: impl Fn(FaceCoord) -> Vec<FaceCoord>) -> Self {
        let index: HashMap<FaceCoord, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut neighbors = Vec::with_capacity(faces.len());
        let mut edges = Vec::new();
        for (i, &f) in faces.iter().enumerate() {
            let mut nb: Vec<usize> = adjacent(f).into_iter().filter_map(|g| index.get(&g).copied()).collect();
            nb.sort_unstable();
            nb.dedup();
            for &j in &nb {
                if i < j {
                    edges.push((i, j));
                }
            }
            neighbors.push(nb);
        }
        edges.sort_unstable();
        FaceGraph { faces, index, neighbors, edges }
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[FaceCoord] {
        &self.faces
    }

    pub fn face(&self, i: usize) -> FaceCoord {
        self.faces[i]
    }

    pub fn index_of(&self, f: FaceCoord) -> Option<usize> {
        self.index.get(&f).copied()
    }

    pub fn contains(&self, f: FaceCoord) -> bool {
        self.index.contains_key(&f)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Adjacent pairs `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// One of the four sides of a parallelogram or rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// A simply connected finite set of faces with at least one interior edge.
#[derive(Clone, Debug)]
pub struct Domain {
    graph: FaceGraph,
    inner_boundary: Vec<bool>,
    interior: Vec<usize>,
    boundary_edges: Vec<(usize, FaceCoord)>,
    outer_boundary: Vec<FaceCoord>,
    vertices: Vec<HexVertex>,
    vertex_index: HashMap<HexVertex, usize>,
    vertex_edges: Vec<Vec<usize>>,
    edge_ends: Vec<[usize; 2]>,
    edge_index: HashMap<(usize, usize), usize>,
    sides: Option<Vec<Side>>,
}

impl Domain {
    pub fn graph(&self) -> &FaceGraph {
        &self.graph
    }

    pub fn num_faces(&self) -> usize {
        self.graph.num_faces()
    }

    pub fn faces(&self) -> &[FaceCoord] {
        self.graph.faces()
    }

    pub fn face(&self, i: usize) -> FaceCoord {
        self.graph.face(i)
    }

    pub fn index_of(&self, f: FaceCoord) -> Option<usize> {
        self.graph.index_of(f)
    }

    pub fn contains(&self, f: FaceCoord) -> bool {
        self.graph.contains(f)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.graph.neighbors(i)
    }

    /// Interior edges as face-index pairs; their position is the edge id.
    pub fn edges(&self) -> &[(usize, usize)] {
        self.graph.edges()
    }

    pub fn num_edges(&self) -> usize {
        self.graph.edges().len()
    }

    pub fn hex_edge(&self, e: usize) -> HexEdge {
        let (a, b) = self.graph.edges[e];
        HexEdge { a: self.face(a), b: self.face(b) }
    }

    pub fn edge_between(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edge_index.get(&key).copied()
    }

    pub fn is_inner_boundary(&self, i: usize) -> bool {
        self.inner_boundary[i]
    }

    pub fn inner_boundary(&self) -> Vec<usize> {
        (0..self.num_faces()).filter(|&i| self.inner_boundary[i]).collect()
    }

    /// Faces not adjacent to the boundary.
    pub fn interior_faces(&self) -> &[usize] {
        &self.interior
    }

    /// Boundary edges as `(inner face index, outer face)`.
    pub fn boundary_edges(&self) -> &[(usize, FaceCoord)] {
        &self.boundary_edges
    }

    pub fn outer_boundary(&self) -> &[FaceCoord] {
        &self.outer_boundary
    }

    /// Vertices incident to at least one interior edge.
    pub fn vertices(&self) -> &[HexVertex] {
        &self.vertices
    }

    pub fn vertex_id(&self, v: HexVertex) -> Option<usize> {
        self.vertex_index.get(&v).copied()
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    pub fn edge_ends(&self, e: usize) -> [usize; 2] {
        self.edge_ends[e]
    }

    /// A vertex with two faces inside the domain and one outside. Such a
    /// vertex lies on the boundary and has exactly one interior edge.
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_edges[v].len() == 1
    }

    pub fn has_sides(&self) -> bool {
        self.sides.is_some()
    }

    /// Side label of boundary edge `i`, for parallelograms and rectangles.
    pub fn boundary_edge_side(&self, i: usize) -> Option<Side> {
        self.sides.as_ref().map(|s| s[i])
    }

    /// Inner faces adjacent to an edge of the given side.
    pub fn side_inner_faces(&self, side: Side) -> Vec<usize> {
        let Some(sides) = &self.sides else { return Vec::new() };
        let set: BTreeSet<usize> =
            self.boundary_edges.iter().zip(sides).filter(|(_, &s)| s == side).map(|(&(i, _), _)| i).collect();
        set.into_iter().collect()
    }

    /// Outer faces adjacent to an edge of the given side.
    pub fn side_outer_faces(&self, side: Side) -> Vec<FaceCoord> {
        let Some(sides) = &self.sides else { return Vec::new() };
        let set: BTreeSet<FaceCoord> =
            self.boundary_edges.iter().zip(sides).filter(|(_, &s)| s == side).map(|(&(_, w), _)| w).collect();
        set.into_iter().collect()
    }

    /// Side of a boundary vertex, `None` if the vertex is interior or if its
    /// two boundary edges lie on different sides.
    pub fn boundary_vertex_side(&self, v: usize) -> Option<Side> {
        let sides = self.sides.as_ref()?;
        if !self.is_boundary_vertex(v) {
            return None;
        }
        let vert = self.vertices[v];
        let mut found = None;
        for (i, &(u, w)) in self.boundary_edges.iter().enumerate() {
            if HexEdge::new(self.face(u), w).endpoints().contains(&vert) {
                match found {
                    None => found = Some(sides[i]),
                    Some(s) if s != sides[i] => return None,
                    _ => {}
                }
            }
        }
        found
    }

    /// Boundary vertices in counter-clockwise order around the boundary
    /// polygon, together with the boundary edge leading to the next vertex.
    pub fn boundary_cycle(&self) -> Vec<(HexVertex, usize)> {
        let mut at: HashMap<HexVertex, Vec<usize>> = HashMap::new();
        for (i, &(u, w)) in self.boundary_edges.iter().enumerate() {
            for v in HexEdge::new(self.face(u), w).endpoints() {
                at.entry(v).or_default().push(i);
            }
        }
        let ends = |i: usize| {
            let (u, w) = self.boundary_edges[i];
            HexEdge::new(self.face(u), w).endpoints()
        };
        let start = ends(0)[0];
        let mut cycle = Vec::with_capacity(self.boundary_edges.len());
        let mut v = start;
        let mut e = 0;
        loop {
            cycle.push((v, e));
            let [p, q] = ends(e);
            let next = if p == v { q } else { p };
            let cand = &at[&next];
            debug_assert_eq!(cand.len(), 2, "boundary vertex of degree {}", cand.len());
            e = if cand[0] == e { cand[1] } else { cand[0] };
            v = next;
            if v == start {
                break;
            }
        }
        let area: f64 = cycle
            .iter()
            .enumerate()
            .map(|(i, (v, _))| {
                let (x0, y0) = v.position();
                let (x1, y1) = cycle[(i + 1) % cycle.len()].0.position();
                x0 * y1 - x1 * y0
            })
            .sum();
        if area < 0.0 {
            let n = cycle.len();
            let verts: Vec<HexVertex> = cycle.iter().map(|c| c.0).collect();
            let edges: Vec<usize> = cycle.iter().map(|c| c.1).collect();
            cycle = (0..n).map(|i| (verts[(n - i) % n], edges[(2 * n - i - 1) % n])).collect();
        }
        cycle
    }

    /// Faces met by the horizontal ray from `u` towards increasing `k`, paired
    /// with the interior edge crossed when stepping onto them.
    pub fn ray_edges(&self, u: FaceCoord) -> Vec<usize> {
        let max_k = self.faces().iter().map(|f| f.k).max().unwrap_or(u.k);
        let mut out = Vec::new();
        let mut prev = u;
        for k in u.k + 1..=max_k {
            let next = FaceCoord::new(k, u.l);
            if let (Some(i), Some(j)) = (self.index_of(prev), self.index_of(next)) {
                if let Some(e) = self.edge_between(i, j) {
                    out.push(e);
                }
            }
            prev = next;
        }
        out
    }

    pub fn to_json(&self) -> DomainJson {
        DomainJson { faces: self.faces().iter().map(|f| [f.k, f.l]).collect(), period: None }
    }
}

/// Checks that `faces` form a domain and builds its index structures.
pub fn validate_domain(faces: &[FaceCoord]) -> Result<Domain, DomainError> {
    let mut sorted = faces.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(DomainError::DuplicateFace(w[0]));
        }
    }
    if sorted.is_empty() {
        return Err(DomainError::Empty);
    }
    let set: HashSet<FaceCoord> = sorted.iter().copied().collect();

    let mut seen = HashSet::from([sorted[0]]);
    let mut queue = VecDeque::from([sorted[0]]);
    while let Some(f) = queue.pop_front() {
        for g in f.neighbors() {
            if set.contains(&g) && seen.insert(g) {
                queue.push_back(g);
            }
        }
    }
    if seen.len() != set.len() {
        return Err(DomainError::Disconnected);
    }

    // The complement must be connected: flood the outside within a padded box.
    let kmin = sorted.iter().map(|f| f.k).min().unwrap() - 1;
    let kmax = sorted.iter().map(|f| f.k).max().unwrap() + 1;
    let lmin = sorted.iter().map(|f| f.l).min().unwrap() - 1;
    let lmax = sorted.iter().map(|f| f.l).max().unwrap() + 1;
    let in_box = |f: FaceCoord| f.k >= kmin && f.k <= kmax && f.l >= lmin && f.l <= lmax;
    let start = FaceCoord::new(kmin, lmin);
    let mut outside = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(f) = queue.pop_front() {
        for g in f.neighbors() {
            if in_box(g) && !set.contains(&g) && outside.insert(g) {
                queue.push_back(g);
            }
        }
    }
    for k in kmin..=kmax {
        for l in lmin..=lmax {
            let f = FaceCoord::new(k, l);
            if !set.contains(&f) && !outside.contains(&f) {
                return Err(DomainError::HasHole(f));
            }
        }
    }

    let graph = FaceGraph::build(sorted, |f| f.neighbors().to_vec());
    if graph.edges.is_empty() {
        return Err(DomainError::NoInteriorEdges);
    }
    Ok(finish_domain(graph, None))
}

fn finish_domain(graph: FaceGraph, side_of: Option<&dyn Fn(FaceCoord, FaceCoord) -> Side>) -> Domain {
    let n = graph.num_faces();
    let mut inner_boundary = vec![false; n];
    let mut boundary_edges = Vec::new();
    let mut outer = BTreeSet::new();
    for (i, &f) in graph.faces.iter().enumerate() {
        for g in f.neighbors() {
            if !graph.contains(g) {
                inner_boundary[i] = true;
                boundary_edges.push((i, g));
                outer.insert(g);
            }
        }
    }
    let interior = (0..n).filter(|&i| !inner_boundary[i]).collect();

    let edge_index: HashMap<(usize, usize), usize> = graph.edges.iter().enumerate().map(|(e, &p)| (p, e)).collect();
    let mut verts = BTreeSet::new();
    let hex_edges: Vec<HexEdge> =
        graph.edges.iter().map(|&(a, b)| HexEdge { a: graph.faces[a], b: graph.faces[b] }).collect();
    for h in &hex_edges {
        for v in h.endpoints() {
            verts.insert(v);
        }
    }
    let vertices: Vec<HexVertex> = verts.into_iter().collect();
    let vertex_index: HashMap<HexVertex, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut vertex_edges = vec![Vec::new(); vertices.len()];
    let mut edge_ends = Vec::with_capacity(hex_edges.len());
    for (e, h) in hex_edges.iter().enumerate() {
        let [p, q] = h.endpoints().map(|v| vertex_index[&v]);
        vertex_edges[p].push(e);
        vertex_edges[q].push(e);
        edge_ends.push([p, q]);
    }

    let sides = side_of.map(|s| boundary_edges.iter().map(|&(i, w)| s(graph.faces[i], w)).collect());
    Domain {
        graph,
        inner_boundary,
        interior,
        boundary_edges,
        outer_boundary: outer.into_iter().collect(),
        vertices,
        vertex_index,
        vertex_edges,
        edge_ends,
        edge_index,
        sides,
    }
}

fn with_sides(faces: Vec<FaceCoord>, side_of: &dyn Fn(FaceCoord, FaceCoord) -> Side) -> Domain {
    let base = validate_domain(&faces).expect("builder produces a valid domain");
    finish_domain(base.graph, Some(side_of))
}

/// The metric ball of radius `n` around the origin, with `1 + 3n(n+1)` faces.
pub fn build_ball(n: i32) -> Result<Domain, DomainError> {
    if n < 1 {
        return Err(DomainError::InvalidParameter(format!("ball radius must be at least 1, got {n}")));
    }
    validate_domain(&ball_faces(n))
}

pub fn ball_faces(n: i32) -> Vec<FaceCoord> {
    let mut out = Vec::new();
    for k in -n..=n {
        for l in -n..=n {
            let f = FaceCoord::new(k, l);
            if face_distance(f, FaceCoord::ORIGIN) <= n {
                out.push(f);
            }
        }
    }
    out
}

/// `{(k, l) : 0 <= k <= m, 0 <= l <= n}` with its four sides labelled.
pub fn build_parallelogram(m: i32, n: i32) -> Result<Domain, DomainError> {
    if m < 1 || n < 1 {
        return Err(DomainError::InvalidParameter(format!("parallelogram needs m, n >= 1, got {m},{n}")));
    }
    let mut faces = Vec::new();
    for k in 0..=m {
        for l in 0..=n {
            faces.push(FaceCoord::new(k, l));
        }
    }
    let side = move |u: FaceCoord, w: FaceCoord| {
        if w.l == u.l {
            if w.k < u.k {
                Side::Left
            } else {
                Side::Right
            }
        } else if w.l < 0 {
            Side::Bottom
        } else if w.l > n {
            Side::Top
        } else if w.k < 0 {
            Side::Left
        } else {
            Side::Right
        }
    };
    Ok(with_sides(faces, &side))
}

/// Index of the top row of `Rect_{m,n}`: the largest `l` with `l * sqrt(3)/2 <= n`.
pub fn rect_top_row(n: i32) -> i32 {
    let mut t = 0;
    while 3 * (t + 1) * (t + 1) <= 4 * n * n {
        t += 1;
    }
    t
}

fn rect_faces(m: i32, n: i32) -> Vec<FaceCoord> {
    let top = rect_top_row(n);
    let mut faces = Vec::new();
    for l in 0..=top {
        for k in -2 * m..=2 * m {
            let dx = 2 * k + l;
            if dx >= -2 * m && dx <= 2 * m - 1 {
                faces.push(FaceCoord::new(k, l));
            }
        }
    }
    faces
}

/// Faces whose centres lie in `[-m, m - 1/2] x [0, n]`, with sides labelled.
/// Every row holds `2m` faces.
pub fn build_rectangle(m: i32, n: i32) -> Result<Domain, DomainError> {
    if m < 1 || n < 1 {
        return Err(DomainError::InvalidParameter(format!("rectangle needs m, n >= 1, got {m},{n}")));
    }
    let top = rect_top_row(n);
    let side = move |u: FaceCoord, w: FaceCoord| {
        if w.l == u.l {
            if w.k < u.k {
                Side::Left
            } else {
                Side::Right
            }
        } else if w.l < 0 {
            Side::Bottom
        } else if w.l > top {
            Side::Top
        } else if w.double_x() < 0 {
            Side::Left
        } else {
            Side::Right
        }
    };
    Ok(with_sides(rect_faces(m, n), &side))
}

/// `Rect_{m,n}` with its vertical sides identified: horizontal positions are
/// taken modulo `2m`.
#[derive(Clone, Debug)]
pub struct CylDomain {
    graph: FaceGraph,
    m: i32,
    n: i32,
    top: i32,
}

impl CylDomain {
    pub fn graph(&self) -> &FaceGraph {
        &self.graph
    }

    pub fn period(&self) -> i32 {
        self.m
    }

    pub fn height(&self) -> i32 {
        self.n
    }

    pub fn top_row(&self) -> i32 {
        self.top
    }

    pub fn row(&self, l: i32) -> Vec<usize> {
        (0..self.graph.num_faces()).filter(|&i| self.graph.face(i).l == l).collect()
    }

    pub fn to_json(&self) -> DomainJson {
        DomainJson { faces: self.graph.faces().iter().map(|f| [f.k, f.l]).collect(), period: Some(self.m) }
    }
}

pub fn build_cylinder(m: i32, n: i32) -> Result<CylDomain, DomainError> {
    if m < 1 || n < 1 {
        return Err(DomainError::InvalidParameter(format!("cylinder needs m, n >= 1, got {m},{n}")));
    }
    let top = rect_top_row(n);
    let wrap = move |f: FaceCoord| {
        let mut f = f;
        while f.double_x() < -2 * m {
            f.k += 2 * m;
        }
        while f.double_x() > 2 * m - 1 {
            f.k -= 2 * m;
        }
        f
    };
    let graph =
        FaceGraph::build(rect_faces(m, n), |f| f.neighbors().into_iter().map(wrap).filter(|&g| g != f).collect());
    Ok(CylDomain { graph, m, n, top })
}

/// The annulus `Lambda_N \ Lambda_n`, kept as the outer ball plus a hole mask.
#[derive(Clone, Debug)]
pub struct Annulus {
    outer: Domain,
    inner_radius: i32,
    outer_radius: i32,
    hole: Vec<bool>,
}

impl Annulus {
    pub fn outer(&self) -> &Domain {
        &self.outer
    }

    pub fn inner_radius(&self) -> i32 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> i32 {
        self.outer_radius
    }

    /// Whether face `i` of the outer ball lies in the hole.
    pub fn in_hole(&self, i: usize) -> bool {
        self.hole[i]
    }

    pub fn hole_mask(&self) -> &[bool] {
        &self.hole
    }
}

pub fn build_annulus(n: i32, big_n: i32) -> Result<Annulus, DomainError> {
    if n < 0 || big_n <= n {
        return Err(DomainError::InvalidParameter(format!("annulus needs 0 <= n < N, got {n},{big_n}")));
    }
    let outer = build_ball(big_n)?;
    let hole = outer.faces().iter().map(|&f| face_distance(f, FaceCoord::ORIGIN) <= n).collect();
    Ok(Annulus { outer, inner_radius: n, outer_radius: big_n, hole })
}

/// JSON form of a domain: `{"faces": [[k, l], ...]}`, plus `"period": m` for
/// cylinders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainJson {
    pub faces: Vec<[i32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<i32>,
}

impl DomainJson {
    pub fn coords(&self) -> Vec<FaceCoord> {
        self.faces.iter().map(|&[k, l]| FaceCoord::new(k, l)).collect()
    }
}

/// A named shape: `ball:n`, `par:m,n`, `rect:m,n`, `cyl:m,n` or `annulus:n,N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum ShapeSpec {
    Ball { n: i32 },
    Par { m: i32, n: i32 },
    Rect { m: i32, n: i32 },
    Cyl { m: i32, n: i32 },
    Annulus { n: i32, big_n: i32 },
}

/// A built shape.
#[derive(Clone, Debug)]
pub enum Shape {
    Planar(Domain),
    Cylinder(CylDomain),
    Annulus(Annulus),
}

impl ShapeSpec {
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        let bad = || DomainError::InvalidParameter(format!("unrecognised shape {s:?}"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<i32> =
            args.split(',').map(|a| a.trim().parse::<i32>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        Ok(match (kind.trim(), nums.as_slice()) {
            ("ball", &[n]) => ShapeSpec::Ball { n },
            ("par", &[m, n]) => ShapeSpec::Par { m, n },
            ("rect", &[m, n]) => ShapeSpec::Rect { m, n },
            ("cyl", &[m, n]) => ShapeSpec::Cyl { m, n },
            ("annulus", &[n, big_n]) => ShapeSpec::Annulus { n, big_n },
            _ => return Err(bad()),
        })
    }

    pub fn build(&self) -> Result<Shape, DomainError> {
        Ok(match *self {
            ShapeSpec::Ball { n } => Shape::Planar(build_ball(n)?),
            ShapeSpec::Par { m, n } => Shape::Planar(build_parallelogram(m, n)?),
            ShapeSpec::Rect { m, n } => Shape::Planar(build_rectangle(m, n)?),
            ShapeSpec::Cyl { m, n } => Shape::Cylinder(build_cylinder(m, n)?),
            ShapeSpec::Annulus { n, big_n } => Shape::Annulus(build_annulus(n, big_n)?),
        })
    }

    /// The size parameter reported in scan tables: the radius for balls and
    /// annuli (outer radius), the height otherwise.
    pub fn size(&self) -> i32 {
        match *self {
            ShapeSpec::Ball { n } | ShapeSpec::Par { n, .. } | ShapeSpec::Rect { n, .. } | ShapeSpec::Cyl { n, .. } => {
                n
            }
            ShapeSpec::Annulus { big_n, .. } => big_n,
        }
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ShapeSpec::Ball { n } => write!(f, "ball:{n}"),
            ShapeSpec::Par { m, n } => write!(f, "par:{m},{n}"),
            ShapeSpec::Rect { m, n } => write!(f, "rect:{m},{n}"),
            ShapeSpec::Cyl { m, n } => write!(f, "cyl:{m},{n}"),
            ShapeSpec::Annulus { n, big_n } => write!(f, "annulus:{n},{big_n}"),
        }
    }
}
