//! Event detectors: crossings of parallelograms and rectangles, circuits in
//! annuli, and loops surrounding a face or a region.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{surrounding_loop_ids, Loop, Spin};
use crate::lattice::{Annulus, Domain, FaceCoord, Side, NEIGHBOR_OFFSETS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DetectError {
    #[error("region has no side labels")]
    Unlabeled,
    #[error("ray direction must be in 0..6, got {0}")]
    BadRay(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Left side to right side.
    Horizontal,
    /// Bottom side to top side.
    Vertical,
}

impl Direction {
    fn sides(self) -> (Side, Side) {
        match self {
            Direction::Horizontal => (Side::Left, Side::Right),
            Direction::Vertical => (Side::Bottom, Side::Top),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingMode {
    /// A path of faces of the given spin.
    Simple,
    /// A path of edges whose two faces both carry the given spin.
    Double,
}

/// Which boundary vertices may end a double crossing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoints {
    /// Both boundary edges at the vertex lie on the side; corners are excluded.
    #[default]
    SideEdges,
    /// The vertex lies on a face of the side's inner layer, so vertices of
    /// corner faces count for both sides.
    SideFaces,
}

/// Precomputed endpoints for one crossing event of a labelled region.
#[derive(Clone, Debug)]
pub struct CrossingDetector {
    mode: CrossingMode,
    starts: Vec<usize>,
    is_target: Vec<bool>,
}

impl CrossingDetector {
    pub fn new(region: &Domain, dir: Direction, mode: CrossingMode) -> Result<Self, DetectError> {
        Self::with_endpoints(region, dir, mode, Endpoints::SideEdges)
    }

    pub fn with_endpoints(
        region: &Domain,
        dir: Direction,
        mode: CrossingMode,
        endpoints: Endpoints,
    ) -> Result<Self, DetectError> {
        if !region.has_sides() {
            return Err(DetectError::Unlabeled);
        }
        let (from, to) = dir.sides();
        let (starts, targets): (Vec<usize>, Vec<usize>) = match mode {
            CrossingMode::Simple => (region.side_inner_faces(from), region.side_inner_faces(to)),
            CrossingMode::Double => {
                let on = |s: Side| -> Vec<usize> {
                    let faces = region.side_inner_faces(s);
                    (0..region.vertices().len())
                        .filter(|&v| match endpoints {
                            Endpoints::SideEdges => region.boundary_vertex_side(v) == Some(s),
                            Endpoints::SideFaces => {
                                region.is_boundary_vertex(v)
                                    && region.vertices()[v]
                                        .faces()
                                        .iter()
                                        .any(|&f| region.index_of(f).is_some_and(|i| faces.contains(&i)))
                            }
                        })
                        .collect()
                };
                (on(from), on(to))
            }
        };
        let size = match mode {
            CrossingMode::Simple => region.num_faces(),
            CrossingMode::Double => region.vertices().len(),
        };
        let mut is_target = vec![false; size];
        for t in targets {
            is_target[t] = true;
        }
        Ok(CrossingDetector { mode, starts, is_target })
    }

    /// `sigma` is indexed by the faces of the region.
    pub fn detect(&self, region: &Domain, sigma: &[Spin], sign: Spin) -> bool {
        let mut seen = vec![false; self.is_target.len()];
        let mut stack = Vec::new();
        match self.mode {
            CrossingMode::Simple => {
                for &s in &self.starts {
                    if sigma[s] == sign && !seen[s] {
                        seen[s] = true;
                        stack.push(s);
                    }
                }
                while let Some(a) = stack.pop() {
                    if self.is_target[a] {
                        return true;
                    }
                    for &b in region.neighbors(a) {
                        if sigma[b] == sign && !seen[b] {
                            seen[b] = true;
                            stack.push(b);
                        }
                    }
                }
            }
            CrossingMode::Double => {
                let ok = |e: usize| {
                    let (a, b) = region.edges()[e];
                    sigma[a] == sign && sigma[b] == sign
                };
                for &s in &self.starts {
                    if !seen[s] && region.vertex_edges(s).iter().any(|&e| ok(e)) {
                        seen[s] = true;
                        stack.push(s);
                    }
                }
                while let Some(v) = stack.pop() {
                    if self.is_target[v] {
                        return true;
                    }
                    for &e in region.vertex_edges(v) {
                        if ok(e) {
                            let [p, q] = region.edge_ends(e);
                            let w = if p == v { q } else { p };
                            if !seen[w] {
                                seen[w] = true;
                                stack.push(w);
                            }
                        }
                    }
                }
            }
        }
        false
    }
}

/// Whether `sigma` (indexed by the region's faces) has a crossing of the
/// region in the given direction. Double crossings start and end at boundary
/// vertices whose two boundary edges lie on the same side.
pub fn crossing_exists(
    region: &Domain,
    sigma: &[Spin],
    dir: Direction,
    mode: CrossingMode,
    sign: Spin,
) -> Result<bool, DetectError> {
    Ok(CrossingDetector::new(region, dir, mode)?.detect(region, sigma, sign))
}

/// Detects circuits of double-sign edges surrounding the hole of an annulus.
///
/// Edges with both faces in the hole are excluded. Vertices are lifted to two
/// sheets and an edge crossing the ray from the origin swaps sheets; a
/// circuit winding around the hole exists iff some vertex is connected to its
/// copy on the other sheet.
#[derive(Clone, Debug)]
pub struct CircuitDetector {
    edges: Vec<usize>,
    crosses: Vec<bool>,
    num_vertices: usize,
}

impl CircuitDetector {
    pub fn new(annulus: &Annulus) -> Self {
        Self::with_ray(annulus, 0).expect("ray 0 is valid")
    }

    /// `ray` selects one of the six lattice directions for the cut.
    pub fn with_ray(annulus: &Annulus, ray: usize) -> Result<Self, DetectError> {
        if ray >= 6 {
            return Err(DetectError::BadRay(ray));
        }
        let d = annulus.outer();
        let (dk, dl) = NEIGHBOR_OFFSETS[ray];
        let mut crossed = vec![false; d.num_edges()];
        for j in 0.. {
            let a = FaceCoord::new(j * dk, j * dl);
            let b = FaceCoord::new((j + 1) * dk, (j + 1) * dl);
            match (d.index_of(a), d.index_of(b)) {
                (Some(i), Some(k)) => crossed[d.edge_between(i, k).expect("adjacent")] = true,
                _ => break,
            }
        }
        let hole = annulus.hole_mask();
        let edges: Vec<usize> =
            (0..d.num_edges()).filter(|&e| !(hole[d.edges()[e].0] && hole[d.edges()[e].1])).collect();
        let crosses = edges.iter().map(|&e| crossed[e]).collect();
        Ok(CircuitDetector { edges, crosses, num_vertices: d.vertices().len() })
    }

    /// `sigma` is indexed by the faces of the outer ball.
    pub fn detect(&self, annulus: &Annulus, sigma: &[Spin], sign: Spin) -> bool {
        let d = annulus.outer();
        let n = self.num_vertices;
        let mut uf = UnionFind::new(2 * n);
        let mut touched = Vec::new();
        for (&e, &cross) in self.edges.iter().zip(&self.crosses) {
            let (a, b) = d.edges()[e];
            if sigma[a] != sign || sigma[b] != sign {
                continue;
            }
            let [p, q] = d.edge_ends(e);
            if cross {
                uf.union(p, q + n);
                uf.union(p + n, q);
            } else {
                uf.union(p, q);
                uf.union(p + n, q + n);
            }
            touched.push(p);
        }
        touched.into_iter().any(|v| uf.equiv(v, v + n))
    }
}

pub fn circuit_double_exists(annulus: &Annulus, sigma: &[Spin], sign: Spin) -> bool {
    CircuitDetector::new(annulus).detect(annulus, sigma, sign)
}

/// Whether a double-sign edge path joins a vertex of the hole's closure to
/// the outer boundary. Edges with both faces in the hole are excluded; the
/// path starts at a vertex touching a hole face and ends at a boundary vertex
/// of the outer ball.
pub fn double_path_to_outside(annulus: &Annulus, sigma: &[Spin], sign: Spin) -> bool {
    let d = annulus.outer();
    let hole = annulus.hole_mask();
    let allowed = |e: usize| {
        let (a, b) = d.edges()[e];
        !(hole[a] && hole[b]) && sigma[a] == sign && sigma[b] == sign
    };
    let mut seen = vec![false; d.vertices().len()];
    let mut stack = Vec::new();
    for v in 0..d.vertices().len() {
        if d.vertices()[v].faces().iter().any(|&f| d.index_of(f).is_some_and(|i| hole[i])) {
            seen[v] = true;
            stack.push(v);
        }
    }
    while let Some(v) = stack.pop() {
        if d.is_boundary_vertex(v) {
            return true;
        }
        for &e in d.vertex_edges(v) {
            if allowed(e) {
                let [p, q] = d.edge_ends(e);
                let w = if p == v { q } else { p };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    false
}

/// Number of loops surrounding face `u`.
pub fn count_surrounding_loops(d: &Domain, loops: &[Loop], u: FaceCoord) -> usize {
    surrounding_loop_ids(d, loops, u).len()
}

/// Number of loops surrounding every face of `region` (a connected face set
/// given as a mask over the domain, containing `anchor`).
pub fn loops_surrounding_region(d: &Domain, loops: &[Loop], region: &[bool], anchor: FaceCoord) -> usize {
    surrounding_loop_ids(d, loops, anchor)
        .into_iter()
        .filter(|&i| loops[i].edges.iter().all(|&e| !(region[d.edges()[e].0] && region[d.edges()[e].1])))
        .count()
}

/// At least two loops each surrounding every face of the region.
pub fn two_loops_surrounding(d: &Domain, loops: &[Loop], region: &[bool], anchor: FaceCoord) -> bool {
    loops_surrounding_region(d, loops, region, anchor) >= 2
}

/// Counts loops crossing the ray from a fixed face, tracing only the loops
/// that meet the ray. Reusable across samples without reallocating.
#[derive(Clone, Debug)]
pub struct RayLoopCounter {
    ray: Vec<usize>,
    on_ray: Vec<bool>,
    region_edge: Vec<bool>,
    stamp: Vec<u32>,
    round: u32,
}

/// Loops met by the ray: how many surround the anchor, and how many of those
/// avoid the region's interior edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RayLoopCount {
    pub surrounding: usize,
    pub surrounding_region: usize,
}

impl RayLoopCounter {
    /// `region` marks faces of a connected region containing `anchor`.
    pub fn new(d: &Domain, anchor: FaceCoord, region: Option<&[bool]>) -> Self {
        let ray = d.ray_edges(anchor);
        let mut on_ray = vec![false; d.num_edges()];
        for &e in &ray {
            on_ray[e] = true;
        }
        let region_edge = match region {
            Some(r) => d.edges().iter().map(|&(a, b)| r[a] && r[b]).collect(),
            None => vec![false; d.num_edges()],
        };
        RayLoopCounter { ray, on_ray, region_edge, stamp: vec![0; d.num_edges()], round: 0 }
    }

    /// `in_omega(e)` tells whether interior edge `e` belongs to the
    /// configuration.
    pub fn count(&mut self, d: &Domain, in_omega: impl Fn(usize) -> bool) -> RayLoopCount {
        self.round = self.round.wrapping_add(1);
        if self.round == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.round = 1;
        }
        let mut out = RayLoopCount::default();
        for i in 0..self.ray.len() {
            let start = self.ray[i];
            if !in_omega(start) || self.stamp[start] == self.round {
                continue;
            }
            let mut parity = false;
            let mut inside_region = false;
            let mut e = start;
            let mut v = d.edge_ends(start)[0];
            loop {
                self.stamp[e] = self.round;
                parity ^= self.on_ray[e];
                inside_region |= self.region_edge[e];
                let [p, q] = d.edge_ends(e);
                v = if p == v { q } else { p };
                match d.vertex_edges(v).iter().copied().find(|&f| f != e && in_omega(f)) {
                    Some(next) if next != start => e = next,
                    _ => break,
                }
            }
            if parity {
                out.surrounding += 1;
                if !inside_region {
                    out.surrounding_region += 1;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{decompose_loops, validate_height, validate_loops};
    use crate::lattice::{build_annulus, build_ball, build_parallelogram, face_distance};

    #[test]
    fn parallelogram_crossings() {
        let d = build_parallelogram(1, 1).unwrap();
        let p = vec![Spin::P; 4];
        let m = vec![Spin::M; 4];
        assert!(crossing_exists(&d, &p, Direction::Horizontal, CrossingMode::Double, Spin::P).unwrap());
        assert!(!crossing_exists(&d, &m, Direction::Horizontal, CrossingMode::Double, Spin::P).unwrap());
        assert!(crossing_exists(&d, &p, Direction::Vertical, CrossingMode::Simple, Spin::P).unwrap());

        let d = build_parallelogram(2, 2).unwrap();
        // The anti-diagonal k + l = 2 blocks every left-right face path.
        let sigma: Vec<Spin> = d.faces().iter().map(|f| Spin::from_bool(f.k + f.l != 2)).collect();
        assert!(!crossing_exists(&d, &sigma, Direction::Horizontal, CrossingMode::Simple, Spin::P).unwrap());
        assert!(crossing_exists(&d, &sigma, Direction::Horizontal, CrossingMode::Simple, Spin::M).is_ok());
        let ball = build_ball(2).unwrap();
        assert_eq!(
            crossing_exists(&ball, &vec![Spin::P; 19], Direction::Vertical, CrossingMode::Simple, Spin::P),
            Err(DetectError::Unlabeled)
        );
    }

    #[test]
    fn annulus_circuits() {
        let a = build_annulus(1, 2).unwrap();
        assert!(circuit_double_exists(&a, &vec![Spin::P; 19], Spin::P));
        assert!(!circuit_double_exists(&a, &vec![Spin::M; 19], Spin::P));
        // Every face of the second ring touches the only circuits of this
        // thin annulus; a wider one can go around.
        let mut sigma = vec![Spin::P; 19];
        sigma[a.outer().index_of(FaceCoord::new(1, 1)).unwrap()] = Spin::M;
        assert!(!circuit_double_exists(&a, &sigma, Spin::P));
        let wide = build_annulus(1, 3).unwrap();
        let mut sigma = vec![Spin::P; 37];
        sigma[wide.outer().index_of(FaceCoord::new(3, 0)).unwrap()] = Spin::M;
        sigma[wide.outer().index_of(FaceCoord::new(-3, 3)).unwrap()] = Spin::M;
        assert!(circuit_double_exists(&wide, &sigma, Spin::P));
        // A minus face on the first ring cuts every circuit.
        let mut sigma = vec![Spin::P; 19];
        sigma[a.outer().index_of(FaceCoord::new(1, 0)).unwrap()] = Spin::M;
        sigma[a.outer().index_of(FaceCoord::new(2, 0)).unwrap()] = Spin::M;
        sigma[a.outer().index_of(FaceCoord::new(2, -1)).unwrap()] = Spin::M;
        assert!(!circuit_double_exists(&a, &sigma, Spin::P));
        assert!(CircuitDetector::with_ray(&a, 6).is_err());
    }

    #[test]
    fn loop_counts_on_nested_configuration() {
        let d = build_ball(2).unwrap();
        let values = d.faces().iter().map(|&f| 2 - face_distance(f, FaceCoord::ORIGIN)).collect();
        let phi = validate_height(&d, values).unwrap();
        let edges: Vec<usize> =
            (0..d.num_edges()).filter(|&e| phi.get(d.edges()[e].0) != phi.get(d.edges()[e].1)).collect();
        let omega = validate_loops(&d, &edges).unwrap();
        let loops = decompose_loops(&d, &omega);
        assert_eq!(count_surrounding_loops(&d, &loops, FaceCoord::ORIGIN), 2);
        let center: Vec<bool> = d.faces().iter().map(|&f| f == FaceCoord::ORIGIN).collect();
        assert!(two_loops_surrounding(&d, &loops, &center, FaceCoord::ORIGIN));
        let ball1: Vec<bool> = d.faces().iter().map(|&f| face_distance(f, FaceCoord::ORIGIN) <= 1).collect();
        assert_eq!(loops_surrounding_region(&d, &loops, &ball1, FaceCoord::ORIGIN), 1);

        let mut counter = RayLoopCounter::new(&d, FaceCoord::ORIGIN, Some(&ball1));
        for _ in 0..3 {
            let c = counter.count(&d, |e| omega.contains(e));
            assert_eq!(c, RayLoopCount { surrounding: 2, surrounding_region: 1 });
        }

        let small = build_ball(1).unwrap();
        let c = small.index_of(FaceCoord::ORIGIN).unwrap();
        let hex: Vec<usize> = small.neighbors(c).iter().map(|&j| small.edge_between(c, j).unwrap()).collect();
        let loops = decompose_loops(&small, &validate_loops(&small, &hex).unwrap());
        assert_eq!(count_surrounding_loops(&small, &loops, FaceCoord::ORIGIN), 1);
        let center: Vec<bool> = small.faces().iter().map(|&f| f == FaceCoord::ORIGIN).collect();
        assert!(!two_loops_surrounding(&small, &loops, &center, FaceCoord::ORIGIN));
    }
}
