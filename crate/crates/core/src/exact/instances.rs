//! Small instances used by the structural checks: FKG test domains, the
//! nested balls for the Markov property, four-arc instances, and negative
//! controls located by bounded search.

use crate::config::{BoundaryCondition, Constraints, Space, Spin, SpinPair};
use crate::lattice::{build_ball, build_parallelogram, build_rectangle, validate_domain, Domain, FaceCoord, HexVertex};

use super::{check_fkg_lattice, check_four_arc_markov, with_blue_fixed, EnumCaps, FourArcInstance};

/// A domain with constraints for the FKG lattice check.
#[derive(Clone, Debug)]
pub struct FkgCase {
    pub name: String,
    /// `free`, `red-pinned`, `connected-blue` or `disconnected-blue`.
    pub kind: &'static str,
    pub space: Space,
    pub constraints: Constraints,
}

fn planar(d: &Domain) -> Space {
    Space::Planar(d.clone())
}

fn idx(d: &Domain, k: i32, l: i32) -> usize {
    d.index_of(FaceCoord::new(k, l)).expect("face in domain")
}

fn case(name: &str, kind: &'static str, d: &Domain, constraints: Constraints) -> FkgCase {
    FkgCase { name: name.into(), kind, space: planar(d), constraints }
}

fn compiled(d: &Domain, bc: BoundaryCondition) -> Constraints {
    Constraints::compile(&planar(d), &bc).expect("boundary condition applies")
}

/// Test domains with at most 12 free faces under free, red-pinned and
/// connected blue conditionings.
pub fn fkg_cases() -> Vec<FkgCase> {
    let ball1 = build_ball(1).unwrap();
    let ball2 = build_ball(2).unwrap();
    let par22 = build_parallelogram(2, 2).unwrap();
    let par21 = build_parallelogram(2, 1).unwrap();
    let par32 = build_parallelogram(3, 2).unwrap();
    let par44 = build_parallelogram(4, 4).unwrap();
    let rect = build_rectangle(3, 2).unwrap();
    let free = |d: &Domain| Constraints::free(d.num_faces());
    let mut out = vec![
        case("ball 1", "free", &ball1, free(&ball1)),
        case("par 2x1", "free", &par21, free(&par21)),
        case("par 2x2", "free", &par22, free(&par22)),
        case("par 3x2", "free", &par32, free(&par32)),
        case("ball 2 pp", "red-pinned", &ball2, compiled(&ball2, BoundaryCondition::RedPP)),
        case("ball 2 mm", "red-pinned", &ball2, compiled(&ball2, BoundaryCondition::RedMM)),
        case("ball 2 pm", "red-pinned", &ball2, compiled(&ball2, BoundaryCondition::RedPM)),
        case("par 4x4 pp", "red-pinned", &par44, compiled(&par44, BoundaryCondition::RedPP)),
        case("rect 3x2 dobrushin", "red-pinned", &rect, compiled(&rect, BoundaryCondition::DobrushinRect)),
        case(
            "ball 1 pinned",
            "red-pinned",
            &ball1,
            compiled(
                &ball1,
                BoundaryCondition::Pinned(vec![(FaceCoord::new(1, 0), Spin::M), (FaceCoord::new(-1, 0), Spin::P)]),
            ),
        ),
        case(
            "ball 1 blue ring",
            "connected-blue",
            &ball1,
            with_blue_fixed(free(&ball1), &ball1.inner_boundary(), Spin::P),
        ),
        case(
            "ball 2 blue pair",
            "connected-blue",
            &ball2,
            with_blue_fixed(
                compiled(&ball2, BoundaryCondition::RedPP),
                &[idx(&ball2, 0, 0), idx(&ball2, 1, 0)],
                Spin::P,
            ),
        ),
        case(
            "par 3x2 blue bottom",
            "connected-blue",
            &par32,
            with_blue_fixed(free(&par32), &[idx(&par32, 0, 0), idx(&par32, 1, 0), idx(&par32, 2, 0)], Spin::P),
        ),
    ];
    out.push(fkg_negative_control());
    out
}

/// Blue fixed to plus on two faces that are not adjacent, on the first domain
/// of a small family where the lattice condition fails. Returns the case and
/// the number of candidates tried.
pub fn search_fkg_negative_control(caps: &EnumCaps) -> Option<(FkgCase, usize)> {
    let mut domains: Vec<(String, Domain)> = Vec::new();
    for (m, n) in [(1, 1), (2, 1), (1, 2), (3, 1), (2, 2), (4, 1)] {
        domains.push((format!("par {m}x{n}"), build_parallelogram(m, n).unwrap()));
    }
    domains.push(("ball 1".into(), build_ball(1).unwrap()));
    let mut tried = 0;
    for (name, d) in domains {
        let n = d.num_faces();
        for a in 0..n {
            for b in a + 1..n {
                if d.neighbors(a).contains(&b) {
                    continue;
                }
                tried += 1;
                let constraints = with_blue_fixed(Constraints::free(n), &[a, b], Spin::P);
                let space = planar(&d);
                let report = check_fkg_lattice(&space, &constraints, &name, caps).ok()?;
                if !report.pass {
                    let label = format!("{name} blue on {} {}", d.face(a), d.face(b));
                    return Some((FkgCase { name: label, kind: "disconnected-blue", space, constraints }, tried));
                }
            }
        }
    }
    None
}

/// Frozen result of `search_fkg_negative_control`.
pub fn fkg_negative_control() -> FkgCase {
    let d = build_parallelogram(2, 1).unwrap();
    let a = idx(&d, 0, 0);
    let b = idx(&d, 2, 1);
    FkgCase {
        name: "par 2x1 blue on (0,0) (2,1)".into(),
        kind: "disconnected-blue",
        constraints: with_blue_fixed(Constraints::free(d.num_faces()), &[a, b], Spin::P),
        space: planar(&d),
    }
}

/// `Lambda_1` inside `Lambda_2` with `tau` for both cases of the Markov
/// property: red plus everywhere outside the centre with every blue on the
/// outer ring, and red plus on the inner ring, minus on the outer ring with
/// constant blue.
pub fn markov_cases() -> Vec<(String, Domain, Domain, SpinPair)> {
    let small = build_ball(1).unwrap();
    let big = build_ball(2).unwrap();
    let ring2: Vec<usize> = (0..big.num_faces()).filter(|&i| !small.contains(big.face(i))).collect();
    let mut out = Vec::new();
    for mask in 0..1u32 << ring2.len() {
        let mut tau = SpinPair::constant(big.num_faces(), Spin::P, Spin::P);
        for (b, &i) in ring2.iter().enumerate() {
            tau.blue[i] = Spin::from_bool(mask >> b & 1 == 1);
        }
        out.push((format!("ball 1 in ball 2 pp blue#{mask}"), small.clone(), big.clone(), tau));
    }
    for s in [Spin::P, Spin::M] {
        let mut tau = SpinPair::constant(big.num_faces(), Spin::P, s);
        for &i in &ring2 {
            tau.red[i] = Spin::M;
        }
        out.push((format!("ball 1 in ball 2 pm blue {}", s.symbol()), small.clone(), big.clone(), tau));
    }
    out
}

/// The six boundary vertices of `Lambda_1` where two ring faces meet, in
/// counter-clockwise order.
pub fn ball_one_corners() -> Vec<HexVertex> {
    let d = build_ball(1).unwrap();
    d.boundary_cycle()
        .into_iter()
        .map(|(v, _)| v)
        .filter(|&v| d.vertex_id(v).is_some_and(|id| d.is_boundary_vertex(id)))
        .collect()
}

/// Four-arc instances on `Lambda_1` inside `Lambda_2`, all arc choices and
/// all red spins on the outer ring, in a fixed order. Returns the first
/// instance whose conditional law differs from the four-arc law.
pub fn search_four_arc_failure(caps: &EnumCaps) -> Option<(FourArcInstance, usize)> {
    let small = build_ball(1).unwrap();
    let big = build_ball(2).unwrap();
    let corners = ball_one_corners();
    let ring2: Vec<usize> = (0..big.num_faces()).filter(|&i| !small.contains(big.face(i))).collect();
    let mut tried = 0;
    for a in 0..6 {
        for b in a + 1..6 {
            for c in b + 1..6 {
                for e in c + 1..6 {
                    let arcs = [corners[a], corners[b], corners[c], corners[e]];
                    let Ok(imposed) = crate::config::four_arc_spins(&small, &arcs) else { continue };
                    let mut base = vec![Spin::P; big.num_faces()];
                    for i in small.inner_boundary() {
                        base[idx(&big, small.face(i).k, small.face(i).l)] = imposed[i].expect("ring is imposed");
                    }
                    for mask in 0..1u32 << ring2.len() {
                        tried += 1;
                        let mut tau = base.clone();
                        for (bit, &i) in ring2.iter().enumerate() {
                            tau[i] = Spin::from_bool(mask >> bit & 1 == 1);
                        }
                        let inst = FourArcInstance {
                            name: format!("ball 1 in ball 2 arcs {a}{b}{c}{e} ring#{mask}"),
                            small: small.clone(),
                            big: big.clone(),
                            arcs,
                            tau_red: tau,
                        };
                        if !check_four_arc_markov(&inst, caps).ok()?.pass {
                            return Some((inst, tried));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Frozen result of `search_four_arc_failure`: arcs on corners 0..4 and
/// the outer ring minus except its second face.
pub fn four_arc_failure() -> FourArcInstance {
    let small = build_ball(1).unwrap();
    let big = build_ball(2).unwrap();
    let corners = ball_one_corners();
    let arcs = [corners[0], corners[1], corners[2], corners[3]];
    let imposed = crate::config::four_arc_spins(&small, &arcs).unwrap();
    let ring2: Vec<usize> = (0..big.num_faces()).filter(|&i| !small.contains(big.face(i))).collect();
    let mut tau = vec![Spin::M; big.num_faces()];
    for i in small.inner_boundary() {
        tau[idx(&big, small.face(i).k, small.face(i).l)] = imposed[i].unwrap();
    }
    tau[ring2[1]] = Spin::P;
    FourArcInstance { name: "ball 1 in ball 2 arcs 0123 ring#2".into(), small, big, arcs, tau_red: tau }
}

/// `Lambda_1` and `Lambda_1` plus the face `(2,0)`, sharing the marked
/// vertices. The face `(1,0)` lies on a plus arc, so the two minus arcs
/// coincide.
pub fn four_arc_growth() -> (Domain, Domain, [HexVertex; 4]) {
    let small = build_ball(1).unwrap();
    let mut faces = small.faces().to_vec();
    faces.push(FaceCoord::new(2, 0));
    let big = validate_domain(&faces).unwrap();
    let corners = ball_one_corners();
    let arcs = plus_arc_through(&small, &corners, FaceCoord::new(1, 0));
    (small, big, arcs)
}

/// Marks four of the six corners so that `face` lies on plus arc 0.
fn plus_arc_through(d: &Domain, corners: &[HexVertex], face: FaceCoord) -> [HexVertex; 4] {
    for a in 0..6 {
        let arcs = [corners[a], corners[(a + 1) % 6], corners[(a + 3) % 6], corners[(a + 4) % 6]];
        if let Ok(spins) = crate::config::four_arc_spins(d, &arcs) {
            if spins[d.index_of(face).unwrap()] == Some(Spin::P)
                && spins.iter().filter(|s| **s == Some(Spin::P)).count() == 2
            {
                return arcs;
            }
        }
    }
    panic!("no arc placement puts {face} on a plus arc");
}

/// Two placements on `Lambda_1` with the minus arcs of the second containing
/// those of the first.
pub fn four_arc_nested() -> ([HexVertex; 4], [HexVertex; 4]) {
    let c = ball_one_corners();
    ([c[0], c[2], c[3], c[5]], [c[1], c[2], c[3], c[5]])
}
