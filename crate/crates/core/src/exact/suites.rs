//! Named groups of exhaustive checks with their expected outcomes. Negative
//! controls are expected to fail; a suite succeeds when every check has its
//! expected outcome.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::instances::{fkg_cases, four_arc_failure, four_arc_growth, four_arc_nested, markov_cases};
use super::{
    check_bijection, check_crossing_bounds, check_cylinder_identity, check_domination, check_domination_of,
    check_fkg_lattice, check_four_arc_bounds, check_four_arc_markov, check_monochrome, check_monochrome_annulus,
    check_spatial_markov, red_marginal, CheckReport, EnumCaps, ExactDist, ExactError,
};
use crate::config::{BoundaryCondition, Space, Spin};
use crate::lattice::{build_annulus, build_ball, build_parallelogram, build_rectangle, Domain};
use crate::observe::Endpoints;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Bijection,
    Fkg,
    Markov,
    Monochrome,
    Domination,
    FourArc,
    Crossing,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Bijection,
        Suite::Fkg,
        Suite::Markov,
        Suite::Monochrome,
        Suite::Domination,
        Suite::FourArc,
        Suite::Crossing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bijection => "bijection",
            Suite::Fkg => "fkg",
            Suite::Markov => "markov",
            Suite::Monochrome => "monochrome",
            Suite::Domination => "domination",
            Suite::FourArc => "fourarc",
            Suite::Crossing => "crossing",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

/// A check report with the outcome it is expected to have.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub suite: Suite,
    pub expect_pass: bool,
    #[serde(flatten)]
    pub report: CheckReport,
}

impl SuiteEntry {
    pub fn as_expected(&self) -> bool {
        self.report.pass == self.expect_pass
    }
}

/// Cap on free faces large enough for the annulus `Lambda_2 \ Lambda_1`.
pub const ANNULUS_FREE_FACES: usize = 20;

pub fn run_suite(suite: Suite, caps: &EnumCaps) -> Result<Vec<SuiteEntry>, ExactError> {
    let entry = |report: CheckReport, expect_pass: bool| SuiteEntry { suite, expect_pass, report };
    let mut out = Vec::new();
    match suite {
        Suite::Bijection => {
            for (name, d) in bijection_domains() {
                out.push(entry(check_bijection(&d, &name, caps)?, true));
            }
        }
        Suite::Fkg => {
            for case in fkg_cases() {
                let report = check_fkg_lattice(&case.space, &case.constraints, &case.name, caps)?;
                out.push(entry(report, case.kind != "disconnected-blue"));
            }
        }
        Suite::Markov => {
            let mut merged: Vec<(String, CheckReport)> = Vec::new();
            for (name, small, big, tau) in markov_cases() {
                let family = name.split(" blue").next().unwrap_or(&name).to_string();
                let report = check_spatial_markov(&small, &big, &tau, &family, caps)?;
                match merged.iter_mut().find(|(f, _)| *f == family) {
                    Some((_, r)) => *r = r.clone().merge(report),
                    None => merged.push((family, report)),
                }
            }
            out.extend(merged.into_iter().map(|(_, r)| entry(r, true)));
            out.push(entry(check_cylinder_identity(3, 2, caps)?, true));
        }
        Suite::Monochrome => {
            for m in 1..=3 {
                for n in 1..=3 {
                    let par = build_parallelogram(m, n).map_err(|e| ExactError::Inapplicable(e.to_string()))?;
                    out.push(entry(check_monochrome(&par, Endpoints::SideFaces, &format!("par {m}x{n}"), caps)?, true));
                }
            }
            let par = build_parallelogram(1, 1).map_err(|e| ExactError::Inapplicable(e.to_string()))?;
            let mut control = check_monochrome(&par, Endpoints::SideEdges, "par 1x1", caps)?;
            control.check = "monochrome corners-excluded".into();
            out.push(entry(control, false));
            let annulus = build_annulus(1, 2).map_err(|e| ExactError::Inapplicable(e.to_string()))?;
            let wide = caps.with_free_faces(caps.free_faces.max(ANNULUS_FREE_FACES));
            out.push(entry(check_monochrome_annulus(&annulus, "ball 2 minus ball 1", &wide)?, true));
        }
        Suite::Domination => {
            let chain = [
                (BoundaryCondition::RedMM, BoundaryCondition::RedMP),
                (BoundaryCondition::RedMP, BoundaryCondition::RedPM),
                (BoundaryCondition::RedPM, BoundaryCondition::RedPP),
            ];
            for (name, d) in domination_domains() {
                let space = Space::Planar(d);
                for (lo, hi) in &chain {
                    out.push(entry(check_domination(&space, lo, hi, &name, caps)?, true));
                }
            }
        }
        Suite::FourArc => {
            let inst = four_arc_failure();
            out.push(entry(check_four_arc_markov(&inst, caps)?, false));
            out.push(entry(check_four_arc_bounds(&inst, caps)?, true));
            let (small, big, arcs) = four_arc_growth();
            let inner = red_marginal(&Space::Planar(small.clone()), &BoundaryCondition::FourArc(arcs), caps)?;
            let outer = restrict(
                &red_marginal(&Space::Planar(big.clone()), &BoundaryCondition::FourArc(arcs), caps)?,
                &small,
                &big,
            );
            let mut r = check_domination_of(&outer, &inner, small.graph(), "ball 1 plus (2,0)", caps)?;
            r.check = "four-arc growth".into();
            out.push(entry(r, true));
            let (a, b) = four_arc_nested();
            let d = Space::Planar(small.clone());
            let nu_a = red_marginal(&d, &BoundaryCondition::FourArc(a), caps)?;
            let nu_b = red_marginal(&d, &BoundaryCondition::FourArc(b), caps)?;
            let mut r = check_domination_of(&nu_b, &nu_a, small.graph(), "ball 1", caps)?;
            r.check = "four-arc nested".into();
            out.push(entry(r, true));
            let mut r = check_domination_of(&nu_a, &nu_b, small.graph(), "ball 1", caps)?;
            r.check = "four-arc nested reversed".into();
            out.push(entry(r, false));
        }
        Suite::Crossing => {
            for n in 1..=3 {
                out.push(entry(check_crossing_bounds(n, caps)?, true));
            }
        }
    }
    Ok(out)
}

fn bijection_domains() -> Vec<(String, Domain)> {
    vec![
        ("ball 1".into(), build_ball(1).unwrap()),
        ("ball 2".into(), build_ball(2).unwrap()),
        ("par 2x2".into(), build_parallelogram(2, 2).unwrap()),
    ]
}

/// Domains whose red supports under every `RedXY` condition have at most
/// `2^12` elements.
pub fn domination_domains() -> Vec<(String, Domain)> {
    vec![
        ("ball 1".into(), build_ball(1).unwrap()),
        ("ball 2".into(), build_ball(2).unwrap()),
        ("par 2x2".into(), build_parallelogram(2, 2).unwrap()),
        ("par 3x3".into(), build_parallelogram(3, 3).unwrap()),
        ("par 4x4".into(), build_parallelogram(4, 4).unwrap()),
        ("rect 3x2".into(), build_rectangle(3, 2).unwrap()),
    ]
}

/// Red law of `big` restricted to the faces of `small`.
fn restrict(dist: &ExactDist<Vec<Spin>>, small: &Domain, big: &Domain) -> ExactDist<Vec<Spin>> {
    let map: Vec<usize> = small.faces().iter().map(|&f| big.index_of(f).expect("nested domains")).collect();
    dist.map(|red| map.iter().map(|&i| red[i]).collect::<Vec<Spin>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>(), Ok(s));
        }
        assert!("nonsense".parse::<Suite>().is_err());
    }

    #[test]
    fn quick_suites_meet_expectations() {
        let caps = EnumCaps::default();
        for suite in [Suite::Bijection, Suite::FourArc, Suite::Crossing] {
            let entries = run_suite(suite, &caps).unwrap();
            assert!(!entries.is_empty());
            for e in &entries {
                assert!(e.as_expected(), "{suite}: {:?}", e.report);
            }
        }
    }
}
