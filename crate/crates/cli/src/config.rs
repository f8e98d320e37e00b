//! Run configuration: an optional flat `key=value` file, overridden by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use hexloop::config::{BoundaryCondition, Space};
use hexloop::exact::EnumCaps;
use hexloop::lattice::{Shape, ShapeSpec};
use hexloop::mcmc::{ChainParams, Dynamics, Start};

/// Failure classes mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config file; exit 2.
    Usage(String),
    /// The run could not complete; exit 1.
    Run(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Run(m) => m,
        }
    }
}

pub fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

pub const KEYS: [&str; 19] = [
    "domain", "bc", "seed", "sweeps", "burnin", "thin", "chains", "workers", "out", "format", "cap", "dynamics",
    "start", "suite", "what", "kind", "sizes", "rho", "config",
];

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", no + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) || k == "config" {
            return Err(CliError::Usage(format!("config line {}: unknown key {k:?}", no + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Merges the config file (if any) under the flag values.
pub fn merge(flags: BTreeMap<String, String>) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = match flags.get("config") {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("reading {path}: {e}")))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    map.extend(flags.into_iter().filter(|(k, _)| k != "config"));
    Ok(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on. Two runs with equal configs produce
/// byte-identical primary output.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub domain: ShapeSpec,
    pub bc: String,
    pub seed: u64,
    pub sweeps: u64,
    pub burnin: u64,
    pub thin: u64,
    pub chains: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub cap: usize,
    pub dynamics: Option<Dynamics>,
    pub start: Start,
    pub suite: String,
    pub what: Option<String>,
    pub kind: Option<String>,
    pub sizes: Option<Vec<i32>>,
    pub rho: Option<f64>,
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, CliError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}"))),
    }
}

impl RunConfig {
    pub fn resolve(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let domain = ShapeSpec::parse(map.get("domain").map(String::as_str).unwrap_or("ball:2"))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let format = match map.get("format").map(String::as_str) {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            Some(f) => return Err(CliError::Usage(format!("unknown format {f:?}"))),
        };
        let dynamics = match map.get("dynamics").map(String::as_str) {
            None => None,
            Some("height") => Some(Dynamics::Height),
            Some("spin") => Some(Dynamics::Spin),
            Some(d) => return Err(CliError::Usage(format!("unknown dynamics {d:?}"))),
        };
        let start = match map.get("start").map(String::as_str) {
            None | Some("flat") => Start::Flat,
            Some("low") => Start::Low,
            Some("high") => Start::High,
            Some(s) => return Err(CliError::Usage(format!("unknown start {s:?}"))),
        };
        let sizes = match map.get("sizes") {
            None => None,
            Some(s) if s.trim().is_empty() => Some(Vec::new()),
            Some(s) => Some(
                s.split(',')
                    .map(|x| x.trim().parse::<i32>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Usage(format!("invalid size list {s:?}")))?,
            ),
        };
        let workers = match map.get("workers") {
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            Some(_) => get(map, "workers", 1usize)?,
        };
        if workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        let cfg = RunConfig {
            domain,
            bc: map.get("bc").cloned().unwrap_or_else(|| "pm".into()),
            seed: get(map, "seed", 1)?,
            sweeps: get(map, "sweeps", 10_000)?,
            burnin: get(map, "burnin", 1_000)?,
            thin: get(map, "thin", 1)?,
            chains: get(map, "chains", 4)?,
            workers,
            out: map.get("out").map(PathBuf::from),
            format,
            cap: get(map, "cap", EnumCaps::default().free_faces)?,
            dynamics,
            start,
            suite: map.get("suite").cloned().unwrap_or_else(|| "all".into()),
            what: map.get("what").cloned(),
            kind: map.get("kind").cloned(),
            sizes,
            rho: map.get("rho").map(|_| get(map, "rho", 0.0)).transpose()?,
        };
        if cfg.chains == 0 {
            return Err(CliError::Usage("chains must be at least 1".into()));
        }
        cfg.chain_params()?;
        Ok(cfg)
    }

    pub fn caps(&self) -> EnumCaps {
        EnumCaps::default().with_free_faces(self.cap)
    }

    pub fn chain_params(&self) -> Result<Vec<ChainParams>, CliError> {
        let base = ChainParams::new(self.sweeps, self.burnin, self.thin, self.seed, 0)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(base.family(self.chains))
    }

    /// The domain as a space for spin pairs; annuli are not sampled.
    pub fn space(&self) -> Result<Space, CliError> {
        match self.domain.build().map_err(run_err)? {
            Shape::Planar(d) => Ok(Space::Planar(d)),
            Shape::Cylinder(c) => Ok(Space::Cylinder(c)),
            Shape::Annulus(_) => Err(CliError::Run(format!("{} is not a sampling domain", self.domain))),
        }
    }

    pub fn boundary_condition(&self, space: &Space) -> Result<BoundaryCondition, CliError> {
        parse_bc(&self.bc, space)
    }
}

/// Named conditions, plus `four-arc:a,b,c,d` with indices into the
/// counter-clockwise cycle of boundary vertices that carry an interior edge.
pub fn parse_bc(s: &str, space: &Space) -> Result<BoundaryCondition, CliError> {
    if let Some(bc) = BoundaryCondition::parse(s) {
        return Ok(bc);
    }
    let Some(args) = s.strip_prefix("four-arc:") else {
        return Err(CliError::Usage(format!("unknown boundary condition {s:?}")));
    };
    let idx: Vec<usize> = args
        .split(',')
        .map(|a| a.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("invalid four-arc vertices {args:?}")))?;
    let &[a, b, c, d] = idx.as_slice() else {
        return Err(CliError::Usage("four-arc needs four vertex indices".into()));
    };
    let domain = space.planar().ok_or_else(|| CliError::Run("four-arc needs a planar domain".into()))?;
    let cycle: Vec<_> = domain.boundary_cycle().into_iter().filter(|&(v, _)| domain.vertex_id(v).is_some()).collect();
    let vertex = |i: usize| {
        cycle
            .get(i)
            .map(|&(v, _)| v)
            .ok_or_else(|| CliError::Run(format!("boundary vertex {i} out of range (cycle has {})", cycle.len())))
    };
    Ok(BoundaryCondition::FourArc([vertex(a)?, vertex(b)?, vertex(c)?, vertex(d)?]))
}
