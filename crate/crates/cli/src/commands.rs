use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hexloop::config::{BoundaryCondition, Space, Spin};
use hexloop::exact::suites::{run_suite, Suite, SuiteEntry};
use hexloop::exact::{enumerate_heights, enumerate_pairs, loop_measure, ExactError, LoopWeights};
use hexloop::lattice::{build_ball, build_parallelogram, FaceCoord, ShapeSpec};
use hexloop::mcmc::{convergence_diagnostics, spool_record, Chain, Dynamics, State, Target};
use hexloop::observe::{alpha_hat, estimate, pooled, Color, Direction, EventEstimate, EventSpec, SeriesSummary};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{run_err, CliError, Format, RunConfig};

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::Run(format!("writing {}: {e}", path.display()))),
        None => io::stdout().write_all(bytes).map_err(run_err),
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s.into_bytes()
}

fn json_only(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    if cfg.format == Some(Format::Csv) {
        return Err(CliError::Usage(format!("{command} writes JSON only")));
    }
    Ok(())
}

fn exact_err(e: ExactError) -> CliError {
    CliError::Run(e.to_string())
}

pub fn verify(cfg: &RunConfig) -> Result<bool, CliError> {
    json_only(cfg, "verify")?;
    let suites: Vec<Suite> = if cfg.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        cfg.suite.split(',').map(|s| s.trim().parse().map_err(CliError::Usage)).collect::<Result<_, _>>()?
    };
    let caps = cfg.caps();
    let mut entries: Vec<SuiteEntry> = Vec::new();
    for suite in suites {
        let found = run_suite(suite, &caps).map_err(exact_err)?;
        for e in &found {
            let status = if e.as_expected() { "ok" } else { "UNEXPECTED" };
            let outcome = if e.report.pass { "pass" } else { "fail" };
            eprintln!("{status:<10} {suite:<10} {} [{}]: {outcome}", e.report.check, e.report.domain);
        }
        entries.extend(found);
    }
    let all_ok = entries.iter().all(SuiteEntry::as_expected);
    let report = serde_json::to_value(&entries).map_err(run_err)?;
    write_output(cfg.out.as_deref(), &json_bytes(&report))?;
    Ok(all_ok)
}

pub fn enumerate(cfg: &RunConfig) -> Result<(), CliError> {
    json_only(cfg, "enumerate")?;
    let what = cfg.what.as_deref().ok_or_else(|| CliError::Usage("enumerate needs --what".into()))?;
    let caps = cfg.caps();
    let space = cfg.space()?;
    let planar = || space.planar().ok_or_else(|| CliError::Run(format!("{what} need a planar domain")));
    let (count, z, records, bc): (usize, String, Vec<Value>, Option<&str>) = match what {
        "heights" => {
            let d = planar()?;
            let hs = enumerate_heights(d, &caps).map_err(exact_err)?;
            let records = hs.iter().map(|h| h.to_json(d)).collect();
            (hs.len(), hs.len().to_string(), records, None)
        }
        "loops" => {
            let d = planar()?;
            let m = loop_measure(d, &LoopWeights::default(), &caps).map_err(exact_err)?;
            let records =
                m.items().iter().map(|(w, wt)| json!({ "loops": w.to_json(d), "weight": wt.to_string() })).collect();
            (m.len(), m.total().to_string(), records, None)
        }
        "pairs" => {
            let bc = cfg.boundary_condition(&space)?;
            let dist = enumerate_pairs(&space, &bc, &caps).map_err(exact_err)?;
            let g = space.graph();
            let records =
                dist.items().iter().map(|(p, wt)| json!({ "pair": p.to_json(g), "weight": wt.to_string() })).collect();
            (dist.len(), dist.total().to_string(), records, Some(cfg.bc.as_str()))
        }
        other => return Err(CliError::Usage(format!("unknown enumeration {other:?}"))),
    };
    let out = json!({
        "domain": cfg.domain.to_string(),
        "what": what,
        "bc": bc,
        "count": count,
        "z": z,
        "records": records,
    });
    write_output(cfg.out.as_deref(), &json_bytes(&out))
}

/// One scan row before it is run.
struct Job {
    n: i32,
    bc: String,
    rho: Option<f64>,
    run: Box<dyn Fn() -> Result<EventEstimate, CliError> + Sync>,
}

pub const CSV_HEADER: [&str; 8] = ["event", "n", "bc", "rho", "estimate", "stderr", "count", "seed"];

fn scan_jobs(cfg: &RunConfig, kind: &str, sizes: &[i32]) -> Result<Vec<Job>, CliError> {
    let chains = cfg.chain_params()?;
    let dynamics = cfg.dynamics.unwrap_or(Dynamics::Height);
    let mut jobs = Vec::new();
    for &n in sizes {
        if kind == "alpha" {
            let rho = cfg.rho.unwrap_or(4.0);
            if rho.fract() != 0.0 {
                return Err(CliError::Usage(format!("alpha needs an integer rho, got {rho}")));
            }
            let rho_i = rho as i32;
            if n < 3 || rho_i <= 2 {
                return Err(CliError::Run(format!("alpha at n = {n}, rho = {rho_i} is infeasible")));
            }
            let chains = chains.clone();
            jobs.push(Job {
                n,
                bc: "mm".into(),
                rho: Some(rho),
                run: Box::new(move || alpha_hat(n, rho_i, &chains).map_err(run_err)),
            });
            continue;
        }
        let (domain, event, rho) = match kind {
            "variance" => {
                (ShapeSpec::Ball { n }, EventSpec::HeightDiffSq { x: FaceCoord::ORIGIN, y: FaceCoord::new(n, 0) }, None)
            }
            "loopcount" => (ShapeSpec::Ball { n }, EventSpec::SurroundLoopCount { face: FaceCoord::ORIGIN }, None),
            "circuit" => {
                let rho = cfg.rho.unwrap_or(0.5);
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(CliError::Usage(format!("circuit needs 0 < rho < 1, got {rho}")));
                }
                let radius = (rho * n as f64).floor() as i32;
                if n < 1 || radius >= n {
                    return Err(CliError::Run(format!("no room for a loop around ball {radius} in ball {n}")));
                }
                (ShapeSpec::Ball { n }, EventSpec::LoopSurrounding { radius }, Some(rho))
            }
            "crossing" => {
                let region = ShapeSpec::Par { m: n, n };
                let event = EventSpec::CrossingDouble {
                    region,
                    direction: Direction::Horizontal,
                    color: Color::Red,
                    sign: Spin::P,
                };
                (region, event, None)
            }
            other => return Err(CliError::Usage(format!("unknown scan kind {other:?}"))),
        };
        let d = match domain {
            ShapeSpec::Ball { n } => build_ball(n),
            ShapeSpec::Par { m, n } => build_parallelogram(m, n),
            _ => unreachable!("scan domains are balls and parallelograms"),
        }
        .map_err(|e| CliError::Run(format!("size {n}: {e}")))?;
        let bc_name = if dynamics == Dynamics::Height { "pm".to_string() } else { cfg.bc.clone() };
        let space = Space::Planar(d);
        let bc = crate::config::parse_bc(&bc_name, &space)?;
        let target = Target::new(space, bc, dynamics).map_err(|e| CliError::Run(format!("size {n}: {e}")))?;
        // Validate the event against the target before anything runs.
        hexloop::observe::Observer::new(&target, std::slice::from_ref(&event))
            .map_err(|e| CliError::Run(format!("size {n}: {e}")))?;
        let chains = chains.clone();
        jobs.push(Job {
            n,
            bc: bc_name,
            rho,
            run: Box::new(move || {
                let mut rows = estimate(&target, std::slice::from_ref(&event), &chains).map_err(run_err)?;
                Ok(rows.remove(0))
            }),
        });
    }
    Ok(jobs)
}

pub fn scan(cfg: &RunConfig) -> Result<(), CliError> {
    let kind = cfg.kind.as_deref().ok_or_else(|| CliError::Usage("scan needs --kind".into()))?;
    let sizes = cfg.sizes.as_deref().unwrap_or(&[]);
    if sizes.is_empty() {
        return Err(CliError::Usage("scan needs a non-empty --sizes list".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("sizes must be strictly ascending".into()));
    }
    let jobs = scan_jobs(cfg, kind, sizes)?;
    let mut rows = Vec::new();
    let mut meta_rows = Vec::new();
    for job in &jobs {
        let t0 = Instant::now();
        let est = (job.run)()?;
        let wall = t0.elapsed().as_secs_f64();
        if let Some(w) = &est.warning {
            eprintln!("warning: {} at n = {}: {w}", est.event, job.n);
        }
        meta_rows.push(json!({
            "event": est.event,
            "n": job.n,
            "log_n": (job.n as f64).ln(),
            "effective_samples": est.count as f64 / est.iat.max(1.0),
            "iat": est.iat,
            "rhat": est.rhat,
            "wall_seconds": wall,
            "warning": est.warning,
        }));
        rows.push((job, est));
    }
    let rho_text = |r: Option<f64>| r.map(|r| r.to_string()).unwrap_or_default();
    let bytes = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).map_err(run_err)?;
            for (job, est) in &rows {
                w.write_record([
                    est.event.clone(),
                    job.n.to_string(),
                    job.bc.clone(),
                    rho_text(job.rho),
                    est.mean.to_string(),
                    est.stderr.to_string(),
                    est.count.to_string(),
                    cfg.seed.to_string(),
                ])
                .map_err(run_err)?;
            }
            w.into_inner().map_err(run_err)?
        }
        Format::Json => json_bytes(&Value::Array(
            rows.iter()
                .map(|(job, est)| {
                    json!({
                        "event": est.event,
                        "n": job.n,
                        "bc": job.bc,
                        "rho": job.rho,
                        "estimate": est.mean,
                        "stderr": est.stderr,
                        "count": est.count,
                        "seed": cfg.seed,
                    })
                })
                .collect(),
        )),
    };
    write_output(cfg.out.as_deref(), &bytes)?;
    if let Some(out) = &cfg.out {
        let floor = rows.iter().map(|(_, e)| e.mean).fold(f64::INFINITY, f64::min);
        let meta = json!({
            "kind": kind,
            "seed": cfg.seed,
            "chains": cfg.chains,
            "sweeps": cfg.sweeps,
            "burnin": cfg.burnin,
            "thin": cfg.thin,
            "min_estimate": floor,
            "rows": meta_rows,
        });
        write_output(Some(&meta_path(out)), &json_bytes(&meta))?;
    }
    Ok(())
}

/// Sidecar holding per-row diagnostics and wall times.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn sample(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out.as_deref().ok_or_else(|| CliError::Usage("sample needs --out for the spool file".into()))?;
    let chains = cfg.chain_params()?;
    let space = cfg.space()?;
    let bc = cfg.boundary_condition(&space)?;
    let dynamics = cfg.dynamics.unwrap_or(if bc == BoundaryCondition::RedPM && space.planar().is_some() {
        Dynamics::Height
    } else {
        Dynamics::Spin
    });
    let target = Target::new(space, bc, dynamics).map_err(run_err)?;
    let graph = target.graph();
    let centre = graph.index_of(FaceCoord::ORIGIN).unwrap_or(0);
    let per_chain: Vec<(Vec<u8>, Vec<f64>)> = chains
        .par_iter()
        .map(|&params| {
            let mut chain = Chain::new(&target, params, cfg.start).map_err(run_err)?;
            let mut bytes = Vec::new();
            let mut stat = Vec::with_capacity(params.num_samples() as usize);
            chain.run(|c| {
                spool_record(&mut bytes, c.state()).expect("writing to memory");
                stat.push(match c.state() {
                    State::Height(phi) => (phi.get(centre) as f64).powi(2),
                    State::Pair(_) => c.pair().map(|p| p.red[centre].is_p() as u8 as f64).unwrap_or(0.0),
                });
            });
            Ok((bytes, stat))
        })
        .collect::<Result<_, CliError>>()?;
    let spool: Vec<u8> = per_chain.iter().flat_map(|(b, _)| b.iter().copied()).collect();
    write_output(Some(out), &spool)?;
    let summaries: Vec<SeriesSummary> = per_chain.iter().map(|(_, s)| SeriesSummary::of(s)).collect();
    let (stats, stderr) = pooled(&summaries);
    let streams: Vec<Vec<f64>> = per_chain.into_iter().map(|(_, s)| s).collect();
    let (rhat, warning) = match convergence_diagnostics(&streams) {
        Ok(d) => (Some(d.rhat), d.flagged.then(|| format!("rhat {:.3} above threshold", d.rhat))),
        Err(e) => (None, Some(e.to_string())),
    };
    let statistic = match dynamics {
        Dynamics::Height => "centre height squared",
        Dynamics::Spin => "centre red plus",
    };
    let summary = json!({
        "spool": out.display().to_string(),
        "records": stats.count(),
        "faces": graph.num_faces(),
        "chains": cfg.chains,
        "dynamics": match dynamics { Dynamics::Height => "height", Dynamics::Spin => "spin" },
        "statistic": statistic,
        "mean": stats.mean(),
        "stderr": stderr,
        "rhat": rhat,
        "warning": warning,
    });
    io::stdout().write_all(&json_bytes(&summary)).map_err(run_err)
}
