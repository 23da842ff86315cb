use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use sg_core::experiments::{
    bounds_campaign, comparison_campaign, comparison_test, default_delta_ladder, delta_sweep,
    geometric_ladder, limit_geodesic_test, verify_radial_bounds, SweepResult,
};
use sg_core::flow::{
    integrate, launch_winding, trajectory_metadata, write_trajectory_csv, Direction, FlowOptions,
    GeodesicState, Trajectory,
};
use sg_core::section::{CrossSection, Manifold};
use sg_core::spec::{WarpSpec, PROFILE_GRID};
use sg_core::warp::{compute_cf, profile_to_warp, ExpFamily, TabulatedProfile, WarpKind};
use sg_core::Error;

use crate::config::{Format, RunConfig};
use crate::svg::{render, Panel};

/// How a command that ran to completion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    Violations,
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn cf(spec: &str, radius: Option<f64>, tol: f64, as_json: bool) -> anyhow::Result<Status> {
    let warp: WarpSpec = spec.parse()?;
    // C_f only sees the germ at 0, so any admissible radius will do
    let radius = radius.unwrap_or(match warp {
        WarpSpec::LogPower { mu } => ExpFamily::LogPower { mu }.max_convex_radius().min(1.0),
        WarpSpec::ExpInverse { beta } => ExpFamily::ExpInversePower { beta }
            .max_convex_radius()
            .min(1.0),
        _ => 1.0,
    });
    let wf = warp.build(radius)?;
    let res = compute_cf(&wf, tol)?;
    if as_json {
        let out = json!({
            "warp": warp.to_string(),
            "radius": radius,
            "tol": tol,
            "value": res.value,
            "error_estimate": res.error_estimate,
            "source": res.source,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("C_f = {:.15}", res.value);
        println!("error estimate = {:.3e}", res.error_estimate);
    }
    Ok(Status::Ok)
}

fn title(cfg: &RunConfig, delta: Option<f64>) -> String {
    match delta {
        Some(d) => format!(
            "{} on {}, R = {}, delta = {d}",
            cfg.warp, cfg.section, cfg.radius
        ),
        None => format!("{} on {}, R = {}", cfg.warp, cfg.section, cfg.radius),
    }
}

/// `(x, y)` of the path seen from above: polar on the circle, projected on the sphere.
fn plane_path(tr: &Trajectory, cs: &CrossSection) -> Vec<(f64, f64)> {
    tr.samples()
        .iter()
        .map(|s| match cs.manifold() {
            Manifold::Circle { .. } => {
                let a = s.state.y.coords[0];
                (s.r() * a.cos(), s.r() * a.sin())
            }
            _ => {
                let p = cs.embed(&s.state.y);
                (s.r() * p[0], s.r() * p[1])
            }
        })
        .collect()
}

pub fn trace(mut cfg: RunConfig) -> anyhow::Result<Status> {
    let flow = cfg.flow(FlowOptions::default());
    cfg.pin(flow);
    let wf = cfg.warp.build(cfg.radius)?;
    let cs = cfg.section.build(cfg.radius)?;
    let (y0, v0) = cfg.start()?;
    let st = if cfg.radial {
        GeodesicState::radial(cfg.delta, true, y0)
    } else {
        launch_winding(&wf, &cs, cfg.delta, &y0, &v0)?
    };
    let tr = integrate(&wf, &cs, &st, Direction::Both, flow)?;
    let meta = trajectory_metadata(&tr, &cfg.warp.to_string(), &cfg.section.to_string());
    if cfg.wants(Format::Csv) {
        write_trajectory_csv(&tr, &cfg.output("trajectory.csv")?)?;
    }
    if cfg.wants(Format::Json) {
        write_json(
            &cfg.output("trajectory.json")?,
            &json!({ "config": cfg, "metadata": meta }),
        )?;
    }
    if cfg.wants(Format::Svg) {
        let rt: Vec<(f64, f64)> = tr.samples().iter().map(|s| (s.t(), s.r())).collect();
        let mut polar = Panel::new(title(&cfg, Some(cfg.delta)), "r cos(angle)", "r sin(angle)")
            .line("path", plane_path(&tr, &cs));
        polar.equal = true;
        let svg = render(&[
            Panel::new(title(&cfg, Some(cfg.delta)), "t", "r").line("r(t)", rt),
            polar,
        ]);
        write(&cfg.output("trajectory.svg")?, &svg)?;
    }
    println!("classification: {:?}", meta.classification);
    println!("t range: [{}, {}]", meta.t_range.0, meta.t_range.1);
    if let (Some(l), Some(n)) = (meta.winding_length, meta.winding_count) {
        println!("winding length: {l}");
        println!("winding count: {n}");
    }
    println!("max |2H - 1|: {:e}", meta.max_shell_residual);
    Ok(Status::Ok)
}

fn sweep_csv(res: &SweepResult) -> String {
    let mut s = String::from("delta,length,normalized,winding_count,error_rel\n");
    for i in 0..res.deltas.len() {
        let err = res
            .errors_rel
            .get(i)
            .map(|e| format!("{e:e}"))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{err}",
            res.deltas[i], res.lengths[i], res.normalized[i], res.winding_counts[i]
        );
    }
    s
}

pub fn sweep(mut cfg: RunConfig) -> anyhow::Result<Status> {
    let flow = cfg.flow(FlowOptions::default());
    cfg.pin(flow);
    let wf = cfg.warp.build(cfg.radius)?;
    let cs = cfg.section.build(cfg.radius)?;
    let (y0, v0) = cfg.start()?;
    let (deltas, dropped) = match &cfg.deltas {
        Some(d) => (d.clone(), Vec::new()),
        None => default_delta_ladder(&wf),
    };
    let res = delta_sweep(&wf, &cs, &deltas, &y0, &v0, &cfg.sweep_options(flow))?;
    if cfg.wants(Format::Json) {
        write_json(
            &cfg.output("sweep.json")?,
            &json!({ "config": cfg, "dropped_deltas": dropped, "result": res }),
        )?;
    }
    if cfg.wants(Format::Csv) {
        write(&cfg.output("sweep.csv")?, &sweep_csv(&res))?;
    }
    if cfg.wants(Format::Svg) {
        let pts: Vec<(f64, f64)> = res
            .deltas
            .iter()
            .copied()
            .zip(res.normalized.iter().copied())
            .collect();
        let mut p = Panel::new(title(&cfg, None), "log10 delta", "f'(delta) l(y_delta)")
            .dots("normalized length", pts.clone());
        p = p.line("", pts);
        p.log_x = true;
        if let Some(cf) = res.reference_cf {
            p.hlines.push((cf, format!("C_f = {cf:.6}")));
        }
        write(&cfg.output("sweep.svg")?, &render(&[p]))?;
    }
    for d in &dropped {
        println!("dropped delta {d:e}: f(delta) below double range");
    }
    for i in 0..res.deltas.len() {
        let err = res
            .errors_rel
            .get(i)
            .map(|e| format!("  rel err {e:.3e}"))
            .unwrap_or_default();
        println!(
            "delta {:.3e}  f'l = {:.10}{err}",
            res.deltas[i], res.normalized[i]
        );
    }
    if let Some(cf) = res.reference_cf {
        println!("C_f = {cf:.10}");
    }
    if let Some(l) = res.extrapolated_limit {
        println!("extrapolated limit = {l:.10}");
    }
    for n in &res.notes {
        println!("note: {n}");
    }
    if res.converged {
        println!("converged");
        Ok(Status::Ok)
    } else {
        println!("not converged");
        Ok(Status::NotConverged)
    }
}

#[derive(Debug, Serialize)]
struct Suite {
    name: String,
    checked: usize,
    failures: usize,
    skipped: bool,
    notes: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Violation {
    suite: String,
    detail: serde_json::Value,
}

#[derive(Default)]
struct Ledger {
    suites: Vec<Suite>,
    violations: Vec<Violation>,
}

impl Ledger {
    fn suite(
        &mut self,
        name: &str,
        checked: usize,
        bad: Vec<serde_json::Value>,
        notes: Vec<String>,
    ) {
        let failures = bad.len();
        for detail in bad {
            self.violations.push(Violation {
                suite: name.into(),
                detail,
            });
        }
        self.suites.push(Suite {
            name: name.into(),
            checked,
            failures,
            skipped: false,
            notes,
        });
    }

    fn skip(&mut self, name: &str, why: String) {
        self.suites.push(Suite {
            name: name.into(),
            checked: 0,
            failures: 0,
            skipped: true,
            notes: vec![why],
        });
    }
}

/// Largest predicted angular length `π / f'(δ)` run by `verify` on sections
/// where every winding has to be resolved.
const VERIFY_WINDINGS: f64 = 1e4;

pub fn verify(mut cfg: RunConfig) -> anyhow::Result<Status> {
    let flow = cfg.flow(FlowOptions::verification());
    cfg.pin(flow);
    let tol = cfg.conservation_tol;
    let wf = cfg.warp.build(cfg.radius)?;
    let cs = cfg.section.build(cfg.radius)?;
    let (y0, v0) = cfg.start()?;
    let mut led = Ledger::default();

    let mut notes = Vec::new();
    let deltas = match &cfg.deltas {
        Some(d) => d.clone(),
        None => {
            let (keep, dropped) = geometric_ladder(&wf, 0.1f64.min(0.25 * cfg.radius), 1e-3);
            for d in dropped {
                notes.push(format!("delta {d:e} dropped: f(delta) below double range"));
            }
            let free = cs.is_warped() && matches!(cs.manifold(), Manifold::Circle { .. });
            keep.into_iter()
                .filter(|&d| {
                    let ok = free || std::f64::consts::PI / wf.f_prime(d) <= VERIFY_WINDINGS;
                    if !ok {
                        notes.push(format!("delta {d:e} dropped: too many windings to resolve"));
                    }
                    ok
                })
                .collect()
        }
    };
    if deltas.is_empty() {
        return Err(Error::InvalidInput("no usable delta for this warp".into()).into());
    }

    // bounds and conservation along the configured ladder
    let mut bad = Vec::new();
    for &d in &deltas {
        let st = launch_winding(&wf, &cs, d, &y0, &v0)?;
        let tr = integrate(&wf, &cs, &st, Direction::Both, flow)?;
        let rep = verify_radial_bounds(&tr, cs.c_bound(), cfg.radius);
        let shell = tr.max_shell_residual();
        let drift = cs.is_warped().then(|| tr.max_clairaut_drift());
        if !rep.passed || shell >= tol || drift.is_some_and(|k| k >= tol) {
            bad.push(json!({ "delta": d, "bounds": rep, "shell_residual": shell, "clairaut_drift": drift }));
        }
    }
    led.suite("bounds and conservation", deltas.len(), bad, notes);

    // comparison between neighbouring ladder entries
    let name = "comparison";
    if !cs.is_warped() {
        led.skip(name, "section is not a warped product".into());
    } else if !wf.kind().is_convex_family() {
        led.skip(name, format!("{} is not convex", cfg.warp));
    } else {
        let mut bad = Vec::new();
        for w in deltas.windows(2) {
            let rep = comparison_test(&wf, &cs, w[1], w[0], &y0, &v0, &y0, &v0, flow)?;
            if !rep.passed || rep.max_shell_residual >= tol || rep.max_clairaut_drift >= tol {
                bad.push(serde_json::to_value(&rep)?);
            }
        }
        led.suite(name, deltas.len().saturating_sub(1), bad, Vec::new());
    }

    let name = "limit geodesic";
    if !wf.kind().is_convex_family() {
        led.skip(name, format!("{} is not convex", cfg.warp));
    } else if deltas.len() < 2 {
        led.skip(name, "needs at least two deltas".into());
    } else {
        let window = cfg
            .tau_window
            .map(|w| (w[0], w[1]))
            .unwrap_or(match wf.kind() {
                WarpKind::Conical => (-1.2, 1.2),
                _ => (-2.0, 2.0),
            });
        let rep = limit_geodesic_test(&wf, &cs, &deltas, &y0, &v0, window, flow)?;
        let noisy = rep.entries.iter().any(|e| e.shell_residual >= tol);
        let bad = if rep.passed && !noisy {
            Vec::new()
        } else {
            vec![serde_json::to_value(&rep)?]
        };
        led.suite(name, rep.entries.len(), bad, rep.notes.clone());
    }

    let name = "bounds campaign";
    if cfg.bounds_cases == 0 {
        led.skip(name, "disabled".into());
    } else {
        let rep = bounds_campaign(cfg.seed, cfg.bounds_cases, flow)?;
        let bad = rep
            .cases
            .iter()
            .filter(|c| !c.passed || c.shell_residual.is_some_and(|s| s >= tol))
            .map(serde_json::to_value)
            .collect::<Result<_, _>>()?;
        led.suite(name, rep.cases.len(), bad, Vec::new());
    }

    let name = "comparison campaign";
    if cfg.comparison_cases == 0 {
        led.skip(name, "disabled".into());
    } else {
        let rep = comparison_campaign(cfg.seed, cfg.comparison_cases, flow)?;
        let bad = rep
            .cases
            .iter()
            .filter(|c| {
                !c.passed
                    || c.report
                        .as_ref()
                        .is_some_and(|r| r.max_shell_residual >= tol || r.max_clairaut_drift >= tol)
            })
            .map(serde_json::to_value)
            .collect::<Result<_, _>>()?;
        led.suite(name, rep.cases.len(), bad, Vec::new());
    }

    let passed = led.violations.is_empty();
    if cfg.wants(Format::Json) {
        write_json(
            &cfg.output("verify.json")?,
            &json!({
                "config": cfg,
                "seed": cfg.seed,
                "passed": passed,
                "suites": led.suites,
                "violations": led.violations,
            }),
        )?;
    }
    for s in &led.suites {
        let verdict = if s.skipped {
            "skip"
        } else if s.failures == 0 {
            "pass"
        } else {
            "FAIL"
        };
        println!(
            "{verdict}  {} ({} checked, {} failed)",
            s.name, s.checked, s.failures
        );
        for n in &s.notes {
            println!("      {n}");
        }
    }
    println!("seed {}", cfg.seed);
    if passed {
        return Ok(Status::Ok);
    }
    eprintln!(
        "{} violation(s); first counterexamples:",
        led.violations.len()
    );
    for v in led.violations.iter().take(5) {
        eprintln!("{}", serde_json::to_string(v)?);
    }
    Ok(Status::Violations)
}

pub fn profile2warp(
    path: &Path,
    radius: Option<f64>,
    points: usize,
    r_min: Option<f64>,
    out: Option<PathBuf>,
) -> anyhow::Result<Status> {
    let table = TabulatedProfile::from_csv_path(path)?;
    let z_max = table.z_max();
    let mut wf = profile_to_warp(Arc::new(table), z_max, PROFILE_GRID)?;
    if let Some(r) = radius {
        wf = wf.with_domain_radius(r)?;
    }
    if points < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()).into());
    }
    let big_r = wf.domain_radius();
    let lo = r_min.unwrap_or(1e-4 * big_r);
    if !(lo > 0.0 && lo < big_r) {
        return Err(Error::InvalidInput(format!("r_min must lie in (0, {big_r})")).into());
    }
    let prof = wf
        .profile()
        .ok_or_else(|| anyhow::anyhow!("profile warp expected"))?;
    let mut csv = String::from("r,z,f,f_prime\n");
    for i in 0..points {
        let r = lo * (big_r / lo).powf(i as f64 / (points - 1) as f64);
        let _ = writeln!(
            csv,
            "{r:e},{:e},{:e},{:e}",
            prof.z_of_r(r),
            wf.f(r),
            wf.f_prime(r)
        );
    }
    match out {
        Some(p) => write(&p, &csv)?,
        None => print!("{csv}"),
    }
    let v = wf.validate();
    eprintln!(
        "kind {:?}, R = {big_r}, convex {}, round trip {:.1e}",
        v.kind, v.convex, v.roundtrip_max_rel
    );
    Ok(Status::Ok)
}
