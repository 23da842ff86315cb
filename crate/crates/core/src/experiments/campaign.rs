use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::flow::{integrate, launch_winding, Direction, FlowOptions};
use crate::section::{Perturbation, YPoint};
use crate::spec::{SectionSpec, WarpSpec};
use crate::warp::ExpFamily;

use super::checks::{comparison_test, verify_radial_bounds, BoundsReport, ComparisonReport};
use super::{ln_f_floor, thread_pool};

/// One randomized geodesic setup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSetup {
    pub warp: WarpSpec,
    pub section: SectionSpec,
    pub radius: f64,
    pub delta: f64,
    pub y0: YPoint,
    pub v0: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsCase {
    pub index: usize,
    pub setup: CaseSetup,
    pub report: Option<BoundsReport>,
    pub shell_residual: Option<f64>,
    /// Only for warped sections, where the Clairaut relation holds.
    pub clairaut_drift: Option<f64>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCase {
    pub index: usize,
    pub setup: CaseSetup,
    pub delta_bar: f64,
    pub y0_bar: YPoint,
    pub v0_bar: [f64; 2],
    pub report: Option<ComparisonReport>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport<C> {
    pub seed: u64,
    pub cases: Vec<C>,
    pub failures: usize,
    pub passed: bool,
}

fn random_warp(rng: &mut ChaCha8Rng) -> (WarpSpec, f64) {
    match rng.gen_range(0..3) {
        0 => (
            WarpSpec::Power {
                alpha: rng.gen_range(1.0..4.0),
            },
            rng.gen_range(0.5..1.5),
        ),
        1 => {
            let beta = rng.gen_range(0.5..2.0);
            let r =
                ExpFamily::ExpInversePower { beta }.max_convex_radius() * rng.gen_range(0.5..1.0);
            (WarpSpec::ExpInverse { beta }, r)
        }
        _ => {
            let mu = rng.gen_range(1.2..2.5);
            let r = ExpFamily::LogPower { mu }.max_convex_radius() * rng.gen_range(0.5..1.0);
            (WarpSpec::LogPower { mu }, r)
        }
    }
}

fn random_start(rng: &mut ChaCha8Rng, section: &SectionSpec) -> (YPoint, [f64; 2]) {
    match section {
        SectionSpec::Circle { circumference, .. } => {
            let v = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (YPoint::circle(rng.gen_range(0.0..*circumference)), [v, 0.0])
        }
        SectionSpec::Sphere { .. } => {
            let th = rng.gen_range(0.5..PI - 0.5);
            let psi = rng.gen_range(0.0..2.0 * PI);
            (
                YPoint::sphere(0, th, rng.gen_range(0.0..2.0 * PI)),
                [psi.cos(), psi.sin() / th.sin()],
            )
        }
    }
}

/// Largest predicted angular length `π / f'(δ)` for sections whose metric
/// varies along `Y`, where every winding has to be resolved by the stepper.
pub const WINDING_CAP: f64 = 100.0;

/// Log-uniform δ in `[lo, hi]` with `f(δ)` representable and, unless the
/// section is a warped circle, a bounded number of windings.
fn random_delta(
    rng: &mut ChaCha8Rng,
    warp: &WarpSpec,
    section: &SectionSpec,
    radius: f64,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let wf = warp.build(radius).ok()?;
    let free_motion = matches!(section, SectionSpec::Circle { perturbation, .. } if perturbation.amplitude == 0.0);
    for _ in 0..64 {
        let d = (rng.gen_range(lo.ln()..hi.ln())).exp();
        let winding_ok = free_motion || PI / wf.f_prime(d) <= WINDING_CAP;
        if wf.ln_f(d) >= ln_f_floor() && winding_ok {
            return Some(d);
        }
    }
    None
}

fn random_section(rng: &mut ChaCha8Rng) -> SectionSpec {
    match rng.gen_range(0..4) {
        0 => SectionSpec::Circle {
            circumference: 2.0 * PI,
            perturbation: Perturbation::none(),
        },
        1 => SectionSpec::Circle {
            circumference: 2.0 * PI,
            perturbation: Perturbation::sin(rng.gen_range(0.02..0.2)),
        },
        2 => SectionSpec::Sphere {
            perturbation: Perturbation::none(),
        },
        _ => SectionSpec::Sphere {
            perturbation: Perturbation::sin(rng.gen_range(0.01..0.1)),
        },
    }
}

/// Random `(family, δ, perturbation)` setups for the radial-bounds campaign.
///
/// Draws whose δ range admits no tractable geodesic are redrawn.
pub fn bounds_cases(seed: u64, n: usize) -> Vec<CaseSetup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (warp, radius) = random_warp(&mut rng);
        let section = random_section(&mut rng);
        let Some(delta) = random_delta(
            &mut rng,
            &warp,
            &section,
            radius,
            1e-3 * radius,
            0.5 * radius,
        ) else {
            continue;
        };
        let (y0, v0) = random_start(&mut rng, &section);
        out.push(CaseSetup {
            warp,
            section,
            radius,
            delta,
            y0,
            v0,
        });
    }
    out
}

/// Radial and covector bounds on `n` random winding geodesics.
pub fn bounds_campaign(
    seed: u64,
    n: usize,
    options: FlowOptions,
) -> Result<CampaignReport<BoundsCase>> {
    let setups = bounds_cases(seed, n);
    let cases: Vec<BoundsCase> = thread_pool()?.install(|| {
        setups
            .into_par_iter()
            .enumerate()
            .map(|(index, setup)| {
                let run = || -> Result<(BoundsReport, f64, Option<f64>)> {
                    let wf = setup.warp.build(setup.radius)?;
                    let cs = setup.section.build(setup.radius)?;
                    let st = launch_winding(&wf, &cs, setup.delta, &setup.y0, &setup.v0)?;
                    let tr = integrate(&wf, &cs, &st, Direction::Both, options)?;
                    let drift = cs.is_warped().then(|| tr.max_clairaut_drift());
                    Ok((
                        verify_radial_bounds(&tr, cs.c_bound(), setup.radius),
                        tr.max_shell_residual(),
                        drift,
                    ))
                };
                match run() {
                    Ok((rep, shell, drift)) => BoundsCase {
                        index,
                        passed: rep.passed,
                        setup,
                        report: Some(rep),
                        shell_residual: Some(shell),
                        clairaut_drift: drift,
                        error: None,
                    },
                    Err(e) => BoundsCase {
                        index,
                        setup,
                        report: None,
                        shell_residual: None,
                        clairaut_drift: None,
                        error: Some(e.to_string()),
                        passed: false,
                    },
                }
            })
            .collect()
    });
    Ok(summarize(seed, cases, |c| c.passed))
}

/// Random warped convex pairs `δ < δ̄` for the comparison campaign.
pub fn comparison_cases(seed: u64, n: usize) -> Vec<(CaseSetup, f64, YPoint, [f64; 2])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (warp, radius) = random_warp(&mut rng);
        let section = if rng.gen_bool(0.75) {
            SectionSpec::Circle {
                circumference: 2.0 * PI,
                perturbation: Perturbation::none(),
            }
        } else {
            SectionSpec::Sphere {
                perturbation: Perturbation::none(),
            }
        };
        let Some(delta) = random_delta(
            &mut rng,
            &warp,
            &section,
            radius,
            2e-3 * radius,
            0.4 * radius,
        ) else {
            continue;
        };
        let delta_bar = (delta * rng.gen_range(1.05..2.5)).min(0.9 * radius);
        let (y0, v0) = random_start(&mut rng, &section);
        let (yb, vb) = random_start(&mut rng, &section);
        out.push((
            CaseSetup {
                warp,
                section,
                radius,
                delta,
                y0,
                v0,
            },
            delta_bar,
            yb,
            vb,
        ));
    }
    out
}

/// `r(t) < r̄(t)` for `n` random warped convex pairs.
pub fn comparison_campaign(
    seed: u64,
    n: usize,
    options: FlowOptions,
) -> Result<CampaignReport<ComparisonCase>> {
    let setups = comparison_cases(seed, n);
    let cases: Vec<ComparisonCase> = thread_pool()?.install(|| {
        setups
            .into_par_iter()
            .enumerate()
            .map(|(index, (setup, delta_bar, y0_bar, v0_bar))| {
                let run = || -> Result<ComparisonReport> {
                    let wf = setup.warp.build(setup.radius)?;
                    let cs = setup.section.build(setup.radius)?;
                    comparison_test(
                        &wf,
                        &cs,
                        setup.delta,
                        delta_bar,
                        &setup.y0,
                        &setup.v0,
                        &y0_bar,
                        &v0_bar,
                        options,
                    )
                };
                let (report, error) = match run() {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                ComparisonCase {
                    index,
                    passed: report.as_ref().is_some_and(|r| r.passed),
                    setup,
                    delta_bar,
                    y0_bar,
                    v0_bar,
                    report,
                    error,
                }
            })
            .collect()
    });
    Ok(summarize(seed, cases, |c| c.passed))
}

fn summarize<C>(seed: u64, cases: Vec<C>, ok: impl Fn(&C) -> bool) -> CampaignReport<C> {
    let failures = cases.iter().filter(|c| !ok(c)).count();
    CampaignReport {
        seed,
        failures,
        passed: failures == 0,
        cases,
    }
}
