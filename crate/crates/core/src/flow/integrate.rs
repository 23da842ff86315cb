use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ode::{dopri5_step, error_norm, step_factor, StepOutcome};
use crate::section::{CrossSection, YPoint};
use crate::warp::WarpingFunction;

use super::trajectory::{unreverse, Branch, Classification, Event, EventKind, Node, Trajectory};
use super::{pack, shell_residual, Direction, FlowOptions, FlowSystem, GeodesicState, IR, ITH, IY};

/// Integrate from `start` until `r` reaches `R` in the requested direction(s).
///
/// Backward time is handled by the symmetry `(t, θ, η) → (−t, −θ, −η)` of
/// the equations, so every pass runs forward in its own time variable.
pub fn integrate(
    wf: &WarpingFunction,
    cs: &CrossSection,
    start: &GeodesicState,
    direction: Direction,
    options: FlowOptions,
) -> Result<Trajectory> {
    let radius = wf.domain_radius();
    if !(start.r > 0.0 && start.r < radius) {
        return Err(Error::invalid(format!(
            "start radius {} must lie in (0, {radius})",
            start.r
        )));
    }
    if !(options.rtol > 0.0 && options.atol > 0.0) {
        return Err(Error::invalid("integrator tolerances must be positive"));
    }
    let residual = shell_residual(wf, cs, start);
    if residual > 1e-9 {
        return Err(Error::invalid(format!(
            "start state is off the unit shell (|2H - 1| = {residual:e})"
        )));
    }
    let mut traj = Trajectory {
        wf: Arc::new(wf.clone()),
        cs: Arc::new(cs.clone()),
        options,
        direction,
        start: *start,
        ln_scale: start.ln_eta_scale,
        branches: Vec::new(),
        samples: Vec::new(),
        events: Vec::new(),
        classification: Classification::Winding,
        steps_rejected: 0,
    };
    let radial = start.is_radial() || cs.conorm(start.r, &start.y, &start.eta_bar) == 0.0;
    if radial || (start.ln_eta_scale - wf.ln_f(start.r)).exp() < 1e-14 {
        traj.classification = Classification::Radial;
        radial_trajectory(&mut traj, radius);
        return Ok(traj);
    }
    let mut start = *start;
    if cs.needs_chart_switch(&start.y) {
        let (y, e) = cs.switch_chart(&start.y, &start.eta_bar);
        start.y = y;
        start.eta_bar = e;
    }
    let sys = FlowSystem::new(wf, cs, start.ln_eta_scale);
    let dim = sys.dim;
    let mut events = Vec::new();
    if start.theta == 0.0 {
        events.push(Event {
            kind: EventKind::Minimum,
            t: start.t,
            r: start.r,
        });
    }
    if matches!(direction, Direction::Backward | Direction::Both) {
        let mut z = pack(&sys, &start);
        unreverse(&mut z, dim);
        let run = run_branch(&sys, z, start.y.chart, -start.t, radius, &options)?;
        traj.steps_rejected += run.rejected;
        for e in run.events {
            events.push(Event {
                kind: if e.kind == EventKind::Exit {
                    EventKind::Entry
                } else {
                    e.kind
                },
                t: -e.t,
                r: e.r,
            });
        }
        traj.branches.push(Branch {
            reversed: true,
            nodes: run.nodes,
        });
    }
    if matches!(direction, Direction::Forward | Direction::Both) {
        let z = pack(&sys, &start);
        let run = run_branch(&sys, z, start.y.chart, start.t, radius, &options)?;
        traj.steps_rejected += run.rejected;
        events.extend(run.events);
        traj.branches.push(Branch {
            reversed: false,
            nodes: run.nodes,
        });
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    traj.events = events;
    build_samples(&mut traj, dim);
    check_dichotomy(&traj)?;
    Ok(traj)
}

struct BranchRun {
    nodes: Vec<Node>,
    events: Vec<Event>,
    rejected: usize,
}

fn run_branch(
    sys: &FlowSystem,
    z0: Vec<f64>,
    chart0: u8,
    t0: f64,
    radius: f64,
    opts: &FlowOptions,
) -> Result<BranchRun> {
    let dim = sys.dim;
    let n = sys.len();
    let mut atol = vec![opts.atol; n];
    atol[IR] = opts.atol * z0[IR].min(1.0);
    let mut chart = chart0;
    let mut dz = vec![0.0; n];
    sys.rhs(chart, &z0, &mut dz).map_err(|_| {
        Error::OutOfDomain(format!("start state at r = {} outside the model", z0[IR]))
    })?;
    let mut nodes = vec![Node {
        t: t0,
        z: z0,
        dz,
        chart,
    }];
    let mut events = Vec::new();
    let mut rejected = 0;
    let cap = |r: f64| (0.1 / sys.wf.log_derivative(r)).min(0.25 * radius);
    let mut h = 0.01 * cap(nodes[0].z[IR]);
    loop {
        if nodes.len() > opts.max_steps {
            let last = nodes.last().unwrap();
            return Err(Error::Integration {
                t: last.t,
                reason: format!(
                    "step budget of {} exhausted at r = {}",
                    opts.max_steps, last.z[IR]
                ),
            });
        }
        let cur = nodes.last().unwrap();
        let t = cur.t;
        let hmax = cap(cur.z[IR]);
        let step = h.min(hmax);
        if step < 1e-15 * t.abs().max(1e-3) {
            return Err(Error::Integration {
                t,
                reason: format!(
                    "step size underflow at r = {}, theta = {}",
                    cur.z[IR], cur.z[ITH]
                ),
            });
        }
        let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| sys.rhs(chart, y, out);
        let out = match dopri5_step(&mut rhs, t, &cur.z, &cur.dz, step) {
            Ok(o) => o,
            Err(_) => {
                rejected += 1;
                h = 0.5 * step;
                continue;
            }
        };
        let err = error_norm(&out.err, &cur.z, &out.y, opts.rtol, &atol);
        if !(err <= 1.0) {
            rejected += 1;
            h = step
                * if err.is_finite() {
                    step_factor(err)
                } else {
                    0.2
                };
            continue;
        }
        let next_h = step * step_factor(err);
        // lowest point inside the step: θ crosses 0 upward
        if cur.z[ITH] < 0.0 && out.y[ITH] >= 0.0 {
            let (hm, om) = refine(sys, chart, cur, step, ITH, 0.0)?;
            events.push(Event {
                kind: EventKind::Minimum,
                t: t + hm,
                r: om.y[IR],
            });
            if hm > 0.0 && hm < step {
                // pin θ to the event value so the crossing is not detected twice
                let mut z = om.y;
                z[ITH] = 0.0;
                let mut dz = om.dy;
                sys.rhs(chart, &z, &mut dz)
                    .map_err(|_| Error::Integration {
                        t: t + hm,
                        reason: "minimum refinement left the domain".into(),
                    })?;
                let node = Node {
                    t: t + hm,
                    z,
                    dz,
                    chart,
                };
                nodes.push(node);
                h = step - hm;
                continue;
            }
        }
        if out.y[IR] >= radius {
            let (he, oe) = refine(sys, chart, cur, step, IR, radius)?;
            let mut z = oe.y;
            z[IR] = radius;
            check_shell(sys, chart, &z, t + he, opts)?;
            events.push(Event {
                kind: EventKind::Exit,
                t: t + he,
                r: radius,
            });
            nodes.push(Node {
                t: t + he,
                z,
                dz: oe.dy,
                chart,
            });
            break;
        }
        check_shell(sys, chart, &out.y, t + step, opts)?;
        let mut node = Node {
            t: t + step,
            z: out.y,
            dz: out.dy,
            chart,
        };
        if dim == 2 {
            let y = YPoint {
                chart,
                coords: [node.z[IY], node.z[IY + 1]],
            };
            if sys.cs.needs_chart_switch(&y) {
                let (ny, eta) = sys.cs.switch_chart(&y, &node.z[IY + 2..IY + 4]);
                chart = ny.chart;
                node.z[IY..IY + 2].copy_from_slice(&ny.coords);
                node.z[IY + 2..IY + 4].copy_from_slice(&eta);
                node.chart = chart;
                sys.rhs(chart, &node.z, &mut node.dz)
                    .map_err(|_| Error::Integration {
                        t: node.t,
                        reason: "chart switch produced an invalid state".into(),
                    })?;
            }
        }
        nodes.push(node);
        h = next_h;
    }
    Ok(BranchRun {
        nodes,
        events,
        rejected,
    })
}

fn check_shell(sys: &FlowSystem, chart: u8, z: &[f64], t: f64, opts: &FlowOptions) -> Result<()> {
    match sys.diagnostics(chart, z) {
        Some((res, ..)) if res.abs() <= opts.shell_tolerance => Ok(()),
        Some((res, ..)) => Err(Error::IntegrationQuality(format!(
            "unit-shell drift {res:e} at t = {t} exceeds {:e}",
            opts.shell_tolerance
        ))),
        None => Err(Error::Integration {
            t,
            reason: "diagnostics could not be evaluated".into(),
        }),
    }
}

/// Step size `h* ∈ (0, h]` at which component `comp` of a single step from
/// `node` equals `target`; the component must cross `target` upward.
fn refine(
    sys: &FlowSystem,
    chart: u8,
    node: &Node,
    h: f64,
    comp: usize,
    target: f64,
) -> Result<(f64, StepOutcome)> {
    let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| sys.rhs(chart, y, out);
    let mut eval = |s: f64| -> Result<StepOutcome> {
        dopri5_step(&mut rhs, node.t, &node.z, &node.dz, s).map_err(|_| Error::Integration {
            t: node.t + s,
            reason: "event refinement left the domain".into(),
        })
    };
    let mut lo = 0.0;
    let mut hi = h;
    let mut best = eval(h)?;
    let mut g_lo = node.z[comp] - target;
    let mut g_hi = best.y[comp] - target;
    if g_hi == 0.0 {
        return Ok((h, best));
    }
    let tol = if target == 0.0 {
        1e-15
    } else {
        1e-14 * target.abs()
    };
    let mut s = h;
    for _ in 0..100 {
        // Newton from the current point, falling back to regula falsi and bisection
        let g = best.y[comp] - target;
        let d = best.dy[comp];
        let mut next = s - g / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = lo - g_lo * (hi - lo) / (g_hi - g_lo);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
        }
        s = next;
        best = eval(s)?;
        let g = best.y[comp] - target;
        if g.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok((s, best));
        }
        if g < 0.0 {
            lo = s;
            g_lo = g;
        } else {
            hi = s;
            g_hi = g;
        }
    }
    Ok((s, best))
}

fn radial_trajectory(traj: &mut Trajectory, radius: f64) {
    let start = traj.start;
    let outward = start.theta.sin() >= 0.0;
    let dir = traj.direction;
    let mut t_lo = start.t;
    let mut r_lo = start.r;
    let mut t_hi = start.t;
    let mut r_hi = start.r;
    let mut events = Vec::new();
    // outward motion reaches R, inward motion reaches the singular point
    let forward_end = if outward { radius - start.r } else { start.r };
    let backward_end = if outward { start.r } else { radius - start.r };
    if matches!(dir, Direction::Forward | Direction::Both) {
        t_hi = start.t + forward_end;
        r_hi = if outward { radius } else { 0.0 };
        events.push(Event {
            kind: if outward {
                EventKind::Exit
            } else {
                EventKind::Singularity
            },
            t: t_hi,
            r: r_hi,
        });
    }
    if matches!(dir, Direction::Backward | Direction::Both) {
        t_lo = start.t - backward_end;
        r_lo = if outward { 0.0 } else { radius };
        events.push(Event {
            kind: if outward {
                EventKind::Singularity
            } else {
                EventKind::Entry
            },
            t: t_lo,
            r: r_lo,
        });
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    traj.events = events;
    let theta = if outward { FRAC_PI_2 } else { -FRAC_PI_2 };
    let dim = traj.cs.dim();
    let mut rows = Vec::new();
    for (t, r) in [(t_lo, r_lo), (t_hi, r_hi)] {
        let mut z = vec![0.0; IY + 2 * dim];
        z[IR] = r;
        z[ITH] = theta;
        for i in 0..dim {
            z[IY + i] = start.y.coords[i];
        }
        rows.push(traj.make_sample(t, &z, start.y.chart, true));
    }
    if rows[0].t() == rows[1].t() {
        rows.pop();
    }
    traj.samples = rows;
}

fn build_samples(traj: &mut Trajectory, dim: usize) {
    let mut samples = Vec::new();
    for branch in &traj.branches {
        let mut seq: Vec<_> = branch
            .nodes
            .iter()
            .map(|n| {
                let mut z = n.z.clone();
                let t = if branch.reversed {
                    unreverse(&mut z, dim);
                    -n.t
                } else {
                    n.t
                };
                traj.make_sample(t, &z, n.chart, true)
            })
            .collect();
        if branch.reversed {
            seq.reverse();
        }
        samples.extend(seq);
    }
    samples.sort_by(|a, b| a.t().total_cmp(&b.t()));
    samples.dedup_by(|a, b| a.t() == b.t());
    traj.samples = samples;
    let n = traj.options.dense_nodes;
    if n >= 2 {
        let (t0, t1) = traj.t_range();
        let mut dense = Vec::with_capacity(n);
        let nodes: Vec<f64> = traj.samples.iter().map(|s| s.t()).collect();
        for i in 0..n {
            let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
            // a dense point on top of a node only adds rounding noise
            let k = nodes.partition_point(|&x| x < t);
            let gap = 1e-10 * t.abs().max(1.0);
            let near = |j: usize| nodes.get(j).is_some_and(|&x| (x - t).abs() <= gap);
            if near(k) || (k > 0 && near(k - 1)) {
                continue;
            }
            if let Ok((z, chart)) = traj.raw_at(t) {
                dense.push(traj.make_sample(t, &z, chart, false));
            }
        }
        let mut all = std::mem::take(&mut traj.samples);
        all.extend(dense);
        all.sort_by(|a, b| a.t().total_cmp(&b.t()).then(b.accepted.cmp(&a.accepted)));
        all.dedup_by(|a, b| a.t() == b.t());
        traj.samples = all;
    }
}

fn check_dichotomy(traj: &Trajectory) -> Result<()> {
    let zero = traj
        .samples
        .iter()
        .filter(|s| s.state.eta_bar.iter().all(|&e| e == 0.0))
        .count();
    if zero > 0 {
        return Err(Error::IntegrationQuality(format!(
            "{zero} samples of a winding trajectory have vanishing angular momentum"
        )));
    }
    Ok(())
}
