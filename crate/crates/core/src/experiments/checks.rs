use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{integrate, launch_winding, Classification, Direction, FlowOptions, Trajectory};
use crate::section::{base_geodesic, CrossSection, YPoint};
use crate::warp::{WarpKind, WarpingFunction};

/// Slack used by the radial and covector bounds.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub delta: f64,
    pub c_bound: f64,
    /// `C = c e^{cR}`.
    pub big_c: f64,
    pub samples_checked: usize,
    /// Smallest `r − (1 − Cδ)|t|`.
    pub lower_margin: f64,
    /// Smallest `|t| + δ − r`.
    pub upper_margin: f64,
    /// Smallest `r − |t|`; only meaningful for warped sections.
    pub strict_margin: Option<f64>,
    /// Smallest `c|r − δ| − |ln(|η| / f(δ))|`.
    pub eta_margin: f64,
    /// Time of the worst violation, if any.
    pub worst_t: Option<f64>,
    pub skipped: bool,
    pub passed: bool,
    pub note: Option<String>,
}

/// Check `(1 − Cδ)|t| ≤ r(t) ≤ |t| + δ` and
/// `f(δ) e^{−c(r−δ)} ≤ |η| ≤ f(δ) e^{c(r−δ)}` at every sample.
///
/// Warped sections must in addition satisfy `r(t) > |t|`.
pub fn verify_radial_bounds(traj: &Trajectory, c_bound: f64, radius: f64) -> BoundsReport {
    let delta = traj.delta();
    let big_c = c_bound * (c_bound * radius).exp();
    let warped = c_bound == 0.0;
    let mut rep = BoundsReport {
        delta,
        c_bound,
        big_c,
        samples_checked: 0,
        lower_margin: f64::INFINITY,
        upper_margin: f64::INFINITY,
        strict_margin: warped.then_some(f64::INFINITY),
        eta_margin: f64::INFINITY,
        worst_t: None,
        skipped: false,
        passed: true,
        note: None,
    };
    if traj.classification() == Classification::Radial {
        rep.skipped = true;
        rep.note = Some("radial trajectory: the bounds degenerate and are skipped".into());
        return rep;
    }
    let wf = traj.warp();
    let cs = traj.section();
    let ln_fd = wf.ln_f(delta);
    let t_min = traj
        .event(crate::flow::EventKind::Minimum)
        .map(|e| e.t)
        .unwrap_or(0.0);
    let mut worst = 0.0f64;
    for s in traj.samples() {
        let t = (s.t() - t_min).abs();
        let r = s.r();
        let lower = r - (1.0 - big_c * delta) * t;
        let upper = t + delta - r;
        let st = &s.state;
        let ln_eta = st.ln_eta_scale + cs.conorm(r, &st.y, &st.eta_bar).ln();
        let eta = c_bound * (r - delta).abs() - (ln_eta - ln_fd).abs();
        rep.lower_margin = rep.lower_margin.min(lower);
        rep.upper_margin = rep.upper_margin.min(upper);
        rep.eta_margin = rep.eta_margin.min(eta);
        let mut bad = lower.min(upper).min(eta) + BOUND_SLACK;
        if let Some(m) = rep.strict_margin.as_mut() {
            let strict = r - t;
            *m = m.min(strict);
            if strict <= 0.0 {
                bad = bad.min(strict);
            }
        }
        if bad < worst {
            worst = bad;
            rep.worst_t = Some(s.t());
        }
        rep.samples_checked += 1;
    }
    rep.passed = rep.worst_t.is_none();
    rep
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub delta: f64,
    pub delta_bar: f64,
    /// Common time window `[t0, t1]`.
    pub window: (f64, f64),
    pub samples_checked: usize,
    /// Smallest `r̄(t) − r(t)`.
    pub min_margin: f64,
    pub worst_t: f64,
    /// Largest `|2H − 1|` over both trajectories.
    pub max_shell_residual: f64,
    pub max_clairaut_drift: f64,
    pub passed: bool,
}

/// Integrate the geodesics through `r = δ` and `r = δ̄` and check
/// `r(t) < r̄(t)` on the union of both sample grids inside the common window.
#[allow(clippy::too_many_arguments)]
pub fn comparison_test(
    wf: &WarpingFunction,
    cs: &CrossSection,
    delta: f64,
    delta_bar: f64,
    y0: &YPoint,
    v0: &[f64],
    y0_bar: &YPoint,
    v0_bar: &[f64],
    options: FlowOptions,
) -> Result<ComparisonReport> {
    if cs.c_bound() != 0.0 {
        return Err(Error::precondition(
            "comparison needs a warped product (c = 0)",
        ));
    }
    if !wf.kind().is_convex_family() {
        return Err(Error::precondition(format!(
            "comparison needs a convex warp ({} is not)",
            wf.label()
        )));
    }
    if !(0.0 < delta && delta < delta_bar && delta_bar < wf.domain_radius()) {
        return Err(Error::precondition(format!(
            "comparison needs 0 < delta < delta_bar < R (got {delta}, {delta_bar})"
        )));
    }
    let run = |d: f64, y: &YPoint, v: &[f64]| -> Result<Trajectory> {
        let st = launch_winding(wf, cs, d, y, v)?;
        integrate(wf, cs, &st, Direction::Both, options)
    };
    let a = run(delta, y0, v0)?;
    let b = run(delta_bar, y0_bar, v0_bar)?;
    let (a0, a1) = a.t_range();
    let (b0, b1) = b.t_range();
    let (t0, t1) = (a0.max(b0), a1.min(b1));
    let mut times: Vec<f64> = a
        .samples()
        .iter()
        .chain(b.samples())
        .map(|s| s.t())
        .filter(|t| *t >= t0 && *t <= t1)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut min_margin = f64::INFINITY;
    let mut worst_t = 0.0;
    for &t in &times {
        let m = b.r_at(t)? - a.r_at(t)?;
        if m < min_margin {
            min_margin = m;
            worst_t = t;
        }
    }
    Ok(ComparisonReport {
        delta,
        delta_bar,
        window: (t0, t1),
        samples_checked: times.len(),
        min_margin,
        worst_t,
        max_shell_residual: a.max_shell_residual().max(b.max_shell_residual()),
        max_clairaut_drift: a.max_clairaut_drift().max(b.max_clairaut_drift()),
        passed: min_margin > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    pub delta: f64,
    /// Sup over the window of the `h₀`-distance to the base geodesic.
    pub sup_distance: f64,
    pub window: (f64, f64),
    pub clipped: bool,
    pub shell_residual: f64,
    /// `None` off warped sections.
    pub clairaut_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub entries: Vec<LimitEntry>,
    pub decreasing: bool,
    pub final_sup: f64,
    pub threshold: f64,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Sup distance after τ-reparametrization is checked against this.
pub const LIMIT_THRESHOLD: f64 = 0.05;

/// Distances below this are integration noise.
pub const LIMIT_NOISE: f64 = 1e-8;

/// Compare the τ-reparametrized projections `ỹ_δ` with the `h₀`-geodesic
/// through `(y0, v0)` on a τ window, for each δ of a decreasing ladder.
pub fn limit_geodesic_test(
    wf: &WarpingFunction,
    cs: &CrossSection,
    deltas: &[f64],
    y0: &YPoint,
    v0: &[f64],
    window: (f64, f64),
    options: FlowOptions,
) -> Result<LimitReport> {
    if deltas.len() < 2 || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid(
            "limit test needs a strictly decreasing ladder of at least 2 deltas",
        ));
    }
    if !(window.0 < 0.0 && window.1 > 0.0) {
        return Err(Error::invalid("tau window must contain 0"));
    }
    let mut notes = Vec::new();
    if wf.kind() == WarpKind::Conical
        && (window.0 <= -std::f64::consts::FRAC_PI_2 || window.1 >= std::f64::consts::FRAC_PI_2)
    {
        notes.push("conical warp: the limit interval is (-pi/2, pi/2); the window is clipped by the trajectories".into());
    }
    let n = 201;
    let mut entries = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let st = launch_winding(wf, cs, delta, y0, v0)?;
        let tr = integrate(wf, cs, &st, Direction::Both, options)?;
        let (lo, hi) = (
            tr.samples()[0].tau,
            tr.samples()[tr.samples().len() - 1].tau,
        );
        let a = window.0.max(lo);
        let b = window.1.min(hi);
        let clipped = a > window.0 || b < window.1;
        if clipped {
            notes.push(format!("delta = {delta}: tau window clipped to [{a}, {b}]"));
        }
        let taus: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect();
        let tt = tr.resample_tau(&taus)?;
        let mut sup = 0.0f64;
        for s in &tt.samples {
            let want = base_geodesic(cs, y0, v0, s.tau)?;
            sup = sup.max(cs.distance0(&s.y, &want));
        }
        entries.push(LimitEntry {
            delta,
            sup_distance: sup,
            window: (a, b),
            clipped,
            shell_residual: tr.max_shell_residual(),
            clairaut_drift: cs.is_warped().then(|| tr.max_clairaut_drift()),
        });
    }
    // distances at rounding level carry no ordering
    let decreasing = entries.windows(2).all(|w| {
        w[1].sup_distance < w[0].sup_distance
            || w[1].sup_distance.max(w[0].sup_distance) <= LIMIT_NOISE
    });
    let final_sup = entries[entries.len() - 1].sup_distance;
    Ok(LimitReport {
        passed: decreasing && final_sup < LIMIT_THRESHOLD,
        entries,
        decreasing,
        final_sup,
        threshold: LIMIT_THRESHOLD,
        notes,
    })
}
