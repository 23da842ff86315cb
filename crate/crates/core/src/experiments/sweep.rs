use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{integrate, launch_winding, Direction, FlowOptions};
use crate::section::{CrossSection, YPoint};
use crate::warp::{compute_cf, WarpingFunction};

use super::{ln_f_floor, thread_pool};

/// Knobs of a δ-sweep. All of them end up in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub flow: FlowOptions,
    /// Relative error below which successive errors count as equal.
    pub noise_floor: f64,
    /// Largest final relative error for which the sweep is reported converged.
    pub accept_rel: f64,
    pub cf_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            flow: FlowOptions::default(),
            noise_floor: 1e-8,
            accept_rel: 0.05,
            cf_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub warp: String,
    pub section: String,
    pub radius: f64,
    pub deltas: Vec<f64>,
    pub lengths: Vec<f64>,
    /// `f'(δ) ℓ(y_δ)`.
    pub normalized: Vec<f64>,
    pub winding_counts: Vec<f64>,
    pub extrapolated_limit: Option<f64>,
    /// Fitted exponent `p` in `normalized ≈ L + A δ^p`.
    pub fitted_rate: Option<f64>,
    pub reference_cf: Option<f64>,
    /// `|normalized / C_f − 1|`; empty without a reference.
    pub errors_rel: Vec<f64>,
    pub tail_decreasing: bool,
    pub converged: bool,
    pub notes: Vec<String>,
    pub max_shell_residual: f64,
    pub max_clairaut_drift: f64,
    pub options: SweepOptions,
}

/// Geometric ladder from `min(0.3, R/2)` down to `1e-4` (`1e-3` for the
/// exponentially flat families) with ratio close to `1/√10`.
///
/// Entries where `f(δ)` leaves the representable range are dropped; the
/// second value lists them.
pub fn default_delta_ladder(wf: &WarpingFunction) -> (Vec<f64>, Vec<f64>) {
    let hi = 0.3f64.min(0.5 * wf.domain_radius());
    let lo = if wf.is_exponential() { 1e-3 } else { 1e-4 };
    geometric_ladder(wf, hi, lo)
}

/// Geometric ladder from `hi` to `lo` (both included) with ratio close to `1/√10`.
pub fn geometric_ladder(wf: &WarpingFunction, hi: f64, lo: f64) -> (Vec<f64>, Vec<f64>) {
    let steps = ((hi / lo).log10() / 0.5).ceil().max(1.0) as usize;
    let q = (lo / hi).powf(1.0 / steps as f64);
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for k in 0..=steps {
        let d = if k == steps {
            lo
        } else {
            hi * q.powi(k as i32)
        };
        if wf.ln_f(d) >= ln_f_floor() {
            keep.push(d);
        } else {
            dropped.push(d);
        }
    }
    (keep, dropped)
}

/// Integrate the winding geodesic through `r = δ` for every δ and compare
/// `f'(δ) ℓ(y_δ)` with `C_f`.
pub fn delta_sweep(
    wf: &WarpingFunction,
    cs: &CrossSection,
    deltas: &[f64],
    y0: &YPoint,
    v0: &[f64],
    options: &SweepOptions,
) -> Result<SweepResult> {
    if deltas.is_empty() {
        return Err(Error::invalid("delta ladder is empty"));
    }
    let radius = wf.domain_radius();
    for w in deltas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::invalid("delta ladder must be strictly decreasing"));
        }
    }
    if !(deltas[0] < radius && deltas[deltas.len() - 1] > 0.0) {
        return Err(Error::invalid(format!("deltas must lie in (0, {radius})")));
    }
    let flow = options.flow;
    let runs: Vec<Result<(f64, f64, f64, f64, f64)>> = thread_pool()?.install(|| {
        deltas
            .par_iter()
            .map(|&delta| {
                let st = launch_winding(wf, cs, delta, y0, v0)?;
                let tr = integrate(wf, cs, &st, Direction::Both, flow)
                    .map_err(|e| with_delta(e, delta))?;
                let l = tr.winding_length()?;
                Ok((
                    l,
                    wf.f_prime(delta) * l,
                    tr.winding_count()?,
                    tr.max_shell_residual(),
                    tr.max_clairaut_drift(),
                ))
            })
            .collect()
    });
    let mut lengths = Vec::with_capacity(deltas.len());
    let mut normalized = Vec::with_capacity(deltas.len());
    let mut counts = Vec::with_capacity(deltas.len());
    let (mut shell, mut clairaut) = (0.0f64, 0.0f64);
    for run in runs {
        let (l, n, c, s, k) = run?;
        lengths.push(l);
        normalized.push(n);
        counts.push(c);
        shell = shell.max(s);
        clairaut = clairaut.max(k);
    }

    let mut notes = Vec::new();
    let reference = if wf.kind().is_convex_family() {
        match compute_cf(wf, options.cf_tol) {
            Ok(cf) => Some(cf.value),
            Err(e) => {
                notes.push(format!("no reference constant: {e}"));
                None
            }
        }
    } else {
        notes.push(format!(
            "{} is outside the convex theory; no limit is asserted",
            wf.label()
        ));
        None
    };
    let errors_rel: Vec<f64> = match reference {
        Some(cf) => normalized.iter().map(|n| (n / cf - 1.0).abs()).collect(),
        None => Vec::new(),
    };
    let (limit, rate) = if wf.kind().is_convex_family() {
        richardson(deltas, &normalized, options.noise_floor)
    } else {
        (None, None)
    };
    let tail_decreasing =
        !errors_rel.is_empty() && tail_decreasing(&errors_rel, options.noise_floor);
    let final_ok = errors_rel.last().is_some_and(|e| *e <= options.accept_rel);
    let converged = tail_decreasing && final_ok;
    if reference.is_some() && !tail_decreasing {
        notes.push("relative errors are not decreasing over the last 4 ladder points".into());
    }
    if reference.is_some() && !final_ok {
        notes.push(format!(
            "final relative error exceeds {}",
            options.accept_rel
        ));
    }
    Ok(SweepResult {
        warp: wf.label().to_string(),
        section: cs.to_string(),
        radius,
        deltas: deltas.to_vec(),
        lengths,
        normalized,
        winding_counts: counts,
        extrapolated_limit: limit,
        fitted_rate: rate,
        reference_cf: reference,
        errors_rel,
        tail_decreasing,
        converged,
        notes,
        max_shell_residual: shell,
        max_clairaut_drift: clairaut,
        options: *options,
    })
}

fn with_delta(e: Error, delta: f64) -> Error {
    match e {
        Error::Integration { t, reason } => Error::Integration {
            t,
            reason: format!("delta = {delta}: {reason}"),
        },
        Error::IntegrationQuality(m) => Error::IntegrationQuality(format!("delta = {delta}: {m}")),
        other => other,
    }
}

/// Errors over the last 4 entries never grow, up to the noise floor.
pub fn tail_decreasing(errors: &[f64], floor: f64) -> bool {
    if errors.len() < 2 {
        return false;
    }
    let tail = &errors[errors.len().saturating_sub(4)..];
    tail.windows(2).all(|w| w[1] <= w[0].max(floor))
}

/// Extrapolate `N(δ) = L + A δ^p` from the last 4 points with `p` fitted to
/// the log of successive differences.
///
/// Differences at the noise floor carry no rate information; if fewer than
/// two remain the last value is already the limit.
pub fn richardson(deltas: &[f64], values: &[f64], floor: f64) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let last = values[n - 1];
    if n < 3 {
        return (Some(last), None);
    }
    let k0 = n.saturating_sub(4);
    let mut pts = Vec::new();
    for k in k0..n - 1 {
        let d = values[k + 1] - values[k];
        if d.abs() > floor * last.abs().max(1.0) {
            pts.push((deltas[k].ln(), d));
        }
    }
    if pts.len() < 2 {
        return (Some(last), None);
    }
    if pts.iter().any(|p| p.1.signum() != pts[0].1.signum()) {
        return (None, None);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1.abs().ln()).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.abs().ln() - my)).sum();
    let p = sxy / sxx;
    if !(p > 0.0) || !p.is_finite() {
        return (None, None);
    }
    let (d1, d0) = (deltas[n - 1], deltas[n - 2]);
    let a = (values[n - 1] - values[n - 2]) / (d1.powf(p) - d0.powf(p));
    (Some(last - a * d1.powf(p)), Some(p))
}
