//! Geodesic flow of `g = dr² + f(r)² h_r` on the unit cosphere bundle.
//!
//! The state is `(r, θ, y, η)` with `ṙ = sin θ`, so the unit-speed
//! constraint reads `sin²θ + |η|²_h / f² = 1`. The covector is carried as
//! `η = s·η̄` with a fixed scale `s` (the launch value `f(δ)`), which keeps
//! every evolved component of order one even when `f(δ)` is astronomically
//! small.

mod export;
mod integrate;
mod trajectory;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::DomainViolation;
use crate::section::{CrossSection, YPoint};
use crate::warp::WarpingFunction;

pub use export::{trajectory_csv, trajectory_metadata, write_trajectory_csv, TrajectoryMetadata};
pub use integrate::integrate;
pub use trajectory::{
    Classification, Event, EventKind, Sample, TauSample, TauTrajectory, Trajectory,
};

/// A phase-space point on the unit shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicState {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub y: YPoint,
    /// `η / s`.
    pub eta_bar: [f64; 2],
    /// `ln s`; `-inf` marks a radial state.
    pub ln_eta_scale: f64,
}

impl GeodesicState {
    /// The covector `η` itself.
    pub fn eta(&self) -> [f64; 2] {
        if self.is_radial() {
            return [0.0; 2];
        }
        let s = self.ln_eta_scale.exp();
        [self.eta_bar[0] * s, self.eta_bar[1] * s]
    }

    pub fn is_radial(&self) -> bool {
        self.ln_eta_scale == f64::NEG_INFINITY
    }

    /// State with a given covector; `η = 0` gives a radial state.
    pub fn with_covector(t: f64, r: f64, theta: f64, y: YPoint, eta: [f64; 2]) -> Self {
        let scale = eta[0].abs().max(eta[1].abs());
        if scale == 0.0 {
            return GeodesicState {
                t,
                r,
                theta,
                y,
                eta_bar: [0.0; 2],
                ln_eta_scale: f64::NEG_INFINITY,
            };
        }
        GeodesicState {
            t,
            r,
            theta,
            y,
            eta_bar: [eta[0] / scale, eta[1] / scale],
            ln_eta_scale: scale.ln(),
        }
    }

    /// Radial state at `r` moving outward (`θ = π/2`) or inward.
    pub fn radial(r: f64, outward: bool, y: YPoint) -> Self {
        let theta = if outward { 1.0 } else { -1.0 } * std::f64::consts::FRAC_PI_2;
        GeodesicState::with_covector(0.0, r, theta, y, [0.0; 2])
    }
}

/// Integrator tolerances and sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of uniform-in-`t` dense samples added to the accepted steps.
    pub dense_nodes: usize,
    pub max_steps: usize,
    /// Largest tolerated `|2H − 1|` before the run is declared unreliable.
    pub shell_tolerance: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-10,
            atol: 1e-12,
            dense_nodes: 2048,
            max_steps: 2_000_000,
            shell_tolerance: 1e-6,
        }
    }
}

impl FlowOptions {
    /// Tighter control for the randomized verification suites.
    ///
    /// Shell drift grows linearly with the number of windings, and on the
    /// sphere a hundred windings at the default tolerances reach `1e-9`.
    pub fn verification() -> Self {
        FlowOptions {
            rtol: 1e-11,
            atol: 1e-13,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

/// Winding geodesic through its lowest point `r = δ` at `t = 0`.
///
/// `v0` is normalized in `h_δ`; the covector is `η = f(δ) h_δ(v̂, ·)`, so that
/// `|η| = f(δ)` and the state lies on the unit shell with `θ = 0`.
pub fn launch_winding(
    wf: &WarpingFunction,
    cs: &CrossSection,
    delta: f64,
    y0: &YPoint,
    v0: &[f64],
) -> Result<GeodesicState> {
    let radius = wf.domain_radius();
    if !(delta > 0.0 && delta < radius) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, {radius}) (got {delta})"
        )));
    }
    let dim = cs.dim();
    if v0.len() < dim {
        return Err(Error::invalid(format!(
            "initial velocity needs {dim} components"
        )));
    }
    let speed0 = cs.speed0(y0, v0);
    if !((speed0 - 1.0).abs() <= 1e-9) {
        return Err(Error::invalid(format!(
            "initial velocity must have unit h0-length (got {speed0})"
        )));
    }
    let ln_f = wf.ln_f(delta);
    if !ln_f.is_finite() {
        return Err(Error::OutOfDomain(format!(
            "f({delta}) is not representable (ln f = {ln_f})"
        )));
    }
    let n = cs.norm(delta, y0, v0);
    let v: Vec<f64> = v0.iter().take(dim).map(|x| x / n).collect();
    let eta_bar = cs.flat(delta, y0, &v);
    let mut state = GeodesicState {
        t: 0.0,
        r: delta,
        theta: 0.0,
        y: *y0,
        eta_bar,
        ln_eta_scale: ln_f,
    };
    if cs.needs_chart_switch(y0) {
        let (y, e) = cs.switch_chart(y0, &eta_bar);
        state.y = y;
        state.eta_bar = e;
    }
    Ok(state)
}

/// Derivative of a state, in the same layout as [`GeodesicState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateDerivative {
    pub r: f64,
    pub theta: f64,
    /// `|ẏ|_h`, the rate of the angular arclength `τ`.
    pub tau: f64,
    pub y: [f64; 2],
    /// Derivative of `η` (not of `η̄`).
    pub eta: [f64; 2],
}

pub(crate) struct FlowSystem<'a> {
    pub wf: &'a WarpingFunction,
    pub cs: &'a CrossSection,
    pub dim: usize,
    pub ln_scale: f64,
    pub r_limit: f64,
}

/// Index layout of the integrated vector: `[r, θ, τ, y.., η̄..]`.
pub(crate) const IR: usize = 0;
pub(crate) const ITH: usize = 1;
pub(crate) const ITAU: usize = 2;
pub(crate) const IY: usize = 3;

impl<'a> FlowSystem<'a> {
    pub fn new(wf: &'a WarpingFunction, cs: &'a CrossSection, ln_scale: f64) -> Self {
        let r_limit = wf.definition_radius().min(wf.domain_radius() * 1.05);
        FlowSystem {
            wf,
            cs,
            dim: cs.dim(),
            ln_scale,
            r_limit,
        }
    }

    pub fn len(&self) -> usize {
        IY + 2 * self.dim
    }

    pub fn eta_index(&self) -> usize {
        IY + self.dim
    }

    pub fn rhs(
        &self,
        chart: u8,
        z: &[f64],
        out: &mut [f64],
    ) -> std::result::Result<(), DomainViolation> {
        let r = z[IR];
        if !(r > 0.0 && r < self.r_limit) {
            return Err(DomainViolation);
        }
        let lf = self.wf.ln_f(r);
        let ld = self.wf.log_derivative(r);
        if !(lf.is_finite() && ld.is_finite() && ld > 0.0) {
            return Err(DomainViolation);
        }
        let d = self.dim;
        let ie = self.eta_index();
        let (sth, cth) = z[ITH].sin_cos();
        out[IR] = sth;
        let terms = self
            .cs
            .covector_terms(r, chart, &z[IY..IY + d], &z[ie..ie + d])?;
        if !(terms.norm2 > 0.0) {
            return Err(DomainViolation);
        }
        // s / f², finite as long as ln f stays above about −700
        let k = (self.ln_scale - 2.0 * lf).exp();
        out[ITH] = (ld - 0.5 * terms.d_r_norm2 / terms.norm2) * cth;
        out[ITAU] = terms.norm2.sqrt() * k;
        for i in 0..d {
            out[IY + i] = k * terms.sharp[i];
            out[ie + i] = -0.5 * k * terms.d_y_norm2[i];
        }
        Ok(())
    }

    /// `(2H − 1, f cos θ, |η|/f, |ẏ|_h)`, the last two in log-safe form.
    pub fn diagnostics(&self, chart: u8, z: &[f64]) -> Option<(f64, f64, f64, f64)> {
        let r = z[IR];
        let lf = self.wf.ln_f(r);
        let d = self.dim;
        let ie = self.eta_index();
        let terms = self
            .cs
            .covector_terms(r, chart, &z[IY..IY + d], &z[ie..ie + d])
            .ok()?;
        let nb = terms.norm2.sqrt();
        let eta_over_f = nb * (self.ln_scale - lf).exp();
        let c = z[ITH].cos();
        // q² − cos²θ factored to keep the residual accurate when both are tiny
        let two_h_minus_one = (eta_over_f - c) * (eta_over_f + c);
        let speed = nb * (self.ln_scale - 2.0 * lf).exp();
        Some((two_h_minus_one, lf.exp() * c, eta_over_f, speed))
    }
}

/// The vector field at a state.
pub fn vector_field(
    wf: &WarpingFunction,
    cs: &CrossSection,
    state: &GeodesicState,
) -> Result<StateDerivative> {
    if state.is_radial() {
        let (s, _) = state.theta.sin_cos();
        if !(state.r > 0.0 && state.r <= wf.domain_radius()) {
            return Err(Error::OutOfDomain(format!(
                "r = {} outside (0, R]",
                state.r
            )));
        }
        return Ok(StateDerivative {
            r: s,
            theta: wf.log_derivative(state.r) * state.theta.cos(),
            tau: 0.0,
            y: [0.0; 2],
            eta: [0.0; 2],
        });
    }
    let sys = FlowSystem::new(wf, cs, state.ln_eta_scale);
    let z = pack(&sys, state);
    let mut out = vec![0.0; sys.len()];
    sys.rhs(state.y.chart, &z, &mut out)
        .map_err(|_| Error::OutOfDomain(format!("state at r = {} outside the model", state.r)))?;
    let d = sys.dim;
    let ie = sys.eta_index();
    let s = state.ln_eta_scale.exp();
    let mut y = [0.0; 2];
    let mut eta = [0.0; 2];
    for i in 0..d {
        y[i] = out[IY + i];
        eta[i] = out[ie + i] * s;
    }
    Ok(StateDerivative {
        r: out[IR],
        theta: out[ITH],
        tau: out[ITAU],
        y,
        eta,
    })
}

pub(crate) fn pack(sys: &FlowSystem, state: &GeodesicState) -> Vec<f64> {
    let mut z = vec![0.0; sys.len()];
    z[IR] = state.r;
    z[ITH] = state.theta;
    z[ITAU] = 0.0;
    let ie = sys.eta_index();
    for i in 0..sys.dim {
        z[IY + i] = state.y.coords[i];
        z[ie + i] = state.eta_bar[i];
    }
    z
}

/// Unit-shell residual `|2H − 1|` of a state.
pub fn shell_residual(wf: &WarpingFunction, cs: &CrossSection, state: &GeodesicState) -> f64 {
    let s = state.theta.sin();
    if state.is_radial() {
        return (s * s - 1.0).abs();
    }
    let n = cs.conorm(state.r, &state.y, &state.eta_bar);
    let q = n * (state.ln_eta_scale - wf.ln_f(state.r)).exp();
    (s * s - 1.0 + q * q).abs()
}

pub(crate) type SharedWarp = Arc<WarpingFunction>;
pub(crate) type SharedSection = Arc<CrossSection>;
