use serde::Serialize;

use crate::error::{Error, Result};
use crate::inverse::solve_increasing;
use crate::ode::dopri5_step;
use crate::section::{CrossSection, Manifold, YPoint};
use crate::warp::WarpingFunction;

use super::{
    Direction, FlowOptions, FlowSystem, GeodesicState, SharedSection, SharedWarp, IR, ITAU, ITH, IY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Radial,
    Winding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Crossing `r = R` inward (first sample).
    Entry,
    /// Lowest point, `θ = 0`.
    Minimum,
    /// Crossing `r = R` outward (last sample).
    Exit,
    /// A radial trajectory reaching the singular point.
    Singularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub r: f64,
}

/// A stored state together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub state: GeodesicState,
    /// `H = ½(sin²θ + |η|²/f²)`.
    pub hamiltonian: f64,
    /// `f(r) cos θ`.
    pub clairaut: f64,
    /// `|η|_h / f(r)`, equal to `cos θ` on the shell.
    pub eta_over_f: f64,
    /// `|ẏ|_h`.
    pub speed_y: f64,
    /// `∫ |ẏ|_h dt` from the start state.
    pub tau: f64,
    pub rho: f64,
    /// `sign(sin θ) F(f(r) |sin θ|)`.
    pub u: f64,
    /// Accepted integrator step (false for dense-output samples).
    pub accepted: bool,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.state.t
    }

    pub fn r(&self) -> f64 {
        self.state.r
    }

    pub fn theta(&self) -> f64 {
        self.state.theta
    }

    /// `2H − 1`.
    pub fn shell_residual(&self) -> f64 {
        2.0 * self.hamiltonian - 1.0
    }
}

/// An accepted step in integration time.
#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub t: f64,
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
    pub chart: u8,
}

/// One integration pass; `reversed` passes ran on `(t, θ, η) → (−t, −θ, −η)`.
#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub reversed: bool,
    pub nodes: Vec<Node>,
}

/// Output of an integration: samples, events and enough step data to
/// evaluate the solution anywhere in its time range.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub(crate) wf: SharedWarp,
    pub(crate) cs: SharedSection,
    pub(crate) options: FlowOptions,
    pub(crate) direction: Direction,
    pub(crate) start: GeodesicState,
    pub(crate) ln_scale: f64,
    pub(crate) branches: Vec<Branch>,
    pub(crate) samples: Vec<Sample>,
    pub(crate) events: Vec<Event>,
    pub(crate) classification: Classification,
    pub(crate) steps_rejected: usize,
}

/// Flip a vector from integration time to physical time of a reversed pass.
pub(crate) fn unreverse(z: &mut [f64], dim: usize) {
    z[ITH] = -z[ITH];
    z[ITAU] = -z[ITAU];
    for v in &mut z[IY + dim..IY + 2 * dim] {
        *v = -*v;
    }
}

impl Trajectory {
    pub fn warp(&self) -> &WarpingFunction {
        &self.wf
    }

    pub fn section(&self) -> &CrossSection {
        &self.cs
    }

    pub fn options(&self) -> FlowOptions {
        self.options
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn start(&self) -> &GeodesicState {
        &self.start
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn accepted_samples(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.accepted)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, kind: EventKind) -> Option<Event> {
        self.events.iter().copied().find(|e| e.kind == kind)
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn steps_accepted(&self) -> usize {
        self.branches
            .iter()
            .map(|b| b.nodes.len().saturating_sub(1))
            .sum()
    }

    pub fn steps_rejected(&self) -> usize {
        self.steps_rejected
    }

    pub fn t_range(&self) -> (f64, f64) {
        (
            self.samples[0].t(),
            self.samples[self.samples.len() - 1].t(),
        )
    }

    /// Smallest `r` over the trajectory (the minimum event when present).
    pub fn delta(&self) -> f64 {
        self.event(EventKind::Minimum)
            .map(|e| e.r)
            .unwrap_or_else(|| {
                self.samples
                    .iter()
                    .map(|s| s.r())
                    .fold(f64::INFINITY, f64::min)
            })
    }

    pub fn max_shell_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.shell_residual().abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|f cos θ − f(δ)| / f(r)`: the drift of the Clairaut integral
    /// measured on the scale of the unit shell.
    pub fn max_clairaut_drift(&self) -> f64 {
        if self.classification == Classification::Radial {
            return 0.0;
        }
        let ln_c0 = self.ln_scale;
        self.samples
            .iter()
            .map(|s| {
                let lf = self.wf.ln_f(s.r());
                (s.theta().cos() - (ln_c0 - lf).exp()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Whether both ends of the trajectory reached `r = R`.
    pub fn spans_entry_to_exit(&self) -> bool {
        self.event(EventKind::Entry).is_some() && self.event(EventKind::Exit).is_some()
    }

    /// Length of the projection to `(Y, h)`, `ℓ = ∫ |ẏ|_h dt`.
    pub fn winding_length(&self) -> Result<f64> {
        if self.classification == Classification::Radial {
            return Ok(0.0);
        }
        if !self.spans_entry_to_exit() {
            return Err(Error::precondition(
                "winding length needs a trajectory integrated from entry to exit (direction both)",
            ));
        }
        Ok(self.samples[self.samples.len() - 1].tau - self.samples[0].tau)
    }

    /// `ℓ / 2π` on the sphere, `ℓ / L` on a circle of length `L`.
    pub fn winding_count(&self) -> Result<f64> {
        let l = self.winding_length()?;
        Ok(match self.cs.manifold() {
            Manifold::Circle { circumference } => l / circumference,
            Manifold::Sphere => l / (2.0 * std::f64::consts::PI),
        })
    }

    fn system(&self) -> FlowSystem<'_> {
        FlowSystem::new(&self.wf, &self.cs, self.ln_scale)
    }

    /// Raw integration vector `[r, θ, τ, y, η̄]` and chart at physical time `t`.
    pub(crate) fn raw_at(&self, t: f64) -> Result<(Vec<f64>, u8)> {
        let (t0, t1) = self.t_range();
        if !(t >= t0 - 1e-12 * t0.abs().max(1.0) && t <= t1 + 1e-12 * t1.abs().max(1.0)) {
            return Err(Error::OutOfDomain(format!("t = {t} outside [{t0}, {t1}]")));
        }
        let t = t.clamp(t0, t1);
        if self.classification == Classification::Radial {
            return Ok(self.radial_at(t));
        }
        let backward = t < self.start.t;
        let branch = self
            .branches
            .iter()
            .find(|b| b.reversed == backward)
            .or_else(|| self.branches.first())
            .ok_or_else(|| Error::Internal("trajectory without integration data".into()))?;
        let ti = if branch.reversed { -t } else { t };
        let nodes = &branch.nodes;
        let k = nodes.partition_point(|n| n.t <= ti).max(1) - 1;
        let node = &nodes[k];
        let h = ti - node.t;
        let sys = self.system();
        let dim = sys.dim;
        let mut z = if h == 0.0 {
            node.z.clone()
        } else {
            let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| sys.rhs(node.chart, y, out);
            dopri5_step(&mut rhs, node.t, &node.z, &node.dz, h)
                .map_err(|_| {
                    Error::Internal(format!("dense evaluation left the domain at t = {t}"))
                })?
                .y
        };
        if branch.reversed {
            unreverse(&mut z, dim);
        }
        Ok((z, node.chart))
    }

    fn radial_at(&self, t: f64) -> (Vec<f64>, u8) {
        let first = &self.samples[0];
        let last = &self.samples[self.samples.len() - 1];
        let w = if last.t() > first.t() {
            (t - first.t()) / (last.t() - first.t())
        } else {
            0.0
        };
        let r = first.r() + w * (last.r() - first.r());
        let dim = self.cs.dim();
        let mut z = vec![0.0; IY + 2 * dim];
        z[IR] = r;
        z[ITH] = self.start.theta;
        for i in 0..dim {
            z[IY + i] = self.start.y.coords[i];
        }
        (z, self.start.y.chart)
    }

    /// The state at time `t`, by a sub-step from the preceding accepted step.
    pub fn state_at(&self, t: f64) -> Result<GeodesicState> {
        let (z, chart) = self.raw_at(t)?;
        Ok(self.to_state(t, &z, chart))
    }

    pub fn r_at(&self, t: f64) -> Result<f64> {
        Ok(self.raw_at(t)?.0[IR])
    }

    /// Cumulative `τ` at time `t`.
    pub fn tau_at(&self, t: f64) -> Result<f64> {
        Ok(self.raw_at(t)?.0[ITAU])
    }

    pub(crate) fn to_state(&self, t: f64, z: &[f64], chart: u8) -> GeodesicState {
        let dim = self.cs.dim();
        let mut y = [0.0; 2];
        let mut e = [0.0; 2];
        for i in 0..dim {
            y[i] = z[IY + i];
            e[i] = z[IY + dim + i];
        }
        GeodesicState {
            t,
            r: z[IR],
            theta: z[ITH],
            y: YPoint { chart, coords: y },
            eta_bar: e,
            ln_eta_scale: self.ln_scale,
        }
    }

    pub(crate) fn make_sample(&self, t: f64, z: &[f64], chart: u8, accepted: bool) -> Sample {
        let state = self.to_state(t, z, chart);
        let wf = &self.wf;
        let sth = z[ITH].sin();
        let lf = wf.ln_f(z[IR]);
        let (residual, clairaut, eta_over_f, speed) = if self.classification
            == Classification::Radial
        {
            (sth * sth - 1.0, 0.0, 0.0, 0.0)
        } else {
            self.system()
                .diagnostics(chart, z)
                .unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN))
        };
        let u = if sth == 0.0 || lf == f64::NEG_INFINITY {
            0.0
        } else {
            sth.signum() * wf.inverse_ln(lf + sth.abs().ln())
        };
        Sample {
            state,
            hamiltonian: 0.5 * (1.0 + residual),
            clairaut,
            eta_over_f,
            speed_y: speed,
            tau: z[ITAU],
            rho: lf.exp(),
            u,
            accepted,
        }
    }

    /// Resample on `n` uniform values of `τ` covering the whole trajectory.
    pub fn reparametrize_tau(&self, n: usize) -> Result<TauTrajectory> {
        if self.classification == Classification::Radial {
            return Err(Error::precondition(
                "a radial trajectory has no angular reparametrization",
            ));
        }
        if n < 2 {
            return Err(Error::invalid("need at least 2 resampling points"));
        }
        let tau0 = self.samples[0].tau;
        let tau1 = self.samples[self.samples.len() - 1].tau;
        let taus: Vec<f64> = (0..n)
            .map(|i| tau0 + (tau1 - tau0) * i as f64 / (n - 1) as f64)
            .collect();
        self.resample_tau(&taus)
    }

    /// States at the given values of `τ`, which must lie in the trajectory's range.
    pub fn resample_tau(&self, taus: &[f64]) -> Result<TauTrajectory> {
        let ln_delta = self.wf.ln_f(self.delta());
        let rescale = (self.ln_scale - ln_delta).exp();
        let mut out = Vec::with_capacity(taus.len());
        for &target in taus {
            let t = self.t_of_tau(target)?;
            let (z, chart) = self.raw_at(t)?;
            let st = self.to_state(t, &z, chart);
            out.push(TauSample {
                tau: target,
                t,
                r: st.r,
                theta: st.theta,
                y: st.y,
                eta_rescaled: [st.eta_bar[0] * rescale, st.eta_bar[1] * rescale],
            });
        }
        Ok(TauTrajectory {
            delta: self.delta(),
            samples: out,
        })
    }

    /// Time at which the cumulative angular length equals `tau`.
    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        let s = &self.samples;
        let (lo_tau, hi_tau) = (s[0].tau, s[s.len() - 1].tau);
        let slack = 1e-12 * lo_tau.abs().max(hi_tau.abs()).max(1.0);
        if !(tau >= lo_tau - slack && tau <= hi_tau + slack) {
            return Err(Error::OutOfDomain(format!(
                "tau = {tau} outside [{lo_tau}, {hi_tau}]"
            )));
        }
        let tau = tau.clamp(lo_tau, hi_tau);
        let k = s.partition_point(|x| x.tau < tau);
        if k == 0 {
            return Ok(s[0].t());
        }
        if k >= s.len() {
            return Ok(s[s.len() - 1].t());
        }
        if s[k].tau == tau {
            return Ok(s[k].t());
        }
        let (a, b) = (s[k - 1].t(), s[k].t());
        solve_increasing(
            |t| self.tau_at(t).unwrap_or(f64::NAN),
            |t| self.state_speed(t),
            tau,
            a,
            b,
        )
    }

    fn state_speed(&self, t: f64) -> f64 {
        match self.raw_at(t) {
            Ok((z, chart)) => self
                .system()
                .diagnostics(chart, &z)
                .map(|d| d.3)
                .unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }
}

/// A trajectory resampled in the angular time `τ`.
#[derive(Debug, Clone, Serialize)]
pub struct TauTrajectory {
    pub delta: f64,
    pub samples: Vec<TauSample>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TauSample {
    pub tau: f64,
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub y: YPoint,
    /// `η / f(δ)`.
    pub eta_rescaled: [f64; 2],
}

impl TauTrajectory {
    pub fn tau_range(&self) -> (f64, f64) {
        (
            self.samples[0].tau,
            self.samples[self.samples.len() - 1].tau,
        )
    }
}
