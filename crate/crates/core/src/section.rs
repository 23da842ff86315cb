//! Cross sections `(Y, h_r)`: the circle and the round 2-sphere with an
//! optional conformal perturbation `h_r = (1 + a·w(r, y))² h_round`.
//!
//! The perturbation profile is `w = s(r)·b(y)` with `s = sin` (so `h₀` stays
//! round) or `s = cos` (so `h₀` itself is perturbed). The bump `b` is
//! `cos(2πφ/L)` on the circle and the height `p_z` on the sphere.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dopri5_step, error_norm, step_factor, DomainViolation};
use crate::warp::WarpingFunction;

/// Radial profile `s(r)` of the perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationShape {
    /// `s(r) = sin r`; the limiting metric `h₀` is unperturbed.
    #[default]
    SinR,
    /// `s(r) = cos r`; `h₀` carries the bump too.
    CosR,
}

impl PerturbationShape {
    pub fn tag(self) -> &'static str {
        match self {
            PerturbationShape::SinR => "sin",
            PerturbationShape::CosR => "cos",
        }
    }

    fn s(self, r: f64) -> f64 {
        match self {
            PerturbationShape::SinR => r.sin(),
            PerturbationShape::CosR => r.cos(),
        }
    }

    fn ds(self, r: f64) -> f64 {
        match self {
            PerturbationShape::SinR => r.cos(),
            PerturbationShape::CosR => -r.sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Perturbation {
    pub amplitude: f64,
    pub shape: PerturbationShape,
}

impl Perturbation {
    pub fn none() -> Self {
        Perturbation::default()
    }

    pub fn sin(amplitude: f64) -> Self {
        Perturbation {
            amplitude,
            shape: PerturbationShape::SinR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Manifold {
    Circle { circumference: f64 },
    Sphere,
}

/// A point of `Y` in one of the section's charts.
///
/// Circle: `coords[0]` is the unwrapped angle. Sphere: `(ϑ, φ)` polar
/// coordinates about the z axis (chart 0) or about the x axis (chart 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YPoint {
    pub chart: u8,
    pub coords: [f64; 2],
}

impl YPoint {
    pub fn circle(phi: f64) -> Self {
        YPoint {
            chart: 0,
            coords: [phi, 0.0],
        }
    }

    pub fn sphere(chart: u8, theta: f64, phi: f64) -> Self {
        YPoint {
            chart,
            coords: [theta, phi],
        }
    }
}

/// Symmetric matrix of size `dim ≤ 2` stored densely.
pub type Mat2 = [[f64; 2]; 2];

/// Quantities of a covector `η` at `(r, y)` needed by the geodesic equations.
#[derive(Debug, Clone, Copy)]
pub struct CovectorTerms {
    /// `|η|²_h`.
    pub norm2: f64,
    /// `h⁻¹ η`.
    pub sharp: [f64; 2],
    /// `∂_{y^k} |η|²_h`.
    pub d_y_norm2: [f64; 2],
    /// `∂_r |η|²_h`.
    pub d_r_norm2: f64,
}

const MAX_AMPLITUDE: f64 = 0.5;
const C_BOUND_SAFETY: f64 = 1.25;
const CHART_LO: f64 = FRAC_PI_4;
const CHART_HI: f64 = 3.0 * FRAC_PI_4;
// polar angle below which a chart is no longer trusted inside a step
const POLE_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct CrossSection {
    manifold: Manifold,
    perturbation: Perturbation,
    radius: f64,
    c_bound: f64,
}

/// Circle of the given circumference on `r ∈ [0, R]`.
pub fn circle_section(
    circumference: f64,
    perturbation: Perturbation,
    radius: f64,
) -> Result<CrossSection> {
    if !(circumference.is_finite() && circumference > 0.0) {
        return Err(Error::invalid(format!(
            "circumference must be positive (got {circumference})"
        )));
    }
    CrossSection::build(Manifold::Circle { circumference }, perturbation, radius)
}

/// Round unit 2-sphere on `r ∈ [0, R]`.
pub fn sphere_section(perturbation: Perturbation, radius: f64) -> Result<CrossSection> {
    CrossSection::build(Manifold::Sphere, perturbation, radius)
}

fn det(m: &Mat2, dim: usize) -> f64 {
    if dim == 1 {
        m[0][0]
    } else {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

fn inv(m: &Mat2, dim: usize) -> Mat2 {
    if dim == 1 {
        [[1.0 / m[0][0], 0.0], [0.0, 0.0]]
    } else {
        let d = det(m, 2);
        [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
    }
}

fn mat_vec(m: &Mat2, v: &[f64], dim: usize) -> [f64; 2] {
    let mut out = [0.0; 2];
    for i in 0..dim {
        for j in 0..dim {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

fn quad_form(m: &Mat2, v: &[f64], dim: usize) -> f64 {
    let mv = mat_vec(m, v, dim);
    (0..dim).map(|i| v[i] * mv[i]).sum()
}

fn scale(m: &Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

fn embed(chart: u8, y: &[f64]) -> [f64; 3] {
    let (st, ct) = y[0].sin_cos();
    let (sp, cp) = y[1].sin_cos();
    if chart == 0 {
        [st * cp, st * sp, ct]
    } else {
        [ct, st * cp, st * sp]
    }
}

/// Columns `∂p/∂ϑ`, `∂p/∂φ` of the chart embedding.
fn embed_jacobian(chart: u8, y: &[f64]) -> [[f64; 3]; 2] {
    let (st, ct) = y[0].sin_cos();
    let (sp, cp) = y[1].sin_cos();
    if chart == 0 {
        [[ct * cp, ct * sp, -st], [-st * sp, st * cp, 0.0]]
    } else {
        [[-st, ct * cp, ct * sp], [0.0, -st * sp, st * cp]]
    }
}

fn chart_coords(chart: u8, p: [f64; 3]) -> [f64; 2] {
    let (axis, u, v) = if chart == 0 {
        (p[2], p[0], p[1])
    } else {
        (p[0], p[1], p[2])
    };
    let transverse = u.hypot(v);
    [transverse.atan2(axis), v.atan2(u)]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Angle between two unit vectors, accurate for nearby points.
pub fn great_circle_angle(p: [f64; 3], q: [f64; 3]) -> f64 {
    let c = [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ];
    dot3(c, c).sqrt().atan2(dot3(p, q))
}

impl fmt::Display for CrossSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.manifold {
            Manifold::Circle { circumference } => write!(f, "circle of length {circumference}")?,
            Manifold::Sphere => write!(f, "round 2-sphere")?,
        }
        if self.perturbation.amplitude != 0.0 {
            write!(
                f,
                " perturbed by {} ({}(r) profile)",
                self.perturbation.amplitude,
                self.perturbation.shape.tag()
            )?;
        }
        Ok(())
    }
}

impl CrossSection {
    fn build(manifold: Manifold, perturbation: Perturbation, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "section radius must be positive (got {radius})"
            )));
        }
        let a = perturbation.amplitude;
        if !(a.is_finite() && a.abs() <= MAX_AMPLITUDE) {
            return Err(Error::invalid(format!(
                "perturbation amplitude must satisfy |a| <= {MAX_AMPLITUDE} so that 1 + a w stays in [1/2, 2] (got {a})"
            )));
        }
        let mut cs = CrossSection {
            manifold,
            perturbation,
            radius,
            c_bound: 0.0,
        };
        if a != 0.0 {
            cs.c_bound = C_BOUND_SAFETY * cs.sampled_c();
        }
        if !(cs.radius * cs.c_bound < 1.0) {
            return Err(Error::invalid(format!(
                "R c = {} must be < 1; shrink R or the perturbation",
                cs.radius * cs.c_bound
            )));
        }
        cs.check_positive_definite()?;
        Ok(cs)
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn perturbation(&self) -> Perturbation {
        self.perturbation
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        match self.manifold {
            Manifold::Circle { .. } => 1,
            Manifold::Sphere => 2,
        }
    }

    /// A constant `c` with `−2c h ≤ ∂_r h ≤ 2c h` on `[0, R] × Y`.
    pub fn c_bound(&self) -> f64 {
        self.c_bound
    }

    pub fn is_warped(&self) -> bool {
        self.perturbation.amplitude == 0.0
    }

    /// Whether `h₀` is the unperturbed round metric.
    pub fn base_is_round(&self) -> bool {
        self.is_warped() || self.perturbation.shape == PerturbationShape::SinR
    }

    /// Same section on a different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::build(self.manifold, self.perturbation, radius)
    }

    fn bump(&self, chart: u8, y: &[f64]) -> (f64, [f64; 2]) {
        match self.manifold {
            Manifold::Circle { circumference } => {
                let k = 2.0 * PI / circumference;
                let (s, c) = (k * y[0]).sin_cos();
                (c, [-k * s, 0.0])
            }
            Manifold::Sphere => {
                let (st, ct) = y[0].sin_cos();
                let (sp, cp) = y[1].sin_cos();
                if chart == 0 {
                    (ct, [-st, 0.0])
                } else {
                    (st * sp, [ct * sp, st * cp])
                }
            }
        }
    }

    /// Conformal factor `Ω = 1 + a s(r) b(y)` with `∂_r Ω` and `∂_y Ω`.
    fn conformal(&self, r: f64, chart: u8, y: &[f64]) -> (f64, f64, [f64; 2]) {
        let a = self.perturbation.amplitude;
        if a == 0.0 {
            return (1.0, 0.0, [0.0; 2]);
        }
        let sh = self.perturbation.shape;
        let (b, db) = self.bump(chart, y);
        let s = sh.s(r);
        (
            1.0 + a * s * b,
            a * sh.ds(r) * b,
            [a * s * db[0], a * s * db[1]],
        )
    }

    /// Round metric in the chart with its coordinate derivatives.
    fn round(&self, y: &[f64]) -> (Mat2, [Mat2; 2]) {
        match self.manifold {
            Manifold::Circle { .. } => ([[1.0, 0.0], [0.0, 0.0]], [[[0.0; 2]; 2]; 2]),
            Manifold::Sphere => {
                let (st, ct) = y[0].sin_cos();
                (
                    [[1.0, 0.0], [0.0, st * st]],
                    [[[0.0, 0.0], [0.0, 2.0 * st * ct]], [[0.0; 2]; 2]],
                )
            }
        }
    }

    /// `h(r, y)`.
    pub fn metric(&self, r: f64, y: &YPoint) -> Mat2 {
        let (om, _, _) = self.conformal(r, y.chart, &y.coords);
        scale(&self.round(&y.coords).0, om * om)
    }

    /// `∂_r h(r, y)`.
    pub fn d_r_metric(&self, r: f64, y: &YPoint) -> Mat2 {
        let (om, dr, _) = self.conformal(r, y.chart, &y.coords);
        scale(&self.round(&y.coords).0, 2.0 * om * dr)
    }

    /// `∂_{y^k} h(r, y)`.
    pub fn d_y_metric(&self, r: f64, y: &YPoint, k: usize) -> Mat2 {
        let (om, _, dy) = self.conformal(r, y.chart, &y.coords);
        let (g, dg) = self.round(&y.coords);
        let mut out = scale(&dg[k], om * om);
        let t = scale(&g, 2.0 * om * dy[k]);
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += t[i][j];
            }
        }
        out
    }

    /// `|η|²`, `η♯` and the derivatives of `|η|²` at `(r, y)`.
    pub fn covector_terms(
        &self,
        r: f64,
        chart: u8,
        y: &[f64],
        eta: &[f64],
    ) -> std::result::Result<CovectorTerms, DomainViolation> {
        let dim = self.dim();
        if dim == 2 && y[0].sin().abs() < POLE_GUARD {
            return Err(DomainViolation);
        }
        let (om, om_r, om_y) = self.conformal(r, chart, y);
        if !(om > 0.0) {
            return Err(DomainViolation);
        }
        let (g, dg) = self.round(y);
        let ginv = inv(&g, dim);
        let g_sharp = mat_vec(&ginv, eta, dim);
        let gnorm2: f64 = (0..dim).map(|i| eta[i] * g_sharp[i]).sum();
        let om2 = om * om;
        let norm2 = gnorm2 / om2;
        let sharp = [g_sharp[0] / om2, g_sharp[1] / om2];
        let mut d_y_norm2 = [0.0; 2];
        for k in 0..dim {
            // ∂(Ω⁻² ηᵀ g⁻¹ η) = −2Ω⁻³ ∂Ω |η|²_g − Ω⁻² (g⁻¹η)ᵀ ∂g (g⁻¹η)
            d_y_norm2[k] = -2.0 * om_y[k] / om * norm2 - quad_form(&dg[k], &g_sharp, dim) / om2;
        }
        let d_r_norm2 = -2.0 * om_r / om * norm2;
        Ok(CovectorTerms {
            norm2,
            sharp,
            d_y_norm2,
            d_r_norm2,
        })
    }

    /// Whether the chart of `y` should be swapped before continuing.
    pub fn needs_chart_switch(&self, y: &YPoint) -> bool {
        matches!(self.manifold, Manifold::Sphere) && !(CHART_LO..=CHART_HI).contains(&y.coords[0])
    }

    /// Re-express `(y, η)` in the other sphere chart.
    pub fn switch_chart(&self, y: &YPoint, eta: &[f64]) -> (YPoint, [f64; 2]) {
        if !matches!(self.manifold, Manifold::Sphere) {
            return (*y, [eta[0], eta.get(1).copied().unwrap_or(0.0)]);
        }
        let to = 1 - y.chart;
        let p = embed(y.chart, &y.coords);
        let coords = chart_coords(to, p);
        let (g, _) = self.round(&y.coords);
        let v = mat_vec(&inv(&g, 2), eta, 2);
        let ja = embed_jacobian(y.chart, &y.coords);
        let amb = [
            ja[0][0] * v[0] + ja[1][0] * v[1],
            ja[0][1] * v[0] + ja[1][1] * v[1],
            ja[0][2] * v[0] + ja[1][2] * v[1],
        ];
        let jb = embed_jacobian(to, &coords);
        let eta_b = [dot3(jb[0], amb), dot3(jb[1], amb)];
        (YPoint { chart: to, coords }, eta_b)
    }

    /// Point in a chart where the polar angle is in `[π/4, 3π/4]`.
    pub fn normalize_point(&self, y: &YPoint) -> YPoint {
        if self.needs_chart_switch(y) {
            self.switch_chart(y, &[0.0, 0.0]).0
        } else {
            *y
        }
    }

    /// Unit vector in R³ for sphere points; `(cos φ, sin φ, 0)` on the circle.
    pub fn embed(&self, y: &YPoint) -> [f64; 3] {
        match self.manifold {
            Manifold::Circle { circumference } => {
                let a = 2.0 * PI * y.coords[0] / circumference;
                [a.cos(), a.sin(), 0.0]
            }
            Manifold::Sphere => embed(y.chart, &y.coords),
        }
    }

    /// Distance in `(Y, h₀)`.
    ///
    /// Exact for the round sphere and for circles; for a perturbed `h₀` on the
    /// sphere the great-circle angle is scaled by `Ω₀` at the midpoint, which is
    /// accurate to second order for nearby points.
    pub fn distance0(&self, y1: &YPoint, y2: &YPoint) -> f64 {
        match self.manifold {
            Manifold::Circle { circumference } => {
                let (a, b) = (y1.coords[0], y2.coords[0]);
                let d = (b - a).rem_euclid(circumference);
                let len = |from: f64, to: f64| self.circle_length0(from, to);
                len(a, a + d).min(len(a + d, a + circumference))
            }
            Manifold::Sphere => {
                let p = embed(y1.chart, &y1.coords);
                let q = embed(y2.chart, &y2.coords);
                let ang = great_circle_angle(p, q);
                if self.base_is_round() {
                    ang
                } else {
                    let mut m = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                    let n = dot3(m, m).sqrt();
                    if n > 0.0 {
                        m = [m[0] / n, m[1] / n, m[2] / n];
                    }
                    ang * (1.0 + self.perturbation.amplitude * m[2])
                }
            }
        }
    }

    fn circle_length0(&self, from: f64, to: f64) -> f64 {
        let Manifold::Circle { circumference } = self.manifold else {
            unreachable!()
        };
        if self.base_is_round() {
            return to - from;
        }
        let k = 2.0 * PI / circumference;
        let a = self.perturbation.amplitude;
        (to - from) + a / k * ((k * to).sin() - (k * from).sin())
    }

    /// Speed of a tangent vector in `h₀`.
    pub fn speed0(&self, y: &YPoint, v: &[f64]) -> f64 {
        let g = self.metric(0.0, y);
        quad_form(&g, v, self.dim()).sqrt()
    }

    /// Covector `h_r(v, ·)` of a tangent vector.
    pub fn flat(&self, r: f64, y: &YPoint, v: &[f64]) -> [f64; 2] {
        mat_vec(&self.metric(r, y), v, self.dim())
    }

    /// Norm of a tangent vector in `h_r`.
    pub fn norm(&self, r: f64, y: &YPoint, v: &[f64]) -> f64 {
        quad_form(&self.metric(r, y), v, self.dim()).sqrt()
    }

    /// Norm of a covector in `h_r`.
    pub fn conorm(&self, r: f64, y: &YPoint, eta: &[f64]) -> f64 {
        let dim = self.dim();
        quad_form(&inv(&self.metric(r, y), dim), eta, dim).sqrt()
    }

    /// Grid points `(r, y)` used for sampled checks.
    fn sample_points(&self, nr: usize, ny: usize) -> Vec<(f64, YPoint)> {
        let mut out = Vec::with_capacity(nr * ny);
        for i in 0..nr {
            let r = self.radius * i as f64 / (nr - 1) as f64;
            match self.manifold {
                Manifold::Circle { circumference } => {
                    for j in 0..ny {
                        out.push((r, YPoint::circle(circumference * j as f64 / ny as f64)));
                    }
                }
                Manifold::Sphere => {
                    for j in 0..ny {
                        let th = PI * j as f64 / (ny - 1) as f64;
                        for k in 0..8 {
                            out.push((r, YPoint::sphere(0, th, 2.0 * PI * k as f64 / 8.0)));
                        }
                    }
                }
            }
        }
        out
    }

    fn sampled_c(&self) -> f64 {
        self.sample_points(128, 128)
            .into_iter()
            .map(|(r, y)| {
                let (om, om_r, _) = self.conformal(r, y.chart, &y.coords);
                (om_r / om).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_positive_definite(&self) -> Result<()> {
        for (r, y) in self.sample_points(32, 32) {
            let (om, _, _) = self.conformal(r, y.chart, &y.coords);
            if !(om > 0.0) {
                return Err(Error::invalid(format!(
                    "degenerate cross-section metric at r = {r}"
                )));
            }
        }
        Ok(())
    }

    /// Sampled check of positivity and of `−2c h ≤ ∂_r h ≤ 2c h`.
    pub fn validate(&self) -> SectionReport {
        let dim = self.dim();
        let mut min_eig = f64::INFINITY;
        let mut max_ratio: f64 = 0.0;
        for (r, y) in self.sample_points(64, 64) {
            let mut yy = y;
            if dim == 2 && yy.coords[0].sin().abs() < 1e-3 {
                // poles are covered by the other chart
                yy = self.switch_chart(&y, &[0.0, 0.0]).0;
            }
            let h = self.metric(r, &yy);
            let dh = self.d_r_metric(r, &yy);
            let hinv = inv(&h, dim);
            // generalized eigenvalues of (∂_r h, h) for dim ≤ 2
            let mut m = [[0.0; 2]; 2];
            for i in 0..dim {
                for j in 0..dim {
                    m[i][j] = (0..dim).map(|k| hinv[i][k] * dh[k][j]).sum();
                }
            }
            let eigs = eig2(&m, dim);
            for e in eigs.iter().take(dim) {
                max_ratio = max_ratio.max(e.abs());
            }
            let he = eig2(&h, dim);
            for e in he.iter().take(dim) {
                min_eig = min_eig.min(*e / round_scale(&yy, dim));
            }
        }
        SectionReport {
            min_metric_eigenvalue: min_eig,
            max_generalized_eigenvalue: max_ratio,
            c_bound: self.c_bound,
            positive_definite: min_eig > 0.0,
            c_bound_valid: max_ratio <= 2.0 * self.c_bound + 1e-14,
            radius_times_c: self.radius * self.c_bound,
        }
    }
}

fn round_scale(y: &YPoint, dim: usize) -> f64 {
    if dim == 2 {
        y.coords[0].sin().powi(2).min(1.0).max(1e-300)
    } else {
        1.0
    }
}

fn eig2(m: &Mat2, dim: usize) -> [f64; 2] {
    if dim == 1 {
        return [m[0][0], 0.0];
    }
    let tr = m[0][0] + m[1][1];
    let d = det(m, 2);
    let disc = (0.25 * tr * tr - d).max(0.0).sqrt();
    [0.5 * tr + disc, 0.5 * tr - disc]
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SectionReport {
    pub min_metric_eigenvalue: f64,
    pub max_generalized_eigenvalue: f64,
    pub c_bound: f64,
    pub positive_definite: bool,
    pub c_bound_valid: bool,
    pub radius_times_c: f64,
}

/// Point at time `τ` on the unit-speed `h₀`-geodesic from `(y0, v0)`.
pub fn base_geodesic(cs: &CrossSection, y0: &YPoint, v0: &[f64], tau: f64) -> Result<YPoint> {
    let speed = cs.speed0(y0, v0);
    if !((speed - 1.0).abs() <= 1e-9) {
        return Err(Error::invalid(format!(
            "initial velocity must have unit h0-length (got {speed})"
        )));
    }
    match cs.manifold {
        Manifold::Circle { .. } if cs.base_is_round() => {
            Ok(YPoint::circle(y0.coords[0] + tau * v0[0]))
        }
        Manifold::Sphere if cs.base_is_round() => {
            let p = embed(y0.chart, &y0.coords);
            let j = embed_jacobian(y0.chart, &y0.coords);
            let v = [
                j[0][0] * v0[0] + j[1][0] * v0[1],
                j[0][1] * v0[0] + j[1][1] * v0[1],
                j[0][2] * v0[0] + j[1][2] * v0[1],
            ];
            let (s, c) = tau.sin_cos();
            let q = [
                p[0] * c + v[0] * s,
                p[1] * c + v[1] * s,
                p[2] * c + v[2] * s,
            ];
            let mut out = YPoint {
                chart: y0.chart,
                coords: chart_coords(y0.chart, q),
            };
            if cs.needs_chart_switch(&out) {
                out = YPoint {
                    chart: 1 - y0.chart,
                    coords: chart_coords(1 - y0.chart, q),
                };
            }
            Ok(out)
        }
        _ => numeric_base_geodesic(cs, y0, v0, tau, 1e-12),
    }
}

/// Integrate the `h₀` geodesic equations in Hamiltonian form to relative tolerance `rtol`.
pub fn numeric_base_geodesic(
    cs: &CrossSection,
    y0: &YPoint,
    v0: &[f64],
    tau: f64,
    rtol: f64,
) -> Result<YPoint> {
    let dim = cs.dim();
    let sign = if tau < 0.0 { -1.0 } else { 1.0 };
    let v: Vec<f64> = v0.iter().take(dim).map(|x| sign * x).collect();
    let p0 = cs.flat(0.0, y0, &v);
    let mut chart = y0.chart;
    let mut state = vec![0.0; 2 * dim];
    state[..dim].copy_from_slice(&y0.coords[..dim]);
    state[dim..].copy_from_slice(&p0[..dim]);
    let t_end = tau.abs();
    let mut t = 0.0;
    let atol = vec![rtol * 1e-2; 2 * dim];
    let mut h = 1e-2_f64.min(t_end.max(1e-300));
    let mut dy = vec![0.0; 2 * dim];
    let make_rhs = |chart: u8| {
        move |_t: f64, s: &[f64], out: &mut [f64]| -> std::result::Result<(), DomainViolation> {
            let terms = cs.covector_terms(0.0, chart, &s[..dim], &s[dim..])?;
            for k in 0..dim {
                out[k] = terms.sharp[k];
                out[dim + k] = -0.5 * terms.d_y_norm2[k];
            }
            Ok(())
        }
    };
    let mut rhs = make_rhs(chart);
    rhs(t, &state, &mut dy).map_err(|_| Error::OutOfDomain("base geodesic start".into()))?;
    let mut guard = 0usize;
    while t < t_end {
        guard += 1;
        if guard > 2_000_000 {
            return Err(Error::Integration {
                t,
                reason: "base geodesic step budget exhausted".into(),
            });
        }
        let step = h.min(t_end - t);
        match dopri5_step(&mut rhs, t, &state, &dy, step) {
            Ok(out) => {
                let e = error_norm(&out.err, &state, &out.y, rtol, &atol);
                if e <= 1.0 {
                    t += step;
                    state = out.y;
                    dy = out.dy;
                    let y = YPoint {
                        chart,
                        coords: [state[0], if dim == 2 { state[1] } else { 0.0 }],
                    };
                    if cs.needs_chart_switch(&y) {
                        let (ny, neta) = cs.switch_chart(&y, &state[dim..]);
                        chart = ny.chart;
                        state[..2].copy_from_slice(&ny.coords);
                        state[2..].copy_from_slice(&neta);
                        rhs = make_rhs(chart);
                        rhs(t, &state, &mut dy)
                            .map_err(|_| Error::OutOfDomain("chart switch".into()))?;
                    }
                }
                h = step * step_factor(e);
            }
            Err(DomainViolation) => h = 0.5 * step,
        }
        if h < 1e-14 {
            return Err(Error::Integration {
                t,
                reason: "step size underflow in base geodesic".into(),
            });
        }
    }
    Ok(YPoint {
        chart,
        coords: [state[0], if dim == 2 { state[1] } else { 0.0 }],
    })
}

/// Scalar mean curvature `H₀ = −dim(Y) f'/f − ½ tr(h⁻¹ ∂_r h)` of `{r} × Y`.
pub fn mean_curvature_scalar(
    cs: &CrossSection,
    wf: &WarpingFunction,
    r: f64,
    y: &YPoint,
) -> Result<f64> {
    if !(r > 0.0 && r < wf.domain_radius()) {
        return Err(Error::OutOfDomain(format!(
            "r = {r} not in (0, {})",
            wf.domain_radius()
        )));
    }
    let dim = cs.dim();
    let (om, om_r, _) = cs.conformal(r, y.chart, &y.coords);
    // tr(h⁻¹ ∂_r h) = 2 dim ∂_rΩ/Ω for a conformal family
    Ok(-(dim as f64) * wf.log_derivative(r) - dim as f64 * om_r / om)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warped_circle_has_zero_c() {
        let cs = circle_section(2.0 * PI, Perturbation::none(), 1.5).unwrap();
        assert_eq!(cs.c_bound(), 0.0);
        assert_eq!(cs.d_r_metric(0.7, &YPoint::circle(1.0))[0][0], 0.0);
    }

    #[test]
    fn perturbed_circle_bound_dominates_samples() {
        let cs = circle_section(2.0 * PI, Perturbation::sin(0.1), 1.5).unwrap();
        let rep = cs.validate();
        assert!(rep.positive_definite);
        assert!(rep.c_bound_valid);
        assert!(cs.c_bound() > 0.0 && cs.c_bound() < 0.2);
    }

    #[test]
    fn large_amplitude_rejected() {
        assert!(circle_section(2.0 * PI, Perturbation::sin(0.6), 1.0).is_err());
    }

    #[test]
    fn chart_switch_preserves_point_and_norm() {
        let cs = sphere_section(Perturbation::none(), 1.0).unwrap();
        let y = YPoint::sphere(0, 0.3, 1.1);
        let eta = [0.4, -0.2];
        let (y2, eta2) = cs.switch_chart(&y, &eta);
        assert_eq!(y2.chart, 1);
        let p = cs.embed(&y);
        let q = cs.embed(&y2);
        assert!(great_circle_angle(p, q) < 1e-14);
        assert!((cs.conorm(0.5, &y, &eta) - cs.conorm(0.5, &y2, &eta2)).abs() < 1e-13);
        let (y3, eta3) = cs.switch_chart(&y2, &eta2);
        assert!((y3.coords[0] - y.coords[0]).abs() < 1e-13);
        assert!((eta3[0] - eta[0]).abs() < 1e-13 && (eta3[1] - eta[1]).abs() < 1e-13);
    }

    #[test]
    fn covector_terms_match_finite_differences() {
        let cs = sphere_section(
            Perturbation {
                amplitude: 0.05,
                shape: PerturbationShape::CosR,
            },
            1.0,
        )
        .unwrap();
        let y = [1.1, 0.4];
        let eta = [0.3, 0.5];
        let n2 = |r: f64, y: [f64; 2]| cs.covector_terms(r, 0, &y, &eta).unwrap().norm2;
        let t = cs.covector_terms(0.6, 0, &y, &eta).unwrap();
        let h = 1e-6;
        let fd_r = (n2(0.6 + h, y) - n2(0.6 - h, y)) / (2.0 * h);
        assert!((fd_r - t.d_r_norm2).abs() < 1e-8);
        for k in 0..2 {
            let mut a = y;
            let mut b = y;
            a[k] += h;
            b[k] -= h;
            let fd = (n2(0.6, a) - n2(0.6, b)) / (2.0 * h);
            assert!((fd - t.d_y_norm2[k]).abs() < 1e-8, "k = {k}");
        }
    }

    #[test]
    fn mean_curvature_of_flat_cone() {
        let cs = circle_section(2.0 * PI, Perturbation::none(), 1.5).unwrap();
        let wf = crate::warp::make_power_warp(1.0, 1.5).unwrap();
        let h = mean_curvature_scalar(&cs, &wf, 0.5, &YPoint::circle(0.0)).unwrap();
        assert!((h + 2.0).abs() < 1e-15);
    }
}
