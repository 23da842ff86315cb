use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::{integrate, launch_winding, Direction, FlowOptions, Trajectory};
use crate::section::{circle_section, Perturbation, YPoint};
use crate::warp::{compute_cf, make_power_warp, profile_to_warp, PowerProfile};

pub const FIGURE_RADIUS: f64 = 1.5;
pub const FIGURE_DELTA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    Cone,
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigurePoint {
    pub t: f64,
    pub r: f64,
    /// Unwrapped angle on the circle.
    pub angle: f64,
    /// Point of the embedded surface in R³.
    pub xyz: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure1Bundle {
    pub kind: FigureKind,
    pub radius: f64,
    pub delta: f64,
    pub warp: String,
    /// Path in the product `(0, R) × S¹` drawn in polar form.
    pub product: Vec<FigurePoint>,
    /// Path on the embedded surface of revolution.
    pub embedded: Vec<FigurePoint>,
    pub embedding: String,
    pub winding_length: f64,
    pub winding_count: f64,
    /// Angle swept between entry and exit (cone only).
    pub exit_angle: Option<f64>,
    /// `C_f / (2π f'(δ))` (cusp only).
    pub predicted_windings: Option<f64>,
    pub max_shell_residual: f64,
}

fn run(wf: &crate::warp::WarpingFunction, options: FlowOptions) -> Result<Trajectory> {
    let cs = circle_section(2.0 * PI, Perturbation::none(), FIGURE_RADIUS)?;
    let st = launch_winding(wf, &cs, FIGURE_DELTA, &YPoint::circle(0.0), &[1.0])?;
    integrate(wf, &cs, &st, Direction::Both, options)
}

fn points(tr: &Trajectory, embed: impl Fn(f64, f64) -> [f64; 3]) -> Vec<FigurePoint> {
    tr.samples()
        .iter()
        .map(|s| {
            let angle = s.state.y.coords[0];
            FigurePoint {
                t: s.t(),
                r: s.r(),
                angle,
                xyz: embed(s.r(), angle),
            }
        })
        .collect()
}

/// Sample paths for the cone `f = r` and the cusp `f = r²` at `R = 1.5`, `δ = 0.3`.
///
/// The cone is the flat plane. The cusp is drawn on the surface obtained by
/// rotating `x = z²`, whose warping function is computed from the profile.
pub fn figure1_data(kind: FigureKind, options: FlowOptions) -> Result<Figure1Bundle> {
    match kind {
        FigureKind::Cone => {
            let wf = make_power_warp(1.0, FIGURE_RADIUS)?;
            let tr = run(&wf, options)?;
            let product = points(&tr, |r, a| [r * a.cos(), r * a.sin(), 0.0]);
            let first = product[0].angle;
            let last = product[product.len() - 1].angle;
            Ok(Figure1Bundle {
                kind,
                radius: FIGURE_RADIUS,
                delta: FIGURE_DELTA,
                warp: wf.label().to_string(),
                embedded: product.clone(),
                product,
                embedding: "plane (f = r on a circle of length 2 pi)".into(),
                winding_length: tr.winding_length()?,
                winding_count: tr.winding_count()?,
                exit_angle: Some(last - first),
                predicted_windings: None,
                max_shell_residual: tr.max_shell_residual(),
            })
        }
        FigureKind::Cusp => {
            let wf = make_power_warp(2.0, FIGURE_RADIUS)?;
            let tr = run(&wf, options)?;
            let product = points(&tr, |r, a| [r * a.cos(), r * a.sin(), 0.0]);
            // z_max = 1.2 gives arclength about 1.83 > R
            let surface = profile_to_warp(Arc::new(PowerProfile { alpha: 2.0 }), 1.2, 2048)?
                .with_domain_radius(FIGURE_RADIUS)?;
            let tr_s = run(&surface, options)?;
            let prof = surface.profile().expect("profile warp");
            let embedded = points(&tr_s, |r, a| {
                let z = prof.z_of_r(r);
                let x = z * z;
                [x * a.cos(), x * a.sin(), z]
            });
            let cf = compute_cf(&wf, 1e-10)?.value;
            Ok(Figure1Bundle {
                kind,
                radius: FIGURE_RADIUS,
                delta: FIGURE_DELTA,
                warp: wf.label().to_string(),
                product,
                embedded,
                embedding: "surface of revolution of x = z^2".into(),
                winding_length: tr.winding_length()?,
                winding_count: tr.winding_count()?,
                exit_angle: None,
                predicted_windings: Some(cf / (2.0 * PI * wf.f_prime(FIGURE_DELTA))),
                max_shell_residual: tr.max_shell_residual().max(tr_s.max_shell_residual()),
            })
        }
    }
}
