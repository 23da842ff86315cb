use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::section::Manifold;

use super::{Classification, FlowOptions, Trajectory};

/// Self-describing header stored next to an exported trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryMetadata {
    pub warp: String,
    pub section: String,
    pub delta: f64,
    pub radius: f64,
    pub c_bound: f64,
    pub tolerances: FlowOptions,
    pub classification: Classification,
    pub winding_length: Option<f64>,
    pub winding_count: Option<f64>,
    pub t_range: (f64, f64),
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_shell_residual: f64,
    pub max_clairaut_drift: f64,
}

pub fn trajectory_metadata(
    traj: &Trajectory,
    warp_spec: &str,
    section_spec: &str,
) -> TrajectoryMetadata {
    TrajectoryMetadata {
        warp: warp_spec.to_string(),
        section: section_spec.to_string(),
        delta: traj.delta(),
        radius: traj.warp().domain_radius(),
        c_bound: traj.section().c_bound(),
        tolerances: traj.options(),
        classification: traj.classification(),
        winding_length: traj.winding_length().ok(),
        winding_count: traj.winding_count().ok(),
        t_range: traj.t_range(),
        accepted_steps: traj.steps_accepted(),
        rejected_steps: traj.steps_rejected(),
        max_shell_residual: traj.max_shell_residual(),
        max_clairaut_drift: traj.max_clairaut_drift(),
    }
}

/// CSV with columns `t, r, theta, y…, eta…, hamiltonian, clairaut, tau, rho, u`
/// (plus `chart` on the sphere).
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(traj, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    write_csv(traj, std::io::BufWriter::new(file))
}

fn write_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let dim = traj.section().dim();
    let sphere = matches!(traj.section().manifold(), Manifold::Sphere);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = vec!["t".into(), "r".into(), "theta".into()];
    for i in 0..dim {
        header.push(format!("y{i}"));
    }
    for i in 0..dim {
        header.push(format!("eta{i}"));
    }
    for name in ["hamiltonian", "clairaut", "tau", "rho", "u"] {
        header.push(name.into());
    }
    if sphere {
        header.push("chart".into());
    }
    let io = |e: csv::Error| Error::Internal(format!("csv: {e}"));
    w.write_record(&header).map_err(io)?;
    for s in traj.samples() {
        let eta = s.state.eta();
        let mut row: Vec<String> = vec![fmt(s.t()), fmt(s.r()), fmt(s.theta())];
        for i in 0..dim {
            row.push(fmt(s.state.y.coords[i]));
        }
        for e in eta.iter().take(dim) {
            row.push(fmt(*e));
        }
        for v in [s.hamiltonian, s.clairaut, s.tau, s.rho, s.u] {
            row.push(fmt(v));
        }
        if sphere {
            row.push(s.state.y.chart.to_string());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Internal(format!("csv: {e}")))?;
    Ok(())
}

fn fmt(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:e}")
}
