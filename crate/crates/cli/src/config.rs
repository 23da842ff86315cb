use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sg_core::experiments::SweepOptions;
use sg_core::flow::FlowOptions;
use sg_core::section::{Perturbation, YPoint};
use sg_core::spec::{SectionSpec, WarpSpec};
use sg_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

/// Flat experiment description. Every field has a default so a config file
/// only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub warp: WarpSpec,
    pub section: SectionSpec,
    pub radius: f64,
    /// Lowest point of a single trace, or start radius of a radial one.
    pub delta: f64,
    /// Strictly decreasing ladder for sweeps and verification.
    pub deltas: Option<Vec<f64>>,
    /// Start point in coordinates: `[phi]` on the circle, `[theta, phi]` on the sphere.
    pub y0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
    pub radial: bool,
    /// `None` picks the command default.
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub dense_nodes: usize,
    pub shell_tolerance: f64,
    /// Largest `|2H − 1|` and Clairaut drift accepted by `verify`.
    pub conservation_tol: f64,
    pub noise_floor: f64,
    pub accept_rel: f64,
    pub cf_tol: f64,
    pub tau_window: Option<[f64; 2]>,
    pub seed: u64,
    pub bounds_cases: usize,
    pub comparison_cases: usize,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let flow = FlowOptions::default();
        let sweep = SweepOptions::default();
        RunConfig {
            warp: WarpSpec::Power { alpha: 2.0 },
            section: SectionSpec::Circle {
                circumference: 2.0 * PI,
                perturbation: Perturbation::none(),
            },
            radius: 1.5,
            delta: 0.3,
            deltas: None,
            y0: None,
            v0: None,
            radial: false,
            rtol: None,
            atol: None,
            dense_nodes: flow.dense_nodes,
            shell_tolerance: flow.shell_tolerance,
            conservation_tol: 1e-9,
            noise_floor: sweep.noise_floor,
            accept_rel: sweep.accept_rel,
            cf_tol: sweep.cf_tol,
            tau_window: None,
            seed: 7,
            bounds_cases: 200,
            comparison_cases: 100,
            output_dir: PathBuf::from("."),
            formats: vec![Format::Json, Format::Csv, Format::Svg],
        }
    }
}

/// Values given on the command line win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Warp spec, e.g. power:2, logpow:1.5, expinv:1, osc:0.5:9, sqrt, profile:PATH
    #[arg(long)]
    pub warp: Option<String>,
    /// Section spec, e.g. circle:6.283185307179586, sphere:pert=0.05:shape=cos
    #[arg(long)]
    pub section: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Comma-separated decreasing ladder
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub y0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub v0: Option<Vec<f64>>,
    /// Launch radially outward from r = delta
    #[arg(long)]
    pub radial: bool,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub accept_rel: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bounds_cases: Option<usize>,
    #[arg(long)]
    pub comparison_cases: Option<usize>,
    /// Output directory
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<Format>>,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidInput(msg.into()).into()
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn resolve(o: &Overrides) -> anyhow::Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(w) = &o.warp {
            c.warp = w.parse()?;
        }
        if let Some(s) = &o.section {
            c.section = s.parse()?;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { c.$f = v.clone(); } )* };
        }
        take!(
            radius,
            delta,
            accept_rel,
            seed,
            bounds_cases,
            comparison_cases,
            formats
        );
        if o.deltas.is_some() {
            c.deltas = o.deltas.clone();
        }
        if o.y0.is_some() {
            c.y0 = o.y0.clone();
        }
        if o.v0.is_some() {
            c.v0 = o.v0.clone();
        }
        if o.rtol.is_some() {
            c.rtol = o.rtol;
        }
        if o.atol.is_some() {
            c.atol = o.atol;
        }
        if let Some(p) = &o.out {
            c.output_dir = p.clone();
        }
        c.radial |= o.radial;
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> anyhow::Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive (got {v})")))
            }
        };
        positive("radius", self.radius)?;
        positive("delta", self.delta)?;
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        positive("conservation_tol", self.conservation_tol)?;
        positive("accept_rel", self.accept_rel)?;
        positive("cf_tol", self.cf_tol)?;
        if let Some(w) = self.tau_window {
            if !(w[0] < 0.0 && w[1] > 0.0) {
                return Err(invalid("tau_window must contain 0"));
            }
        }
        Ok(())
    }

    /// Flow options, with `fallback` supplying the tolerances the config leaves open.
    pub fn flow(&self, fallback: FlowOptions) -> FlowOptions {
        FlowOptions {
            rtol: self.rtol.unwrap_or(fallback.rtol),
            atol: self.atol.unwrap_or(fallback.atol),
            dense_nodes: self.dense_nodes,
            shell_tolerance: self.shell_tolerance,
            ..fallback
        }
    }

    /// Records the tolerances actually used so the embedded config reproduces the run.
    pub fn pin(&mut self, flow: FlowOptions) {
        self.rtol = Some(flow.rtol);
        self.atol = Some(flow.atol);
    }

    pub fn sweep_options(&self, flow: FlowOptions) -> SweepOptions {
        SweepOptions {
            flow,
            noise_floor: self.noise_floor,
            accept_rel: self.accept_rel,
            cf_tol: self.cf_tol,
        }
    }

    /// Start point and velocity, defaulting to an oblique launch on the sphere.
    pub fn start(&self) -> anyhow::Result<(YPoint, Vec<f64>)> {
        let dim = self.section.dim();
        let (y, v) = match dim {
            1 => (
                self.y0.clone().unwrap_or_else(|| vec![0.0]),
                self.v0.clone().unwrap_or_else(|| vec![1.0]),
            ),
            _ => (
                self.y0.clone().unwrap_or_else(|| vec![1.2, 0.3]),
                self.v0
                    .clone()
                    .unwrap_or_else(|| vec![0.6, 0.8 / 1.2f64.sin()]),
            ),
        };
        if y.len() != dim || v.len() != dim {
            return Err(invalid(format!(
                "y0 and v0 need {dim} coordinate(s) for {}",
                self.section
            )));
        }
        let p = if dim == 1 {
            YPoint::circle(y[0])
        } else {
            YPoint::sphere(0, y[0], y[1])
        };
        Ok((p, v))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn output(&self, name: &str) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.output_dir)
            .map_err(|e| invalid(format!("{}: {e}", self.output_dir.display())))?;
        Ok(self.output_dir.join(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_normalized_and_overridden() {
        let dir = std::env::temp_dir().join(format!("sg-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.json");
        std::fs::write(&p, r#"{"warp": "power:2.0", "radius": 1.0, "delta": 0.1}"#).unwrap();
        let o = Overrides {
            config: Some(p),
            delta: Some(0.2),
            ..Default::default()
        };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.warp.to_string(), "power:2");
        assert_eq!(c.radius, 1.0);
        assert_eq!(c.delta, 0.2);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"wrap": "power:1"}"#).is_err());
    }

    #[test]
    fn bad_tolerance_is_rejected() {
        let o = Overrides {
            rtol: Some(-1.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&o).is_err());
    }
}
