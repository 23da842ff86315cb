//! String specs for warps and cross sections, as used by configs and the CLI.
//!
//! Warps: `power:<alpha>`, `logpow:<mu>`, `expinv:<beta>`, `osc:<alpha>:<c>`,
//! `sqrt`, `profile:<path>`.
//! Sections: `circle:<length>`, `sphere`, each optionally followed by
//! `:pert=<a>` and `:shape=sin|cos`.
//!
//! `Display` prints the normalized form, so `parse(s).to_string()` is the
//! canonical spelling of `s`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::section::{
    circle_section, sphere_section, CrossSection, Perturbation, PerturbationShape,
};
use crate::warp::{
    make_concave_sqrt_warp, make_exp_warp, make_oscillating_warp, make_power_warp, profile_to_warp,
    ExpFamily, TabulatedProfile, WarpingFunction,
};

/// Grid used when a tabulated profile is turned into a warp.
pub const PROFILE_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum WarpSpec {
    Power { alpha: f64 },
    LogPower { mu: f64 },
    ExpInverse { beta: f64 },
    Oscillating { alpha: f64, c: f64 },
    Sqrt,
    Profile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionSpec {
    Circle {
        circumference: f64,
        perturbation: Perturbation,
    },
    Sphere {
        perturbation: Perturbation,
    },
}

fn number(field: &str, text: &str, spec: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("spec '{spec}': {field} '{text}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::invalid(format!(
            "spec '{spec}': {field} must be finite"
        )));
    }
    Ok(v)
}

impl FromStr for WarpSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(':').collect()
        };
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "warp spec '{s}' expects {n} parameter(s)"
                )))
            }
        };
        match head.to_ascii_lowercase().as_str() {
            "power" => {
                want(1)?;
                Ok(WarpSpec::Power { alpha: number("alpha", args[0], s)? })
            }
            "logpow" => {
                want(1)?;
                Ok(WarpSpec::LogPower { mu: number("mu", args[0], s)? })
            }
            "expinv" => {
                want(1)?;
                Ok(WarpSpec::ExpInverse { beta: number("beta", args[0], s)? })
            }
            "osc" => {
                want(2)?;
                Ok(WarpSpec::Oscillating {
                    alpha: number("alpha", args[0], s)?,
                    c: number("c", args[1], s)?,
                })
            }
            "sqrt" => {
                want(0)?;
                Ok(WarpSpec::Sqrt)
            }
            // paths may contain ':' themselves
            "profile" if !rest.is_empty() => Ok(WarpSpec::Profile { path: PathBuf::from(rest) }),
            "profile" => Err(Error::invalid("warp spec 'profile:' needs a file path")),
            other => Err(Error::invalid(format!(
                "unknown warp family '{other}' (expected power, logpow, expinv, osc, sqrt or profile)"
            ))),
        }
    }
}

impl fmt::Display for WarpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WarpSpec::Power { alpha } => write!(f, "power:{alpha}"),
            WarpSpec::LogPower { mu } => write!(f, "logpow:{mu}"),
            WarpSpec::ExpInverse { beta } => write!(f, "expinv:{beta}"),
            WarpSpec::Oscillating { alpha, c } => write!(f, "osc:{alpha}:{c}"),
            WarpSpec::Sqrt => write!(f, "sqrt"),
            WarpSpec::Profile { path } => write!(f, "profile:{}", path.display()),
        }
    }
}

impl WarpSpec {
    /// Build the warping function on `(0, radius)`.
    pub fn build(&self, radius: f64) -> Result<WarpingFunction> {
        match self {
            WarpSpec::Power { alpha } => make_power_warp(*alpha, radius),
            WarpSpec::LogPower { mu } => make_exp_warp(ExpFamily::LogPower { mu: *mu }, radius),
            WarpSpec::ExpInverse { beta } => {
                make_exp_warp(ExpFamily::ExpInversePower { beta: *beta }, radius)
            }
            WarpSpec::Oscillating { alpha, c } => {
                make_oscillating_warp(*alpha, *c)?.with_domain_radius(radius)
            }
            WarpSpec::Sqrt => make_concave_sqrt_warp(radius),
            WarpSpec::Profile { path } => {
                let table = TabulatedProfile::from_csv_path(path)?;
                let z_max = table.z_max();
                profile_to_warp(Arc::new(table), z_max, PROFILE_GRID)?.with_domain_radius(radius)
            }
        }
    }

    /// Whether `f` decays faster than any power, so tiny `δ` leaves double range quickly.
    pub fn is_exponential(&self) -> bool {
        matches!(
            self,
            WarpSpec::LogPower { .. } | WarpSpec::ExpInverse { .. }
        )
    }
}

impl FromStr for SectionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or("").to_ascii_lowercase();
        let mut perturbation = Perturbation::none();
        let mut circumference = None;
        for (i, part) in parts.enumerate() {
            if let Some(v) = part.strip_prefix("pert=") {
                perturbation.amplitude = number("pert", v, s)?;
            } else if let Some(v) = part.strip_prefix("shape=") {
                perturbation.shape = match v {
                    "sin" => PerturbationShape::SinR,
                    "cos" => PerturbationShape::CosR,
                    other => {
                        return Err(Error::invalid(format!(
                            "spec '{s}': unknown shape '{other}' (sin or cos)"
                        )))
                    }
                };
            } else if i == 0 && head == "circle" {
                circumference = Some(number("circumference", part, s)?);
            } else {
                return Err(Error::invalid(format!(
                    "spec '{s}': unexpected field '{part}'"
                )));
            }
        }
        match head.as_str() {
            "circle" => {
                let circumference = circumference.ok_or_else(|| {
                    Error::invalid(format!("spec '{s}': circle needs a circumference"))
                })?;
                if !(circumference > 0.0) {
                    return Err(Error::invalid(format!(
                        "spec '{s}': circumference must be positive"
                    )));
                }
                Ok(SectionSpec::Circle {
                    circumference,
                    perturbation,
                })
            }
            "sphere" => Ok(SectionSpec::Sphere { perturbation }),
            other => Err(Error::invalid(format!(
                "unknown cross section '{other}' (expected circle or sphere)"
            ))),
        }
    }
}

impl fmt::Display for SectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self {
            SectionSpec::Circle {
                circumference,
                perturbation,
            } => {
                write!(f, "circle:{circumference}")?;
                perturbation
            }
            SectionSpec::Sphere { perturbation } => {
                write!(f, "sphere")?;
                perturbation
            }
        };
        if p.amplitude != 0.0 {
            write!(f, ":pert={}", p.amplitude)?;
        }
        if p.shape != PerturbationShape::default() {
            write!(f, ":shape={}", p.shape.tag())?;
        }
        Ok(())
    }
}

impl SectionSpec {
    pub fn build(&self, radius: f64) -> Result<CrossSection> {
        match self {
            SectionSpec::Circle {
                circumference,
                perturbation,
            } => circle_section(*circumference, *perturbation, radius),
            SectionSpec::Sphere { perturbation } => sphere_section(*perturbation, radius),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SectionSpec::Circle { .. } => 1,
            SectionSpec::Sphere { .. } => 2,
        }
    }

    pub fn perturbation(&self) -> Perturbation {
        match self {
            SectionSpec::Circle { perturbation, .. } | SectionSpec::Sphere { perturbation } => {
                *perturbation
            }
        }
    }
}

macro_rules! serde_via_string {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_string!(WarpSpec);
serde_via_string!(SectionSpec);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_numbers() {
        assert_eq!(
            "power:2.0".parse::<WarpSpec>().unwrap().to_string(),
            "power:2"
        );
        assert_eq!(
            "osc:0.5:9.0".parse::<WarpSpec>().unwrap().to_string(),
            "osc:0.5:9"
        );
        assert_eq!(
            "circle:6.2832:pert=0.10"
                .parse::<SectionSpec>()
                .unwrap()
                .to_string(),
            "circle:6.2832:pert=0.1"
        );
        assert_eq!(
            "sphere:shape=sin"
                .parse::<SectionSpec>()
                .unwrap()
                .to_string(),
            "sphere"
        );
    }

    #[test]
    fn rejects_garbage() {
        for bad in [
            "",
            "power",
            "power:x",
            "power:1:2",
            "sqrt:1",
            "cone:1",
            "profile:",
            "osc:0.5",
        ] {
            assert!(bad.parse::<WarpSpec>().is_err(), "{bad}");
        }
        for bad in [
            "circle",
            "circle:-1",
            "torus:1",
            "sphere:3",
            "sphere:shape=tan",
            "circle:1:pert=q",
        ] {
            assert!(bad.parse::<SectionSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn profile_path_keeps_colons() {
        let w: WarpSpec = "profile:C:/data/z2.csv".parse().unwrap();
        assert_eq!(
            w,
            WarpSpec::Profile {
                path: PathBuf::from("C:/data/z2.csv")
            }
        );
    }
}
