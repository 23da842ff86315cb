//! Warping functions of embedded surfaces of revolution.
//!
//! A profile `s(z)` rotated about the `z` axis has induced metric
//! `dr² + s(z(r))² dφ²` once `z` is traded for the arclength
//! `r(z) = ∫₀^z √(1 + s'(w)²) dw` of the generating curve.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::inverse::solve_increasing;
use crate::quadrature::{gk15, integrate, QuadOptions};

use super::{WarpKind, WarpingFunction};

/// Generating curve `s(z)` with `s(0) = 0`.
pub trait ProfileCurve: Send + Sync + fmt::Debug {
    fn s(&self, z: f64) -> f64;
    fn s_prime(&self, z: f64) -> f64;
    /// `Some(alpha)` for `s(z) = z^alpha` with `alpha < 1`, whose slope is infinite at 0.
    fn singular_power(&self) -> Option<f64> {
        None
    }
    fn label(&self) -> String;
}

/// `s(z) = z^alpha`.
#[derive(Debug, Clone, Copy)]
pub struct PowerProfile {
    pub alpha: f64,
}

impl ProfileCurve for PowerProfile {
    fn s(&self, z: f64) -> f64 {
        z.powf(self.alpha)
    }
    fn s_prime(&self, z: f64) -> f64 {
        if self.alpha == 1.0 {
            1.0
        } else {
            self.alpha * z.powf(self.alpha - 1.0)
        }
    }
    fn singular_power(&self) -> Option<f64> {
        (self.alpha < 1.0).then_some(self.alpha)
    }
    fn label(&self) -> String {
        format!("z^{}", self.alpha)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Profile given by a pair of closures.
#[derive(Clone)]
pub struct FnProfile {
    s: ScalarFn,
    ds: ScalarFn,
    label: String,
}

impl FnProfile {
    pub fn new<S, D>(label: impl Into<String>, s: S, ds: D) -> Self
    where
        S: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FnProfile {
            s: Arc::new(s),
            ds: Arc::new(ds),
            label: label.into(),
        }
    }
}

impl fmt::Debug for FnProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProfile")
            .field("label", &self.label)
            .finish()
    }
}

impl ProfileCurve for FnProfile {
    fn s(&self, z: f64) -> f64 {
        (self.s)(z)
    }
    fn s_prime(&self, z: f64) -> f64 {
        (self.ds)(z)
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Tabulated profile with monotone piecewise cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct TabulatedProfile {
    z: Vec<f64>,
    s: Vec<f64>,
    d: Vec<f64>,
    label: String,
}

impl TabulatedProfile {
    /// Rows must start at `(0, 0)`, with `z` and `s` strictly increasing.
    pub fn new(z: Vec<f64>, s: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if z.len() != s.len() || z.len() < 3 {
            return Err(Error::invalid(
                "profile table needs at least 3 rows of (z, s)",
            ));
        }
        if z[0] != 0.0 || s[0] != 0.0 {
            return Err(Error::invalid(
                "profile table must start at z = 0 with s = 0",
            ));
        }
        if let Some(i) = (1..z.len()).find(|&i| !(z[i] > z[i - 1])) {
            return Err(Error::invalid(format!(
                "profile z column is not strictly increasing at row {}",
                i + 1
            )));
        }
        if let Some(i) = (1..s.len()).find(|&i| !(s[i] > s[i - 1])) {
            return Err(Error::invalid(format!(
                "profile s column is not strictly increasing at row {}",
                i + 1
            )));
        }
        let d = pchip_slopes(&z, &s);
        Ok(TabulatedProfile {
            z,
            s,
            d,
            label: label.into(),
        })
    }

    /// Two-column CSV `(z, s)` with a header row.
    pub fn from_csv_reader<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut z = Vec::new();
        let mut s = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::invalid(format!("profile CSV: {e}")))?;
            if rec.len() < 2 {
                return Err(Error::invalid(format!(
                    "profile CSV row {} has fewer than 2 columns",
                    i + 2
                )));
            }
            let parse = |k: usize| {
                rec[k]
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("profile CSV row {}: {e}", i + 2)))
            };
            z.push(parse(0)?);
            s.push(parse(1)?);
        }
        Self::new(z, s, label)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file, path.display().to_string())
    }

    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }

    fn segment(&self, z: f64) -> usize {
        let i = self.z.partition_point(|&x| x <= z);
        i.clamp(1, self.z.len() - 1) - 1
    }
}

// Fritsch–Carlson slopes with the usual one-sided three-point endpoints.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v.signum() != d0.signum() {
            v = 0.0;
        } else if d0.signum() != d1.signum() && v.abs() > 3.0 * d0.abs() {
            v = 3.0 * d0;
        }
        v
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

impl ProfileCurve for TabulatedProfile {
    fn s(&self, z: f64) -> f64 {
        let k = self.segment(z);
        let h = self.z[k + 1] - self.z[k];
        let t = (z - self.z[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.s[k]
            + (t3 - 2.0 * t2 + t) * h * self.d[k]
            + (-2.0 * t3 + 3.0 * t2) * self.s[k + 1]
            + (t3 - t2) * h * self.d[k + 1]
    }
    fn s_prime(&self, z: f64) -> f64 {
        let k = self.segment(z);
        let h = self.z[k + 1] - self.z[k];
        let t = (z - self.z[k]) / h;
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * (self.s[k] - self.s[k + 1]) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.d[k]
            + (3.0 * t2 - 2.0 * t) * self.d[k + 1]
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Arclength tables and inversions behind a profile-derived warping function.
#[derive(Debug)]
pub struct ProfileWarp {
    curve: Arc<dyn ProfileCurve>,
    z_max: f64,
    /// Exponent of the substitution `w = v^m` that smooths an infinite slope at 0.
    m: i32,
    zs: Vec<f64>,
    rs: Vec<f64>,
    r_max: f64,
    rho_max: f64,
}

fn speed(curve: &dyn ProfileCurve, w: f64) -> f64 {
    let d = curve.s_prime(w);
    (1.0 + d * d).sqrt()
}

impl ProfileWarp {
    pub fn curve(&self) -> &dyn ProfileCurve {
        self.curve.as_ref()
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn max_radius(&self) -> f64 {
        self.r_max
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    /// Arclength `r(z)` from the tip.
    pub fn arclength(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z <= self.zs[0] {
            return arclength_from_tip(self.curve.as_ref(), self.m, z);
        }
        let k = self.zs.partition_point(|&x| x <= z) - 1;
        let a = self.zs[k];
        if z == a {
            return self.rs[k];
        }
        self.rs[k] + gk15(&mut |w| speed(self.curve.as_ref(), w), a, z).0
    }

    /// Parameter `z` at arclength `r`.
    pub fn z_of_r(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let idx = self.rs.partition_point(|&x| x < r);
        let (lo, hi) = if idx == 0 {
            (0.0, self.zs[0])
        } else if idx >= self.rs.len() {
            (self.zs[self.zs.len() - 1], self.z_max)
        } else {
            (self.zs[idx - 1], self.zs[idx])
        };
        if r >= self.r_max {
            // a short linear continuation past the rim keeps trial steps of
            // the integrator that overshoot the boundary well defined
            return if r <= self.r_max * 1.05 {
                self.z_max + (r - self.r_max) / speed(self.curve.as_ref(), self.z_max)
            } else {
                f64::NAN
            };
        }
        solve_increasing(
            |z| self.arclength(z),
            |z| speed(self.curve.as_ref(), z),
            r,
            lo,
            hi,
        )
        .unwrap_or(f64::NAN)
    }

    fn z_of_s(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let c = self.curve.as_ref();
        solve_increasing(|z| c.s(z), |z| c.s_prime(z), rho, 0.0, self.z_max).unwrap_or(f64::NAN)
    }

    pub fn f(&self, r: f64) -> f64 {
        self.curve.s(self.z_of_r(r))
    }

    pub fn ln_f(&self, r: f64) -> f64 {
        self.f(r).ln()
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        let d = self.curve.s_prime(self.z_of_r(r));
        if d.is_infinite() {
            1.0
        } else {
            d / (1.0 + d * d).sqrt()
        }
    }

    pub fn log_derivative(&self, r: f64) -> f64 {
        let z = self.z_of_r(r);
        let d = self.curve.s_prime(z);
        let fp = if d.is_infinite() {
            1.0
        } else {
            d / (1.0 + d * d).sqrt()
        };
        fp / self.curve.s(z)
    }

    pub fn inverse(&self, rho: f64) -> f64 {
        self.arclength(self.z_of_s(rho))
    }

    pub fn ln_inverse_prime(&self, rho: f64) -> f64 {
        let d = self.curve.s_prime(self.z_of_s(rho));
        if d.is_infinite() {
            0.0
        } else {
            0.5 * (d * d).ln_1p() - d.ln()
        }
    }
}

fn arclength_from_tip(curve: &dyn ProfileCurve, m: i32, z: f64) -> f64 {
    let opts = QuadOptions {
        abs_tol: 1e-15 * z,
        rel_tol: 1e-15,
        max_intervals: 2000,
    };
    let res = if m == 1 {
        integrate(|w| speed(curve, w), 0.0, z, opts)
    } else {
        let mf = m as f64;
        integrate(
            |v: f64| {
                if v == 0.0 {
                    return 0.0;
                }
                let w = v.powi(m);
                // m v^{m-1} sqrt(1 + s'(w)^2), written to avoid inf * 0
                let d = curve.s_prime(w);
                let vm1 = v.powi(m - 1);
                mf * (vm1 * vm1 + (d * vm1).powi(2)).sqrt()
            },
            0.0,
            z.powf(1.0 / mf),
            opts,
        )
    };
    match res {
        Ok(r) => r.value,
        Err(_) => f64::NAN,
    }
}

/// Convert a profile on `[0, z_max]` into the warping function of its surface of revolution.
///
/// `grid` is the number of geometric nodes used to tabulate the arclength.
pub fn profile_to_warp(
    curve: Arc<dyn ProfileCurve>,
    z_max: f64,
    grid: usize,
) -> Result<WarpingFunction> {
    if !(z_max.is_finite() && z_max > 0.0) {
        return Err(Error::invalid(format!(
            "z_max must be positive (got {z_max})"
        )));
    }
    if grid < 16 {
        return Err(Error::invalid("profile grid needs at least 16 nodes"));
    }
    if curve.s(0.0) != 0.0 {
        return Err(Error::invalid(format!(
            "profile must vanish at z = 0 (s(0) = {})",
            curve.s(0.0)
        )));
    }
    let (m, kind) = match curve.singular_power() {
        Some(alpha) if alpha > 0.0 && alpha <= 2.0 / 3.0 => {
            ((1.0 / alpha).ceil() as i32, WarpKind::Conical)
        }
        Some(alpha) => return Err(Error::invalid(format!(
            "profile z^{alpha} has infinite slope at 0; only exponents in (0, 2/3] are supported"
        ))),
        None => {
            let d0 = curve.s_prime(0.0);
            if !d0.is_finite() || d0 < 0.0 {
                return Err(Error::invalid(format!(
                    "profile slope at 0 is not defined (s'(0) = {d0})"
                )));
            }
            (
                1,
                if d0 <= 1e-8 {
                    WarpKind::Cuspidal
                } else {
                    WarpKind::Conical
                },
            )
        }
    };
    let z_lo = z_max * 1e-8;
    // sample s on the grid: it must be positive and increasing for f to be a warping function
    let zs = geometric(z_lo, z_max, grid);
    let mut prev = 0.0;
    for &z in &zs {
        let v = curve.s(z);
        if !(v > prev) || !v.is_finite() {
            return Err(Error::invalid(format!(
                "profile must be positive and strictly increasing (fails near z = {z:e})"
            )));
        }
        prev = v;
    }
    let c = curve.as_ref();
    let mut rs = Vec::with_capacity(grid);
    let mut r = arclength_from_tip(c, m, z_lo);
    rs.push(r);
    for w in zs.windows(2) {
        let piece = integrate(
            |x| speed(c, x),
            w[0],
            w[1],
            QuadOptions {
                abs_tol: 1e-16 * w[1],
                rel_tol: 1e-15,
                max_intervals: 200,
            },
        )?;
        r += piece.value;
        rs.push(r);
    }
    if rs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Internal(
            "arclength of the profile is not increasing".into(),
        ));
    }
    let pw = ProfileWarp {
        curve: curve.clone(),
        z_max,
        m,
        r_max: *rs.last().unwrap(),
        zs,
        rs,
        rho_max: curve.s(z_max),
    };
    let r_max = pw.r_max;
    let label = format!("profile:{}", curve.label());
    Ok(WarpingFunction::from_profile(
        Arc::new(pw),
        r_max,
        kind,
        label,
    ))
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * (step * i as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_lines() {
        let z: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let s: Vec<f64> = z.iter().map(|z| 2.0 * z).collect();
        let t = TabulatedProfile::new(z, s, "line").unwrap();
        assert!((t.s(0.37) - 0.74).abs() < 1e-15);
        assert!((t.s_prime(0.37) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pchip_is_monotone_on_monotone_data() {
        let z = vec![0.0, 0.1, 0.2, 0.3, 1.0];
        let s = vec![0.0, 0.01, 0.011, 0.5, 0.51];
        let t = TabulatedProfile::new(z, s, "kinks").unwrap();
        let mut prev = -1.0;
        for i in 0..=1000 {
            let v = t.s(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn table_rejects_non_monotone_s() {
        let z = vec![0.0, 0.1, 0.2, 0.3];
        let s = vec![0.0, 0.2, 0.1, 0.3];
        assert!(TabulatedProfile::new(z, s, "bad").is_err());
    }

    #[test]
    fn csv_reader_parses_header_and_rows() {
        let data = "z,s\n0,0\n0.5,0.25\n1,1\n";
        let t = TabulatedProfile::from_csv_reader(data.as_bytes(), "mem").unwrap();
        assert_eq!(t.z_max(), 1.0);
    }

    #[test]
    fn line_profile_gives_scaled_identity() {
        let w = profile_to_warp(Arc::new(PowerProfile { alpha: 1.0 }), 1.0, 512).unwrap();
        assert_eq!(w.kind(), WarpKind::Conical);
        for &r in &[1e-9, 1e-4, 0.3, 1.2] {
            let want = r / 2f64.sqrt();
            assert!(((w.f(r) - want) / want).abs() < 1e-12, "r = {r}");
        }
        assert!((w.domain_radius() - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn singular_power_profile_is_conical() {
        let w = profile_to_warp(Arc::new(PowerProfile { alpha: 0.5 }), 1.0, 512).unwrap();
        assert_eq!(w.kind(), WarpKind::Conical);
        assert!((w.f_prime(1e-8) - 1.0).abs() < 1e-6);
        assert!(profile_to_warp(Arc::new(PowerProfile { alpha: 0.8 }), 1.0, 512).is_err());
        let rep = w.validate();
        assert!(rep.roundtrip_max_rel < 1e-12, "{}", rep.roundtrip_max_rel);
    }
}
