//! Warping functions `f` of the radial variable, their inverses `F = f⁻¹`,
//! and the limit functional built from `F'`.
//!
//! Every family exposes `f`, `f'`, `F`, `F'` and the logarithmic forms
//! `ln f`, `f'/f`, `ln F'`. The logarithmic forms are what the integrator and
//! the ladder estimator use, because the exponential families underflow long
//! before their ratios stop being meaningful.

mod frak;
mod profile;

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inverse::solve_increasing;

pub use frak::{
    certification_sigmas, check_cf_monotonicity, compute_cf, estimate_frak, frak_value, CfResult,
    CfSource, FrakEstimate, FrakVerdict, LadderParams, MonotonicityReport,
};
pub use profile::{
    profile_to_warp, FnProfile, PowerProfile, ProfileCurve, ProfileWarp, TabulatedProfile,
};

/// Singularity type of a warping function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpKind {
    Conical,
    Cuspidal,
    ConcaveExperimental,
    OscillatingCounterexample,
}

impl WarpKind {
    /// Kinds for which the convexity invariants are enforced.
    pub fn is_convex_family(self) -> bool {
        matches!(self, WarpKind::Conical | WarpKind::Cuspidal)
    }
}

/// Parameters of the two exponentially flat families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpFamily {
    /// `f(x) = exp(-ln(1/x)^mu)`, `mu > 1`.
    LogPower { mu: f64 },
    /// `f(x) = exp(-x^(-beta))`, `beta > 0`.
    ExpInversePower { beta: f64 },
}

impl ExpFamily {
    /// Largest radius on which the family is convex.
    pub fn max_convex_radius(self) -> f64 {
        match self {
            // mu*y^mu - y - (mu-1) >= 0 with y = ln(1/x) holds iff y >= 1
            ExpFamily::LogPower { .. } => 1.0 / E,
            ExpFamily::ExpInversePower { beta } => (beta / (beta + 1.0)).powf(1.0 / beta),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Family {
    Power { alpha: f64 },
    LogPower { mu: f64 },
    ExpInversePower { beta: f64 },
    Oscillating { alpha: f64, c: f64 },
    Sqrt,
    Profile(Arc<ProfileWarp>),
}

/// A warping function `f : (0, R) → (0, ∞)` together with its inverse.
#[derive(Debug, Clone)]
pub struct WarpingFunction {
    family: Family,
    domain_radius: f64,
    kind: WarpKind,
    label: String,
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// `f(x) = x^alpha` with `alpha >= 1`.
pub fn make_power_warp(alpha: f64, radius: f64) -> Result<WarpingFunction> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::invalid(format!(
            "power warp needs alpha >= 1 (got {alpha}); use make_concave_sqrt_warp for the concave case"
        )));
    }
    check_radius(radius)?;
    let kind = if alpha == 1.0 {
        WarpKind::Conical
    } else {
        WarpKind::Cuspidal
    };
    Ok(WarpingFunction {
        family: Family::Power { alpha },
        domain_radius: radius,
        kind,
        label: format!("power:{}", fmt_num(alpha)),
    })
}

/// One of the exponentially flat cusp families.
pub fn make_exp_warp(family: ExpFamily, radius: f64) -> Result<WarpingFunction> {
    check_radius(radius)?;
    let (fam, label) = match family {
        ExpFamily::LogPower { mu } => {
            if !(mu.is_finite() && mu > 1.0) {
                return Err(Error::invalid(format!(
                    "log-power warp needs mu > 1 (got {mu})"
                )));
            }
            (Family::LogPower { mu }, format!("logpow:{}", fmt_num(mu)))
        }
        ExpFamily::ExpInversePower { beta } => {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::invalid(format!(
                    "exp-inverse-power warp needs beta > 0 (got {beta})"
                )));
            }
            (
                Family::ExpInversePower { beta },
                format!("expinv:{}", fmt_num(beta)),
            )
        }
    };
    let max_r = family.max_convex_radius();
    if radius > max_r {
        return Err(Error::invalid(format!(
            "{label} is not convex on (0, {radius}); largest admissible radius is {max_r}"
        )));
    }
    Ok(WarpingFunction {
        family: fam,
        domain_radius: radius,
        kind: WarpKind::Cuspidal,
        label,
    })
}

/// Smallest `c` for which `F(x) = x^alpha (c + sin ln x)` is increasing and concave.
pub fn oscillating_threshold(alpha: f64) -> f64 {
    (2.0 - alpha) / (1.0 - alpha) * (1.0 + alpha) / alpha
}

/// The warping function whose inverse is `F(x) = x^alpha (c + sin ln x)`.
///
/// `F` is increasing on all of `(0, ∞)`, so any radius is admissible; the
/// default is `R = 1`.
pub fn make_oscillating_warp(alpha: f64, c: f64) -> Result<WarpingFunction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "oscillating warp needs alpha in (0, 1) (got {alpha})"
        )));
    }
    let threshold = oscillating_threshold(alpha);
    if !(c >= threshold) {
        return Err(Error::invalid(format!(
            "oscillating warp needs c >= {threshold} for alpha = {alpha} (got {c})"
        )));
    }
    Ok(WarpingFunction {
        family: Family::Oscillating { alpha, c },
        domain_radius: 1.0,
        kind: WarpKind::OscillatingCounterexample,
        label: format!("osc:{}:{}", fmt_num(alpha), fmt_num(c)),
    })
}

/// `f(x) = sqrt(x)`; concave, so outside the convex theory.
pub fn make_concave_sqrt_warp(radius: f64) -> Result<WarpingFunction> {
    check_radius(radius)?;
    Ok(WarpingFunction {
        family: Family::Sqrt,
        domain_radius: radius,
        kind: WarpKind::ConcaveExperimental,
        label: "sqrt".into(),
    })
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "domain radius must be positive (got {radius})"
        )))
    }
}

impl fmt::Display for WarpingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on (0, {})", self.label, self.domain_radius)
    }
}

impl WarpingFunction {
    pub(crate) fn from_profile(
        profile: Arc<ProfileWarp>,
        radius: f64,
        kind: WarpKind,
        label: String,
    ) -> Self {
        WarpingFunction {
            family: Family::Profile(profile),
            domain_radius: radius,
            kind,
            label,
        }
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn kind(&self) -> WarpKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn profile(&self) -> Option<&ProfileWarp> {
        match &self.family {
            Family::Profile(p) => Some(p),
            _ => None,
        }
    }

    /// Largest radius the family admits.
    pub fn max_radius(&self) -> f64 {
        match &self.family {
            Family::Power { .. } | Family::Sqrt | Family::Oscillating { .. } => f64::INFINITY,
            Family::LogPower { mu } => ExpFamily::LogPower { mu: *mu }.max_convex_radius(),
            Family::ExpInversePower { beta } => {
                ExpFamily::ExpInversePower { beta: *beta }.max_convex_radius()
            }
            Family::Profile(p) => p.max_radius(),
        }
    }

    /// Whether `f` vanishes faster than any power at 0.
    pub fn is_exponential(&self) -> bool {
        matches!(
            self.family,
            Family::LogPower { .. } | Family::ExpInversePower { .. }
        )
    }

    /// Radius up to which `f` itself is defined, possibly past convexity.
    pub(crate) fn definition_radius(&self) -> f64 {
        match &self.family {
            Family::LogPower { .. } => 1.0,
            Family::ExpInversePower { .. } => f64::INFINITY,
            _ => self.max_radius(),
        }
    }

    /// Same family on a different radius.
    pub fn with_domain_radius(&self, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        let max_r = self.max_radius();
        if radius > max_r {
            return Err(Error::invalid(format!(
                "{} cannot be used on (0, {radius}); largest admissible radius is {max_r}",
                self.label
            )));
        }
        let mut out = self.clone();
        out.domain_radius = radius;
        Ok(out)
    }

    /// Supremum of the open interval on which `F` and `F'` are defined.
    pub fn inverse_domain_max(&self) -> f64 {
        match &self.family {
            Family::Power { .. } | Family::Sqrt | Family::Oscillating { .. } => f64::INFINITY,
            Family::LogPower { .. } | Family::ExpInversePower { .. } => 1.0,
            Family::Profile(p) => p.rho_max(),
        }
    }

    /// Closed form of the limit functional, if the family has one.
    pub fn frak_closed_form(&self, sigma: f64) -> Option<f64> {
        match &self.family {
            Family::Power { alpha } => Some(sigma.powf(1.0 / alpha - 1.0)),
            Family::LogPower { .. } | Family::ExpInversePower { .. } => Some(1.0 / sigma),
            _ => None,
        }
    }

    pub fn has_frak_closed_form(&self) -> bool {
        self.frak_closed_form(1.0).is_some()
    }

    pub fn f(&self, x: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => x.powf(*alpha),
            Family::Sqrt => x.sqrt(),
            Family::Oscillating { alpha, c } => osc_solve(*alpha, *c, x),
            Family::Profile(p) => p.f(x),
            _ => self.ln_f(x).exp(),
        }
    }

    pub fn ln_f(&self, x: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => alpha * x.ln(),
            Family::LogPower { mu } => -(-x.ln()).powf(*mu),
            Family::ExpInversePower { beta } => -x.powf(-beta),
            Family::Oscillating { alpha, c } => osc_solve(*alpha, *c, x).ln(),
            Family::Sqrt => 0.5 * x.ln(),
            Family::Profile(p) => p.ln_f(x),
        }
    }

    /// `f'(x) / f(x)`, finite even where `f` itself underflows.
    pub fn log_derivative(&self, x: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => alpha / x,
            Family::LogPower { mu } => mu * (-x.ln()).powf(mu - 1.0) / x,
            Family::ExpInversePower { beta } => beta * x.powf(-beta - 1.0),
            Family::Oscillating { alpha, c } => {
                let rho = osc_solve(*alpha, *c, x);
                1.0 / (rho * osc_inverse_prime(*alpha, *c, rho))
            }
            Family::Sqrt => 0.5 / x,
            Family::Profile(p) => p.log_derivative(x),
        }
    }

    pub fn f_prime(&self, x: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => alpha * x.powf(alpha - 1.0),
            Family::Sqrt => 0.5 / x.sqrt(),
            Family::Oscillating { alpha, c } => {
                1.0 / osc_inverse_prime(*alpha, *c, osc_solve(*alpha, *c, x))
            }
            Family::Profile(p) => p.f_prime(x),
            _ => (self.ln_f(x) + self.log_derivative(x).ln()).exp(),
        }
    }

    /// `ln f'(x)`.
    pub fn ln_f_prime(&self, x: f64) -> f64 {
        match &self.family {
            Family::LogPower { .. } | Family::ExpInversePower { .. } => {
                self.ln_f(x) + self.log_derivative(x).ln()
            }
            _ => self.f_prime(x).ln(),
        }
    }

    /// The inverse `F = f⁻¹`.
    pub fn inverse(&self, rho: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => rho.powf(1.0 / alpha),
            Family::LogPower { mu } => (-(-rho.ln()).powf(1.0 / mu)).exp(),
            Family::ExpInversePower { beta } => (-rho.ln()).powf(-1.0 / beta),
            Family::Oscillating { alpha, c } => osc_inverse(*alpha, *c, rho),
            Family::Sqrt => rho * rho,
            Family::Profile(p) => p.inverse(rho),
        }
    }

    /// `F(exp(ln_rho))`, usable where `rho` itself would underflow.
    pub fn inverse_ln(&self, ln_rho: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => (ln_rho / alpha).exp(),
            Family::LogPower { mu } => (-(-ln_rho).powf(1.0 / mu)).exp(),
            Family::ExpInversePower { beta } => (-ln_rho).powf(-1.0 / beta),
            Family::Sqrt => (2.0 * ln_rho).exp(),
            _ => self.inverse(ln_rho.exp()),
        }
    }

    /// `F'(rho)`.
    pub fn inverse_prime(&self, rho: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => rho.powf(1.0 / alpha - 1.0) / alpha,
            Family::Sqrt => 2.0 * rho,
            Family::Oscillating { alpha, c } => osc_inverse_prime(*alpha, *c, rho),
            _ => self.ln_inverse_prime(rho).exp(),
        }
    }

    /// `ln F'(rho)`.
    pub fn ln_inverse_prime(&self, rho: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } => (1.0 / alpha - 1.0) * rho.ln() - alpha.ln(),
            Family::LogPower { mu } => {
                let l = -rho.ln();
                -l.powf(1.0 / mu) - mu.ln() + (1.0 / mu - 1.0) * l.ln() + l
            }
            Family::ExpInversePower { beta } => {
                let l = -rho.ln();
                -beta.ln() - (1.0 / beta + 1.0) * l.ln() + l
            }
            Family::Oscillating { alpha, c } => {
                let l = rho.ln();
                (alpha - 1.0) * l + (alpha * c + alpha * l.sin() + l.cos()).ln()
            }
            Family::Sqrt => (2.0 * rho).ln(),
            Family::Profile(p) => p.ln_inverse_prime(rho),
        }
    }

    /// Log-spaced sample grid on `(0, R)` avoiding the underflow region of `f`.
    pub fn sample_grid(&self, n: usize) -> Vec<f64> {
        let r = self.domain_radius;
        let hi = r * 0.999;
        let mut lo = r * 1e-6;
        // keep f above ~1e-250 so relative comparisons stay meaningful
        if self.ln_f(lo) < -575.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = (a * b).sqrt();
                if self.ln_f(m) < -575.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            lo = b;
        }
        let step = (hi / lo).ln() / (n - 1) as f64;
        (0..n).map(|i| lo * (step * i as f64).exp()).collect()
    }

    /// Sampled check of the structural invariants.
    pub fn validate(&self) -> ValidationReport {
        let grid = self.sample_grid(512);
        let fs: Vec<f64> = grid.iter().map(|&x| self.f(x)).collect();
        let increasing = fs.windows(2).all(|w| w[1] > w[0]);
        let mut roundtrip_max_rel: f64 = 0.0;
        let mut derivative_max_rel: f64 = 0.0;
        for (&x, &fx) in grid.iter().zip(&fs) {
            let back = self.inverse(fx);
            roundtrip_max_rel = roundtrip_max_rel.max(((back - x) / x).abs());
            let h = 1e-6 * x;
            let fd = (self.f(x + h) - self.f(x - h)) / (2.0 * h);
            let fp = self.f_prime(x);
            derivative_max_rel = derivative_max_rel.max(((fd - fp) / fp).abs());
        }
        let slopes: Vec<f64> = grid
            .windows(2)
            .zip(fs.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let convexity_min = slopes
            .windows(2)
            .map(|s| {
                let scale = s[0].abs().max(s[1].abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (s[1] - s[0]) / scale
                }
            })
            .fold(f64::INFINITY, f64::min);
        let lemma_ratio_ok = grid
            .iter()
            .all(|&x| self.log_derivative(x) * x >= 1.0 - 1e-10);
        ValidationReport {
            kind: self.kind,
            increasing,
            roundtrip_max_rel,
            derivative_max_rel,
            convexity_min,
            convex: convexity_min >= -1e-10,
            ratio_bound_holds: lemma_ratio_ok,
        }
    }

    /// Validate and turn failures of enforced invariants into an error.
    pub fn check_invariants(&self) -> Result<ValidationReport> {
        let rep = self.validate();
        let mut problems = Vec::new();
        if !rep.increasing {
            problems.push("f is not strictly increasing".to_string());
        }
        if rep.roundtrip_max_rel > 1e-12 {
            problems.push(format!(
                "F(f(x)) round trip error {:e}",
                rep.roundtrip_max_rel
            ));
        }
        if rep.derivative_max_rel > 1e-6 {
            problems.push(format!(
                "f' disagrees with finite differences by {:e}",
                rep.derivative_max_rel
            ));
        }
        if self.kind.is_convex_family() && !rep.convex {
            problems.push(format!(
                "f is not convex (min scaled second difference {:e})",
                rep.convexity_min
            ));
        }
        if problems.is_empty() {
            Ok(rep)
        } else {
            Err(Error::Precondition(format!(
                "{}: {}",
                self.label,
                problems.join("; ")
            )))
        }
    }

    /// Monotonicity and concavity of `F` sampled on `[rho_lo, rho_hi]`.
    pub fn inverse_shape(&self, rho_lo: f64, rho_hi: f64, n: usize) -> InverseShape {
        let step = (rho_hi / rho_lo).ln() / (n - 1) as f64;
        let rhos: Vec<f64> = (0..n).map(|i| rho_lo * (step * i as f64).exp()).collect();
        let vals: Vec<f64> = rhos.iter().map(|&p| self.inverse(p)).collect();
        let increasing = vals.windows(2).all(|w| w[1] > w[0]);
        let slopes: Vec<f64> = rhos
            .windows(2)
            .zip(vals.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let concave = slopes
            .windows(2)
            .all(|s| s[1] - s[0] <= 1e-10 * s[0].abs().max(s[1].abs()));
        let derivative_positive = rhos.iter().all(|&p| self.inverse_prime(p) > 0.0);
        InverseShape {
            increasing,
            concave,
            derivative_positive,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub kind: WarpKind,
    pub increasing: bool,
    pub roundtrip_max_rel: f64,
    pub derivative_max_rel: f64,
    /// Minimum of scaled discrete second differences.
    pub convexity_min: f64,
    pub convex: bool,
    /// `x f'(x) >= f(x)` on the grid.
    pub ratio_bound_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InverseShape {
    pub increasing: bool,
    pub concave: bool,
    pub derivative_positive: bool,
}

fn osc_inverse(alpha: f64, c: f64, rho: f64) -> f64 {
    rho.powf(alpha) * (c + rho.ln().sin())
}

fn osc_inverse_prime(alpha: f64, c: f64, rho: f64) -> f64 {
    let l = rho.ln();
    rho.powf(alpha - 1.0) * (alpha * c + alpha * l.sin() + l.cos())
}

/// Solve `F(rho) = x` for the oscillating family.
fn osc_solve(alpha: f64, c: f64, x: f64) -> f64 {
    if !(x > 0.0) {
        return if x == 0.0 { 0.0 } else { f64::NAN };
    }
    // c - 1 <= F(rho) / rho^alpha <= c + 1
    let lo = (x / (c + 1.0)).powf(1.0 / alpha);
    let hi = (x / (c - 1.0)).powf(1.0 / alpha);
    solve_increasing(
        |p| osc_inverse(alpha, c, p),
        |p| osc_inverse_prime(alpha, c, p),
        x,
        lo * (1.0 - 1e-12),
        hi * (1.0 + 1e-12),
    )
    .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn identity_and_square_warps() {
        let w1 = make_power_warp(1.0, 1.5).unwrap();
        assert_eq!(w1.f(0.3), 0.3);
        assert_eq!(w1.kind(), WarpKind::Conical);
        let w2 = make_power_warp(2.0, 1.5).unwrap();
        assert!(close(w2.f_prime(0.3), 0.6, 1e-15));
        assert_eq!(w2.kind(), WarpKind::Cuspidal);
        assert!(close(
            w2.frak_closed_form(2.0).unwrap(),
            0.5f64.sqrt(),
            1e-15
        ));
    }

    #[test]
    fn power_below_one_rejected() {
        assert!(make_power_warp(0.5, 1.0).is_err());
    }

    #[test]
    fn exp_inverse_power_values() {
        let w = make_exp_warp(ExpFamily::ExpInversePower { beta: 1.0 }, 0.5).unwrap();
        assert!(close(w.f(0.25), (-4.0f64).exp(), 1e-14));
        assert!(close(w.frak_closed_form(3.0).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(w.f_prime(0.25), 16.0 * (-4.0f64).exp(), 1e-13));
    }

    #[test]
    fn exp_radius_limits() {
        let err = make_exp_warp(ExpFamily::ExpInversePower { beta: 1.0 }, 0.6).unwrap_err();
        assert!(err.to_string().contains("0.5"));
        assert!(make_exp_warp(ExpFamily::LogPower { mu: 2.0 }, 0.3).is_ok());
        assert!(make_exp_warp(ExpFamily::LogPower { mu: 2.0 }, 0.4).is_err());
        assert!(make_exp_warp(ExpFamily::LogPower { mu: 1.0 }, 0.3).is_err());
    }

    #[test]
    fn log_power_is_convex_on_admissible_radius() {
        let w = make_exp_warp(ExpFamily::LogPower { mu: 2.0 }, 0.3).unwrap();
        let rep = w.check_invariants().unwrap();
        assert!(rep.convex);
    }

    #[test]
    fn sqrt_warp() {
        let w = make_concave_sqrt_warp(1.0).unwrap();
        assert_eq!(w.inverse(0.5), 0.25);
        assert!(close(w.f_prime(0.25), 1.0, 1e-15));
        assert_eq!(w.kind(), WarpKind::ConcaveExperimental);
        assert!(!w.validate().convex);
    }

    #[test]
    fn oscillating_threshold_and_shape() {
        assert!((oscillating_threshold(0.5) - 9.0).abs() < 1e-15);
        assert!(make_oscillating_warp(0.5, 4.0).is_err());
        let w = make_oscillating_warp(0.5, 9.0).unwrap();
        let shape = w.inverse_shape(1e-12, 10.0, 4000);
        assert!(shape.increasing);
        assert!(shape.concave);
        assert!(shape.derivative_positive);
        assert_eq!(w.kind(), WarpKind::OscillatingCounterexample);
    }

    #[test]
    fn oscillating_inverse_round_trip() {
        let w = make_oscillating_warp(0.5, 9.0).unwrap();
        for &x in &[1e-9, 1e-4, 0.01, 0.5, 0.99] {
            let rho = w.f(x);
            assert!(close(w.inverse(rho), x, 1e-13), "x = {x}");
            let fd = (w.f(x * (1.0 + 1e-6)) - w.f(x * (1.0 - 1e-6))) / (2e-6 * x);
            assert!(close(w.f_prime(x), fd, 1e-6));
        }
    }

    #[test]
    fn all_families_pass_invariants() {
        let fams = vec![
            make_power_warp(1.0, 1.5).unwrap(),
            make_power_warp(2.0, 1.5).unwrap(),
            make_power_warp(3.7, 1.0).unwrap(),
            make_exp_warp(ExpFamily::LogPower { mu: 1.5 }, 0.3).unwrap(),
            make_exp_warp(ExpFamily::ExpInversePower { beta: 1.0 }, 0.5).unwrap(),
            make_exp_warp(ExpFamily::ExpInversePower { beta: 2.0 }, 0.5).unwrap(),
            make_oscillating_warp(0.5, 9.0).unwrap(),
        ];
        for w in fams {
            let rep = w.check_invariants().unwrap_or_else(|e| panic!("{e}"));
            if w.kind().is_convex_family() {
                assert!(rep.ratio_bound_holds, "{}", w.label());
            }
        }
    }

    #[test]
    fn log_forms_agree_with_direct_forms() {
        let w = make_exp_warp(ExpFamily::LogPower { mu: 1.5 }, 0.3).unwrap();
        for &x in &[0.01, 0.1, 0.25] {
            assert!(close(w.ln_f(x).exp(), w.f(x), 1e-14));
            assert!(close(w.log_derivative(x) * w.f(x), w.f_prime(x), 1e-13));
            let rho = w.f(x);
            assert!(close(w.inverse_prime(rho) * w.f_prime(x), 1.0, 1e-12));
        }
    }

    #[test]
    fn radius_restriction() {
        let w = make_oscillating_warp(0.5, 9.0).unwrap();
        assert_eq!(w.domain_radius(), 1.0);
        assert_eq!(w.with_domain_radius(3.0).unwrap().domain_radius(), 3.0);
        let e = make_exp_warp(ExpFamily::ExpInversePower { beta: 1.0 }, 0.4).unwrap();
        assert!(e.with_domain_radius(0.9).is_err());
    }
}
