//! Reference values computed without the integrator or the quadrature of
//! `sg-core`, and a locator for the `sg` binary.

use std::path::PathBuf;

use statrs::function::gamma::ln_gamma;

/// `B(a, b)` through log-Gamma.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Winding constant of `f = r^α`, `α ≥ 1`. Here `𝔉(σ) = σ^{1/α − 1}`, so
/// `C_f = ∫ cos^{1 − 1/α} ϑ dϑ = B(1/2, 1 − 1/(2α))`.
pub fn power_cf(alpha: f64) -> f64 {
    beta(0.5, 1.0 - 0.5 / alpha)
}

/// Straight line at distance δ from the apex of the flat cone.
pub fn cone_r(t: f64, delta: f64) -> f64 {
    (t * t + delta * delta).sqrt()
}

pub fn cone_exit_time(radius: f64, delta: f64) -> f64 {
    (radius * radius - delta * delta).sqrt()
}

/// Angle swept by that line inside the ball of radius R.
pub fn cone_winding_length(radius: f64, delta: f64) -> f64 {
    2.0 * (cone_exit_time(radius, delta) / delta).atan()
}

/// The stated closed form for `f = √r`.
pub fn sqrt_stated(radius: f64, delta: f64) -> f64 {
    2.0 * ((radius + (radius * radius - delta * delta).sqrt()) / delta.sqrt()).ln()
}

/// `∫ dθ / cos θ` over `|θ| < Θ` with `cos Θ = √(δ/R)`, evaluated exactly.
pub fn sqrt_integral(radius: f64, delta: f64) -> f64 {
    2.0 * ((radius.sqrt() + (radius - delta).sqrt()) / delta.sqrt()).ln()
}

/// Path of a binary of this workspace, next to the running test executable.
pub fn workspace_bin(name: &str) -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let p = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
    p.exists().then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_matches_known_values() {
        assert!((beta(0.5, 0.5) - std::f64::consts::PI).abs() < 1e-12);
        assert!((beta(1.0, 0.5) - 2.0).abs() < 1e-12);
        assert!((power_cf(1.0) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn sqrt_forms_differ_away_from_zero() {
        // both grow like log(4R/δ) but their difference vanishes only as δ → 0
        let a = sqrt_stated(1.0, 0.1);
        let b = sqrt_integral(1.0, 0.1);
        assert!((a / b - 1.0).abs() > 1e-3);
        assert!((sqrt_stated(1.0, 1e-8) / sqrt_integral(1.0, 1e-8) - 1.0).abs() < 1e-6);
    }
}
