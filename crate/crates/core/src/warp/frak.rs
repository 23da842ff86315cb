//! The limit functional `𝔉(σ) = lim F'(σε)/F'(ε)` and the constant `C_f`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

use super::{WarpKind, WarpingFunction};

/// Geometric ε ladder `ε_n = eps0 · ratioⁿ`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LadderParams {
    /// `None` picks `1e-2 · f(R/2)`.
    pub eps0: Option<f64>,
    pub ratio: f64,
    pub steps: usize,
}

impl Default for LadderParams {
    fn default() -> Self {
        LadderParams {
            eps0: None,
            ratio: 0.5,
            steps: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "value", rename_all = "snake_case")]
pub enum FrakVerdict {
    Converged(f64),
    /// Carries the half-width of the band the ladder oscillates in.
    Oscillating(f64),
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrakEstimate {
    pub sigma: f64,
    pub eps: Vec<f64>,
    pub ladder_values: Vec<f64>,
    pub verdict: FrakVerdict,
    pub diagnostic: Option<String>,
}

const CONVERGED_SPREAD: f64 = 1e-3;
const OSCILLATION_SPREAD: f64 = 0.05;

fn relative_spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        (max - min) / scale
    }
}

fn sign_changes(v: &[f64]) -> usize {
    let incs: Vec<f64> = v
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .collect();
    incs.windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count()
}

/// Evaluate the ladder `F'(σ ε_n) / F'(ε_n)` and classify its tail.
pub fn estimate_frak(
    wf: &WarpingFunction,
    sigma: f64,
    params: LadderParams,
) -> Result<FrakEstimate> {
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be a finite number >= 1 (got {sigma})"
        )));
    }
    if !(params.ratio > 0.0 && params.ratio < 1.0) || params.steps < 4 {
        return Err(Error::invalid(
            "ladder needs ratio in (0, 1) and at least 4 steps",
        ));
    }
    let eps0 = params
        .eps0
        .unwrap_or_else(|| 1e-2 * wf.f(0.5 * wf.domain_radius()));
    if !(eps0 > 0.0) {
        return Err(Error::invalid(format!(
            "ladder start must be positive (got {eps0})"
        )));
    }
    let top = wf.inverse_domain_max();
    if !(sigma * eps0 < top) {
        return Err(Error::precondition(format!(
            "sigma * eps0 = {:e} is outside the domain of F' (sup {top:e})",
            sigma * eps0
        )));
    }
    let mut eps = Vec::with_capacity(params.steps + 1);
    let mut values = Vec::with_capacity(params.steps + 1);
    let mut diagnostic = None;
    for n in 0..=params.steps {
        let e = eps0 * params.ratio.powi(n as i32);
        let v = if sigma == 1.0 {
            1.0
        } else {
            (wf.ln_inverse_prime(sigma * e) - wf.ln_inverse_prime(e)).exp()
        };
        if !(v.is_finite() && v > 0.0) {
            diagnostic = Some(format!(
                "F' could not be evaluated at eps = {e:e}; ladder truncated"
            ));
            break;
        }
        eps.push(e);
        values.push(v);
    }
    let n = values.len();
    let verdict = if n < params.steps + 1 {
        FrakVerdict::Inconclusive
    } else {
        let quarter = &values[n - (n / 4).max(2)..];
        let half = &values[n / 2..];
        if relative_spread(quarter) < CONVERGED_SPREAD {
            FrakVerdict::Converged(values[n - 1])
        } else if relative_spread(half) > OSCILLATION_SPREAD && sign_changes(half) >= 2 {
            let max = half.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = half.iter().copied().fold(f64::INFINITY, f64::min);
            FrakVerdict::Oscillating(0.5 * (max - min))
        } else {
            FrakVerdict::Inconclusive
        }
    };
    Ok(FrakEstimate {
        sigma,
        eps,
        ladder_values: values,
        verdict,
        diagnostic,
    })
}

/// `𝔉(σ)` from the closed form, or from a converged ladder.
pub fn frak_value(wf: &WarpingFunction, sigma: f64, params: LadderParams) -> Result<f64> {
    if let Some(v) = wf.frak_closed_form(sigma) {
        return Ok(v);
    }
    let mut p = params;
    let eps0 = p
        .eps0
        .unwrap_or_else(|| 1e-2 * wf.f(0.5 * wf.domain_radius()));
    // shift the ladder down so that σ ε stays inside the domain of F'
    p.eps0 = Some(eps0.min(0.5 * wf.inverse_domain_max() / sigma));
    let est = estimate_frak(wf, sigma, p)?;
    match est.verdict {
        FrakVerdict::Converged(v) => Ok(v),
        FrakVerdict::Oscillating(a) => Err(Error::NonOscillation(format!(
            "F'(sigma eps)/F'(eps) oscillates with amplitude {a:.3e} at sigma = {sigma:e} for {}",
            wf.label()
        ))),
        FrakVerdict::Inconclusive => Err(Error::NonOscillation(format!(
            "no limit of F'(sigma eps)/F'(eps) detected at sigma = {sigma:e} for {}{}",
            wf.label(),
            est.diagnostic
                .map(|d| format!(" ({d})"))
                .unwrap_or_default()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CfSource {
    ClosedForm,
    Ladder,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CfResult {
    pub value: f64,
    pub error_estimate: f64,
    pub source: CfSource,
}

/// σ values at which a ladder-based 𝔉 is certified before integrating.
pub fn certification_sigmas() -> Vec<f64> {
    (0..=12).map(|k| 10f64.powf(k as f64 / 2.0)).collect()
}

/// `C_f = ∫ 𝔉(1/cos ϑ) dϑ` over `(−π/2, π/2)`.
pub fn compute_cf(wf: &WarpingFunction, tol: f64) -> Result<CfResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive (got {tol})"
        )));
    }
    if wf.kind() == WarpKind::ConcaveExperimental {
        return Err(Error::precondition(format!(
            "{} is concave; C_f is only defined for convex warping functions",
            wf.label()
        )));
    }
    let params = LadderParams::default();
    let source = if wf.has_frak_closed_form() {
        CfSource::ClosedForm
    } else {
        for sigma in certification_sigmas() {
            frak_value(wf, sigma, params)?;
        }
        CfSource::Ladder
    };
    // ϑ = π/2 − φ² on each half; the integrand becomes 4 φ 𝔉(1/sin φ²)
    let mut failure = None;
    let res = integrate(
        |phi: f64| {
            if phi == 0.0 {
                return 0.0;
            }
            match frak_value(wf, 1.0 / (phi * phi).sin(), params) {
                Ok(v) => 4.0 * phi * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        FRAC_PI_2.sqrt(),
        QuadOptions::abs(0.25 * tol),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let res = res?;
    if res.value < 2.0 - tol || res.value > std::f64::consts::PI + tol {
        return Err(Error::Internal(format!(
            "C_f = {} lies outside [2, pi] for {}",
            res.value,
            wf.label()
        )));
    }
    // inside the tolerance band, the theorem's bounds are exact
    Ok(CfResult {
        value: res.value.clamp(2.0, std::f64::consts::PI),
        error_estimate: res.error,
        source,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub small: String,
    pub big: String,
    pub cf_small: f64,
    pub cf_big: f64,
    pub sigmas: Vec<f64>,
    pub frak_small: Vec<f64>,
    pub frak_big: Vec<f64>,
    /// Largest amount by which an expected inequality is violated (≤ 0 when all hold).
    pub worst_excess: f64,
    pub passed: bool,
}

const MONOTONICITY_SLACK: f64 = 1e-6;

/// Check that `f_small = O(f_big)` near 0 orders both `𝔉` and `C_f`.
pub fn check_cf_monotonicity(
    small: &WarpingFunction,
    big: &WarpingFunction,
) -> Result<MonotonicityReport> {
    let x0 = 0.5 * small.domain_radius().min(big.domain_radius());
    let logs: Vec<f64> = (0..40)
        .map(|k| {
            let x = x0 * 0.5f64.powi(k);
            small.ln_f(x) - big.ln_f(x)
        })
        .collect();
    if logs.iter().any(|v| v.is_nan()) {
        return Err(Error::precondition(
            "ratio of warping functions could not be sampled",
        ));
    }
    let head = logs[..20].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = logs[20..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if tail > head + std::f64::consts::LN_2 {
        return Err(Error::precondition(format!(
            "{} is not O({}) near 0 on the sampled grid",
            small.label(),
            big.label()
        )));
    }
    let tol = 1e-9;
    let cf_small = compute_cf(small, tol)?.value;
    let cf_big = compute_cf(big, tol)?.value;
    let sigmas: Vec<f64> = (0..=24).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    let params = LadderParams::default();
    let frak_small = sigmas
        .iter()
        .map(|&s| frak_value(small, s, params))
        .collect::<Result<Vec<_>>>()?;
    let frak_big = sigmas
        .iter()
        .map(|&s| frak_value(big, s, params))
        .collect::<Result<Vec<_>>>()?;
    let worst_excess = frak_small
        .iter()
        .zip(&frak_big)
        .map(|(a, b)| a - b)
        .fold(cf_small - cf_big, f64::max);
    Ok(MonotonicityReport {
        small: small.label().to_string(),
        big: big.label().to_string(),
        cf_small,
        cf_big,
        sigmas,
        frak_small,
        frak_big,
        worst_excess,
        passed: worst_excess <= MONOTONICITY_SLACK,
    })
}
