//! δ-sweeps, bound checks and randomized campaigns built on the flow.
//!
//! Independent integrations run on a rayon pool whose size honours the
//! `SG_THREADS` environment variable; results are always collected in input
//! order, so reports do not depend on the thread count.

mod campaign;
mod checks;
mod figure;
mod sweep;

use crate::error::{Error, Result};

pub use campaign::{
    bounds_campaign, bounds_cases, comparison_campaign, comparison_cases, BoundsCase,
    CampaignReport, CaseSetup, ComparisonCase, WINDING_CAP,
};
pub use checks::{
    comparison_test, limit_geodesic_test, verify_radial_bounds, BoundsReport, ComparisonReport,
    LimitEntry, LimitReport, BOUND_SLACK, LIMIT_NOISE, LIMIT_THRESHOLD,
};
pub use figure::{
    figure1_data, Figure1Bundle, FigureKind, FigurePoint, FIGURE_DELTA, FIGURE_RADIUS,
};
pub use sweep::{
    default_delta_ladder, delta_sweep, geometric_ladder, richardson, tail_decreasing, SweepOptions,
    SweepResult,
};

/// Smallest `ln f(δ)` used for a launch. Below it `1/f(δ)` is too close to
/// overflow for the rescaled covector.
pub(crate) fn ln_f_floor() -> f64 {
    -600.0
}

/// Thread count from `SG_THREADS`, if set to a positive integer.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var("SG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::invalid(format!(
                "SG_THREADS must be a positive integer (got '{v}')"
            ))),
        },
        Err(_) => Ok(None),
    }
}

pub(crate) fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit()? {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}
