//! Inversion of strictly increasing scalar maps.

use crate::error::{Error, Result};

/// Solve `g(x) = target` on `[lo, hi]` for increasing `g` with derivative `dg`.
///
/// Newton steps are accepted only while they stay inside the current
/// bracket; otherwise the bracket is bisected.
pub fn solve_increasing<G, D>(g: G, dg: D, target: f64, mut lo: f64, mut hi: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Internal(format!("empty bracket [{lo}, {hi}]")));
    }
    let glo = g(lo) - target;
    let ghi = g(hi) - target;
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::Internal(format!(
            "target {target:e} not bracketed by [{lo:e}, {hi:e}] (residuals {glo:e}, {ghi:e})"
        )));
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let gx = g(x) - target;
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let d = dg(x);
        let newton = x - gx / d;
        let next = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Monotone node table used to seed brackets for [`solve_increasing`].
#[derive(Debug, Clone)]
pub struct MonotoneTable {
    xs: Vec<f64>,
    gs: Vec<f64>,
}

impl MonotoneTable {
    /// Tabulate `g` on `n` nodes spaced geometrically between `lo` and `hi`.
    pub fn geometric<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(Error::invalid(
                "geometric table needs 0 < lo < hi and n >= 2",
            ));
        }
        let ratio = (hi / lo).ln() / (n - 1) as f64;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo * (ratio * i as f64).exp()
                }
            })
            .collect();
        let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        if gs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Internal(
                "tabulated map is not strictly increasing".into(),
            ));
        }
        Ok(MonotoneTable { xs, gs })
    }

    pub fn from_nodes(xs: Vec<f64>, gs: Vec<f64>) -> Result<Self> {
        if xs.len() != gs.len() || xs.len() < 2 {
            return Err(Error::invalid(
                "table needs matching node lists of length >= 2",
            ));
        }
        if gs.windows(2).any(|w| !(w[1] > w[0])) || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Internal(
                "tabulated map is not strictly increasing".into(),
            ));
        }
        Ok(MonotoneTable { xs, gs })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn g_range(&self) -> (f64, f64) {
        (self.gs[0], *self.gs.last().unwrap())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.gs.iter().copied())
    }

    /// Adjacent node pair whose values bracket `target`, if it is in range.
    pub fn bracket(&self, target: f64) -> Option<(f64, f64)> {
        let (g0, g1) = self.g_range();
        if target < g0 || target > g1 {
            return None;
        }
        let idx = self.gs.partition_point(|&g| g < target);
        if idx == 0 {
            return Some((self.xs[0], self.xs[1]));
        }
        Some((self.xs[idx - 1], self.xs[idx]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root_by_newton() {
        let x = solve_increasing(|x| x * x * x, |x| 3.0 * x * x, 27.0, 0.0, 10.0).unwrap();
        assert!((x - 3.0).abs() < 1e-14);
    }

    #[test]
    fn falls_back_to_bisection_with_bad_derivative() {
        let x = solve_increasing(|x| x, |_| -1.0, 0.25, 0.0, 1.0).unwrap();
        assert!((x - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_unbracketed_target() {
        assert!(solve_increasing(|x| x, |_| 1.0, 2.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn table_brackets() {
        let t = MonotoneTable::geometric(|x| x * x, 1e-6, 1.0, 64).unwrap();
        let (a, b) = t.bracket(0.3).unwrap();
        assert!(a * a <= 0.3 && b * b >= 0.3);
        assert!(t.bracket(2.0).is_none());
    }
}
