//! Dormand–Prince 5(4) embedded Runge–Kutta pair.
//!
//! Only the single-step kernel and the error norm live here; the event
//! handling and bookkeeping specific to geodesics is in `flow::integrate`.

/// The right-hand side refused to evaluate (state left the model's domain).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainViolation;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// fifth-order weights (also row 7 of the tableau, FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// difference between fifth- and fourth-order weights
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

pub const ORDER: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub y: Vec<f64>,
    /// Derivative at the new point (first stage of the next step).
    pub dy: Vec<f64>,
    /// Local error estimate per component.
    pub err: Vec<f64>,
}

fn combine(y: &[f64], h: f64, terms: &[(f64, &[f64])], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Take one step of size `h` from `(t, y)` given `dy0 = rhs(t, y)`.
pub fn dopri5_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    dy0: &[f64],
    h: f64,
) -> Result<StepOutcome, DomainViolation>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), DomainViolation>,
{
    let n = y.len();
    let mut tmp = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];

    combine(y, h, &[(A21, dy0)], &mut tmp);
    rhs(t + C2 * h, &tmp, &mut k2)?;
    combine(y, h, &[(A31, dy0), (A32, &k2)], &mut tmp);
    rhs(t + C3 * h, &tmp, &mut k3)?;
    combine(y, h, &[(A41, dy0), (A42, &k2), (A43, &k3)], &mut tmp);
    rhs(t + C4 * h, &tmp, &mut k4)?;
    combine(
        y,
        h,
        &[(A51, dy0), (A52, &k2), (A53, &k3), (A54, &k4)],
        &mut tmp,
    );
    rhs(t + C5 * h, &tmp, &mut k5)?;
    combine(
        y,
        h,
        &[(A61, dy0), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        &mut tmp,
    );
    rhs(t + h, &tmp, &mut k6)?;
    let mut y_new = vec![0.0; n];
    combine(
        y,
        h,
        &[(B1, dy0), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        &mut y_new,
    );
    rhs(t + h, &y_new, &mut k7)?;
    let err = (0..n)
        .map(|i| h * (E1 * dy0[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]))
        .collect();
    Ok(StepOutcome {
        y: y_new,
        dy: k7,
        err,
    })
}

/// Hairer's RMS error norm with per-component absolute tolerances.
pub fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: &[f64]) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .zip(atol)
        .map(|((e, (a, b)), at)| {
            let sc = at + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Step-size factor from an error norm, clamped to `[0.2, 5]`.
pub fn step_factor(err_norm: f64) -> f64 {
    if err_norm == 0.0 {
        return 5.0;
    }
    (0.9 * err_norm.powf(-1.0 / ORDER)).clamp(0.2, 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), DomainViolation> {
        dy[0] = -y[0];
        dy[1] = y[0];
        Ok(())
    }

    fn run(h: f64) -> f64 {
        let mut y = vec![1.0, 0.0];
        let mut dy = vec![0.0; 2];
        decay(0.0, &y, &mut dy).unwrap();
        let steps = (1.0 / h).round() as usize;
        let mut t = 0.0;
        for _ in 0..steps {
            let out = dopri5_step(&mut decay, t, &y, &dy, h).unwrap();
            y = out.y;
            dy = out.dy;
            t += h;
        }
        (y[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn fifth_order_convergence() {
        let e1 = run(0.1);
        let e2 = run(0.05);
        let order = (e1 / e2).log2();
        assert!(order > 4.7 && order < 5.5, "observed order {order}");
    }

    #[test]
    fn tableau_rows_sum_to_nodes() {
        assert!((A21 - C2).abs() < 1e-15);
        assert!((A31 + A32 - C3).abs() < 1e-15);
        assert!((A41 + A42 + A43 - C4).abs() < 1e-14);
        assert!((A51 + A52 + A53 + A54 - C5).abs() < 1e-13);
        assert!((A61 + A62 + A63 + A64 + A65 - 1.0).abs() < 1e-13);
        assert!((B1 + B3 + B4 + B5 + B6 - 1.0).abs() < 1e-15);
        assert!((E1 + E3 + E4 + E5 + E6 + E7).abs() < 1e-15);
    }

    #[test]
    fn domain_violation_propagates() {
        let mut bad = |_t: f64, _y: &[f64], _dy: &mut [f64]| Err(DomainViolation);
        assert!(dopri5_step(&mut bad, 0.0, &[1.0], &[0.0], 0.1).is_err());
    }
}
