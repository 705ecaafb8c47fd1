//! Scalar Dormand–Prince 5(4) integrator that lands exactly on requested
//! output abscissae.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(rtol: f64) -> Self {
        StepControl {
            rtol,
            atol: rtol * 1e-6,
            max_steps: 1_000_000,
        }
    }
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(x, y)` from `(x0, y0)` through `outputs`, which must be
/// strictly monotone in one direction away from `x0`. Returns `y` at each output.
///
/// A failing right-hand side rejects the step and retries with a smaller one;
/// the error is returned once the step underflows, tagged with the last
/// accepted `x`.
pub fn integrate<F>(mut f: F, x0: f64, y0: f64, outputs: &[f64], ctl: &StepControl) -> Result<Vec<f64>>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut out = Vec::with_capacity(outputs.len());
    let Some(&x_end) = outputs.last() else {
        return Ok(out);
    };
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut prev = x0;
    for &xo in outputs {
        if (xo - prev) * dir < 0.0 {
            return Err(Error::domain("output abscissae are not monotone"));
        }
        prev = xo;
    }

    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, y)?;
    let span = (x_end - x0).abs();
    let mut h = dir * initial_step(span, y, k1, ctl);
    let mut steps = 0usize;
    let mut next = 0usize;
    while next < outputs.len() && outputs[next] == x {
        out.push(y);
        next += 1;
    }

    while next < outputs.len() {
        let target = outputs[next];
        let remaining = target - x;
        let hit = (h - remaining) * dir >= 0.0;
        let step = if hit { remaining } else { h };
        steps += 1;
        if steps > ctl.max_steps {
            return Err(Error::Integration {
                at: x,
                reason: format!("exceeded {} steps", ctl.max_steps),
            });
        }
        match trial(&mut f, x, y, k1, step) {
            Ok((y_new, k7, err_est)) => {
                let scale = ctl.atol + ctl.rtol * y.abs().max(y_new.abs());
                let err = (err_est / scale).abs();
                if err <= 1.0 {
                    x = if hit { target } else { x + step };
                    y = y_new;
                    k1 = k7;
                    while next < outputs.len() && outputs[next] == x {
                        out.push(y);
                        next += 1;
                    }
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    // Keep the controller's preferred size when a step was clipped.
                    let base = if hit { h.abs().max(step.abs()) } else { step.abs() };
                    h = dir * base * grow;
                } else {
                    h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
            }
            Err(e) => {
                h = step * 0.25;
                if h.abs() <= 1e-14 * x.abs().max(1.0) {
                    return Err(match e {
                        Error::Integration { .. } => e,
                        other => Error::Integration {
                            at: x,
                            reason: format!("{other}"),
                        },
                    });
                }
            }
        }
        if h.abs() <= 1e-14 * x.abs().max(1.0) {
            return Err(Error::Integration {
                at: x,
                reason: "step size underflow".into(),
            });
        }
    }
    Ok(out)
}

fn initial_step(span: f64, y: f64, dy: f64, ctl: &StepControl) -> f64 {
    let scale = ctl.atol + ctl.rtol * y.abs();
    let guess = if dy == 0.0 { span } else { 0.01 * (scale / ctl.rtol) / dy.abs() };
    guess.min(span).max(span * 1e-8).max(1e-12)
}

fn trial<F>(f: &mut F, x: f64, y: f64, k1: f64, h: f64) -> Result<(f64, f64, f64)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let k2 = f(x + C2 * h, y + h * A21 * k1)?;
    let k3 = f(x + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
    let k4 = f(x + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = f(x + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
    let k6 = f(x + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
    let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    if !y_new.is_finite() {
        return Err(Error::Integration {
            at: x,
            reason: "non-finite state".into(),
        });
    }
    let k7 = f(x + h, y_new)?;
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    Ok((y_new, k7, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_and_decay() {
        let xs = [0.5, 1.0, 2.0];
        let ys = integrate(|_, y| Ok(-3.0 * y), 0.0, 1.0, &xs, &StepControl::new(1e-11)).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y / (-3.0 * x).exp() - 1.0).abs() < 1e-9);
        }
        let back = integrate(|_, y| Ok(y), 0.0, 1.0, &[-1.0, -2.0], &StepControl::new(1e-11)).unwrap();
        assert!((back[1] / (-2.0f64).exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn output_at_start_is_initial_value() {
        let ys = integrate(|_, _| Ok(1.0), 1.0, 2.0, &[1.0, 3.0], &StepControl::new(1e-10)).unwrap();
        assert_eq!(ys[0], 2.0);
        assert!((ys[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn stiff_contracting_direction_is_stable() {
        // y' = 500 (y − cos x) integrated backward contracts onto the slow manifold.
        let ys = integrate(|x, y| Ok(500.0 * (y - x.cos())), 1.0, 5.0, &[0.0], &StepControl::new(1e-10)).unwrap();
        assert!((ys[0] - 1.0).abs() < 1e-5, "{}", ys[0]);
    }

    #[test]
    fn rhs_failure_reports_last_good_abscissa() {
        let err = integrate(
            |x, _| if x > 0.5 { Err(Error::domain("wall")) } else { Ok(1.0) },
            0.0,
            0.0,
            &[1.0],
            &StepControl::new(1e-10),
        )
        .unwrap_err();
        match err {
            Error::Integration { at, .. } => assert!(at <= 0.5 && at > 0.4, "{at}"),
            e => panic!("{e:?}"),
        }
    }
}
