//! Shape-preserving cubic Hermite interpolation with known node slopes.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Piecewise cubic Hermite interpolant. Node slopes are limited with the
/// Fritsch–Carlson condition so monotone data stay monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneHermite {
    /// `x` strictly increasing; `d` are the exact slopes `dy/dx` at the nodes.
    pub fn new(x: Vec<f64>, y: Vec<f64>, mut d: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() || x.len() != d.len() {
            return Err(Error::domain("interpolation needs at least two nodes of matching length"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("interpolation abscissae must be strictly increasing"));
        }
        for i in 0..x.len() - 1 {
            let delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
            if delta == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            let a = d[i] / delta;
            let b = d[i + 1] / delta;
            if a < 0.0 {
                d[i] = 0.0;
            }
            if b < 0.0 {
                d[i + 1] = 0.0;
            }
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let t = 3.0 / r2.sqrt();
                d[i] = t * a * delta;
                d[i + 1] = t * b * delta;
            }
        }
        Ok(MonotoneHermite { x, y, d })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Index `i` with `x[i] ≤ xq ≤ x[i+1]`.
    pub fn interval(&self, xq: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if !(xq >= lo && xq <= hi) {
            return Err(Error::OutOfRange { m: xq, min: lo, max: hi });
        }
        let i = self.x.partition_point(|&v| v <= xq);
        Ok(i.saturating_sub(1).min(self.x.len() - 2))
    }

    /// Value and slope at `xq`.
    pub fn eval(&self, xq: f64) -> Result<(f64, f64)> {
        let i = self.interval(xq)?;
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * d1) / h;
        Ok((v, dv))
    }
}

/// Linear interpolation of `ys` over the interval `i` found for `xq`.
pub fn linear(xs: &[f64], ys: &[f64], i: usize, xq: f64) -> f64 {
    let t = (xq - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}
