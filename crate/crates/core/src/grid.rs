use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

/// Hazard grid on which the consumption-rate curve is tabulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub m_min: f64,
    pub m_max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

pub const MIN_GRID_POINTS: usize = 16;

impl GridSpec {
    pub fn log(m_min: f64, m_max: f64, n_points: usize) -> Self {
        GridSpec {
            m_min,
            m_max,
            n_points,
            spacing: Spacing::Log,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.m_min > 0.0 && self.m_min.is_finite()) {
            return Err(Error::invalid("grid.min", "must be positive and finite"));
        }
        if !(self.m_max > self.m_min && self.m_max.is_finite()) {
            return Err(Error::invalid("grid.max", "must be finite and exceed grid.min"));
        }
        if self.n_points < MIN_GRID_POINTS {
            return Err(Error::invalid("grid.n", "must be at least 16"));
        }
        Ok(())
    }

    /// Strictly increasing nodes; the end points are exactly `m_min` and `m_max`.
    pub fn nodes(&self) -> Result<Vec<f64>> {
        self.check()?;
        let n = self.n_points;
        let last = (n - 1) as f64;
        let mut out: Vec<f64> = match self.spacing {
            Spacing::Log => {
                let (a, b) = (self.m_min.ln(), self.m_max.ln());
                (0..n).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
            }
            Spacing::Linear => (0..n)
                .map(|i| self.m_min + (self.m_max - self.m_min) * i as f64 / last)
                .collect(),
        };
        out[0] = self.m_min;
        out[n - 1] = self.m_max;
        if out.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "nodes are not strictly increasing"));
        }
        Ok(out)
    }
}
