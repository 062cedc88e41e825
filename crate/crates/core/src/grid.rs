//! Parameter axes and tabular output shared by the scans.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Closed interval `[min, max]` sampled at `steps` points. A zero-width axis
/// (`min == max`) is frozen at that value by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let axis = Self { min, max, steps };
        axis.validate()?;
        Ok(axis)
    }

    pub fn fixed(value: f64) -> Self {
        Self { min: value, max: value, steps: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("axis", &[self.min, self.max])?;
        if self.steps == 0 || self.max < self.min {
            return Err(Error::Config(format!("bad axis [{}, {}] with {} steps", self.min, self.max, self.steps)));
        }
        Ok(())
    }

    pub fn is_frozen(&self) -> bool {
        self.min == self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    /// Evenly spaced samples; a single step gives the midpoint.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![0.5 * (self.min + self.max)];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + h * i as f64).collect()
    }
}

/// Write rows as CSV with a header taken from the field names.
pub fn write_csv<W: Write, T: Serialize>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
