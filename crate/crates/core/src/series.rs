//! Series, subsequence and window types.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::distance::DEFAULT_VARIANCE_EPSILON;
use crate::error::{Error, Result};

/// Smallest window for which correlation is meaningful.
pub const MIN_WINDOW: usize = 3;

/// An ordered sequence of finite real samples, at least two long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "time series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample {} at position {pos}",
                values[pos]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Number of length-`m` subsequences, `n - m + 1`, or 0 if `m > n`.
    pub fn subsequence_count(&self, m: usize) -> usize {
        (self.0.len() + 1).saturating_sub(m)
    }

    pub fn subsequence(&self, start: usize, window: usize) -> Result<Subsequence<'_>> {
        Subsequence::new(self, start, window)
    }

    /// `a * T + b`, used by the invariance tests and examples.
    pub fn affine(&self, scale: f64, offset: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| scale * v + offset).collect())
    }
}

impl Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(ts: TimeSeries) -> Self {
        ts.0
    }
}

/// The window `T[start..start + window]` of a parent series.
#[derive(Debug, Clone, Copy)]
pub struct Subsequence<'a> {
    parent: &'a TimeSeries,
    start: usize,
    window: usize,
}

impl<'a> Subsequence<'a> {
    pub fn new(parent: &'a TimeSeries, start: usize, window: usize) -> Result<Self> {
        if window < MIN_WINDOW {
            return Err(Error::invalid(format!(
                "window must be at least {MIN_WINDOW}, got {window}"
            )));
        }
        if start + window > parent.len() {
            return Err(Error::invalid(format!(
                "subsequence [{start}, {}) exceeds series length {}",
                start + window,
                parent.len()
            )));
        }
        Ok(Self {
            parent,
            start,
            window,
        })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn values(&self) -> &'a [f64] {
        &self.parent.values()[self.start..self.start + self.window]
    }
}

/// Window length, trivial-match exclusion radius and flatness threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub m: usize,
    pub exclusion_radius: usize,
    pub variance_epsilon: f64,
}

impl WindowConfig {
    /// Window `m` with the default exclusion radius `ceil(m / 4)`.
    pub fn new(m: usize) -> Self {
        Self {
            m,
            exclusion_radius: default_exclusion_radius(m),
            variance_epsilon: DEFAULT_VARIANCE_EPSILON,
        }
    }

    pub fn with_exclusion(mut self, exclusion_radius: usize) -> Self {
        self.exclusion_radius = exclusion_radius;
        self
    }

    pub fn with_epsilon(mut self, variance_epsilon: f64) -> Self {
        self.variance_epsilon = variance_epsilon;
        self
    }

    /// Checks the window against a series of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m < MIN_WINDOW {
            return Err(Error::invalid(format!(
                "window must be at least {MIN_WINDOW}, got {}",
                self.m
            )));
        }
        if !(self.variance_epsilon > 0.0 && self.variance_epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "variance epsilon must be positive, got {}",
                self.variance_epsilon
            )));
        }
        if self.m > n {
            return Err(Error::invalid(format!(
                "window {} longer than series of length {n}",
                self.m
            )));
        }
        let count = n - self.m + 1;
        if self.exclusion_radius >= count {
            return Err(Error::invalid(format!(
                "exclusion radius {} must be below the subsequence count {count}",
                self.exclusion_radius
            )));
        }
        Ok(())
    }

    /// Checks that every subsequence of a length-`n` series has at least one
    /// neighbor outside its exclusion zone.
    pub fn validate_for_profile(&self, n: usize) -> Result<()> {
        self.validate(n)?;
        let count = n - self.m + 1;
        if count < 2 * self.exclusion_radius + 2 {
            return Err(Error::invalid(format!(
                "series too short: {count} subsequences of length {} leave some without a \
                 neighbor outside exclusion radius {} (need at least {})",
                self.m,
                self.exclusion_radius,
                2 * self.exclusion_radius + 2
            )));
        }
        Ok(())
    }
}

pub fn default_exclusion_radius(m: usize) -> usize {
    m.div_ceil(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_non_finite() {
        assert!(TimeSeries::new(vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::INFINITY, 2.0]).is_err());
        assert!(TimeSeries::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn subsequence_bounds() {
        let ts = TimeSeries::new((0..10).map(f64::from).collect()).unwrap();
        assert_eq!(ts.subsequence(7, 3).unwrap().values(), &[7.0, 8.0, 9.0]);
        assert!(ts.subsequence(8, 3).is_err());
        assert!(ts.subsequence(0, 2).is_err());
        assert_eq!(ts.subsequence_count(4), 7);
    }

    #[test]
    fn window_validation() {
        assert_eq!(WindowConfig::new(50).exclusion_radius, 13);
        assert_eq!(WindowConfig::new(4).exclusion_radius, 1);
        assert!(WindowConfig::new(4).validate(13).is_ok());
        assert!(WindowConfig::new(2).validate(13).is_err());
        assert!(WindowConfig::new(4)
            .with_exclusion(10)
            .validate(13)
            .is_err());
        assert!(WindowConfig::new(4).with_epsilon(0.0).validate(13).is_err());
        // 5 subsequences, radius 2: the middle one has no admissible neighbor
        assert!(WindowConfig::new(4)
            .with_exclusion(2)
            .validate_for_profile(8)
            .is_err());
        assert!(WindowConfig::new(4)
            .with_exclusion(2)
            .validate_for_profile(9)
            .is_ok());
    }

    #[test]
    fn serde_rejects_invalid_series() {
        assert!(serde_json::from_str::<TimeSeries>("[1.0]").is_err());
        let ts: TimeSeries = serde_json::from_str("[1.0, 2.5]").unwrap();
        assert_eq!(ts.values(), &[1.0, 2.5]);
    }
}
