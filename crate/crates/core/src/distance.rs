//! z-normalization, Pearson correlation and z-normalized Euclidean distance.
//!
//! All three use the population standard deviation (divide by `m`), which
//! makes `znorm_dist(x, y)^2 == 2m(1 - pearson_corr(x, y))` hold for any
//! pair of non-flat inputs. A vector whose standard deviation is at or below
//! `epsilon` is "flat": it normalizes to the zero vector and correlates 0
//! with everything.

use crate::error::{Error, Result};
use crate::series::MIN_WINDOW;

pub const DEFAULT_VARIANCE_EPSILON: f64 = 1e-8;

/// Mean and population standard deviation (two-pass).
#[inline]
pub(crate) fn mean_std(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let ss = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / m).sqrt())
}

/// Writes the z-normalized `x` into `out` and returns the standard
/// deviation; `out` is zeroed when `x` is flat.
#[inline]
pub(crate) fn znorm_into(x: &[f64], epsilon: f64, out: &mut [f64]) -> f64 {
    let (mean, std) = mean_std(x);
    if std > epsilon {
        for (o, v) in out.iter_mut().zip(x) {
            *o = (v - mean) / std;
        }
    } else {
        out.fill(0.0);
    }
    std
}

#[inline]
pub(crate) fn pearson_unchecked(x: &[f64], y: &[f64], epsilon: f64) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if (sxx / m).sqrt() <= epsilon || (syy / m).sqrt() <= epsilon {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

#[inline]
pub(crate) fn znorm_dist_unchecked(x: &[f64], y: &[f64], epsilon: f64) -> f64 {
    let (mx, sx) = mean_std(x);
    let (my, sy) = mean_std(y);
    let fx = sx > epsilon;
    let fy = sy > epsilon;
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        let za = if fx { (a - mx) / sx } else { 0.0 };
        let zb = if fy { (b - my) / sy } else { 0.0 };
        acc += (za - zb) * (za - zb);
    }
    acc.sqrt()
}

fn check_vector(x: &[f64], what: &str) -> Result<()> {
    if x.len() < MIN_WINDOW {
        return Err(Error::invalid(format!(
            "{what} has length {}, need at least {MIN_WINDOW}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} contains non-finite values")));
    }
    Ok(())
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    check_vector(x, "x")?;
    check_vector(y, "y")
}

/// Zero mean, unit (population) standard deviation; flat inputs map to zeros.
pub fn z_normalize(x: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    check_vector(x, "input")?;
    let mut out = vec![0.0; x.len()];
    znorm_into(x, epsilon, &mut out);
    Ok(out)
}

/// Pearson correlation in `[-1, 1]`; 0 if either input is flat.
pub fn pearson_corr(x: &[f64], y: &[f64], epsilon: f64) -> Result<f64> {
    check_pair(x, y)?;
    Ok(pearson_unchecked(x, y, epsilon))
}

/// Euclidean distance between `z_normalize(x)` and `z_normalize(y)`.
pub fn znorm_dist(x: &[f64], y: &[f64], epsilon: f64) -> Result<f64> {
    check_pair(x, y)?;
    Ok(znorm_dist_unchecked(x, y, epsilon))
}
