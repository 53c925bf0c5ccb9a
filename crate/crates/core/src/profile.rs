//! Self-join Matrix Profile and Matrix Profile Index.
//!
//! [`mp_brute_force`] is the reference: it z-normalizes every window and
//! scans all admissible pairs. [`mp_fast`] walks the diagonals of the
//! distance matrix, updating the centered cross-product of a pair from its
//! predecessor in O(1), and must agree with the reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{mean_std, znorm_into};
use crate::error::{Error, Result};
use crate::series::{TimeSeries, WindowConfig};

/// Steps along a diagonal after which the running cross-product is
/// recomputed from scratch.
const REFRESH_INTERVAL: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixProfile {
    pub distances: Vec<f64>,
    pub indices: Vec<usize>,
    pub window: usize,
    pub exclusion_radius: usize,
}

impl MatrixProfile {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Whether `k` lies outside the exclusion zone of `i`.
    #[inline]
    pub fn admissible(&self, i: usize, k: usize) -> bool {
        i.abs_diff(k) > self.exclusion_radius
    }
}

/// Running best (distance, index) with ties toward the smaller index.
#[inline]
fn offer(dist: &mut f64, idx: &mut usize, d: f64, k: usize) {
    if d < *dist || (d == *dist && k < *idx) {
        *dist = d;
        *idx = k;
    }
}

pub fn mp_brute_force(ts: &TimeSeries, cfg: &WindowConfig) -> Result<MatrixProfile> {
    cfg.validate_for_profile(ts.len())?;
    let m = cfg.m;
    let count = ts.subsequence_count(m);
    let mut z = vec![0.0; count * m];
    for (i, out) in z.chunks_exact_mut(m).enumerate() {
        znorm_into(&ts[i..i + m], cfg.variance_epsilon, out);
    }

    let mut distances = vec![f64::INFINITY; count];
    let mut indices = vec![usize::MAX; count];
    for i in 0..count {
        let zi = &z[i * m..(i + 1) * m];
        for k in 0..count {
            if i.abs_diff(k) <= cfg.exclusion_radius {
                continue;
            }
            let zk = &z[k * m..(k + 1) * m];
            let d = zi
                .iter()
                .zip(zk)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            offer(&mut distances[i], &mut indices[i], d, k);
        }
    }
    Ok(MatrixProfile {
        distances,
        indices,
        window: m,
        exclusion_radius: cfg.exclusion_radius,
    })
}

/// Per-window statistics for the diagonal update.
struct WindowStats {
    mean: Vec<f64>,
    std: Vec<f64>,
    flat: Vec<bool>,
    /// `(x[i+m-1] - x[i-1]) / 2`
    df: Vec<f64>,
    /// `(x[i+m-1] - mean[i]) + (x[i-1] - mean[i-1])`
    dg: Vec<f64>,
}

impl WindowStats {
    fn new(x: &[f64], m: usize, epsilon: f64) -> Self {
        let count = x.len() - m + 1;
        let mut mean = Vec::with_capacity(count);
        let mut std = Vec::with_capacity(count);
        for w in x.windows(m) {
            let (mu, sd) = mean_std(w);
            mean.push(mu);
            std.push(sd);
        }
        let flat = std.iter().map(|&s| s <= epsilon).collect();
        let mut df = vec![0.0; count];
        let mut dg = vec![0.0; count];
        for i in 1..count {
            df[i] = (x[i + m - 1] - x[i - 1]) / 2.0;
            dg[i] = (x[i + m - 1] - mean[i]) + (x[i - 1] - mean[i - 1]);
        }
        Self {
            mean,
            std,
            flat,
            df,
            dg,
        }
    }

    fn centered_cross(&self, x: &[f64], m: usize, i: usize, j: usize) -> f64 {
        let (mi, mj) = (self.mean[i], self.mean[j]);
        x[i..i + m]
            .iter()
            .zip(&x[j..j + m])
            .map(|(a, b)| (a - mi) * (b - mj))
            .sum()
    }

    /// Squared distance from the running cross-product.
    #[inline]
    fn distance_sq(&self, cov: f64, m: usize, i: usize, j: usize) -> f64 {
        match (self.flat[i], self.flat[j]) {
            (true, true) => 0.0,
            (true, false) | (false, true) => m as f64,
            (false, false) => {
                let mf = m as f64;
                let r = (cov / (mf * self.std[i] * self.std[j])).clamp(-1.0, 1.0);
                (2.0 * mf * (1.0 - r)).max(0.0)
            }
        }
    }

    /// Calls `visit(i, j, d2)` for every pair on the diagonals `offsets`.
    fn walk<F: FnMut(usize, usize, f64)>(
        &self,
        x: &[f64],
        m: usize,
        offsets: &[usize],
        mut visit: F,
    ) {
        let count = self.mean.len();
        for &g in offsets {
            let mut cov = 0.0;
            for i in 0..count - g {
                let j = i + g;
                if i % REFRESH_INTERVAL == 0 {
                    cov = self.centered_cross(x, m, i, j);
                } else {
                    cov += self.df[i] * self.dg[j] + self.df[j] * self.dg[i];
                }
                visit(i, j, self.distance_sq(cov, m, i, j));
            }
        }
    }
}

/// Merges per-worker `(distance, index)` arrays in worker order.
fn merge(partials: Vec<(Vec<f64>, Vec<usize>)>, count: usize) -> (Vec<f64>, Vec<usize>) {
    let mut distances = vec![f64::INFINITY; count];
    let mut indices = vec![usize::MAX; count];
    for (dist, idx) in partials {
        for i in 0..count {
            offer(&mut distances[i], &mut indices[i], dist[i], idx[i]);
        }
    }
    (distances, indices)
}

/// Relative slack on `2m(1 - r)` within which a pair is re-scored exactly.
const REFINE_SLACK: f64 = 1e-9;

/// Two passes over the diagonals. The first finds, per subsequence, the
/// smallest squared distance from the O(1) cross-product update. That route
/// loses precision as the distance approaches zero, so the second pass
/// re-scores every pair within a small slack of that minimum with the
/// explicit z-normalized Euclidean distance, which is what gets reported.
pub fn mp_fast(ts: &TimeSeries, cfg: &WindowConfig) -> Result<MatrixProfile> {
    cfg.validate_for_profile(ts.len())?;
    let x = ts.values();
    let m = cfg.m;
    let count = ts.subsequence_count(m);
    let stats = WindowStats::new(x, m, cfg.variance_epsilon);

    let diagonals: Vec<usize> = (cfg.exclusion_radius + 1..count).collect();
    let workers = rayon::current_num_threads().max(1);
    let chunk = diagonals.len().div_ceil(4 * workers).max(1);

    // Each diagonal is walked by exactly one worker from the same starting
    // point, so per-pair values do not depend on the partitioning and the
    // ordered merges are reproducible.
    let coarse = diagonals
        .par_chunks(chunk)
        .map(|offsets| {
            let mut best = vec![f64::INFINITY; count];
            stats.walk(x, m, offsets, |i, j, d2| {
                best[i] = best[i].min(d2);
                best[j] = best[j].min(d2);
            });
            (best, vec![0; count])
        })
        .collect();
    let (coarse, _) = merge(coarse, count);
    let slack = REFINE_SLACK * 2.0 * m as f64;
    let threshold: Vec<f64> = coarse.iter().map(|d2| d2 + slack).collect();

    let mut z = vec![0.0; count * m];
    for (i, out) in z.chunks_exact_mut(m).enumerate() {
        znorm_into(&x[i..i + m], cfg.variance_epsilon, out);
    }
    let exact = |i: usize, j: usize| -> f64 {
        z[i * m..(i + 1) * m]
            .iter()
            .zip(&z[j * m..(j + 1) * m])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    let refined = diagonals
        .par_chunks(chunk)
        .map(|offsets| {
            let mut dist = vec![f64::INFINITY; count];
            let mut idx = vec![usize::MAX; count];
            stats.walk(x, m, offsets, |i, j, d2| {
                if d2 <= threshold[i] || d2 <= threshold[j] {
                    let d = exact(i, j);
                    offer(&mut dist[i], &mut idx[i], d, j);
                    offer(&mut dist[j], &mut idx[j], d, i);
                }
            });
            (dist, idx)
        })
        .collect();
    let (distances, indices) = merge(refined, count);
    Ok(MatrixProfile {
        distances,
        indices,
        window: m,
        exclusion_radius: cfg.exclusion_radius,
    })
}

/// The `k` largest profile entries, picked greedily so that no two picks lie
/// within the exclusion radius of each other. Fewer than `k` are returned
/// when the suppression exhausts the candidates.
pub fn discord_topk(mp: &MatrixProfile, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > mp.len() {
        return Err(Error::invalid(format!(
            "discord count must be in 1..={}, got {k}",
            mp.len()
        )));
    }
    let mut order: Vec<usize> = (0..mp.len()).collect();
    order.sort_by(|&a, &b| mp.distances[b].total_cmp(&mp.distances[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    for i in order {
        if picked.len() == k {
            break;
        }
        if picked.iter().all(|&p| mp.admissible(p, i)) {
            picked.push(i);
        }
    }
    Ok(picked)
}
