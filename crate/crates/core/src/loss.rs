//! Synthesis objective: local decorrelation, nearest-neighbor distance
//! preservation and nearest-neighbor identity preservation.
//!
//! For an anchor `i`, its original nearest neighbor `j = MPI[i]` and a
//! sampled negative `k`:
//!
//! ```text
//! local    = corr(T_i, T̂_i)^2
//! distance = (dist(T_i, T_j) - dist(T̂_i, T̂_j))^2
//! identity = max(0, dist(T̂_i, T̂_j) - dist(T̂_i, T̂_k) + margin)
//! ```
//!
//! where `dist` is the z-normalized Euclidean distance. A batch averages each
//! term over its triples and combines them with [`LossWeights`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distance::{mean_std, pearson_unchecked, znorm_dist_unchecked};
use crate::error::{Error, Result};
use crate::profile::MatrixProfile;
use crate::series::{TimeSeries, WindowConfig};

/// Distances below this are clamped in the denominator of the distance
/// derivative.
const MIN_DISTANCE_FOR_GRADIENT: f64 = 1e-7;

/// Anchor `i`, its original nearest neighbor `j`, and a negative sample `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossTriple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub w_local: f64,
    pub w_distance: f64,
    pub w_identity: f64,
    pub identity_margin: f64,
}

/// The local term's gradient is O(1/m) per sample while the distance term's
/// scales with the distance error, so unit weights leave decorrelation
/// lagging far behind profile fitting. The default boosts the local term.
pub const DEFAULT_LOCAL_WEIGHT: f64 = 10.0;

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_local: DEFAULT_LOCAL_WEIGHT,
            ..Self::unit()
        }
    }
}

impl LossWeights {
    /// All three terms weighted 1, no margin: the plain unweighted sum.
    pub fn unit() -> Self {
        Self {
            w_local: 1.0,
            w_distance: 1.0,
            w_identity: 1.0,
            identity_margin: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.w_local,
            self.w_distance,
            self.w_identity,
            self.identity_margin,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!(
                "loss weights and margin must be finite and non-negative: {self:?}"
            )));
        }
        if self.w_local == 0.0 && self.w_distance == 0.0 && self.w_identity == 0.0 {
            return Err(Error::invalid("at least one loss weight must be positive"));
        }
        Ok(())
    }
}

/// Unweighted batch means of the three terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub local: f64,
    pub distance: f64,
    pub identity: f64,
}

impl LossComponents {
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        w.w_local * self.local + w.w_distance * self.distance + w.w_identity * self.identity
    }

    pub fn is_finite(&self) -> bool {
        self.local.is_finite() && self.distance.is_finite() && self.identity.is_finite()
    }
}

/// Per-sample partial derivatives of a batch loss with respect to `T̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer(Vec<f64>);

impl GradientBuffer {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_aligned(t: &[f64], that: &[f64]) -> Result<()> {
    if t.len() != that.len() {
        return Err(Error::invalid(format!(
            "original and synthesized series differ in length: {} vs {}",
            t.len(),
            that.len()
        )));
    }
    Ok(())
}

fn check_index(idx: usize, n: usize, cfg: &WindowConfig) -> Result<()> {
    if idx + cfg.m > n {
        return Err(Error::invalid(format!(
            "subsequence index {idx} out of range for length {n} and window {}",
            cfg.m
        )));
    }
    Ok(())
}

fn check_triples(triples: &[LossTriple], n: usize, cfg: &WindowConfig) -> Result<()> {
    if triples.is_empty() {
        return Err(Error::invalid("empty triple batch"));
    }
    for t in triples {
        check_index(t.i, n, cfg)?;
        check_index(t.j, n, cfg)?;
        check_index(t.k, n, cfg)?;
    }
    Ok(())
}

#[inline]
fn window(x: &[f64], start: usize, m: usize) -> &[f64] {
    &x[start..start + m]
}

pub fn loss_local(t: &TimeSeries, that: &TimeSeries, i: usize, cfg: &WindowConfig) -> Result<f64> {
    check_aligned(t, that)?;
    cfg.validate(t.len())?;
    check_index(i, t.len(), cfg)?;
    let r = pearson_unchecked(
        window(t, i, cfg.m),
        window(that, i, cfg.m),
        cfg.variance_epsilon,
    );
    Ok(r * r)
}

pub fn loss_distance(
    t: &TimeSeries,
    that: &TimeSeries,
    i: usize,
    j: usize,
    cfg: &WindowConfig,
) -> Result<f64> {
    check_aligned(t, that)?;
    cfg.validate(t.len())?;
    check_index(i, t.len(), cfg)?;
    check_index(j, t.len(), cfg)?;
    let (m, eps) = (cfg.m, cfg.variance_epsilon);
    let target = znorm_dist_unchecked(window(t, i, m), window(t, j, m), eps);
    let got = znorm_dist_unchecked(window(that, i, m), window(that, j, m), eps);
    Ok((target - got) * (target - got))
}

pub fn loss_identity(
    that: &TimeSeries,
    triple: &LossTriple,
    cfg: &WindowConfig,
    margin: f64,
) -> Result<f64> {
    cfg.validate(that.len())?;
    check_triples(std::slice::from_ref(triple), that.len(), cfg)?;
    let (m, eps) = (cfg.m, cfg.variance_epsilon);
    let anchor = window(that, triple.i, m);
    let pos = znorm_dist_unchecked(anchor, window(that, triple.j, m), eps);
    let neg = znorm_dist_unchecked(anchor, window(that, triple.k, m), eps);
    Ok((pos - neg + margin).max(0.0))
}

/// Weighted total and the unweighted component means.
pub fn batch_loss(
    t: &TimeSeries,
    that: &TimeSeries,
    triples: &[LossTriple],
    weights: &LossWeights,
    cfg: &WindowConfig,
) -> Result<(f64, LossComponents)> {
    check_aligned(t, that)?;
    cfg.validate(t.len())?;
    weights.validate()?;
    check_triples(triples, t.len(), cfg)?;
    let c = batch_components(t, that, triples, weights.identity_margin, cfg);
    Ok((c.weighted_total(weights), c))
}

pub fn batch_gradient(
    t: &TimeSeries,
    that: &TimeSeries,
    triples: &[LossTriple],
    weights: &LossWeights,
    cfg: &WindowConfig,
) -> Result<GradientBuffer> {
    check_aligned(t, that)?;
    cfg.validate(t.len())?;
    weights.validate()?;
    check_triples(triples, t.len(), cfg)?;
    let mut grad = GradientBuffer::zeros(t.len());
    accumulate_gradient(t, that, triples, weights, cfg, grad.as_mut_slice());
    Ok(grad)
}

/// Unchecked batch means; callers validate lengths and indices.
pub(crate) fn batch_components(
    t: &[f64],
    that: &[f64],
    triples: &[LossTriple],
    margin: f64,
    cfg: &WindowConfig,
) -> LossComponents {
    let (m, eps) = (cfg.m, cfg.variance_epsilon);
    let mut sum = LossComponents::default();
    for tr in triples {
        let r = pearson_unchecked(window(t, tr.i, m), window(that, tr.i, m), eps);
        sum.local += r * r;

        let target = znorm_dist_unchecked(window(t, tr.i, m), window(t, tr.j, m), eps);
        let anchor = window(that, tr.i, m);
        let pos = znorm_dist_unchecked(anchor, window(that, tr.j, m), eps);
        sum.distance += (target - pos) * (target - pos);

        let neg = znorm_dist_unchecked(anchor, window(that, tr.k, m), eps);
        sum.identity += (pos - neg + margin).max(0.0);
    }
    let b = triples.len() as f64;
    LossComponents {
        local: sum.local / b,
        distance: sum.distance / b,
        identity: sum.identity / b,
    }
}

/// A z-normalized window with its standard deviation.
struct NormWindow {
    z: Vec<f64>,
    std: f64,
    flat: bool,
}

impl NormWindow {
    fn new(x: &[f64], eps: f64) -> Self {
        let (mean, std) = mean_std(x);
        let flat = std <= eps;
        let z = if flat {
            vec![0.0; x.len()]
        } else {
            x.iter().map(|v| (v - mean) / std).collect()
        };
        Self { z, std, flat }
    }

    fn corr(&self, other: &NormWindow) -> f64 {
        let m = self.z.len() as f64;
        self.z.iter().zip(&other.z).map(|(a, b)| a * b).sum::<f64>() / m
    }
}

/// Adds `scale * d dist(a, b) / d a` at `a_start` and `scale * d dist(a, b) / d b`
/// at `b_start`. Flat windows make the distance locally constant.
fn add_distance_grad(
    grad: &mut [f64],
    scale: f64,
    a: &NormWindow,
    a_start: usize,
    b: &NormWindow,
    b_start: usize,
    dist: f64,
) {
    if scale == 0.0 || a.flat || b.flat {
        return;
    }
    let r = a.corr(b);
    let denom = dist.max(MIN_DISTANCE_FOR_GRADIENT);
    let ca = -scale / (a.std * denom);
    let cb = -scale / (b.std * denom);
    for (t, (za, zb)) in a.z.iter().zip(&b.z).enumerate() {
        grad[a_start + t] += ca * (zb - r * za);
        grad[b_start + t] += cb * (za - r * zb);
    }
}

/// Unchecked gradient accumulation into `grad` (which is not cleared).
pub(crate) fn accumulate_gradient(
    t: &[f64],
    that: &[f64],
    triples: &[LossTriple],
    weights: &LossWeights,
    cfg: &WindowConfig,
    grad: &mut [f64],
) {
    let (m, eps) = (cfg.m, cfg.variance_epsilon);
    let b = triples.len() as f64;
    let (w_local, w_dist, w_id) = (
        weights.w_local / b,
        weights.w_distance / b,
        weights.w_identity / b,
    );
    let mf = m as f64;

    for tr in triples {
        let hi = NormWindow::new(window(that, tr.i, m), eps);

        if w_local != 0.0 {
            let oi = NormWindow::new(window(t, tr.i, m), eps);
            if !oi.flat && !hi.flat {
                let r = oi.corr(&hi);
                let c = w_local * 2.0 * r / (mf * hi.std);
                for (s, (zo, zh)) in oi.z.iter().zip(&hi.z).enumerate() {
                    grad[tr.i + s] += c * (zo - r * zh);
                }
            }
        }

        if w_dist == 0.0 && w_id == 0.0 {
            continue;
        }
        let hj = NormWindow::new(window(that, tr.j, m), eps);
        let pos = znorm_dist_unchecked(window(that, tr.i, m), window(that, tr.j, m), eps);

        if w_dist != 0.0 {
            let target = znorm_dist_unchecked(window(t, tr.i, m), window(t, tr.j, m), eps);
            let scale = w_dist * -2.0 * (target - pos);
            add_distance_grad(grad, scale, &hi, tr.i, &hj, tr.j, pos);
        }

        if w_id != 0.0 {
            let neg = znorm_dist_unchecked(window(that, tr.i, m), window(that, tr.k, m), eps);
            // subgradient 0 at the hinge
            if pos - neg + weights.identity_margin > 0.0 {
                let hk = NormWindow::new(window(that, tr.k, m), eps);
                add_distance_grad(grad, w_id, &hi, tr.i, &hj, tr.j, pos);
                add_distance_grad(grad, -w_id, &hi, tr.i, &hk, tr.k, neg);
            }
        }
    }
}

/// Number of indices in `0..count` outside both exclusion zones, and a map
/// from a rank among them to the index.
struct Negatives {
    count: usize,
    /// Merged forbidden intervals, inclusive, sorted.
    forbidden: [(usize, usize); 2],
    len: usize,
}

impl Negatives {
    fn new(count: usize, radius: usize, i: usize, j: usize) -> Self {
        let zone = |c: usize| (c.saturating_sub(radius), (c + radius).min(count - 1));
        let (mut a, mut b) = (zone(i), zone(j));
        if b.0 < a.0 {
            std::mem::swap(&mut a, &mut b);
        }
        let (forbidden, len) = if b.0 <= a.1 + 1 {
            ([(a.0, a.1.max(b.1)), (0, 0)], 1)
        } else {
            ([a, b], 2)
        };
        Self {
            count,
            forbidden,
            len,
        }
    }

    fn available(&self) -> usize {
        let covered: usize = self.forbidden[..self.len]
            .iter()
            .map(|(lo, hi)| hi - lo + 1)
            .sum();
        self.count - covered
    }

    fn nth(&self, mut rank: usize) -> usize {
        let mut cursor = 0;
        for &(lo, hi) in &self.forbidden[..self.len] {
            let gap = lo - cursor;
            if rank < gap {
                return cursor + rank;
            }
            rank -= gap;
            cursor = hi + 1;
        }
        cursor + rank
    }
}

/// Draws `batch_size` triples: anchors uniform over all subsequences, the
/// original nearest neighbor as positive, and a negative uniform over the
/// indices outside both the anchor's and the positive's exclusion zones.
/// Anchors without any admissible negative are redrawn.
pub fn sample_triples<R: Rng + ?Sized>(
    mp: &MatrixProfile,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<LossTriple>> {
    let count = mp.len();
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    if count == 0 || mp.indices.len() != count {
        return Err(Error::invalid("matrix profile is empty or inconsistent"));
    }
    if let Some(bad) = mp.indices.iter().position(|&j| j >= count) {
        return Err(Error::invalid(format!(
            "matrix profile index {} at {bad} out of range",
            mp.indices[bad]
        )));
    }
    let radius = mp.exclusion_radius;
    if !(0..count).any(|i| Negatives::new(count, radius, i, mp.indices[i]).available() > 0) {
        return Err(Error::invalid(format!(
            "no subsequence admits a negative sample with exclusion radius {radius}"
        )));
    }

    let mut triples = Vec::with_capacity(batch_size);
    while triples.len() < batch_size {
        let i = rng.random_range(0..count);
        let j = mp.indices[i];
        let negatives = Negatives::new(count, radius, i, j);
        let available = negatives.available();
        if available == 0 {
            continue;
        }
        let k = negatives.nth(rng.random_range(0..available));
        triples.push(LossTriple { i, j, k });
    }
    Ok(triples)
}
