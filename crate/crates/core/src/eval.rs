//! Anonymity and utility metrics, the Matrix Profile anomaly detector, AUC,
//! and a planted-anomaly dataset generator.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::distance::pearson_unchecked;
use crate::error::{Error, Result};
use crate::profile::{discord_topk, mp_fast, MatrixProfile};
use crate::series::{TimeSeries, WindowConfig};

pub const DEFAULT_DISCORD_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrStats {
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Pearson correlation of the two full series.
    pub global_corr: f64,
    /// Statistics of |corr(T_i, T̂_i)| over all aligned windows.
    pub subseq_corr_stats: CorrStats,
    pub mp_rmse: f64,
    pub mpi_agreement: f64,
    pub discord_overlap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc_original: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc_synth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub series: TimeSeries,
    pub anomaly_mask: Vec<bool>,
}

fn check_same_length(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("series lengths differ: {a} vs {b}")));
    }
    Ok(())
}

/// |corr(T_i, T̂_i)| for every aligned window start `i`.
pub fn subsequence_abs_corr(t: &[f64], that: &[f64], cfg: &WindowConfig) -> Vec<f64> {
    let m = cfg.m;
    t.windows(m)
        .zip(that.windows(m))
        .map(|(a, b)| pearson_unchecked(a, b, cfg.variance_epsilon).abs())
        .collect()
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub(crate) fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

/// Fraction of positions whose nearest-neighbor locations agree within the
/// exclusion radius.
pub fn mpi_agreement(a: &MatrixProfile, b: &MatrixProfile) -> f64 {
    let radius = a.exclusion_radius;
    let hits = a
        .indices
        .iter()
        .zip(&b.indices)
        .filter(|(x, y)| x.abs_diff(**y) <= radius)
        .count();
    hits as f64 / a.len() as f64
}

/// Share of `reference` discords matched one-to-one by a `candidate`
/// discord at most `radius` away.
pub fn discord_overlap(reference: &[usize], candidate: &[usize], radius: usize) -> f64 {
    if reference.is_empty() {
        return 1.0;
    }
    let mut used = vec![false; candidate.len()];
    let mut hits = 0;
    for &r in reference {
        let best = candidate
            .iter()
            .enumerate()
            .filter(|(c, &x)| !used[*c] && x.abs_diff(r) <= radius)
            .min_by_key(|(_, &x)| x.abs_diff(r));
        if let Some((c, _)) = best {
            used[c] = true;
            hits += 1;
        }
    }
    hits as f64 / reference.len() as f64
}

pub fn evaluate(t: &TimeSeries, that: &TimeSeries, cfg: &WindowConfig) -> Result<EvalReport> {
    evaluate_with_k(t, that, cfg, DEFAULT_DISCORD_K)
}

pub fn evaluate_with_k(
    t: &TimeSeries,
    that: &TimeSeries,
    cfg: &WindowConfig,
    discord_k: usize,
) -> Result<EvalReport> {
    check_same_length(t.len(), that.len())?;
    let mp_t = mp_fast(t, cfg)?;
    let mp_h = mp_fast(that, cfg)?;

    let corrs = subsequence_abs_corr(t, that, cfg);
    let stats = CorrStats {
        median: median(&corrs),
        mean: corrs.iter().sum::<f64>() / corrs.len() as f64,
        max: corrs.iter().copied().fold(0.0, f64::max),
    };

    let k = discord_k.min(mp_t.len());
    let discords_t = discord_topk(&mp_t, k)?;
    let discords_h = discord_topk(&mp_h, k)?;

    Ok(EvalReport {
        global_corr: pearson_unchecked(t, that, cfg.variance_epsilon),
        subseq_corr_stats: stats,
        mp_rmse: rmse(&mp_t.distances, &mp_h.distances),
        mpi_agreement: mpi_agreement(&mp_t, &mp_h),
        discord_overlap: discord_overlap(&discords_t, &discords_h, cfg.m),
        auc_original: None,
        auc_synth: None,
    })
}

/// [`evaluate`] plus the Matrix Profile detector's AUC on both series.
pub fn evaluate_labeled(
    t: &TimeSeries,
    that: &TimeSeries,
    labels: &[bool],
    cfg: &WindowConfig,
) -> Result<EvalReport> {
    check_same_length(t.len(), labels.len())?;
    let mut report = evaluate(t, that, cfg)?;
    report.auc_original = Some(auc(&mp_anomaly_score(t, cfg)?, labels)?);
    report.auc_synth = Some(auc(&mp_anomaly_score(that, cfg)?, labels)?);
    Ok(report)
}

/// Per-timestep anomaly score: the largest profile value among the windows
/// covering that timestep.
pub fn mp_anomaly_score(t: &TimeSeries, cfg: &WindowConfig) -> Result<Vec<f64>> {
    let mp = mp_fast(t, cfg)?;
    Ok(profile_to_point_scores(&mp, t.len()))
}

pub(crate) fn profile_to_point_scores(mp: &MatrixProfile, n: usize) -> Vec<f64> {
    let m = mp.window;
    (0..n)
        .map(|s| {
            let lo = (s + 1).saturating_sub(m);
            let hi = s.min(mp.len() - 1);
            mp.distances[lo..=hi]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Area under the ROC curve from the rank-sum statistic; tied scores share
/// their average rank, so each tied positive/negative pair counts one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_same_length(scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid(
            "AUC needs at least one positive and one negative label",
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks are 1-based: the group spans start+1 ..= end
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i]).count();
        rank_sum += avg_rank * pos_in_group as f64;
        start = end;
    }
    let p = positives as f64;
    let q = negatives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AnomalyKind {
    Spike,
    Dropout,
    FrequencyShift,
}

const KINDS: [AnomalyKind; 3] = [
    AnomalyKind::Spike,
    AnomalyKind::Dropout,
    AnomalyKind::FrequencyShift,
];
const NOISE_LEVEL: f64 = 0.05;

/// Sine of period `2m` plus Gaussian noise (5% of the amplitude), with
/// `anomaly_count` length-`m` windows replaced by a distorted pattern.
pub fn make_planted_dataset(
    n: usize,
    m: usize,
    anomaly_count: usize,
    seed: u64,
) -> Result<LabeledSeries> {
    if m < crate::series::MIN_WINDOW || n < 2 * m {
        return Err(Error::invalid(format!(
            "need window >= 3 and length >= 2 * window, got n = {n}, m = {m}"
        )));
    }
    if anomaly_count > 0 && n / anomaly_count < 2 * m {
        return Err(Error::invalid(format!(
            "cannot place {anomaly_count} non-overlapping anomalies of length {m} in {n} samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, NOISE_LEVEL).expect("valid normal");
    let period = 2.0 * m as f64;
    let mut values: Vec<f64> = (0..n)
        .map(|t| (TAU * t as f64 / period).sin() + noise.sample(&mut rng))
        .collect();
    let mut mask = vec![false; n];

    let mut kinds = KINDS;
    kinds.shuffle(&mut rng);
    if let Some(segment) = n.checked_div(anomaly_count) {
        let margin = m / 2;
        for a in 0..anomaly_count {
            let lo = a * segment + margin;
            let hi = (a + 1) * segment - m - margin;
            let start = rng.random_range(lo..=hi);
            let span = &mut values[start..start + m];
            match kinds[a % KINDS.len()] {
                AnomalyKind::Spike => {
                    let center = rng.random_range(m / 4..=3 * m / 4) as f64;
                    let width = (m as f64 / 10.0).max(1.0);
                    for (s, v) in span.iter_mut().enumerate() {
                        let d = (s as f64 - center) / width;
                        *v += 3.0 * (-0.5 * d * d).exp();
                    }
                }
                AnomalyKind::Dropout => {
                    for v in span.iter_mut() {
                        *v = noise.sample(&mut rng);
                    }
                }
                AnomalyKind::FrequencyShift => {
                    let factor = rng.random_range(2.5..3.5);
                    let phase = TAU * start as f64 / period;
                    for (s, v) in span.iter_mut().enumerate() {
                        *v = (phase + factor * TAU * s as f64 / period).sin()
                            + noise.sample(&mut rng);
                    }
                }
            }
            mask[start..start + m].fill(true);
        }
    }
    Ok(LabeledSeries {
        series: TimeSeries::new(values)?,
        anomaly_mask: mask,
    })
}
