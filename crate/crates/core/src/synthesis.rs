//! End-to-end anonymization: initialize `T̂`, then minimize the composite
//! loss against the frozen Matrix Profile of `T` with Adam.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distance::DEFAULT_VARIANCE_EPSILON;
use crate::error::{Error, Result};
use crate::eval::{median, rmse, subsequence_abs_corr};
use crate::loss::{
    accumulate_gradient, batch_components, sample_triples, LossComponents, LossWeights,
};
use crate::optim::Adam;
use crate::profile::mp_fast;
use crate::series::{default_exclusion_radius, TimeSeries, WindowConfig, MIN_WINDOW};

// Independent ChaCha streams derived from the one seed.
const STREAM_TRAIN: u64 = 1;
const STREAM_CHECKPOINT: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    #[serde(rename = "noise")]
    Noise,
    #[serde(rename = "smooth")]
    SmoothedNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub window: usize,
    /// `None` means `ceil(window / 4)`.
    pub exclusion_radius: Option<usize>,
    pub variance_epsilon: f64,
    pub weights: LossWeights,
    pub iterations: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub optimizer_betas: (f64, f64),
    pub optimizer_epsilon: f64,
    pub init_mode: InitMode,
    /// `None` means `ceil(window / 4)`.
    pub smoothing_width: Option<usize>,
    pub rng_seed: u64,
    pub checkpoint_every: usize,
    /// Number of triples in the fixed set used to score checkpoints.
    pub checkpoint_triples: usize,
    /// Stop after this many checkpoints without improvement; 0 disables.
    pub early_stop_patience: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            window: 100,
            exclusion_radius: None,
            variance_epsilon: DEFAULT_VARIANCE_EPSILON,
            weights: LossWeights::default(),
            iterations: 5000,
            batch_size: 64,
            step_size: 1e-2,
            optimizer_betas: (0.9, 0.999),
            optimizer_epsilon: 1e-8,
            init_mode: InitMode::SmoothedNoise,
            smoothing_width: None,
            rng_seed: 0,
            checkpoint_every: 100,
            checkpoint_triples: 1024,
            early_stop_patience: 0,
        }
    }
}

impl SynthesisConfig {
    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            ..Self::default()
        }
    }

    pub fn window_config(&self) -> WindowConfig {
        WindowConfig {
            m: self.window,
            exclusion_radius: self
                .exclusion_radius
                .unwrap_or_else(|| default_exclusion_radius(self.window)),
            variance_epsilon: self.variance_epsilon,
        }
    }

    pub fn smoothing(&self) -> usize {
        self.smoothing_width
            .unwrap_or_else(|| self.window.div_ceil(4))
            .max(1)
    }

    /// Replaces the derived defaults with concrete values.
    pub fn resolved(&self) -> Self {
        Self {
            exclusion_radius: Some(self.window_config().exclusion_radius),
            smoothing_width: Some(self.smoothing()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < MIN_WINDOW {
            return Err(Error::invalid(format!(
                "window must be at least {MIN_WINDOW}, got {}",
                self.window
            )));
        }
        if self.batch_size == 0 || self.checkpoint_every == 0 || self.checkpoint_triples == 0 {
            return Err(Error::invalid(
                "batch_size, checkpoint_every and checkpoint_triples must be positive",
            ));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        let (b1, b2) = self.optimizer_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return Err(Error::invalid(format!(
                "optimizer betas must lie in [0, 1), got ({b1}, {b2})"
            )));
        }
        if !(self.optimizer_epsilon > 0.0 && self.optimizer_epsilon.is_finite()) {
            return Err(Error::invalid("optimizer epsilon must be positive"));
        }
        if self.smoothing_width == Some(0) {
            return Err(Error::invalid("smoothing width must be positive"));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub iteration: usize,
    pub total: f64,
    pub local: f64,
    pub distance: f64,
    pub identity: f64,
    pub median_abs_corr: f64,
    pub mp_rmse: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<CheckpointRecord>,
}

impl TrainingTrace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&CheckpointRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&CheckpointRecord> {
        self.records.last()
    }
}

fn sample_stats(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Centered moving average; windows are truncated at the boundaries.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let before = (width - 1) / 2;
    let after = width - 1 - before;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(before);
            let hi = (t + after + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Starting point for the optimization: Gaussian noise with the sample mean
/// and standard deviation of `T`, optionally smoothed.
pub fn initialize(t: &TimeSeries, cfg: &SynthesisConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let (mean, std) = sample_stats(t);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let white: Vec<f64> = (0..t.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let unit = match cfg.init_mode {
        InitMode::Noise => white,
        InitMode::SmoothedNoise => {
            let smooth = moving_average(&white, cfg.smoothing());
            let (sm, ss) = sample_stats(&smooth);
            if ss > 0.0 {
                smooth.iter().map(|v| (v - sm) / ss).collect()
            } else {
                vec![0.0; smooth.len()]
            }
        }
    };
    TimeSeries::new(unit.iter().map(|z| mean + std * z).collect())
}

/// Runs the optimization and returns the synthesized series with its
/// checkpoint trace. The result depends only on `t` and `cfg`.
pub fn synthesize(t: &TimeSeries, cfg: &SynthesisConfig) -> Result<(TimeSeries, TrainingTrace)> {
    cfg.validate()?;
    let wcfg = cfg.window_config();
    wcfg.validate_for_profile(t.len())?;
    let target = mp_fast(t, &wcfg)?;
    let init = initialize(t, cfg)?;
    let mut trace = TrainingTrace::default();
    if cfg.iterations == 0 {
        return Ok((init, trace));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(STREAM_TRAIN);
    let mut checkpoint_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    checkpoint_rng.set_stream(STREAM_CHECKPOINT);
    let checkpoint_set = sample_triples(&target, cfg.checkpoint_triples, &mut checkpoint_rng)?;

    let mut that = init.into_inner();
    let mut grad = vec![0.0; that.len()];
    let mut adam = Adam::new(
        that.len(),
        cfg.step_size,
        cfg.optimizer_betas,
        cfg.optimizer_epsilon,
    );
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for iteration in 1..=cfg.iterations {
        let batch = sample_triples(&target, cfg.batch_size, &mut rng)?;
        grad.fill(0.0);
        accumulate_gradient(t, &that, &batch, &cfg.weights, &wcfg, &mut grad);
        adam.step(&mut that, &grad);

        if iteration % cfg.checkpoint_every != 0 && iteration != cfg.iterations {
            continue;
        }
        let components = batch_components(
            t,
            &that,
            &checkpoint_set,
            cfg.weights.identity_margin,
            &wcfg,
        );
        let total = components.weighted_total(&cfg.weights);
        if !total.is_finite() || !components.is_finite() || that.iter().any(|v| !v.is_finite()) {
            return Err(abort(iteration, components, trace));
        }
        let current = TimeSeries::new(that.clone())?;
        let mp_now = mp_fast(&current, &wcfg)?;
        let record = CheckpointRecord {
            iteration,
            total,
            local: components.local,
            distance: components.distance,
            identity: components.identity,
            median_abs_corr: median(&subsequence_abs_corr(t, &that, &wcfg)),
            mp_rmse: rmse(&target.distances, &mp_now.distances),
        };
        trace.records.push(record);

        if cfg.early_stop_patience > 0 {
            if total < best {
                best = total;
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.early_stop_patience {
                    break;
                }
            }
        }
    }
    Ok((TimeSeries::new(that)?, trace))
}

fn abort(iteration: usize, components: LossComponents, trace: TrainingTrace) -> Error {
    Error::NumericalAbort {
        iteration,
        components,
        partial_trace: Box::new(trace),
    }
}
