#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mpanon::TimeSeries;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const FIXTURE_LEN: usize = 2000;
pub const FIXTURE_WINDOW: usize = 50;
pub const FIXTURE_DISCORD: std::ops::Range<usize> = 1000..1100;

/// Sine of period 100 with N(0, 0.05) noise; samples 1000..1100 are
/// replaced by N(0, 0.5) noise, which forms the discord.
pub fn sine_discord() -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let burst = Normal::new(0.0, 0.5).unwrap();
    let values = (0..FIXTURE_LEN)
        .map(|t| {
            if FIXTURE_DISCORD.contains(&t) {
                burst.sample(&mut rng)
            } else {
                (std::f64::consts::TAU * t as f64 / 100.0).sin() + noise.sample(&mut rng)
            }
        })
        .collect();
    TimeSeries::new(values).unwrap()
}

pub fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/sine_discord.csv")
}

pub fn random_series(rng: &mut ChaCha8Rng, n: usize) -> TimeSeries {
    let normal = Normal::new(0.0, 1.0).unwrap();
    TimeSeries::new((0..n).map(|_| normal.sample(rng)).collect()).unwrap()
}

/// Random walk with a little white noise on top, so the series has both
/// structure and distinct subsequences.
pub fn random_walk(rng: &mut ChaCha8Rng, n: usize) -> TimeSeries {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut level = 0.0;
    let values = (0..n)
        .map(|_| {
            level += normal.sample(rng);
            level + 0.1 * normal.sample(rng)
        })
        .collect();
    TimeSeries::new(values).unwrap()
}
