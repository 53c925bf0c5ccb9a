//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mpanon::loss::{loss_distance, loss_identity, loss_local};
use mpanon::{
    auc, batch_gradient, batch_loss, discord_topk, evaluate, initialize, make_planted_dataset,
    mp_anomaly_score, mp_brute_force, mp_fast, pearson_corr, sample_triples, synthesize,
    znorm_dist, LossTriple, LossWeights, SynthesisConfig, TimeSeries, WindowConfig,
    DEFAULT_VARIANCE_EPSILON,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn explicit_dist(x: &[f64], y: &[f64]) -> f64 {
    znorm_dist(x, y, DEFAULT_VARIANCE_EPSILON).unwrap()
}

/// MP oracle equivalence on random series of random shape.
fn mp_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut fast_time = Duration::ZERO;
    let mut worst = 0.0f64;
    let mut index_failures = 0;
    let mut tied_rows = 0;
    for case in 0..100 {
        let n = rng.random_range(100..=2000);
        let m = rng.random_range(4..=64);
        let ts = match case % 3 {
            0 => common::random_series(&mut rng, n),
            1 => common::random_walk(&mut rng, n),
            _ => {
                let period = rng.random_range(5.0..80.0);
                let noise = common::random_series(&mut rng, n);
                let v = (0..n)
                    .map(|t| (std::f64::consts::TAU * t as f64 / period).sin() + 0.01 * noise[t])
                    .collect();
                TimeSeries::new(v).unwrap()
            }
        };
        let cfg = WindowConfig::new(m);
        let started = Instant::now();
        let fast = mp_fast(&ts, &cfg).unwrap();
        fast_time += started.elapsed();
        let slow = mp_brute_force(&ts, &cfg).unwrap();
        for i in 0..fast.len() {
            worst = worst.max((fast.distances[i] - slow.distances[i]).abs());
            let (a, b) = (fast.indices[i], slow.indices[i]);
            if a != b {
                let da = explicit_dist(&ts[i..i + m], &ts[a..a + m]);
                let db = explicit_dist(&ts[i..i + m], &ts[b..b + m]);
                if (da - db).abs() > 1e-7 {
                    index_failures += 1;
                } else {
                    tied_rows += 1;
                }
            }
        }
    }
    check(
        worst < 1e-9 && index_failures == 0 && fast_time < Duration::from_secs(60),
        format!(
            "max |fast - brute| = {worst:.2e}, index mismatches on unique minima = {index_failures} \
             ({tied_rows} near-tied rows), mp_fast total {:.2?}",
            fast_time
        ),
    )
}

/// znorm_dist^2 = 2m(1 - r) on random non-flat pairs.
fn distance_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(3..200);
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let x: Vec<f64> = (0..m)
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-50.0..50.0)).collect();
        let d = znorm_dist(&x, &y, DEFAULT_VARIANCE_EPSILON).unwrap();
        let r = pearson_corr(&x, &y, DEFAULT_VARIANCE_EPSILON).unwrap();
        worst = worst.max((d * d - 2.0 * m as f64 * (1.0 - r)).abs());
    }
    check(worst < 1e-9, format!("max |d^2 - 2m(1 - r)| = {worst:.2e}"))
}

/// Analytic gradient against central finite differences.
fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    let cfg = WindowConfig::new(10);
    let (mut worst_rel, mut worst_abs) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let t = common::random_walk(&mut rng, 200);
        let that = common::random_series(&mut rng, 200);
        let mp = mp_fast(&t, &cfg).unwrap();
        let triples = sample_triples(&mp, 8, &mut rng).unwrap();
        let w = LossWeights {
            w_local: rng.random_range(0.1..3.0),
            w_distance: rng.random_range(0.1..3.0),
            w_identity: rng.random_range(0.1..3.0),
            identity_margin: rng.random_range(0.0..2.0),
        };
        let grad = batch_gradient(&t, &that, &triples, &w, &cfg).unwrap();
        let mut v = that.values().to_vec();
        for p in 0..v.len() {
            let orig = v[p];
            let mut at = |x: f64| {
                v[p] = x;
                let s = TimeSeries::new(v.clone()).unwrap();
                batch_loss(&t, &s, &triples, &w, &cfg).unwrap().0
            };
            let fd = (at(orig + h) - at(orig - h)) / (2.0 * h);
            v[p] = orig;
            let g = grad.as_slice()[p];
            if g.abs() < 1e-3 {
                worst_abs = worst_abs.max((g - fd).abs());
            } else {
                worst_rel = worst_rel.max((g - fd).abs() / g.abs());
            }
        }
    }
    check(
        worst_rel < 1e-4 && worst_abs < 1e-7,
        format!("max relative error {worst_rel:.2e}, max absolute error (small gradients) {worst_abs:.2e}"),
    )
}

/// With That = T the global terms vanish and the local term is 1.
fn zero_loss_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut nonzero, mut local_off, mut count) = (0, 0.0f64, 0);
    for case in 0..5 {
        let cfg = WindowConfig::new(8 + 6 * case);
        let t = common::random_walk(&mut rng, 600);
        let mp = mp_brute_force(&t, &cfg).unwrap();
        for tr in sample_triples(&mp, 400, &mut rng).unwrap() {
            let LossTriple { i, j, .. } = tr;
            if loss_distance(&t, &t, i, j, &cfg).unwrap() != 0.0
                || loss_identity(&t, &tr, &cfg, 0.0).unwrap() != 0.0
            {
                nonzero += 1;
            }
            local_off = local_off.max((loss_local(&t, &t, i, &cfg).unwrap() - 1.0).abs());
            count += 1;
        }
    }
    check(
        nonzero == 0 && local_off < 1e-12,
        format!("{count} triples: {nonzero} with nonzero distance/identity loss, max |local - 1| = {local_off:.2e}"),
    )
}

struct FixtureRun {
    outcome_corr: Outcome,
    outcome_fidelity: Outcome,
}

/// Default configuration (seed 0) on the sine + discord fixture.
fn fixture_run() -> FixtureRun {
    let t = mpanon::io::read_series(&common::fixture_path()).unwrap();
    let cfg = SynthesisConfig::with_window(common::FIXTURE_WINDOW);
    let wcfg = cfg.window_config();
    let started = Instant::now();
    let (that, _) = synthesize(&t, &cfg).unwrap();
    let elapsed = started.elapsed();
    let report = evaluate(&t, &that, &wcfg).unwrap();
    let init = evaluate(&t, &initialize(&t, &cfg).unwrap(), &wcfg).unwrap();

    let median = report.subseq_corr_stats.median;
    let global = report.global_corr.abs();
    let outcome_corr = check(
        median < 0.2 && global < 0.2 && elapsed < Duration::from_secs(300),
        format!("median |subseq corr| = {median:.4}, |global corr| = {global:.4}, {elapsed:.2?}"),
    );
    let outcome_fidelity = check(
        report.mp_rmse < 0.25 * init.mp_rmse && report.mpi_agreement >= 2.0 * init.mpi_agreement,
        format!(
            "mp_rmse {:.4} vs init {:.4} ({:.1}%), mpi_agreement {:.4} vs init {:.4}",
            report.mp_rmse,
            init.mp_rmse,
            100.0 * report.mp_rmse / init.mp_rmse,
            report.mpi_agreement,
            init.mpi_agreement
        ),
    );
    FixtureRun {
        outcome_corr,
        outcome_fidelity,
    }
}

/// Discord-detector AUC parity on a planted-anomaly series.
fn planted_auc_parity() -> Outcome {
    let started = Instant::now();
    let data = make_planted_dataset(5000, 50, 3, 1).unwrap();
    let cfg = SynthesisConfig::with_window(50);
    let wcfg = cfg.window_config();
    let (that, _) = synthesize(&data.series, &cfg).unwrap();
    let a = auc(
        &mp_anomaly_score(&data.series, &wcfg).unwrap(),
        &data.anomaly_mask,
    )
    .unwrap();
    let b = auc(&mp_anomaly_score(&that, &wcfg).unwrap(), &data.anomaly_mask).unwrap();
    let elapsed = started.elapsed();
    check(
        (a - b).abs() < 0.05 && a > 0.85 && b > 0.85 && elapsed < Duration::from_secs(600),
        format!(
            "auc original {a:.4}, synthesized {b:.4}, |diff| {:.4}, {elapsed:.2?}",
            (a - b).abs()
        ),
    )
}

/// Two reruns from one manifest write identical series and trace files.
fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_mpanon"))
            .args(args)
            .output()
            .unwrap();
        out.status.success()
    };
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let fixture = common::fixture_path();
    let input = fixture.to_str().unwrap();
    let seeded = run(&[
        "synth",
        input,
        "-m",
        "50",
        "--iters",
        "1000",
        "--seed",
        "77",
        "--out",
        &p("seed"),
    ]);
    let manifest = p("seed.manifest.json");
    let a = run(&["synth", input, "--config", &manifest, "--out", &p("a")]);
    let b = run(&["synth", input, "--config", &manifest, "--out", &p("b")]);
    if !(seeded && a && b) {
        return Err("a synth invocation failed".into());
    }
    let same = |x: &str, y: &str| {
        std::fs::read(Path::new(x)).unwrap() == std::fs::read(Path::new(y)).unwrap()
    };
    let files = [".synth.csv", ".trace.csv"];
    let identical = files.iter().all(|s| {
        same(&p(&format!("a{s}")), &p(&format!("b{s}")))
            && same(&p(&format!("seed{s}")), &p(&format!("a{s}")))
    });
    check(
        identical,
        format!("synth and trace files identical across 3 runs: {identical}"),
    )
}

/// Positive affine maps leave every z-normalized quantity unchanged.
fn affine_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut mp_err, mut loss_err) = (0.0f64, 0.0f64);
    let (mut mpi_mismatch, mut discord_mismatch) = (0, 0);
    for case in 0..10 {
        let m = 8 + 4 * case;
        let cfg = WindowConfig::new(m);
        let t = common::random_walk(&mut rng, 800);
        let that = common::random_series(&mut rng, 800);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let offset = rng.random_range(-100.0..100.0);
        let t2 = t.affine(scale, offset).unwrap();
        let that2 = that.affine(1.0 / scale, -offset).unwrap();

        let (p, q) = (mp_fast(&t, &cfg).unwrap(), mp_fast(&t2, &cfg).unwrap());
        for i in 0..p.len() {
            mp_err = mp_err.max((p.distances[i] - q.distances[i]).abs());
            if p.indices[i] != q.indices[i] {
                mpi_mismatch += 1;
            }
        }
        if discord_topk(&p, 3).unwrap() != discord_topk(&q, 3).unwrap() {
            discord_mismatch += 1;
        }

        for tr in sample_triples(&p, 50, &mut rng).unwrap() {
            let pairs = [
                (
                    loss_local(&t, &that, tr.i, &cfg).unwrap(),
                    loss_local(&t2, &that2, tr.i, &cfg).unwrap(),
                ),
                (
                    loss_distance(&t, &that, tr.i, tr.j, &cfg).unwrap(),
                    loss_distance(&t2, &that2, tr.i, tr.j, &cfg).unwrap(),
                ),
                (
                    loss_identity(&that, &tr, &cfg, 0.5).unwrap(),
                    loss_identity(&that2, &tr, &cfg, 0.5).unwrap(),
                ),
            ];
            for (a, b) in pairs {
                loss_err = loss_err.max((a - b).abs());
            }
        }
    }
    check(
        mp_err < 1e-7 && loss_err < 1e-9 && mpi_mismatch == 0 && discord_mismatch == 0,
        format!(
            "max MP change {mp_err:.2e}, MPI changes {mpi_mismatch}, max loss change {loss_err:.2e}, \
             discord changes {discord_mismatch}"
        ),
    )
}

fn main() {
    let fixture = fixture_run();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "MP oracle equivalence", mp_oracle_equivalence()),
        (2, "distance identity", distance_identity()),
        (3, "gradient correctness", gradient_check()),
        (4, "zero-loss fixed point", zero_loss_fixed_point()),
        (5, "end-to-end decorrelation", fixture.outcome_corr),
        (6, "anomaly detection utility", planted_auc_parity()),
        (7, "MP fidelity", fixture.outcome_fidelity),
        (8, "determinism", cli_determinism()),
        (9, "affine invariance", affine_invariance()),
    ];
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {id} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
