//! One PASS/FAIL/SKIP line per acceptance criterion.
//!
//! Criterion 7 reads the ECG5000 splits from `HVN_ECG_TRAIN` / `HVN_ECG_TEST`,
//! falling back to `data/ECG5000/ECG5000_{TRAIN,TEST}.tsv` under the workspace root.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hvn_experiments::config::ModelKind;
use hvn_experiments::ecg::{load_data, run_resolution};
use hvn_experiments::metrics::csv_string;
use hvn_experiments::synth::{generator, run_point, Sweep};
use hvn_experiments::verify::{gradient_check, verify_compression, verify_pointwise, verify_projector_filters};
use hvn_experiments::{ExperimentConfig, MetricRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    id: u8,
    status: Status,
    detail: String,
}

fn verdict(id: u8, ok: bool, detail: String) -> Outcome {
    Outcome {
        id,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn acc(rows: &[MetricRow], model: &str) -> f64 {
    rows.iter().find(|r| r.model == model).map(|r| r.test_acc).unwrap_or(f64::NAN)
}

fn criteria_1_2() -> [Outcome; 2] {
    let start = Instant::now();
    let fam = verify_projector_filters(100, 0).expect("projector family runs");
    let elapsed = start.elapsed();
    let proj = fam.check("projector").unwrap();
    let res = fam.check("resolution-of-identity").unwrap();
    let score = fam.check("score-recovery").unwrap();
    [
        verdict(
            1,
            proj.passed() && res.passed() && within(elapsed, 10),
            format!(
                "{} instances, max ‖h_α(C) − P_α‖_F {:.2e}, resolution {:.2e} (tol 1e-7), {:.2?}",
                fam.instances, proj.max_residual, res.max_residual, elapsed
            ),
        ),
        verdict(2, score.passed(), format!("max score deviation {:.2e} (tol 1e-8)", score.max_residual)),
    ]
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let fam = verify_compression(50, 1).expect("compression family runs");
    let elapsed = start.elapsed();
    let c = &fam.checks[0];
    verdict(
        3,
        c.passed() && within(elapsed, 30),
        format!("{} sample sets, max deviation {:.2e} (tol 1e-10), {:.2?}", fam.instances, c.max_residual, elapsed),
    )
}

fn criterion_4() -> Outcome {
    let fam = verify_pointwise(100, 2).expect("pointwise family runs");
    let c = &fam.checks[0];
    verdict(4, c.passed(), format!("{} filters, max deviation {:.2e} (tol 1e-9)", fam.instances, c.max_residual))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let g = gradient_check(0).expect("gradient check runs");
    let elapsed = start.elapsed();
    verdict(
        5,
        g.passed() && within(elapsed, 60),
        format!("{} coordinates, worst {:.2e}, p99 {:.2e}, {:.2?}", g.coordinates, g.worst, g.p99, elapsed),
    )
}

/// Default configuration at `n = 24`, 30 dB; returns the metrics CSV text.
fn synthetic_point() -> (String, Vec<MetricRow>, Duration) {
    let config = ExperimentConfig::default();
    let start = Instant::now();
    let generator = generator(&config).expect("generator");
    let rows = run_point(&config, &generator, Sweep::Samples, 24, 30.0, config.seed, None).expect("synthetic point");
    let elapsed = start.elapsed();
    (csv_string(&rows).expect("csv"), rows, elapsed)
}

fn criterion_6(rows: &[MetricRow], elapsed: Duration) -> Outcome {
    let (hvn, mlp, fpca) = (acc(rows, "hvn"), acc(rows, "mlp"), acc(rows, "fpca"));
    verdict(
        6,
        hvn - mlp >= 0.10 && (0.40..=0.60).contains(&fpca) && within(elapsed, 15 * 60),
        format!("test acc hvn {hvn:.3}, mlp {mlp:.3}, fpca {fpca:.3}; need hvn − mlp ≥ 0.10, fpca in [0.40, 0.60]; {elapsed:.2?}"),
    )
}

fn criterion_8(first: &str) -> Outcome {
    let (second, _, _) = synthetic_point();
    verdict(8, first == second, format!("rerun CSV identical: {} ({} bytes)", first == second, first.len()))
}

fn ecg_paths() -> (PathBuf, PathBuf) {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let pick = |var: &str, file: &str| {
        std::env::var_os(var)
            .map(PathBuf::from)
            .unwrap_or_else(|| root.join("data/ECG5000").join(file))
    };
    (pick("HVN_ECG_TRAIN", "ECG5000_TRAIN.tsv"), pick("HVN_ECG_TEST", "ECG5000_TEST.tsv"))
}

fn criterion_7() -> Outcome {
    let (train, test) = ecg_paths();
    if !train.is_file() || !test.is_file() {
        return Outcome {
            id: 7,
            status: Status::Skip,
            detail: format!("ECG5000 files not found at {} and {}", train.display(), test.display()),
        };
    }
    let start = Instant::now();
    let data = load_data(&train, &test).expect("ECG5000 loads");
    let mut config = ExperimentConfig::default();
    config.model.models = vec![ModelKind::Hvn, ModelKind::Mlp, ModelKind::Fpca];
    let rows = run_resolution(&config, &data, 140, config.seed, None).expect("ECG run");
    let elapsed = start.elapsed();
    let (hvn, mlp, fpca) = (acc(&rows, "hvn"), acc(&rows, "mlp"), acc(&rows, "fpca"));
    let majority = data.test_majority_rate();
    verdict(
        7,
        hvn >= mlp && hvn >= fpca && hvn > majority && within(elapsed, 15 * 60),
        format!("m = 140: hvn {hvn:.3}, mlp {mlp:.3}, fpca {fpca:.3}, majority {majority:.3}; {elapsed:.2?}"),
    )
}

#[test]
fn acceptance() {
    let mut outcomes = Vec::new();
    outcomes.extend(criteria_1_2());
    outcomes.push(criterion_3());
    outcomes.push(criterion_4());
    outcomes.push(criterion_5());
    let (csv, rows, elapsed) = synthetic_point();
    outcomes.push(criterion_6(&rows, elapsed));
    outcomes.push(criterion_7());
    outcomes.push(criterion_8(&csv));

    // written to the raw handle so the lines survive test output capture
    let mut out = std::io::stdout().lock();
    for o in &outcomes {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        writeln!(out, "criterion {}: {tag} {}", o.id, o.detail).expect("stdout");
    }
    drop(out);
    let failed: Vec<u8> = outcomes.iter().filter(|o| o.status == Status::Fail).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
