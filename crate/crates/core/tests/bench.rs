/*
Copyright 2026 The erspace Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

use std::fs;
use std::process::Command;

use erspace::bench::{
    self, check_expectations, derive_seeds, emit_report, parse_report, report_csv, BenchConfig, BenchContext, BenchKind,
    BenchReport, Expectation, Rate, ReportFormat,
};
use erspace::Space;

fn small(benches: Vec<BenchKind>) -> BenchConfig {
    BenchConfig { episodes: 4, steps: 20, latency_calls: 20, benches, ..BenchConfig::default() }
}

fn run(cfg: BenchConfig) -> BenchReport {
    bench::run(&BenchContext::new(cfg).unwrap()).unwrap()
}

#[test]
fn json_report_round_trips() {
    let report = run(small(vec![BenchKind::Validity, BenchKind::Latency, BenchKind::Tasks]));
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_report(&report, ReportFormat::Json, dir.path()).unwrap();
    assert_eq!(paths.len(), 1);
    let back = parse_report(&fs::read_to_string(&paths[0]).unwrap()).unwrap();
    assert_eq!(back, report);
    assert_eq!(report.validity.len(), 4);
    assert_eq!(report.latency.len(), 4);
    assert_eq!(report.tasks.len(), 4 * 3);
}

#[test]
fn empty_report_is_still_a_valid_file() {
    let report = BenchReport::empty("srs7", 0);
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_report(&report, ReportFormat::Json, dir.path()).unwrap();
    let back = parse_report(&fs::read_to_string(&paths[0]).unwrap()).unwrap();
    assert!(back.validity.is_empty() && back.tasks.is_empty());
    for p in emit_report(&report, ReportFormat::Csv, dir.path()).unwrap() {
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 1, "header only");
    }
}

#[test]
fn csv_rows_have_constant_width() {
    let report = run(small(vec![BenchKind::Validity, BenchKind::Latency, BenchKind::Tasks, BenchKind::Ablation]));
    let files = report_csv(&report);
    assert_eq!(files.len(), 4);
    for (stem, text) in files {
        let widths: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
        assert!(widths.len() > 1, "{stem} has data rows");
        assert!(widths.iter().all(|w| *w == widths[0]), "{stem}: {widths:?}");
    }
}

#[test]
fn reports_repeat_apart_from_timing() {
    let cfg = small(vec![BenchKind::Validity, BenchKind::Tasks]);
    let a = run(cfg.clone()).without_timing();
    let b = run(cfg.clone()).without_timing();
    assert_eq!(a, b);
    let c = run(BenchConfig { seed: 1, ..cfg }).without_timing();
    assert_ne!(a.validity, c.validity);
}

#[test]
fn malformed_reports_are_rejected() {
    let mut report = BenchReport::empty("srs7", 0);
    report.schema_version = 99;
    assert!(emit_report(&report, ReportFormat::Json, tempfile::tempdir().unwrap().path()).is_err());
    assert!(parse_report("{\"schema_version\": 1}").is_err());
}

#[test]
fn zero_magnitude_gives_zero_invalid_rate() {
    let report = run(BenchConfig { magnitude: 0.0, ..small(vec![BenchKind::Validity]) });
    for row in &report.validity {
        assert_eq!(row.invalid.count, 0, "{}", row.space);
        assert_eq!(row.invalid.total, 4 * 20);
    }
}

#[test]
fn seeds_are_independent_streams() {
    let a = derive_seeds(0, 1, 8);
    assert_eq!(a, derive_seeds(0, 1, 8));
    assert_ne!(a, derive_seeds(0, 2, 8));
    assert_eq!(&derive_seeds(0, 1, 16)[..8], &a[..]);
    let r = Rate::new(0, 0);
    assert_eq!(r.rate, 0.0);
}

#[test]
fn expectations_are_evaluated() {
    let report = run(small(vec![BenchKind::Tasks]));
    let ok = check_expectations(
        &report,
        &[Expectation::SuccessAtLeast { space: Space::Erj, task: "cabinet_reach".into(), value: 1.0 }],
    );
    assert!(ok[0].passed, "{}", ok[0].detail);
    let bad = check_expectations(
        &report,
        &[
            Expectation::SuccessAtLeast { space: Space::Task, task: "cabinet_reach".into(), value: 0.5 },
            Expectation::MedianLatencyAtMostMs { space: Space::Era, value: 1.0 },
        ],
    );
    assert!(!bad[0].passed);
    assert!(!bad[1].passed, "no latency rows were produced");
}

#[test]
fn config_errors() {
    assert!(BenchConfig::from_json("{\"episodes\": 0}").and_then(BenchContext::new).is_err());
    let e = BenchConfig::from_json("{\"solver\": {\"damping_lambda\": \"x\"}}").unwrap_err().to_string();
    assert!(e.contains("solver.damping_lambda"), "{e}");
    assert!(BenchConfig::from_json("{\"solver\": {\"damping\": 0.1}}").is_err());
    assert!(BenchConfig::from_json("{\"bogus\": 1}").is_err());
    let unknown = BenchConfig { tasks: vec!["nope".into()], ..BenchConfig::default() };
    assert!(BenchContext::new(unknown).is_err());
    let sel = BenchConfig { select_joints: Some(vec![9]), ..BenchConfig::default() };
    assert!(BenchContext::new(sel).is_err());
}

fn bench_cmd(dir: &std::path::Path) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bench"));
    c.arg("--out").arg(dir);
    c
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"benches": ["tasks"], "episodes": 2,
            "expect": [{"kind": "success_at_least", "space": "erj", "task": "reach_target", "value": 1.0}]}"#,
    )
    .unwrap();
    let out = bench_cmd(dir.path()).arg("--config").arg(&cfg).arg("--space").arg("erj").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.tasks.len(), 3);

    let out = bench_cmd(dir.path()).args(["--chain", "no_such_chain"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"episodes\": -1}").unwrap();
    let out = bench_cmd(dir.path()).arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    fs::write(
        &cfg,
        r#"{"benches": ["tasks"], "episodes": 2, "tasks": ["cabinet_reach"],
            "expect": [{"kind": "success_at_least", "space": "task", "task": "cabinet_reach", "value": 1.0}]}"#,
    )
    .unwrap();
    let out = bench_cmd(dir.path()).arg("--config").arg(&cfg).args(["--space", "task", "--format", "csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("tasks.csv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
