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

//! `bench`: run action-space benchmarks and write a report.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 a configured expectation did not hold.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use erspace::bench::{self, BenchConfig, BenchContext, ReportFormat};
use erspace::error::BenchError;
use erspace::Space;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "bench", version, about = "Benchmark redundancy-aware action spaces")]
struct Cli {
    /// JSON benchmark configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin chain name (srs7, srs8plus) or chain file.
    #[arg(long)]
    chain: Option<String>,
    /// Restrict to one action space.
    #[arg(long, value_parser = parse_space)]
    space: Option<Space>,
    /// Restrict to one task.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// ERJ joint selection, e.g. `0` or `0,1`.
    #[arg(long, value_delimiter = ',')]
    select_joints: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_space(s: &str) -> Result<Space, String> {
    s.parse()
}

fn config_from(cli: &Cli) -> Result<BenchConfig, BenchError> {
    let mut cfg = match &cli.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    if let Some(c) = &cli.chain {
        cfg.chain = c.clone();
    }
    if let Some(s) = cli.space {
        cfg.spaces = vec![s];
    }
    if let Some(t) = &cli.task {
        cfg.tasks = vec![t.clone()];
        cfg.validity_task = t.clone();
    }
    if let Some(n) = cli.episodes {
        cfg.episodes = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = &cli.select_joints {
        cfg.select_joints = Some(j.clone());
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        };
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match config_from(&cli).and_then(BenchContext::new) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("bench: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match bench::run(&ctx) {
        Ok(r) => r,
        Err(BenchError::Config(e)) => {
            eprintln!("bench: config error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("bench: {e}");
            return ExitCode::from(1);
        }
    };
    match bench::emit_report(&report, ctx.config.format, &ctx.config.out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("bench: {e}");
            return ExitCode::from(1);
        }
    }
    let checks = bench::check_expectations(&report, &ctx.config.expect);
    let mut failed = 0;
    for c in &checks {
        println!("{} {}", if c.passed { "ok  " } else { "FAIL" }, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        eprintln!("bench: {failed} expectation(s) failed");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
