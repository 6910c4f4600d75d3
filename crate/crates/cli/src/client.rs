//! The `client` benchmark binary.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use clap::Parser;
use tuneblas::bench::{self, BenchRow, HeatmapResult, HeatmapSettings, Protocol, Routine, Sweep};
use tuneblas::tuningdb::Database;
use tuneblas::{ArgsSig, Context, Precision};

#[derive(Debug, Parser)]
pub struct ClientArgs {
    /// Routine to benchmark: axpy, dot, gemv, ger or gemm.
    #[arg(long, required_unless_present = "heatmap")]
    pub routine: Option<Routine>,
    #[arg(long, default_value = "32")]
    pub precision: Precision,
    /// Regular sweep as start,step,count.
    #[arg(long)]
    pub sweep: Option<Sweep>,
    /// Also sweep multiples of this odd number (as many sizes as --sweep).
    #[arg(long)]
    pub odd_step: Option<usize>,
    /// Tuning database whose parameters the routines use.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Device profile (JSON); defaults to the host device.
    #[arg(long)]
    pub device: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// CSV report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Heat-map mode: JSON list of gemm sizes, `[[m, n, k], ...]`.
    #[arg(long, conflicts_with_all = ["routine", "sweep", "odd_step"])]
    pub heatmap: Option<PathBuf>,
    /// Random configurations per tuning run in heat-map mode.
    #[arg(long, default_value_t = 0)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ClientArgs {
    fn protocol(&self) -> Protocol {
        Protocol {
            warmup_runs: self.warmup,
            timed_runs: self.runs,
        }
    }
}

/// What a client invocation produced.
pub enum Outcome {
    Rows(Vec<BenchRow>),
    Heatmap(HeatmapResult),
}

impl Outcome {
    /// Whether every benchmarked result matched the reference.
    pub fn all_correct(&self) -> bool {
        match self {
            Outcome::Rows(rows) => rows.iter().all(|r| r.correct),
            Outcome::Heatmap(_) => true,
        }
    }
}

/// Sweep values: the regular progression, then the odd-multiple one.
pub fn sweep_sizes(sweep: Option<Sweep>, odd_step: Option<usize>) -> anyhow::Result<Vec<usize>> {
    let mut sizes = Vec::new();
    if let Some(s) = sweep {
        sizes.extend(s.sizes());
    }
    if let Some(k) = odd_step {
        if k % 2 == 0 {
            bail!("--odd-step must be odd, got {k}");
        }
        let count = sweep.map_or(4, |s| s.count);
        sizes.extend(Sweep::multiples(k, count).sizes());
    }
    if sizes.is_empty() {
        bail!("no sizes: give --sweep and/or --odd-step");
    }
    if sizes.contains(&0) {
        bail!("sweep sizes must be positive");
    }
    Ok(sizes)
}

/// Parses `[[m, n, k], ...]` or `[{"m": .., "n": .., "k": ..}, ...]`.
pub fn parse_sizes(text: &str) -> anyhow::Result<Vec<ArgsSig>> {
    if let Ok(v) = serde_json::from_str::<Vec<[usize; 3]>>(text) {
        return Ok(v
            .into_iter()
            .map(|[m, n, k]| ArgsSig::mnk(m, n, k))
            .collect());
    }
    serde_json::from_str::<Vec<ArgsSig>>(text)
        .context("sizes must be a JSON list of [m, n, k] triples")
}

fn write_text(text: String, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(a: &ClientArgs) -> anyhow::Result<Outcome> {
    let ctx = Context::new(crate::load_device(a.device.as_deref())?)?;
    if let Some(path) = &a.db {
        ctx.set_database(
            Database::load(path).with_context(|| format!("loading database {}", path.display()))?,
        );
    }
    if let Some(path) = &a.heatmap {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let sizes = parse_sizes(&text)?;
        let settings = HeatmapSettings {
            budget: a.budget,
            seed: a.seed,
            tune_protocol: a.protocol(),
            bench_protocol: a.protocol(),
        };
        let result = bench::heatmap_experiment(&sizes, a.precision, &ctx, settings)?;
        let mut table = Vec::new();
        result.write_csv(&mut table)?;
        print!("{}", String::from_utf8_lossy(&table));
        if let Some(out) = &a.out {
            std::fs::write(out, &table).with_context(|| format!("writing {}", out.display()))?;
        }
        if let Some(json) = &a.json {
            write_text(serde_json::to_string_pretty(&result)?, json)?;
        }
        return Ok(Outcome::Heatmap(result));
    }
    let routine = a
        .routine
        .expect("clap requires --routine outside heat-map mode");
    let sizes: Vec<ArgsSig> = sweep_sizes(a.sweep, a.odd_step)?
        .into_iter()
        .map(|n| routine.size_for(n))
        .collect();
    let rows = bench::run_client(routine, &sizes, a.precision, &ctx, a.protocol())?;
    for r in &rows {
        println!(
            "{} {} {}: tuned {:.3} {} ({:.6} ms), reference {:.3} {} ({:.6} ms), {}",
            r.routine,
            r.precision,
            r.size,
            r.metric,
            r.metric_kind,
            r.mean_time * 1e3,
            r.reference_metric,
            r.metric_kind,
            r.reference_mean_time * 1e3,
            if r.correct { "ok" } else { "WRONG" }
        );
    }
    if let Some(out) = &a.out {
        bench::save_csv(&rows, out).with_context(|| format!("writing {}", out.display()))?;
    }
    if let Some(json) = &a.json {
        write_text(serde_json::to_string_pretty(&rows)?, json)?;
    }
    Ok(Outcome::Rows(rows))
}
