//! Shared implementation of the `tune_x*` binaries.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context as _};
use clap::Parser;
use tuneblas::tuner::{self, MeasureStatus, TuningRun, TuningTask};
use tuneblas::tuningdb::{db_insert, Database, DbEntry};
use tuneblas::{ArgsSig, Context, KernelFamily, Precision};

#[derive(Debug, Parser)]
pub struct TuneArgs {
    /// Rows (matrix families).
    #[arg(short = 'm')]
    pub m: Option<usize>,
    /// Columns, or the vector length for vector families.
    #[arg(short = 'n')]
    pub n: Option<usize>,
    /// Inner dimension (gemm families).
    #[arg(short = 'k')]
    pub k: Option<usize>,
    #[arg(long, default_value = "32")]
    pub precision: Precision,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Random configurations measured on top of the curated set.
    #[arg(long, default_value_t = 0)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances per call (batched families).
    #[arg(long)]
    pub batch: Option<usize>,
    /// Device profile (JSON); defaults to the host device.
    #[arg(long)]
    pub device: Option<PathBuf>,
    /// Tuning database to add the result to (created if missing).
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Where to write the tuning result as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn is_vector(family: KernelFamily) -> bool {
    matches!(
        family,
        KernelFamily::Axpy | KernelFamily::Dot | KernelFamily::AxpyBatched
    )
}

/// The problem size for `family` from the size flags and the family's defaults.
pub fn args_for(family: KernelFamily, a: &TuneArgs) -> anyhow::Result<ArgsSig> {
    let gemm = matches!(family, KernelFamily::Gemm | KernelFamily::GemmBatched);
    if is_vector(family) {
        if a.m.is_some() || a.k.is_some() {
            bail!("{family} takes a vector length: use -n only");
        }
        return Ok(ArgsSig::vector(a.n.unwrap_or(1 << 20)));
    }
    if !gemm {
        if a.k.is_some() {
            bail!("{family} has no k dimension");
        }
        return Ok(ArgsSig::matrix(a.m.unwrap_or(1024), a.n.unwrap_or(1024)));
    }
    let d = if family == KernelFamily::Gemm {
        1024
    } else {
        256
    };
    Ok(ArgsSig::mnk(
        a.m.unwrap_or(d),
        a.n.unwrap_or(d),
        a.k.unwrap_or(d),
    ))
}

pub fn task_for(family: KernelFamily, a: &TuneArgs) -> anyhow::Result<TuningTask> {
    let batched = matches!(
        family,
        KernelFamily::AxpyBatched | KernelFamily::GemmBatched
    );
    if a.batch.is_some() && !batched {
        bail!("--batch only applies to batched families");
    }
    let device = crate::load_device(a.device.as_deref())?;
    let task = TuningTask::new(family, a.precision, args_for(family, a)?, device)
        .with_budget(a.budget, a.seed)
        .with_runs(a.warmup, a.runs)
        .with_batch(a.batch.unwrap_or(if batched { 8 } else { 1 }));
    task.validate()?;
    Ok(task)
}

/// Human-readable summary of a finished run.
pub fn summary(run: &TuningRun) -> String {
    let t = &run.task;
    let (mut ok, mut invalid, mut failed) = (0, 0, 0);
    for m in &run.measurements {
        match m.status {
            MeasureStatus::Ok => ok += 1,
            MeasureStatus::Invalid(_) => invalid += 1,
            MeasureStatus::Failed(_) => failed += 1,
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "family:    {}", t.family);
    let _ = writeln!(s, "precision: {}", t.precision);
    let _ = writeln!(s, "size:      {}", t.args);
    let _ = writeln!(s, "device:    {}", t.device.name);
    let _ = writeln!(
        s,
        "explored:  {} configurations ({ok} ok, {invalid} invalid, {failed} failed)",
        run.measurements.len()
    );
    if let Some(best) = &run.best {
        let time = run
            .measurements
            .iter()
            .filter(|m| m.is_ok() && m.configuration.values() == best.values())
            .map(|m| m.mean_time)
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(s, "best:      {best}");
        let _ = writeln!(s, "mean time: {:.6} ms", time * 1e3);
    }
    s
}

/// Tunes, writes the requested outputs and returns the summary.
pub fn run(family: KernelFamily, a: &TuneArgs) -> anyhow::Result<String> {
    let task = task_for(family, a)?;
    let ctx = Context::new(task.device.clone())?;
    let run = tuner::tune(&task, &ctx)?;
    let entry = DbEntry::from_run(&run)?;
    if let Some(path) = &a.json {
        std::fs::write(path, serde_json::to_string_pretty(&entry)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.db {
        let db = Database::load_or_default(path)
            .with_context(|| format!("loading database {}", path.display()))?;
        db_insert(db, &run)?
            .save(path)
            .with_context(|| format!("saving database {}", path.display()))?;
    }
    Ok(summary(&run))
}

/// Entry point of a `tune_x*` binary.
pub fn main(family: KernelFamily) -> anyhow::Result<()> {
    let args = TuneArgs::parse();
    print!("{}", run(family, &args)?);
    Ok(())
}
