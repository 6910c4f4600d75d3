//! Benchmark clients: tuned routines against the naive reference, size
//! sweeps, throughput metrics and the problem-specific tuning heat map.
//!
//! Throughput formulas (bytes or flops per call, `e` = element size):
//!
//! | routine | metric | amount |
//! |---------|--------|--------|
//! | axpy    | GB/s   | `3 n e` |
//! | dot     | GB/s   | `2 n e` |
//! | gemv    | GB/s   | `(m n + m + 2 n) e` |
//! | ger     | GB/s   | `(2 m n + m + n) e` |
//! | gemm    | GFLOPS | `2 m n k`, complex `8 m n k` |

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::kernels::params::{ArgsSig, Configuration, KernelFamily};
use crate::precision::{Complex32, Complex64, Half, Precision, Scalar};
use crate::reference;
use crate::routines;
use crate::tuner::{random_values, tune, TuningTask};
use crate::types::{Layout, Transpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Routine {
    Axpy,
    Dot,
    Gemv,
    Ger,
    Gemm,
}

impl Routine {
    pub fn name(self) -> &'static str {
        match self {
            Routine::Axpy => "axpy",
            Routine::Dot => "dot",
            Routine::Gemv => "gemv",
            Routine::Ger => "ger",
            Routine::Gemm => "gemm",
        }
    }

    /// Problem size for a sweep value: vectors of n, square matrices of n.
    pub fn size_for(self, n: usize) -> ArgsSig {
        match self {
            Routine::Axpy | Routine::Dot => ArgsSig::vector(n),
            Routine::Gemv | Routine::Ger => ArgsSig::matrix(n, n),
            Routine::Gemm => ArgsSig::mnk(n, n, n),
        }
    }
}

impl fmt::Display for Routine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Routine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let name = lower
            .strip_prefix(|c| "xsdczh".contains(c))
            .unwrap_or(&lower);
        [
            Routine::Axpy,
            Routine::Dot,
            Routine::Gemv,
            Routine::Ger,
            Routine::Gemm,
        ]
        .into_iter()
        .find(|r| r.name() == lower || r.name() == name)
        .ok_or_else(|| Error::usage(format!("unknown routine '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "GB/s")]
    GbPerSec,
    #[serde(rename = "GFLOPS")]
    Gflops,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::GbPerSec => "GB/s",
            MetricKind::Gflops => "GFLOPS",
        })
    }
}

/// Throughput of one call of `routine` on `size` that took `time` seconds.
pub fn metrics(
    routine: Routine,
    size: ArgsSig,
    precision: Precision,
    time: f64,
) -> Result<(f64, MetricKind)> {
    if time.is_nan() || time <= 0.0 {
        return Err(Error::usage(format!("time must be positive, got {time}")));
    }
    let e = precision.elem_size() as f64;
    let (m, n, k) = (size.m as f64, size.n as f64, size.k as f64);
    let (amount, kind) = match routine {
        Routine::Axpy => (3.0 * n * e, MetricKind::GbPerSec),
        Routine::Dot => (2.0 * n * e, MetricKind::GbPerSec),
        Routine::Gemv => ((m * n + m + 2.0 * n) * e, MetricKind::GbPerSec),
        Routine::Ger => ((2.0 * m * n + m + n) * e, MetricKind::GbPerSec),
        Routine::Gemm => {
            let flops = if precision.is_complex() { 8.0 } else { 2.0 };
            (flops * m * n * k, MetricKind::Gflops)
        }
    };
    Ok((amount / time / 1e9, kind))
}

/// An arithmetic progression of sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sweep {
    pub start: usize,
    pub step: usize,
    pub count: usize,
}

impl Sweep {
    /// Multiples of `step`, starting at `step` itself.
    pub fn multiples(step: usize, count: usize) -> Sweep {
        Sweep {
            start: step,
            step,
            count,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..self.count)
            .map(|i| self.start + i * self.step)
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = Error;
    /// Parses `start,step,count`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::usage(format!("sweep '{s}' is not start,step,count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<usize> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(Sweep {
            start: v[0],
            step: v[1],
            count: v[2],
        })
    }
}

/// Warm-up and timed run counts of a measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub warmup_runs: usize,
    pub timed_runs: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            warmup_runs: 1,
            timed_runs: 10,
        }
    }
}

/// Runs `f` per the protocol and returns the timed run durations.
pub fn time_runs(protocol: Protocol, mut f: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    if protocol.timed_runs == 0 {
        return Err(Error::usage("timed_runs must be at least 1"));
    }
    for _ in 0..protocol.warmup_runs {
        f()?;
    }
    let mut times = Vec::with_capacity(protocol.timed_runs);
    for _ in 0..protocol.timed_runs {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(times)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub routine: Routine,
    pub precision: Precision,
    pub size: ArgsSig,
    pub mean_time: f64,
    pub per_run_times: Vec<f64>,
    pub metric: f64,
    pub metric_kind: MetricKind,
    pub reference_mean_time: f64,
    pub reference_per_run_times: Vec<f64>,
    pub reference_metric: f64,
    pub correct: bool,
}

pub const CSV_HEADER: &str =
    "routine,precision,m,n,k,tuned_mean_time_s,tuned_metric,reference_mean_time_s,reference_metric,metric_kind,correct";

/// Writes rows as CSV under [`CSV_HEADER`].
pub fn write_csv(rows: &[BenchRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.9},{:.4},{:.9},{:.4},{},{}",
            r.routine,
            r.precision,
            r.size.m,
            r.size.n,
            r.size.k,
            r.mean_time,
            r.metric,
            r.reference_mean_time,
            r.reference_metric,
            r.metric_kind,
            r.correct
        )?;
    }
    Ok(())
}

pub fn save_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(f))
}

/// Benchmarks `routine` on every size, tuned routine and naive reference,
/// in the given order. Rows that disagree with the reference are flagged
/// with `correct == false`; the sweep always completes.
pub fn run_client(
    routine: Routine,
    sizes: &[ArgsSig],
    precision: Precision,
    ctx: &Context,
    protocol: Protocol,
) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() {
        return Err(Error::usage("empty size sweep"));
    }
    sizes
        .iter()
        .map(|&size| match precision {
            Precision::Half => bench_one::<Half>(routine, size, ctx, protocol),
            Precision::Single => bench_one::<f32>(routine, size, ctx, protocol),
            Precision::Double => bench_one::<f64>(routine, size, ctx, protocol),
            Precision::ComplexSingle => bench_one::<Complex32>(routine, size, ctx, protocol),
            Precision::ComplexDouble => bench_one::<Complex64>(routine, size, ctx, protocol),
        })
        .collect()
}

/// The unconjugated dot and rank-1 update, which are separate routines for
/// real and complex element types.
trait ClientOps: Scalar {
    fn dot_call(
        ctx: &Context,
        n: usize,
        out: &Buffer<Self>,
        x: &Buffer<Self>,
        y: &Buffer<Self>,
    ) -> Result<()>;
    #[allow(clippy::too_many_arguments)]
    fn ger_call(
        ctx: &Context,
        m: usize,
        n: usize,
        alpha: Self,
        x: &Buffer<Self>,
        y: &Buffer<Self>,
        a: &Buffer<Self>,
    ) -> Result<()>;
}

macro_rules! client_ops {
    ($dot:ident, $ger:ident: $($t:ty),*) => {$(
        impl ClientOps for $t {
            fn dot_call(ctx: &Context, n: usize, out: &Buffer<Self>, x: &Buffer<Self>, y: &Buffer<Self>) -> Result<()> {
                routines::$dot(ctx, n, out, 0, x, 0, 1, y, 0, 1)
            }
            fn ger_call(
                ctx: &Context,
                m: usize,
                n: usize,
                alpha: Self,
                x: &Buffer<Self>,
                y: &Buffer<Self>,
                a: &Buffer<Self>,
            ) -> Result<()> {
                routines::$ger(ctx, Layout::ColMajor, m, n, alpha, x, 0, 1, y, 0, 1, a, 0, m)
            }
        }
    )*};
}

client_ops!(dot, ger: Half, f32, f64);
client_ops!(dotu, geru: Complex32, Complex64);

fn bench_one<T: ClientOps>(
    routine: Routine,
    size: ArgsSig,
    ctx: &Context,
    protocol: Protocol,
) -> Result<BenchRow> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(size.m as u64 * 31 + size.n as u64 * 17 + size.k as u64);
    let ArgsSig { m, n, k } = size;
    let (alpha, beta) = (T::from_f64(0.75), T::from_f64(0.5));
    let p = T::PRECISION;
    let bound = |xs: &[T]| reference::max_abs(xs);
    let (times, ref_times, correct) = match routine {
        Routine::Axpy => {
            let x = random_values::<T>(&mut rng, n);
            let y0 = random_values::<T>(&mut rng, n);
            let (xb, yb) = (ctx.upload(&x), ctx.upload(&y0));
            let run = || {
                yb.write(0, &y0)?;
                routines::axpy(ctx, n, alpha, &xb, 0, 1, &yb, 0, 1)
            };
            run()?;
            let correct = reference::close(&yb.to_vec(), &reference::axpy(alpha, &x, &y0), 0.0);
            let times = time_runs(protocol, run)?;
            let ref_times = time_runs(protocol, || {
                std::hint::black_box(reference::axpy(alpha, &x, &y0));
                Ok(())
            })?;
            (times, ref_times, correct)
        }
        Routine::Gemv => {
            let a = random_values::<T>(&mut rng, m * n);
            let x = random_values::<T>(&mut rng, n);
            let y0 = random_values::<T>(&mut rng, m);
            let (ab, xb, yb) = (ctx.upload(&a), ctx.upload(&x), ctx.upload(&y0));
            let run = || {
                yb.write(0, &y0)?;
                routines::gemv(
                    ctx,
                    Layout::ColMajor,
                    Transpose::No,
                    m,
                    n,
                    alpha,
                    &ab,
                    0,
                    m,
                    &xb,
                    0,
                    1,
                    beta,
                    &yb,
                    0,
                    1,
                )
            };
            run()?;
            let expected = reference::gemv(m, n, alpha, &a, m, &x, beta, &y0);
            let tol = reference::sum_tolerance(p, n + 1, bound(&a) * bound(&x) + bound(&y0));
            let correct = reference::close(&yb.to_vec(), &expected, tol);
            let times = time_runs(protocol, run)?;
            let ref_times = time_runs(protocol, || {
                std::hint::black_box(reference::gemv(m, n, alpha, &a, m, &x, beta, &y0));
                Ok(())
            })?;
            (times, ref_times, correct)
        }
        Routine::Gemm => {
            let a = random_values::<T>(&mut rng, m * k);
            let b = random_values::<T>(&mut rng, k * n);
            let c0 = random_values::<T>(&mut rng, m * n);
            let (ab, bb, cb) = (ctx.upload(&a), ctx.upload(&b), ctx.upload(&c0));
            let run = || {
                cb.write(0, &c0)?;
                routines::gemm(
                    ctx,
                    Layout::ColMajor,
                    Transpose::No,
                    Transpose::No,
                    m,
                    n,
                    k,
                    alpha,
                    &ab,
                    0,
                    m,
                    &bb,
                    0,
                    k,
                    beta,
                    &cb,
                    0,
                    m,
                )
            };
            run()?;
            let naive = || {
                reference::gemm(
                    m,
                    n,
                    k,
                    alpha,
                    (&a, m, false, false),
                    (&b, k, false, false),
                    beta,
                    &c0,
                    m,
                )
            };
            let tol = reference::sum_tolerance(p, k + 1, bound(&a) * bound(&b) + bound(&c0));
            let correct = reference::close(&cb.to_vec(), &naive(), tol);
            let times = time_runs(protocol, run)?;
            let ref_times = time_runs(protocol, || {
                std::hint::black_box(naive());
                Ok(())
            })?;
            (times, ref_times, correct)
        }
        Routine::Dot => {
            let x = random_values::<T>(&mut rng, n);
            let y = random_values::<T>(&mut rng, n);
            let (xb, yb, out) = (ctx.upload(&x), ctx.upload(&y), ctx.alloc::<T>(1));
            let run = || T::dot_call(ctx, n, &out, &xb, &yb);
            run()?;
            let expected = [T::from_acc(reference::dot(&x, &y))];
            let tol = reference::sum_tolerance(p, n, bound(&x) * bound(&y));
            let correct = reference::close(&out.to_vec(), &expected, tol);
            let times = time_runs(protocol, run)?;
            let ref_times = time_runs(protocol, || {
                std::hint::black_box(reference::dot(&x, &y));
                Ok(())
            })?;
            (times, ref_times, correct)
        }
        Routine::Ger => {
            let x = random_values::<T>(&mut rng, m);
            let y = random_values::<T>(&mut rng, n);
            let a0 = random_values::<T>(&mut rng, m * n);
            let (xb, yb, ab) = (ctx.upload(&x), ctx.upload(&y), ctx.upload(&a0));
            let run = || {
                ab.write(0, &a0)?;
                T::ger_call(ctx, m, n, alpha, &xb, &yb, &ab)
            };
            run()?;
            let expected = reference::ger(m, n, alpha, &x, &y, &a0, m);
            let tol = reference::sum_tolerance(p, 2, bound(&x) * bound(&y) + bound(&a0));
            let correct = reference::close(&ab.to_vec(), &expected, tol);
            let times = time_runs(protocol, run)?;
            let ref_times = time_runs(protocol, || {
                std::hint::black_box(reference::ger(m, n, alpha, &x, &y, &a0, m));
                Ok(())
            })?;
            (times, ref_times, correct)
        }
    };
    let (mean_time, reference_mean_time) = (mean(&times), mean(&ref_times));
    let (metric, metric_kind) = metrics(routine, size, p, mean_time)?;
    let (reference_metric, _) = metrics(routine, size, p, reference_mean_time)?;
    Ok(BenchRow {
        routine,
        precision: p,
        size,
        mean_time,
        per_run_times: times,
        metric,
        metric_kind,
        reference_mean_time,
        reference_per_run_times: ref_times,
        reference_metric,
        correct,
    })
}

/// Tuner settings of a heat-map experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatmapSettings {
    pub budget: usize,
    pub seed: u64,
    pub tune_protocol: Protocol,
    pub bench_protocol: Protocol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapResult {
    pub tuned_sizes: Vec<ArgsSig>,
    pub bench_sizes: Vec<ArgsSig>,
    /// Best configuration found for each tuned size.
    pub configs: Vec<Configuration>,
    /// Mean time of benched size i with the parameters tuned for size j.
    pub times: Vec<Vec<f64>>,
    /// `times[i][i] / times[i][j] * 100`.
    pub relative_perf: Vec<Vec<f64>>,
}

impl HeatmapResult {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let label = |s: &ArgsSig| format!("{}x{}x{}", s.m, s.n, s.k);
        let header: Vec<String> = self
            .tuned_sizes
            .iter()
            .map(|s| format!("tuned_{}", label(s)))
            .collect();
        writeln!(out, "bench_size,{}", header.join(","))?;
        for (s, row) in self.bench_sizes.iter().zip(&self.relative_perf) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
            writeln!(out, "{},{}", label(s), cells.join(","))?;
        }
        Ok(())
    }
}

/// Tunes single-precision gemm for every size, then times every size with
/// every tuned configuration.
pub fn heatmap_experiment(
    sizes: &[ArgsSig],
    precision: Precision,
    ctx: &Context,
    settings: HeatmapSettings,
) -> Result<HeatmapResult> {
    for (i, s) in sizes.iter().enumerate() {
        if sizes[..i].contains(s) {
            return Err(Error::usage(format!("size {s} appears twice")));
        }
    }
    let mut configs = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let task = TuningTask::new(KernelFamily::Gemm, precision, s, ctx.device().clone())
            .with_budget(settings.budget, settings.seed)
            .with_runs(
                settings.tune_protocol.warmup_runs,
                settings.tune_protocol.timed_runs,
            );
        let run = tune(&task, ctx)
            .map_err(|e| Error::Tuning(format!("tuning for size {s} failed: {e}")))?;
        configs.push(
            run.best
                .expect("a successful run names its best configuration"),
        );
    }
    let mut times = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let row: Vec<f64> = configs
            .iter()
            .map(|c| match precision {
                Precision::Half => time_gemm_with::<Half>(ctx, s, c, settings.bench_protocol),
                Precision::Single => time_gemm_with::<f32>(ctx, s, c, settings.bench_protocol),
                Precision::Double => time_gemm_with::<f64>(ctx, s, c, settings.bench_protocol),
                Precision::ComplexSingle => {
                    time_gemm_with::<Complex32>(ctx, s, c, settings.bench_protocol)
                }
                Precision::ComplexDouble => {
                    time_gemm_with::<Complex64>(ctx, s, c, settings.bench_protocol)
                }
            })
            .collect::<Result<_>>()?;
        times.push(row);
    }
    let relative_perf = times
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().map(|t| row[i] / t * 100.0).collect())
        .collect();
    Ok(HeatmapResult {
        tuned_sizes: sizes.to_vec(),
        bench_sizes: sizes.to_vec(),
        configs,
        times,
        relative_perf,
    })
}

/// Mean gemm time on `size` with `config` installed as an override on a
/// scratch context for the same device.
pub fn time_gemm_with<T: Scalar>(
    ctx: &Context,
    size: ArgsSig,
    config: &Configuration,
    protocol: Protocol,
) -> Result<f64> {
    let scratch = Context::new(ctx.device().clone())?;
    scratch.set_direct_threshold(ctx.direct_threshold());
    scratch.override_parameters(KernelFamily::Gemm, T::PRECISION, size, config.clone())?;
    let ArgsSig { m, n, k } = size;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = scratch.upload(&random_values::<T>(&mut rng, m * k));
    let b = scratch.upload(&random_values::<T>(&mut rng, k * n));
    let c = scratch.alloc::<T>(m * n);
    let (alpha, beta) = (T::one(), T::zero());
    let times = time_runs(protocol, || {
        routines::gemm(
            &scratch,
            Layout::ColMajor,
            Transpose::No,
            Transpose::No,
            m,
            n,
            k,
            alpha,
            &a,
            0,
            m,
            &b,
            0,
            k,
            beta,
            &c,
            0,
            m,
        )
    })?;
    Ok(mean(&times))
}
