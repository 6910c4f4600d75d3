//! Measurement-driven tuning of one kernel family for one device, precision
//! and problem size.
//!
//! A tuning run measures the valid part of the family's curated set, then
//! `budget` further configurations drawn uniformly from the full grid. Every
//! configuration is run once and checked against the naive reference before
//! it is timed; the check runs as the first warm-up run.

use std::collections::HashSet;
use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::{Buffer, Context};
use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::kernels::adapter::AccessAdapter;
use crate::kernels::params::{validate, ArgsSig, Configuration, KernelFamily, Violation};
use crate::kernels::space::{enumerate_search_space, SearchMode, SearchSpace};
use crate::kernels::transform::{run_transform, MatGeom, TransformKind};
use crate::kernels::{run_kernel, KernelArgs};
use crate::precision::{Complex32, Complex64, Half, Precision, Scalar};
use crate::reference;
use crate::routines;
use crate::types::{Layout, Transpose};

/// What to tune: a kernel family at one precision and problem size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningTask {
    pub family: KernelFamily,
    pub precision: Precision,
    pub args: ArgsSig,
    pub device: DeviceSpec,
    /// Random configurations measured on top of the curated set.
    pub budget: usize,
    pub seed: u64,
    pub warmup_runs: usize,
    pub timed_runs: usize,
    /// Instances per call for the batched families.
    pub batch_count: usize,
}

impl TuningTask {
    /// A task with the default protocol: one warm-up run, ten timed runs,
    /// no random samples.
    pub fn new(
        family: KernelFamily,
        precision: Precision,
        args: ArgsSig,
        device: DeviceSpec,
    ) -> Self {
        TuningTask {
            family,
            precision,
            args,
            device,
            budget: 0,
            seed: 0,
            warmup_runs: 1,
            timed_runs: 10,
            batch_count: 1,
        }
    }

    /// The default gemm task: square matrices of 1024.
    pub fn gemm_default(precision: Precision, device: DeviceSpec) -> Self {
        Self::new(
            KernelFamily::Gemm,
            precision,
            ArgsSig::mnk(1024, 1024, 1024),
            device,
        )
    }

    pub fn with_budget(mut self, budget: usize, seed: u64) -> Self {
        self.budget = budget;
        self.seed = seed;
        self
    }

    pub fn with_runs(mut self, warmup_runs: usize, timed_runs: usize) -> Self {
        self.warmup_runs = warmup_runs;
        self.timed_runs = timed_runs;
        self
    }

    pub fn with_batch(mut self, batch_count: usize) -> Self {
        self.batch_count = batch_count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.timed_runs == 0 {
            return Err(Error::usage("timed_runs must be at least 1"));
        }
        if self.batch_count == 0 {
            return Err(Error::usage("batch_count must be at least 1"));
        }
        self.device.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MeasureStatus {
    Ok,
    /// Rejected by the constraint filter; never executed.
    Invalid(Vec<Violation>),
    /// Executed but failed, or produced a wrong result.
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub configuration: Configuration,
    /// Arithmetic mean of `per_run_times` (seconds); 0 unless ok.
    pub mean_time: f64,
    pub per_run_times: Vec<f64>,
    pub status: MeasureStatus,
}

impl Measurement {
    fn without_timing(configuration: &Configuration, status: MeasureStatus) -> Self {
        Measurement {
            configuration: configuration.clone(),
            mean_time: 0.0,
            per_run_times: Vec::new(),
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == MeasureStatus::Ok
    }
}

/// Every measurement of one tuning run, in exploration order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuningRun {
    pub task: TuningTask,
    pub measurements: Vec<Measurement>,
    pub best: Option<Configuration>,
}

/// A workload the tuner can execute with any configuration of its family.
pub trait Tunable {
    /// Restores the inputs the expected output was computed from.
    fn reset(&mut self) -> Result<()>;
    fn run(&mut self, config: &Configuration) -> Result<()>;
    /// Compares the output of the last run with the reference.
    fn verify(&self) -> std::result::Result<(), String>;
}

/// Measures one configuration on a prepared workload.
pub fn measure_with(
    workload: &mut dyn Tunable,
    config: &Configuration,
    task: &TuningTask,
) -> Measurement {
    let verdict = validate(config, &task.device, task.precision);
    if !verdict.is_valid() {
        return Measurement::without_timing(config, MeasureStatus::Invalid(verdict.violations));
    }
    let failed = |msg: String| Measurement::without_timing(config, MeasureStatus::Failed(msg));
    for w in 0..task.warmup_runs.max(1) {
        if let Err(e) = workload.reset().and_then(|_| workload.run(config)) {
            return failed(e.to_string());
        }
        if w == 0 {
            if let Err(msg) = workload.verify() {
                return failed(msg);
            }
        }
    }
    let mut times = Vec::with_capacity(task.timed_runs);
    for _ in 0..task.timed_runs {
        if let Err(e) = workload.reset() {
            return failed(e.to_string());
        }
        let start = Instant::now();
        let r = workload.run(config);
        times.push(start.elapsed().as_secs_f64());
        if let Err(e) = r {
            return failed(e.to_string());
        }
    }
    Measurement {
        configuration: config.clone(),
        mean_time: times.iter().sum::<f64>() / times.len() as f64,
        per_run_times: times,
        status: MeasureStatus::Ok,
    }
}

/// Measures one configuration of `task` on the device of `ctx`.
pub fn measure(config: &Configuration, task: &TuningTask, ctx: &Context) -> Result<Measurement> {
    task.validate()?;
    let mut w = workload(task, ctx)?;
    Ok(measure_with(w.as_mut(), config, task))
}

/// The configurations a run explores, in order: the valid curated set, then
/// up to `budget` valid random draws not seen before. Draws stop after
/// `10 * budget` rejections.
pub fn candidates(task: &TuningTask) -> Vec<Configuration> {
    let valid = |c: &Configuration| validate(c, &task.device, task.precision).is_valid();
    let mut out: Vec<Configuration> = enumerate_search_space(task.family, SearchMode::Curated)
        .map(|c| c.with_family(task.family))
        .filter(valid)
        .collect();
    let mut seen: HashSet<Vec<usize>> = out.iter().map(|c| c.values()).collect();
    let space = SearchSpace::for_family(task.family);
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let (mut taken, mut rejected) = (0, 0);
    while taken < task.budget && rejected < 10 * task.budget {
        let c = space.sample(&mut rng).with_family(task.family);
        if valid(&c) && seen.insert(c.values()) {
            out.push(c);
            taken += 1;
        } else {
            rejected += 1;
        }
    }
    out
}

/// Tunes with a prepared workload.
pub fn tune_with(workload: &mut dyn Tunable, task: &TuningTask) -> Result<TuningRun> {
    task.validate()?;
    let measurements: Vec<Measurement> = candidates(task)
        .iter()
        .map(|c| measure_with(workload, c, task))
        .collect();
    let mut run = TuningRun {
        task: task.clone(),
        measurements,
        best: None,
    };
    run.best = Some(best_config(&run).map_err(|_| {
        Error::Tuning(format!(
            "no valid configuration for device {}",
            task.device.name
        ))
    })?);
    Ok(run)
}

/// Explores the search space of `task` on the device of `ctx` and selects
/// the fastest correct configuration. The context's own parameters are not
/// touched: the workload runs on a scratch context for the same device.
pub fn tune(task: &TuningTask, ctx: &Context) -> Result<TuningRun> {
    task.validate()?;
    let mut w = workload(task, ctx)?;
    tune_with(w.as_mut(), task)
}

/// The ok measurement with the lowest mean time. Ties go to fewer threads
/// per work-group, then to the lexicographically smaller parameter values.
pub fn best_config(run: &TuningRun) -> Result<Configuration> {
    run.measurements
        .iter()
        .filter(|m| m.is_ok())
        .min_by(|a, b| {
            a.mean_time
                .total_cmp(&b.mean_time)
                .then(a.configuration.threads().cmp(&b.configuration.threads()))
                .then(a.configuration.values().cmp(&b.configuration.values()))
        })
        .map(|m| m.configuration.clone())
        .ok_or_else(|| Error::Tuning("no successful measurement".into()))
}

/// The workload the tuner runs for `task`, with its reference output.
pub fn workload(task: &TuningTask, ctx: &Context) -> Result<Box<dyn Tunable>> {
    let scratch = Context::new(ctx.device().clone())?;
    scratch.set_direct_threshold(ctx.direct_threshold());
    Ok(match task.precision {
        Precision::Half => Box::new(Workload::<Half>::new(task, scratch)?),
        Precision::Single => Box::new(Workload::<f32>::new(task, scratch)?),
        Precision::Double => Box::new(Workload::<f64>::new(task, scratch)?),
        Precision::ComplexSingle => Box::new(Workload::<Complex32>::new(task, scratch)?),
        Precision::ComplexDouble => Box::new(Workload::<Complex64>::new(task, scratch)?),
    })
}

/// Random values with parts uniform in [-1, 1).
pub fn random_values<T: Scalar>(rng: &mut impl Rng, len: usize) -> Vec<T> {
    (0..len)
        .map(|_| {
            let re = rng.gen_range(-1.0..1.0);
            let im = if T::PRECISION.is_complex() {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            };
            T::from_f64_parts(re, im)
        })
        .collect()
}

fn sig<T: Scalar>(x: f64) -> T {
    // Complex scalars get a rotation so conjugation mistakes show up.
    let c = Complex::new(x, if T::PRECISION.is_complex() { 0.25 } else { 0.0 });
    T::from_f64_parts(c.re, c.im)
}

/// Inputs, output buffer and expected output of one tuning workload.
struct Workload<T: Scalar> {
    ctx: Context,
    family: KernelFamily,
    args: ArgsSig,
    batch: usize,
    alpha: T,
    beta: T,
    inputs: Vec<Buffer<T>>,
    out: Buffer<T>,
    initial: Vec<T>,
    expected: Vec<T>,
    tol: f64,
}

impl<T: Scalar> Workload<T> {
    fn new(task: &TuningTask, ctx: Context) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(task.seed ^ 0x5eed);
        let ArgsSig { m, n, k } = task.args;
        let (alpha, beta) = (sig::<T>(0.75), sig::<T>(-0.5));
        let p = T::PRECISION;
        let batch = task.batch_count;
        let bound = |xs: &[T]| reference::max_abs(xs);
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::usage(format!("{} task needs {what}", task.family)))
            }
        };
        let (inputs, initial, expected, tol): (Vec<Vec<T>>, Vec<T>, Vec<T>, f64) = match task.family
        {
            KernelFamily::Axpy | KernelFamily::AxpyBatched => {
                need(n > 0, "n > 0")?;
                let x = random_values::<T>(&mut rng, n * batch);
                let y = random_values::<T>(&mut rng, n * batch);
                let expected = reference::axpy(alpha, &x, &y);
                (vec![x], y, expected, 0.0)
            }
            KernelFamily::Dot => {
                need(n > 0, "n > 0")?;
                let x = random_values::<T>(&mut rng, n);
                let y = random_values::<T>(&mut rng, n);
                let expected = vec![T::from_acc(reference::dot(&x, &y))];
                let tol = reference::sum_tolerance(p, n, bound(&x) * bound(&y));
                (vec![x, y], vec![T::zero()], expected, tol)
            }
            KernelFamily::Gemv => {
                need(m > 0 && n > 0, "m, n > 0")?;
                let a = random_values::<T>(&mut rng, m * n);
                let x = random_values::<T>(&mut rng, n);
                let y = random_values::<T>(&mut rng, m);
                let expected = reference::gemv(m, n, alpha, &a, m, &x, beta, &y);
                let tol = reference::sum_tolerance(p, n + 1, bound(&a) * bound(&x) + bound(&y));
                (vec![a, x], y, expected, tol)
            }
            KernelFamily::Ger => {
                need(m > 0 && n > 0, "m, n > 0")?;
                let x = random_values::<T>(&mut rng, m);
                let y = random_values::<T>(&mut rng, n);
                let a = random_values::<T>(&mut rng, m * n);
                let expected = reference::ger(m, n, alpha, &x, &y, &a, m);
                let tol = reference::sum_tolerance(p, 2, 1.0);
                (vec![x, y], a, expected, tol)
            }
            KernelFamily::Gemm | KernelFamily::GemmBatched => {
                need(m > 0 && n > 0 && k > 0, "m, n, k > 0")?;
                let a = random_values::<T>(&mut rng, m * k * batch);
                let b = random_values::<T>(&mut rng, k * n * batch);
                let c = random_values::<T>(&mut rng, m * n * batch);
                let mut expected = Vec::with_capacity(c.len());
                for i in 0..batch {
                    let ai = (&a[i * m * k..(i + 1) * m * k], m, false, false);
                    let bi = (&b[i * k * n..(i + 1) * k * n], k, false, false);
                    let ci = &c[i * m * n..(i + 1) * m * n];
                    expected.extend(reference::gemm(m, n, k, alpha, ai, bi, beta, ci, m));
                }
                let tol = reference::sum_tolerance(p, k + 1, bound(&a) * bound(&b) + bound(&c));
                (vec![a, b], c, expected, tol)
            }
            KernelFamily::Transform => {
                need(m > 0 && n > 0, "m, n > 0")?;
                let a = random_values::<T>(&mut rng, m * n);
                let expected = reference::transpose(&a, m, n);
                (vec![a], vec![T::zero(); m * n], expected, 0.0)
            }
        };
        let inputs = inputs.iter().map(|v| ctx.upload(v)).collect();
        let out = ctx.upload(&initial);
        Ok(Workload {
            ctx,
            family: task.family,
            args: task.args,
            batch,
            alpha,
            beta,
            inputs,
            out,
            initial,
            expected,
            tol,
        })
    }
}

impl<T: Scalar> Tunable for Workload<T> {
    fn reset(&mut self) -> Result<()> {
        if self.family != KernelFamily::Transform {
            self.out.write(0, &self.initial)?;
        }
        Ok(())
    }

    fn run(&mut self, config: &Configuration) -> Result<()> {
        let ArgsSig { m, n, k } = self.args;
        let ctx = &self.ctx;
        let (alpha, beta, out) = (self.alpha, self.beta, &self.out);
        match self.family {
            KernelFamily::Axpy => run_kernel(
                ctx,
                config,
                KernelArgs::Axpy {
                    n,
                    alpha,
                    x: &self.inputs[0],
                    y: out,
                },
            ),
            KernelFamily::Dot => run_kernel(
                ctx,
                config,
                KernelArgs::Dot {
                    n,
                    x: &self.inputs[0],
                    y: &self.inputs[1],
                    out,
                },
            ),
            KernelFamily::Gemv => run_kernel(
                ctx,
                config,
                KernelArgs::Gemv {
                    m,
                    n,
                    alpha,
                    a: &self.inputs[0],
                    lda: m,
                    x: &self.inputs[1],
                    beta,
                    y: out,
                },
            ),
            KernelFamily::Ger => run_kernel(
                ctx,
                config,
                KernelArgs::Ger {
                    m,
                    n,
                    alpha,
                    x: &self.inputs[0],
                    y: &self.inputs[1],
                    a: out,
                    lda: m,
                },
            ),
            KernelFamily::Transform => {
                let src = AccessAdapter::general(Layout::ColMajor, m, n, 0, m);
                run_transform(
                    ctx,
                    config,
                    TransformKind::TransposePad,
                    &self.inputs[0],
                    &src,
                    out,
                    &MatGeom::dense(n, m),
                    T::zero(),
                    false,
                )
            }
            KernelFamily::AxpyBatched => {
                ctx.override_parameters(
                    self.family,
                    T::PRECISION,
                    ArgsSig::vector(n),
                    config.clone(),
                )?;
                let offsets: Vec<usize> = (0..self.batch).map(|i| i * n).collect();
                let alphas = vec![alpha; self.batch];
                routines::axpy_batched(
                    ctx,
                    n,
                    &alphas,
                    &self.inputs[0],
                    &offsets,
                    1,
                    out,
                    &offsets,
                    1,
                    self.batch,
                )
            }
            KernelFamily::Gemm => {
                ctx.override_parameters(self.family, T::PRECISION, self.args, config.clone())?;
                routines::gemm(
                    ctx,
                    Layout::ColMajor,
                    Transpose::No,
                    Transpose::No,
                    m,
                    n,
                    k,
                    alpha,
                    &self.inputs[0],
                    0,
                    m,
                    &self.inputs[1],
                    0,
                    k,
                    beta,
                    out,
                    0,
                    m,
                )
            }
            KernelFamily::GemmBatched => {
                ctx.override_parameters(self.family, T::PRECISION, self.args, config.clone())?;
                routines::gemm_strided_batched(
                    ctx,
                    Layout::ColMajor,
                    Transpose::No,
                    Transpose::No,
                    m,
                    n,
                    k,
                    alpha,
                    &self.inputs[0],
                    0,
                    m,
                    m * k,
                    &self.inputs[1],
                    0,
                    k,
                    k * n,
                    beta,
                    out,
                    0,
                    m,
                    m * n,
                    self.batch,
                )
            }
        }
    }

    fn verify(&self) -> std::result::Result<(), String> {
        let out = self.out.to_vec();
        let got = if self.family == KernelFamily::Dot {
            &out[..1]
        } else {
            &out[..]
        };
        if reference::close(got, &self.expected, self.tol) {
            Ok(())
        } else {
            Err(format!(
                "output differs from the reference by {:.3e} (tolerance {:.3e})",
                reference::max_diff(got, &self.expected),
                self.tol
            ))
        }
    }
}
