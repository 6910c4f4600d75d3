//! Vector update kernel: y = alpha * x + y.
//!
//! Group g of G, thread t, work item w and vector lane l update element
//! `((w * G + g) * WGS + t) * VW + l`, so consecutive threads touch
//! consecutive vectors and each thread revisits the vector once per WPT.

use crate::context::Context;
use crate::error::Result;
use crate::precision::Scalar;

use super::engine::{launch, LaunchDesc, WorkGrid};
use super::params::{AxpyParams, Configuration, KernelFamily};

/// Element operation of a launch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum VectorOp {
    /// y = alpha * x + y
    Axpy,
    /// y = alpha * x
    Scale,
    /// y = x
    Copy,
}

/// One vector update of a (possibly batched) launch.
pub(crate) struct AxpyInstance<'a, T: Scalar> {
    pub alpha: T::Acc,
    pub x: &'a [T],
}

/// Launch geometry: groups needed for `n` elements.
pub fn axpy_groups(p: &AxpyParams, n: usize) -> usize {
    n.div_ceil(p.wgs * p.wpt * p.vw).max(1)
}

/// Updates every `ys[i]` with `instances[i]`; all vectors have length `n`.
pub(crate) fn run_axpy<T: Scalar>(
    ctx: &Context,
    family: KernelFamily,
    config: &Configuration,
    op: VectorOp,
    n: usize,
    instances: &[AxpyInstance<'_, T>],
    ys: &mut [&mut [T]],
) -> Result<()> {
    let p = AxpyParams::from_config(config)?;
    if n == 0 || instances.is_empty() {
        return Ok(());
    }
    let groups = axpy_groups(&p, n);
    let chunk = p.wgs * p.vw;
    let grid = WorkGrid::linear(groups, p.wgs).batched(instances.len());
    let outs = {
        let ys_in: Vec<&[T]> = ys.iter().map(|y| &**y).collect();
        launch(
            ctx,
            LaunchDesc {
                family,
                config,
                grid,
                local_mem_bytes: 0,
            },
            || (),
            |_, g| {
                let inst = &instances[g.z];
                let y = ys_in[g.z];
                let mut out = Vec::with_capacity(p.wpt * chunk);
                for w in 0..p.wpt {
                    for t in 0..p.wgs {
                        for l in 0..p.vw {
                            let i = ((w * groups + g.x) * p.wgs + t) * p.vw + l;
                            if i < n {
                                out.push(match op {
                                    VectorOp::Axpy => {
                                        T::from_acc(inst.alpha * inst.x[i].to_acc() + y[i].to_acc())
                                    }
                                    VectorOp::Scale => T::from_acc(inst.alpha * inst.x[i].to_acc()),
                                    VectorOp::Copy => inst.x[i],
                                });
                            }
                        }
                    }
                }
                out
            },
        )?
    };
    for (idx, out) in outs.into_iter().enumerate() {
        let (gx, gz) = (idx % groups, idx / groups);
        let y = &mut ys[gz];
        let mut vals = out.into_iter();
        for w in 0..p.wpt {
            let start = (w * groups + gx) * chunk;
            for i in start..(start + chunk).min(n) {
                y[i] = vals.next().expect("one value per in-range element");
            }
        }
    }
    Ok(())
}
