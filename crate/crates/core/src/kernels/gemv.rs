//! Matrix-vector kernel: y = alpha * op(A) * x + beta * y.
//!
//! A is read through an [`AccessAdapter`], so general, banded, packed,
//! symmetric, hermitian and triangular storage share this kernel. Each group
//! owns `WGS * WPT` consecutive rows of y (thread t handles rows
//! `w * WGS + t`). The columns are processed in chunks of WGS: the chunk of x
//! is staged in local memory, then every thread consumes it VW at a time.

use crate::context::Context;
use crate::error::Result;
use crate::precision::{Field, Scalar};
use crate::types::Transpose;

use super::adapter::AccessAdapter;
use super::engine::{launch, LaunchDesc, WorkGrid};
use super::params::{Configuration, GemvParams, KernelFamily};

pub(crate) struct GemvJob<'a, T: Scalar> {
    pub a: &'a [T],
    pub adapter: AccessAdapter,
    pub trans: Transpose,
    /// Length of y (rows of op(A)) and of x (columns of op(A)).
    pub rows: usize,
    pub cols: usize,
    pub x: &'a [T],
    pub alpha: T::Acc,
    pub beta: T::Acc,
    /// Previous y, read only when beta is nonzero.
    pub y: &'a [T],
}

impl<T: Scalar> GemvJob<'_, T> {
    #[inline]
    fn op(&self, i: usize, j: usize) -> T::Acc {
        match self.trans {
            Transpose::No => self.adapter.element(self.a, i, j),
            Transpose::Yes => self.adapter.element(self.a, j, i),
            Transpose::Conjugate => self.adapter.element(self.a, j, i).conj(),
        }
    }
}

/// Returns the new y.
pub(crate) fn run_gemv<T: Scalar>(
    ctx: &Context,
    config: &Configuration,
    job: &GemvJob<'_, T>,
) -> Result<Vec<T>> {
    let p = GemvParams::from_config(config)?;
    if job.rows == 0 {
        return Ok(Vec::new());
    }
    let per_group = p.rows_per_group();
    let groups = job.rows.div_ceil(per_group);
    let outs = launch(
        ctx,
        LaunchDesc {
            family: KernelFamily::Gemv,
            config,
            grid: WorkGrid::linear(groups, p.wgs),
            local_mem_bytes: p.wgs * std::mem::size_of::<T>(),
        },
        || (vec![T::default(); p.wgs], vec![T::Acc::zero(); per_group]),
        |(xl, acc), g| {
            let row0 = g.x * per_group;
            acc.fill(T::Acc::zero());
            for c0 in (0..job.cols).step_by(p.wgs) {
                let width = p.wgs.min(job.cols - c0);
                xl[..width].copy_from_slice(&job.x[c0..c0 + width]);
                for w in 0..p.wpt {
                    for t in 0..p.wgs {
                        let r = w * p.wgs + t;
                        let i = row0 + r;
                        if i >= job.rows {
                            continue;
                        }
                        let mut s = acc[r];
                        for v0 in (0..width).step_by(p.vw) {
                            let end = (v0 + p.vw).min(width);
                            for (j, x) in xl[v0..end].iter().enumerate() {
                                s += job.op(i, c0 + v0 + j) * x.to_acc();
                            }
                        }
                        acc[r] = s;
                    }
                }
            }
            let end = (row0 + per_group).min(job.rows);
            (row0..end)
                .map(|i| {
                    let mut v = job.alpha * acc[i - row0];
                    if !job.beta.is_zero() {
                        v += job.beta * job.y[i].to_acc();
                    }
                    T::from_acc(v)
                })
                .collect::<Vec<T>>()
        },
    )?;
    Ok(outs.into_iter().flatten().collect())
}
