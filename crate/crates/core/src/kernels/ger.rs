//! Rank-1 and rank-2 update kernel:
//! A += alpha * x * op(y)^T [+ alpha2 * y * op(x)^T].
//!
//! The matrix is split in tiles of `(WGS1 * WPT) x (WGS2 * WPT)`; thread
//! (t1, t2) of a group updates the `WPT x WPT` elements `(w1 * WGS1 + t1,
//! w2 * WGS2 + t2)` of its tile. Only stored elements of the adapter are
//! touched, which covers packed and triangle-only storage.

use crate::context::Context;
use crate::error::Result;
use crate::precision::{Field, Scalar};

use super::adapter::AccessAdapter;
use super::engine::{launch, LaunchDesc, WorkGrid};
use super::params::{Configuration, GerParams, KernelFamily};

pub(crate) struct GerJob<'a, T: Scalar> {
    pub m: usize,
    pub n: usize,
    pub alpha: T::Acc,
    /// Contiguous copies of x (length m) and y (length n).
    pub x: &'a [T],
    pub y: &'a [T],
    /// Conjugate the right-hand vector of each product.
    pub conj: bool,
    /// Second product `alpha2 * y * op(x)^T` for rank-2 updates (then m == n).
    pub alpha2: Option<T::Acc>,
    /// Keep only the real part on the diagonal.
    pub real_diagonal: bool,
}

impl<T: Scalar> GerJob<'_, T> {
    #[inline]
    fn delta(&self, i: usize, j: usize) -> T::Acc {
        let op = |v: T| {
            if self.conj {
                v.to_acc().conj()
            } else {
                v.to_acc()
            }
        };
        let mut d = self.alpha * self.x[i].to_acc() * op(self.y[j]);
        if let Some(a2) = self.alpha2 {
            d += a2 * self.y[i].to_acc() * op(self.x[j]);
        }
        d
    }
}

/// Computes the updated stored elements as `(storage index, value)` pairs.
pub(crate) fn run_ger<T: Scalar>(
    ctx: &Context,
    config: &Configuration,
    job: &GerJob<'_, T>,
    a: &[T],
    adapter: &AccessAdapter,
) -> Result<Vec<(usize, T)>> {
    let p = GerParams::from_config(config)?;
    if job.m == 0 || job.n == 0 {
        return Ok(Vec::new());
    }
    let (tm, tn) = (p.wgs1 * p.wpt, p.wgs2 * p.wpt);
    let grid = WorkGrid::planar(job.m.div_ceil(tm), job.n.div_ceil(tn), p.wgs1 * p.wgs2);
    let outs = launch(
        ctx,
        LaunchDesc {
            family: KernelFamily::Ger,
            config,
            grid,
            local_mem_bytes: 0,
        },
        || (),
        |_, g| {
            let mut out = Vec::new();
            for w2 in 0..p.wpt {
                for t2 in 0..p.wgs2 {
                    let j = g.y * tn + w2 * p.wgs2 + t2;
                    if j >= job.n {
                        continue;
                    }
                    for w1 in 0..p.wpt {
                        for t1 in 0..p.wgs1 {
                            let i = g.x * tm + w1 * p.wgs1 + t1;
                            if i >= job.m || !adapter.is_stored(i, j) {
                                continue;
                            }
                            let Some(pos) = adapter.locate(i, j) else {
                                continue;
                            };
                            let mut v = a[pos].to_acc() + job.delta(i, j);
                            if job.real_diagonal && i == j {
                                v = T::Acc::from_real(v.re());
                            }
                            out.push((pos, T::from_acc(v)));
                        }
                    }
                }
            }
            out
        },
    )?;
    Ok(outs.into_iter().flatten().collect())
}
