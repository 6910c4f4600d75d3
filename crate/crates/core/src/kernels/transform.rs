//! Matrix transforms: copy, pad, transpose, un-pad, and materialisation of
//! symmetric, hermitian and triangular operands into general storage.
//!
//! Every transform writes `dst(i, j) = alpha * op(src)(i, j)` where the
//! source is in range and the pad value elsewhere; the kinds differ in the
//! source adapter and geometry they accept. Groups own tiles of
//! `(DIMX * WPT) x (DIMY * WPT)` destination elements. A transposing group
//! first stages its source tile in local memory in source order.

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::precision::{Field, Scalar};

use super::adapter::{AccessAdapter, Structure};
use super::engine::{launch, LaunchDesc, WorkGrid};
use super::params::{Configuration, KernelFamily, TransformParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    CopyPad,
    TransposePad,
    CopyUnpad,
    Symmetrize,
    Triangularize,
}

/// Column-major destination region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatGeom {
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    pub ld: usize,
}

impl MatGeom {
    pub fn dense(rows: usize, cols: usize) -> MatGeom {
        MatGeom {
            rows,
            cols,
            offset: 0,
            ld: rows.max(1),
        }
    }

    pub fn extent(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.cols - 1) * self.ld + self.rows
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TransformInstance<A> {
    pub src: AccessAdapter,
    pub dst_offset: usize,
    pub alpha: A,
}

pub(crate) struct TransformJob<'a, T: Scalar> {
    pub src: &'a [T],
    pub instances: &'a [TransformInstance<T::Acc>],
    pub rows: usize,
    pub cols: usize,
    pub ld: usize,
    pub transpose: bool,
    pub conj: bool,
    pub pad: T,
}

impl<T: Scalar> TransformJob<'_, T> {
    /// Logical source size after the optional transpose.
    fn src_dims(&self, a: &AccessAdapter) -> (usize, usize) {
        if self.transpose {
            (a.cols, a.rows)
        } else {
            (a.rows, a.cols)
        }
    }

    #[inline]
    fn value(&self, inst: &TransformInstance<T::Acc>, v: T::Acc) -> T {
        let v = if self.conj { v.conj() } else { v };
        if inst.alpha == T::Acc::one() {
            T::from_acc(v)
        } else {
            T::from_acc(inst.alpha * v)
        }
    }
}

/// Fills the destination blocks of every instance in `dst`.
pub(crate) fn run_transform_job<T: Scalar>(
    ctx: &Context,
    config: &Configuration,
    job: &TransformJob<'_, T>,
    dst: &mut [T],
) -> Result<()> {
    let p = TransformParams::from_config(config)?;
    if job.rows == 0 || job.cols == 0 || job.instances.is_empty() {
        return Ok(());
    }
    let (tr, tc) = p.tile();
    let grid = WorkGrid::planar(
        job.rows.div_ceil(tr),
        job.cols.div_ceil(tc),
        p.dimx * p.dimy,
    )
    .batched(job.instances.len());
    let tiles = launch(
        ctx,
        LaunchDesc {
            family: KernelFamily::Transform,
            config,
            grid,
            local_mem_bytes: tr * tc * std::mem::size_of::<T>(),
        },
        || vec![T::default(); tr * tc],
        |local, g| {
            let inst = &job.instances[g.z];
            let (sr, sc) = job.src_dims(&inst.src);
            let (i0, j0) = (g.x * tr, g.y * tc);
            let mut tile = vec![job.pad; tr * tc];
            if job.transpose {
                // Load phase: source rows j0.., columns i0.. in source order.
                for ii in 0..tr {
                    for jj in 0..tc {
                        let (i, j) = (i0 + ii, j0 + jj);
                        if i < sr && j < sc {
                            local[jj + ii * tc] = T::from_acc(inst.src.element(job.src, j, i));
                        }
                    }
                }
                for jj in 0..tc {
                    for ii in 0..tr {
                        let (i, j) = (i0 + ii, j0 + jj);
                        if i < sr && j < sc {
                            tile[ii + jj * tr] = job.value(inst, local[jj + ii * tc].to_acc());
                        }
                    }
                }
            } else {
                for wy in 0..p.wpt {
                    for ty in 0..p.dimy {
                        let jj = wy * p.dimy + ty;
                        let j = j0 + jj;
                        if j >= sc {
                            continue;
                        }
                        for wx in 0..p.wpt {
                            for tx in 0..p.dimx {
                                let ii = wx * p.dimx + tx;
                                let i = i0 + ii;
                                if i < sr {
                                    tile[ii + jj * tr] =
                                        job.value(inst, inst.src.element(job.src, i, j));
                                }
                            }
                        }
                    }
                }
            }
            tile
        },
    )?;
    let (gx, gy) = (grid.groups[0], grid.groups[1]);
    for (idx, tile) in tiles.iter().enumerate() {
        let (x, y, z) = (idx % gx, (idx / gx) % gy, idx / (gx * gy));
        let base = job.instances[z].dst_offset;
        let (i0, j0) = (x * tr, y * tc);
        let h = tr.min(job.rows - i0);
        for jj in 0..tc.min(job.cols - j0) {
            let d = base + i0 + (j0 + jj) * job.ld;
            dst[d..d + h].copy_from_slice(&tile[jj * tr..jj * tr + h]);
        }
    }
    Ok(())
}

/// Runs one transform between device buffers.
///
/// `src` describes the source region (its structure selects what
/// symmetrize and triangularize materialise); `dst` the column-major
/// destination. `conj` conjugates for transpose-pad.
#[allow(clippy::too_many_arguments)]
pub fn run_transform<T: Scalar>(
    ctx: &Context,
    config: &Configuration,
    kind: TransformKind,
    src_buf: &Buffer<T>,
    src: &AccessAdapter,
    dst_buf: &Buffer<T>,
    dst: &MatGeom,
    pad_value: T,
    conj: bool,
) -> Result<()> {
    ctx.check(src_buf)?;
    ctx.check(dst_buf)?;
    let (sr, sc) = if kind == TransformKind::TransposePad {
        (src.cols, src.rows)
    } else {
        (src.rows, src.cols)
    };
    let mismatch = |what: &str| Err(Error::usage(format!("{kind:?}: {what}")));
    match kind {
        TransformKind::CopyPad | TransformKind::TransposePad if dst.rows < sr || dst.cols < sc => {
            return mismatch("destination smaller than source");
        }
        TransformKind::CopyUnpad if dst.rows > sr || dst.cols > sc => {
            return mismatch("destination larger than source");
        }
        TransformKind::Symmetrize
            if !matches!(
                src.structure,
                Structure::Symmetric(_) | Structure::Hermitian(_)
            ) =>
        {
            return mismatch("source is not symmetric or hermitian");
        }
        TransformKind::Triangularize if !matches!(src.structure, Structure::Triangular(..)) => {
            return mismatch("source is not triangular");
        }
        TransformKind::Symmetrize | TransformKind::Triangularize
            if dst.rows < sr || dst.cols < sc =>
        {
            return mismatch("destination smaller than source");
        }
        _ => {}
    }
    if dst.ld < dst.rows.max(1) {
        return mismatch("destination leading dimension too small");
    }
    if src.offset + src.extent() > src_buf.len() || dst.offset + dst.extent() > dst_buf.len() {
        return Err(Error::OutOfRange {
            offset: dst.offset,
            len: dst.extent(),
            buffer_len: dst_buf.len(),
        });
    }
    let src_data = src_buf.to_vec();
    let mut out = dst_buf.to_vec();
    let instances = [TransformInstance {
        src: *src,
        dst_offset: dst.offset,
        alpha: T::Acc::one(),
    }];
    let job = TransformJob {
        src: &src_data,
        instances: &instances,
        rows: dst.rows,
        cols: dst.cols,
        ld: dst.ld,
        transpose: kind == TransformKind::TransposePad,
        conj,
        pad: pad_value,
    };
    run_transform_job(ctx, config, &job, &mut out)?;
    dst_buf.write(0, &out)
}
