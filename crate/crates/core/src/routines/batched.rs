//! Batched routines. Every instance is validated before anything runs, and
//! the whole batch executes as one kernel launch with the batch index as
//! the third grid dimension.

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::kernels::adapter::AccessAdapter;
use crate::kernels::axpy::{run_axpy, AxpyInstance, VectorOp};
use crate::kernels::params::{ArgsSig, KernelFamily};
use crate::precision::Scalar;
use crate::types::{Layout, Transpose};

use super::common::{
    check_ctx, check_matrix, check_vector, first_overlap, hold, overlaps, MatPos, Vector,
};
use super::level3::{gemm_core, Instance, Operand};

fn in_batch(e: Error, b: usize) -> Error {
    match e {
        Error::InvalidArgument {
            routine,
            index,
            name,
            reason,
        } => Error::InvalidArgument {
            routine,
            index,
            name,
            reason: format!("batch instance {b}: {reason}"),
        },
        other => other,
    }
}

fn check_count(routine: &'static str, index: usize, batch_count: usize) -> Result<()> {
    if batch_count == 0 {
        return Err(Error::arg(
            routine,
            index,
            "batch_count",
            "must be at least 1",
        ));
    }
    Ok(())
}

fn check_len(
    routine: &'static str,
    index: usize,
    name: &'static str,
    len: usize,
    batch_count: usize,
) -> Result<()> {
    if len != batch_count {
        return Err(Error::arg(
            routine,
            index,
            name,
            format!("has {len} entries for a batch of {batch_count}"),
        ));
    }
    Ok(())
}

/// y_b = alphas[b] * x_b + y_b for every instance b, where x_b starts at
/// `x_offsets[b]` and y_b at `y_offsets[b]`.
#[allow(clippy::too_many_arguments)]
pub fn axpy_batched<T: Scalar>(
    ctx: &Context,
    n: usize,
    alphas: &[T],
    x: &Buffer<T>,
    x_offsets: &[usize],
    x_inc: usize,
    y: &Buffer<T>,
    y_offsets: &[usize],
    y_inc: usize,
    batch_count: usize,
) -> Result<()> {
    const R: &str = "axpy_batched";
    check_count(R, 9, batch_count)?;
    check_len(R, 2, "alphas", alphas.len(), batch_count)?;
    check_len(R, 4, "x_offsets", x_offsets.len(), batch_count)?;
    check_len(R, 7, "y_offsets", y_offsets.len(), batch_count)?;
    let xs: Vec<_> = x_offsets
        .iter()
        .map(|&o| Vector {
            buf: x,
            offset: o,
            inc: x_inc,
        })
        .collect();
    let ys: Vec<_> = y_offsets
        .iter()
        .map(|&o| Vector {
            buf: y,
            offset: o,
            inc: y_inc,
        })
        .collect();
    for b in 0..batch_count {
        check_vector(ctx, R, "x", (3, 4, 5), &xs[b], n).map_err(|e| in_batch(e, b))?;
        check_vector(ctx, R, "y", (6, 7, 8), &ys[b], n).map_err(|e| in_batch(e, b))?;
    }
    let y_ranges: Vec<_> = ys.iter().map(|v| v.range(n)).collect();
    if let Some(b) = first_overlap(&y_ranges) {
        return Err(Error::arg(
            R,
            7,
            "y_offsets",
            format!("batch instance {b}: output overlaps another instance"),
        ));
    }
    if x.same_as(y) {
        for (b, xv) in xs.iter().enumerate() {
            if y_ranges.iter().any(|&r| overlaps(xv.range(n), r)) {
                return Err(Error::arg(
                    R,
                    4,
                    "x_offsets",
                    format!("batch instance {b}: input overlaps an output"),
                ));
            }
        }
    }
    if n == 0 {
        return Ok(());
    }
    let config = ctx.resolve(KernelFamily::AxpyBatched, T::PRECISION, ArgsSig::vector(n))?;
    let xd: Vec<Vec<T>> = xs.iter().map(|v| v.gather(n)).collect();
    let mut yd: Vec<Vec<T>> = ys.iter().map(|v| v.gather(n)).collect();
    let instances: Vec<_> = xd
        .iter()
        .zip(alphas)
        .map(|(x, a)| AxpyInstance {
            alpha: a.to_acc(),
            x,
        })
        .collect();
    let mut outs: Vec<&mut [T]> = yd.iter_mut().map(|v| &mut v[..]).collect();
    run_axpy(
        ctx,
        KernelFamily::AxpyBatched,
        &config,
        VectorOp::Axpy,
        n,
        &instances,
        &mut outs,
    )?;
    for (v, vals) in ys.iter().zip(&yd) {
        v.scatter(vals);
    }
    Ok(())
}

/// Shape of one gemm instance and the positions of its matrix arguments.
struct GemmShape {
    layout: Layout,
    a_transpose: Transpose,
    b_transpose: Transpose,
    m: usize,
    n: usize,
    k: usize,
}

impl GemmShape {
    fn adapters(
        &self,
        a_ld: usize,
        b_ld: usize,
        c_ld: usize,
        inst: &Instance<impl Copy>,
    ) -> [AccessAdapter; 3] {
        let (ar, ac) = if self.a_transpose.is_transposed() {
            (self.k, self.m)
        } else {
            (self.m, self.k)
        };
        let (br, bc) = if self.b_transpose.is_transposed() {
            (self.n, self.k)
        } else {
            (self.k, self.n)
        };
        [
            AccessAdapter::general(self.layout, ar, ac, inst.a, a_ld),
            AccessAdapter::general(self.layout, br, bc, inst.b, b_ld),
            AccessAdapter::general(self.layout, self.m, self.n, inst.c, c_ld),
        ]
    }
}

#[allow(clippy::too_many_arguments)]
fn run_gemm_batch<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    shape: &GemmShape,
    a: (&Buffer<T>, usize, MatPos),
    b: (&Buffer<T>, usize, MatPos),
    c: (&Buffer<T>, usize, MatPos),
    instances: &[Instance<T::Acc>],
) -> Result<()> {
    let (ab, a_ld, a_pos) = a;
    let (bb, b_ld, b_pos) = b;
    let (cb, c_ld, c_pos) = c;
    let mut ranges = [vec![], vec![], vec![]];
    for (i, inst) in instances.iter().enumerate() {
        let [aa, ba, ca] = shape.adapters(a_ld, b_ld, c_ld, inst);
        check_matrix(ctx, routine, "A", a_pos, ab, &aa).map_err(|e| in_batch(e, i))?;
        check_matrix(ctx, routine, "B", b_pos, bb, &ba).map_err(|e| in_batch(e, i))?;
        check_matrix(ctx, routine, "C", c_pos, cb, &ca).map_err(|e| in_batch(e, i))?;
        for (r, ad) in ranges.iter_mut().zip([aa, ba, ca]) {
            r.push((ad.offset, ad.offset + ad.extent()));
        }
    }
    let [a_ranges, b_ranges, c_ranges] = &ranges;
    if let Some(i) = first_overlap(c_ranges) {
        return Err(Error::arg(
            routine,
            c_pos.1,
            "C",
            format!("batch instance {i}: output overlaps another instance"),
        ));
    }
    for (buf, rs, pos, name) in [(ab, a_ranges, a_pos, "A"), (bb, b_ranges, b_pos, "B")] {
        if buf.same_as(cb) {
            if let Some(i) = rs
                .iter()
                .position(|&r| c_ranges.iter().any(|&cr| overlaps(r, cr)))
            {
                return Err(Error::arg(
                    routine,
                    pos.1,
                    name,
                    format!("batch instance {i}: input overlaps an output"),
                ));
            }
        }
    }
    let (ah, bh) = (hold(ab, &[cb]), hold(bb, &[cb]));
    gemm_core(
        ctx,
        KernelFamily::GemmBatched,
        shape.layout,
        shape.m,
        shape.n,
        shape.k,
        Operand {
            data: &ah,
            ld: a_ld,
            trans: shape.a_transpose.is_transposed(),
            conj: shape.a_transpose.is_conjugated(),
        },
        Operand {
            data: &bh,
            ld: b_ld,
            trans: shape.b_transpose.is_transposed(),
            conj: shape.b_transpose.is_conjugated(),
        },
        cb,
        c_ld,
        instances,
        None,
    )
}

/// C_b = alphas[b] * op(A_b) * op(B_b) + betas[b] * C_b for every instance
/// b, with per-instance offsets.
#[allow(clippy::too_many_arguments)]
pub fn gemm_batched<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    a_transpose: Transpose,
    b_transpose: Transpose,
    m: usize,
    n: usize,
    k: usize,
    alphas: &[T],
    a: &Buffer<T>,
    a_offsets: &[usize],
    a_ld: usize,
    b: &Buffer<T>,
    b_offsets: &[usize],
    b_ld: usize,
    betas: &[T],
    c: &Buffer<T>,
    c_offsets: &[usize],
    c_ld: usize,
    batch_count: usize,
) -> Result<()> {
    const R: &str = "gemm_batched";
    check_count(R, 18, batch_count)?;
    check_len(R, 7, "alphas", alphas.len(), batch_count)?;
    check_len(R, 9, "a_offsets", a_offsets.len(), batch_count)?;
    check_len(R, 12, "b_offsets", b_offsets.len(), batch_count)?;
    check_len(R, 14, "betas", betas.len(), batch_count)?;
    check_len(R, 16, "c_offsets", c_offsets.len(), batch_count)?;
    let instances: Vec<_> = (0..batch_count)
        .map(|i| Instance {
            a: a_offsets[i],
            b: b_offsets[i],
            c: c_offsets[i],
            alpha: alphas[i].to_acc(),
            beta: betas[i].to_acc(),
        })
        .collect();
    let shape = GemmShape {
        layout,
        a_transpose,
        b_transpose,
        m,
        n,
        k,
    };
    run_gemm_batch(
        ctx,
        R,
        &shape,
        (a, a_ld, (8, 9, 10)),
        (b, b_ld, (11, 12, 13)),
        (c, c_ld, (15, 16, 17)),
        &instances,
    )
}

/// As [`gemm_batched`] with instance b at `offset + b * stride` for every
/// matrix and shared scalars.
#[allow(clippy::too_many_arguments)]
pub fn gemm_strided_batched<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    a_transpose: Transpose,
    b_transpose: Transpose,
    m: usize,
    n: usize,
    k: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    a_stride: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
    b_stride: usize,
    beta: T,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
    c_stride: usize,
    batch_count: usize,
) -> Result<()> {
    const R: &str = "gemm_strided_batched";
    check_count(R, 21, batch_count)?;
    let shape = GemmShape {
        layout,
        a_transpose,
        b_transpose,
        m,
        n,
        k,
    };
    let first = Instance {
        a: a_offset,
        b: b_offset,
        c: c_offset,
        alpha: (),
        beta: (),
    };
    for (i, ad) in shape.adapters(a_ld, b_ld, c_ld, &first).iter().enumerate() {
        let (stride, index, name, buf) = [
            (a_stride, 11, "a_stride", a),
            (b_stride, 15, "b_stride", b),
            (c_stride, 20, "c_stride", c),
        ][i];
        check_ctx(ctx, R, name, index - 3, buf)?;
        if batch_count > 1 && stride < ad.extent() {
            return Err(Error::arg(
                R,
                index,
                name,
                format!(
                    "stride {stride} is smaller than one instance of {} elements",
                    ad.extent()
                ),
            ));
        }
    }
    let instances: Vec<_> = (0..batch_count)
        .map(|i| Instance {
            a: a_offset + i * a_stride,
            b: b_offset + i * b_stride,
            c: c_offset + i * c_stride,
            alpha: alpha.to_acc(),
            beta: beta.to_acc(),
        })
        .collect();
    run_gemm_batch(
        ctx,
        R,
        &shape,
        (a, a_ld, (8, 9, 10)),
        (b, b_ld, (12, 13, 14)),
        (c, c_ld, (17, 18, 19)),
        &instances,
    )
}
