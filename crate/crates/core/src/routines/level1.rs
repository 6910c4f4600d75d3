//! Level-1 routines: vector updates on the axpy kernel and reductions on
//! the two-stage dot kernel.

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::kernels::axpy::{run_axpy, AxpyInstance, VectorOp};
use crate::kernels::dot::{run_reduction, Extremum, IndexOf, ScaledSsq, SumOf};
use crate::kernels::params::{ArgsSig, KernelFamily};
use crate::precision::{ComplexScalar, Field, RealField, RealScalar, Scalar};

use super::common::{check_vector, overlaps, Vector};

fn vector<T: Scalar>(buf: &Buffer<T>, offset: usize, inc: usize) -> Vector<'_, T> {
    Vector { buf, offset, inc }
}

fn check_output<E: crate::precision::Element>(
    ctx: &Context,
    routine: &'static str,
    index: usize,
    buf: &Buffer<E>,
    offset: usize,
) -> Result<()> {
    if ctx.check(buf).is_err() {
        return Err(Error::arg(
            routine,
            index,
            "result",
            "buffer belongs to another context",
        ));
    }
    if offset >= buf.len() {
        return Err(Error::arg(
            routine,
            index + 1,
            "result offset",
            format!(
                "offset {} is outside the buffer of length {}",
                offset,
                buf.len()
            ),
        ));
    }
    Ok(())
}

fn vector_op<T: Scalar>(
    ctx: &Context,
    op: VectorOp,
    n: usize,
    alpha: T,
    x: &[Vector<'_, T>],
    y: &[Vector<'_, T>],
) -> Result<()> {
    let config = ctx.resolve(KernelFamily::Axpy, T::PRECISION, ArgsSig::vector(n))?;
    let xs: Vec<Vec<T>> = x.iter().map(|v| v.gather(n)).collect();
    let mut ys: Vec<Vec<T>> = match op {
        VectorOp::Axpy => y.iter().map(|v| v.gather(n)).collect(),
        _ => vec![vec![T::default(); n]; y.len()],
    };
    let instances: Vec<AxpyInstance<'_, T>> = xs
        .iter()
        .map(|x| AxpyInstance {
            alpha: alpha.to_acc(),
            x,
        })
        .collect();
    let mut outs: Vec<&mut [T]> = ys.iter_mut().map(|v| &mut v[..]).collect();
    run_axpy(
        ctx,
        KernelFamily::Axpy,
        &config,
        op,
        n,
        &instances,
        &mut outs,
    )?;
    for (v, vals) in y.iter().zip(&ys) {
        v.scatter(vals);
    }
    Ok(())
}

/// y = alpha * x + y
#[allow(clippy::too_many_arguments)]
pub fn axpy<T: Scalar>(
    ctx: &Context,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    let (xv, yv) = (vector(x, x_offset, x_inc), vector(y, y_offset, y_inc));
    check_vector(ctx, "axpy", "x", (3, 4, 5), &xv, n)?;
    check_vector(ctx, "axpy", "y", (6, 7, 8), &yv, n)?;
    if n == 0 {
        return Ok(());
    }
    vector_op(ctx, VectorOp::Axpy, n, alpha, &[xv], &[yv])
}

/// x = alpha * x
pub fn scal<T: Scalar>(
    ctx: &Context,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let xv = vector(x, x_offset, x_inc);
    check_vector(ctx, "scal", "x", (3, 4, 5), &xv, n)?;
    if n == 0 {
        return Ok(());
    }
    vector_op(ctx, VectorOp::Scale, n, alpha, &[xv], &[xv])
}

fn distinct<T: Scalar>(
    routine: &'static str,
    index: usize,
    x: &Vector<'_, T>,
    y: &Vector<'_, T>,
    n: usize,
) -> Result<()> {
    if x.buf.same_as(y.buf) && overlaps(x.range(n), y.range(n)) {
        return Err(Error::arg(routine, index, "y", "x and y must not overlap"));
    }
    Ok(())
}

/// y = x
#[allow(clippy::too_many_arguments)]
pub fn copy<T: Scalar>(
    ctx: &Context,
    n: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    let (xv, yv) = (vector(x, x_offset, x_inc), vector(y, y_offset, y_inc));
    check_vector(ctx, "copy", "x", (2, 3, 4), &xv, n)?;
    check_vector(ctx, "copy", "y", (5, 6, 7), &yv, n)?;
    distinct("copy", 5, &xv, &yv, n)?;
    if n == 0 {
        return Ok(());
    }
    vector_op(ctx, VectorOp::Copy, n, T::one(), &[xv], &[yv])
}

/// x <-> y, as one launch with two instances.
#[allow(clippy::too_many_arguments)]
pub fn swap<T: Scalar>(
    ctx: &Context,
    n: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    let (xv, yv) = (vector(x, x_offset, x_inc), vector(y, y_offset, y_inc));
    check_vector(ctx, "swap", "x", (2, 3, 4), &xv, n)?;
    check_vector(ctx, "swap", "y", (5, 6, 7), &yv, n)?;
    distinct("swap", 5, &xv, &yv, n)?;
    if n == 0 {
        return Ok(());
    }
    vector_op(ctx, VectorOp::Copy, n, T::one(), &[xv, yv], &[yv, xv])
}

fn reduce_sum<T: Scalar>(
    ctx: &Context,
    n: usize,
    f: impl Fn(usize) -> T::Acc + Sync,
) -> Result<T::Acc> {
    if n == 0 {
        return Ok(T::Acc::zero());
    }
    let config = ctx.resolve(KernelFamily::Dot, T::PRECISION, ArgsSig::vector(n))?;
    run_reduction(ctx, &config, n, &SumOf::new(f))
}

#[allow(clippy::too_many_arguments)]
fn dot_impl<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    conj: bool,
    n: usize,
    out: &Buffer<T>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    let (xv, yv) = (vector(x, x_offset, x_inc), vector(y, y_offset, y_inc));
    check_output(ctx, routine, 2, out, out_offset)?;
    check_vector(ctx, routine, "x", (4, 5, 6), &xv, n)?;
    check_vector(ctx, routine, "y", (7, 8, 9), &yv, n)?;
    let r = {
        let (xd, yd) = (x.data(), y.data());
        reduce_sum::<T>(ctx, n, |i| {
            let a = xd[x_offset + i * x_inc].to_acc();
            let a = if conj { a.conj() } else { a };
            a * yd[y_offset + i * y_inc].to_acc()
        })?
    };
    out.write(out_offset, &[T::from_acc(r)])
}

/// out = x^T y
#[allow(clippy::too_many_arguments)]
pub fn dot<T: RealScalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<T>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    dot_impl(
        ctx, "dot", false, n, out, out_offset, x, x_offset, x_inc, y, y_offset, y_inc,
    )
}

/// out = x^T y for complex vectors.
#[allow(clippy::too_many_arguments)]
pub fn dotu<T: ComplexScalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<T>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    dot_impl(
        ctx, "dotu", false, n, out, out_offset, x, x_offset, x_inc, y, y_offset, y_inc,
    )
}

/// out = x^H y
#[allow(clippy::too_many_arguments)]
pub fn dotc<T: ComplexScalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<T>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    dot_impl(
        ctx, "dotc", true, n, out, out_offset, x, x_offset, x_inc, y, y_offset, y_inc,
    )
}

/// Euclidean norm, computed with a scaled sum of squares.
pub fn nrm2<T: Scalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<T>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let xv = vector(x, x_offset, x_inc);
    check_output(ctx, "nrm2", 2, out, out_offset)?;
    check_vector(ctx, "nrm2", "x", (4, 5, 6), &xv, n)?;
    let norm = if n == 0 {
        T::Acc::zero()
    } else {
        let config = ctx.resolve(KernelFamily::Dot, T::PRECISION, ArgsSig::vector(n))?;
        let xd = x.data();
        let r = ScaledSsq {
            x: &xd,
            offset: x_offset,
            inc: x_inc,
        };
        let (scale, ssq) = run_reduction(ctx, &config, n, &r)?;
        T::Acc::from_real(scale * ssq.sqrt())
    };
    out.write(out_offset, &[T::from_acc(norm)])
}

/// Sum of |re| + |im|.
pub fn asum<T: Scalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<T>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let xv = vector(x, x_offset, x_inc);
    check_output(ctx, "asum", 2, out, out_offset)?;
    check_vector(ctx, "asum", "x", (4, 5, 6), &xv, n)?;
    let r = {
        let xd = x.data();
        reduce_sum::<T>(ctx, n, |i| {
            T::Acc::from_real(xd[x_offset + i * x_inc].to_acc().abs1())
        })?
    };
    out.write(out_offset, &[T::from_acc(r)])
}

/// Sum of the signed elements.
pub fn sum<T: Scalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<T>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let xv = vector(x, x_offset, x_inc);
    check_output(ctx, "sum", 2, out, out_offset)?;
    check_vector(ctx, "sum", "x", (4, 5, 6), &xv, n)?;
    let r = {
        let xd = x.data();
        reduce_sum::<T>(ctx, n, |i| xd[x_offset + i * x_inc].to_acc())?
    };
    out.write(out_offset, &[T::from_acc(r)])
}

#[allow(clippy::too_many_arguments)]
fn index_of<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    kind: Extremum,
    n: usize,
    out: &Buffer<u32>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let xv = vector(x, x_offset, x_inc);
    if n == 0 {
        return Err(Error::arg(
            routine,
            1,
            "n",
            "an index reduction needs at least one element",
        ));
    }
    if n > u32::MAX as usize {
        return Err(Error::arg(
            routine,
            1,
            "n",
            "too many elements for a 32-bit index",
        ));
    }
    check_output(ctx, routine, 2, out, out_offset)?;
    check_vector(ctx, routine, "x", (4, 5, 6), &xv, n)?;
    let config = ctx.resolve(KernelFamily::Dot, T::PRECISION, ArgsSig::vector(n))?;
    let (_, idx) = {
        let xd = x.data();
        let r = IndexOf {
            x: &xd,
            offset: x_offset,
            inc: x_inc,
            kind,
        };
        run_reduction(ctx, &config, n, &r)?
    };
    // All-NaN input selects the first element.
    let idx = if idx == u32::MAX { 0 } else { idx };
    out.write(out_offset, &[idx])
}

/// Zero-based index of the first element with the largest |re| + |im|.
pub fn amax<T: Scalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<u32>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    index_of(
        ctx,
        "amax",
        Extremum::AbsMax,
        n,
        out,
        out_offset,
        x,
        x_offset,
        x_inc,
    )
}

/// Zero-based index of the first element with the smallest |re| + |im|.
pub fn amin<T: Scalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<u32>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    index_of(
        ctx,
        "amin",
        Extremum::AbsMin,
        n,
        out,
        out_offset,
        x,
        x_offset,
        x_inc,
    )
}

/// Zero-based index of the first largest element (real part for complex).
pub fn max<T: Scalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<u32>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    index_of(
        ctx,
        "max",
        Extremum::Max,
        n,
        out,
        out_offset,
        x,
        x_offset,
        x_inc,
    )
}

/// Zero-based index of the first smallest element (real part for complex).
pub fn min<T: Scalar>(
    ctx: &Context,
    n: usize,
    out: &Buffer<u32>,
    out_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    index_of(
        ctx,
        "min",
        Extremum::Min,
        n,
        out,
        out_offset,
        x,
        x_offset,
        x_inc,
    )
}
