//! Netlib-style interface on host slices.
//!
//! Each call uploads its operands to buffers of a process-wide default
//! context, runs the buffer routine and downloads the outputs. This is
//! convenient but copies every operand on every call. Matrices are
//! column-major and increments are positive.

use std::sync::OnceLock;

use crate::context::{Buffer, Context};
use crate::device::DeviceSpec;
use crate::error::Result;
use crate::precision::{RealScalar, Scalar};
use crate::types::{Diagonal, Layout, Side, Transpose, Triangle};

/// The context all Netlib-style calls run on.
pub fn default_context() -> &'static Context {
    static CTX: OnceLock<Context> = OnceLock::new();
    CTX.get_or_init(|| {
        Context::new(DeviceSpec::host_default()).expect("the host device profile is valid")
    })
}

fn up<T: Scalar>(host: &[T]) -> Buffer<T> {
    default_context().upload(host)
}

fn down<T: Scalar>(buf: &Buffer<T>, host: &mut [T]) {
    host.copy_from_slice(&buf.to_vec());
}

/// y = alpha * x + y
pub fn axpy<T: Scalar>(
    n: usize,
    alpha: T,
    x: &[T],
    incx: usize,
    y: &mut [T],
    incy: usize,
) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let (xb, yb) = (up(x), up(y));
    super::axpy(default_context(), n, alpha, &xb, 0, incx, &yb, 0, incy)?;
    down(&yb, y);
    Ok(())
}

/// x = alpha * x
pub fn scal<T: Scalar>(n: usize, alpha: T, x: &mut [T], incx: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let xb = up(x);
    super::scal(default_context(), n, alpha, &xb, 0, incx)?;
    down(&xb, x);
    Ok(())
}

/// y = x
pub fn copy<T: Scalar>(n: usize, x: &[T], incx: usize, y: &mut [T], incy: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let (xb, yb) = (up(x), up(y));
    super::copy(default_context(), n, &xb, 0, incx, &yb, 0, incy)?;
    down(&yb, y);
    Ok(())
}

/// Returns x . y
pub fn dot<T: RealScalar>(n: usize, x: &[T], incx: usize, y: &[T], incy: usize) -> Result<T> {
    if n == 0 {
        return Ok(T::zero());
    }
    let ctx = default_context();
    let (xb, yb, out) = (up(x), up(y), ctx.alloc::<T>(1));
    super::dot(ctx, n, &out, 0, &xb, 0, incx, &yb, 0, incy)?;
    Ok(out.to_vec()[0])
}

/// Returns the Euclidean norm of x.
pub fn nrm2<T: Scalar>(n: usize, x: &[T], incx: usize) -> Result<T> {
    if n == 0 {
        return Ok(T::zero());
    }
    let ctx = default_context();
    let (xb, out) = (up(x), ctx.alloc::<T>(1));
    super::nrm2(ctx, n, &out, 0, &xb, 0, incx)?;
    Ok(out.to_vec()[0])
}

/// Returns the sum of |re| + |im| over x.
pub fn asum<T: Scalar>(n: usize, x: &[T], incx: usize) -> Result<T> {
    if n == 0 {
        return Ok(T::zero());
    }
    let ctx = default_context();
    let (xb, out) = (up(x), ctx.alloc::<T>(1));
    super::asum(ctx, n, &out, 0, &xb, 0, incx)?;
    Ok(out.to_vec()[0])
}

/// One-based index of the first element of largest |re| + |im|, or 0 for
/// an empty vector, as in Netlib.
pub fn iamax<T: Scalar>(n: usize, x: &[T], incx: usize) -> Result<usize> {
    if n == 0 {
        return Ok(0);
    }
    let ctx = default_context();
    let (xb, out) = (up(x), ctx.alloc::<u32>(1));
    super::amax(ctx, n, &out, 0, &xb, 0, incx)?;
    Ok(out.to_vec()[0] as usize + 1)
}

/// y = alpha * op(A) * x + beta * y
#[allow(clippy::too_many_arguments)]
pub fn gemv<T: Scalar>(
    trans: Transpose,
    m: usize,
    n: usize,
    alpha: T,
    a: &[T],
    lda: usize,
    x: &[T],
    incx: usize,
    beta: T,
    y: &mut [T],
    incy: usize,
) -> Result<()> {
    let ylen = if trans.is_transposed() { n } else { m };
    if ylen == 0 {
        return Ok(());
    }
    let (ab, xb, yb) = (up(a), up(x), up(y));
    super::gemv(
        default_context(),
        Layout::ColMajor,
        trans,
        m,
        n,
        alpha,
        &ab,
        0,
        lda,
        &xb,
        0,
        incx,
        beta,
        &yb,
        0,
        incy,
    )?;
    down(&yb, y);
    Ok(())
}

/// A = alpha * x * y^T + A
#[allow(clippy::too_many_arguments)]
pub fn ger<T: RealScalar>(
    m: usize,
    n: usize,
    alpha: T,
    x: &[T],
    incx: usize,
    y: &[T],
    incy: usize,
    a: &mut [T],
    lda: usize,
) -> Result<()> {
    if m == 0 || n == 0 {
        return Ok(());
    }
    let (xb, yb, ab) = (up(x), up(y), up(a));
    super::ger(
        default_context(),
        Layout::ColMajor,
        m,
        n,
        alpha,
        &xb,
        0,
        incx,
        &yb,
        0,
        incy,
        &ab,
        0,
        lda,
    )?;
    down(&ab, a);
    Ok(())
}

/// C = alpha * op(A) * op(B) + beta * C
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    transa: Transpose,
    transb: Transpose,
    m: usize,
    n: usize,
    k: usize,
    alpha: T,
    a: &[T],
    lda: usize,
    b: &[T],
    ldb: usize,
    beta: T,
    c: &mut [T],
    ldc: usize,
) -> Result<()> {
    if m == 0 || n == 0 {
        return Ok(());
    }
    let (ab, bb, cb) = (up(a), up(b), up(c));
    super::gemm(
        default_context(),
        Layout::ColMajor,
        transa,
        transb,
        m,
        n,
        k,
        alpha,
        &ab,
        0,
        lda,
        &bb,
        0,
        ldb,
        beta,
        &cb,
        0,
        ldc,
    )?;
    down(&cb, c);
    Ok(())
}

/// Solves op(A) * x = b in place.
#[allow(clippy::too_many_arguments)]
pub fn trsv<T: Scalar>(
    uplo: Triangle,
    trans: Transpose,
    diag: Diagonal,
    n: usize,
    a: &[T],
    lda: usize,
    x: &mut [T],
    incx: usize,
) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let (ab, xb) = (up(a), up(x));
    super::trsv(
        default_context(),
        Layout::ColMajor,
        uplo,
        trans,
        diag,
        n,
        &ab,
        0,
        lda,
        &xb,
        0,
        incx,
    )?;
    down(&xb, x);
    Ok(())
}

/// Solves op(A) * X = alpha * B or X * op(A) = alpha * B in place.
#[allow(clippy::too_many_arguments)]
pub fn trsm<T: Scalar>(
    side: Side,
    uplo: Triangle,
    transa: Transpose,
    diag: Diagonal,
    m: usize,
    n: usize,
    alpha: T,
    a: &[T],
    lda: usize,
    b: &mut [T],
    ldb: usize,
) -> Result<()> {
    if m == 0 || n == 0 {
        return Ok(());
    }
    let (ab, bb) = (up(a), up(b));
    super::trsm(
        default_context(),
        Layout::ColMajor,
        side,
        uplo,
        transa,
        diag,
        m,
        n,
        alpha,
        &ab,
        0,
        lda,
        &bb,
        0,
        ldb,
    )?;
    down(&bb, b);
    Ok(())
}

pub fn saxpy(
    n: usize,
    alpha: f32,
    x: &[f32],
    incx: usize,
    y: &mut [f32],
    incy: usize,
) -> Result<()> {
    axpy(n, alpha, x, incx, y, incy)
}

pub fn daxpy(
    n: usize,
    alpha: f64,
    x: &[f64],
    incx: usize,
    y: &mut [f64],
    incy: usize,
) -> Result<()> {
    axpy(n, alpha, x, incx, y, incy)
}

#[allow(clippy::too_many_arguments)]
pub fn sgemm(
    transa: Transpose,
    transb: Transpose,
    m: usize,
    n: usize,
    k: usize,
    alpha: f32,
    a: &[f32],
    lda: usize,
    b: &[f32],
    ldb: usize,
    beta: f32,
    c: &mut [f32],
    ldc: usize,
) -> Result<()> {
    gemm(transa, transb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc)
}

#[allow(clippy::too_many_arguments)]
pub fn dgemm(
    transa: Transpose,
    transb: Transpose,
    m: usize,
    n: usize,
    k: usize,
    alpha: f64,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) -> Result<()> {
    gemm(transa, transb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc)
}
