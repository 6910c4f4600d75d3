//! Level-2 routines. Every matrix-vector product runs on the gemv kernel and
//! every rank update on the ger kernel; the variants differ only in the
//! access adapter handed to the kernel.

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::kernels::adapter::{AccessAdapter, Structure};
use crate::kernels::gemv::{run_gemv, GemvJob};
use crate::kernels::ger::{run_ger, GerJob};
use crate::kernels::params::{ArgsSig, KernelFamily};
use crate::precision::{ComplexScalar, Field, RealOf, RealScalar, Scalar};
use crate::types::{Diagonal, Layout, Transpose, Triangle};

use super::common::{check_matrix, check_vector, MatPos, VecPos, Vector};
use super::level3::solve_triangular;

/// Positions of (a, a_offset, lda), (x, x_offset, x_inc), (y, y_offset, y_inc).
struct MvPos {
    a: MatPos,
    x: VecPos,
    y: VecPos,
}

#[allow(clippy::too_many_arguments)]
fn mv<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    pos: MvPos,
    adapter: AccessAdapter,
    trans: Transpose,
    alpha: T,
    a: &Buffer<T>,
    x: Vector<'_, T>,
    beta: T,
    y: Vector<'_, T>,
) -> Result<()> {
    let (rows, cols) = if trans.is_transposed() {
        (adapter.cols, adapter.rows)
    } else {
        (adapter.rows, adapter.cols)
    };
    check_matrix(ctx, routine, "A", pos.a, a, &adapter)?;
    check_vector(ctx, routine, "x", pos.x, &x, cols)?;
    check_vector(ctx, routine, "y", pos.y, &y, rows)?;
    if rows == 0 {
        return Ok(());
    }
    let config = ctx.resolve(
        KernelFamily::Gemv,
        T::PRECISION,
        ArgsSig::matrix(adapter.rows, adapter.cols),
    )?;
    let xs = x.gather(cols);
    let ys = if beta == T::zero() {
        vec![T::zero(); rows]
    } else {
        y.gather(rows)
    };
    let out = {
        let data = a.data();
        let job = GemvJob {
            a: &data,
            adapter,
            trans,
            rows,
            cols,
            x: &xs,
            alpha: alpha.to_acc(),
            beta: beta.to_acc(),
            y: &ys,
        };
        run_gemv(ctx, &config, &job)?
    };
    y.scatter(&out);
    Ok(())
}

/// In-place x = op(A) x for triangular A.
fn tmv<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    pos: (MatPos, VecPos),
    adapter: AccessAdapter,
    trans: Transpose,
    a: &Buffer<T>,
    x: Vector<'_, T>,
) -> Result<()> {
    let n = adapter.rows;
    check_matrix(ctx, routine, "A", pos.0, a, &adapter)?;
    check_vector(ctx, routine, "x", pos.1, &x, n)?;
    if n == 0 {
        return Ok(());
    }
    let config = ctx.resolve(KernelFamily::Gemv, T::PRECISION, ArgsSig::matrix(n, n))?;
    let xs = x.gather(n);
    let zeros = vec![T::zero(); n];
    let out = {
        let data = a.data();
        let job = GemvJob {
            a: &data,
            adapter,
            trans,
            rows: n,
            cols: n,
            x: &xs,
            alpha: T::Acc::one(),
            beta: T::Acc::zero(),
            y: &zeros,
        };
        run_gemv(ctx, &config, &job)?
    };
    x.scatter(&out);
    Ok(())
}

fn band_check(
    routine: &'static str,
    index: usize,
    name: &'static str,
    k: usize,
    n: usize,
) -> Result<()> {
    if n > 0 && k >= n {
        return Err(Error::arg(
            routine,
            index,
            name,
            format!("band width {k} must be smaller than {n}"),
        ));
    }
    Ok(())
}

fn vec_of<T: Scalar>(buf: &Buffer<T>, offset: usize, inc: usize) -> Vector<'_, T> {
    Vector { buf, offset, inc }
}

/// y = alpha * op(A) * x + beta * y
#[allow(clippy::too_many_arguments)]
pub fn gemv<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    a_transpose: Transpose,
    m: usize,
    n: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    beta: T,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    mv(
        ctx,
        "gemv",
        MvPos {
            a: (6, 7, 8),
            x: (9, 10, 11),
            y: (13, 14, 15),
        },
        AccessAdapter::general(layout, m, n, a_offset, a_ld),
        a_transpose,
        alpha,
        a,
        vec_of(x, x_offset, x_inc),
        beta,
        vec_of(y, y_offset, y_inc),
    )
}

/// Banded matrix-vector product with `kl` sub- and `ku` super-diagonals.
#[allow(clippy::too_many_arguments)]
pub fn gbmv<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    a_transpose: Transpose,
    m: usize,
    n: usize,
    kl: usize,
    ku: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    beta: T,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
) -> Result<()> {
    band_check("gbmv", 5, "kl", kl, m)?;
    band_check("gbmv", 6, "ku", ku, n)?;
    mv(
        ctx,
        "gbmv",
        MvPos {
            a: (8, 9, 10),
            x: (11, 12, 13),
            y: (15, 16, 17),
        },
        AccessAdapter::banded(layout, m, n, kl, ku, a_offset, a_ld),
        a_transpose,
        alpha,
        a,
        vec_of(x, x_offset, x_inc),
        beta,
        vec_of(y, y_offset, y_inc),
    )
}

#[allow(clippy::too_many_arguments)]
fn square_mv<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    adapter: AccessAdapter,
    alpha: T,
    a: &Buffer<T>,
    pos: MvPos,
    x: Vector<'_, T>,
    beta: T,
    y: Vector<'_, T>,
) -> Result<()> {
    mv(
        ctx,
        routine,
        pos,
        adapter,
        Transpose::No,
        alpha,
        a,
        x,
        beta,
        y,
    )
}

macro_rules! full_mv {
    ($(#[$doc:meta])* $name:ident, $bound:ident, $structure:ident) => {
        $(#[$doc])*
        #[allow(clippy::too_many_arguments)]
        pub fn $name<T: $bound>(
            ctx: &Context,
            layout: Layout,
            triangle: Triangle,
            n: usize,
            alpha: T,
            a: &Buffer<T>,
            a_offset: usize,
            a_ld: usize,
            x: &Buffer<T>,
            x_offset: usize,
            x_inc: usize,
            beta: T,
            y: &Buffer<T>,
            y_offset: usize,
            y_inc: usize,
        ) -> Result<()> {
            square_mv(
                ctx,
                stringify!($name),
                AccessAdapter::square(layout, n, Structure::$structure(triangle), a_offset, a_ld),
                alpha,
                a,
                MvPos { a: (5, 6, 7), x: (8, 9, 10), y: (12, 13, 14) },
                vec_of(x, x_offset, x_inc),
                beta,
                vec_of(y, y_offset, y_inc),
            )
        }
    };
}

macro_rules! band_mv {
    ($(#[$doc:meta])* $name:ident, $bound:ident, $structure:ident) => {
        $(#[$doc])*
        #[allow(clippy::too_many_arguments)]
        pub fn $name<T: $bound>(
            ctx: &Context,
            layout: Layout,
            triangle: Triangle,
            n: usize,
            k: usize,
            alpha: T,
            a: &Buffer<T>,
            a_offset: usize,
            a_ld: usize,
            x: &Buffer<T>,
            x_offset: usize,
            x_inc: usize,
            beta: T,
            y: &Buffer<T>,
            y_offset: usize,
            y_inc: usize,
        ) -> Result<()> {
            band_check(stringify!($name), 4, "k", k, n)?;
            square_mv(
                ctx,
                stringify!($name),
                AccessAdapter::square_banded(layout, n, k, Structure::$structure(triangle), a_offset, a_ld),
                alpha,
                a,
                MvPos { a: (6, 7, 8), x: (9, 10, 11), y: (13, 14, 15) },
                vec_of(x, x_offset, x_inc),
                beta,
                vec_of(y, y_offset, y_inc),
            )
        }
    };
}

macro_rules! packed_mv {
    ($(#[$doc:meta])* $name:ident, $bound:ident, $structure:ident) => {
        $(#[$doc])*
        #[allow(clippy::too_many_arguments)]
        pub fn $name<T: $bound>(
            ctx: &Context,
            layout: Layout,
            triangle: Triangle,
            n: usize,
            alpha: T,
            ap: &Buffer<T>,
            ap_offset: usize,
            x: &Buffer<T>,
            x_offset: usize,
            x_inc: usize,
            beta: T,
            y: &Buffer<T>,
            y_offset: usize,
            y_inc: usize,
        ) -> Result<()> {
            square_mv(
                ctx,
                stringify!($name),
                AccessAdapter::packed(layout, n, Structure::$structure(triangle), ap_offset),
                alpha,
                ap,
                MvPos { a: (5, 6, 0), x: (7, 8, 9), y: (11, 12, 13) },
                vec_of(x, x_offset, x_inc),
                beta,
                vec_of(y, y_offset, y_inc),
            )
        }
    };
}

full_mv!(
    /// y = alpha * A * x + beta * y, A hermitian, one triangle stored.
    hemv, ComplexScalar, Hermitian
);
full_mv!(
    /// y = alpha * A * x + beta * y, A symmetric, one triangle stored.
    symv, RealScalar, Symmetric
);
band_mv!(
    /// Hermitian band matrix-vector product with `k` off-diagonals.
    hbmv, ComplexScalar, Hermitian
);
band_mv!(
    /// Symmetric band matrix-vector product with `k` off-diagonals.
    sbmv, RealScalar, Symmetric
);
packed_mv!(
    /// Hermitian packed matrix-vector product.
    hpmv, ComplexScalar, Hermitian
);
packed_mv!(
    /// Symmetric packed matrix-vector product.
    spmv, RealScalar, Symmetric
);

/// x = op(A) x, A triangular.
#[allow(clippy::too_many_arguments)]
pub fn trmv<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    a_transpose: Transpose,
    diagonal: Diagonal,
    n: usize,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let adapter = AccessAdapter::square(
        layout,
        n,
        Structure::Triangular(triangle, diagonal),
        a_offset,
        a_ld,
    );
    tmv(
        ctx,
        "trmv",
        ((6, 7, 8), (9, 10, 11)),
        adapter,
        a_transpose,
        a,
        vec_of(x, x_offset, x_inc),
    )
}

/// x = op(A) x, A triangular band with `k` off-diagonals.
#[allow(clippy::too_many_arguments)]
pub fn tbmv<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    a_transpose: Transpose,
    diagonal: Diagonal,
    n: usize,
    k: usize,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    band_check("tbmv", 6, "k", k, n)?;
    let adapter = AccessAdapter::square_banded(
        layout,
        n,
        k,
        Structure::Triangular(triangle, diagonal),
        a_offset,
        a_ld,
    );
    tmv(
        ctx,
        "tbmv",
        ((7, 8, 9), (10, 11, 12)),
        adapter,
        a_transpose,
        a,
        vec_of(x, x_offset, x_inc),
    )
}

/// x = op(A) x, A triangular packed.
#[allow(clippy::too_many_arguments)]
pub fn tpmv<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    a_transpose: Transpose,
    diagonal: Diagonal,
    n: usize,
    ap: &Buffer<T>,
    ap_offset: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let adapter = AccessAdapter::packed(
        layout,
        n,
        Structure::Triangular(triangle, diagonal),
        ap_offset,
    );
    tmv(
        ctx,
        "tpmv",
        ((6, 7, 0), (8, 9, 10)),
        adapter,
        a_transpose,
        ap,
        vec_of(x, x_offset, x_inc),
    )
}

/// Solves op(A) x = b in place; b is passed in x.
#[allow(clippy::too_many_arguments)]
pub fn trsv<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    a_transpose: Transpose,
    diagonal: Diagonal,
    n: usize,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
) -> Result<()> {
    let adapter = AccessAdapter::square(
        layout,
        n,
        Structure::Triangular(triangle, diagonal),
        a_offset,
        a_ld,
    );
    let xv = vec_of(x, x_offset, x_inc);
    check_matrix(ctx, "trsv", "A", (6, 7, 8), a, &adapter)?;
    check_vector(ctx, "trsv", "x", (9, 10, 11), &xv, n)?;
    if n == 0 {
        return Ok(());
    }
    let rhs = xv.gather(n);
    let solved = {
        let data = a.data();
        solve_triangular(ctx, &adapter, &data, a_transpose, rhs, 1)?
    };
    xv.scatter(&solved);
    Ok(())
}

fn rank_update<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    a_pos: MatPos,
    adapter: AccessAdapter,
    a: &Buffer<T>,
    job: GerJob<'_, T>,
) -> Result<()> {
    check_matrix(ctx, routine, "A", a_pos, a, &adapter)?;
    if job.m == 0 || job.n == 0 {
        return Ok(());
    }
    let config = ctx.resolve(
        KernelFamily::Ger,
        T::PRECISION,
        ArgsSig::matrix(job.m, job.n),
    )?;
    let updates = {
        let data = a.data();
        run_ger(ctx, &config, &job, &data, &adapter)?
    };
    let mut data = a.data_mut();
    for (p, v) in updates {
        data[p] = v;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn general_rank1<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    conj: bool,
    layout: Layout,
    m: usize,
    n: usize,
    alpha: T,
    x: Vector<'_, T>,
    y: Vector<'_, T>,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
) -> Result<()> {
    check_vector(ctx, routine, "x", (5, 6, 7), &x, m)?;
    check_vector(ctx, routine, "y", (8, 9, 10), &y, n)?;
    let (xs, ys) = (x.gather(m), y.gather(n));
    let job = GerJob {
        m,
        n,
        alpha: alpha.to_acc(),
        x: &xs,
        y: &ys,
        conj,
        alpha2: None,
        real_diagonal: false,
    };
    let adapter = AccessAdapter::general(layout, m, n, a_offset, a_ld);
    rank_update(ctx, routine, (11, 12, 13), adapter, a, job)
}

macro_rules! ger_variant {
    ($(#[$doc:meta])* $name:ident, $bound:ident, $conj:expr) => {
        $(#[$doc])*
        #[allow(clippy::too_many_arguments)]
        pub fn $name<T: $bound>(
            ctx: &Context,
            layout: Layout,
            m: usize,
            n: usize,
            alpha: T,
            x: &Buffer<T>,
            x_offset: usize,
            x_inc: usize,
            y: &Buffer<T>,
            y_offset: usize,
            y_inc: usize,
            a: &Buffer<T>,
            a_offset: usize,
            a_ld: usize,
        ) -> Result<()> {
            general_rank1(
                ctx,
                stringify!($name),
                $conj,
                layout,
                m,
                n,
                alpha,
                vec_of(x, x_offset, x_inc),
                vec_of(y, y_offset, y_inc),
                a,
                a_offset,
                a_ld,
            )
        }
    };
}

ger_variant!(
    /// A += alpha * x * y^T
    ger, RealScalar, false
);
ger_variant!(
    /// A += alpha * x * y^T for complex vectors.
    geru, ComplexScalar, false
);
ger_variant!(
    /// A += alpha * x * y^H
    gerc, ComplexScalar, true
);

/// Shared body of the symmetric and hermitian rank-1 and rank-2 updates.
#[allow(clippy::too_many_arguments)]
fn sym_update<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    hermitian: bool,
    n: usize,
    alpha: T::Acc,
    x: (Vector<'_, T>, VecPos),
    y: Option<(Vector<'_, T>, VecPos)>,
    a: &Buffer<T>,
    a_pos: MatPos,
    adapter: AccessAdapter,
) -> Result<()> {
    check_vector(ctx, routine, "x", x.1, &x.0, n)?;
    if let Some((yv, pos)) = &y {
        check_vector(ctx, routine, "y", *pos, yv, n)?;
    }
    let xs = x.0.gather(n);
    let ys = y.as_ref().map(|(v, _)| v.gather(n));
    let alpha2 = ys
        .as_ref()
        .map(|_| if hermitian { alpha.conj() } else { alpha });
    let job = GerJob {
        m: n,
        n,
        alpha,
        x: &xs,
        y: ys.as_deref().unwrap_or(&xs),
        conj: hermitian,
        alpha2,
        real_diagonal: hermitian,
    };
    rank_update(ctx, routine, a_pos, adapter, a, job)
}

/// A += alpha * x * x^H, A hermitian with one triangle stored.
#[allow(clippy::too_many_arguments)]
pub fn her<T: ComplexScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: RealOf<T>,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "her",
        true,
        n,
        T::Acc::from_real(alpha),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        None,
        a,
        (8, 9, 10),
        AccessAdapter::square(layout, n, Structure::Hermitian(triangle), a_offset, a_ld),
    )
}

/// A += alpha * x * x^H, A hermitian packed.
#[allow(clippy::too_many_arguments)]
pub fn hpr<T: ComplexScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: RealOf<T>,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    ap: &Buffer<T>,
    ap_offset: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "hpr",
        true,
        n,
        T::Acc::from_real(alpha),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        None,
        ap,
        (8, 9, 0),
        AccessAdapter::packed(layout, n, Structure::Hermitian(triangle), ap_offset),
    )
}

/// A += alpha * x * y^H + conj(alpha) * y * x^H, A hermitian.
#[allow(clippy::too_many_arguments)]
pub fn her2<T: ComplexScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "her2",
        true,
        n,
        alpha.to_acc(),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        Some((vec_of(y, y_offset, y_inc), (8, 9, 10))),
        a,
        (11, 12, 13),
        AccessAdapter::square(layout, n, Structure::Hermitian(triangle), a_offset, a_ld),
    )
}

/// A += alpha * x * y^H + conj(alpha) * y * x^H, A hermitian packed.
#[allow(clippy::too_many_arguments)]
pub fn hpr2<T: ComplexScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
    ap: &Buffer<T>,
    ap_offset: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "hpr2",
        true,
        n,
        alpha.to_acc(),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        Some((vec_of(y, y_offset, y_inc), (8, 9, 10))),
        ap,
        (11, 12, 0),
        AccessAdapter::packed(layout, n, Structure::Hermitian(triangle), ap_offset),
    )
}

/// A += alpha * x * x^T, A symmetric.
#[allow(clippy::too_many_arguments)]
pub fn syr<T: RealScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "syr",
        false,
        n,
        alpha.to_acc(),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        None,
        a,
        (8, 9, 10),
        AccessAdapter::square(layout, n, Structure::Symmetric(triangle), a_offset, a_ld),
    )
}

/// A += alpha * x * x^T, A symmetric packed.
#[allow(clippy::too_many_arguments)]
pub fn spr<T: RealScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    ap: &Buffer<T>,
    ap_offset: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "spr",
        false,
        n,
        alpha.to_acc(),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        None,
        ap,
        (8, 9, 0),
        AccessAdapter::packed(layout, n, Structure::Symmetric(triangle), ap_offset),
    )
}

/// A += alpha * x * y^T + alpha * y * x^T, A symmetric.
#[allow(clippy::too_many_arguments)]
pub fn syr2<T: RealScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "syr2",
        false,
        n,
        alpha.to_acc(),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        Some((vec_of(y, y_offset, y_inc), (8, 9, 10))),
        a,
        (11, 12, 13),
        AccessAdapter::square(layout, n, Structure::Symmetric(triangle), a_offset, a_ld),
    )
}

/// A += alpha * x * y^T + alpha * y * x^T, A symmetric packed.
#[allow(clippy::too_many_arguments)]
pub fn spr2<T: RealScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    n: usize,
    alpha: T,
    x: &Buffer<T>,
    x_offset: usize,
    x_inc: usize,
    y: &Buffer<T>,
    y_offset: usize,
    y_inc: usize,
    ap: &Buffer<T>,
    ap_offset: usize,
) -> Result<()> {
    sym_update(
        ctx,
        "spr2",
        false,
        n,
        alpha.to_acc(),
        (vec_of(x, x_offset, x_inc), (5, 6, 7)),
        Some((vec_of(y, y_offset, y_inc), (8, 9, 10))),
        ap,
        (11, 12, 0),
        AccessAdapter::packed(layout, n, Structure::Symmetric(triangle), ap_offset),
    )
}
