//! Level-3 routines. All of them end in [`gemm_core`], which routes a
//! product to the direct kernel or to the pad, multiply, unpad pipeline
//! around the indirect kernel. Structured operands are first materialised
//! into general storage with the transform kernel.

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::kernels::adapter::{AccessAdapter, Structure};
use crate::kernels::gemm::{
    run_direct, run_indirect, DirectInstance, DirectJob, IndirectInstance, IndirectJob,
};
use crate::kernels::params::{ArgsSig, GemmParams, KernelFamily};
use crate::kernels::transform::{run_transform_job, TransformInstance, TransformJob};
use crate::precision::{ComplexScalar, Field, RealOf, Scalar};
use crate::types::{Diagonal, Layout, Side, Transpose, Triangle};

use super::common::{check_matrix, hold};

/// An input matrix of a product: `op(X) = conj?(trans?(X))`, with X stored
/// in the layout of the call.
#[derive(Clone, Copy)]
pub(crate) struct Operand<'a, T> {
    pub data: &'a [T],
    pub ld: usize,
    pub trans: bool,
    pub conj: bool,
}

/// Storage offsets and scalars of one product.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Instance<A> {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub alpha: A,
    pub beta: A,
}

/// Restricts the writes to one triangle of C.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Mask {
    pub triangle: Triangle,
    pub real_diagonal: bool,
}

fn round_up(x: usize, to: usize) -> usize {
    x.div_ceil(to) * to
}

fn real_part<T: Scalar>(v: T) -> T {
    T::from_acc(T::Acc::from_real(v.to_acc().re()))
}

/// C = alpha * op(A) * op(B) + beta * C for every instance.
///
/// C must not share a buffer with the operand data; callers copy aliased
/// inputs first (see [`hold`]).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_core<T: Scalar>(
    ctx: &Context,
    family: KernelFamily,
    layout: Layout,
    m: usize,
    n: usize,
    k: usize,
    a: Operand<'_, T>,
    b: Operand<'_, T>,
    c: &Buffer<T>,
    ldc: usize,
    instances: &[Instance<T::Acc>],
    mask: Option<Mask>,
) -> Result<()> {
    if m == 0 || n == 0 || instances.is_empty() {
        return Ok(());
    }
    let config = ctx.resolve(family, T::PRECISION, ArgsSig::mnk(m, n, k))?;
    // Row-major C is the column-major C^T = op(B)^T op(A)^T.
    let (m, n, a, b, instances, mask) = match layout {
        Layout::ColMajor => (m, n, a, b, instances.to_vec(), mask),
        Layout::RowMajor => (
            n,
            m,
            b,
            a,
            instances
                .iter()
                .map(|i| Instance {
                    a: i.b,
                    b: i.a,
                    ..*i
                })
                .collect(),
            mask.map(|mk| Mask {
                triangle: mk.triangle.flip(),
                ..mk
            }),
        ),
    };
    if mask.is_some() && instances.len() != 1 {
        return Err(Error::usage("masked products take a single instance"));
    }

    if m.max(n).max(k) < ctx.direct_threshold() {
        let direct: Vec<DirectInstance<T::Acc>> = instances
            .iter()
            .map(|i| DirectInstance {
                a_offset: i.a,
                b_offset: i.b,
                c_offset: i.c,
                alpha: i.alpha,
                beta: i.beta,
            })
            .collect();
        let updates = {
            let cd = c.data();
            let job = DirectJob {
                m,
                n,
                k,
                a: a.data,
                lda: a.ld,
                a_trans: a.trans,
                a_conj: a.conj,
                b: b.data,
                ldb: b.ld,
                b_trans: b.trans,
                b_conj: b.conj,
                c: &cd,
                ldc,
                instances: &direct,
            };
            run_direct(ctx, family, &config, &job)?
        };
        let mut cd = c.data_mut();
        match mask {
            None => {
                for (p, v) in updates {
                    cd[p] = v;
                }
            }
            Some(mk) => {
                let base = instances[0].c;
                for (p, v) in updates {
                    let (i, j) = ((p - base) % ldc, (p - base) / ldc);
                    if mk.triangle.contains(i, j) {
                        cd[p] = if mk.real_diagonal && i == j {
                            real_part(v)
                        } else {
                            v
                        };
                    }
                }
            }
        }
        return Ok(());
    }

    let p = GemmParams::from_config(&config)?;
    let (mp, np, kp) = (round_up(m, p.mwg), round_up(n, p.nwg), round_up(k, p.kwg));
    let batch = instances.len();
    let one = T::Acc::one();

    // op(A) padded to mp x kp.
    let mut a_pad = vec![T::zero(); batch * mp * kp];
    let (ar, ac) = if a.trans { (k, m) } else { (m, k) };
    let a_inst: Vec<_> = instances
        .iter()
        .enumerate()
        .map(|(z, i)| TransformInstance {
            src: AccessAdapter::general(Layout::ColMajor, ar, ac, i.a, a.ld),
            dst_offset: z * mp * kp,
            alpha: one,
        })
        .collect();
    let tcfg = ctx.resolve(
        KernelFamily::Transform,
        T::PRECISION,
        ArgsSig::matrix(mp, kp),
    )?;
    let job = TransformJob {
        src: a.data,
        instances: &a_inst,
        rows: mp,
        cols: kp,
        ld: mp,
        transpose: a.trans,
        conj: a.conj,
        pad: T::zero(),
    };
    run_transform_job(ctx, &tcfg, &job, &mut a_pad)?;

    // op(B)^T padded to np x kp.
    let mut b_pad = vec![T::zero(); batch * np * kp];
    let (br, bc) = if b.trans { (n, k) } else { (k, n) };
    let b_inst: Vec<_> = instances
        .iter()
        .enumerate()
        .map(|(z, i)| TransformInstance {
            src: AccessAdapter::general(Layout::ColMajor, br, bc, i.b, b.ld),
            dst_offset: z * np * kp,
            alpha: one,
        })
        .collect();
    let tcfg = ctx.resolve(
        KernelFamily::Transform,
        T::PRECISION,
        ArgsSig::matrix(np, kp),
    )?;
    let job = TransformJob {
        src: b.data,
        instances: &b_inst,
        rows: np,
        cols: kp,
        ld: np,
        transpose: !b.trans,
        conj: b.conj,
        pad: T::zero(),
    };
    run_transform_job(ctx, &tcfg, &job, &mut b_pad)?;

    let mut c_pad = vec![T::zero(); batch * mp * np];
    let c_cfg = ctx.resolve(KernelFamily::Transform, T::PRECISION, ArgsSig::matrix(m, n))?;
    if instances.iter().any(|i| !i.beta.is_zero()) {
        let c_inst: Vec<_> = instances
            .iter()
            .enumerate()
            .map(|(z, i)| TransformInstance {
                src: AccessAdapter::general(Layout::ColMajor, m, n, i.c, ldc),
                dst_offset: z * mp * np,
                alpha: one,
            })
            .collect();
        let cd = c.data();
        let job = TransformJob {
            src: &cd,
            instances: &c_inst,
            rows: mp,
            cols: np,
            ld: mp,
            transpose: false,
            conj: false,
            pad: T::zero(),
        };
        run_transform_job(ctx, &c_cfg, &job, &mut c_pad)?;
    }

    let ind: Vec<_> = instances
        .iter()
        .enumerate()
        .map(|(z, i)| IndirectInstance {
            a: z * mp * kp,
            b: z * np * kp,
            c: z * mp * np,
            alpha: i.alpha,
            beta: i.beta,
        })
        .collect();
    let job = IndirectJob {
        m: mp,
        n: np,
        k: kp,
        a: &a_pad,
        b: &b_pad,
        instances: &ind,
    };
    run_indirect(ctx, family, &config, &job, &mut c_pad)?;

    let mut cd = c.data_mut();
    match mask {
        None => {
            let out_inst: Vec<_> = instances
                .iter()
                .enumerate()
                .map(|(z, i)| TransformInstance {
                    src: AccessAdapter::general(Layout::ColMajor, mp, np, z * mp * np, mp),
                    dst_offset: i.c,
                    alpha: one,
                })
                .collect();
            let job = TransformJob {
                src: &c_pad,
                instances: &out_inst,
                rows: m,
                cols: n,
                ld: ldc,
                transpose: false,
                conj: false,
                pad: T::zero(),
            };
            run_transform_job(ctx, &c_cfg, &job, &mut cd)?;
        }
        Some(mk) => {
            let base = instances[0].c;
            for j in 0..n {
                for i in 0..m {
                    if mk.triangle.contains(i, j) {
                        let v = c_pad[i + j * mp];
                        cd[base + i + j * ldc] = if mk.real_diagonal && i == j {
                            real_part(v)
                        } else {
                            v
                        };
                    }
                }
            }
        }
    }
    Ok(())
}

/// Dense column-major copy of `conj?(trans?(A))` for a square structured A.
fn materialize<T: Scalar>(
    ctx: &Context,
    adapter: &AccessAdapter,
    data: &[T],
    transpose: bool,
    conj: bool,
) -> Result<Vec<T>> {
    let n = adapter.rows;
    let mut out = vec![T::zero(); n * n];
    if n == 0 {
        return Ok(out);
    }
    let cfg = ctx.resolve(KernelFamily::Transform, T::PRECISION, ArgsSig::matrix(n, n))?;
    let inst = [TransformInstance {
        src: *adapter,
        dst_offset: 0,
        alpha: T::Acc::one(),
    }];
    let job = TransformJob {
        src: data,
        instances: &inst,
        rows: n,
        cols: n,
        ld: n,
        transpose,
        conj,
        pad: T::zero(),
    };
    run_transform_job(ctx, &cfg, &job, &mut out)?;
    Ok(out)
}

/// A materialised column-major matrix seen as an operand of a call in `layout`.
fn dense_operand<T>(data: &[T], n: usize, layout: Layout, trans: Transpose) -> Operand<'_, T> {
    Operand {
        data,
        ld: n.max(1),
        trans: trans.is_transposed() != (layout == Layout::RowMajor),
        conj: trans.is_conjugated(),
    }
}

const TRSM_BLOCK: usize = 16;

/// Solves `conj?(trans?(A)) X = R` for triangular A by blocked substitution:
/// each diagonal block is solved on the host and the remaining rows are
/// updated with the gemm kernel. `rhs` is `n x nrhs`, column-major.
pub(crate) fn solve_triangular<T: Scalar>(
    ctx: &Context,
    adapter: &AccessAdapter,
    data: &[T],
    transpose: Transpose,
    rhs: Vec<T>,
    nrhs: usize,
) -> Result<Vec<T>> {
    solve_op(
        ctx,
        adapter,
        data,
        transpose.is_transposed(),
        transpose.is_conjugated(),
        rhs,
        nrhs,
    )
}

fn solve_op<T: Scalar>(
    ctx: &Context,
    adapter: &AccessAdapter,
    data: &[T],
    transpose: bool,
    conj: bool,
    rhs: Vec<T>,
    nrhs: usize,
) -> Result<Vec<T>> {
    let n = adapter.rows;
    let Structure::Triangular(triangle, diagonal) = adapter.structure else {
        return Err(Error::usage("triangular solve needs a triangular matrix"));
    };
    if diagonal == Diagonal::NonUnit {
        if let Some(i) = (0..n).find(|&i| adapter.element(data, i, i).is_zero()) {
            return Err(Error::Singular(i));
        }
    }
    if n == 0 || nrhs == 0 {
        return Ok(rhs);
    }
    let l = materialize(ctx, adapter, data, transpose, conj)?;
    let lower = (triangle == Triangle::Lower) != transpose;
    let r = ctx.upload(&rhs);
    let starts: Vec<usize> = (0..n).step_by(TRSM_BLOCK).collect();
    let order: Box<dyn Iterator<Item = &usize>> = if lower {
        Box::new(starts.iter())
    } else {
        Box::new(starts.iter().rev())
    };
    for &s in order {
        let e = (s + TRSM_BLOCK).min(n);
        let bs = e - s;
        let block = {
            let mut rd = r.data_mut();
            for col in 0..nrhs {
                let base = col * n;
                let rows: Box<dyn Iterator<Item = usize>> = if lower {
                    Box::new(s..e)
                } else {
                    Box::new((s..e).rev())
                };
                for i in rows {
                    let mut acc = rd[base + i].to_acc();
                    let known = if lower { s..i } else { i + 1..e };
                    for j in known {
                        acc = acc - l[i + j * n].to_acc() * rd[base + j].to_acc();
                    }
                    rd[base + i] = T::from_acc(acc / l[i + i * n].to_acc());
                }
            }
            let mut block = Vec::with_capacity(bs * nrhs);
            for col in 0..nrhs {
                block.extend_from_slice(&rd[col * n + s..col * n + e]);
            }
            block
        };
        let (r0, rows) = if lower { (e, n - e) } else { (0, s) };
        if rows == 0 {
            continue;
        }
        let a = Operand {
            data: &l,
            ld: n,
            trans: false,
            conj: false,
        };
        let b = Operand {
            data: &block,
            ld: bs,
            trans: false,
            conj: false,
        };
        let inst = [Instance {
            a: r0 + s * n,
            b: 0,
            c: r0,
            alpha: -T::Acc::one(),
            beta: T::Acc::one(),
        }];
        gemm_core(
            ctx,
            KernelFamily::Gemm,
            Layout::ColMajor,
            rows,
            nrhs,
            bs,
            a,
            b,
            &r,
            n,
            &inst,
            None,
        )?;
    }
    Ok(r.to_vec())
}

fn op_dims(trans: Transpose, rows: usize, cols: usize) -> (usize, usize) {
    if trans.is_transposed() {
        (cols, rows)
    } else {
        (rows, cols)
    }
}

/// C = alpha * op(A) * op(B) + beta * C
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
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
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
    beta: T,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    let (ar, ac) = op_dims(a_transpose, m, k);
    let (br, bc) = op_dims(b_transpose, k, n);
    let c_adapter = AccessAdapter::general(layout, m, n, c_offset, c_ld);
    check_matrix(
        ctx,
        "gemm",
        "A",
        (8, 9, 10),
        a,
        &AccessAdapter::general(layout, ar, ac, a_offset, a_ld),
    )?;
    check_matrix(
        ctx,
        "gemm",
        "B",
        (11, 12, 13),
        b,
        &AccessAdapter::general(layout, br, bc, b_offset, b_ld),
    )?;
    check_matrix(ctx, "gemm", "C", (15, 16, 17), c, &c_adapter)?;
    let (ah, bh) = (hold(a, &[c]), hold(b, &[c]));
    gemm_core(
        ctx,
        KernelFamily::Gemm,
        layout,
        m,
        n,
        k,
        Operand {
            data: &ah,
            ld: a_ld,
            trans: a_transpose.is_transposed(),
            conj: a_transpose.is_conjugated(),
        },
        Operand {
            data: &bh,
            ld: b_ld,
            trans: b_transpose.is_transposed(),
            conj: b_transpose.is_conjugated(),
        },
        c,
        c_ld,
        &[Instance {
            a: a_offset,
            b: b_offset,
            c: c_offset,
            alpha: alpha.to_acc(),
            beta: beta.to_acc(),
        }],
        None,
    )
}

#[allow(clippy::too_many_arguments)]
fn structured_mm<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    layout: Layout,
    side: Side,
    structure: Structure,
    m: usize,
    n: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
    beta: T,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    let ka = if side == Side::Left { m } else { n };
    let a_adapter = AccessAdapter::square(layout, ka, structure, a_offset, a_ld);
    check_matrix(ctx, routine, "A", (7, 8, 9), a, &a_adapter)?;
    check_matrix(
        ctx,
        routine,
        "B",
        (10, 11, 12),
        b,
        &AccessAdapter::general(layout, m, n, b_offset, b_ld),
    )?;
    check_matrix(
        ctx,
        routine,
        "C",
        (14, 15, 16),
        c,
        &AccessAdapter::general(layout, m, n, c_offset, c_ld),
    )?;
    if m == 0 || n == 0 {
        return Ok(());
    }
    let dense = {
        let ad = a.data();
        materialize(ctx, &a_adapter, &ad, false, false)?
    };
    let bh = hold(b, &[c]);
    let a_op = dense_operand(&dense, ka, layout, Transpose::No);
    let b_op = Operand {
        data: &bh,
        ld: b_ld,
        trans: false,
        conj: false,
    };
    let (first, second, offs) = match side {
        Side::Left => (a_op, b_op, (0, b_offset)),
        Side::Right => (b_op, a_op, (b_offset, 0)),
    };
    let inst = [Instance {
        a: offs.0,
        b: offs.1,
        c: c_offset,
        alpha: alpha.to_acc(),
        beta: beta.to_acc(),
    }];
    gemm_core(
        ctx,
        KernelFamily::Gemm,
        layout,
        m,
        n,
        ka,
        first,
        second,
        c,
        c_ld,
        &inst,
        None,
    )
}

/// C = alpha * A * B + beta * C (left) or alpha * B * A + beta * C (right), A symmetric.
#[allow(clippy::too_many_arguments)]
pub fn symm<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    side: Side,
    triangle: Triangle,
    m: usize,
    n: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
    beta: T,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    structured_mm(
        ctx,
        "symm",
        layout,
        side,
        Structure::Symmetric(triangle),
        m,
        n,
        alpha,
        a,
        a_offset,
        a_ld,
        b,
        b_offset,
        b_ld,
        beta,
        c,
        c_offset,
        c_ld,
    )
}

/// As [`symm`] with A hermitian.
#[allow(clippy::too_many_arguments)]
pub fn hemm<T: ComplexScalar>(
    ctx: &Context,
    layout: Layout,
    side: Side,
    triangle: Triangle,
    m: usize,
    n: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
    beta: T,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    structured_mm(
        ctx,
        "hemm",
        layout,
        side,
        Structure::Hermitian(triangle),
        m,
        n,
        alpha,
        a,
        a_offset,
        a_ld,
        b,
        b_offset,
        b_ld,
        beta,
        c,
        c_offset,
        c_ld,
    )
}

/// One rank-k pass `C = alpha * X * Y^op + beta * C` on one triangle of C.
#[allow(clippy::too_many_arguments)]
fn rank_k_pass<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    trans: bool,
    conj: bool,
    n: usize,
    k: usize,
    x: (&[T], usize, usize),
    y: (&[T], usize, usize),
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
    alpha: T::Acc,
    beta: T::Acc,
    mask: Mask,
) -> Result<()> {
    let first = Operand {
        data: x.0,
        ld: x.2,
        trans,
        conj: conj && trans,
    };
    let second = Operand {
        data: y.0,
        ld: y.2,
        trans: !trans,
        conj: conj && !trans,
    };
    let inst = [Instance {
        a: x.1,
        b: y.1,
        c: c_offset,
        alpha,
        beta,
    }];
    gemm_core(
        ctx,
        KernelFamily::Gemm,
        layout,
        n,
        n,
        k,
        first,
        second,
        c,
        c_ld,
        &inst,
        Some(mask),
    )
}

/// Name, argument indices (buffer, offset, ld), buffer, offset and ld of one input.
type RankKOperand<'a, T> = (
    &'static str,
    (usize, usize, usize),
    &'a Buffer<T>,
    usize,
    usize,
);

/// Checks shared by the rank-k updates; returns whether A is transposed.
#[allow(clippy::too_many_arguments)]
fn rank_k_checks<T: Scalar>(
    ctx: &Context,
    routine: &'static str,
    layout: Layout,
    transpose: Transpose,
    allowed: Transpose,
    n: usize,
    k: usize,
    operands: &[RankKOperand<'_, T>],
    c: (&Buffer<T>, usize, usize, usize),
) -> Result<bool> {
    if transpose != Transpose::No && transpose != allowed {
        return Err(Error::arg(
            routine,
            3,
            "transpose",
            format!("must be No or {allowed:?}"),
        ));
    }
    let trans = transpose != Transpose::No;
    let (r, cl) = if trans { (k, n) } else { (n, k) };
    for &(name, pos, buf, off, ld) in operands {
        check_matrix(
            ctx,
            routine,
            name,
            pos,
            buf,
            &AccessAdapter::general(layout, r, cl, off, ld),
        )?;
    }
    check_matrix(
        ctx,
        routine,
        "C",
        (c.1, c.1 + 1, c.1 + 2),
        c.0,
        &AccessAdapter::general(layout, n, n, c.2, c.3),
    )?;
    Ok(trans)
}

/// C = alpha * op(A) * op(A)^T + beta * C on one triangle of C.
#[allow(clippy::too_many_arguments)]
pub fn syrk<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    a_transpose: Transpose,
    n: usize,
    k: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    beta: T,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    let trans = rank_k_checks(
        ctx,
        "syrk",
        layout,
        a_transpose,
        Transpose::Yes,
        n,
        k,
        &[("A", (7, 8, 9), a, a_offset, a_ld)],
        (c, 11, c_offset, c_ld),
    )?;
    let ah = hold(a, &[c]);
    let mask = Mask {
        triangle,
        real_diagonal: false,
    };
    let x = (&ah[..], a_offset, a_ld);
    rank_k_pass(
        ctx,
        layout,
        trans,
        false,
        n,
        k,
        x,
        x,
        c,
        c_offset,
        c_ld,
        alpha.to_acc(),
        beta.to_acc(),
        mask,
    )
}

/// C = alpha * op(A) * op(A)^H + beta * C on one triangle of C, with a real diagonal.
#[allow(clippy::too_many_arguments)]
pub fn herk<T: ComplexScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    a_transpose: Transpose,
    n: usize,
    k: usize,
    alpha: RealOf<T>,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    beta: RealOf<T>,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    let trans = rank_k_checks(
        ctx,
        "herk",
        layout,
        a_transpose,
        Transpose::Conjugate,
        n,
        k,
        &[("A", (7, 8, 9), a, a_offset, a_ld)],
        (c, 11, c_offset, c_ld),
    )?;
    let ah = hold(a, &[c]);
    let mask = Mask {
        triangle,
        real_diagonal: true,
    };
    let x = (&ah[..], a_offset, a_ld);
    let (alpha, beta) = (T::Acc::from_real(alpha), T::Acc::from_real(beta));
    rank_k_pass(
        ctx, layout, trans, true, n, k, x, x, c, c_offset, c_ld, alpha, beta, mask,
    )
}

/// C = alpha * op(A) * op(B)^T + alpha * op(B) * op(A)^T + beta * C on one triangle.
#[allow(clippy::too_many_arguments)]
pub fn syr2k<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    ab_transpose: Transpose,
    n: usize,
    k: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
    beta: T,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    let trans = rank_k_checks(
        ctx,
        "syr2k",
        layout,
        ab_transpose,
        Transpose::Yes,
        n,
        k,
        &[
            ("A", (7, 8, 9), a, a_offset, a_ld),
            ("B", (10, 11, 12), b, b_offset, b_ld),
        ],
        (c, 14, c_offset, c_ld),
    )?;
    let (ah, bh) = (hold(a, &[c]), hold(b, &[c]));
    let mask = Mask {
        triangle,
        real_diagonal: false,
    };
    let (x, y) = ((&ah[..], a_offset, a_ld), (&bh[..], b_offset, b_ld));
    let alpha = alpha.to_acc();
    rank_k_pass(
        ctx,
        layout,
        trans,
        false,
        n,
        k,
        x,
        y,
        c,
        c_offset,
        c_ld,
        alpha,
        beta.to_acc(),
        mask,
    )?;
    rank_k_pass(
        ctx,
        layout,
        trans,
        false,
        n,
        k,
        y,
        x,
        c,
        c_offset,
        c_ld,
        alpha,
        T::Acc::one(),
        mask,
    )
}

/// C = alpha * op(A) * op(B)^H + conj(alpha) * op(B) * op(A)^H + beta * C on
/// one triangle, with a real diagonal.
#[allow(clippy::too_many_arguments)]
pub fn her2k<T: ComplexScalar>(
    ctx: &Context,
    layout: Layout,
    triangle: Triangle,
    ab_transpose: Transpose,
    n: usize,
    k: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
    beta: RealOf<T>,
    c: &Buffer<T>,
    c_offset: usize,
    c_ld: usize,
) -> Result<()> {
    let trans = rank_k_checks(
        ctx,
        "her2k",
        layout,
        ab_transpose,
        Transpose::Conjugate,
        n,
        k,
        &[
            ("A", (7, 8, 9), a, a_offset, a_ld),
            ("B", (10, 11, 12), b, b_offset, b_ld),
        ],
        (c, 14, c_offset, c_ld),
    )?;
    let (ah, bh) = (hold(a, &[c]), hold(b, &[c]));
    let (x, y) = ((&ah[..], a_offset, a_ld), (&bh[..], b_offset, b_ld));
    let alpha = alpha.to_acc();
    let first = Mask {
        triangle,
        real_diagonal: false,
    };
    let second = Mask {
        triangle,
        real_diagonal: true,
    };
    rank_k_pass(
        ctx,
        layout,
        trans,
        true,
        n,
        k,
        x,
        y,
        c,
        c_offset,
        c_ld,
        alpha,
        T::Acc::from_real(beta),
        first,
    )?;
    rank_k_pass(
        ctx,
        layout,
        trans,
        true,
        n,
        k,
        y,
        x,
        c,
        c_offset,
        c_ld,
        alpha.conj(),
        T::Acc::one(),
        second,
    )
}

/// B = alpha * op(A) * B (left) or alpha * B * op(A) (right), A triangular.
#[allow(clippy::too_many_arguments)]
pub fn trmm<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    side: Side,
    triangle: Triangle,
    a_transpose: Transpose,
    diagonal: Diagonal,
    m: usize,
    n: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
) -> Result<()> {
    let ka = if side == Side::Left { m } else { n };
    let a_adapter = AccessAdapter::square(
        layout,
        ka,
        Structure::Triangular(triangle, diagonal),
        a_offset,
        a_ld,
    );
    check_matrix(ctx, "trmm", "A", (9, 10, 11), a, &a_adapter)?;
    check_matrix(
        ctx,
        "trmm",
        "B",
        (12, 13, 14),
        b,
        &AccessAdapter::general(layout, m, n, b_offset, b_ld),
    )?;
    if m == 0 || n == 0 {
        return Ok(());
    }
    let dense = {
        let ad = a.data();
        materialize(ctx, &a_adapter, &ad, false, false)?
    };
    let bh = hold(b, &[b]);
    let a_op = dense_operand(&dense, ka, layout, a_transpose);
    let b_op = Operand {
        data: &bh,
        ld: b_ld,
        trans: false,
        conj: false,
    };
    let (first, second, offs) = match side {
        Side::Left => (a_op, b_op, (0, b_offset)),
        Side::Right => (b_op, a_op, (b_offset, 0)),
    };
    let inst = [Instance {
        a: offs.0,
        b: offs.1,
        c: b_offset,
        alpha: alpha.to_acc(),
        beta: T::Acc::zero(),
    }];
    gemm_core(
        ctx,
        KernelFamily::Gemm,
        layout,
        m,
        n,
        ka,
        first,
        second,
        b,
        b_ld,
        &inst,
        None,
    )
}

/// Solves op(A) X = alpha * B (left) or X op(A) = alpha * B (right) in place.
#[allow(clippy::too_many_arguments)]
pub fn trsm<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    side: Side,
    triangle: Triangle,
    a_transpose: Transpose,
    diagonal: Diagonal,
    m: usize,
    n: usize,
    alpha: T,
    a: &Buffer<T>,
    a_offset: usize,
    a_ld: usize,
    b: &Buffer<T>,
    b_offset: usize,
    b_ld: usize,
) -> Result<()> {
    let ka = if side == Side::Left { m } else { n };
    let a_adapter = AccessAdapter::square(
        layout,
        ka,
        Structure::Triangular(triangle, diagonal),
        a_offset,
        a_ld,
    );
    let b_adapter = AccessAdapter::general(layout, m, n, b_offset, b_ld);
    check_matrix(ctx, "trsm", "A", (9, 10, 11), a, &a_adapter)?;
    check_matrix(ctx, "trsm", "B", (12, 13, 14), b, &b_adapter)?;
    if m == 0 || n == 0 {
        return Ok(());
    }
    let alpha = alpha.to_acc();
    let scaled: Vec<T> = {
        let bd = b.data();
        b_adapter
            .materialize(&bd)
            .into_iter()
            .map(|v| T::from_acc(alpha * v.to_acc()))
            .collect()
    };
    let x = {
        let ad = a.data();
        match side {
            Side::Left => solve_op(
                ctx,
                &a_adapter,
                &ad,
                a_transpose.is_transposed(),
                a_transpose.is_conjugated(),
                scaled,
                n,
            )?,
            Side::Right => {
                // X op(A) = R  <=>  op(A)^T X^T = R^T.
                let rt = transpose_dense(&scaled, m, n);
                let xt = solve_op(
                    ctx,
                    &a_adapter,
                    &ad,
                    !a_transpose.is_transposed(),
                    a_transpose.is_conjugated(),
                    rt,
                    m,
                )?;
                transpose_dense(&xt, n, m)
            }
        }
    };
    let mut bd = b.data_mut();
    for j in 0..n {
        for i in 0..m {
            if let Some(p) = b_adapter.locate(i, j) {
                bd[p] = x[i + j * m];
            }
        }
    }
    Ok(())
}

/// Transpose of a dense column-major `rows x cols` matrix.
fn transpose_dense<T: Copy>(x: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    for i in 0..rows {
        for j in 0..cols {
            out.push(x[i + j * rows]);
        }
    }
    out
}
