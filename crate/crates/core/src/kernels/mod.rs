//! Parameterised kernel families and the work-group engine they run on.

pub mod adapter;
pub mod axpy;
pub mod dot;
pub mod engine;
pub mod gemm;
pub mod gemv;
pub mod ger;
pub mod params;
pub mod space;
pub mod transform;

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::precision::Scalar;
use crate::types::{Layout, Transpose};

use adapter::AccessAdapter;
use engine::WorkGrid;
use params::{
    validate, ArgsSig, AxpyParams, Configuration, DotParams, GemmParams, GemvParams, GerParams,
    KernelFamily, TransformParams,
};

/// Grid for a one-thread-per-element launch.
pub fn elementwise_grid(elements: usize, group_size: usize) -> WorkGrid {
    WorkGrid::linear(elements.div_ceil(group_size.max(1)).max(1), group_size)
}

/// Work-groups a family launches for the given sizes. For gemm, `m` and `n`
/// are the padded sizes of the indirect kernel. For dot, the first stage.
pub fn launch_grid(
    family: KernelFamily,
    args: ArgsSig,
    config: &Configuration,
) -> Result<WorkGrid> {
    if config.family.base() != family.base() {
        return Err(Error::usage(format!(
            "{} configuration used for {family}",
            config.family
        )));
    }
    let (m, n) = (args.m.max(1), args.n.max(1));
    Ok(match family.base() {
        KernelFamily::Axpy => {
            let p = AxpyParams::from_config(config)?;
            WorkGrid::linear(axpy::axpy_groups(&p, args.n), p.wgs)
        }
        KernelFamily::Dot => {
            let p = DotParams::from_config(config)?;
            WorkGrid::linear(2 * p.wgs2, p.wgs1)
        }
        KernelFamily::Gemv => {
            let p = GemvParams::from_config(config)?;
            WorkGrid::linear(m.div_ceil(p.rows_per_group()), p.wgs)
        }
        KernelFamily::Ger => {
            let p = GerParams::from_config(config)?;
            WorkGrid::planar(
                m.div_ceil(p.wgs1 * p.wpt),
                n.div_ceil(p.wgs2 * p.wpt),
                p.wgs1 * p.wgs2,
            )
        }
        KernelFamily::Gemm => {
            let p = GemmParams::from_config(config)?;
            WorkGrid::planar(m.div_ceil(p.mwg), n.div_ceil(p.nwg), p.threads())
        }
        KernelFamily::Transform => {
            let p = TransformParams::from_config(config)?;
            let (tr, tc) = p.tile();
            WorkGrid::planar(m.div_ceil(tr), n.div_ceil(tc), p.dimx * p.dimy)
        }
        _ => unreachable!(),
    })
}

/// Argument records for running a kernel family directly on buffers.
/// Matrices are column-major.
pub enum KernelArgs<'a, T: Scalar> {
    /// y = alpha * x + y
    Axpy {
        n: usize,
        alpha: T,
        x: &'a Buffer<T>,
        y: &'a Buffer<T>,
    },
    /// out[0] = sum x_i * y_i
    Dot {
        n: usize,
        x: &'a Buffer<T>,
        y: &'a Buffer<T>,
        out: &'a Buffer<T>,
    },
    /// y = alpha * A * x + beta * y
    Gemv {
        m: usize,
        n: usize,
        alpha: T,
        a: &'a Buffer<T>,
        lda: usize,
        x: &'a Buffer<T>,
        beta: T,
        y: &'a Buffer<T>,
    },
    /// A += alpha * x * y^T
    Ger {
        m: usize,
        n: usize,
        alpha: T,
        x: &'a Buffer<T>,
        y: &'a Buffer<T>,
        a: &'a Buffer<T>,
        lda: usize,
    },
    /// C = alpha * A * B + beta * C on pre-processed operands: A is `m x k`
    /// with ld m, B is given transposed as `n x k` with ld n, C is `m x n`
    /// with ld m, and the sizes are multiples of the tile sizes.
    GemmIndirect {
        m: usize,
        n: usize,
        k: usize,
        alpha: T,
        a: &'a Buffer<T>,
        b_transposed: &'a Buffer<T>,
        beta: T,
        c: &'a Buffer<T>,
    },
    /// C = alpha * A * B + beta * C for arbitrary sizes.
    GemmDirect {
        m: usize,
        n: usize,
        k: usize,
        alpha: T,
        a: &'a Buffer<T>,
        lda: usize,
        b: &'a Buffer<T>,
        ldb: usize,
        beta: T,
        c: &'a Buffer<T>,
        ldc: usize,
    },
}

fn need(buf_len: usize, needed: usize) -> Result<()> {
    if needed > buf_len {
        Err(Error::OutOfRange {
            offset: 0,
            len: needed,
            buffer_len: buf_len,
        })
    } else {
        Ok(())
    }
}

fn mat_extent(rows: usize, cols: usize, ld: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (cols - 1) * ld + rows
    }
}

/// Runs one kernel family on device buffers with an explicit configuration.
pub fn run_kernel<T: Scalar>(
    ctx: &Context,
    config: &Configuration,
    args: KernelArgs<'_, T>,
) -> Result<()> {
    validate(config, ctx.device(), T::PRECISION).into_result()?;
    let expect = |f: KernelFamily| -> Result<()> {
        if config.family.base() == f {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "{} configuration used for a {f} kernel",
                config.family
            )))
        }
    };
    match args {
        KernelArgs::Axpy { n, alpha, x, y } => {
            expect(KernelFamily::Axpy)?;
            ctx.check(x)?;
            ctx.check(y)?;
            need(x.len(), n)?;
            need(y.len(), n)?;
            let xs = x.read(0, n)?;
            let mut ys = y.read(0, n)?;
            let inst = [axpy::AxpyInstance {
                alpha: alpha.to_acc(),
                x: &xs,
            }];
            axpy::run_axpy(
                ctx,
                config.family,
                config,
                axpy::VectorOp::Axpy,
                n,
                &inst,
                &mut [&mut ys[..]],
            )?;
            y.write(0, &ys)
        }
        KernelArgs::Dot { n, x, y, out } => {
            expect(KernelFamily::Dot)?;
            for b in [x, y, out] {
                ctx.check(b)?;
            }
            need(x.len(), n)?;
            need(y.len(), n)?;
            need(out.len(), 1)?;
            let (xs, ys) = (x.read(0, n)?, y.read(0, n)?);
            let r = dot::SumOf::new(|i: usize| xs[i].to_acc() * ys[i].to_acc());
            let s = dot::run_reduction(ctx, config, n, &r)?;
            out.write(0, &[T::from_acc(s)])
        }
        KernelArgs::Gemv {
            m,
            n,
            alpha,
            a,
            lda,
            x,
            beta,
            y,
        } => {
            expect(KernelFamily::Gemv)?;
            for b in [a, x, y] {
                ctx.check(b)?;
            }
            if lda < m.max(1) {
                return Err(Error::usage("lda smaller than m"));
            }
            need(a.len(), mat_extent(m, n, lda))?;
            need(x.len(), n)?;
            need(y.len(), m)?;
            let (ad, xs, ys) = (a.to_vec(), x.read(0, n)?, y.read(0, m)?);
            let job = gemv::GemvJob {
                a: &ad,
                adapter: AccessAdapter::general(Layout::ColMajor, m, n, 0, lda),
                trans: Transpose::No,
                rows: m,
                cols: n,
                x: &xs,
                alpha: alpha.to_acc(),
                beta: beta.to_acc(),
                y: &ys,
            };
            let out = gemv::run_gemv(ctx, config, &job)?;
            y.write(0, &out)
        }
        KernelArgs::Ger {
            m,
            n,
            alpha,
            x,
            y,
            a,
            lda,
        } => {
            expect(KernelFamily::Ger)?;
            for b in [a, x, y] {
                ctx.check(b)?;
            }
            if lda < m.max(1) {
                return Err(Error::usage("lda smaller than m"));
            }
            need(a.len(), mat_extent(m, n, lda))?;
            need(x.len(), m)?;
            need(y.len(), n)?;
            let (xs, ys) = (x.read(0, m)?, y.read(0, n)?);
            let job = ger::GerJob {
                m,
                n,
                alpha: alpha.to_acc(),
                x: &xs,
                y: &ys,
                conj: false,
                alpha2: None,
                real_diagonal: false,
            };
            let adapter = AccessAdapter::general(Layout::ColMajor, m, n, 0, lda);
            let updates = {
                let data = a.data();
                ger::run_ger(ctx, config, &job, &data, &adapter)?
            };
            let mut data = a.data_mut();
            for (pos, v) in updates {
                data[pos] = v;
            }
            Ok(())
        }
        KernelArgs::GemmIndirect {
            m,
            n,
            k,
            alpha,
            a,
            b_transposed,
            beta,
            c,
        } => {
            expect(KernelFamily::Gemm)?;
            for b in [a, b_transposed, c] {
                ctx.check(b)?;
            }
            need(a.len(), m * k)?;
            need(b_transposed.len(), n * k)?;
            need(c.len(), m * n)?;
            let (ad, bd) = (a.to_vec(), b_transposed.to_vec());
            let mut cd = c.to_vec();
            let inst = [gemm::IndirectInstance {
                a: 0,
                b: 0,
                c: 0,
                alpha: alpha.to_acc(),
                beta: beta.to_acc(),
            }];
            let job = gemm::IndirectJob {
                m,
                n,
                k,
                a: &ad,
                b: &bd,
                instances: &inst,
            };
            gemm::run_indirect(ctx, config.family, config, &job, &mut cd)?;
            c.write(0, &cd)
        }
        KernelArgs::GemmDirect {
            m,
            n,
            k,
            alpha,
            a,
            lda,
            b,
            ldb,
            beta,
            c,
            ldc,
        } => {
            expect(KernelFamily::Gemm)?;
            for buf in [a, b, c] {
                ctx.check(buf)?;
            }
            if lda < m.max(1) || ldb < k.max(1) || ldc < m.max(1) {
                return Err(Error::usage("leading dimension too small"));
            }
            need(a.len(), mat_extent(m, k, lda))?;
            need(b.len(), mat_extent(k, n, ldb))?;
            need(c.len(), mat_extent(m, n, ldc))?;
            let inst = [gemm::DirectInstance {
                a_offset: 0,
                b_offset: 0,
                c_offset: 0,
                alpha: alpha.to_acc(),
                beta: beta.to_acc(),
            }];
            let updates = {
                let (ad, bd, cd) = (a.data(), b.data(), c.data());
                let job = gemm::DirectJob {
                    m,
                    n,
                    k,
                    a: &ad,
                    lda,
                    a_trans: false,
                    a_conj: false,
                    b: &bd,
                    ldb,
                    b_trans: false,
                    b_conj: false,
                    c: &cd,
                    ldc,
                    instances: &inst,
                };
                gemm::run_direct(ctx, config.family, config, &job)?
            };
            let mut cd = c.data_mut();
            for (pos, v) in updates {
                cd[pos] = v;
            }
            Ok(())
        }
    }
}
