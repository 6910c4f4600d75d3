//! Tiled matrix-multiplication kernels.
//!
//! Each work-group computes an `MWG x NWG` tile of C with `MDIMC x NDIMC`
//! threads; each thread owns an `MWI x NWI` register tile (`MWI = MWG/MDIMC`,
//! `NWI = NWG/NDIMC`). The k dimension is consumed in slices of `KWG`, which
//! are optionally staged in local memory (`SA`, `SB`) by a cooperative load
//! phase before the compute phase.
//!
//! The indirect kernel expects pre-processed operands: A as a padded
//! `Mp x Kp` column-major matrix, B transposed into `Np x Kp`, and sizes that
//! are exact multiples of the tile sizes. The direct kernel reads the user's
//! operands as they are (with transpose and conjugation) and bounds-checks
//! every access instead.
//!
//! Every output element accumulates its k products in ascending k order with
//! one accumulator, so results do not depend on the configuration.

use std::array;

use crate::context::Context;
use crate::error::{Error, Result};
use crate::precision::{Field, Scalar};

use super::engine::{self, launch, GroupId, LaunchDesc, WorkGrid};
use super::params::{Configuration, GemmParams, KernelFamily};

/// Register-tile loads along the m (or n) dimension of a k-slice.
trait Loader<T: Scalar>: Sync {
    fn load<const W: usize>(&self, k: usize, offs: &[usize; W]) -> [T::Acc; W];
}

/// `data[base + k * stride + off]`: padded global operands and local tiles.
struct Strided<'a, T> {
    data: &'a [T],
    base: usize,
    stride: usize,
}

impl<T: Scalar> Loader<T> for Strided<'_, T> {
    #[inline(always)]
    fn load<const W: usize>(&self, k: usize, offs: &[usize; W]) -> [T::Acc; W] {
        let row = &self.data[self.base + k * self.stride..];
        array::from_fn(|i| row[offs[i]].to_acc())
    }
}

/// Bounds-checked loads from an operand in user storage.
struct Bounded<'a, T> {
    data: &'a [T],
    offset: usize,
    ld: usize,
    /// Row (m or n index) of the tile origin, and the operand's extent along it.
    r0: usize,
    rows: usize,
    /// Absolute k of the current slice origin.
    k0: usize,
    /// Element (r, k) lives at `r + k*ld` (true) or `k + r*ld` (false).
    r_contiguous: bool,
    conj: bool,
}

impl<T: Scalar> Bounded<'_, T> {
    #[inline(always)]
    fn get(&self, r: usize, k: usize) -> T::Acc {
        let idx = if self.r_contiguous {
            self.offset + r + k * self.ld
        } else {
            self.offset + k + r * self.ld
        };
        let v = self.data[idx].to_acc();
        if self.conj {
            v.conj()
        } else {
            v
        }
    }
}

impl<T: Scalar> Loader<T> for Bounded<'_, T> {
    #[inline(always)]
    fn load<const W: usize>(&self, k: usize, offs: &[usize; W]) -> [T::Acc; W] {
        array::from_fn(|i| {
            let r = self.r0 + offs[i];
            if r < self.rows {
                self.get(r, self.k0 + k)
            } else {
                T::Acc::zero()
            }
        })
    }
}

#[inline(always)]
fn micro_tile<T, A, B, const MWI: usize, const NWI: usize>(
    a: &A,
    b: &B,
    klen: usize,
    kwi: usize,
    am: &[usize; MWI],
    bn: &[usize; NWI],
    acc: &mut [[T::Acc; NWI]; MWI],
) where
    T: Scalar,
    A: Loader<T>,
    B: Loader<T>,
{
    let mut step = |k: usize| {
        let av = a.load::<MWI>(k, am);
        let bv = b.load::<NWI>(k, bn);
        for i in 0..MWI {
            for j in 0..NWI {
                acc[i][j] += av[i] * bv[j];
            }
        }
    };
    let mut k = 0;
    while k + kwi <= klen {
        for u in 0..kwi {
            step(k + u);
        }
        k += kwi;
    }
    while k < klen {
        step(k);
        k += 1;
    }
}

/// Tile offsets owned by each thread along one dimension. With `strided`
/// the thread's vectors interleave with the other threads' (round-robin),
/// otherwise each thread owns one contiguous block.
fn thread_offsets(threads: usize, per_thread: usize, vw: usize, strided: bool) -> Vec<usize> {
    let vecs = per_thread / vw;
    let mut out = Vec::with_capacity(threads * per_thread);
    for t in 0..threads {
        for i in 0..per_thread {
            let (v, lane) = (i / vw, i % vw);
            let vec_index = if strided {
                t + v * threads
            } else {
                t * vecs + v
            };
            out.push(vec_index * vw + lane);
        }
    }
    out
}

/// Per-launch constants shared by all groups.
struct Plan {
    p: GemmParams,
    m_offs: Vec<usize>,
    n_offs: Vec<usize>,
    local_a: usize,
    local_b: usize,
}

impl Plan {
    fn new(p: GemmParams) -> Plan {
        let (local_a, local_b) = local_tile_lens(&p);
        Plan {
            m_offs: thread_offsets(p.mdimc, p.mwi(), p.vwm, p.strm),
            n_offs: thread_offsets(p.ndimc, p.nwi(), p.vwn, p.strn),
            p,
            local_a,
            local_b,
        }
    }
}

/// Elements of the A and B local tiles one group allocates.
fn local_tile_lens(p: &GemmParams) -> (usize, usize) {
    (
        if p.sa { p.kwg * p.mwg } else { 0 },
        if p.sb { p.kwg * p.nwg } else { 0 },
    )
}

/// Group size and local-memory bytes a launch with `p` requests, as sized
/// by the kernel's own scratch allocation.
pub fn launch_resources<T: Scalar>(p: &GemmParams) -> (usize, usize) {
    let (la, lb) = local_tile_lens(p);
    (p.mdimc * p.ndimc, (la + lb) * std::mem::size_of::<T>())
}

/// The executor's resource assertion for a gemm launch with `p`.
pub fn assert_launch_resources<T: Scalar>(ctx: &Context, p: &GemmParams) -> Result<()> {
    let (threads, local) = launch_resources::<T>(p);
    engine::assert_resources(ctx, &WorkGrid::linear(1, threads), local)
}

/// Shape requirements of the register tiling and cooperative loads.
fn check_structure(p: &GemmParams) -> Result<()> {
    let ok = [
        p.mwg, p.nwg, p.kwg, p.mdimc, p.ndimc, p.mdima, p.ndimb, p.kwi, p.vwm, p.vwn,
    ]
    .iter()
    .all(|&v| v > 0)
        && p.kwg.is_multiple_of(p.kwi)
        && p.mwg.is_multiple_of(p.mdimc * p.vwm)
        && p.nwg.is_multiple_of(p.ndimc * p.vwn)
        && (!p.sa
            || (p.mwg.is_multiple_of(p.mdima * p.vwm)
                && p.threads().is_multiple_of(p.mdima)
                && p.kwg.is_multiple_of(p.threads() / p.mdima)))
        && (!p.sb
            || (p.nwg.is_multiple_of(p.ndimb * p.vwn)
                && p.threads().is_multiple_of(p.ndimb)
                && p.kwg.is_multiple_of(p.threads() / p.ndimb)))
        && matches!(p.mwi(), 1 | 2 | 4 | 8 | 16)
        && matches!(p.nwi(), 1 | 2 | 4 | 8 | 16);
    if ok {
        Ok(())
    } else {
        Err(Error::usage(format!(
            "gemm kernel cannot be built for {:?}",
            p
        )))
    }
}

/// Cooperative load of a `kwg x wg` tile into local memory. The group's
/// threads are reshaped into `dim x (threads/dim)`; thread (d, e) loads the
/// vectors `wg/dim` wide along the tile dimension and `kwg/(threads/dim)`
/// deep along k. Only the visiting order depends on the reshaping.
#[allow(clippy::too_many_arguments)]
fn load_local<T: Scalar>(
    local: &mut [T],
    wg: usize,
    kwg: usize,
    threads: usize,
    dim: usize,
    vw: usize,
    strided: bool,
    mut fetch: impl FnMut(usize, usize) -> T,
) {
    let kdim = threads / dim;
    let per_thread = wg / dim;
    let kw = kwg / kdim;
    let vecs = per_thread / vw;
    for e in 0..kdim {
        for d in 0..dim {
            for kk in 0..kw {
                let k = e * kw + kk;
                for v in 0..vecs {
                    let vec_index = if strided { d + v * dim } else { d * vecs + v };
                    for lane in 0..vw {
                        let r = vec_index * vw + lane;
                        local[k * wg + r] = fetch(r, k);
                    }
                }
            }
        }
    }
}

/// One product of an indirect launch. Offsets index the shared padded arrays.
#[derive(Clone, Copy, Debug)]
pub(crate) struct IndirectInstance<A> {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub alpha: A,
    pub beta: A,
}

/// Pre-processed operands: `a` holds `Mp x Kp` blocks, `b` holds `Np x Kp`
/// blocks (B transposed), C blocks are `Mp x Np`, all column-major.
pub(crate) struct IndirectJob<'a, T: Scalar> {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub a: &'a [T],
    pub b: &'a [T],
    pub instances: &'a [IndirectInstance<T::Acc>],
}

struct Scratch<T: Scalar> {
    la: Vec<T>,
    lb: Vec<T>,
    acc: Vec<T::Acc>,
}

impl<T: Scalar> Scratch<T> {
    fn new(plan: &Plan) -> Self {
        Scratch {
            la: vec![T::default(); plan.local_a],
            lb: vec![T::default(); plan.local_b],
            acc: vec![T::Acc::zero(); plan.p.mwg * plan.p.nwg],
        }
    }
}

type IndirectGroupFn<T> = fn(&Plan, &IndirectJob<'_, T>, &[T], &mut Scratch<T>, GroupId) -> Vec<T>;

fn indirect_group<T: Scalar, const MWI: usize, const NWI: usize>(
    plan: &Plan,
    job: &IndirectJob<'_, T>,
    c_in: &[T],
    s: &mut Scratch<T>,
    g: GroupId,
) -> Vec<T> {
    let p = &plan.p;
    let inst = &job.instances[g.z];
    let (m0, n0) = (g.x * p.mwg, g.y * p.nwg);
    s.acc.fill(T::Acc::zero());
    let threads = p.threads();

    for k0 in (0..job.k).step_by(p.kwg) {
        if p.sa {
            let src = &job.a[inst.a..];
            let mp = job.m;
            load_local(
                &mut s.la,
                p.mwg,
                p.kwg,
                threads,
                p.mdima,
                p.vwm,
                p.strm,
                |r, k| src[(k0 + k) * mp + m0 + r],
            );
        }
        if p.sb {
            let src = &job.b[inst.b..];
            let np = job.n;
            load_local(
                &mut s.lb,
                p.nwg,
                p.kwg,
                threads,
                p.ndimb,
                p.vwn,
                p.strn,
                |r, k| src[(k0 + k) * np + n0 + r],
            );
        }
        let global_a = Strided {
            data: job.a,
            base: inst.a + k0 * job.m + m0,
            stride: job.m,
        };
        let global_b = Strided {
            data: job.b,
            base: inst.b + k0 * job.n + n0,
            stride: job.n,
        };
        let local_a = Strided {
            data: &s.la,
            base: 0,
            stride: p.mwg,
        };
        let local_b = Strided {
            data: &s.lb,
            base: 0,
            stride: p.nwg,
        };
        let a: &Strided<'_, T> = if p.sa { &local_a } else { &global_a };
        let b: &Strided<'_, T> = if p.sb { &local_b } else { &global_b };
        compute_phase::<T, _, _, MWI, NWI>(plan, a, b, p.kwg, &mut s.acc);
    }

    let mut tile = vec![T::default(); p.mwg * p.nwg];
    let beta_zero = inst.beta.is_zero();
    for tn in 0..p.ndimc {
        for tm in 0..p.mdimc {
            let base = (tn * p.mdimc + tm) * MWI * NWI;
            for i in 0..MWI {
                let mm = plan.m_offs[tm * MWI + i];
                for j in 0..NWI {
                    let nn = plan.n_offs[tn * NWI + j];
                    let mut v = inst.alpha * s.acc[base + i * NWI + j];
                    if !beta_zero {
                        let c = c_in[inst.c + (m0 + mm) + (n0 + nn) * job.m].to_acc();
                        v += inst.beta * c;
                    }
                    tile[mm + nn * p.mwg] = T::from_acc(v);
                }
            }
        }
    }
    tile
}

/// Runs every thread of the group over one k-slice of length `klen`.
#[inline(always)]
fn compute_phase<T, A, B, const MWI: usize, const NWI: usize>(
    plan: &Plan,
    a: &A,
    b: &B,
    klen: usize,
    acc: &mut [T::Acc],
) where
    T: Scalar,
    A: Loader<T>,
    B: Loader<T>,
{
    let p = &plan.p;
    for tn in 0..p.ndimc {
        let bn: &[usize; NWI] = plan.n_offs[tn * NWI..(tn + 1) * NWI].try_into().unwrap();
        for tm in 0..p.mdimc {
            let am: &[usize; MWI] = plan.m_offs[tm * MWI..(tm + 1) * MWI].try_into().unwrap();
            let base = (tn * p.mdimc + tm) * MWI * NWI;
            let slot = &mut acc[base..base + MWI * NWI];
            let mut regs: [[T::Acc; NWI]; MWI] =
                array::from_fn(|i| array::from_fn(|j| slot[i * NWI + j]));
            micro_tile::<T, A, B, MWI, NWI>(a, b, klen, p.kwi, am, bn, &mut regs);
            for i in 0..MWI {
                slot[i * NWI..(i + 1) * NWI].copy_from_slice(&regs[i]);
            }
        }
    }
}

macro_rules! tile_dispatch {
    ($func:ident, $ty:ty, $t:ident, $mwi:expr, $nwi:expr) => {{
        macro_rules! row {
            ($m:literal) => {
                match $nwi {
                    1 => $func::<$t, $m, 1> as $ty,
                    2 => $func::<$t, $m, 2> as $ty,
                    4 => $func::<$t, $m, 4> as $ty,
                    8 => $func::<$t, $m, 8> as $ty,
                    16 => $func::<$t, $m, 16> as $ty,
                    _ => unreachable!("register tile checked by check_structure"),
                }
            };
        }
        match $mwi {
            1 => row!(1),
            2 => row!(2),
            4 => row!(4),
            8 => row!(8),
            16 => row!(16),
            _ => unreachable!("register tile checked by check_structure"),
        }
    }};
}

/// Runs the indirect kernel; `c` holds the padded C blocks and is updated in place.
pub(crate) fn run_indirect<T: Scalar>(
    ctx: &Context,
    family: KernelFamily,
    config: &Configuration,
    job: &IndirectJob<'_, T>,
    c: &mut [T],
) -> Result<()> {
    let p = GemmParams::from_config(config)?;
    assert_launch_resources::<T>(ctx, &p)?;
    check_structure(&p)?;
    if !job.m.is_multiple_of(p.mwg) || !job.n.is_multiple_of(p.nwg) || !job.k.is_multiple_of(p.kwg)
    {
        return Err(Error::usage(format!(
            "indirect gemm needs sizes padded to the tile: {}x{}x{} with MWG={} NWG={} KWG={}",
            job.m, job.n, job.k, p.mwg, p.nwg, p.kwg
        )));
    }
    if job.m == 0 || job.n == 0 || job.instances.is_empty() {
        return Ok(());
    }
    let plan = Plan::new(p);
    let group: IndirectGroupFn<T> =
        tile_dispatch!(indirect_group, IndirectGroupFn<T>, T, p.mwi(), p.nwi());
    let grid =
        WorkGrid::planar(job.m / p.mwg, job.n / p.nwg, p.threads()).batched(job.instances.len());
    let (_, local) = launch_resources::<T>(&p);
    let tiles = {
        let c_in: &[T] = c;
        launch(
            ctx,
            LaunchDesc {
                family,
                config,
                grid,
                local_mem_bytes: local,
            },
            || Scratch::<T>::new(&plan),
            |s, g| group(&plan, job, c_in, s, g),
        )?
    };
    let per_batch = grid.groups[0] * grid.groups[1];
    for (idx, tile) in tiles.iter().enumerate() {
        let (gx, gy, gz) = (
            idx % grid.groups[0],
            (idx % per_batch) / grid.groups[0],
            idx / per_batch,
        );
        let base = job.instances[gz].c + gx * p.mwg + gy * p.nwg * job.m;
        for nn in 0..p.nwg {
            let dst = base + nn * job.m;
            c[dst..dst + p.mwg].copy_from_slice(&tile[nn * p.mwg..(nn + 1) * p.mwg]);
        }
    }
    Ok(())
}

/// One product of a direct launch, in user storage (column-major).
#[derive(Clone, Copy, Debug)]
pub(crate) struct DirectInstance<A> {
    pub a_offset: usize,
    pub b_offset: usize,
    pub c_offset: usize,
    pub alpha: A,
    pub beta: A,
}

pub(crate) struct DirectJob<'a, T: Scalar> {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub a: &'a [T],
    pub lda: usize,
    pub a_trans: bool,
    pub a_conj: bool,
    pub b: &'a [T],
    pub ldb: usize,
    pub b_trans: bool,
    pub b_conj: bool,
    /// Current contents of the C buffer (read only where beta is nonzero).
    pub c: &'a [T],
    pub ldc: usize,
    pub instances: &'a [DirectInstance<T::Acc>],
}

type DirectGroupFn<T> = fn(&Plan, &DirectJob<'_, T>, &mut Scratch<T>, GroupId) -> Vec<T>;

fn direct_group<T: Scalar, const MWI: usize, const NWI: usize>(
    plan: &Plan,
    job: &DirectJob<'_, T>,
    s: &mut Scratch<T>,
    g: GroupId,
) -> Vec<T> {
    let p = &plan.p;
    let inst = &job.instances[g.z];
    let (m0, n0) = (g.x * p.mwg, g.y * p.nwg);
    s.acc.fill(T::Acc::zero());
    let threads = p.threads();

    for k0 in (0..job.k).step_by(p.kwg) {
        let klen = p.kwg.min(job.k - k0);
        let a = Bounded {
            data: job.a,
            offset: inst.a_offset,
            ld: job.lda,
            r0: m0,
            rows: job.m,
            k0,
            r_contiguous: !job.a_trans,
            conj: job.a_conj,
        };
        let b = Bounded {
            data: job.b,
            offset: inst.b_offset,
            ld: job.ldb,
            r0: n0,
            rows: job.n,
            k0,
            r_contiguous: job.b_trans,
            conj: job.b_conj,
        };
        if p.sa {
            load_local(
                &mut s.la,
                p.mwg,
                p.kwg,
                threads,
                p.mdima,
                p.vwm,
                p.strm,
                |r, k| {
                    if m0 + r < job.m && k < klen {
                        T::from_acc(a.get(m0 + r, k0 + k))
                    } else {
                        T::default()
                    }
                },
            );
        }
        if p.sb {
            load_local(
                &mut s.lb,
                p.nwg,
                p.kwg,
                threads,
                p.ndimb,
                p.vwn,
                p.strn,
                |r, k| {
                    if n0 + r < job.n && k < klen {
                        T::from_acc(b.get(n0 + r, k0 + k))
                    } else {
                        T::default()
                    }
                },
            );
        }
        let local_a = Strided {
            data: &s.la,
            base: 0,
            stride: p.mwg,
        };
        let local_b = Strided {
            data: &s.lb,
            base: 0,
            stride: p.nwg,
        };
        match (p.sa, p.sb) {
            (true, true) => {
                compute_phase::<T, _, _, MWI, NWI>(plan, &local_a, &local_b, klen, &mut s.acc)
            }
            (true, false) => {
                compute_phase::<T, _, _, MWI, NWI>(plan, &local_a, &b, klen, &mut s.acc)
            }
            (false, true) => {
                compute_phase::<T, _, _, MWI, NWI>(plan, &a, &local_b, klen, &mut s.acc)
            }
            (false, false) => compute_phase::<T, _, _, MWI, NWI>(plan, &a, &b, klen, &mut s.acc),
        }
    }

    let mut tile = vec![T::default(); p.mwg * p.nwg];
    let beta_zero = inst.beta.is_zero();
    for tn in 0..p.ndimc {
        for tm in 0..p.mdimc {
            let base = (tn * p.mdimc + tm) * MWI * NWI;
            for i in 0..MWI {
                let mm = plan.m_offs[tm * MWI + i];
                if m0 + mm >= job.m {
                    continue;
                }
                for j in 0..NWI {
                    let nn = plan.n_offs[tn * NWI + j];
                    if n0 + nn >= job.n {
                        continue;
                    }
                    let mut v = inst.alpha * s.acc[base + i * NWI + j];
                    if !beta_zero {
                        let c = job.c[inst.c_offset + (m0 + mm) + (n0 + nn) * job.ldc].to_acc();
                        v += inst.beta * c;
                    }
                    tile[mm + nn * p.mwg] = T::from_acc(v);
                }
            }
        }
    }
    tile
}

/// Runs the direct kernel and returns the in-bounds tile values as
/// `(index into C storage, value)` pairs in group order.
pub(crate) fn run_direct<T: Scalar>(
    ctx: &Context,
    family: KernelFamily,
    config: &Configuration,
    job: &DirectJob<'_, T>,
) -> Result<Vec<(usize, T)>> {
    let p = GemmParams::from_config(config)?;
    assert_launch_resources::<T>(ctx, &p)?;
    check_structure(&p)?;
    if job.m == 0 || job.n == 0 || job.instances.is_empty() {
        return Ok(Vec::new());
    }
    let plan = Plan::new(p);
    let group: DirectGroupFn<T> =
        tile_dispatch!(direct_group, DirectGroupFn<T>, T, p.mwi(), p.nwi());
    let grid = WorkGrid::planar(job.m.div_ceil(p.mwg), job.n.div_ceil(p.nwg), p.threads())
        .batched(job.instances.len());
    let (_, local) = launch_resources::<T>(&p);
    let tiles = launch(
        ctx,
        LaunchDesc {
            family,
            config,
            grid,
            local_mem_bytes: local,
        },
        || Scratch::<T>::new(&plan),
        |s, g| group(&plan, job, s, g),
    )?;
    let per_batch = grid.groups[0] * grid.groups[1];
    let mut out = Vec::with_capacity(job.m * job.n * job.instances.len());
    for (idx, tile) in tiles.iter().enumerate() {
        let (gx, gy, gz) = (
            idx % grid.groups[0],
            (idx % per_batch) / grid.groups[0],
            idx / per_batch,
        );
        let (m0, n0) = (gx * p.mwg, gy * p.nwg);
        let base = job.instances[gz].c_offset;
        for nn in 0..p.nwg.min(job.n - n0) {
            for mm in 0..p.mwg.min(job.m - m0) {
                out.push((
                    base + (m0 + mm) + (n0 + nn) * job.ldc,
                    tile[mm + nn * p.mwg],
                ));
            }
        }
    }
    Ok(out)
}
