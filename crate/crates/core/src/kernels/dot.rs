//! Two-stage reduction kernel.
//!
//! Stage one launches `2 * WGS2` groups of `WGS1` threads. Thread t of group
//! g folds elements `g*WGS1 + t`, stepping by the total thread count, then
//! the group combines its partials with a binary tree in local memory.
//! Stage two is a single group of `WGS2` threads: each thread combines two
//! stage-one partials, followed by the same tree. The tree shape is fixed by
//! the configuration, so results are deterministic.

use crate::context::Context;
use crate::error::{Error, Result};
use crate::precision::{Field, RealField, RealOf, Scalar};

use super::engine::{launch, LaunchDesc, WorkGrid};
use super::params::{Configuration, DotParams, KernelFamily};

/// A reduction expressed as map-then-combine over element indices.
pub(crate) trait Reduction: Sync {
    type Partial: Copy + Send + Sync;
    fn identity(&self) -> Self::Partial;
    fn map(&self, i: usize) -> Self::Partial;
    fn combine(&self, a: Self::Partial, b: Self::Partial) -> Self::Partial;
}

fn tree<R: Reduction>(r: &R, buf: &mut [R::Partial]) -> R::Partial {
    let mut s = buf.len() / 2;
    while s > 0 {
        for t in 0..s {
            buf[t] = r.combine(buf[t], buf[t + s]);
        }
        s /= 2;
    }
    buf[0]
}

/// Runs both stages over `n` elements.
pub(crate) fn run_reduction<R: Reduction>(
    ctx: &Context,
    config: &Configuration,
    n: usize,
    r: &R,
) -> Result<R::Partial> {
    let p = DotParams::from_config(config)?;
    if !p.wgs1.is_power_of_two() || !p.wgs2.is_power_of_two() {
        return Err(Error::usage(
            "reduction work-group sizes must be powers of two",
        ));
    }
    let part_bytes = std::mem::size_of::<R::Partial>();
    let groups = 2 * p.wgs2;
    let stride = groups * p.wgs1;
    let partials = launch(
        ctx,
        LaunchDesc {
            family: KernelFamily::Dot,
            config,
            grid: WorkGrid::linear(groups, p.wgs1),
            local_mem_bytes: p.wgs1 * part_bytes,
        },
        || vec![r.identity(); p.wgs1],
        |local, g| {
            for (t, slot) in local.iter_mut().enumerate() {
                let mut acc = r.identity();
                let mut i = g.x * p.wgs1 + t;
                while i < n {
                    acc = r.combine(acc, r.map(i));
                    i += stride;
                }
                *slot = acc;
            }
            tree(r, local)
        },
    )?;
    let out = launch(
        ctx,
        LaunchDesc {
            family: KernelFamily::Dot,
            config,
            grid: WorkGrid::linear(1, p.wgs2),
            local_mem_bytes: p.wgs2 * part_bytes,
        },
        || vec![r.identity(); p.wgs2],
        |local, _| {
            for (t, slot) in local.iter_mut().enumerate() {
                *slot = r.combine(partials[t], partials[t + p.wgs2]);
            }
            tree(r, local)
        },
    )?;
    Ok(out[0])
}

/// Sum of `f(i)` in the accumulation type.
pub(crate) struct SumOf<F, A> {
    pub f: F,
    pub _acc: std::marker::PhantomData<A>,
}

impl<F, A> SumOf<F, A> {
    pub fn new(f: F) -> Self {
        SumOf {
            f,
            _acc: std::marker::PhantomData,
        }
    }
}

impl<F: Fn(usize) -> A + Sync, A: Field> Reduction for SumOf<F, A> {
    type Partial = A;
    fn identity(&self) -> A {
        A::zero()
    }
    #[inline]
    fn map(&self, i: usize) -> A {
        (self.f)(i)
    }
    #[inline]
    fn combine(&self, a: A, b: A) -> A {
        a + b
    }
}

/// Which element an index reduction selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    /// Largest |re| + |im|.
    AbsMax,
    AbsMin,
    /// Largest real part.
    Max,
    Min,
}

/// Index of the extremum; the lowest index wins ties. NaN keys are skipped.
pub(crate) struct IndexOf<'a, T: Scalar> {
    pub x: &'a [T],
    pub offset: usize,
    pub inc: usize,
    pub kind: Extremum,
}

impl<T: Scalar> Reduction for IndexOf<'_, T> {
    /// (key, index); `u32::MAX` marks "no element".
    type Partial = (RealOf<T>, u32);

    fn identity(&self) -> Self::Partial {
        (RealOf::<T>::zero(), u32::MAX)
    }

    #[inline]
    fn map(&self, i: usize) -> Self::Partial {
        let v = self.x[self.offset + i * self.inc].to_acc();
        let key = match self.kind {
            Extremum::AbsMax | Extremum::AbsMin => v.abs1(),
            Extremum::Max | Extremum::Min => v.re(),
        };
        if key.is_nan() {
            return self.identity();
        }
        (key, i as u32)
    }

    #[inline]
    fn combine(&self, a: Self::Partial, b: Self::Partial) -> Self::Partial {
        if a.1 == u32::MAX {
            return b;
        }
        if b.1 == u32::MAX {
            return a;
        }
        let b_better = match self.kind {
            Extremum::AbsMax | Extremum::Max => b.0 > a.0,
            Extremum::AbsMin | Extremum::Min => b.0 < a.0,
        };
        if b_better || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    }
}

/// Scaled sum of squares (scale, ssq) so that the norm is `scale * sqrt(ssq)`
/// without overflow or underflow in the squares.
pub(crate) struct ScaledSsq<'a, T: Scalar> {
    pub x: &'a [T],
    pub offset: usize,
    pub inc: usize,
}

impl<T: Scalar> ScaledSsq<'_, T> {
    fn push(acc: (RealOf<T>, RealOf<T>), v: RealOf<T>) -> (RealOf<T>, RealOf<T>) {
        let a = v.abs();
        let zero = RealOf::<T>::zero();
        if a == zero || a.is_nan() {
            if a.is_nan() {
                return (a, a);
            }
            return acc;
        }
        let (scale, ssq) = acc;
        if scale < a {
            let r = scale / a;
            (a, RealOf::<T>::one() + ssq * r * r)
        } else {
            let r = a / scale;
            (scale, ssq + r * r)
        }
    }
}

impl<T: Scalar> Reduction for ScaledSsq<'_, T> {
    type Partial = (RealOf<T>, RealOf<T>);

    fn identity(&self) -> Self::Partial {
        (RealOf::<T>::zero(), RealOf::<T>::zero())
    }

    #[inline]
    fn map(&self, i: usize) -> Self::Partial {
        let v = self.x[self.offset + i * self.inc].to_acc();
        let acc = Self::push(self.identity(), v.re());
        Self::push(acc, v.im())
    }

    #[inline]
    fn combine(&self, a: Self::Partial, b: Self::Partial) -> Self::Partial {
        let zero = RealOf::<T>::zero();
        if b.0 == zero {
            return a;
        }
        if a.0 == zero {
            return b;
        }
        if a.0.is_nan() || b.0.is_nan() {
            return (a.0 + b.0, a.1 + b.1);
        }
        if a.0 >= b.0 {
            let r = b.0 / a.0;
            (a.0, a.1 + b.1 * r * r)
        } else {
            let r = a.0 / b.0;
            (b.0, b.1 + a.1 * r * r)
        }
    }
}
