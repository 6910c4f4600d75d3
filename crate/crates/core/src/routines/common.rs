//! Argument validation and host-side gather/scatter shared by the routines.

use std::ops::Deref;

use parking_lot::RwLockReadGuard;

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::kernels::adapter::AccessAdapter;
use crate::precision::Element;

/// A strided vector operand: element i lives at `offset + i * inc`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Vector<'a, T: Element> {
    pub buf: &'a Buffer<T>,
    pub offset: usize,
    pub inc: usize,
}

impl<T: Element> Vector<'_, T> {
    pub fn extent(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            (n - 1) * self.inc + 1
        }
    }

    /// Contiguous copy of the first n elements.
    pub fn gather(&self, n: usize) -> Vec<T> {
        let data = self.buf.data();
        (0..n).map(|i| data[self.offset + i * self.inc]).collect()
    }

    pub fn scatter(&self, values: &[T]) {
        let mut data = self.buf.data_mut();
        for (i, v) in values.iter().enumerate() {
            data[self.offset + i * self.inc] = *v;
        }
    }

    /// Half-open storage range the first n elements span.
    pub fn range(&self, n: usize) -> (usize, usize) {
        (self.offset, self.offset + self.extent(n))
    }
}

/// Argument positions of a vector operand (buffer, offset, increment).
pub(crate) type VecPos = (usize, usize, usize);

pub(crate) fn check_vector<T: Element>(
    ctx: &Context,
    routine: &'static str,
    name: &'static str,
    pos: VecPos,
    v: &Vector<'_, T>,
    n: usize,
) -> Result<()> {
    if ctx.check(v.buf).is_err() {
        return Err(Error::arg(
            routine,
            pos.0,
            name,
            "buffer belongs to another context",
        ));
    }
    if v.inc == 0 {
        return Err(Error::arg(
            routine,
            pos.2,
            name,
            "increment must be nonzero",
        ));
    }
    let end = v.offset.checked_add(v.extent(n));
    if n > 0 && end.is_none_or(|e| e > v.buf.len()) {
        return Err(Error::arg(
            routine,
            pos.0,
            name,
            format!(
                "{} elements from offset {} with increment {} exceed the buffer length {}",
                n,
                v.offset,
                v.inc,
                v.buf.len()
            ),
        ));
    }
    Ok(())
}

/// Argument positions of a matrix operand (buffer, offset, leading dimension).
pub(crate) type MatPos = (usize, usize, usize);

pub(crate) fn check_matrix<T: Element>(
    ctx: &Context,
    routine: &'static str,
    name: &'static str,
    pos: MatPos,
    buf: &Buffer<T>,
    a: &AccessAdapter,
) -> Result<()> {
    if ctx.check(buf).is_err() {
        return Err(Error::arg(
            routine,
            pos.0,
            name,
            "buffer belongs to another context",
        ));
    }
    if let Some(ld) = a.ld() {
        if ld < a.min_ld() {
            return Err(Error::arg(
                routine,
                pos.2,
                name,
                format!("leading dimension {} is smaller than {}", ld, a.min_ld()),
            ));
        }
    }
    let end = a.offset.checked_add(a.extent());
    if a.extent() > 0 && end.is_none_or(|e| e > buf.len()) {
        return Err(Error::arg(
            routine,
            pos.0,
            name,
            format!(
                "matrix of {} elements from offset {} exceeds the buffer length {}",
                a.extent(),
                a.offset,
                buf.len()
            ),
        ));
    }
    Ok(())
}

pub(crate) fn check_ctx<T: Element>(
    ctx: &Context,
    routine: &'static str,
    name: &'static str,
    index: usize,
    buf: &Buffer<T>,
) -> Result<()> {
    ctx.check(buf)
        .map_err(|_| Error::arg(routine, index, name, "buffer belongs to another context"))
}

/// Read access to an input operand. An input that shares its buffer with
/// the output is copied, so the output can be locked for writing.
pub(crate) enum Held<'a, T: Element> {
    Guard(RwLockReadGuard<'a, Vec<T>>),
    Owned(Vec<T>),
}

impl<T: Element> Deref for Held<'_, T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        match self {
            Held::Guard(g) => g,
            Held::Owned(v) => v,
        }
    }
}

pub(crate) fn hold<'a, T: Element>(input: &'a Buffer<T>, outputs: &[&Buffer<T>]) -> Held<'a, T> {
    if outputs.iter().any(|o| o.same_as(input)) {
        Held::Owned(input.to_vec())
    } else {
        Held::Guard(input.data())
    }
}

/// Whether two half-open storage ranges of the same buffer intersect.
pub(crate) fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < a.1 && b.0 < b.1 && a.0 < b.1 && b.0 < a.1
}

/// Index of the first of a set of ranges that overlaps another one.
pub(crate) fn first_overlap(ranges: &[(usize, usize)]) -> Option<usize> {
    let mut order: Vec<usize> = (0..ranges.len())
        .filter(|&i| ranges[i].0 < ranges[i].1)
        .collect();
    order.sort_by_key(|&i| (ranges[i].0, i));
    let mut hit: Option<usize> = None;
    let mut max_end = 0usize;
    let mut max_idx = usize::MAX;
    for &i in &order {
        if ranges[i].0 < max_end {
            let later = i.max(max_idx);
            hit = Some(hit.map_or(later, |h| h.min(later)));
        }
        if ranges[i].1 > max_end {
            max_end = ranges[i].1;
            max_idx = i;
        }
    }
    hit
}
