//! One randomized oracle check per (routine, precision). Each call draws a
//! fresh size/flag combination, runs the routine on canary-padded buffers
//! and compares every element of every buffer it may touch.

#![allow(clippy::vec_init_then_push)]

use rand::Rng;
use tuneblas::precision::{ComplexScalar, RealField, RealOf, RealScalar};
use tuneblas::routines::{self as r, ConvGeometry};
use tuneblas::{
    Buffer, Complex32, Complex64, Context, Diagonal, Half, Layout, Precision, Scalar, Side,
    Transpose, Triangle,
};

use super::*;

pub type Check = fn(&mut TestRng, &Context) -> Result<(), String>;

pub struct Entry {
    pub routine: &'static str,
    pub precision: Precision,
    pub check: Check,
}

fn err(e: tuneblas::Error) -> String {
    format!("routine returned an error: {e}")
}

fn ctx_err<T>(what: &str, r: tuneblas::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {}", err(e)))
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one_term(v: C64) -> Acc {
    let mut a = Acc::zero();
    a.add(v);
    a
}

/// Positions of `inside` may hold anything; the rest must be untouched.
fn check_outside<T: Scalar>(
    what: &str,
    got: &[T],
    init: &[T],
    inside: &[bool],
) -> Result<(), String> {
    for (i, &ins) in inside.iter().enumerate() {
        if !ins {
            let (g, o) = (to_c(got[i]), to_c(init[i]));
            if g.re.to_bits() != o.re.to_bits() || g.im.to_bits() != o.im.to_bits() {
                return Err(format!(
                    "{what}: element {i} outside the output was modified"
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- level 1

fn axpy<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let n = rand_dim(rng, 20, 8);
    let alpha: T = rand_scalar(rng);
    let (x, y) = (Vector::<T>::random(rng, n), Vector::<T>::random(rng, n));
    let (xb, yb) = (ctx.upload(&x.data), ctx.upload(&y.data));
    let what = format!("axpy n={n} incx={} incy={}", x.inc, y.inc);
    ctx_err(
        &what,
        r::axpy(ctx, n, alpha, &xb, x.off, x.inc, &yb, y.off, y.inc),
    )?;
    let mut exp = vec![None; y.data.len()];
    for i in 0..n {
        let mut a = Acc::zero();
        a.add(to_c(alpha) * x.get(i));
        a.add(y.get(i));
        exp[y.pos(i)] = Some(a);
    }
    check_buffer(&what, &yb.to_vec(), &y.data, &exp)?;
    check_unchanged(&what, &xb.to_vec(), &x.data)
}

fn scal<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let n = rand_dim(rng, 20, 8);
    let alpha: T = rand_scalar(rng);
    let x = Vector::<T>::random(rng, n);
    let xb = ctx.upload(&x.data);
    let what = format!("scal n={n} inc={}", x.inc);
    ctx_err(&what, r::scal(ctx, n, alpha, &xb, x.off, x.inc))?;
    let mut exp = vec![None; x.data.len()];
    for i in 0..n {
        exp[x.pos(i)] = Some(one_term(to_c(alpha) * x.get(i)));
    }
    check_buffer(&what, &xb.to_vec(), &x.data, &exp)
}

fn copy<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let n = rand_dim(rng, 20, 8);
    let (x, y) = (Vector::<T>::random(rng, n), Vector::<T>::random(rng, n));
    let (xb, yb) = (ctx.upload(&x.data), ctx.upload(&y.data));
    let what = format!("copy n={n}");
    ctx_err(&what, r::copy(ctx, n, &xb, x.off, x.inc, &yb, y.off, y.inc))?;
    let mut exp = vec![None; y.data.len()];
    for i in 0..n {
        exp[y.pos(i)] = Some(Acc::exact(x.get(i)));
    }
    check_buffer(&what, &yb.to_vec(), &y.data, &exp)?;
    check_unchanged(&what, &xb.to_vec(), &x.data)
}

fn swap<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let n = rand_dim(rng, 20, 8);
    let (x, y) = (Vector::<T>::random(rng, n), Vector::<T>::random(rng, n));
    let (xb, yb) = (ctx.upload(&x.data), ctx.upload(&y.data));
    let what = format!("swap n={n}");
    ctx_err(&what, r::swap(ctx, n, &xb, x.off, x.inc, &yb, y.off, y.inc))?;
    let mut ex = vec![None; x.data.len()];
    let mut ey = vec![None; y.data.len()];
    for i in 0..n {
        ex[x.pos(i)] = Some(Acc::exact(y.get(i)));
        ey[y.pos(i)] = Some(Acc::exact(x.get(i)));
    }
    check_buffer(&what, &xb.to_vec(), &x.data, &ex)?;
    check_buffer(&what, &yb.to_vec(), &y.data, &ey)
}

/// Output cell for scalar results: an offset into a random buffer.
fn out_cell<T: Scalar>(rng: &mut TestRng) -> (Vec<T>, usize) {
    let off = rng.gen_range(0..3);
    let len = off + 1 + rng.gen_range(0..3);
    (rand_vec(rng, len), off)
}

type DotCall<T> = fn(
    &Context,
    usize,
    &Buffer<T>,
    usize,
    &Buffer<T>,
    usize,
    usize,
    &Buffer<T>,
    usize,
    usize,
) -> tuneblas::Result<()>;

fn dot_like<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    conj: bool,
    call: DotCall<T>,
) -> Result<(), String> {
    let n = rand_dim(rng, 30, 8);
    let (x, y) = (Vector::<T>::random(rng, n), Vector::<T>::random(rng, n));
    let (out, oo) = out_cell::<T>(rng);
    let (xb, yb, ob) = (ctx.upload(&x.data), ctx.upload(&y.data), ctx.upload(&out));
    let what = format!("{name} n={n}");
    ctx_err(
        &what,
        call(ctx, n, &ob, oo, &xb, x.off, x.inc, &yb, y.off, y.inc),
    )?;
    let mut a = Acc::zero();
    for i in 0..n {
        let xi = if conj { x.get(i).conj() } else { x.get(i) };
        a.add(xi * y.get(i));
    }
    let mut exp = vec![None; out.len()];
    exp[oo] = Some(a);
    check_buffer(&what, &ob.to_vec(), &out, &exp)?;
    check_unchanged(&what, &xb.to_vec(), &x.data)?;
    check_unchanged(&what, &yb.to_vec(), &y.data)
}

fn dot<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    dot_like::<T>(rng, ctx, "dot", false, r::dot::<T>)
}

fn dotu<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    dot_like::<T>(rng, ctx, "dotu", false, r::dotu::<T>)
}

fn dotc<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    dot_like::<T>(rng, ctx, "dotc", true, r::dotc::<T>)
}

type ReduceCall<T> =
    fn(&Context, usize, &Buffer<T>, usize, &Buffer<T>, usize, usize) -> tuneblas::Result<()>;

fn reduce<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    call: ReduceCall<T>,
    oracle: fn(&[C64]) -> Acc,
) -> Result<(), String> {
    let n = rand_dim(rng, 30, 8);
    let x = Vector::<T>::random(rng, n);
    let (out, oo) = out_cell::<T>(rng);
    let (xb, ob) = (ctx.upload(&x.data), ctx.upload(&out));
    let what = format!("{name} n={n} inc={}", x.inc);
    ctx_err(&what, call(ctx, n, &ob, oo, &xb, x.off, x.inc))?;
    let mut exp = vec![None; out.len()];
    exp[oo] = Some(oracle(&x.values(n)));
    check_buffer(&what, &ob.to_vec(), &out, &exp)?;
    check_unchanged(&what, &xb.to_vec(), &x.data)
}

fn nrm2<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    reduce::<T>(rng, ctx, "nrm2", r::nrm2::<T>, |xs| {
        let norm = xs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        Acc {
            v: C64::new(norm, 0.0),
            max: norm,
            n: xs.len(),
        }
    })
}

fn asum<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    reduce::<T>(rng, ctx, "asum", r::asum::<T>, |xs| {
        let mut a = Acc::zero();
        for v in xs {
            a.add(C64::new(v.re.abs() + v.im.abs(), 0.0));
        }
        a
    })
}

fn sum<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    reduce::<T>(rng, ctx, "sum", r::sum::<T>, |xs| {
        let mut a = Acc::zero();
        for v in xs {
            a.add(*v);
        }
        a
    })
}

type IndexCall<T> =
    fn(&Context, usize, &Buffer<u32>, usize, &Buffer<T>, usize, usize) -> tuneblas::Result<()>;

/// Index reductions on small integers, so ties are exact in every precision.
fn index_reduce<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    call: IndexCall<T>,
    key: fn(C64) -> f64,
    largest: bool,
) -> Result<(), String> {
    let n = rand_dim(rng, 30, 8).max(1);
    let mut x = Vector::<T>::random(rng, n);
    for v in x.data.iter_mut() {
        *v = T::from_f64_parts(rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64);
    }
    let off = rng.gen_range(0..3);
    let out: Vec<u32> = (0..off + 2).map(|_| rng.gen()).collect();
    let (xb, ob) = (ctx.upload(&x.data), ctx.upload(&out));
    let what = format!("{name} n={n} inc={}", x.inc);
    ctx_err(&what, call(ctx, n, &ob, off, &xb, x.off, x.inc))?;
    let mut best = 0;
    for i in 1..n {
        let (k, b) = (key(x.get(i)), key(x.get(best)));
        if (largest && k > b) || (!largest && k < b) {
            best = i;
        }
    }
    let mut expected = out.clone();
    expected[off] = best as u32;
    let got = ob.to_vec();
    if got != expected {
        return Err(format!("{what}: got {got:?}, expected {expected:?}"));
    }
    Ok(())
}

fn abs1(v: C64) -> f64 {
    v.re.abs() + v.im.abs()
}

fn re(v: C64) -> f64 {
    v.re
}

fn amax<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    index_reduce::<T>(rng, ctx, "amax", r::amax::<T>, abs1, true)
}

fn amin<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    index_reduce::<T>(rng, ctx, "amin", r::amin::<T>, abs1, false)
}

fn max<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    index_reduce::<T>(rng, ctx, "max", r::max::<T>, re, true)
}

fn min<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    index_reduce::<T>(rng, ctx, "min", r::min::<T>, re, false)
}

// ---------------------------------------------------------------- level 2

/// y = alpha * M * x + beta * y on strided vectors, with M given logically.
fn mv_expect<T: Scalar>(
    m: &Mat,
    alpha: C64,
    x: &Vector<T>,
    beta: C64,
    y: &Vector<T>,
) -> Vec<Option<Acc>> {
    let mut exp = vec![None; y.data.len()];
    for i in 0..m.rows {
        let mut a = Acc::zero();
        for j in 0..m.cols {
            a.add(alpha * m.get(i, j) * x.get(j));
        }
        if beta != zero() {
            a.add(beta * y.get(i));
        }
        exp[y.pos(i)] = Some(a);
    }
    exp
}

fn gemv<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let (layout, t) = (rand_layout(rng), rand_transpose(rng));
    let (m, n) = (rand_dim(rng, 16, 3), rand_dim(rng, 16, 3));
    let (alpha, beta): (T, T) = (rand_scalar(rng), rand_scalar(rng));
    let a = Storage::<T>::general(rng, layout, m, n);
    let (xl, yl) = if t == Transpose::No { (n, m) } else { (m, n) };
    let (x, y) = (Vector::<T>::random(rng, xl), Vector::<T>::random(rng, yl));
    let (ab, xb, yb) = (
        ctx.upload(&a.data),
        ctx.upload(&x.data),
        ctx.upload(&y.data),
    );
    let what = format!("gemv {layout:?} {t:?} m={m} n={n} lda={}", a.ld);
    ctx_err(
        &what,
        r::gemv(
            ctx, layout, t, m, n, alpha, &ab, a.off, a.ld, &xb, x.off, x.inc, beta, &yb, y.off,
            y.inc,
        ),
    )?;
    let op = read_general(&a.data, layout, a.off, a.ld, m, n).op(t);
    let exp = mv_expect(&op, to_c(alpha), &x, to_c(beta), &y);
    check_buffer(&what, &yb.to_vec(), &y.data, &exp)?;
    check_unchanged(&what, &ab.to_vec(), &a.data)?;
    check_unchanged(&what, &xb.to_vec(), &x.data)
}

fn gbmv<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let (layout, t) = (rand_layout(rng), rand_transpose(rng));
    let (m, n) = (rand_dim(rng, 16, 3).max(1), rand_dim(rng, 16, 3).max(1));
    let (kl, ku) = (rng.gen_range(0..m.min(6)), rng.gen_range(0..n.min(6)));
    let (alpha, beta): (T, T) = (rand_scalar(rng), rand_scalar(rng));
    let outer = if layout == Layout::ColMajor { n } else { m };
    let a = Storage::<T>::lines(rng, outer, kl + ku + 1);
    let (xl, yl) = if t == Transpose::No { (n, m) } else { (m, n) };
    let (x, y) = (Vector::<T>::random(rng, xl), Vector::<T>::random(rng, yl));
    let (ab, xb, yb) = (
        ctx.upload(&a.data),
        ctx.upload(&x.data),
        ctx.upload(&y.data),
    );
    let what = format!(
        "gbmv {layout:?} {t:?} m={m} n={n} kl={kl} ku={ku} lda={}",
        a.ld
    );
    ctx_err(
        &what,
        r::gbmv(
            ctx, layout, t, m, n, kl, ku, alpha, &ab, a.off, a.ld, &xb, x.off, x.inc, beta, &yb,
            y.off, y.inc,
        ),
    )?;
    let full = Mat::from_fn(m, n, |i, j| {
        band_idx(layout, a.off, a.ld, kl, ku, i, j).map_or(zero(), |p| to_c(a.data[p]))
    });
    let exp = mv_expect(&full.op(t), to_c(alpha), &x, to_c(beta), &y);
    check_buffer(&what, &yb.to_vec(), &y.data, &exp)?;
    check_unchanged(&what, &ab.to_vec(), &a.data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Form {
    Full,
    Band,
    Packed,
}

/// Storage of a square matrix of which one triangle is referenced.
struct Square<T> {
    layout: Layout,
    tri: Triangle,
    n: usize,
    k: usize,
    form: Form,
    a: Storage<T>,
}

impl<T: Scalar> Square<T> {
    fn random(rng: &mut TestRng, form: Form, small: usize, big: usize) -> Square<T> {
        let (layout, tri) = (rand_layout(rng), rand_triangle(rng));
        let n = rand_dim(rng, small, big);
        let (n, k) = match form {
            Form::Band => {
                let n = n.max(1);
                (n, rng.gen_range(0..n.min(6)))
            }
            _ => (n, 0),
        };
        let a = match form {
            Form::Full => Storage::general(rng, layout, n, n),
            Form::Band => Storage::lines(rng, n, k + 1),
            Form::Packed => Storage::packed(rng, n),
        };
        Square {
            layout,
            tri,
            n,
            k,
            form,
            a,
        }
    }

    fn at(&self, i: usize, j: usize) -> Option<usize> {
        if !self.tri.contains(i, j) {
            return match self.form {
                Form::Full => Some(gidx(self.layout, self.a.off, self.a.ld, i, j)),
                _ => None,
            };
        }
        match self.form {
            Form::Full => Some(gidx(self.layout, self.a.off, self.a.ld, i, j)),
            Form::Band => tri_band_idx(self.layout, self.a.off, self.a.ld, self.k, self.tri, i, j),
            Form::Packed => packed_idx(self.layout, self.a.off, self.n, self.tri, i, j),
        }
    }

    fn logical(&self, kind: Kind) -> Mat {
        read_structured(&self.a.data, self.n, self.tri, kind, |i, j| self.at(i, j))
    }

    fn describe(&self) -> String {
        format!(
            "{:?} {:?} n={} k={} ld={} {:?}",
            self.layout, self.tri, self.n, self.k, self.a.ld, self.form
        )
    }
}

struct MvCall<'a, T: Scalar> {
    layout: Layout,
    tri: Triangle,
    n: usize,
    k: usize,
    alpha: T,
    beta: T,
    a: &'a Buffer<T>,
    a_off: usize,
    a_ld: usize,
    x: &'a Buffer<T>,
    x_off: usize,
    x_inc: usize,
    y: &'a Buffer<T>,
    y_off: usize,
    y_inc: usize,
}

fn square_mv<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    form: Form,
    kind: Kind,
    call: impl Fn(&Context, &MvCall<'_, T>) -> tuneblas::Result<()>,
) -> Result<(), String> {
    let sq = Square::<T>::random(rng, form, 16, 3);
    let (alpha, beta): (T, T) = (rand_scalar(rng), rand_scalar(rng));
    let (x, y) = (
        Vector::<T>::random(rng, sq.n),
        Vector::<T>::random(rng, sq.n),
    );
    let (ab, xb, yb) = (
        ctx.upload(&sq.a.data),
        ctx.upload(&x.data),
        ctx.upload(&y.data),
    );
    let what = format!("{name} {}", sq.describe());
    let c = MvCall {
        layout: sq.layout,
        tri: sq.tri,
        n: sq.n,
        k: sq.k,
        alpha,
        beta,
        a: &ab,
        a_off: sq.a.off,
        a_ld: sq.a.ld,
        x: &xb,
        x_off: x.off,
        x_inc: x.inc,
        y: &yb,
        y_off: y.off,
        y_inc: y.inc,
    };
    ctx_err(&what, call(ctx, &c))?;
    let exp = mv_expect(&sq.logical(kind), to_c(alpha), &x, to_c(beta), &y);
    check_buffer(&what, &yb.to_vec(), &y.data, &exp)?;
    check_unchanged(&what, &ab.to_vec(), &sq.a.data)
}

fn hemv<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    square_mv::<T>(rng, ctx, "hemv", Form::Full, Kind::Hermitian, |ctx, c| {
        r::hemv(
            ctx, c.layout, c.tri, c.n, c.alpha, c.a, c.a_off, c.a_ld, c.x, c.x_off, c.x_inc,
            c.beta, c.y, c.y_off, c.y_inc,
        )
    })
}

fn hbmv<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    square_mv::<T>(rng, ctx, "hbmv", Form::Band, Kind::Hermitian, |ctx, c| {
        r::hbmv(
            ctx, c.layout, c.tri, c.n, c.k, c.alpha, c.a, c.a_off, c.a_ld, c.x, c.x_off, c.x_inc,
            c.beta, c.y, c.y_off, c.y_inc,
        )
    })
}

fn hpmv<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    square_mv::<T>(rng, ctx, "hpmv", Form::Packed, Kind::Hermitian, |ctx, c| {
        r::hpmv(
            ctx, c.layout, c.tri, c.n, c.alpha, c.a, c.a_off, c.x, c.x_off, c.x_inc, c.beta, c.y,
            c.y_off, c.y_inc,
        )
    })
}

fn symv<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    square_mv::<T>(rng, ctx, "symv", Form::Full, Kind::Symmetric, |ctx, c| {
        r::symv(
            ctx, c.layout, c.tri, c.n, c.alpha, c.a, c.a_off, c.a_ld, c.x, c.x_off, c.x_inc,
            c.beta, c.y, c.y_off, c.y_inc,
        )
    })
}

fn sbmv<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    square_mv::<T>(rng, ctx, "sbmv", Form::Band, Kind::Symmetric, |ctx, c| {
        r::sbmv(
            ctx, c.layout, c.tri, c.n, c.k, c.alpha, c.a, c.a_off, c.a_ld, c.x, c.x_off, c.x_inc,
            c.beta, c.y, c.y_off, c.y_inc,
        )
    })
}

fn spmv<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    square_mv::<T>(rng, ctx, "spmv", Form::Packed, Kind::Symmetric, |ctx, c| {
        r::spmv(
            ctx, c.layout, c.tri, c.n, c.alpha, c.a, c.a_off, c.x, c.x_off, c.x_inc, c.beta, c.y,
            c.y_off, c.y_inc,
        )
    })
}

struct TriCall<'a, T: Scalar> {
    layout: Layout,
    tri: Triangle,
    trans: Transpose,
    diag: Diagonal,
    n: usize,
    k: usize,
    a: &'a Buffer<T>,
    a_off: usize,
    a_ld: usize,
    x: &'a Buffer<T>,
    x_off: usize,
    x_inc: usize,
}

/// Triangular matrix-vector product (`solve == false`) or solve.
fn triangular_mv<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    form: Form,
    solve: bool,
    call: impl Fn(&Context, &TriCall<'_, T>) -> tuneblas::Result<()>,
) -> Result<(), String> {
    let mut sq = Square::<T>::random(rng, form, 16, 2);
    let trans = rand_transpose(rng);
    let diag = if rng.gen() {
        Diagonal::Unit
    } else {
        Diagonal::NonUnit
    };
    if solve {
        let (layout, off, ld, k, tri, n) = (sq.layout, sq.a.off, sq.a.ld, sq.k, sq.tri, sq.n);
        let at = |i: usize, j: usize| match form {
            Form::Full => Some(gidx(layout, off, ld, i, j)),
            Form::Band => tri_band_idx(layout, off, ld, k, tri, i, j),
            Form::Packed => packed_idx(layout, off, n, tri, i, j),
        };
        condition_triangle(rng, &mut sq.a.data, n, tri, at);
    }
    let x = Vector::<T>::random(rng, sq.n);
    let (ab, xb) = (ctx.upload(&sq.a.data), ctx.upload(&x.data));
    let what = format!("{name} {} {trans:?} {diag:?}", sq.describe());
    let c = TriCall {
        layout: sq.layout,
        tri: sq.tri,
        trans,
        diag,
        n: sq.n,
        k: sq.k,
        a: &ab,
        a_off: sq.a.off,
        a_ld: sq.a.ld,
        x: &xb,
        x_off: x.off,
        x_inc: x.inc,
    };
    ctx_err(&what, call(ctx, &c))?;
    let op = sq
        .logical(Kind::Triangular {
            unit: diag == Diagonal::Unit,
        })
        .op(trans);
    let got = xb.to_vec();
    check_unchanged(&what, &ab.to_vec(), &sq.a.data)?;
    if !solve {
        let mut exp = vec![None; x.data.len()];
        for i in 0..sq.n {
            let mut a = Acc::zero();
            for j in 0..sq.n {
                a.add(op.get(i, j) * x.get(j));
            }
            exp[x.pos(i)] = Some(a);
        }
        return check_buffer(&what, &got, &x.data, &exp);
    }
    let mut inside = vec![false; x.data.len()];
    for i in 0..sq.n {
        inside[x.pos(i)] = true;
    }
    check_outside(&what, &got, &x.data, &inside)?;
    let sol: Vec<C64> = (0..sq.n).map(|i| to_c(got[x.pos(i)])).collect();
    let b = x.values(sq.n);
    let bnorm = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = 8.0 * eps::<T>() * sq.n.max(1) as f64 * bnorm;
    for (i, bi) in b.iter().enumerate() {
        let s: C64 = sol.iter().enumerate().map(|(j, v)| op.get(i, j) * v).sum();
        let res = (s - bi).norm();
        if res.is_nan() || res > tol {
            return Err(format!(
                "{what}: residual {res:e} in row {i} exceeds {tol:e}"
            ));
        }
    }
    Ok(())
}

fn trmv<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    triangular_mv::<T>(rng, ctx, "trmv", Form::Full, false, |ctx, c| {
        r::trmv(
            ctx, c.layout, c.tri, c.trans, c.diag, c.n, c.a, c.a_off, c.a_ld, c.x, c.x_off, c.x_inc,
        )
    })
}

fn tbmv<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    triangular_mv::<T>(rng, ctx, "tbmv", Form::Band, false, |ctx, c| {
        r::tbmv(
            ctx, c.layout, c.tri, c.trans, c.diag, c.n, c.k, c.a, c.a_off, c.a_ld, c.x, c.x_off,
            c.x_inc,
        )
    })
}

fn tpmv<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    triangular_mv::<T>(rng, ctx, "tpmv", Form::Packed, false, |ctx, c| {
        r::tpmv(
            ctx, c.layout, c.tri, c.trans, c.diag, c.n, c.a, c.a_off, c.x, c.x_off, c.x_inc,
        )
    })
}

fn trsv<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    triangular_mv::<T>(rng, ctx, "trsv", Form::Full, true, |ctx, c| {
        r::trsv(
            ctx, c.layout, c.tri, c.trans, c.diag, c.n, c.a, c.a_off, c.a_ld, c.x, c.x_off, c.x_inc,
        )
    })
}

type GerCall<T> = fn(
    &Context,
    Layout,
    usize,
    usize,
    T,
    &Buffer<T>,
    usize,
    usize,
    &Buffer<T>,
    usize,
    usize,
    &Buffer<T>,
    usize,
    usize,
) -> tuneblas::Result<()>;

fn ger_like<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    conj: bool,
    call: GerCall<T>,
) -> Result<(), String> {
    let layout = rand_layout(rng);
    let (m, n) = (rand_dim(rng, 16, 3), rand_dim(rng, 16, 3));
    let alpha: T = rand_scalar(rng);
    let (x, y) = (Vector::<T>::random(rng, m), Vector::<T>::random(rng, n));
    let a = Storage::<T>::general(rng, layout, m, n);
    let (xb, yb, ab) = (
        ctx.upload(&x.data),
        ctx.upload(&y.data),
        ctx.upload(&a.data),
    );
    let what = format!("{name} {layout:?} m={m} n={n} lda={}", a.ld);
    ctx_err(
        &what,
        call(
            ctx, layout, m, n, alpha, &xb, x.off, x.inc, &yb, y.off, y.inc, &ab, a.off, a.ld,
        ),
    )?;
    let mut exp = vec![None; a.data.len()];
    for j in 0..n {
        let yj = if conj { y.get(j).conj() } else { y.get(j) };
        for i in 0..m {
            let p = gidx(layout, a.off, a.ld, i, j);
            let mut acc = Acc::zero();
            acc.add(to_c(alpha) * x.get(i) * yj);
            acc.add(to_c(a.data[p]));
            exp[p] = Some(acc);
        }
    }
    check_buffer(&what, &ab.to_vec(), &a.data, &exp)
}

fn ger<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    ger_like::<T>(rng, ctx, "ger", false, r::ger::<T>)
}

fn geru<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    ger_like::<T>(rng, ctx, "geru", false, r::geru::<T>)
}

fn gerc<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    ger_like::<T>(rng, ctx, "gerc", true, r::gerc::<T>)
}

struct RankCall<'a, T: Scalar> {
    layout: Layout,
    tri: Triangle,
    n: usize,
    alpha: C64,
    x: &'a Buffer<T>,
    x_off: usize,
    x_inc: usize,
    y: &'a Buffer<T>,
    y_off: usize,
    y_inc: usize,
    a: &'a Buffer<T>,
    a_off: usize,
    a_ld: usize,
}

/// Symmetric or hermitian rank-1 (`two == false`) or rank-2 update of one triangle.
fn rank_update<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    form: Form,
    hermitian: bool,
    two: bool,
    call: impl Fn(&Context, &RankCall<'_, T>) -> tuneblas::Result<()>,
) -> Result<(), String> {
    let sq = Square::<T>::random(rng, form, 16, 2);
    let n = sq.n;
    let alpha = to_c(rand_scalar::<T>(rng));
    let alpha = if hermitian && !two {
        C64::new(alpha.re, 0.0)
    } else {
        alpha
    };
    let (x, y) = (Vector::<T>::random(rng, n), Vector::<T>::random(rng, n));
    let (xb, yb, ab) = (
        ctx.upload(&x.data),
        ctx.upload(&y.data),
        ctx.upload(&sq.a.data),
    );
    let what = format!("{name} {}", sq.describe());
    let c = RankCall {
        layout: sq.layout,
        tri: sq.tri,
        n,
        alpha,
        x: &xb,
        x_off: x.off,
        x_inc: x.inc,
        y: &yb,
        y_off: y.off,
        y_inc: y.inc,
        a: &ab,
        a_off: sq.a.off,
        a_ld: sq.a.ld,
    };
    ctx_err(&what, call(ctx, &c))?;
    let cj = |v: C64| if hermitian { v.conj() } else { v };
    let mut exp = vec![None; sq.a.data.len()];
    let mut diag = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if !sq.tri.contains(i, j) {
                continue;
            }
            let p = sq.at(i, j).expect("stored triangle");
            let mut acc = Acc::zero();
            acc.add(alpha * x.get(i) * cj(x.get(j)) * if two { 0.0 } else { 1.0 });
            if two {
                acc.add(alpha * x.get(i) * cj(y.get(j)));
                let a2 = if hermitian { alpha.conj() } else { alpha };
                acc.add(a2 * y.get(i) * cj(x.get(j)));
            }
            acc.add(to_c(sq.a.data[p]));
            if hermitian && i == j {
                acc.v.im = 0.0;
                diag.push(p);
            }
            exp[p] = Some(acc);
        }
    }
    let got = ab.to_vec();
    check_buffer(&what, &got, &sq.a.data, &exp)?;
    for p in diag {
        if to_c(got[p]).im != 0.0 {
            return Err(format!(
                "{what}: diagonal element {p} has a nonzero imaginary part"
            ));
        }
    }
    Ok(())
}

fn real_of<T: Scalar>(v: C64) -> RealOf<T> {
    <RealOf<T> as RealField>::from_f64(v.re)
}

fn her<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "her", Form::Full, true, false, |ctx, c| {
        r::her(
            ctx,
            c.layout,
            c.tri,
            c.n,
            real_of::<T>(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.a,
            c.a_off,
            c.a_ld,
        )
    })
}

fn hpr<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "hpr", Form::Packed, true, false, |ctx, c| {
        r::hpr(
            ctx,
            c.layout,
            c.tri,
            c.n,
            real_of::<T>(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.a,
            c.a_off,
        )
    })
}

fn her2<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "her2", Form::Full, true, true, |ctx, c| {
        r::her2(
            ctx,
            c.layout,
            c.tri,
            c.n,
            from_c(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.y,
            c.y_off,
            c.y_inc,
            c.a,
            c.a_off,
            c.a_ld,
        )
    })
}

fn hpr2<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "hpr2", Form::Packed, true, true, |ctx, c| {
        r::hpr2(
            ctx,
            c.layout,
            c.tri,
            c.n,
            from_c(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.y,
            c.y_off,
            c.y_inc,
            c.a,
            c.a_off,
        )
    })
}

fn syr<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "syr", Form::Full, false, false, |ctx, c| {
        r::syr(
            ctx,
            c.layout,
            c.tri,
            c.n,
            from_c(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.a,
            c.a_off,
            c.a_ld,
        )
    })
}

fn spr<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "spr", Form::Packed, false, false, |ctx, c| {
        r::spr(
            ctx,
            c.layout,
            c.tri,
            c.n,
            from_c(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.a,
            c.a_off,
        )
    })
}

fn syr2<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "syr2", Form::Full, false, true, |ctx, c| {
        r::syr2(
            ctx,
            c.layout,
            c.tri,
            c.n,
            from_c(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.y,
            c.y_off,
            c.y_inc,
            c.a,
            c.a_off,
            c.a_ld,
        )
    })
}

fn spr2<T: RealScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    rank_update::<T>(rng, ctx, "spr2", Form::Packed, false, true, |ctx, c| {
        r::spr2(
            ctx,
            c.layout,
            c.tri,
            c.n,
            from_c(c.alpha),
            c.x,
            c.x_off,
            c.x_inc,
            c.y,
            c.y_off,
            c.y_inc,
            c.a,
            c.a_off,
        )
    })
}

// ---------------------------------------------------------------- level 3

/// Expected general C after `C = P + beta * C`, P given per logical element.
fn c_expect<T: Scalar>(
    c: &Storage<T>,
    layout: Layout,
    rows: usize,
    cols: usize,
    mut p: Vec<Acc>,
    beta: C64,
    only: impl Fn(usize, usize) -> bool,
) -> Vec<Option<Acc>> {
    let mut exp = vec![None; c.data.len()];
    for j in 0..cols {
        for i in 0..rows {
            if !only(i, j) {
                continue;
            }
            let pos = gidx(layout, c.off, c.ld, i, j);
            let acc = &mut p[i + j * rows];
            if beta != zero() {
                acc.add(beta * to_c(c.data[pos]));
            }
            exp[pos] = Some(*acc);
        }
    }
    exp
}

fn gemm<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let layout = rand_layout(rng);
    let (ta, tb) = (rand_transpose(rng), rand_transpose(rng));
    let (m, n, k) = (
        rand_dim(rng, 12, 1),
        rand_dim(rng, 12, 1),
        rand_dim(rng, 12, 1),
    );
    let (alpha, beta): (T, T) = (rand_scalar(rng), rand_scalar(rng));
    let (ar, ac) = if ta == Transpose::No { (m, k) } else { (k, m) };
    let (br, bc) = if tb == Transpose::No { (k, n) } else { (n, k) };
    let a = Storage::<T>::general(rng, layout, ar, ac);
    let b = Storage::<T>::general(rng, layout, br, bc);
    let c = Storage::<T>::general(rng, layout, m, n);
    let (ab, bb, cb) = (
        ctx.upload(&a.data),
        ctx.upload(&b.data),
        ctx.upload(&c.data),
    );
    let what = format!(
        "gemm {layout:?} {ta:?} {tb:?} m={m} n={n} k={k} ld=({},{},{})",
        a.ld, b.ld, c.ld
    );
    ctx_err(
        &what,
        r::gemm(
            ctx, layout, ta, tb, m, n, k, alpha, &ab, a.off, a.ld, &bb, b.off, b.ld, beta, &cb,
            c.off, c.ld,
        ),
    )?;
    let am = read_general(&a.data, layout, a.off, a.ld, ar, ac).op(ta);
    let bm = read_general(&b.data, layout, b.off, b.ld, br, bc).op(tb);
    let exp = c_expect(
        &c,
        layout,
        m,
        n,
        product(to_c(alpha), &am, &bm),
        to_c(beta),
        |_, _| true,
    );
    check_buffer(&what, &cb.to_vec(), &c.data, &exp)?;
    check_unchanged(&what, &ab.to_vec(), &a.data)?;
    check_unchanged(&what, &bb.to_vec(), &b.data)
}

type StructuredMm<T> = fn(
    &Context,
    Layout,
    Side,
    Triangle,
    usize,
    usize,
    T,
    &Buffer<T>,
    usize,
    usize,
    &Buffer<T>,
    usize,
    usize,
    T,
    &Buffer<T>,
    usize,
    usize,
) -> tuneblas::Result<()>;

fn structured_mm<T: Scalar>(
    rng: &mut TestRng,
    ctx: &Context,
    name: &str,
    kind: Kind,
    call: StructuredMm<T>,
) -> Result<(), String> {
    let (layout, tri) = (rand_layout(rng), rand_triangle(rng));
    let side = if rng.gen() { Side::Left } else { Side::Right };
    let (m, n) = (rand_dim(rng, 12, 1), rand_dim(rng, 12, 1));
    let ka = if side == Side::Left { m } else { n };
    let (alpha, beta): (T, T) = (rand_scalar(rng), rand_scalar(rng));
    let a = Storage::<T>::general(rng, layout, ka, ka);
    let b = Storage::<T>::general(rng, layout, m, n);
    let c = Storage::<T>::general(rng, layout, m, n);
    let (ab, bb, cb) = (
        ctx.upload(&a.data),
        ctx.upload(&b.data),
        ctx.upload(&c.data),
    );
    let what = format!("{name} {layout:?} {side:?} {tri:?} m={m} n={n}");
    ctx_err(
        &what,
        call(
            ctx, layout, side, tri, m, n, alpha, &ab, a.off, a.ld, &bb, b.off, b.ld, beta, &cb,
            c.off, c.ld,
        ),
    )?;
    let am = read_structured(&a.data, ka, tri, kind, |i, j| {
        Some(gidx(layout, a.off, a.ld, i, j))
    });
    let bm = read_general(&b.data, layout, b.off, b.ld, m, n);
    let p = if side == Side::Left {
        product(to_c(alpha), &am, &bm)
    } else {
        product(to_c(alpha), &bm, &am)
    };
    let exp = c_expect(&c, layout, m, n, p, to_c(beta), |_, _| true);
    check_buffer(&what, &cb.to_vec(), &c.data, &exp)?;
    check_unchanged(&what, &ab.to_vec(), &a.data)
}

fn symm<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    structured_mm::<T>(rng, ctx, "symm", Kind::Symmetric, r::symm::<T>)
}

fn hemm<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    structured_mm::<T>(rng, ctx, "hemm", Kind::Hermitian, r::hemm::<T>)
}

struct RankK<T> {
    layout: Layout,
    tri: Triangle,
    trans: Transpose,
    n: usize,
    k: usize,
    a: Storage<T>,
    b: Storage<T>,
    c: Storage<T>,
}

fn rank_k_case<T: Scalar>(rng: &mut TestRng, hermitian: bool) -> RankK<T> {
    let (layout, tri) = (rand_layout(rng), rand_triangle(rng));
    let trans = match (rng.gen::<bool>(), hermitian) {
        (false, _) => Transpose::No,
        (true, false) => Transpose::Yes,
        (true, true) => Transpose::Conjugate,
    };
    let (n, k) = (rand_dim(rng, 12, 1), rand_dim(rng, 12, 1));
    let (ar, ac) = if trans == Transpose::No {
        (n, k)
    } else {
        (k, n)
    };
    RankK {
        layout,
        tri,
        trans,
        n,
        k,
        a: Storage::general(rng, layout, ar, ac),
        b: Storage::general(rng, layout, ar, ac),
        c: Storage::general(rng, layout, n, n),
    }
}

impl<T: Scalar> RankK<T> {
    /// op(A) as the n x k factor: A itself, or A^T / A^H.
    fn factor(&self, s: &Storage<T>) -> Mat {
        let (ar, ac) = if self.trans == Transpose::No {
            (self.n, self.k)
        } else {
            (self.k, self.n)
        };
        read_general(&s.data, self.layout, s.off, s.ld, ar, ac).op(self.trans)
    }

    fn describe(&self, name: &str) -> String {
        format!(
            "{name} {:?} {:?} {:?} n={} k={}",
            self.layout, self.tri, self.trans, self.n, self.k
        )
    }

    /// Checks C against `sum of products + beta * C` on the triangle.
    fn check(
        &self,
        what: &str,
        got: &[T],
        p: Vec<Acc>,
        beta: C64,
        hermitian: bool,
    ) -> Result<(), String> {
        let tri = self.tri;
        let mut exp = c_expect(&self.c, self.layout, self.n, self.n, p, beta, |i, j| {
            tri.contains(i, j)
        });
        if hermitian {
            for i in 0..self.n {
                let pos = gidx(self.layout, self.c.off, self.c.ld, i, i);
                if let Some(a) = exp[pos].as_mut() {
                    a.v.im = 0.0;
                }
                if to_c(got[pos]).im != 0.0 {
                    return Err(format!(
                        "{what}: diagonal element ({i}, {i}) has a nonzero imaginary part"
                    ));
                }
            }
        }
        check_buffer(what, got, &self.c.data, &exp)
    }
}

/// alpha * X * Y^op, with op the conjugate transpose for hermitian updates.
fn outer(alpha: C64, x: &Mat, y: &Mat, hermitian: bool) -> Vec<Acc> {
    let yt = y.op(if hermitian {
        Transpose::Conjugate
    } else {
        Transpose::Yes
    });
    product(alpha, x, &yt)
}

fn merge(mut a: Vec<Acc>, b: Vec<Acc>) -> Vec<Acc> {
    for (x, y) in a.iter_mut().zip(b) {
        x.v += y.v;
        x.max = x.max.max(y.max);
        x.n += y.n;
    }
    a
}

fn syrk<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let s = rank_k_case::<T>(rng, false);
    let (alpha, beta): (T, T) = (rand_scalar(rng), rand_scalar(rng));
    let (ab, cb) = (ctx.upload(&s.a.data), ctx.upload(&s.c.data));
    let what = s.describe("syrk");
    ctx_err(
        &what,
        r::syrk(
            ctx, s.layout, s.tri, s.trans, s.n, s.k, alpha, &ab, s.a.off, s.a.ld, beta, &cb,
            s.c.off, s.c.ld,
        ),
    )?;
    let f = s.factor(&s.a);
    s.check(
        &what,
        &cb.to_vec(),
        outer(to_c(alpha), &f, &f, false),
        to_c(beta),
        false,
    )
}

fn herk<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let s = rank_k_case::<T>(rng, true);
    let (alpha, beta) = (
        C64::new(to_c(rand_scalar::<T>(rng)).re, 0.0),
        C64::new(to_c(rand_scalar::<T>(rng)).re, 0.0),
    );
    let (ab, cb) = (ctx.upload(&s.a.data), ctx.upload(&s.c.data));
    let what = s.describe("herk");
    ctx_err(
        &what,
        r::herk(
            ctx,
            s.layout,
            s.tri,
            s.trans,
            s.n,
            s.k,
            real_of::<T>(alpha),
            &ab,
            s.a.off,
            s.a.ld,
            real_of::<T>(beta),
            &cb,
            s.c.off,
            s.c.ld,
        ),
    )?;
    let f = s.factor(&s.a);
    s.check(&what, &cb.to_vec(), outer(alpha, &f, &f, true), beta, true)
}

fn syr2k<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let s = rank_k_case::<T>(rng, false);
    let (alpha, beta): (T, T) = (rand_scalar(rng), rand_scalar(rng));
    let (ab, bb, cb) = (
        ctx.upload(&s.a.data),
        ctx.upload(&s.b.data),
        ctx.upload(&s.c.data),
    );
    let what = s.describe("syr2k");
    ctx_err(
        &what,
        r::syr2k(
            ctx, s.layout, s.tri, s.trans, s.n, s.k, alpha, &ab, s.a.off, s.a.ld, &bb, s.b.off,
            s.b.ld, beta, &cb, s.c.off, s.c.ld,
        ),
    )?;
    let (fa, fb) = (s.factor(&s.a), s.factor(&s.b));
    let al = to_c(alpha);
    let p = merge(outer(al, &fa, &fb, false), outer(al, &fb, &fa, false));
    s.check(&what, &cb.to_vec(), p, to_c(beta), false)
}

fn her2k<T: ComplexScalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let s = rank_k_case::<T>(rng, true);
    let alpha: T = rand_scalar(rng);
    let beta = C64::new(to_c(rand_scalar::<T>(rng)).re, 0.0);
    let (ab, bb, cb) = (
        ctx.upload(&s.a.data),
        ctx.upload(&s.b.data),
        ctx.upload(&s.c.data),
    );
    let what = s.describe("her2k");
    ctx_err(
        &what,
        r::her2k(
            ctx,
            s.layout,
            s.tri,
            s.trans,
            s.n,
            s.k,
            alpha,
            &ab,
            s.a.off,
            s.a.ld,
            &bb,
            s.b.off,
            s.b.ld,
            real_of::<T>(beta),
            &cb,
            s.c.off,
            s.c.ld,
        ),
    )?;
    let (fa, fb) = (s.factor(&s.a), s.factor(&s.b));
    let al = to_c(alpha);
    let p = merge(outer(al, &fa, &fb, true), outer(al.conj(), &fb, &fa, true));
    s.check(&what, &cb.to_vec(), p, beta, true)
}

struct TriMm<T> {
    layout: Layout,
    side: Side,
    tri: Triangle,
    trans: Transpose,
    diag: Diagonal,
    m: usize,
    n: usize,
    a: Storage<T>,
    b: Storage<T>,
}

impl<T: Scalar> TriMm<T> {
    fn random(rng: &mut TestRng, solve: bool) -> TriMm<T> {
        let (layout, tri) = (rand_layout(rng), rand_triangle(rng));
        let side = if rng.gen() { Side::Left } else { Side::Right };
        let trans = rand_transpose(rng);
        let diag = if rng.gen() {
            Diagonal::Unit
        } else {
            Diagonal::NonUnit
        };
        let (m, n) = (rand_dim(rng, 12, 1), rand_dim(rng, 12, 1));
        let ka = if side == Side::Left { m } else { n };
        let mut a = Storage::<T>::general(rng, layout, ka, ka);
        if solve {
            let (off, ld) = (a.off, a.ld);
            condition_triangle(rng, &mut a.data, ka, tri, |i, j| {
                Some(gidx(layout, off, ld, i, j))
            });
        }
        let b = Storage::general(rng, layout, m, n);
        TriMm {
            layout,
            side,
            tri,
            trans,
            diag,
            m,
            n,
            a,
            b,
        }
    }

    fn ka(&self) -> usize {
        if self.side == Side::Left {
            self.m
        } else {
            self.n
        }
    }

    fn op_a(&self) -> Mat {
        let unit = self.diag == Diagonal::Unit;
        let (layout, off, ld) = (self.layout, self.a.off, self.a.ld);
        read_structured(
            &self.a.data,
            self.ka(),
            self.tri,
            Kind::Triangular { unit },
            |i, j| Some(gidx(layout, off, ld, i, j)),
        )
        .op(self.trans)
    }

    fn describe(&self, name: &str) -> String {
        format!(
            "{name} {:?} {:?} {:?} {:?} {:?} m={} n={}",
            self.layout, self.side, self.tri, self.trans, self.diag, self.m, self.n
        )
    }
}

fn trmm<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let s = TriMm::<T>::random(rng, false);
    let alpha: T = rand_scalar(rng);
    let (ab, bb) = (ctx.upload(&s.a.data), ctx.upload(&s.b.data));
    let what = s.describe("trmm");
    ctx_err(
        &what,
        r::trmm(
            ctx, s.layout, s.side, s.tri, s.trans, s.diag, s.m, s.n, alpha, &ab, s.a.off, s.a.ld,
            &bb, s.b.off, s.b.ld,
        ),
    )?;
    let bm = read_general(&s.b.data, s.layout, s.b.off, s.b.ld, s.m, s.n);
    let p = if s.side == Side::Left {
        product(to_c(alpha), &s.op_a(), &bm)
    } else {
        product(to_c(alpha), &bm, &s.op_a())
    };
    let exp = c_expect(&s.b, s.layout, s.m, s.n, p, zero(), |_, _| true);
    check_buffer(&what, &bb.to_vec(), &s.b.data, &exp)?;
    check_unchanged(&what, &ab.to_vec(), &s.a.data)
}

fn trsm<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let s = TriMm::<T>::random(rng, true);
    let alpha: T = rand_scalar(rng);
    let (ab, bb) = (ctx.upload(&s.a.data), ctx.upload(&s.b.data));
    let what = s.describe("trsm");
    ctx_err(
        &what,
        r::trsm(
            ctx, s.layout, s.side, s.tri, s.trans, s.diag, s.m, s.n, alpha, &ab, s.a.off, s.a.ld,
            &bb, s.b.off, s.b.ld,
        ),
    )?;
    let got = bb.to_vec();
    check_unchanged(&what, &ab.to_vec(), &s.a.data)?;
    let mut inside = vec![false; got.len()];
    for j in 0..s.n {
        for i in 0..s.m {
            inside[gidx(s.layout, s.b.off, s.b.ld, i, j)] = true;
        }
    }
    check_outside(&what, &got, &s.b.data, &inside)?;
    let x = read_general(&got, s.layout, s.b.off, s.b.ld, s.m, s.n);
    let rhs = read_general(&s.b.data, s.layout, s.b.off, s.b.ld, s.m, s.n);
    let lhs = if s.side == Side::Left {
        product(C64::new(1.0, 0.0), &s.op_a(), &x)
    } else {
        product(C64::new(1.0, 0.0), &x, &s.op_a())
    };
    let al = to_c(alpha);
    let bnorm = rhs.d.iter().map(|v| (al * v).norm()).fold(0.0, f64::max);
    let tol = 8.0 * eps::<T>() * s.ka().max(1) as f64 * bnorm;
    for (idx, l) in lhs.iter().enumerate() {
        let res = (l.v - al * rhs.d[idx]).norm();
        if res.is_nan() || res > tol {
            return Err(format!("{what}: residual {res:e} at {idx} exceeds {tol:e}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- extras

fn omatcopy<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let (layout, t) = (rand_layout(rng), rand_transpose(rng));
    let (m, n) = (rand_dim(rng, 16, 2), rand_dim(rng, 16, 2));
    let alpha: T = rand_scalar(rng);
    let (br, bc) = if t == Transpose::No { (m, n) } else { (n, m) };
    let a = Storage::<T>::general(rng, layout, m, n);
    let b = Storage::<T>::general(rng, layout, br, bc);
    let (ab, bb) = (ctx.upload(&a.data), ctx.upload(&b.data));
    let what = format!("omatcopy {layout:?} {t:?} m={m} n={n}");
    ctx_err(
        &what,
        r::omatcopy(
            ctx, layout, t, m, n, alpha, &ab, a.off, a.ld, &bb, b.off, b.ld,
        ),
    )?;
    let op = read_general(&a.data, layout, a.off, a.ld, m, n).op(t);
    let mut exp = vec![None; b.data.len()];
    for j in 0..bc {
        for i in 0..br {
            exp[gidx(layout, b.off, b.ld, i, j)] = Some(one_term(to_c(alpha) * op.get(i, j)));
        }
    }
    check_buffer(&what, &bb.to_vec(), &b.data, &exp)?;
    check_unchanged(&what, &ab.to_vec(), &a.data)
}

fn im2col<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let g = loop {
        let g = ConvGeometry {
            channels: rng.gen_range(1..=3),
            height: rng.gen_range(1..=9),
            width: rng.gen_range(1..=9),
            kernel_h: rng.gen_range(1..=4),
            kernel_w: rng.gen_range(1..=4),
            pad_h: rng.gen_range(0..=2),
            pad_w: rng.gen_range(0..=2),
            stride_h: rng.gen_range(1..=3),
            stride_w: rng.gen_range(1..=3),
            dilation_h: rng.gen_range(1..=2),
            dilation_w: rng.gen_range(1..=2),
        };
        let span = |k: usize, d: usize| d * (k - 1) + 1;
        if g.height + 2 * g.pad_h >= span(g.kernel_h, g.dilation_h)
            && g.width + 2 * g.pad_w >= span(g.kernel_w, g.dilation_w)
        {
            break g;
        }
    };
    let out_h = (g.height + 2 * g.pad_h - (g.dilation_h * (g.kernel_h - 1) + 1)) / g.stride_h + 1;
    let out_w = (g.width + 2 * g.pad_w - (g.dilation_w * (g.kernel_w - 1) + 1)) / g.stride_w + 1;
    let rows = g.channels * g.kernel_h * g.kernel_w;
    let cols = out_h * out_w;
    let (io, co) = (rng.gen_range(0..3), rng.gen_range(0..3));
    let (it, ct) = (rng.gen_range(0..3), rng.gen_range(0..3));
    let im: Vec<T> = rand_vec(rng, io + g.channels * g.height * g.width + it);
    let col: Vec<T> = rand_vec(rng, co + rows * cols + ct);
    let (imb, colb) = (ctx.upload(&im), ctx.upload(&col));
    let what = format!("im2col {g:?}");
    ctx_err(&what, r::im2col(ctx, &g, &imb, io, &colb, co))?;
    let mut exp = vec![None; col.len()];
    for c in 0..g.channels {
        for ky in 0..g.kernel_h {
            for kx in 0..g.kernel_w {
                let row = (c * g.kernel_h + ky) * g.kernel_w + kx;
                for oy in 0..out_h {
                    for ox in 0..out_w {
                        let y = (oy * g.stride_h + ky * g.dilation_h) as isize - g.pad_h as isize;
                        let x = (ox * g.stride_w + kx * g.dilation_w) as isize - g.pad_w as isize;
                        let v = if y >= 0
                            && x >= 0
                            && (y as usize) < g.height
                            && (x as usize) < g.width
                        {
                            to_c(im[io + (c * g.height + y as usize) * g.width + x as usize])
                        } else {
                            zero()
                        };
                        exp[co + row + (oy * out_w + ox) * rows] = Some(Acc::exact(v));
                    }
                }
            }
        }
    }
    check_buffer(&what, &colb.to_vec(), &col, &exp)?;
    check_unchanged(&what, &imb.to_vec(), &im)
}

/// Lays out `count` regions of `extent` elements with random gaps; returns
/// the offsets and the total length.
fn regions(rng: &mut TestRng, count: usize, extent: usize) -> (Vec<usize>, usize) {
    let mut offs = Vec::with_capacity(count);
    let mut pos = rng.gen_range(0..3);
    for _ in 0..count {
        offs.push(pos);
        pos += extent + rng.gen_range(0..3);
    }
    (offs, pos + rng.gen_range(0..3))
}

fn axpy_batched<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let batch = rng.gen_range(1..=6);
    let n = rand_dim(rng, 12, 2);
    let (xi, yi) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
    let ext = |inc: usize| if n == 0 { 0 } else { (n - 1) * inc + 1 };
    let (xo, xl) = regions(rng, batch, ext(xi));
    let (yo, yl) = regions(rng, batch, ext(yi));
    let alphas: Vec<T> = (0..batch).map(|_| rand_scalar(rng)).collect();
    let (x, y): (Vec<T>, Vec<T>) = (rand_vec(rng, xl), rand_vec(rng, yl));
    let (xb, yb) = (ctx.upload(&x), ctx.upload(&y));
    let what = format!("axpy_batched batch={batch} n={n}");
    ctx_err(
        &what,
        r::axpy_batched(ctx, n, &alphas, &xb, &xo, xi, &yb, &yo, yi, batch),
    )?;
    let mut exp = vec![None; y.len()];
    for b in 0..batch {
        for i in 0..n {
            let mut a = Acc::zero();
            a.add(to_c(alphas[b]) * to_c(x[xo[b] + i * xi]));
            a.add(to_c(y[yo[b] + i * yi]));
            exp[yo[b] + i * yi] = Some(a);
        }
    }
    check_buffer(&what, &yb.to_vec(), &y, &exp)?;
    check_unchanged(&what, &xb.to_vec(), &x)
}

struct BatchCase<T> {
    layout: Layout,
    ta: Transpose,
    tb: Transpose,
    m: usize,
    n: usize,
    k: usize,
    lds: [usize; 3],
    exts: [usize; 3],
    alphas: Vec<T>,
    betas: Vec<T>,
}

impl<T: Scalar> BatchCase<T> {
    fn random(rng: &mut TestRng, batch: usize) -> BatchCase<T> {
        let layout = rand_layout(rng);
        let (ta, tb) = (rand_transpose(rng), rand_transpose(rng));
        let (m, n, k) = (
            rand_dim(rng, 10, 0),
            rand_dim(rng, 10, 0),
            rand_dim(rng, 10, 0),
        );
        let (ar, ac) = if ta == Transpose::No { (m, k) } else { (k, m) };
        let (br, bc) = if tb == Transpose::No { (k, n) } else { (n, k) };
        let dims = [(ar, ac), (br, bc), (m, n)];
        let lds = dims.map(|(r, c)| min_ld(layout, r, c) + rng.gen_range(0..2));
        let exts = [0, 1, 2].map(|i| gextent(layout, dims[i].0, dims[i].1, lds[i]));
        BatchCase {
            layout,
            ta,
            tb,
            m,
            n,
            k,
            lds,
            exts,
            alphas: (0..batch).map(|_| rand_scalar(rng)).collect(),
            betas: (0..batch).map(|_| rand_scalar(rng)).collect(),
        }
    }

    fn expect(
        &self,
        a: &[T],
        ao: &[usize],
        b: &[T],
        bo: &[usize],
        c: &[T],
        co: &[usize],
    ) -> Vec<Option<Acc>> {
        let (ar, ac) = if self.ta == Transpose::No {
            (self.m, self.k)
        } else {
            (self.k, self.m)
        };
        let (br, bc) = if self.tb == Transpose::No {
            (self.k, self.n)
        } else {
            (self.n, self.k)
        };
        let mut exp = vec![None; c.len()];
        for i in 0..self.alphas.len() {
            let am = read_general(a, self.layout, ao[i], self.lds[0], ar, ac).op(self.ta);
            let bm = read_general(b, self.layout, bo[i], self.lds[1], br, bc).op(self.tb);
            let cs = Storage {
                data: c.to_vec(),
                off: co[i],
                ld: self.lds[2],
            };
            let part = c_expect(
                &cs,
                self.layout,
                self.m,
                self.n,
                product(to_c(self.alphas[i]), &am, &bm),
                to_c(self.betas[i]),
                |_, _| true,
            );
            for (e, p) in exp.iter_mut().zip(part) {
                if p.is_some() {
                    *e = p;
                }
            }
        }
        exp
    }

    fn describe(&self, name: &str, batch: usize) -> String {
        format!(
            "{name} batch={batch} {:?} {:?} {:?} m={} n={} k={}",
            self.layout, self.ta, self.tb, self.m, self.n, self.k
        )
    }
}

fn gemm_batched<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let batch = rng.gen_range(1..=5);
    let s = BatchCase::<T>::random(rng, batch);
    let (ao, al) = regions(rng, batch, s.exts[0]);
    let (bo, bl) = regions(rng, batch, s.exts[1]);
    let (co, cl) = regions(rng, batch, s.exts[2]);
    let (a, b, c): (Vec<T>, Vec<T>, Vec<T>) =
        (rand_vec(rng, al), rand_vec(rng, bl), rand_vec(rng, cl));
    let (ab, bb, cb) = (ctx.upload(&a), ctx.upload(&b), ctx.upload(&c));
    let what = s.describe("gemm_batched", batch);
    ctx_err(
        &what,
        r::gemm_batched(
            ctx, s.layout, s.ta, s.tb, s.m, s.n, s.k, &s.alphas, &ab, &ao, s.lds[0], &bb, &bo,
            s.lds[1], &s.betas, &cb, &co, s.lds[2], batch,
        ),
    )?;
    check_buffer(
        &what,
        &cb.to_vec(),
        &c,
        &s.expect(&a, &ao, &b, &bo, &c, &co),
    )?;
    check_unchanged(&what, &ab.to_vec(), &a)
}

fn gemm_strided_batched<T: Scalar>(rng: &mut TestRng, ctx: &Context) -> Result<(), String> {
    let batch = rng.gen_range(1..=5);
    let mut s = BatchCase::<T>::random(rng, batch);
    let (alpha, beta) = (s.alphas[0], s.betas[0]);
    s.alphas = vec![alpha; batch];
    s.betas = vec![beta; batch];
    let strides = s.exts.map(|e| e + rng.gen_range(0..3));
    let offs: [usize; 3] = [
        rng.gen_range(0..3),
        rng.gen_range(0..3),
        rng.gen_range(0..3),
    ];
    let lens: Vec<usize> = (0..3)
        .map(|i| offs[i] + batch * strides[i] + rng.gen_range(0..3))
        .collect();
    let inst = |i: usize| -> Vec<usize> { (0..batch).map(|b| offs[i] + b * strides[i]).collect() };
    let (a, b, c): (Vec<T>, Vec<T>, Vec<T>) = (
        rand_vec(rng, lens[0]),
        rand_vec(rng, lens[1]),
        rand_vec(rng, lens[2]),
    );
    let (ab, bb, cb) = (ctx.upload(&a), ctx.upload(&b), ctx.upload(&c));
    let what = s.describe("gemm_strided_batched", batch);
    ctx_err(
        &what,
        r::gemm_strided_batched(
            ctx, s.layout, s.ta, s.tb, s.m, s.n, s.k, alpha, &ab, offs[0], s.lds[0], strides[0],
            &bb, offs[1], s.lds[1], strides[1], beta, &cb, offs[2], s.lds[2], strides[2], batch,
        ),
    )?;
    check_buffer(
        &what,
        &cb.to_vec(),
        &c,
        &s.expect(&a, &inst(0), &b, &inst(1), &c, &inst(2)),
    )
}

// ---------------------------------------------------------------- registry

macro_rules! reg {
    ($v:ident, $name:literal, $f:ident, [$($t:ty),*]) => {
        $($v.push(Entry { routine: $name, precision: <$t as Scalar>::PRECISION, check: $f::<$t> });)*
    };
    ($v:ident, $name:literal, $f:ident, all) => { reg!($v, $name, $f, [Half, f32, f64, Complex32, Complex64]) };
    ($v:ident, $name:literal, $f:ident, real) => { reg!($v, $name, $f, [Half, f32, f64]) };
    ($v:ident, $name:literal, $f:ident, complex) => { reg!($v, $name, $f, [Complex32, Complex64]) };
}

pub fn level1() -> Vec<Entry> {
    let mut v = Vec::new();
    reg!(v, "axpy", axpy, all);
    reg!(v, "scal", scal, all);
    reg!(v, "copy", copy, all);
    reg!(v, "swap", swap, all);
    reg!(v, "dot", dot, real);
    reg!(v, "dotu", dotu, complex);
    reg!(v, "dotc", dotc, complex);
    reg!(v, "nrm2", nrm2, all);
    reg!(v, "asum", asum, all);
    reg!(v, "sum", sum, all);
    reg!(v, "amax", amax, all);
    reg!(v, "amin", amin, all);
    reg!(v, "max", max, all);
    reg!(v, "min", min, all);
    v
}

pub fn level2() -> Vec<Entry> {
    let mut v = Vec::new();
    reg!(v, "gemv", gemv, all);
    reg!(v, "gbmv", gbmv, all);
    reg!(v, "hemv", hemv, complex);
    reg!(v, "hbmv", hbmv, complex);
    reg!(v, "hpmv", hpmv, complex);
    reg!(v, "symv", symv, real);
    reg!(v, "sbmv", sbmv, real);
    reg!(v, "spmv", spmv, real);
    reg!(v, "trmv", trmv, all);
    reg!(v, "tbmv", tbmv, all);
    reg!(v, "tpmv", tpmv, all);
    reg!(v, "trsv", trsv, all);
    reg!(v, "ger", ger, real);
    reg!(v, "geru", geru, complex);
    reg!(v, "gerc", gerc, complex);
    reg!(v, "her", her, complex);
    reg!(v, "hpr", hpr, complex);
    reg!(v, "her2", her2, complex);
    reg!(v, "hpr2", hpr2, complex);
    reg!(v, "syr", syr, real);
    reg!(v, "spr", spr, real);
    reg!(v, "syr2", syr2, real);
    reg!(v, "spr2", spr2, real);
    v
}

pub fn level3() -> Vec<Entry> {
    let mut v = Vec::new();
    reg!(v, "gemm", gemm, all);
    reg!(v, "symm", symm, all);
    reg!(v, "hemm", hemm, complex);
    reg!(v, "syrk", syrk, all);
    reg!(v, "herk", herk, complex);
    reg!(v, "syr2k", syr2k, all);
    reg!(v, "her2k", her2k, complex);
    reg!(v, "trmm", trmm, all);
    reg!(v, "trsm", trsm, all);
    v
}

pub fn extras() -> Vec<Entry> {
    let mut v = Vec::new();
    reg!(v, "omatcopy", omatcopy, all);
    reg!(v, "im2col", im2col, all);
    reg!(v, "axpy_batched", axpy_batched, all);
    reg!(v, "gemm_batched", gemm_batched, all);
    reg!(v, "gemm_strided_batched", gemm_strided_batched, all);
    v
}

pub fn all() -> Vec<Entry> {
    let mut v = level1();
    v.extend(level2());
    v.extend(level3());
    v.extend(extras());
    v
}

/// Combinations run per (routine, precision).
pub const COMBOS: usize = 50;

/// Runs `combos` random cases of one entry; the seed depends only on the
/// routine, precision and case number.
pub fn run_entry(e: &Entry, ctx: &Context, combos: usize) -> Result<(), String> {
    let base = e.routine.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    });
    for case in 0..combos {
        let seed = base ^ ((e.precision as u64) << 32) ^ case as u64;
        let mut rng = rng(seed);
        (e.check)(&mut rng, ctx).map_err(|m| {
            format!(
                "[{} {} case {case} seed {seed:#x}] {m}",
                e.routine, e.precision
            )
        })?;
    }
    Ok(())
}

/// Runs every entry; returns the failures.
pub fn run_all(entries: &[Entry], ctx: &Context, combos: usize) -> Vec<String> {
    entries
        .iter()
        .filter_map(|e| run_entry(e, ctx, combos).err())
        .collect()
}
