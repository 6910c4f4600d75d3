//! Naive host implementations used as the baseline by the tuner and the
//! benchmark clients, plus the tolerance model their outputs are checked
//! against. Matrices are column-major; accumulation is in `T::Acc`, in
//! natural loop order.

use crate::precision::{Field, Precision, RealField, Scalar};

fn op<T: Scalar>(data: &[T], ld: usize, trans: bool, conj: bool, i: usize, j: usize) -> T::Acc {
    let v = if trans {
        data[j + i * ld]
    } else {
        data[i + j * ld]
    }
    .to_acc();
    if conj {
        v.conj()
    } else {
        v
    }
}

/// y = alpha * x + y
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &[T]) -> Vec<T> {
    let a = alpha.to_acc();
    x.iter()
        .zip(y)
        .map(|(x, y)| T::from_acc(a * x.to_acc() + y.to_acc()))
        .collect()
}

/// sum x_i * y_i
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T::Acc {
    let mut s = T::Acc::zero();
    for (x, y) in x.iter().zip(y) {
        s += x.to_acc() * y.to_acc();
    }
    s
}

/// y = alpha * A * x + beta * y, A `m x n` with leading dimension `lda`.
#[allow(clippy::too_many_arguments)]
pub fn gemv<T: Scalar>(
    m: usize,
    n: usize,
    alpha: T,
    a: &[T],
    lda: usize,
    x: &[T],
    beta: T,
    y: &[T],
) -> Vec<T> {
    (0..m)
        .map(|i| {
            let mut s = T::Acc::zero();
            for j in 0..n {
                s += a[i + j * lda].to_acc() * x[j].to_acc();
            }
            let b = beta.to_acc();
            let prev = if b.is_zero() {
                T::Acc::zero()
            } else {
                b * y[i].to_acc()
            };
            T::from_acc(alpha.to_acc() * s + prev)
        })
        .collect()
}

/// A + alpha * x * y^T
pub fn ger<T: Scalar>(
    m: usize,
    n: usize,
    alpha: T,
    x: &[T],
    y: &[T],
    a: &[T],
    lda: usize,
) -> Vec<T> {
    let mut out = a.to_vec();
    for j in 0..n {
        for i in 0..m {
            out[i + j * lda] = T::from_acc(
                alpha.to_acc() * x[i].to_acc() * y[j].to_acc() + a[i + j * lda].to_acc(),
            );
        }
    }
    out
}

/// Operand description for [`gemm`]: data, leading dimension, transpose, conjugate.
pub type Mat<'a, T> = (&'a [T], usize, bool, bool);

/// C = alpha * op(A) * op(B) + beta * C on column-major storage.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    m: usize,
    n: usize,
    k: usize,
    alpha: T,
    a: Mat<'_, T>,
    b: Mat<'_, T>,
    beta: T,
    c: &[T],
    ldc: usize,
) -> Vec<T> {
    let mut out = c.to_vec();
    let (al, be) = (alpha.to_acc(), beta.to_acc());
    for j in 0..n {
        for i in 0..m {
            let mut s = T::Acc::zero();
            for p in 0..k {
                s += op(a.0, a.1, a.2, a.3, i, p) * op(b.0, b.1, b.2, b.3, p, j);
            }
            let prev = if be.is_zero() {
                T::Acc::zero()
            } else {
                be * c[i + j * ldc].to_acc()
            };
            out[i + j * ldc] = T::from_acc(al * s + prev);
        }
    }
    out
}

/// Dense transpose of a column-major `rows x cols` matrix.
pub fn transpose<T: Copy>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(a[i + j * rows]);
        }
    }
    out
}

/// Absolute error bound for one output of a length-`len` sum of products
/// whose terms are bounded by `term_bound`: `4 * eps * len * term_bound`.
/// The inputs' own storage rounding adds one unit of the output magnitude.
pub fn sum_tolerance(precision: Precision, len: usize, term_bound: f64) -> f64 {
    4.0 * precision.epsilon() * (len.max(1) as f64) * term_bound
}

/// Largest modulus of the elements of `xs`.
pub fn max_abs<T: Scalar>(xs: &[T]) -> f64 {
    xs.iter()
        .map(|v| v.to_acc().norm_sqr().to_f64().sqrt())
        .fold(0.0, f64::max)
}

/// Largest elementwise distance between two equally long vectors.
pub fn max_diff<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.to_acc() - y.to_acc()).norm_sqr().to_f64().sqrt())
        .fold(
            0.0,
            |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) },
        )
}

/// Whether `out` matches `expected` within `tol` plus one storage rounding
/// of the expected magnitude.
pub fn close<T: Scalar>(out: &[T], expected: &[T], tol: f64) -> bool {
    if out.len() != expected.len() {
        return false;
    }
    let slack = tol + T::PRECISION.epsilon() * max_abs(expected);
    max_diff(out, expected) <= slack
}
