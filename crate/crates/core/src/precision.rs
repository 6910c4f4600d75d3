//! Precisions and the numeric types behind them.
//!
//! Storage types are what buffers hold ([`Half`], `f32`, `f64`, and the two
//! complex types). Every storage type names an accumulation type ([`Field`])
//! that kernels compute in: half precision is widened to `f32`, all other
//! types compute natively. A kernel therefore rounds a half-precision result
//! exactly once, when it is stored.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub type Complex32 = Complex<f32>;
pub type Complex64 = Complex<f64>;

/// The five supported precisions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Precision {
    #[serde(rename = "16")]
    Half,
    #[serde(rename = "32")]
    Single,
    #[serde(rename = "64")]
    Double,
    #[serde(rename = "3232")]
    ComplexSingle,
    #[serde(rename = "6464")]
    ComplexDouble,
}

impl Precision {
    pub const ALL: [Precision; 5] = [
        Precision::Half,
        Precision::Single,
        Precision::Double,
        Precision::ComplexSingle,
        Precision::ComplexDouble,
    ];

    pub const fn elem_size(self) -> usize {
        match self {
            Precision::Half => 2,
            Precision::Single => 4,
            Precision::Double => 8,
            Precision::ComplexSingle => 8,
            Precision::ComplexDouble => 16,
        }
    }

    pub const fn is_complex(self) -> bool {
        matches!(self, Precision::ComplexSingle | Precision::ComplexDouble)
    }

    /// Unit roundoff of the storage format: 2^-10, 2^-23 or 2^-52.
    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Half => 2f64.powi(-10),
            Precision::Single | Precision::ComplexSingle => 2f64.powi(-23),
            Precision::Double | Precision::ComplexDouble => 2f64.powi(-52),
        }
    }

    /// Single-letter BLAS prefix (H, S, D, C, Z).
    pub const fn letter(self) -> char {
        match self {
            Precision::Half => 'H',
            Precision::Single => 'S',
            Precision::Double => 'D',
            Precision::ComplexSingle => 'C',
            Precision::ComplexDouble => 'Z',
        }
    }

    /// The numeric code used on the command line (16, 32, 64, 3232, 6464).
    pub const fn code(self) -> &'static str {
        match self {
            Precision::Half => "16",
            Precision::Single => "32",
            Precision::Double => "64",
            Precision::ComplexSingle => "3232",
            Precision::ComplexDouble => "6464",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "16" | "H" => Ok(Precision::Half),
            "32" | "S" => Ok(Precision::Single),
            "64" | "D" => Ok(Precision::Double),
            "3232" | "C" => Ok(Precision::ComplexSingle),
            "6464" | "Z" => Ok(Precision::ComplexDouble),
            other => Err(format!("unknown precision '{other}'")),
        }
    }
}

/// IEEE 754 binary16 value, stored as its bit pattern.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
#[repr(transparent)]
pub struct Half(u16);

impl Half {
    pub const ZERO: Half = Half(0x0000);
    pub const ONE: Half = Half(0x3C00);
    pub const MAX: Half = Half(0x7BFF);
    pub const INFINITY: Half = Half(0x7C00);
    pub const NEG_INFINITY: Half = Half(0xFC00);

    pub const fn from_bits(bits: u16) -> Half {
        Half(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    pub fn from_f32(x: f32) -> Half {
        half_from_f32(x)
    }

    pub fn to_f32(self) -> f32 {
        half_to_f32(self)
    }

    pub fn is_finite(self) -> bool {
        self.0 & 0x7C00 != 0x7C00
    }

    pub fn is_nan(self) -> bool {
        self.0 & 0x7C00 == 0x7C00 && self.0 & 0x03FF != 0
    }
}

impl fmt::Debug for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}h", self.to_f32())
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f32(), f)
    }
}

/// Narrows an `f32` to binary16 with round-to-nearest-even.
pub fn half_from_f32(x: f32) -> Half {
    let bits = x.to_bits();
    let sign = ((bits >> 16) & 0x8000) as u16;
    let exp = ((bits >> 23) & 0xFF) as i32;
    let man = bits & 0x007F_FFFF;

    if exp == 0xFF {
        if man == 0 {
            return Half(sign | 0x7C00);
        }
        // Keep the top payload bits and force a quiet NaN.
        return Half(sign | 0x7E00 | (man >> 13) as u16);
    }

    let half_exp = exp - 127 + 15;
    if half_exp >= 0x1F {
        return Half(sign | 0x7C00);
    }

    if half_exp <= 0 {
        // Below 2^-25 everything rounds to zero (ties at 2^-25 go to even = 0).
        if half_exp < -10 {
            return Half(sign);
        }
        let m = man | 0x0080_0000;
        let shift = (14 - half_exp) as u32;
        let mut h = m >> shift;
        let rem = m & ((1 << shift) - 1);
        let halfway = 1 << (shift - 1);
        if rem > halfway || (rem == halfway && h & 1 == 1) {
            h += 1;
        }
        // A carry out of the mantissa lands on the smallest normal encoding.
        return Half(sign | h as u16);
    }

    let mut h = ((half_exp as u32) << 10) | (man >> 13);
    let rem = man & 0x1FFF;
    if rem > 0x1000 || (rem == 0x1000 && h & 1 == 1) {
        // May carry into the exponent; 0x7BFF + 1 is infinity.
        h += 1;
    }
    Half(sign | h as u16)
}

/// Widens a binary16 value to `f32`. Exact for every input.
pub fn half_to_f32(h: Half) -> f32 {
    let bits = h.0 as u32;
    let sign = (bits & 0x8000) << 16;
    let exp = (bits >> 10) & 0x1F;
    let man = bits & 0x03FF;
    match exp {
        0 => {
            let magnitude = man as f32 * f32::from_bits(0x3380_0000); // 2^-24
            if sign != 0 {
                -magnitude
            } else {
                magnitude
            }
        }
        0x1F => f32::from_bits(sign | 0x7F80_0000 | (man << 13)),
        _ => f32::from_bits(sign | ((exp + 112) << 23) | (man << 13)),
    }
}

/// Anything that can live in a device buffer.
pub trait Element: Copy + Default + Send + Sync + fmt::Debug + 'static {}

impl Element for u32 {}

/// Arithmetic type kernels accumulate in.
pub trait Field:
    Copy
    + Default
    + Send
    + Sync
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    type Real: RealField;
    const IS_COMPLEX: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn conj(self) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn from_parts(re: Self::Real, im: Self::Real) -> Self;
    /// |re| + |im|, the BLAS magnitude used by ASUM and AMAX.
    fn abs1(self) -> Self::Real {
        self.re().abs() + self.im().abs()
    }
    fn norm_sqr(self) -> Self::Real {
        let (r, i) = (self.re(), self.im());
        r * r + i * i
    }
    fn scale(self, r: Self::Real) -> Self {
        self * Self::from_real(r)
    }
    fn is_zero(self) -> bool {
        self == Self::zero()
    }
}

pub trait RealField: Field<Real = Self> + PartialOrd {
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn to_f64(self) -> f64;
    fn from_f64(x: f64) -> Self;
    fn is_nan(self) -> bool;
}

macro_rules! real_field {
    ($t:ty) => {
        impl Field for $t {
            type Real = $t;
            const IS_COMPLEX: bool = false;
            fn zero() -> Self {
                0.0
            }
            fn one() -> Self {
                1.0
            }
            fn conj(self) -> Self {
                self
            }
            fn re(self) -> Self {
                self
            }
            fn im(self) -> Self {
                0.0
            }
            fn from_real(r: Self) -> Self {
                r
            }
            fn from_parts(re: Self, _im: Self) -> Self {
                re
            }
            fn abs1(self) -> Self {
                self.abs()
            }
            fn norm_sqr(self) -> Self {
                self * self
            }
            fn scale(self, r: Self) -> Self {
                self * r
            }
        }

        impl RealField for $t {
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn is_nan(self) -> bool {
                <$t>::is_nan(self)
            }
        }
    };
}

real_field!(f32);
real_field!(f64);

macro_rules! complex_field {
    ($r:ty) => {
        impl Field for Complex<$r> {
            type Real = $r;
            const IS_COMPLEX: bool = true;
            fn zero() -> Self {
                Complex::new(0.0, 0.0)
            }
            fn one() -> Self {
                Complex::new(1.0, 0.0)
            }
            fn conj(self) -> Self {
                Complex::new(self.re, -self.im)
            }
            fn re(self) -> $r {
                self.re
            }
            fn im(self) -> $r {
                self.im
            }
            fn from_real(r: $r) -> Self {
                Complex::new(r, 0.0)
            }
            fn from_parts(re: $r, im: $r) -> Self {
                Complex::new(re, im)
            }
            fn scale(self, r: $r) -> Self {
                Complex::new(self.re * r, self.im * r)
            }
        }
    };
}

complex_field!(f32);
complex_field!(f64);

/// A storage type for one of the five precisions.
pub trait Scalar: Element + PartialEq {
    const PRECISION: Precision;
    type Acc: Field;

    fn to_acc(self) -> Self::Acc;
    fn from_acc(v: Self::Acc) -> Self;

    fn zero() -> Self {
        Self::from_acc(<Self::Acc as Field>::zero())
    }
    fn one() -> Self {
        Self::from_acc(<Self::Acc as Field>::one())
    }
    /// Builds a value from f64 parts; the imaginary part is dropped for real types.
    fn from_f64_parts(re: f64, im: f64) -> Self {
        Self::from_acc(<Self::Acc as Field>::from_parts(
            RealField::from_f64(re),
            RealField::from_f64(im),
        ))
    }
    fn from_f64(re: f64) -> Self {
        Self::from_f64_parts(re, 0.0)
    }
    fn re_f64(self) -> f64 {
        self.to_acc().re().to_f64()
    }
    fn im_f64(self) -> f64 {
        self.to_acc().im().to_f64()
    }
}

/// Real part type of a storage type's accumulator.
pub type RealOf<T> = <<T as Scalar>::Acc as Field>::Real;

/// Marker for H, S and D.
pub trait RealScalar: Scalar {}
/// Marker for C and Z.
pub trait ComplexScalar: Scalar {}

impl Element for Half {}
impl Element for f32 {}
impl Element for f64 {}
impl Element for Complex32 {}
impl Element for Complex64 {}

impl Scalar for Half {
    const PRECISION: Precision = Precision::Half;
    type Acc = f32;
    #[inline(always)]
    fn to_acc(self) -> f32 {
        half_to_f32(self)
    }
    #[inline(always)]
    fn from_acc(v: f32) -> Self {
        half_from_f32(v)
    }
}

macro_rules! native_scalar {
    ($t:ty, $p:expr) => {
        impl Scalar for $t {
            const PRECISION: Precision = $p;
            type Acc = $t;
            #[inline(always)]
            fn to_acc(self) -> $t {
                self
            }
            #[inline(always)]
            fn from_acc(v: $t) -> Self {
                v
            }
        }
    };
}

native_scalar!(f32, Precision::Single);
native_scalar!(f64, Precision::Double);
native_scalar!(Complex32, Precision::ComplexSingle);
native_scalar!(Complex64, Precision::ComplexDouble);

impl RealScalar for Half {}
impl RealScalar for f32 {}
impl RealScalar for f64 {}
impl ComplexScalar for Complex32 {}
impl ComplexScalar for Complex64 {}
