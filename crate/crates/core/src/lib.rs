//! Auto-tuned dense linear algebra on a configurable virtual device.
//!
//! Routines run on device buffers owned by a [`Context`]. Each routine maps
//! onto one of a handful of parameterised kernel families (axpy, dot, gemv,
//! ger, gemm and matrix transforms); the parameters a call uses come from
//! run-time overrides, the tuning database, or built-in defaults, in that
//! order. The [`tuner`] finds parameters by measurement and the [`bench`]
//! clients compare tuned routines with naive references.

pub mod bench;
pub mod context;
pub mod device;
pub mod error;
pub mod kernels;
pub mod precision;
pub mod reference;
pub mod routines;
pub mod tuner;
pub mod tuningdb;
pub mod types;

pub use context::{Buffer, Context};
pub use device::{DeviceSpec, DeviceType, ParallelBackend};
pub use error::{Error, Result};
pub use kernels::params::{ArgsSig, Configuration, KernelFamily};
pub use precision::{half_from_f32, half_to_f32, Complex32, Complex64, Half, Precision, Scalar};
pub use types::{Diagonal, Layout, Side, Transpose, Triangle};
