//! The BLAS routines, on device buffers.
//!
//! Argument order follows Netlib BLAS with the context first, and every
//! matrix or vector operand is a (buffer, offset, leading dimension or
//! increment) triple. Validation errors name the 1-based position of the
//! offending argument, not counting the context.

mod batched;
mod common;
mod extras;
mod level1;
mod level2;
mod level3;
pub mod netlib;

pub use batched::{axpy_batched, gemm_batched, gemm_strided_batched};
pub use extras::{im2col, omatcopy, ConvGeometry};
pub use level1::{amax, amin, asum, axpy, copy, dot, dotc, dotu, max, min, nrm2, scal, sum, swap};
pub use level2::{
    gbmv, gemv, ger, gerc, geru, hbmv, hemv, her, her2, hpmv, hpr, hpr2, sbmv, spmv, spr, spr2,
    symv, syr, syr2, tbmv, tpmv, trmv, trsv,
};
pub use level3::{gemm, hemm, her2k, herk, symm, syr2k, syrk, trmm, trsm};
