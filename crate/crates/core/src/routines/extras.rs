//! Extra routines: out-of-place scaled copy and im2col.

use crate::context::{Buffer, Context};
use crate::error::{Error, Result};
use crate::kernels::adapter::AccessAdapter;
use crate::kernels::engine::{launch, LaunchDesc, WorkGrid};
use crate::kernels::params::{ArgsSig, KernelFamily, TransformParams};
use crate::kernels::transform::{run_transform_job, TransformInstance, TransformJob};
use crate::precision::Scalar;
use crate::types::{Layout, Transpose};

use super::common::{check_ctx, check_matrix, overlaps};

/// B = alpha * op(A), where A is `m x n` and B is `op(A)`-shaped.
#[allow(clippy::too_many_arguments)]
pub fn omatcopy<T: Scalar>(
    ctx: &Context,
    layout: Layout,
    a_transpose: Transpose,
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
    let (br, bc) = if a_transpose.is_transposed() {
        (n, m)
    } else {
        (m, n)
    };
    let a_adapter = AccessAdapter::general(layout, m, n, a_offset, a_ld);
    let b_adapter = AccessAdapter::general(layout, br, bc, b_offset, b_ld);
    check_matrix(ctx, "omatcopy", "A", (6, 7, 8), a, &a_adapter)?;
    check_matrix(ctx, "omatcopy", "B", (9, 10, 11), b, &b_adapter)?;
    let a_range = (a_offset, a_offset + a_adapter.extent());
    let b_range = (b_offset, b_offset + b_adapter.extent());
    if a.same_as(b) && overlaps(a_range, b_range) {
        return Err(Error::arg(
            "omatcopy",
            9,
            "B",
            "overlaps A; the copy is out-of-place only",
        ));
    }
    if m == 0 || n == 0 {
        return Ok(());
    }
    // Work on the column-major view of both matrices.
    let (sr, sc, dr, dc) = match layout {
        Layout::ColMajor => (m, n, br, bc),
        Layout::RowMajor => (n, m, bc, br),
    };
    let config = ctx.resolve(
        KernelFamily::Transform,
        T::PRECISION,
        ArgsSig::matrix(dr, dc),
    )?;
    let inst = [TransformInstance {
        src: AccessAdapter::general(Layout::ColMajor, sr, sc, a_offset, a_ld),
        dst_offset: b_offset,
        alpha: alpha.to_acc(),
    }];
    let ad = a.to_vec();
    let job = TransformJob {
        src: &ad,
        instances: &inst,
        rows: dr,
        cols: dc,
        ld: b_ld,
        transpose: a_transpose.is_transposed(),
        conj: a_transpose.is_conjugated(),
        pad: T::zero(),
    };
    let mut bd = b.data_mut();
    run_transform_job(ctx, &config, &job, &mut bd)
}

/// Image and filter geometry of an im2col call. The image is stored as
/// `channels x height x width`, row by row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub pad_h: usize,
    pub pad_w: usize,
    pub stride_h: usize,
    pub stride_w: usize,
    pub dilation_h: usize,
    pub dilation_w: usize,
}

impl ConvGeometry {
    /// Unit stride and dilation, no padding.
    pub fn simple(
        channels: usize,
        height: usize,
        width: usize,
        kernel_h: usize,
        kernel_w: usize,
    ) -> Self {
        ConvGeometry {
            channels,
            height,
            width,
            kernel_h,
            kernel_w,
            pad_h: 0,
            pad_w: 0,
            stride_h: 1,
            stride_w: 1,
            dilation_h: 1,
            dilation_w: 1,
        }
    }

    fn output_dim(
        size: usize,
        pad: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
    ) -> Option<usize> {
        let span = dilation * (kernel.checked_sub(1)?) + 1;
        let padded = size + 2 * pad;
        if stride == 0 || dilation == 0 || padded < span {
            return None;
        }
        Some((padded - span) / stride + 1)
    }

    pub fn output_h(&self) -> Option<usize> {
        Self::output_dim(
            self.height,
            self.pad_h,
            self.kernel_h,
            self.stride_h,
            self.dilation_h,
        )
    }

    pub fn output_w(&self) -> Option<usize> {
        Self::output_dim(
            self.width,
            self.pad_w,
            self.kernel_w,
            self.stride_w,
            self.dilation_w,
        )
    }

    /// Rows of the column matrix: one per (channel, kernel row, kernel column).
    pub fn col_rows(&self) -> usize {
        self.channels * self.kernel_h * self.kernel_w
    }

    /// Columns of the column matrix: one per output pixel, or None when the
    /// output would be empty.
    pub fn col_cols(&self) -> Option<usize> {
        Some(self.output_h()? * self.output_w()?)
    }

    pub fn image_len(&self) -> usize {
        self.channels * self.height * self.width
    }
}

/// Unfolds image patches into a column-major matrix of
/// `col_rows() x col_cols()` elements with ld `col_rows()`. Column
/// `oy * out_w + ox` holds the patch of output pixel (oy, ox).
pub fn im2col<T: Scalar>(
    ctx: &Context,
    geometry: &ConvGeometry,
    im: &Buffer<T>,
    im_offset: usize,
    col: &Buffer<T>,
    col_offset: usize,
) -> Result<()> {
    let g = *geometry;
    let (Some(out_h), Some(out_w)) = (g.output_h(), g.output_w()) else {
        return Err(Error::arg(
            "im2col",
            1,
            "geometry",
            "output dimensions are not positive",
        ));
    };
    if g.channels == 0 || out_h == 0 || out_w == 0 {
        return Err(Error::arg(
            "im2col",
            1,
            "geometry",
            "output dimensions are not positive",
        ));
    }
    check_ctx(ctx, "im2col", "im", 2, im)?;
    check_ctx(ctx, "im2col", "col", 4, col)?;
    if im_offset + g.image_len() > im.len() {
        return Err(Error::arg("im2col", 2, "im", "image exceeds the buffer"));
    }
    let (rows, cols) = (g.col_rows(), out_h * out_w);
    if col_offset + rows * cols > col.len() {
        return Err(Error::arg(
            "im2col",
            4,
            "col",
            "column matrix exceeds the buffer",
        ));
    }
    if im.same_as(col)
        && overlaps(
            (im_offset, im_offset + g.image_len()),
            (col_offset, col_offset + rows * cols),
        )
    {
        return Err(Error::arg("im2col", 4, "col", "overlaps the image"));
    }
    let config = ctx.resolve(
        KernelFamily::Transform,
        T::PRECISION,
        ArgsSig::matrix(rows, cols),
    )?;
    let p = TransformParams::from_config(&config)?;
    let (tr, tc) = p.tile();
    let grid = WorkGrid::planar(rows.div_ceil(tr), cols.div_ceil(tc), p.dimx * p.dimy);
    let tiles = {
        let src = im.data();
        launch(
            ctx,
            LaunchDesc {
                family: KernelFamily::Transform,
                config: &config,
                grid,
                local_mem_bytes: 0,
            },
            || (),
            |_, grp| {
                let mut tile = vec![T::zero(); tr * tc];
                for jj in 0..tc {
                    let q = grp.y * tc + jj;
                    if q >= cols {
                        break;
                    }
                    let (oy, ox) = (q / out_w, q % out_w);
                    for ii in 0..tr {
                        let r = grp.x * tr + ii;
                        if r >= rows {
                            break;
                        }
                        let (c, kk) =
                            (r / (g.kernel_h * g.kernel_w), r % (g.kernel_h * g.kernel_w));
                        let (ky, kx) = (kk / g.kernel_w, kk % g.kernel_w);
                        let y = (oy * g.stride_h + ky * g.dilation_h).checked_sub(g.pad_h);
                        let x = (ox * g.stride_w + kx * g.dilation_w).checked_sub(g.pad_w);
                        if let (Some(y), Some(x)) = (y, x) {
                            if y < g.height && x < g.width {
                                tile[ii + jj * tr] =
                                    src[im_offset + (c * g.height + y) * g.width + x];
                            }
                        }
                    }
                }
                tile
            },
        )?
    };
    let gx = grid.groups[0];
    let mut dst = col.data_mut();
    for (idx, tile) in tiles.iter().enumerate() {
        let (i0, j0) = ((idx % gx) * tr, (idx / gx) * tc);
        let h = tr.min(rows - i0);
        for jj in 0..tc.min(cols - j0) {
            let d = col_offset + i0 + (j0 + jj) * rows;
            dst[d..d + h].copy_from_slice(&tile[jj * tr..jj * tr + h]);
        }
    }
    Ok(())
}
