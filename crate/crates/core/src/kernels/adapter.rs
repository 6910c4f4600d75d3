//! Access adapters: logical (i, j) element loads for general, banded,
//! packed, symmetric, hermitian and triangular matrices.
//!
//! Kernels written against [`AccessAdapter::element`] serve every storage
//! variant with the same loop structure. Row-major storage is read as the
//! column-major storage of the transpose, with band widths swapped and the
//! packed triangle flipped.

use crate::precision::{Field, Scalar};
use crate::types::{Diagonal, Layout, Triangle};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageKind {
    Full {
        ld: usize,
    },
    /// `kl` sub-diagonals and `ku` super-diagonals, `ld >= kl + ku + 1`.
    Banded {
        kl: usize,
        ku: usize,
        ld: usize,
    },
    /// Triangle of an n x n matrix packed column by column (triangle from the structure).
    Packed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    General,
    Symmetric(Triangle),
    Hermitian(Triangle),
    Triangular(Triangle, Diagonal),
}

impl Structure {
    fn triangle(self) -> Triangle {
        match self {
            Structure::General => Triangle::Upper,
            Structure::Symmetric(t) | Structure::Hermitian(t) | Structure::Triangular(t, _) => t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessAdapter {
    pub rows: usize,
    pub cols: usize,
    pub layout: Layout,
    pub offset: usize,
    pub storage: StorageKind,
    pub structure: Structure,
}

impl AccessAdapter {
    pub fn general(layout: Layout, rows: usize, cols: usize, offset: usize, ld: usize) -> Self {
        AccessAdapter {
            rows,
            cols,
            layout,
            offset,
            storage: StorageKind::Full { ld },
            structure: Structure::General,
        }
    }

    pub fn banded(
        layout: Layout,
        rows: usize,
        cols: usize,
        kl: usize,
        ku: usize,
        offset: usize,
        ld: usize,
    ) -> Self {
        AccessAdapter {
            rows,
            cols,
            layout,
            offset,
            storage: StorageKind::Banded { kl, ku, ld },
            structure: Structure::General,
        }
    }

    /// Square n x n matrix with the given structure in full storage.
    pub fn square(
        layout: Layout,
        n: usize,
        structure: Structure,
        offset: usize,
        ld: usize,
    ) -> Self {
        AccessAdapter {
            rows: n,
            cols: n,
            layout,
            offset,
            storage: StorageKind::Full { ld },
            structure,
        }
    }

    /// Square matrix stored as a band of `k` diagonals on the structure's triangle side.
    pub fn square_banded(
        layout: Layout,
        n: usize,
        k: usize,
        structure: Structure,
        offset: usize,
        ld: usize,
    ) -> Self {
        let (kl, ku) = match structure.triangle() {
            Triangle::Upper => (0, k),
            Triangle::Lower => (k, 0),
        };
        AccessAdapter {
            rows: n,
            cols: n,
            layout,
            offset,
            storage: StorageKind::Banded { kl, ku, ld },
            structure,
        }
    }

    pub fn packed(layout: Layout, n: usize, structure: Structure, offset: usize) -> Self {
        AccessAdapter {
            rows: n,
            cols: n,
            layout,
            offset,
            storage: StorageKind::Packed,
            structure,
        }
    }

    /// Storage index of logical (i, j) if it is part of the stored region.
    #[inline]
    pub fn locate(&self, i: usize, j: usize) -> Option<usize> {
        let tri = self.structure.triangle();
        let (r, c, tri) = match self.layout {
            Layout::ColMajor => (i, j, tri),
            Layout::RowMajor => (j, i, tri.flip()),
        };
        match self.storage {
            StorageKind::Full { ld } => Some(self.offset + r + c * ld),
            StorageKind::Banded { kl, ku, ld } => {
                let (kl, ku) = match self.layout {
                    Layout::ColMajor => (kl, ku),
                    Layout::RowMajor => (ku, kl),
                };
                (r + ku >= c && r <= c + kl).then(|| self.offset + ku + r - c + c * ld)
            }
            StorageKind::Packed => {
                let n = self.rows;
                match tri {
                    Triangle::Upper => (r <= c).then(|| self.offset + r + c * (c + 1) / 2),
                    Triangle::Lower => (r >= c).then(|| self.offset + r + (2 * n - c - 1) * c / 2),
                }
            }
        }
    }

    #[inline]
    fn load<T: Scalar>(&self, data: &[T], i: usize, j: usize) -> T::Acc {
        match self.locate(i, j) {
            Some(p) => data[p].to_acc(),
            None => T::Acc::zero(),
        }
    }

    /// Logical element (i, j), including implied zeros, mirrored values and unit diagonals.
    #[inline]
    pub fn element<T: Scalar>(&self, data: &[T], i: usize, j: usize) -> T::Acc {
        match self.structure {
            Structure::General => self.load(data, i, j),
            Structure::Symmetric(tri) => {
                if tri.contains(i, j) {
                    self.load(data, i, j)
                } else {
                    self.load(data, j, i)
                }
            }
            Structure::Hermitian(tri) => {
                if i == j {
                    T::Acc::from_real(self.load(data, i, i).re())
                } else if tri.contains(i, j) {
                    self.load(data, i, j)
                } else {
                    self.load(data, j, i).conj()
                }
            }
            Structure::Triangular(tri, diag) => {
                if i == j && diag == Diagonal::Unit {
                    T::Acc::one()
                } else if tri.contains(i, j) {
                    self.load(data, i, j)
                } else {
                    T::Acc::zero()
                }
            }
        }
    }

    /// Whether (i, j) is an element this structure stores (and updates may write).
    #[inline]
    pub fn is_stored(&self, i: usize, j: usize) -> bool {
        match self.structure {
            Structure::General => true,
            _ => self.structure.triangle().contains(i, j),
        }
    }

    /// Leading dimension, if the storage has one.
    pub fn ld(&self) -> Option<usize> {
        match self.storage {
            StorageKind::Full { ld } | StorageKind::Banded { ld, .. } => Some(ld),
            StorageKind::Packed => None,
        }
    }

    /// Minimum leading dimension the storage requires.
    pub fn min_ld(&self) -> usize {
        match (self.storage, self.layout) {
            (StorageKind::Full { .. }, Layout::ColMajor) => self.rows.max(1),
            (StorageKind::Full { .. }, Layout::RowMajor) => self.cols.max(1),
            (StorageKind::Banded { kl, ku, .. }, _) => kl + ku + 1,
            (StorageKind::Packed, _) => 0,
        }
    }

    /// Elements spanned from `offset` to the last stored element (0 if empty).
    pub fn extent(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let (outer, inner) = match self.layout {
            Layout::ColMajor => (self.cols, self.rows),
            Layout::RowMajor => (self.rows, self.cols),
        };
        match self.storage {
            StorageKind::Full { ld } => (outer - 1) * ld + inner,
            StorageKind::Banded { kl, ku, ld } => (outer - 1) * ld + kl + ku + 1,
            StorageKind::Packed => self.rows * (self.rows + 1) / 2,
        }
    }

    /// Dense column-major copy of the logical matrix.
    pub fn materialize<T: Scalar>(&self, data: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(T::from_acc(self.element(data, i, j)));
            }
        }
        out
    }
}
