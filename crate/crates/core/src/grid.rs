//! Row-major raster grids on a common pixel lattice.

use alloc::vec;
use alloc::vec::Vec;

use crate::cov::{HermitianCov3, ScatteringVector};
use crate::error::{Error, Result};

/// Row-major grid of per-pixel values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

pub type SlcGrid = Grid<ScatteringVector>;
pub type CovGrid = Grid<HermitianCov3>;
pub type LabelGrid = Grid<u32>;

impl<T> Grid<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || height.checked_mul(width) != Some(data.len()) {
            return Err(Error::ShapeMismatch {
                height,
                width,
                len: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        Ok(())
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Result<Self> {
        Self::new(height, width, vec![value; height.saturating_mul(width)])
    }
}

impl SlcGrid {
    /// Fails if any sample is NaN or infinite.
    pub fn validate(&self) -> Result<()> {
        if self.data.iter().all(ScatteringVector::is_finite) {
            Ok(())
        } else {
            Err(Error::NonFinite("SLC grid"))
        }
    }

    /// Single-look covariance `ssᴴ` at every pixel.
    pub fn single_look(&self) -> CovGrid {
        self.map(HermitianCov3::outer)
    }
}

impl CovGrid {
    /// Fails unless every element is finite and Hermitian PSD within tolerance.
    pub fn validate(&self) -> Result<()> {
        if self.data.iter().all(HermitianCov3::is_psd) {
            Ok(())
        } else if self.data.iter().all(HermitianCov3::is_finite) {
            Err(Error::param(
                "covariance grid",
                "element is not positive semidefinite",
            ))
        } else {
            Err(Error::NonFinite("covariance grid"))
        }
    }
}

/// Multi-band real raster, band-interleaved by pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalGrid {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f64>,
}

impl OpticalGrid {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        let expected = height.checked_mul(width).and_then(|n| n.checked_mul(bands));
        if height == 0 || width == 0 || bands == 0 || expected != Some(data.len()) {
            return Err(Error::ShapeMismatch {
                height,
                width,
                len: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("optical grid"));
        }
        Ok(Self {
            height,
            width,
            bands,
            data,
        })
    }

    /// Single-band grid with the same value everywhere.
    pub fn constant(height: usize, width: usize, bands: usize, value: f64) -> Result<Self> {
        Self::new(height, width, bands, vec![value; height * width * bands])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// All bands of one pixel.
    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.bands;
        &self.data[start..start + self.bands]
    }

    pub fn value(&self, row: usize, col: usize, band: usize) -> f64 {
        self.pixel(row, col)[band]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn check_matches<T>(&self, grid: &Grid<T>) -> Result<()> {
        if self.dims() != grid.dims() {
            return Err(Error::DimensionMismatch(
                grid.height,
                grid.width,
                self.height,
                self.width,
            ));
        }
        Ok(())
    }
}
