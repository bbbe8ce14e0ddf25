use crate::error::{Error, Result};

/// Owned grayscale frame. Row-major `f64` intensities, each in `[0, 1]`.
///
/// Frames are square; every pixel is validated at construction, so any
/// `GrayImage` in circulation satisfies the range invariant and downstream
/// code does not re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    size: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if width != height {
            return Err(Error::NonSquareImage { width, height });
        }
        let expected = width * height;
        if data.len() != expected {
            return Err(Error::ImageLengthMismatch {
                len: data.len(),
                width,
                height,
                expected,
            });
        }
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidIntensity { index, value });
            }
        }
        Ok(Self { size: width, data })
    }

    /// Frame with every pixel set to `value`.
    pub fn filled(size: usize, value: f64) -> Result<Self> {
        Self::new(size, size, vec![value; size * size])
    }

    /// Builds pixel (row, col) from `f`. Fails if `f` leaves `[0, 1]`.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(size * size);
        for row in 0..size {
            for col in 0..size {
                data.push(f(row, col));
            }
        }
        Self::new(size, size, data)
    }

    pub fn width(&self) -> usize {
        self.size
    }

    pub fn height(&self) -> usize {
        self.size
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.size && col < self.size, "pixel out of bounds");
        self.data[row * self.size + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Left-right flip: pixel (r, c) moves to (r, width-1-c).
    pub fn mirrored(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks_exact(self.size) {
            data.extend(row.iter().rev());
        }
        Self {
            size: self.size,
            data,
        }
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.size == other.size
    }
}
