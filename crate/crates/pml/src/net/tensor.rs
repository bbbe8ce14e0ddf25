//! Dense row-major tensor. Activations use channel-major layout
//! `[channels][height][width]`; parameter blocks define their own layouts.

use crate::error::{Error, Result};
use crate::net::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![T::zero(); n],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} want {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn numel(&self) -> usize {
        self.data.len()
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

    /// Stack `self` and `other` along the channel axis. Both must be
    /// `[C][H][W]` with matching spatial dims.
    pub fn concat_channels(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        if self.dims.len() != 3 || other.dims.len() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "channel concat needs rank-3 tensors, got {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        if self.dims[1..] != other.dims[1..] {
            return Err(Error::ShapeMismatch(format!(
                "channel concat needs matching spatial dims, got {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Tensor::from_vec(
            &[self.dims[0] + other.dims[0], self.dims[1], self.dims[2]],
            data,
        )
    }

    /// Undo `concat_channels`: split a `[C][H][W]` tensor into the first
    /// `front_channels` channels and the rest.
    pub fn split_channels(&self, front_channels: usize) -> Result<(Tensor<T>, Tensor<T>)> {
        if self.dims.len() != 3 || front_channels > self.dims[0] {
            return Err(Error::ShapeMismatch(format!(
                "cannot split {front_channels} front channels out of {:?}",
                self.dims
            )));
        }
        let plane = self.dims[1] * self.dims[2];
        let cut = front_channels * plane;
        let front = Tensor::from_vec(
            &[front_channels, self.dims[1], self.dims[2]],
            self.data[..cut].to_vec(),
        )?;
        let back = Tensor::from_vec(
            &[self.dims[0] - front_channels, self.dims[1], self.dims[2]],
            self.data[cut..].to_vec(),
        )?;
        Ok((front, back))
    }
}
