//! Layers with hand-derived gradients. Convolution runs as im2col + GEMM;
//! the transposed convolution reuses the same machinery through the
//! conv/tconv duality (its forward is a conv backward-data pass and vice
//! versa). Every layer is generic over the scalar so the gradient-check
//! tests can run the exact production code path at `f64`.
//!
//! Conventions:
//!   activations        [channels][height][width], row-major
//!   conv weights       [out_ch][in_ch * k * k]
//!   tconv weights      [in_ch][out_ch * k * k]
//!   dense weights      [out][in]
//!
//! `forward` returns the output plus whatever the matching `backward`
//! needs; `backward` accumulates into the layer's grad buffers and returns
//! the gradient with respect to the input.

use crate::net::gemm::{axpy, dot, gemm_nn, gemm_nt, gemm_tn};
use crate::net::tensor::Tensor;
use crate::net::Scalar;
use crate::rng::SeedRng;
use rand::Rng;

/// Uniform init scaled to the fan-in, the usual choice ahead of relu/elu.
pub fn he_uniform<T: Scalar>(n: usize, fan_in: usize, rng: &mut SeedRng) -> Vec<T> {
    let limit = (6.0 / fan_in as f64).sqrt();
    (0..n)
        .map(|_| T::from_f64((rng.gen::<f64>() * 2.0 - 1.0) * limit))
        .collect()
}

pub fn conv_out_size(in_size: usize, k: usize, stride: usize, pad: usize) -> usize {
    (in_size + 2 * pad - k) / stride + 1
}

pub fn tconv_out_size(in_size: usize, k: usize, stride: usize, pad: usize, out_pad: usize) -> usize {
    (in_size - 1) * stride + k + out_pad - 2 * pad
}

/// Unfold `x` ([in_ch][h][w]) into a [in_ch*k*k][oh*ow] matrix where column
/// (oy*ow+ox) holds the receptive field of that output position.
fn im2col<T: Scalar>(
    x: &[T],
    in_ch: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    cols: &mut [T],
) {
    let oh = conv_out_size(h, k, stride, pad);
    let ow = conv_out_size(w, k, stride, pad);
    debug_assert_eq!(cols.len(), in_ch * k * k * oh * ow);
    for v in cols.iter_mut() {
        *v = T::zero();
    }
    for ic in 0..in_ch {
        let plane = &x[ic * h * w..(ic + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ic * k + ky) * k + kx;
                let out_row = &mut cols[row * oh * ow..(row + 1) * oh * ow];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for ox in 0..ow {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        out_row[oy * ow + ox] = plane[iy as usize * w + ix as usize];
                    }
                }
            }
        }
    }
}

/// Scatter-add inverse of `im2col`: fold the column matrix back onto an
/// image, summing where receptive fields overlap.
fn col2im<T: Scalar>(
    cols: &[T],
    in_ch: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    x: &mut [T],
) {
    let oh = conv_out_size(h, k, stride, pad);
    let ow = conv_out_size(w, k, stride, pad);
    debug_assert_eq!(cols.len(), in_ch * k * k * oh * ow);
    debug_assert_eq!(x.len(), in_ch * h * w);
    for ic in 0..in_ch {
        let plane = &mut x[ic * h * w..(ic + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ic * k + ky) * k + kx;
                let col_row = &cols[row * oh * ow..(row + 1) * oh * ow];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for ox in 0..ow {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        plane[iy as usize * w + ix as usize] += col_row[oy * ow + ox];
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub gw: Vec<T>,
    pub gb: Vec<T>,
}

pub struct ConvCache<T> {
    cols: Vec<T>,
    in_dims: [usize; 3],
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(in_ch: usize, out_ch: usize, k: usize, stride: usize, pad: usize, rng: &mut SeedRng) -> Self {
        let fan_in = in_ch * k * k;
        Conv2d {
            in_ch,
            out_ch,
            k,
            stride,
            pad,
            w: he_uniform(out_ch * fan_in, fan_in, rng),
            b: vec![T::zero(); out_ch],
            gw: vec![T::zero(); out_ch * fan_in],
            gb: vec![T::zero(); out_ch],
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> (Tensor<T>, ConvCache<T>) {
        let d = x.dims();
        debug_assert_eq!(d[0], self.in_ch);
        let (h, w) = (d[1], d[2]);
        let oh = conv_out_size(h, self.k, self.stride, self.pad);
        let ow = conv_out_size(w, self.k, self.stride, self.pad);
        let ickk = self.in_ch * self.k * self.k;
        let mut cols = vec![T::zero(); ickk * oh * ow];
        im2col(x.data(), self.in_ch, h, w, self.k, self.stride, self.pad, &mut cols);

        let mut out = vec![T::zero(); self.out_ch * oh * ow];
        gemm_nn(&mut out, &self.w, &cols, self.out_ch, ickk, oh * ow);
        for oc in 0..self.out_ch {
            let bias = self.b[oc];
            for v in &mut out[oc * oh * ow..(oc + 1) * oh * ow] {
                *v += bias;
            }
        }
        (
            Tensor::from_vec(&[self.out_ch, oh, ow], out).expect("conv output shape"),
            ConvCache { cols, in_dims: [self.in_ch, h, w] },
        )
    }

    pub fn backward(&mut self, cache: &ConvCache<T>, gy: &Tensor<T>) -> Tensor<T> {
        let [in_ch, h, w] = cache.in_dims;
        let gd = gy.dims();
        let (oh, ow) = (gd[1], gd[2]);
        let ickk = in_ch * self.k * self.k;
        let ohw = oh * ow;

        for oc in 0..self.out_ch {
            let mut s = T::zero();
            for v in &gy.data()[oc * ohw..(oc + 1) * ohw] {
                s += *v;
            }
            self.gb[oc] += s;
        }
        gemm_nt(&mut self.gw, gy.data(), &cache.cols, self.out_ch, ohw, ickk);

        let mut gcols = vec![T::zero(); ickk * ohw];
        gemm_tn(&mut gcols, &self.w, gy.data(), ickk, self.out_ch, ohw);
        let mut gx = vec![T::zero(); in_ch * h * w];
        col2im(&gcols, in_ch, h, w, self.k, self.stride, self.pad, &mut gx);
        Tensor::from_vec(&[in_ch, h, w], gx).expect("conv input shape")
    }

    pub fn zero_grads(&mut self) {
        self.gw.iter_mut().for_each(|v| *v = T::zero());
        self.gb.iter_mut().for_each(|v| *v = T::zero());
    }

    pub fn param_blocks(&mut self) -> Vec<(&mut Vec<T>, &mut Vec<T>)> {
        vec![(&mut self.w, &mut self.gw), (&mut self.b, &mut self.gb)]
    }
}

#[derive(Debug, Clone)]
pub struct TConv2d<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_pad: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub gw: Vec<T>,
    pub gb: Vec<T>,
}

pub struct TConvCache<T> {
    x: Vec<T>,
    in_dims: [usize; 3],
}

impl<T: Scalar> TConv2d<T> {
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        k: usize,
        stride: usize,
        pad: usize,
        out_pad: usize,
        rng: &mut SeedRng,
    ) -> Self {
        assert!(out_pad < stride, "output padding must stay below stride");
        let fan_in = in_ch * k * k;
        TConv2d {
            in_ch,
            out_ch,
            k,
            stride,
            pad,
            out_pad,
            w: he_uniform(in_ch * out_ch * k * k, fan_in, rng),
            b: vec![T::zero(); out_ch],
            gw: vec![T::zero(); in_ch * out_ch * k * k],
            gb: vec![T::zero(); out_ch],
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> (Tensor<T>, TConvCache<T>) {
        let d = x.dims();
        debug_assert_eq!(d[0], self.in_ch);
        let (ih, iw) = (d[1], d[2]);
        let oh = tconv_out_size(ih, self.k, self.stride, self.pad, self.out_pad);
        let ow = tconv_out_size(iw, self.k, self.stride, self.pad, self.out_pad);
        // Dual view: the output plays the role of a conv input whose im2col
        // grid lands back on our actual input positions.
        debug_assert_eq!(conv_out_size(oh, self.k, self.stride, self.pad), ih);
        let ockk = self.out_ch * self.k * self.k;
        let ihw = ih * iw;

        let mut cols = vec![T::zero(); ockk * ihw];
        gemm_tn(&mut cols, &self.w, x.data(), ockk, self.in_ch, ihw);
        let mut out = vec![T::zero(); self.out_ch * oh * ow];
        col2im(&cols, self.out_ch, oh, ow, self.k, self.stride, self.pad, &mut out);
        for oc in 0..self.out_ch {
            let bias = self.b[oc];
            for v in &mut out[oc * oh * ow..(oc + 1) * oh * ow] {
                *v += bias;
            }
        }
        (
            Tensor::from_vec(&[self.out_ch, oh, ow], out).expect("tconv output shape"),
            TConvCache { x: x.data().to_vec(), in_dims: [self.in_ch, ih, iw] },
        )
    }

    pub fn backward(&mut self, cache: &TConvCache<T>, gy: &Tensor<T>) -> Tensor<T> {
        let [in_ch, ih, iw] = cache.in_dims;
        let gd = gy.dims();
        let (oh, ow) = (gd[1], gd[2]);
        let ockk = self.out_ch * self.k * self.k;
        let ihw = ih * iw;
        let ohw = oh * ow;

        for oc in 0..self.out_ch {
            let mut s = T::zero();
            for v in &gy.data()[oc * ohw..(oc + 1) * ohw] {
                s += *v;
            }
            self.gb[oc] += s;
        }

        let mut gcols = vec![T::zero(); ockk * ihw];
        im2col(gy.data(), self.out_ch, oh, ow, self.k, self.stride, self.pad, &mut gcols);
        gemm_nt(&mut self.gw, &cache.x, &gcols, in_ch, ihw, ockk);

        let mut gx = vec![T::zero(); in_ch * ihw];
        gemm_nn(&mut gx, &self.w, &gcols, in_ch, ockk, ihw);
        Tensor::from_vec(&[in_ch, ih, iw], gx).expect("tconv input shape")
    }

    pub fn zero_grads(&mut self) {
        self.gw.iter_mut().for_each(|v| *v = T::zero());
        self.gb.iter_mut().for_each(|v| *v = T::zero());
    }

    pub fn param_blocks(&mut self) -> Vec<(&mut Vec<T>, &mut Vec<T>)> {
        vec![(&mut self.w, &mut self.gw), (&mut self.b, &mut self.gb)]
    }
}

#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub gw: Vec<T>,
    pub gb: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut SeedRng) -> Self {
        Dense {
            in_dim,
            out_dim,
            w: he_uniform(out_dim * in_dim, in_dim, rng),
            b: vec![T::zero(); out_dim],
            gw: vec![T::zero(); out_dim * in_dim],
            gb: vec![T::zero(); out_dim],
        }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.in_dim);
        let mut y = self.b.clone();
        for o in 0..self.out_dim {
            y[o] += dot(&self.w[o * self.in_dim..(o + 1) * self.in_dim], x);
        }
        y
    }

    /// `x` is the input the forward pass saw.
    pub fn backward(&mut self, x: &[T], gy: &[T]) -> Vec<T> {
        debug_assert_eq!(gy.len(), self.out_dim);
        let mut gx = vec![T::zero(); self.in_dim];
        for o in 0..self.out_dim {
            let g = gy[o];
            self.gb[o] += g;
            axpy(&mut self.gw[o * self.in_dim..(o + 1) * self.in_dim], x, g);
            axpy(&mut gx, &self.w[o * self.in_dim..(o + 1) * self.in_dim], g);
        }
        gx
    }

    pub fn zero_grads(&mut self) {
        self.gw.iter_mut().for_each(|v| *v = T::zero());
        self.gb.iter_mut().for_each(|v| *v = T::zero());
    }

    pub fn param_blocks(&mut self) -> Vec<(&mut Vec<T>, &mut Vec<T>)> {
        vec![(&mut self.w, &mut self.gw), (&mut self.b, &mut self.gb)]
    }
}

pub fn relu<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

/// `y` is the relu output; x > 0 exactly where y > 0.
pub fn relu_backward<T: Scalar>(y: &[T], gy: &[T]) -> Vec<T> {
    y.iter()
        .zip(gy)
        .map(|(&yv, &g)| if yv > T::zero() { g } else { T::zero() })
        .collect()
}

/// Exponential-linear unit with unit negative scale.
pub fn elu<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter()
        .map(|&v| if v > T::zero() { v } else { v.exp() - T::one() })
        .collect()
}

/// For x <= 0 the local derivative is exp(x) = y + 1, so the output is
/// enough to reconstruct it.
pub fn elu_backward<T: Scalar>(y: &[T], gy: &[T]) -> Vec<T> {
    y.iter()
        .zip(gy)
        .map(|(&yv, &g)| if yv > T::zero() { g } else { g * (yv + T::one()) })
        .collect()
}

pub fn sigmoid<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| T::one() / (T::one() + (-v).exp())).collect()
}

pub fn sigmoid_backward<T: Scalar>(y: &[T], gy: &[T]) -> Vec<T> {
    y.iter().zip(gy).map(|(&yv, &g)| g * yv * (T::one() - yv)).collect()
}

/// Per-channel normalization over batch and spatial positions together,
/// with biased variance and running statistics for inference.
#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub ch: usize,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub g_gamma: Vec<T>,
    pub g_beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub momentum: T,
    pub eps: T,
}

pub struct BatchNormCache<T> {
    xhat: Vec<Vec<T>>,
    inv_std: Vec<T>,
    count: usize,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(ch: usize) -> Self {
        BatchNorm {
            ch,
            gamma: vec![T::one(); ch],
            beta: vec![T::zero(); ch],
            g_gamma: vec![T::zero(); ch],
            g_beta: vec![T::zero(); ch],
            running_mean: vec![T::zero(); ch],
            running_var: vec![T::one(); ch],
            momentum: T::from_f64(0.1),
            eps: T::from_f64(1e-5),
        }
    }

    /// Training-mode forward over a whole batch of [C][H][W] tensors.
    pub fn forward_train(&mut self, xs: &[Tensor<T>]) -> (Vec<Tensor<T>>, BatchNormCache<T>) {
        let dims = xs[0].dims().to_vec();
        debug_assert_eq!(dims[0], self.ch);
        let plane = dims[1] * dims[2];
        let count = xs.len() * plane;
        let n = T::from_f64(count as f64);

        let mut mean = vec![T::zero(); self.ch];
        let mut var = vec![T::zero(); self.ch];
        for c in 0..self.ch {
            let mut s = T::zero();
            for x in xs {
                for v in &x.data()[c * plane..(c + 1) * plane] {
                    s += *v;
                }
            }
            mean[c] = s / n;
            let mut sq = T::zero();
            for x in xs {
                for v in &x.data()[c * plane..(c + 1) * plane] {
                    let d = *v - mean[c];
                    sq += d * d;
                }
            }
            var[c] = sq / n;
        }

        let one = T::one();
        for c in 0..self.ch {
            self.running_mean[c] = (one - self.momentum) * self.running_mean[c] + self.momentum * mean[c];
            self.running_var[c] = (one - self.momentum) * self.running_var[c] + self.momentum * var[c];
        }

        let inv_std: Vec<T> = var.iter().map(|&v| one / (v + self.eps).sqrt()).collect();
        let mut xhat = Vec::with_capacity(xs.len());
        let mut ys = Vec::with_capacity(xs.len());
        for x in xs {
            let mut xh = vec![T::zero(); x.numel()];
            let mut y = vec![T::zero(); x.numel()];
            for c in 0..self.ch {
                for i in c * plane..(c + 1) * plane {
                    let h = (x.data()[i] - mean[c]) * inv_std[c];
                    xh[i] = h;
                    y[i] = self.gamma[c] * h + self.beta[c];
                }
            }
            xhat.push(xh);
            ys.push(Tensor::from_vec(&dims, y).expect("batchnorm shape"));
        }
        (ys, BatchNormCache { xhat, inv_std, count })
    }

    /// Inference-mode forward for a single sample using running statistics.
    pub fn forward_eval(&self, x: &Tensor<T>) -> Tensor<T> {
        let dims = x.dims().to_vec();
        let plane = dims[1] * dims[2];
        let one = T::one();
        let mut y = vec![T::zero(); x.numel()];
        for c in 0..self.ch {
            let inv = one / (self.running_var[c] + self.eps).sqrt();
            for i in c * plane..(c + 1) * plane {
                y[i] = self.gamma[c] * (x.data()[i] - self.running_mean[c]) * inv + self.beta[c];
            }
        }
        Tensor::from_vec(&dims, y).expect("batchnorm shape")
    }

    pub fn backward(&mut self, cache: &BatchNormCache<T>, gys: &[Tensor<T>]) -> Vec<Tensor<T>> {
        let dims = gys[0].dims().to_vec();
        let plane = dims[1] * dims[2];
        let n = T::from_f64(cache.count as f64);

        let mut sum_gy = vec![T::zero(); self.ch];
        let mut sum_gy_xhat = vec![T::zero(); self.ch];
        for (b, gy) in gys.iter().enumerate() {
            for c in 0..self.ch {
                for i in c * plane..(c + 1) * plane {
                    let g = gy.data()[i];
                    sum_gy[c] += g;
                    sum_gy_xhat[c] += g * cache.xhat[b][i];
                }
            }
        }
        for c in 0..self.ch {
            self.g_beta[c] += sum_gy[c];
            self.g_gamma[c] += sum_gy_xhat[c];
        }

        let mut gxs = Vec::with_capacity(gys.len());
        for (b, gy) in gys.iter().enumerate() {
            let mut gx = vec![T::zero(); gy.numel()];
            for c in 0..self.ch {
                let scale = self.gamma[c] * cache.inv_std[c] / n;
                for i in c * plane..(c + 1) * plane {
                    gx[i] = scale
                        * (n * gy.data()[i] - sum_gy[c] - cache.xhat[b][i] * sum_gy_xhat[c]);
                }
            }
            gxs.push(Tensor::from_vec(&dims, gx).expect("batchnorm shape"));
        }
        gxs
    }

    pub fn zero_grads(&mut self) {
        self.g_gamma.iter_mut().for_each(|v| *v = T::zero());
        self.g_beta.iter_mut().for_each(|v| *v = T::zero());
    }

    pub fn param_blocks(&mut self) -> Vec<(&mut Vec<T>, &mut Vec<T>)> {
        vec![
            (&mut self.gamma, &mut self.g_gamma),
            (&mut self.beta, &mut self.g_beta),
        ]
    }
}

/// Inverted dropout: surviving units are scaled by 1/(1-rate) at train
/// time so inference is a plain identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must sit in [0, 1)");
        Dropout { rate }
    }

    pub fn forward_train<T: Scalar>(&self, x: &[T], rng: &mut SeedRng) -> (Vec<T>, Vec<T>) {
        let keep_scale = T::from_f64(1.0 / (1.0 - self.rate));
        let mask: Vec<T> = (0..x.len())
            .map(|_| {
                if rng.gen::<f64>() < self.rate {
                    T::zero()
                } else {
                    keep_scale
                }
            })
            .collect();
        let y = x.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        (y, mask)
    }

    pub fn backward<T: Scalar>(&self, mask: &[T], gy: &[T]) -> Vec<T> {
        gy.iter().zip(mask).map(|(&g, &m)| g * m).collect()
    }
}
