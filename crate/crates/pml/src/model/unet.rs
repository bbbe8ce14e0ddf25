//! Action-conditioned next-frame predictor: a small U-Net whose encoder
//! halves the frame per stage (stride-2 conv + relu), whose decoder doubles
//! it back (stride-2 transposed conv + relu) with skip connections from the
//! matching encoder stages, and whose steering input enters through a dense
//! elu branch reshaped to one extra bottleneck channel. A final same-size
//! convolution with a sigmoid maps back to one intensity channel.

use crate::error::{Error, Result};
use crate::net::layers::{
    elu, elu_backward, relu, relu_backward, sigmoid, sigmoid_backward, Conv2d, ConvCache, Dense,
    TConv2d, TConvCache,
};
use crate::net::{ParamStore, Scalar, Tensor};
use crate::rng::rng_from_seed;
use serde::{Deserialize, Serialize};

/// Architecture description; serialized as JSON alongside the weights so a
/// parameter file is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetSpec {
    /// Side length of the square input frame.
    pub input_size: usize,
    /// Filters per encoder stage; every stage is stride 2.
    pub encoder_filters: Vec<usize>,
    /// Filters per decoder stage; must match the encoder stage count.
    pub decoder_filters: Vec<usize>,
    /// Odd kernel size shared by all conv stages.
    pub kernel: usize,
    /// Hidden widths of the dense action branch; a final dense stage to
    /// bottleneck-area size is always appended.
    pub action_hidden: Vec<usize>,
}

impl Default for NetSpec {
    /// Sized so that training plus closed-loop evaluation stays within the
    /// acceptance budgets on one desktop CPU core.
    fn default() -> Self {
        NetSpec {
            input_size: 64,
            encoder_filters: vec![8, 16, 32],
            decoder_filters: vec![16, 8, 8],
            kernel: 3,
            action_hidden: vec![16],
        }
    }
}

impl NetSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidNetSpec(msg));
        let n = self.encoder_filters.len();
        if n == 0 {
            return fail("need at least one encoder stage".into());
        }
        if self.decoder_filters.len() != n {
            return fail(format!(
                "{} encoder stages but {} decoder stages",
                n,
                self.decoder_filters.len()
            ));
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            return fail(format!("kernel must be odd and positive, got {}", self.kernel));
        }
        if self.input_size == 0 || self.input_size % (1 << n) != 0 {
            return fail(format!(
                "input size {} is not divisible by 2^{n}",
                self.input_size
            ));
        }
        if self
            .encoder_filters
            .iter()
            .chain(&self.decoder_filters)
            .any(|&f| f == 0)
            || self.action_hidden.iter().any(|&f| f == 0)
        {
            return fail("all stage widths must be at least 1".into());
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.encoder_filters.len()
    }

    pub fn bottleneck_size(&self) -> usize {
        self.input_size >> self.stages()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: NetSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidNetSpec(format!("bad descriptor: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

pub struct UNet<T> {
    pub spec: NetSpec,
    enc: Vec<Conv2d<T>>,
    action_dense: Vec<Dense<T>>,
    dec: Vec<TConv2d<T>>,
    out: Conv2d<T>,
}

pub struct UNetCache<T> {
    enc_caches: Vec<ConvCache<T>>,
    /// Post-relu encoder outputs, also the skip sources.
    enc_outs: Vec<Tensor<T>>,
    act_ins: Vec<Vec<T>>,
    /// Post-elu action branch outputs.
    act_outs: Vec<Vec<T>>,
    dec_caches: Vec<TConvCache<T>>,
    /// Post-relu decoder outputs.
    dec_outs: Vec<Tensor<T>>,
    out_cache: ConvCache<T>,
    /// Pre-sigmoid output, kept for divergence checks: the sigmoid would
    /// mask an infinite logit as a plain 0 or 1.
    pub logits: Tensor<T>,
    /// Final sigmoid output.
    pub y: Tensor<T>,
}

impl<T: Scalar> UNet<T> {
    pub fn new(spec: NetSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_from_seed(seed);
        let n = spec.stages();
        let k = spec.kernel;
        let pad = k / 2;

        let mut enc = Vec::with_capacity(n);
        let mut prev = 1;
        for &f in &spec.encoder_filters {
            enc.push(Conv2d::new(prev, f, k, 2, pad, &mut rng));
            prev = f;
        }

        let area = spec.bottleneck_size() * spec.bottleneck_size();
        let mut action_dense = Vec::new();
        let mut prev_w = 1;
        for &w in spec.action_hidden.iter().chain(std::iter::once(&area)) {
            action_dense.push(Dense::new(prev_w, w, &mut rng));
            prev_w = w;
        }

        let mut dec = Vec::with_capacity(n);
        for i in 0..n {
            let in_ch = if i == 0 {
                spec.encoder_filters[n - 1] + 1
            } else {
                spec.decoder_filters[i - 1] + spec.encoder_filters[n - 1 - i]
            };
            dec.push(TConv2d::new(in_ch, spec.decoder_filters[i], k, 2, pad, 1, &mut rng));
        }

        let out = Conv2d::new(spec.decoder_filters[n - 1], 1, k, 1, pad, &mut rng);
        Ok(UNet { spec, enc, action_dense, dec, out })
    }

    pub fn forward(&self, obs: &Tensor<T>, action: T) -> Result<(Tensor<T>, UNetCache<T>)> {
        let s = self.spec.input_size;
        if obs.dims() != [1, s, s] {
            return Err(Error::ShapeMismatch(format!(
                "expected a [1, {s}, {s}] frame, got {:?}",
                obs.dims()
            )));
        }
        let n = self.spec.stages();

        let mut enc_caches = Vec::with_capacity(n);
        let mut enc_outs = Vec::with_capacity(n);
        let mut h = obs.clone();
        for conv in &self.enc {
            let (z, cache) = conv.forward(&h);
            h = Tensor::from_vec(z.dims(), relu(z.data()))?;
            enc_caches.push(cache);
            enc_outs.push(h.clone());
        }

        let mut act_ins = Vec::new();
        let mut act_outs = Vec::new();
        let mut a = vec![action];
        for dense in &self.action_dense {
            act_ins.push(a.clone());
            a = elu(&dense.forward(&a));
            act_outs.push(a.clone());
        }
        let bs = self.spec.bottleneck_size();
        let a_img = Tensor::from_vec(&[1, bs, bs], a)?;

        let mut dec_caches = Vec::with_capacity(n);
        let mut dec_outs = Vec::with_capacity(n);
        let mut d = enc_outs[n - 1].concat_channels(&a_img)?;
        for (i, tconv) in self.dec.iter().enumerate() {
            let (z, cache) = tconv.forward(&d);
            let post = Tensor::from_vec(z.dims(), relu(z.data()))?;
            dec_caches.push(cache);
            dec_outs.push(post.clone());
            d = if i + 1 < n {
                post.concat_channels(&enc_outs[n - 2 - i])?
            } else {
                post
            };
        }

        let (logits, out_cache) = self.out.forward(&d);
        let y = Tensor::from_vec(logits.dims(), sigmoid(logits.data()))?;
        let cache = UNetCache {
            enc_caches,
            enc_outs,
            act_ins,
            act_outs,
            dec_caches,
            dec_outs,
            out_cache,
            logits,
            y: y.clone(),
        };
        Ok((y, cache))
    }

    /// Accumulates parameter gradients for d loss / d y and returns
    /// d loss / d input frame.
    pub fn backward(&mut self, cache: &UNetCache<T>, gy: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.spec.stages();
        let g_logits = Tensor::from_vec(gy.dims(), sigmoid_backward(cache.y.data(), gy.data()))?;
        let mut g = self.out.backward(&cache.out_cache, &g_logits);

        let mut skip_grads: Vec<Option<Tensor<T>>> = vec![None; n];
        let mut g_action: Option<Vec<T>> = None;
        for i in (0..n).rev() {
            let g_pre = Tensor::from_vec(g.dims(), relu_backward(cache.dec_outs[i].data(), g.data()))?;
            let g_in = self.dec[i].backward(&cache.dec_caches[i], &g_pre);
            if i == 0 {
                let (g_enc_last, g_act) = g_in.split_channels(self.spec.encoder_filters[n - 1])?;
                skip_grads[n - 1] = Some(g_enc_last);
                g_action = Some(g_act.into_data());
            } else {
                let (g_prev, g_skip) = g_in.split_channels(self.spec.decoder_filters[i - 1])?;
                skip_grads[n - 1 - i] = Some(g_skip);
                g = g_prev;
            }
        }

        let mut ga = g_action.expect("decoder stage 0 ran");
        for j in (0..self.action_dense.len()).rev() {
            ga = elu_backward(&cache.act_outs[j], &ga);
            ga = self.action_dense[j].backward(&cache.act_ins[j], &ga);
        }

        let mut g = skip_grads[n - 1].take().expect("bottleneck grad");
        for i in (0..n).rev() {
            let g_pre =
                Tensor::from_vec(g.dims(), relu_backward(cache.enc_outs[i].data(), g.data()))?;
            g = self.enc[i].backward(&cache.enc_caches[i], &g_pre);
            if i > 0 {
                let skip = skip_grads[i - 1].take().expect("skip grad");
                for (gv, sv) in g.data_mut().iter_mut().zip(skip.data()) {
                    *gv += *sv;
                }
            }
        }
        Ok(g)
    }

    pub fn zero_grads(&mut self) {
        self.enc.iter_mut().for_each(Conv2d::zero_grads);
        self.action_dense.iter_mut().for_each(Dense::zero_grads);
        self.dec.iter_mut().for_each(TConv2d::zero_grads);
        self.out.zero_grads();
    }

    /// Stable-order (param, grad) views for the optimizer.
    pub fn param_blocks(&mut self) -> Vec<(&mut Vec<T>, &mut Vec<T>)> {
        let mut blocks = Vec::new();
        for c in &mut self.enc {
            blocks.extend(c.param_blocks());
        }
        for d in &mut self.action_dense {
            blocks.extend(d.param_blocks());
        }
        for t in &mut self.dec {
            blocks.extend(t.param_blocks());
        }
        blocks.extend(self.out.param_blocks());
        blocks
    }

    pub fn param_count(&mut self) -> usize {
        self.param_blocks().iter().map(|(p, _)| p.len()).sum()
    }

    pub fn to_store(&self) -> Result<ParamStore> {
        let mut store = ParamStore::new(self.spec.to_json());
        let as_f32 = |v: &[T]| v.iter().map(|x| x.as_f64() as f32).collect::<Vec<f32>>();
        for (i, c) in self.enc.iter().enumerate() {
            store.push(&format!("enc{i}.w"), &[c.out_ch, c.in_ch, c.k, c.k], as_f32(&c.w))?;
            store.push(&format!("enc{i}.b"), &[c.out_ch], as_f32(&c.b))?;
        }
        for (i, d) in self.action_dense.iter().enumerate() {
            store.push(&format!("act{i}.w"), &[d.out_dim, d.in_dim], as_f32(&d.w))?;
            store.push(&format!("act{i}.b"), &[d.out_dim], as_f32(&d.b))?;
        }
        for (i, t) in self.dec.iter().enumerate() {
            store.push(&format!("dec{i}.w"), &[t.in_ch, t.out_ch, t.k, t.k], as_f32(&t.w))?;
            store.push(&format!("dec{i}.b"), &[t.out_ch], as_f32(&t.b))?;
        }
        store.push("out.w", &[1, self.out.in_ch, self.out.k, self.out.k], as_f32(&self.out.w))?;
        store.push("out.b", &[1], as_f32(&self.out.b))?;
        Ok(store)
    }

    pub fn from_store(store: &ParamStore) -> Result<Self> {
        let spec = NetSpec::from_json(&store.descriptor)?;
        let mut net = UNet::new(spec, 0)?;
        let load = |dst: &mut Vec<T>, name: &str, dims: &[usize]| -> Result<()> {
            let e = store.get(name)?;
            if e.dims != dims {
                return Err(Error::ParamStore(format!(
                    "tensor {name:?} has dims {:?}, expected {dims:?}",
                    e.dims
                )));
            }
            *dst = e.values.iter().map(|&v| T::from_f64(v as f64)).collect();
            Ok(())
        };
        let n = net.spec.stages();
        for i in 0..n {
            let (out_ch, in_ch, k) = (net.enc[i].out_ch, net.enc[i].in_ch, net.enc[i].k);
            load(&mut net.enc[i].w, &format!("enc{i}.w"), &[out_ch, in_ch, k, k])?;
            load(&mut net.enc[i].b, &format!("enc{i}.b"), &[out_ch])?;
        }
        for i in 0..net.action_dense.len() {
            let (out_dim, in_dim) = (net.action_dense[i].out_dim, net.action_dense[i].in_dim);
            load(&mut net.action_dense[i].w, &format!("act{i}.w"), &[out_dim, in_dim])?;
            load(&mut net.action_dense[i].b, &format!("act{i}.b"), &[out_dim])?;
        }
        for i in 0..n {
            let (in_ch, out_ch, k) = (net.dec[i].in_ch, net.dec[i].out_ch, net.dec[i].k);
            load(&mut net.dec[i].w, &format!("dec{i}.w"), &[in_ch, out_ch, k, k])?;
            load(&mut net.dec[i].b, &format!("dec{i}.b"), &[out_ch])?;
        }
        let (in_ch, k) = (net.out.in_ch, net.out.k);
        load(&mut net.out.w, "out.w", &[1, in_ch, k, k])?;
        load(&mut net.out.b, "out.b", &[1])?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::layers::{conv_out_size, tconv_out_size};
    use proptest::prelude::*;
    use rand::Rng;

    fn toy_spec() -> NetSpec {
        NetSpec {
            input_size: 4,
            encoder_filters: vec![2],
            decoder_filters: vec![2],
            kernel: 3,
            action_hidden: vec![2],
        }
    }

    fn rand_frame(size: usize, seed: u64) -> Tensor<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        Tensor::from_vec(
            &[1, size, size],
            (0..size * size).map(|_| rng.gen::<f64>()).collect(),
        )
        .unwrap()
    }

    /// Scalar-loop reference forward pass: independent nested-loop conv,
    /// scatter tconv, and dense math with no shared kernels.
    fn reference_forward(net: &UNet<f64>, obs: &[f64], action: f64) -> Vec<f64> {
        let spec = &net.spec;
        let n = spec.stages();
        let k = spec.kernel;
        let pad = k / 2;

        let conv = |x: &[f64], in_ch: usize, size: usize, w: &[f64], b: &[f64], out_ch: usize, stride: usize| {
            let o = (size + 2 * pad - k) / stride + 1;
            let mut y = vec![0.0; out_ch * o * o];
            for oc in 0..out_ch {
                for oy in 0..o {
                    for ox in 0..o {
                        let mut acc = b[oc];
                        for ic in 0..in_ch {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let iy = (oy * stride + ky) as isize - pad as isize;
                                    let ix = (ox * stride + kx) as isize - pad as isize;
                                    if iy < 0 || ix < 0 || iy >= size as isize || ix >= size as isize {
                                        continue;
                                    }
                                    acc += w[((oc * in_ch + ic) * k + ky) * k + kx]
                                        * x[(ic * size + iy as usize) * size + ix as usize];
                                }
                            }
                        }
                        y[(oc * o + oy) * o + ox] = acc;
                    }
                }
            }
            (y, o)
        };

        let tconv = |x: &[f64], in_ch: usize, size: usize, w: &[f64], b: &[f64], out_ch: usize| {
            let o = (size - 1) * 2 + k + 1 - 2 * pad;
            let mut y = vec![0.0; out_ch * o * o];
            for oc in 0..out_ch {
                for i in 0..o * o {
                    y[oc * o * o + i] = b[oc];
                }
            }
            for ic in 0..in_ch {
                for iy in 0..size {
                    for ix in 0..size {
                        let v = x[(ic * size + iy) * size + ix];
                        for oc in 0..out_ch {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let oy = (iy * 2 + ky) as isize - pad as isize;
                                    let ox = (ix * 2 + kx) as isize - pad as isize;
                                    if oy < 0 || ox < 0 || oy >= o as isize || ox >= o as isize {
                                        continue;
                                    }
                                    y[(oc * o + oy as usize) * o + ox as usize] +=
                                        w[((ic * out_ch + oc) * k + ky) * k + kx] * v;
                                }
                            }
                        }
                    }
                }
            }
            (y, o)
        };

        let relu_v = |x: Vec<f64>| x.into_iter().map(|v| v.max(0.0)).collect::<Vec<f64>>();

        let mut h = obs.to_vec();
        let mut size = spec.input_size;
        let mut ch = 1;
        let mut enc_outs = Vec::new();
        let mut enc_sizes = Vec::new();
        for i in 0..n {
            let (z, o) = conv(&h, ch, size, &net.enc[i].w, &net.enc[i].b, spec.encoder_filters[i], 2);
            h = relu_v(z);
            ch = spec.encoder_filters[i];
            size = o;
            enc_outs.push(h.clone());
            enc_sizes.push(o);
        }

        let mut a = vec![action];
        for d in &net.action_dense {
            let mut y = d.b.clone();
            for o in 0..d.out_dim {
                for i in 0..d.in_dim {
                    y[o] += d.w[o * d.in_dim + i] * a[i];
                }
            }
            a = y.into_iter()
                .map(|v| if v > 0.0 { v } else { v.exp() - 1.0 })
                .collect();
        }

        let mut d_in = enc_outs[n - 1].clone();
        d_in.extend_from_slice(&a);
        let mut ch = spec.encoder_filters[n - 1] + 1;
        for i in 0..n {
            let (z, o) = tconv(&d_in, ch, size, &net.dec[i].w, &net.dec[i].b, spec.decoder_filters[i]);
            let post = relu_v(z);
            size = o;
            if i + 1 < n {
                d_in = post;
                d_in.extend_from_slice(&enc_outs[n - 2 - i]);
                assert_eq!(enc_sizes[n - 2 - i], o);
                ch = spec.decoder_filters[i] + spec.encoder_filters[n - 2 - i];
            } else {
                d_in = post;
                ch = spec.decoder_filters[i];
            }
        }

        let (logits, _) = conv(&d_in, ch, size, &net.out.w, &net.out.b, 1, 1);
        logits.into_iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect()
    }

    #[test]
    fn forward_matches_scalar_reference_on_toy_spec() {
        let net = UNet::<f64>::new(toy_spec(), 21).unwrap();
        let obs = rand_frame(4, 5);
        let (y, _) = net.forward(&obs, 0.37).unwrap();
        let want = reference_forward(&net, obs.data(), 0.37);
        assert_eq!(y.numel(), want.len());
        for (got, want) in y.data().iter().zip(&want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn forward_matches_scalar_reference_on_two_stage_spec() {
        let spec = NetSpec {
            input_size: 8,
            encoder_filters: vec![3, 4],
            decoder_filters: vec![3, 2],
            kernel: 3,
            action_hidden: vec![2, 3],
        };
        let net = UNet::<f64>::new(spec, 22).unwrap();
        let obs = rand_frame(8, 6);
        let (y, _) = net.forward(&obs, -0.8).unwrap();
        let want = reference_forward(&net, obs.data(), -0.8);
        for (got, want) in y.data().iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn whole_net_gradients_match_finite_differences() {
        // Squared-error loss against a fixed target; every parameter is
        // perturbed both ways and compared to the analytic gradient.
        let mut net = UNet::<f64>::new(toy_spec(), 23).unwrap();
        let obs = rand_frame(4, 7);
        let target = rand_frame(4, 8);
        let action = 0.42;

        let loss_of = |net: &UNet<f64>| {
            let (y, _) = net.forward(&obs, action).unwrap();
            y.data()
                .iter()
                .zip(target.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / y.numel() as f64
        };

        let (y, cache) = net.forward(&obs, action).unwrap();
        let scale = 2.0 / y.numel() as f64;
        let gy = Tensor::from_vec(
            y.dims(),
            y.data()
                .iter()
                .zip(target.data())
                .map(|(a, b)| scale * (a - b))
                .collect(),
        )
        .unwrap();
        net.zero_grads();
        net.backward(&cache, &gy).unwrap();

        let analytic: Vec<Vec<f64>> = net.param_blocks().iter().map(|(_, g)| g.to_vec()).collect();
        let eps = 1e-4;
        for (bi, block_grad) in analytic.iter().enumerate() {
            for i in 0..block_grad.len() {
                let orig = net.param_blocks()[bi].0[i];
                net.param_blocks()[bi].0[i] = orig + eps;
                let hi = loss_of(&net);
                net.param_blocks()[bi].0[i] = orig - eps;
                let lo = loss_of(&net);
                net.param_blocks()[bi].0[i] = orig;
                let numeric = (hi - lo) / (2.0 * eps);
                let a = block_grad[i];
                let denom = a.abs().max(numeric.abs());
                let ok = (a - numeric).abs() <= 1e-5 + 1e-3 * denom;
                assert!(ok, "block {bi} param {i}: analytic {a} vs numeric {numeric}");
            }
        }
    }

    #[test]
    fn store_round_trip_preserves_forward_output_bit_exact() {
        let net = UNet::<f32>::new(NetSpec::default(), 24).unwrap();
        let store = net.to_store().unwrap();
        let back = UNet::<f32>::from_store(&store).unwrap();
        let obs = {
            let mut rng = crate::rng::rng_from_seed(31);
            Tensor::from_vec(&[1, 64, 64], (0..64 * 64).map(|_| rng.gen::<f32>()).collect()).unwrap()
        };
        let (y1, _) = net.forward(&obs, 0.5f32).unwrap();
        let (y2, _) = back.forward(&obs, 0.5f32).unwrap();
        let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<u32>>();
        assert_eq!(bits(&y1), bits(&y2));
        assert_eq!(store.to_bytes(), back.to_store().unwrap().to_bytes());
    }

    #[test]
    fn from_store_rejects_mismatched_shapes() {
        let net = UNet::<f32>::new(toy_spec(), 25).unwrap();
        let store = net.to_store().unwrap();
        // Rebuild with one tensor renamed away.
        let descriptor = store.descriptor.clone();
        let mut broken = ParamStore::new(descriptor);
        for e in store.entries() {
            let name = if e.name == "out.b" { "out.bias" } else { &e.name };
            broken.push(name, &e.dims, e.values.clone()).unwrap();
        }
        assert!(UNet::<f32>::from_store(&broken).is_err());
        // And with one tensor reshaped.
        store.get("out.w").unwrap();
        let mut reshaped = ParamStore::new(net.spec.to_json());
        for e in store.entries() {
            if e.name == "out.b" {
                reshaped.push(&e.name, &[2], vec![0.0, 0.0]).unwrap();
            } else {
                reshaped.push(&e.name, &e.dims, e.values.clone()).unwrap();
            }
        }
        assert!(UNet::<f32>::from_store(&reshaped).is_err());
    }

    #[test]
    fn spec_validation_rejects_bad_shapes() {
        let mut s = NetSpec::default();
        s.decoder_filters.pop();
        assert!(s.validate().is_err());

        let mut s = NetSpec::default();
        s.kernel = 4;
        assert!(s.validate().is_err());

        let mut s = NetSpec::default();
        s.input_size = 60;
        assert!(s.validate().is_err());

        let s = NetSpec {
            input_size: 4,
            encoder_filters: vec![2, 2, 2],
            decoder_filters: vec![2, 2, 2],
            kernel: 3,
            action_hidden: vec![],
        };
        // 4 / 2^3 is not an integer image side.
        assert!(s.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn output_shape_equals_input_shape_for_valid_specs(
            stages in 1usize..=3,
            size_pow in 3usize..=4,
            f1 in 1usize..=4,
            f2 in 1usize..=4,
            f3 in 1usize..=4,
            kernel in prop::sample::select(vec![1usize, 3, 5]),
            hidden in 1usize..=4,
            action in -1.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let input_size = 1usize << size_pow;
            let filters = [f1, f2, f3];
            let spec = NetSpec {
                input_size,
                encoder_filters: filters[..stages].to_vec(),
                decoder_filters: filters[..stages].iter().rev().copied().collect(),
                kernel,
                action_hidden: vec![hidden],
            };
            prop_assume!(spec.validate().is_ok());
            let net = UNet::<f32>::new(spec, seed).unwrap();
            let obs = Tensor::<f32>::zeros(&[1, input_size, input_size]);
            let (y, _) = net.forward(&obs, action as f32).unwrap();
            prop_assert_eq!(y.dims(), &[1, input_size, input_size]);
            prop_assert!(y.data().iter().all(|v| *v >= 0.0 && *v <= 1.0));
        }
    }

    #[test]
    fn stage_size_arithmetic_is_consistent() {
        // The helpers the architecture relies on: stride-2 conv halves and
        // the paired transposed conv doubles, for any odd kernel.
        for k in [1, 3, 5, 7] {
            for s in [4, 8, 16, 64] {
                assert_eq!(conv_out_size(s, k, 2, k / 2), s / 2);
                assert_eq!(tconv_out_size(s / 2, k, 2, k / 2, 1), s);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_input_shape() {
        let net = UNet::<f64>::new(toy_spec(), 26).unwrap();
        let bad = Tensor::<f64>::zeros(&[1, 8, 8]);
        assert!(net.forward(&bad, 0.0).is_err());
    }
}
