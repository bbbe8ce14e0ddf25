//! Behavioral cloning: a convolutional regressor from a camera frame
//! straight to a steering value, trained on expert demonstrations.
//!
//! Unlike the forward model, this net uses batch normalization and dropout,
//! so training runs whole batches through each stage (the normalization
//! statistics couple the samples) while inference runs one frame at a time
//! on running statistics with dropout disabled.

use crate::data::LabeledFrame;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::model::image_to_tensor;
use crate::net::layers::{relu, relu_backward, BatchNorm, BatchNormCache, Conv2d, ConvCache, Dense, Dropout};
use crate::net::{Adam, ParamStore, Scalar, Tensor};
use crate::rng::{derive_seed, rng_from_seed, SeedRng};
use crate::sim::Policy;
use crate::steer::SteeringAction;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Architecture of the cloning net: conv stages (stride 2, batch norm,
/// relu), a flatten, then a relu dense stack ending in one linear output.
///
/// Dropout of the given rate runs after the second-to-last conv stage and
/// after every dense stage but the last. With the defaults that places it
/// after conv stage 3 and after the 512- and 128-wide dense stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcNetSpec {
    pub input_size: usize,
    pub conv_filters: Vec<usize>,
    pub conv_kernels: Vec<usize>,
    pub dense_widths: Vec<usize>,
    pub dropout: f64,
}

impl Default for BcNetSpec {
    fn default() -> Self {
        BcNetSpec {
            input_size: 64,
            conv_filters: vec![32, 64, 128, 256],
            conv_kernels: vec![5, 3, 3, 3],
            dense_widths: vec![512, 128, 64],
            dropout: 0.2,
        }
    }
}

impl BcNetSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidNetSpec(msg));
        let n = self.conv_filters.len();
        if n == 0 {
            return fail("need at least one conv stage".into());
        }
        if self.conv_kernels.len() != n {
            return fail(format!(
                "{} conv stages but {} kernels",
                n,
                self.conv_kernels.len()
            ));
        }
        if self.conv_filters.iter().any(|&f| f == 0) {
            return fail("conv filter counts must be positive".into());
        }
        if self.conv_kernels.iter().any(|&k| k % 2 == 0 || k == 0) {
            return fail(format!("kernels must be odd, got {:?}", self.conv_kernels));
        }
        if self.input_size == 0 || self.input_size % (1 << n) != 0 {
            return fail(format!(
                "input size {} is not divisible by 2^{n}",
                self.input_size
            ));
        }
        if self.dense_widths.is_empty() || self.dense_widths.iter().any(|&w| w == 0) {
            return fail(format!(
                "dense widths must be non-empty and positive, got {:?}",
                self.dense_widths
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.conv_filters.len()
    }

    /// Edge length of the feature map after the conv stack.
    pub fn final_map_size(&self) -> usize {
        self.input_size >> self.stages()
    }

    /// Length of the flattened feature vector feeding the dense stack.
    pub fn flat_dim(&self) -> usize {
        self.conv_filters[self.stages() - 1] * self.final_map_size() * self.final_map_size()
    }

    /// Conv stage index followed by dropout, if any.
    fn conv_drop_stage(&self) -> Option<usize> {
        (self.dropout > 0.0 && self.stages() >= 2).then(|| self.stages() - 2)
    }

    /// Whether dropout follows dense stage `i`.
    fn dense_drop_at(&self, i: usize) -> bool {
        self.dropout > 0.0 && i + 1 < self.dense_widths.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidNetSpec(format!("bad spec descriptor: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

pub struct BcNet<T> {
    pub spec: BcNetSpec,
    convs: Vec<Conv2d<T>>,
    norms: Vec<BatchNorm<T>>,
    /// Hidden stages then the final 1-wide linear output.
    denses: Vec<Dense<T>>,
}

/// Everything backward needs, for one batch: per-stage per-sample conv
/// caches, batch-level norm caches, post-relu values, and dropout masks.
pub struct BcCache<T> {
    conv_caches: Vec<Vec<ConvCache<T>>>,
    bn_caches: Vec<BatchNormCache<T>>,
    conv_relu: Vec<Vec<Tensor<T>>>,
    conv_drop_masks: Vec<Vec<T>>,
    dense_ins: Vec<Vec<Vec<T>>>,
    dense_relu: Vec<Vec<Vec<T>>>,
    dense_drop_masks: Vec<Vec<Vec<T>>>,
    pub outputs: Vec<T>,
}

impl<T: Scalar> BcNet<T> {
    pub fn new(spec: BcNetSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_from_seed(seed);
        let mut convs = Vec::with_capacity(spec.stages());
        let mut norms = Vec::with_capacity(spec.stages());
        let mut prev = 1;
        for (&f, &k) in spec.conv_filters.iter().zip(&spec.conv_kernels) {
            convs.push(Conv2d::new(prev, f, k, 2, k / 2, &mut rng));
            norms.push(BatchNorm::new(f));
            prev = f;
        }
        let mut denses = Vec::with_capacity(spec.dense_widths.len() + 1);
        let mut prev_w = spec.flat_dim();
        for &w in &spec.dense_widths {
            denses.push(Dense::new(prev_w, w, &mut rng));
            prev_w = w;
        }
        denses.push(Dense::new(prev_w, 1, &mut rng));
        Ok(BcNet { spec, convs, norms, denses })
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let s = self.spec.input_size;
        if x.dims() != [1, s, s] {
            return Err(Error::ShapeMismatch(format!(
                "input is {:?}, net wants [1, {s}, {s}]",
                x.dims()
            )));
        }
        Ok(())
    }

    /// Batched training forward. Batch-norm consumes batch statistics and
    /// updates its running averages; dropout draws fresh masks from `rng`.
    pub fn forward_train(
        &mut self,
        xs: &[Tensor<T>],
        rng: &mut SeedRng,
    ) -> Result<(Vec<T>, BcCache<T>)> {
        if xs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for x in xs {
            self.check_input(x)?;
        }
        let dropout = Dropout::new(self.spec.dropout);
        let drop_stage = self.spec.conv_drop_stage();
        let batch = xs.len();

        let mut cur: Vec<Tensor<T>> = xs.to_vec();
        let mut conv_caches = Vec::with_capacity(self.spec.stages());
        let mut bn_caches = Vec::with_capacity(self.spec.stages());
        let mut conv_relu = Vec::with_capacity(self.spec.stages());
        let mut conv_drop_masks: Vec<Vec<T>> = Vec::new();
        for (si, (conv, norm)) in self.convs.iter().zip(&mut self.norms).enumerate() {
            let mut zs = Vec::with_capacity(batch);
            let mut caches = Vec::with_capacity(batch);
            for x in &cur {
                let (z, c) = conv.forward(x);
                zs.push(z);
                caches.push(c);
            }
            let (ys, bn_cache) = norm.forward_train(&zs);
            let rs: Vec<Tensor<T>> = ys
                .iter()
                .map(|y| Tensor::from_vec(y.dims(), relu(y.data())).expect("same shape"))
                .collect();
            conv_caches.push(caches);
            bn_caches.push(bn_cache);
            conv_relu.push(rs.clone());
            cur = rs;
            if drop_stage == Some(si) {
                let mut dropped = Vec::with_capacity(batch);
                for r in &cur {
                    let (y, mask) = dropout.forward_train(r.data(), rng);
                    conv_drop_masks.push(mask);
                    dropped.push(Tensor::from_vec(r.dims(), y).expect("same shape"));
                }
                cur = dropped;
            }
        }

        let hidden = self.spec.dense_widths.len();
        let mut dense_ins: Vec<Vec<Vec<T>>> = Vec::with_capacity(hidden + 1);
        let mut dense_relu: Vec<Vec<Vec<T>>> = Vec::with_capacity(hidden);
        let mut dense_drop_masks: Vec<Vec<Vec<T>>> = Vec::with_capacity(hidden);
        let mut flat: Vec<Vec<T>> = cur.into_iter().map(|t| t.into_data()).collect();
        for di in 0..hidden {
            dense_ins.push(flat.clone());
            let mut relu_outs = Vec::with_capacity(batch);
            let mut masks = Vec::with_capacity(batch);
            let mut next = Vec::with_capacity(batch);
            for x in &flat {
                let r = relu(&self.denses[di].forward(x));
                let out = if self.spec.dense_drop_at(di) {
                    let (y, mask) = dropout.forward_train(&r, rng);
                    masks.push(mask);
                    y
                } else {
                    r.clone()
                };
                relu_outs.push(r);
                next.push(out);
            }
            dense_relu.push(relu_outs);
            dense_drop_masks.push(masks);
            flat = next;
        }
        dense_ins.push(flat.clone());
        let outputs: Vec<T> = flat
            .iter()
            .map(|x| self.denses[hidden].forward(x)[0])
            .collect();
        Ok((
            outputs.clone(),
            BcCache {
                conv_caches,
                bn_caches,
                conv_relu,
                conv_drop_masks,
                dense_ins,
                dense_relu,
                dense_drop_masks,
                outputs,
            },
        ))
    }

    /// Single-frame inference on running statistics, dropout inactive.
    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<T> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for (conv, norm) in self.convs.iter().zip(&self.norms) {
            let (z, _) = conv.forward(&cur);
            let y = norm.forward_eval(&z);
            cur = Tensor::from_vec(y.dims(), relu(y.data())).expect("same shape");
        }
        let mut v = cur.into_data();
        let hidden = self.spec.dense_widths.len();
        for di in 0..hidden {
            v = relu(&self.denses[di].forward(&v));
        }
        Ok(self.denses[hidden].forward(&v)[0])
    }

    /// Accumulates gradients for one batch given d(loss)/d(output) per
    /// sample. Callers fold any batch averaging into `gout`.
    pub fn backward(&mut self, cache: &BcCache<T>, gout: &[T]) -> Result<()> {
        let batch = cache.outputs.len();
        if gout.len() != batch {
            return Err(Error::ShapeMismatch(format!(
                "{} output grads for a batch of {batch}",
                gout.len()
            )));
        }
        let dropout = Dropout::new(self.spec.dropout);
        let hidden = self.spec.dense_widths.len();

        // Dense stack: each sample's chain is independent.
        let mut gflat: Vec<Vec<T>> = Vec::with_capacity(batch);
        for s in 0..batch {
            let mut g = self.denses[hidden].backward(&cache.dense_ins[hidden][s], &[gout[s]]);
            for di in (0..hidden).rev() {
                if self.spec.dense_drop_at(di) {
                    g = dropout.backward(&cache.dense_drop_masks[di][s], &g);
                }
                g = relu_backward(&cache.dense_relu[di][s], &g);
                g = self.denses[di].backward(&cache.dense_ins[di][s], &g);
            }
            gflat.push(g);
        }

        // Conv stack: batch norm couples the batch, so walk stages with all
        // samples together.
        let drop_stage = self.spec.conv_drop_stage();
        let last_dims = cache.conv_relu[self.spec.stages() - 1][0].dims().to_vec();
        let mut gs: Vec<Tensor<T>> = gflat
            .into_iter()
            .map(|g| Tensor::from_vec(&last_dims, g).expect("flat grad matches conv output"))
            .collect();
        for si in (0..self.spec.stages()).rev() {
            if drop_stage == Some(si) {
                gs = gs
                    .iter()
                    .enumerate()
                    .map(|(s, g)| {
                        let masked = dropout.backward(&cache.conv_drop_masks[s], g.data());
                        Tensor::from_vec(g.dims(), masked).expect("same shape")
                    })
                    .collect();
            }
            let gys: Vec<Tensor<T>> = gs
                .iter()
                .enumerate()
                .map(|(s, g)| {
                    let r = relu_backward(cache.conv_relu[si][s].data(), g.data());
                    Tensor::from_vec(g.dims(), r).expect("same shape")
                })
                .collect();
            let gzs = self.norms[si].backward(&cache.bn_caches[si], &gys);
            gs = gzs
                .iter()
                .enumerate()
                .map(|(s, gz)| self.convs[si].backward(&cache.conv_caches[si][s], gz))
                .collect();
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for c in &mut self.convs {
            c.zero_grads();
        }
        for n in &mut self.norms {
            n.zero_grads();
        }
        for d in &mut self.denses {
            d.zero_grads();
        }
    }

    pub fn param_blocks(&mut self) -> Vec<(&mut Vec<T>, &mut Vec<T>)> {
        let mut blocks = Vec::new();
        for c in &mut self.convs {
            blocks.extend(c.param_blocks());
        }
        for n in &mut self.norms {
            blocks.extend(n.param_blocks());
        }
        for d in &mut self.denses {
            blocks.extend(d.param_blocks());
        }
        blocks
    }

    pub fn to_store(&self) -> Result<ParamStore> {
        let mut store = ParamStore::new(self.spec.to_json());
        let as_f32 = |v: &[T]| v.iter().map(|x| x.as_f64() as f32).collect::<Vec<f32>>();
        for (i, c) in self.convs.iter().enumerate() {
            store.push(&format!("conv{i}.w"), &[c.out_ch, c.in_ch, c.k, c.k], as_f32(&c.w))?;
            store.push(&format!("conv{i}.b"), &[c.out_ch], as_f32(&c.b))?;
        }
        for (i, n) in self.norms.iter().enumerate() {
            store.push(&format!("bn{i}.gamma"), &[n.ch], as_f32(&n.gamma))?;
            store.push(&format!("bn{i}.beta"), &[n.ch], as_f32(&n.beta))?;
            store.push(&format!("bn{i}.mean"), &[n.ch], as_f32(&n.running_mean))?;
            store.push(&format!("bn{i}.var"), &[n.ch], as_f32(&n.running_var))?;
        }
        for (i, d) in self.denses.iter().enumerate() {
            store.push(&format!("dense{i}.w"), &[d.out_dim, d.in_dim], as_f32(&d.w))?;
            store.push(&format!("dense{i}.b"), &[d.out_dim], as_f32(&d.b))?;
        }
        Ok(store)
    }

    pub fn from_store(store: &ParamStore) -> Result<Self> {
        let spec = BcNetSpec::from_json(&store.descriptor)?;
        let mut net = BcNet::new(spec, 0)?;
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
        for i in 0..net.convs.len() {
            let (out_ch, in_ch, k) = (net.convs[i].out_ch, net.convs[i].in_ch, net.convs[i].k);
            load(&mut net.convs[i].w, &format!("conv{i}.w"), &[out_ch, in_ch, k, k])?;
            load(&mut net.convs[i].b, &format!("conv{i}.b"), &[out_ch])?;
        }
        for i in 0..net.norms.len() {
            let ch = net.norms[i].ch;
            load(&mut net.norms[i].gamma, &format!("bn{i}.gamma"), &[ch])?;
            load(&mut net.norms[i].beta, &format!("bn{i}.beta"), &[ch])?;
            load(&mut net.norms[i].running_mean, &format!("bn{i}.mean"), &[ch])?;
            load(&mut net.norms[i].running_var, &format!("bn{i}.var"), &[ch])?;
        }
        for i in 0..net.denses.len() {
            let (out_dim, in_dim) = (net.denses[i].out_dim, net.denses[i].in_dim);
            load(&mut net.denses[i].w, &format!("dense{i}.w"), &[out_dim, in_dim])?;
            load(&mut net.denses[i].b, &format!("dense{i}.b"), &[out_dim])?;
        }
        Ok(net)
    }
}

/// Clamped steering from a single frame, dropout inactive.
pub fn bc_predict(net: &BcNet<f32>, obs: &GrayImage) -> Result<SteeringAction> {
    let x = image_to_tensor::<f32>(obs);
    let raw = net.forward_eval(&x)? as f64;
    if !raw.is_finite() {
        return Err(Error::NonFiniteValue {
            what: "steering output",
            context: "cloning net forward pass",
        });
    }
    SteeringAction::clamped(raw)
}

/// Trainer knobs for the cloning net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcTrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub val_fraction: f64,
}

impl Default for BcTrainConfig {
    fn default() -> Self {
        BcTrainConfig {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 10,
            seed: 7,
            val_fraction: 0.1,
        }
    }
}

impl BcTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return fail(format!(
                "val_fraction must lie in [0, 1), got {}",
                self.val_fraction
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcEpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BcTrainReport {
    pub epochs: Vec<BcEpochStats>,
}

impl BcTrainReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tval_loss\tval_mae\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\n",
                e.epoch, e.train_loss, e.val_loss, e.val_mae
            ));
        }
        out
    }

    pub fn final_val_mae(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.val_mae)
    }
}

/// Held-out mean squared error and mean absolute error of the net's
/// steering predictions.
pub fn evaluate_bc(net: &BcNet<f32>, frames: &[LabeledFrame]) -> Result<(f64, f64)> {
    if frames.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sq = 0.0;
    let mut abs = 0.0;
    for f in frames {
        let pred = net.forward_eval(&image_to_tensor::<f32>(&f.obs))? as f64;
        let d = pred - f.action.value();
        sq += d * d;
        abs += d.abs();
    }
    let n = frames.len() as f64;
    Ok((sq / n, abs / n))
}

/// Supervised regression of steering on frames: seeded split, shuffling,
/// and dropout masks; squared-error loss; adaptive-moment updates.
pub fn bc_train(
    frames: &[LabeledFrame],
    spec: &BcNetSpec,
    cfg: &BcTrainConfig,
) -> Result<(ParamStore, BcTrainReport)> {
    cfg.validate()?;
    spec.validate()?;
    if frames.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for f in frames {
        if f.obs.size() != spec.input_size {
            return Err(Error::ShapeMismatch(format!(
                "frame is {}, spec wants {}",
                f.obs.size(),
                spec.input_size
            )));
        }
    }

    let mut order: Vec<usize> = (0..frames.len()).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(cfg.seed, 0x4243_5350)));
    let val_len = ((frames.len() as f64) * cfg.val_fraction).round() as usize;
    let (val_idx, train_idx) = order.split_at(val_len);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "split leaves train {} / val {}; need both non-empty",
            train_idx.len(),
            val_idx.len()
        )));
    }
    let val: Vec<LabeledFrame> = val_idx.iter().map(|&i| frames[i].clone()).collect();

    let mut net: BcNet<f32> = BcNet::new(spec.clone(), derive_seed(cfg.seed, 0x4243_494e))?;
    let mut opt: Adam<f32> = Adam::new(cfg.learning_rate);
    let mut mask_rng = rng_from_seed(derive_seed(cfg.seed, 0x4243_4d53));
    let mut report = BcTrainReport::default();
    let mut train_order = train_idx.to_vec();
    for epoch in 0..cfg.epochs {
        let shuffle_seed = derive_seed(derive_seed(cfg.seed, 0x4243_4550), epoch as u64);
        train_order.shuffle(&mut rng_from_seed(shuffle_seed));
        let mut loss_sum = 0.0;
        for chunk in train_order.chunks(cfg.batch_size) {
            let xs: Vec<Tensor<f32>> = chunk
                .iter()
                .map(|&i| image_to_tensor::<f32>(&frames[i].obs))
                .collect();
            net.zero_grads();
            let (preds, cache) = net.forward_train(&xs, &mut mask_rng)?;
            let b = chunk.len() as f64;
            let mut batch_loss = 0.0;
            let mut gout = Vec::with_capacity(chunk.len());
            for (p, &i) in preds.iter().zip(chunk) {
                let d = *p as f64 - frames[i].action.value();
                batch_loss += d * d;
                gout.push((2.0 * d / b) as f32);
            }
            batch_loss /= b;
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteValue {
                    what: "loss",
                    context: "cloning training step",
                });
            }
            net.backward(&cache, &gout)?;
            opt.step(&mut net.param_blocks());
            loss_sum += batch_loss * b;
        }
        let train_loss = loss_sum / train_order.len() as f64;
        let (val_loss, val_mae) = evaluate_bc(&net, &val)?;
        report.epochs.push(BcEpochStats {
            epoch,
            train_loss,
            val_loss,
            val_mae,
        });
    }
    Ok((net.to_store()?, report))
}

/// `Policy` adapter: one frame in, one clamped steering value out.
pub struct BcPolicy {
    net: BcNet<f32>,
}

impl BcPolicy {
    pub fn new(net: BcNet<f32>) -> Self {
        BcPolicy { net }
    }

    pub fn from_store(store: &ParamStore) -> Result<Self> {
        Ok(BcPolicy { net: BcNet::from_store(store)? })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_store(&ParamStore::load(path.as_ref())?)
    }
}

impl Policy for BcPolicy {
    fn act(&mut self, obs: &GrayImage) -> Result<SteeringAction> {
        bc_predict(&self.net, obs)
    }
}
