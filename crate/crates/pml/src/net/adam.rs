//! Adaptive-moment gradient descent with bias-corrected first and second
//! moment estimates, the standard defaults, and per-block state.

use crate::net::Scalar;

#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr: T::from_f64(lr),
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            eps: T::from_f64(1e-8),
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One update over `(params, grads)` blocks. Blocks must be passed in
    /// the same order on every call; moment state is keyed by position.
    pub fn step(&mut self, blocks: &mut [(&mut Vec<T>, &mut Vec<T>)]) {
        if self.m.is_empty() {
            self.m = blocks.iter().map(|(p, _)| vec![T::zero(); p.len()]).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), blocks.len(), "optimizer block count changed");
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t as i32);
        let c2 = one - self.beta2.powi(self.t as i32);
        for (bi, (params, grads)) in blocks.iter_mut().enumerate() {
            assert_eq!(self.m[bi].len(), params.len(), "optimizer block size changed");
            let (m, v) = (&mut self.m[bi], &mut self.v[bi]);
            for i in 0..params.len() {
                let g = grads[i];
                m[i] = self.beta1 * m[i] + (one - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (one - self.beta2) * g * g;
                // A zero rate must leave params bit-identical; skipping the
                // write avoids the -0.0 + 0.0 sign quirk of a no-op add.
                if self.lr != T::zero() {
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    params[i] = params[i] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
                }
            }
        }
    }
}
