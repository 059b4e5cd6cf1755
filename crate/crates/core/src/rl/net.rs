use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Layer widths of a Q-network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub input: usize,
    pub dense: usize,
    pub hidden: usize,
    pub actions: usize,
}

/// How value and advantage heads are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DuelingAggregator {
    /// `Q(a) = V + A(a) - mean(A)`.
    #[default]
    MeanCentered,
    /// `Q(a) = V - A(a) / |A|`.
    Printed,
}

/// Combines a state value and per-action advantages into Q-values.
pub fn dueling_aggregate(v: f64, adv: &[f64], kind: DuelingAggregator) -> Vec<f64> {
    let k = adv.len() as f64;
    match kind {
        DuelingAggregator::MeanCentered => {
            let mean = adv.iter().sum::<f64>() / k;
            adv.iter().map(|a| v + a - mean).collect()
        }
        DuelingAggregator::Printed => adv.iter().map(|a| v - a / k).collect(),
    }
}

/// Parameter block indices into [`QNet::params`].
pub mod block {
    pub const FC1_W: usize = 0;
    pub const FC1_B: usize = 1;
    pub const FC2_W: usize = 2;
    pub const FC2_B: usize = 3;
    pub const LSTM_WX: usize = 4;
    pub const LSTM_WH: usize = 5;
    pub const LSTM_B: usize = 6;
    pub const VALUE_W: usize = 7;
    pub const VALUE_B: usize = 8;
    pub const ADV_W: usize = 9;
    pub const ADV_B: usize = 10;
    pub const COUNT: usize = 11;
    pub const NAMES: [&str; COUNT] = [
        "fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias", "lstm.weight_x", "lstm.weight_h", "lstm.bias",
        "value.weight", "value.bias", "adv.weight", "adv.bias",
    ];
}
use block::*;

/// One set of tensors with the layout of a [`QNet`]'s parameters; also
/// used for gradients and optimizer moments.
pub type Tensors = Vec<Array2<f64>>;

/// LSTM hidden and cell state for a batch, each `[batch, hidden]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carry {
    pub h: Array2<f64>,
    pub c: Array2<f64>,
}

impl Carry {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        Self {
            h: Array2::zeros((batch, hidden)),
            c: Array2::zeros((batch, hidden)),
        }
    }
}

/// Dense(tanh) → dense(tanh) → LSTM → dueling heads on the final step.
///
/// Weights are stored `[out, in]` and biases as `[1, out]` rows. LSTM gates
/// are stacked in the order input, forget, cell, output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNet {
    pub shape: NetShape,
    pub aggregator: DuelingAggregator,
    pub params: Tensors,
}

/// Activations kept by [`QNet::forward_train`] for the backward pass.
/// Rows are time-major: step `t` of batch row `b` is row `t * batch + b`.
pub struct ForwardCache {
    steps: usize,
    batch: usize,
    x: Array2<f64>,
    a1: Array2<f64>,
    a2: Array2<f64>,
    /// Post-activation gates `[i, f, g, o]`.
    gates: Array2<f64>,
    h: Array2<f64>,
    c: Array2<f64>,
    h0: Array2<f64>,
    c0: Array2<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

impl QNet {
    /// Fan-in uniform initialization: dense and head blocks use
    /// `1/sqrt(fan_in)`, the LSTM `1/sqrt(hidden)`.
    pub fn new<R: Rng + ?Sized>(shape: NetShape, aggregator: DuelingAggregator, rng: &mut R) -> Self {
        let NetShape { input, dense, hidden, actions } = shape;
        let k1 = 1.0 / (input as f64).sqrt();
        let k2 = 1.0 / (dense as f64).sqrt();
        let kh = 1.0 / (hidden as f64).sqrt();
        let params = vec![
            uniform(dense, input, k1, rng),
            uniform(1, dense, k1, rng),
            uniform(dense, dense, k2, rng),
            uniform(1, dense, k2, rng),
            uniform(4 * hidden, dense, kh, rng),
            uniform(4 * hidden, hidden, kh, rng),
            uniform(1, 4 * hidden, kh, rng),
            uniform(1, hidden, kh, rng),
            uniform(1, 1, kh, rng),
            uniform(actions, hidden, kh, rng),
            uniform(1, actions, kh, rng),
        ];
        Self { shape, aggregator, params }
    }

    /// All-zero parameters.
    pub fn zeros(shape: NetShape, aggregator: DuelingAggregator) -> Self {
        let params = Self::zeros_like_shape(shape);
        Self { shape, aggregator, params }
    }

    fn zeros_like_shape(shape: NetShape) -> Tensors {
        let NetShape { input, dense, hidden, actions } = shape;
        vec![
            Array2::zeros((dense, input)),
            Array2::zeros((1, dense)),
            Array2::zeros((dense, dense)),
            Array2::zeros((1, dense)),
            Array2::zeros((4 * hidden, dense)),
            Array2::zeros((4 * hidden, hidden)),
            Array2::zeros((1, 4 * hidden)),
            Array2::zeros((1, hidden)),
            Array2::zeros((1, 1)),
            Array2::zeros((actions, hidden)),
            Array2::zeros((1, actions)),
        ]
    }

    /// Zero tensors with this net's parameter layout.
    pub fn zeros_like(&self) -> Tensors {
        Self::zeros_like_shape(self.shape)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Checks that every block has the shape implied by `self.shape`.
    pub fn validate(&self) -> Result<()> {
        let want = self.zeros_like();
        if self.params.len() != want.len() {
            return Err(Error::Config(format!("expected {} parameter blocks, got {}", want.len(), self.params.len())));
        }
        for (k, (p, w)) in self.params.iter().zip(&want).enumerate() {
            if p.dim() != w.dim() {
                return Err(Error::Config(format!("{} has shape {:?}, expected {:?}", NAMES[k], p.dim(), w.dim())));
            }
        }
        Ok(())
    }

    fn check_input(&self, inputs: &ArrayView2<'_, f64>, steps: usize, carry: &Carry) -> Result<usize> {
        if inputs.ncols() != self.shape.input {
            return Err(Error::WidthMismatch {
                expected: self.shape.input,
                got: inputs.ncols(),
            });
        }
        if steps == 0 || inputs.nrows() % steps != 0 {
            return Err(Error::InputDomain(format!("{} rows do not split into {steps} steps", inputs.nrows())));
        }
        let batch = inputs.nrows() / steps;
        if carry.h.dim() != (batch, self.shape.hidden) || carry.c.dim() != (batch, self.shape.hidden) {
            return Err(Error::WidthMismatch {
                expected: self.shape.hidden,
                got: carry.h.ncols(),
            });
        }
        Ok(batch)
    }

    fn heads(&self, h_last: &ArrayView2<'_, f64>) -> Array2<f64> {
        let v = h_last.dot(&self.params[VALUE_W].t()) + &self.params[VALUE_B];
        let adv = h_last.dot(&self.params[ADV_W].t()) + &self.params[ADV_B];
        let mut q = Array2::zeros(adv.dim());
        for (b, row) in adv.outer_iter().enumerate() {
            let qa = dueling_aggregate(v[[b, 0]], row.as_slice().expect("standard layout"), self.aggregator);
            q.row_mut(b).assign(&ndarray::ArrayView1::from(&qa));
        }
        q
    }

    /// Runs `steps` time steps on `inputs` (`[steps * batch, input]`,
    /// time-major) starting from `carry`. Returns Q-values of the final step
    /// (`[batch, actions]`) and the carry after it.
    pub fn forward(&self, inputs: ArrayView2<'_, f64>, steps: usize, carry: &Carry) -> Result<(Array2<f64>, Carry)> {
        let cache = self.forward_train(inputs, steps, carry)?;
        let q = self.heads(&cache.last_h());
        let carry = Carry {
            h: cache.last_h().to_owned(),
            c: cache.c.slice(s![(steps - 1) * cache.batch.., ..]).to_owned(),
        };
        Ok((q, carry))
    }

    /// Forward pass keeping every activation needed by [`QNet::backward`].
    pub fn forward_train(&self, inputs: ArrayView2<'_, f64>, steps: usize, carry: &Carry) -> Result<ForwardCache> {
        let batch = self.check_input(&inputs, steps, carry)?;
        let hd = self.shape.hidden;
        let p = &self.params;
        let a1 = (inputs.dot(&p[FC1_W].t()) + &p[FC1_B]).mapv_into(f64::tanh);
        let a2 = (a1.dot(&p[FC2_W].t()) + &p[FC2_B]).mapv_into(f64::tanh);
        // Input projection of every step at once; only the recurrent part
        // is sequential.
        let mut gates = a2.dot(&p[LSTM_WX].t()) + &p[LSTM_B];
        let mut h = Array2::zeros((steps * batch, hd));
        let mut c = Array2::zeros((steps * batch, hd));
        let wh_t = p[LSTM_WH].t();
        for t in 0..steps {
            let rows = s![t * batch..(t + 1) * batch, ..];
            let (h_prev, c_prev) = if t == 0 {
                (carry.h.view(), carry.c.view())
            } else {
                let prev = s![(t - 1) * batch..t * batch, ..];
                (h.slice(prev), c.slice(prev))
            };
            let rec = h_prev.dot(&wh_t);
            let mut g = gates.slice_mut(rows);
            g += &rec;
            let mut c_new = Array2::zeros((batch, hd));
            let mut h_new = Array2::zeros((batch, hd));
            for b in 0..batch {
                for k in 0..hd {
                    let i = sigmoid(g[[b, k]]);
                    let f = sigmoid(g[[b, hd + k]]);
                    let gg = g[[b, 2 * hd + k]].tanh();
                    let o = sigmoid(g[[b, 3 * hd + k]]);
                    g[[b, k]] = i;
                    g[[b, hd + k]] = f;
                    g[[b, 2 * hd + k]] = gg;
                    g[[b, 3 * hd + k]] = o;
                    let cv = f * c_prev[[b, k]] + i * gg;
                    c_new[[b, k]] = cv;
                    h_new[[b, k]] = o * cv.tanh();
                }
            }
            h.slice_mut(rows).assign(&h_new);
            c.slice_mut(rows).assign(&c_new);
        }
        Ok(ForwardCache {
            steps,
            batch,
            x: inputs.to_owned(),
            a1,
            a2,
            gates,
            h,
            c,
            h0: carry.h.clone(),
            c0: carry.c.clone(),
        })
    }

    /// Q-values of the final step from a cached forward pass.
    pub fn q_from_cache(&self, cache: &ForwardCache) -> Array2<f64> {
        self.heads(&cache.last_h())
    }

    /// Gradients of a loss with respect to every parameter block, given the
    /// loss gradient `dq` with respect to the final-step Q-values.
    pub fn backward(&self, cache: &ForwardCache, dq: &Array2<f64>) -> Tensors {
        let p = &self.params;
        let (steps, batch) = (cache.steps, cache.batch);
        let hd = self.shape.hidden;
        let k = self.shape.actions as f64;
        let mut grads = self.zeros_like();

        let dv = dq.sum_axis(Axis(1)).insert_axis(Axis(1));
        let dadv = match self.aggregator {
            DuelingAggregator::MeanCentered => dq - &(&dv / k),
            DuelingAggregator::Printed => dq * (-1.0 / k),
        };
        let h_last = cache.last_h();
        grads[VALUE_W] = dv.t().dot(&h_last);
        grads[VALUE_B] = dv.sum_axis(Axis(0)).insert_axis(Axis(0));
        grads[ADV_W] = dadv.t().dot(&h_last);
        grads[ADV_B] = dadv.sum_axis(Axis(0)).insert_axis(Axis(0));

        let mut dh = dv.dot(&p[VALUE_W]) + dadv.dot(&p[ADV_W]);
        let mut dc = Array2::<f64>::zeros((batch, hd));
        let mut dgates = Array2::<f64>::zeros((steps * batch, 4 * hd));
        for t in (0..steps).rev() {
            let lo = t * batch;
            let c_prev = if t == 0 { cache.c0.view() } else { cache.c.slice(s![lo - batch..lo, ..]) };
            for b in 0..batch {
                let r = lo + b;
                for j in 0..hd {
                    let i = cache.gates[[r, j]];
                    let f = cache.gates[[r, hd + j]];
                    let g = cache.gates[[r, 2 * hd + j]];
                    let o = cache.gates[[r, 3 * hd + j]];
                    let tc = cache.c[[r, j]].tanh();
                    let dhv = dh[[b, j]];
                    let dcv = dc[[b, j]] + dhv * o * (1.0 - tc * tc);
                    dgates[[r, j]] = dcv * g * i * (1.0 - i);
                    dgates[[r, hd + j]] = dcv * c_prev[[b, j]] * f * (1.0 - f);
                    dgates[[r, 2 * hd + j]] = dcv * i * (1.0 - g * g);
                    dgates[[r, 3 * hd + j]] = dhv * tc * o * (1.0 - o);
                    dc[[b, j]] = dcv * f;
                }
            }
            let dg = dgates.slice(s![lo..lo + batch, ..]);
            let h_prev = if t == 0 { cache.h0.view() } else { cache.h.slice(s![lo - batch..lo, ..]) };
            grads[LSTM_WH] += &dg.t().dot(&h_prev);
            dh = dg.dot(&p[LSTM_WH]);
        }
        grads[LSTM_WX] = dgates.t().dot(&cache.a2);
        grads[LSTM_B] = dgates.sum_axis(Axis(0)).insert_axis(Axis(0));

        let dz2 = dgates.dot(&p[LSTM_WX]) * &cache.a2.mapv(|a| 1.0 - a * a);
        grads[FC2_W] = dz2.t().dot(&cache.a1);
        grads[FC2_B] = dz2.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dz1 = dz2.dot(&p[FC2_W]) * &cache.a1.mapv(|a| 1.0 - a * a);
        grads[FC1_W] = dz1.t().dot(&cache.x);
        grads[FC1_B] = dz1.sum_axis(Axis(0)).insert_axis(Axis(0));
        grads
    }
}

impl ForwardCache {
    fn last_h(&self) -> ArrayView2<'_, f64> {
        self.h.slice(s![(self.steps - 1) * self.batch.., ..])
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn tiny(kind: DuelingAggregator, seed: u64) -> QNet {
        let shape = NetShape { input: 4, dense: 6, hidden: 5, actions: 2 };
        QNet::new(shape, kind, &mut stream(seed, "net-test", 0))
    }

    fn inputs(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream(seed, "net-input", 0);
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn aggregator_forms() {
        assert_eq!(dueling_aggregate(3.0, &[0.5, 0.5], DuelingAggregator::MeanCentered), vec![3.0, 3.0]);
        assert_eq!(dueling_aggregate(0.0, &[1.0, -1.0], DuelingAggregator::MeanCentered), vec![1.0, -1.0]);
        assert_eq!(dueling_aggregate(1.0, &[2.0, -2.0], DuelingAggregator::Printed), vec![0.0, 2.0]);
        for v in [-4.0, 0.0, 9.0] {
            let q = dueling_aggregate(v, &[0.3, 0.1], DuelingAggregator::MeanCentered);
            assert!(q[0] > q[1]);
        }
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = QNet::zeros(NetShape { input: 3, dense: 4, hidden: 2, actions: 2 }, DuelingAggregator::MeanCentered);
        let (q, carry) = net.forward(inputs(6, 3, 1).view(), 3, &Carry::zeros(2, 2)).unwrap();
        assert!(q.iter().all(|&x| x == 0.0));
        assert!(carry.h.iter().chain(carry.c.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn wrong_width_is_rejected() {
        let net = tiny(DuelingAggregator::MeanCentered, 0);
        let err = net.forward(inputs(2, 3, 0).view(), 1, &Carry::zeros(2, 5)).unwrap_err();
        assert!(matches!(err, Error::WidthMismatch { expected: 4, got: 3 }));
    }

    #[test]
    fn split_sequence_matches_single_call() {
        let net = tiny(DuelingAggregator::MeanCentered, 2);
        let batch = 3;
        let x = inputs(7 * batch, 4, 3);
        let (q_full, c_full) = net.forward(x.view(), 7, &Carry::zeros(batch, 5)).unwrap();
        let (_, mid) = net.forward(x.slice(s![..3 * batch, ..]), 3, &Carry::zeros(batch, 5)).unwrap();
        let (q_split, c_split) = net.forward(x.slice(s![3 * batch.., ..]), 4, &mid).unwrap();
        for (a, b) in q_full.iter().zip(&q_split) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in c_full.h.iter().zip(&c_split.h) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_rows_are_independent() {
        let net = tiny(DuelingAggregator::Printed, 5);
        let x = inputs(4 * 2, 4, 6);
        let (q, _) = net.forward(x.view(), 4, &Carry::zeros(2, 5)).unwrap();
        let rows: Vec<usize> = (0..4).map(|t| 2 * t + 1).collect();
        let single = x.select(Axis(0), &rows);
        let (q1, _) = net.forward(single.view(), 4, &Carry::zeros(1, 5)).unwrap();
        assert!((q[[1, 0]] - q1[[0, 0]]).abs() < 1e-13);
        assert!((q[[1, 1]] - q1[[0, 1]]).abs() < 1e-13);
    }

    #[test]
    fn backward_matches_finite_differences() {
        for kind in [DuelingAggregator::MeanCentered, DuelingAggregator::Printed] {
            let mut net = tiny(kind, 7);
            let x = inputs(3 * 2, 4, 8);
            let carry = Carry {
                h: inputs(2, 5, 9) * 0.5,
                c: inputs(2, 5, 10) * 0.5,
            };
            let w = inputs(2, 2, 11);
            let loss = |n: &QNet| (n.forward(x.view(), 3, &carry).unwrap().0 * &w).sum();
            let cache = net.forward_train(x.view(), 3, &carry).unwrap();
            let grads = net.backward(&cache, &w);
            for blk in 0..COUNT {
                for idx in 0..net.params[blk].len() {
                    let orig = net.params[blk].as_slice().unwrap()[idx];
                    let eps = 1e-6;
                    net.params[blk].as_slice_mut().unwrap()[idx] = orig + eps;
                    let up = loss(&net);
                    net.params[blk].as_slice_mut().unwrap()[idx] = orig - eps;
                    let down = loss(&net);
                    net.params[blk].as_slice_mut().unwrap()[idx] = orig;
                    let fd = (up - down) / (2.0 * eps);
                    let an = grads[blk].as_slice().unwrap()[idx];
                    assert!((fd - an).abs() < 1e-7 + 1e-5 * fd.abs(), "{} [{idx}]: {an} vs {fd}", NAMES[blk]);
                }
            }
        }
    }
}
