use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::window::WindowSample;

/// Width of both hidden layers.
pub const HIDDEN_WIDTH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

/// One affine layer. `weights` has one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        Layer {
            weights: Array2::zeros((n_out, n_in)),
            bias: Array1::zeros(n_out),
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Parameter-shaped collection; also used for gradients and optimizer moments.
pub type Params = Vec<Layer>;

pub fn zeros_like(params: &[Layer]) -> Params {
    params
        .iter()
        .map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols()))
        .collect()
}

/// Feed-forward regression network: relu hidden layers, linear scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub layers: Params,
    pub activation: Activation,
    pub seed: u64,
}

/// The forecasting network: `d_in -> 128 -> 128 -> 1`.
pub fn init_mlp(d_in: usize, seed: u64) -> MlpModel {
    init_mlp_with_hidden(d_in, &[HIDDEN_WIDTH, HIDDEN_WIDTH], seed)
}

/// Same initialization with custom hidden widths (used by small test networks).
///
/// Weights are uniform in `±1/sqrt(fan_in)`, biases zero.
pub fn init_mlp_with_hidden(d_in: usize, hidden: &[usize], seed: u64) -> MlpModel {
    assert!(d_in >= 1, "network needs at least one input");
    let mut layer_dims = Vec::with_capacity(hidden.len() + 2);
    layer_dims.push(d_in);
    layer_dims.extend_from_slice(hidden);
    layer_dims.push(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            Layer {
                weights: Array2::from_shape_fn((fan_out, fan_in), |_| {
                    rng.random_range(-bound..bound)
                }),
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    MlpModel {
        layer_dims,
        layers,
        activation: Activation::Relu,
        seed,
    }
}

impl MlpModel {
    pub fn d_in(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Layer::n_params).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn check_dim(&self, got: usize) -> Result<(), ModelError> {
        if got != self.d_in() {
            return Err(ModelError::DimensionMismatch {
                expected: self.d_in(),
                got,
            });
        }
        Ok(())
    }

    /// Output for a single feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(features.len())?;
        let mut a = Array1::from(features.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&a) + &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        Ok(a[0])
    }

    /// Outputs for a batch, one row per sample.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, ModelError> {
        self.check_dim(x.ncols())?;
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        Ok(a.index_axis_move(Axis(1), 0))
    }

    /// Mean squared error over a batch of windows and its exact gradients.
    pub fn loss_and_gradients(&self, batch: &[WindowSample]) -> Result<(f64, Params), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let d = self.d_in();
        let mut x = Array2::zeros((batch.len(), d));
        for (mut row, w) in x.outer_iter_mut().zip(batch) {
            self.check_dim(w.features.len())?;
            row.assign(&ArrayView1::from(&w.features[..]));
        }
        let t = Array1::from_iter(batch.iter().map(|w| w.target));
        self.loss_and_gradients_matrix(x.view(), t.view())
    }

    /// Matrix form of [`MlpModel::loss_and_gradients`].
    pub fn loss_and_gradients_matrix(
        &self,
        x: ArrayView2<f64>,
        targets: ArrayView1<f64>,
    ) -> Result<(f64, Params), ModelError> {
        self.check_dim(x.ncols())?;
        let n = x.nrows();
        if n == 0 {
            return Err(ModelError::EmptyBatch);
        }
        if targets.len() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: targets.len(),
            });
        }
        let last = self.layers.len() - 1;

        // activations[0] = input, activations[l + 1] = output of layer l
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.weights.t());
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            activations.push(z);
        }

        let output = activations[last + 1].column(0);
        let residual = &output - &targets;
        let loss = residual.dot(&residual) / n as f64;

        let mut delta: Array2<f64> = (residual * (2.0 / n as f64)).insert_axis(Axis(1));
        let mut grads: Params = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let weights = delta.t().dot(&activations[i]);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&layer.weights);
                // relu'(z) is 1 where the stored activation is positive
                Zip::from(&mut back)
                    .and(&activations[i])
                    .for_each(|g, &a| {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    });
                delta = back;
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        Ok((loss, grads))
    }
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Plain-loop forward pass, independent of the ndarray path.
    fn oracle_forward(m: &MlpModel, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        for (i, layer) in m.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.weights.nrows()];
            for (r, out) in next.iter_mut().enumerate() {
                let mut acc = layer.bias[r];
                for (c, v) in a.iter().enumerate() {
                    acc += layer.weights[[r, c]] * v;
                }
                *out = if i + 1 < m.layers.len() { acc.max(0.0) } else { acc };
            }
            a = next;
        }
        a[0]
    }

    fn sample(features: Vec<f64>, target: f64) -> WindowSample {
        WindowSample {
            features,
            target,
            start_index: 0,
            target_index: 0,
            subject_id: "s".into(),
        }
    }

    #[test]
    fn dims_follow_inputs() {
        assert_eq!(init_mlp(48, 1).layer_dims, vec![48, 128, 128, 1]);
        let m = init_mlp(336, 1);
        assert_eq!(m.layer_dims, vec![336, 128, 128, 1]);
        assert_eq!(m.n_params(), 336 * 128 + 128 + 128 * 128 + 128 + 128 + 1);
        assert!(m.is_finite());
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(init_mlp(12, 42), init_mlp(12, 42));
        assert_ne!(init_mlp(12, 42), init_mlp(12, 43));
        let m = init_mlp(16, 3);
        for l in &m.layers {
            let bound = 1.0 / (l.weights.ncols() as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= bound));
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn zero_weights_return_output_bias() {
        let mut m = init_mlp(5, 0);
        for l in &mut m.layers {
            l.weights.fill(0.0);
        }
        m.layers[2].bias[0] = 0.7;
        assert_eq!(m.forward(&[1.0, -2.0, 3.0, 9.0, 0.5]).unwrap(), 0.7);
    }

    #[test]
    fn negative_preactivations_are_clamped() {
        let mut m = init_mlp_with_hidden(1, &[4, 4], 0);
        m.layers[0].weights.fill(-1.0);
        m.layers[0].bias.fill(-0.5);
        m.layers[1].weights.fill(1.0);
        m.layers[1].bias.fill(-0.1);
        m.layers[2].weights.fill(3.0);
        m.layers[2].bias[0] = 0.25;
        assert_eq!(m.forward(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn forward_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let d = rng.random_range(1..40);
            let mut m = init_mlp(d, trial);
            for l in &mut m.layers {
                l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
            }
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y = m.forward(&x).unwrap();
            assert!((y - oracle_forward(&m, &x)).abs() < 1e-12);
            let batch = Array2::from_shape_vec((1, d), x).unwrap();
            assert!((m.forward_batch(batch.view()).unwrap()[0] - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = init_mlp(4, 0);
        assert!(matches!(
            m.forward(&[1.0; 3]),
            Err(ModelError::DimensionMismatch { expected: 4, got: 3 })
        ));
        assert!(matches!(
            m.loss_and_gradients(&[sample(vec![0.0; 5], 1.0)]),
            Err(ModelError::DimensionMismatch { .. })
        ));
        assert!(matches!(m.loss_and_gradients(&[]), Err(ModelError::EmptyBatch)));
    }

    #[test]
    fn stationary_point() {
        let mut m = init_mlp(3, 0);
        for l in &mut m.layers {
            l.weights.fill(0.0);
        }
        let batch = vec![sample(vec![1.0, 2.0, 3.0], 0.0), sample(vec![-1.0, 0.0, 4.0], 0.0)];
        let (loss, grads) = m.loss_and_gradients(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|&v| v == 0.0)));
    }

    #[test]
    fn output_bias_gradient_on_linear_path() {
        let mut m = init_mlp_with_hidden(2, &[3, 3], 0);
        for l in &mut m.layers {
            l.weights.fill(0.5);
            l.bias.fill(0.1);
        }
        let w = sample(vec![1.0, 2.0], 0.3);
        let y = m.forward(&w.features).unwrap();
        let (_, grads) = m.loss_and_gradients(std::slice::from_ref(&w)).unwrap();
        assert!((grads[2].bias[0] - 2.0 * (y - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn small_networks_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..10 {
            let d = rng.random_range(1..6);
            let hidden = [rng.random_range(2..7), rng.random_range(2..7)];
            let mut m = init_mlp_with_hidden(d, &hidden, trial);
            for l in &mut m.layers {
                l.bias.mapv_inplace(|_| rng.random_range(-0.3..0.3));
            }
            let batch: Vec<_> = (0..rng.random_range(1..6))
                .map(|_| {
                    sample(
                        (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect();
            let (_, grads) = m.loss_and_gradients(&batch).unwrap();
            let h = 1e-5;
            let loss_at = |m: &MlpModel| m.loss_and_gradients(&batch).unwrap().0;
            for li in 0..m.layers.len() {
                for idx in 0..m.layers[li].weights.len() {
                    let (r, c) = (idx / m.layers[li].weights.ncols(), idx % m.layers[li].weights.ncols());
                    let mut p = m.clone();
                    p.layers[li].weights[[r, c]] += h;
                    let up = loss_at(&p);
                    p.layers[li].weights[[r, c]] -= 2.0 * h;
                    let down = loss_at(&p);
                    let fd = (up - down) / (2.0 * h);
                    let an = grads[li].weights[[r, c]];
                    assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-6));
                }
            }
        }
    }
}
