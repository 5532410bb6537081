//! The meaning-function network: 3 inputs -> hidden ReLU layer -> one output
//! per word, with either sigmoid or linear output activation.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rl::tape::{NodeId, Tape};

pub const INPUT_DIM: usize = 3;

/// Weights of the two-layer perceptron. `w1` is [hidden x 3], `w2` is
/// [vocab x hidden]; a forward pass maps a batch of color coordinates
/// [n x 3] to per-word scores [n x vocab].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub sigmoid_output: bool,
}

/// Tape nodes holding the (transposed) parameter leaves of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct MlpHandles {
    pub w1t: NodeId,
    pub b1: NodeId,
    pub w2t: NodeId,
    pub b2: NodeId,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl MlpParams {
    /// All entries drawn independently from U[-1, 1]. The spread matters:
    /// much tighter and the initial policies of both families are too flat
    /// to break the sender/listener symmetry; much wider and the sigmoid
    /// meaning functions saturate and stop learning.
    pub fn init<R: Rng>(vocab: usize, hidden: usize, sigmoid_output: bool, rng: &mut R) -> Self {
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        MlpParams {
            w1: Array2::from_shape_vec((hidden, INPUT_DIM), draw(hidden * INPUT_DIM)).unwrap(),
            b1: Array1::from_vec(draw(hidden)),
            w2: Array2::from_shape_vec((vocab, hidden), draw(vocab * hidden)).unwrap(),
            b2: Array1::from_vec(draw(vocab)),
            sigmoid_output,
        }
    }

    pub fn vocab(&self) -> usize {
        self.w2.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Record the forward pass on `tape` for inputs `x` [n x 3] and return
    /// the output node [n x vocab] plus the parameter leaves.
    pub fn forward_tape(&self, tape: &mut Tape, x: &Array2<f64>) -> (NodeId, MlpHandles) {
        assert_eq!(x.ncols(), INPUT_DIM);
        let nx = tape.leaf(x.clone());
        let w1t = tape.leaf(self.w1.t().to_owned());
        let b1 = tape.leaf(self.b1.clone().insert_axis(ndarray::Axis(0)));
        let w2t = tape.leaf(self.w2.t().to_owned());
        let b2 = tape.leaf(self.b2.clone().insert_axis(ndarray::Axis(0)));
        let z1 = tape.matmul(nx, w1t);
        let z1b = tape.add_row(z1, b1);
        let h = tape.relu(z1b);
        let z2 = tape.matmul(h, w2t);
        let scores = tape.add_row(z2, b2);
        let out = if self.sigmoid_output {
            tape.sigmoid(scores)
        } else {
            scores
        };
        (out, MlpHandles { w1t, b1, w2t, b2 })
    }

    /// Plain forward pass without recording, for evaluation over many inputs.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.ncols(), INPUT_DIM);
        let mut h = x.dot(&self.w1.t());
        h += &self.b1;
        h.mapv_inplace(|a| a.max(0.0));
        let mut out = h.dot(&self.w2.t());
        out += &self.b2;
        if self.sigmoid_output {
            out.mapv_inplace(|a| {
                if a >= 0.0 {
                    1.0 / (1.0 + (-a).exp())
                } else {
                    let e = a.exp();
                    e / (1.0 + e)
                }
            });
        }
        out
    }

    /// Add `scale * grads` to the parameters in place.
    pub fn add_scaled(&mut self, grads: &MlpGrads, scale: f64) {
        self.w1.scaled_add(scale, &grads.w1);
        self.b1.scaled_add(scale, &grads.b1);
        self.w2.scaled_add(scale, &grads.w2);
        self.b2.scaled_add(scale, &grads.b2);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CheckpointWire::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: CheckpointWire = serde_json::from_str(text)?;
        wire.into_params()
    }
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            w1: Array2::zeros(params.w1.dim()),
            b1: Array1::zeros(params.b1.len()),
            w2: Array2::zeros(params.w2.dim()),
            b2: Array1::zeros(params.b2.len()),
        }
    }

    /// Read parameter gradients off a finished backward pass, un-transposing
    /// the weight leaves, and add `scale` times them into the accumulator.
    pub fn accumulate_scaled(
        &mut self,
        grads: &crate::rl::tape::Gradients,
        handles: &MlpHandles,
        scale: f64,
    ) {
        let gw1t = grads.wrt(handles.w1t);
        if !gw1t.is_empty() {
            self.w1.scaled_add(scale, &gw1t.t());
        }
        let gb1 = grads.wrt(handles.b1);
        if !gb1.is_empty() {
            self.b1.scaled_add(scale, &gb1.row(0));
        }
        let gw2t = grads.wrt(handles.w2t);
        if !gw2t.is_empty() {
            self.w2.scaled_add(scale, &gw2t.t());
        }
        let gb2 = grads.wrt(handles.b2);
        if !gb2.is_empty() {
            self.b2.scaled_add(scale, &gb2.row(0));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().all(|v| v.is_finite())
            && self.b1.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.b2.iter().all(|v| v.is_finite())
    }
}

/// Flat JSON form of the parameters so checkpoints stay readable and do not
/// depend on array-library serialization details.
#[derive(Debug, Serialize, Deserialize)]
struct CheckpointWire {
    vocab: usize,
    hidden: usize,
    sigmoid_output: bool,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl From<&MlpParams> for CheckpointWire {
    fn from(p: &MlpParams) -> Self {
        CheckpointWire {
            vocab: p.vocab(),
            hidden: p.hidden(),
            sigmoid_output: p.sigmoid_output,
            w1: p.w1.iter().cloned().collect(),
            b1: p.b1.to_vec(),
            w2: p.w2.iter().cloned().collect(),
            b2: p.b2.to_vec(),
        }
    }
}

impl CheckpointWire {
    fn into_params(self) -> Result<MlpParams> {
        let w1 = Array2::from_shape_vec((self.hidden, INPUT_DIM), self.w1)
            .map_err(|e| Error::InvalidConfig(format!("checkpoint w1 shape: {e}")))?;
        let w2 = Array2::from_shape_vec((self.vocab, self.hidden), self.w2)
            .map_err(|e| Error::InvalidConfig(format!("checkpoint w2 shape: {e}")))?;
        if self.b1.len() != self.hidden || self.b2.len() != self.vocab {
            return Err(Error::InvalidConfig("checkpoint bias length".into()));
        }
        Ok(MlpParams {
            w1,
            b1: Array1::from_vec(self.b1),
            w2,
            b2: Array1::from_vec(self.b2),
            sigmoid_output: self.sigmoid_output,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_params(sigmoid: bool) -> MlpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        MlpParams::init(4, 6, sigmoid, &mut rng)
    }

    #[test]
    fn init_is_within_unit_range_and_deterministic() {
        let a = small_params(true);
        let b = small_params(true);
        assert_eq!(a, b);
        assert!(a.w1.iter().all(|&v| (-1.0..1.0).contains(&v)));
        assert!(a.w2.iter().all(|&v| (-1.0..1.0).contains(&v)));
        assert_eq!(a.n_params(), 6 * 3 + 6 + 4 * 6 + 4);
    }

    #[test]
    fn tape_forward_matches_plain_forward() {
        let params = small_params(true);
        let x = ndarray::array![[0.1, -0.4, 0.9], [0.0, 0.2, -0.7], [0.5, 0.5, 0.5]];
        let mut tape = Tape::new();
        let (out, _) = params.forward_tape(&mut tape, &x);
        let plain = params.forward(&x);
        let dev = tape
            .value(out)
            .iter()
            .zip(plain.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert_eq!(dev, 0.0);
        assert!(plain.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn linear_output_skips_sigmoid() {
        let params = small_params(false);
        let x = ndarray::array![[2.0, 2.0, 2.0]];
        let out = params.forward(&x);
        assert!(out.iter().any(|&v| v <= 0.0 || v >= 1.0));
    }

    #[test]
    fn every_parameter_gradient_matches_central_difference() {
        let params = small_params(true);
        let x = ndarray::array![[0.3, -0.2, 0.8], [-0.5, 0.1, 0.4]];
        let mut tape = Tape::new();
        let (out, handles) = params.forward_tape(&mut tape, &x);
        let root = tape.log_entry(out, 1, 2);
        let grads = tape.backward(root).unwrap();
        let mut acc = MlpGrads::zeros_like(&params);
        acc.accumulate_scaled(&grads, &handles, 1.0);

        let h = 1e-5;
        let eval = |p: &MlpParams| p.forward(&x)[(1, 2)].ln();
        let check = |get: &dyn Fn(&MlpParams) -> f64, setter: &dyn Fn(&mut MlpParams, f64), analytic: f64| {
            let mut plus = params.clone();
            setter(&mut plus, get(&params) + h);
            let mut minus = params.clone();
            setter(&mut minus, get(&params) - h);
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let denom = fd.abs().max(analytic.abs()).max(1e-8);
            assert!(
                ((fd - analytic) / denom).abs() < 1e-4,
                "fd {fd} vs analytic {analytic}"
            );
        };
        for i in 0..params.w1.nrows() {
            for j in 0..params.w1.ncols() {
                check(
                    &|p| p.w1[(i, j)],
                    &|p, v| p.w1[(i, j)] = v,
                    acc.w1[(i, j)],
                );
            }
        }
        for i in 0..params.b1.len() {
            check(&|p| p.b1[i], &|p, v| p.b1[i] = v, acc.b1[i]);
        }
        for i in 0..params.w2.nrows() {
            for j in 0..params.w2.ncols() {
                check(
                    &|p| p.w2[(i, j)],
                    &|p, v| p.w2[(i, j)] = v,
                    acc.w2[(i, j)],
                );
            }
        }
        for i in 0..params.b2.len() {
            check(&|p| p.b2[i], &|p, v| p.b2[i] = v, acc.b2[i]);
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let params = small_params(true);
        let restored = MlpParams::from_json(&params.to_json()).unwrap();
        assert_eq!(params, restored);
    }

    #[test]
    fn add_scaled_moves_parameters() {
        let mut params = small_params(true);
        let before = params.w1[(0, 0)];
        let mut grads = MlpGrads::zeros_like(&params);
        grads.w1[(0, 0)] = 2.0;
        params.add_scaled(&grads, 0.5);
        assert!((params.w1[(0, 0)] - before - 1.0).abs() < 1e-15);
    }
}
