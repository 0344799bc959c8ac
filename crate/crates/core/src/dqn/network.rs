use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Action, AgentState};

pub const QNET_FORMAT_VERSION: u32 = 1;
pub const STATE_DIM: usize = 4;
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Offset of the row-major `outputs x inputs` weight block.
    w: usize,
    /// Offset of the bias vector.
    b: usize,
}

/// Fully connected Q-value approximator: ReLU hidden layers, linear output.
///
/// All parameters live in one flat vector so optimizers and finite-difference
/// checks can treat them uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    format_version: u32,
    sizes: Vec<usize>,
    pub l1: f64,
    pub l2: f64,
    params: Vec<f64>,
    #[serde(skip)]
    layers: Vec<Layer>,
}

/// One regression sample: push `Q(state)[action]` toward `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: [f64; STATE_DIM],
    pub action: Action,
    pub target: f64,
}

fn layout(sizes: &[usize]) -> (Vec<Layer>, usize) {
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    let mut off = 0;
    for w in sizes.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        layers.push(Layer {
            inputs,
            outputs,
            w: off,
            b: off + inputs * outputs,
        });
        off += inputs * outputs + outputs;
    }
    (layers, off)
}

impl QNetwork {
    /// `4 -> 128 -> 128 -> 2`.
    pub const DEFAULT_HIDDEN: [usize; 2] = [128, 128];

    fn check_sizes(hidden: &[usize]) -> Result<Vec<usize>> {
        if hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        let mut sizes = vec![STATE_DIM];
        sizes.extend_from_slice(hidden);
        sizes.push(ACTION_DIM);
        Ok(sizes)
    }

    /// All-zero parameters.
    pub fn zeros(hidden: &[usize], l1: f64, l2: f64) -> Result<Self> {
        let sizes = Self::check_sizes(hidden)?;
        let (layers, n) = layout(&sizes);
        Ok(Self {
            format_version: QNET_FORMAT_VERSION,
            sizes,
            l1,
            l2,
            params: vec![0.0; n],
            layers,
        })
    }

    /// He-uniform weights on ReLU layers, Glorot-uniform on the output,
    /// zero biases.
    pub fn random<R: Rng>(hidden: &[usize], l1: f64, l2: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(hidden, l1, l2)?;
        let n_layers = net.layers.len();
        for (k, layer) in net.layers.clone().into_iter().enumerate() {
            let limit = if k + 1 == n_layers {
                (6.0 / (layer.inputs + layer.outputs) as f64).sqrt()
            } else {
                (6.0 / layer.inputs as f64).sqrt()
            };
            let dist = Uniform::new(-limit, limit).expect("valid bounds");
            for p in &mut net.params[layer.w..layer.b] {
                *p = dist.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Sets one weight; used to hand-build small networks.
    pub fn set_weight(&mut self, layer: usize, output: usize, input: usize, value: f64) {
        let l = self.layers[layer];
        self.params[l.w + output * l.inputs + input] = value;
    }

    pub fn set_bias(&mut self, layer: usize, output: usize, value: f64) {
        let l = self.layers[layer];
        self.params[l.b + output] = value;
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// `(Q(s, skip), Q(s, query))`, rejecting non-finite parameters.
    pub fn forward(&self, s: &AgentState) -> Result<[f64; 2]> {
        if !self.all_finite() {
            return Err(Error::CorruptedModel("Q-network has non-finite parameters".into()));
        }
        let q = self.q_values(&s.as_array());
        if !(q[0].is_finite() && q[1].is_finite()) {
            return Err(Error::CorruptedModel("Q-network produced non-finite output".into()));
        }
        Ok(q)
    }

    /// Forward pass without parameter validation.
    pub fn q_values(&self, x: &[f64; STATE_DIM]) -> [f64; 2] {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = self.params[l.b..l.b + l.outputs].to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &self.params[l.w + o * l.inputs..l.w + (o + 1) * l.inputs];
                *zo += row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>();
            }
            if k != last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        [a[0], a[1]]
    }

    fn regularization(&self) -> f64 {
        let hidden = &self.layers[..self.layers.len() - 1];
        hidden
            .iter()
            .flat_map(|l| &self.params[l.w..l.b])
            .map(|w| self.l1 * w.abs() + self.l2 * w * w)
            .sum()
    }

    /// Mean squared TD error over the batch plus l1/l2 penalties on the
    /// hidden-layer kernels.
    pub fn loss(&self, batch: &[Sample]) -> f64 {
        let mse: f64 = batch
            .iter()
            .map(|s| {
                let e = self.q_values(&s.state)[s.action.index()] - s.target;
                e * e
            })
            .sum::<f64>()
            / batch.len() as f64;
        mse + self.regularization()
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, batch: &[Sample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let n_layers = self.layers.len();
        let scale = 2.0 / batch.len() as f64;
        let mut mse = 0.0;

        // activations[k] is the input of layer k; pre[k] its pre-activation
        let mut activations: Vec<Vec<f64>> = vec![Vec::new(); n_layers + 1];
        let mut pre: Vec<Vec<f64>> = vec![Vec::new(); n_layers];

        for sample in batch {
            activations[0].clear();
            activations[0].extend_from_slice(&sample.state);
            for (k, l) in self.layers.iter().enumerate() {
                let mut z = self.params[l.b..l.b + l.outputs].to_vec();
                for (o, zo) in z.iter_mut().enumerate() {
                    let row = &self.params[l.w + o * l.inputs..l.w + (o + 1) * l.inputs];
                    *zo += row.iter().zip(&activations[k]).map(|(w, x)| w * x).sum::<f64>();
                }
                let a: Vec<f64> = if k + 1 == n_layers {
                    z.clone()
                } else {
                    z.iter().map(|v| v.max(0.0)).collect()
                };
                pre[k] = z;
                activations[k + 1] = a;
            }

            let q = &activations[n_layers];
            let err = q[sample.action.index()] - sample.target;
            mse += err * err;

            let mut delta = vec![0.0; ACTION_DIM];
            delta[sample.action.index()] = scale * err;
            for k in (0..n_layers).rev() {
                let l = self.layers[k];
                let input = &activations[k];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grad[l.b + o] += d;
                    let g = &mut grad[l.w + o * l.inputs..l.w + (o + 1) * l.inputs];
                    g.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
                }
                if k == 0 {
                    break;
                }
                let mut prev = vec![0.0; l.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &self.params[l.w + o * l.inputs..l.w + (o + 1) * l.inputs];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
                }
                for (p, z) in prev.iter_mut().zip(&pre[k - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }

        for l in &self.layers[..n_layers - 1] {
            for i in l.w..l.b {
                let w = self.params[i];
                grad[i] += self.l1 * w.signum() * (w != 0.0) as u8 as f64 + 2.0 * self.l2 * w;
            }
        }
        (mse / batch.len() as f64 + self.regularization(), grad)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                what: "agent checkpoint",
                path: path.to_path_buf(),
                producer: "train-agent",
            });
        }
        let mut net: Self = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if net.format_version != QNET_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "agent",
                found: net.format_version,
                expected: QNET_FORMAT_VERSION,
            });
        }
        if net.sizes.len() < 2 || net.sizes[0] != STATE_DIM || net.sizes[net.sizes.len() - 1] != ACTION_DIM {
            return Err(Error::CorruptedModel(format!("unexpected layer sizes {:?}", net.sizes)));
        }
        let (layers, n) = layout(&net.sizes);
        if n != net.params.len() {
            return Err(Error::CorruptedModel(format!(
                "expected {n} parameters for sizes {:?}, found {}",
                net.sizes,
                net.params.len()
            )));
        }
        net.layers = layers;
        Ok(net)
    }
}
