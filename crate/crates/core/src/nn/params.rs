use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NnError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for every parameter plus the shared step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

/// One dense layer `y = W x + b` with `W` of shape `[outputs, inputs]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
}

impl LayerSpec {
    pub fn new(name: &str, inputs: usize, outputs: usize) -> Self {
        LayerSpec {
            name: name.to_string(),
            inputs,
            outputs,
        }
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }
}

/// Named parameters with gradients and optimizer state, kept in insertion
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    index: BTreeMap<String, ParamId>,
    values: Vec<Tensor>,
    grads: Vec<Tensor>,
    adam: AdamState,
    has_grad: bool,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new(AdamConfig::default())
    }
}

impl ParamStore {
    pub fn new(config: AdamConfig) -> Self {
        ParamStore {
            names: Vec::new(),
            index: BTreeMap::new(),
            values: Vec::new(),
            grads: Vec::new(),
            adam: AdamState {
                config,
                t: 0,
                m: Vec::new(),
                v: Vec::new(),
            },
            has_grad: false,
        }
    }

    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<ParamId, NnError> {
        if self.index.contains_key(name) {
            return Err(NnError::DuplicateParam(name.to_string()));
        }
        let id = ParamId(self.values.len());
        let shape = value.shape().to_vec();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.values.push(value);
        self.grads.push(Tensor::zeros(shape.clone()));
        self.adam.m.push(Tensor::zeros(shape.clone()));
        self.adam.v.push(Tensor::zeros(shape));
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<ParamId, NnError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| NnError::UnknownParam(name.to_string()))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, NnError> {
        Ok(self.value(self.id(name)?))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, NnError> {
        let id = self.id(name)?;
        Ok(self.value_mut(id))
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub(crate) fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        self.has_grad = true;
        &mut self.grads[id.0]
    }

    pub(crate) fn mark_grad(&mut self) {
        self.has_grad = true;
    }

    pub fn has_grad(&self) -> bool {
        self.has_grad
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| g.fill(0.0));
        self.has_grad = false;
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn set_adam_config(&mut self, config: AdamConfig) {
        self.adam.config = config;
    }

    pub(crate) fn set_step(&mut self, t: u64) {
        self.adam.t = t;
    }

    /// One Adam update of every parameter from the accumulated gradients,
    /// which are then cleared.
    pub fn adam_step(&mut self) -> Result<(), NnError> {
        if !self.has_grad {
            return Err(NnError::MissingGradient);
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.adam.config;
        self.adam.t += 1;
        let t = self.adam.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for i in 0..self.values.len() {
            let g = self.grads[i].data();
            let m = self.adam.m[i].data_mut();
            let v = self.adam.v[i].data_mut();
            let theta = self.values[i].data_mut();
            for k in 0..g.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                theta[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        self.zero_grad();
        Ok(())
    }

    /// All parameter values flattened in insertion order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.values.iter().flat_map(|t| t.data().iter().copied()).collect()
    }
}

/// Glorot-uniform weights and zero biases for each layer, drawn from one
/// stream seeded by `seed` in layer order.
pub fn init_params(spec: &[LayerSpec], seed: u64) -> Result<ParamStore, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::default();
    for layer in spec {
        if layer.inputs == 0 || layer.outputs == 0 {
            return Err(NnError::ShapeMismatch {
                op: "init",
                expected: vec![1, 1],
                found: vec![layer.outputs, layer.inputs],
            });
        }
        let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
        let w: Vec<f64> = (0..layer.inputs * layer.outputs)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        store.insert(&layer.weight_name(), Tensor::new(vec![layer.outputs, layer.inputs], w)?)?;
        store.insert(&layer.bias_name(), Tensor::zeros(vec![layer.outputs]))?;
    }
    Ok(store)
}
