use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::config::ModelConfig;
use crate::{Error, Result, Rng, Tensor};

/// A named parameter: an n-d array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Param {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Param { dims, data })
    }

    pub fn filled(dims: Vec<usize>, value: f64) -> Self {
        let n = dims.iter().product();
        Param { dims, data: vec![value; n] }
    }

    /// Views a rank-4 parameter as a tensor.
    pub fn to_tensor(&self) -> Result<Tensor> {
        match self.dims[..] {
            [a, b, c, d] => Tensor::from_vec((a, b, c, d), self.data.clone()),
            _ => Err(Error::ShapeMismatch(format!("expected rank 4, got dims {:?}", self.dims))),
        }
    }
}

/// What a parameter slot holds; drives initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Role {
    ConvWeight,
    Zero,
    One,
}

/// Model parameters keyed by layer path, e.g. `enc/0/conv1/weight`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightStore {
    params: BTreeMap<String, Param>,
}

impl WeightStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, param: Param) {
        self.params.insert(path.into(), param);
    }

    pub fn get(&self, path: &str) -> Result<&Param> {
        self.params.get(path).ok_or_else(|| Error::MissingParameter(path.into()))
    }

    pub fn get_mut(&mut self, path: &str) -> Option<&mut Param> {
        self.params.get_mut(path)
    }

    /// Entries in sorted path order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Param)> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn parameter_count(&self) -> usize {
        self.params.values().map(|p| p.data.len()).sum()
    }

    /// Checks that every parameter `config` needs is present with the
    /// expected dims.
    pub fn check(&self, config: &ModelConfig) -> Result<()> {
        for (path, dims, _) in layout(config) {
            let p = self.get(&path)?;
            if p.dims != dims {
                return Err(Error::ShapeMismatch(format!(
                    "`{path}` has dims {:?}, config expects {dims:?}",
                    p.dims
                )));
            }
        }
        Ok(())
    }
}

fn conv_slots(out: &mut Vec<(String, Vec<usize>, Role)>, prefix: &str, oc: usize, ic: usize, k: usize) {
    out.push((format!("{prefix}/weight"), vec![oc, ic, k, k], Role::ConvWeight));
    out.push((format!("{prefix}/bias"), vec![oc], Role::Zero));
}

fn norm_slots(out: &mut Vec<(String, Vec<usize>, Role)>, prefix: &str, c: usize) {
    out.push((format!("{prefix}/gamma"), vec![c], Role::One));
    out.push((format!("{prefix}/beta"), vec![c], Role::Zero));
    out.push((format!("{prefix}/running_mean"), vec![c], Role::Zero));
    out.push((format!("{prefix}/running_var"), vec![c], Role::One));
}

fn block_slots(out: &mut Vec<(String, Vec<usize>, Role)>, prefix: &str, ic: usize, oc: usize) {
    conv_slots(out, &format!("{prefix}/conv1"), oc, ic, 3);
    norm_slots(out, &format!("{prefix}/norm1"), oc);
    conv_slots(out, &format!("{prefix}/conv2"), oc, oc, 3);
    norm_slots(out, &format!("{prefix}/norm2"), oc);
}

/// Every parameter of `config` in network order: `(path, dims, role)`.
pub(crate) fn layout(config: &ModelConfig) -> Vec<(String, Vec<usize>, Role)> {
    let mut out = Vec::new();
    for s in 0..config.scales {
        let ic = if s == 0 { config.in_channels } else { config.channels_at(s - 1) };
        block_slots(&mut out, &format!("enc/{s}"), ic, config.channels_at(s));
    }
    block_slots(&mut out, "mid", config.channels_at(config.scales - 1), config.channels_at(config.scales));
    for s in (0..config.scales).rev() {
        let c = config.channels_at(s);
        conv_slots(&mut out, &format!("dec/{s}/up"), c, 2 * c, 3);
        block_slots(&mut out, &format!("dec/{s}"), 2 * c, c);
    }
    conv_slots(&mut out, "head", config.out_channels, config.base_channels, 1);
    out
}

/// Seeded initialization: convolution weights ~ N(0, 2 / fan_in), biases
/// and shifts 0, scales 1, running statistics (0, 1).
pub fn init(config: &ModelConfig, rng: &mut Rng) -> Result<WeightStore> {
    config.validate()?;
    let mut store = WeightStore::new();
    for (path, dims, role) in layout(config) {
        let param = match role {
            Role::ConvWeight => {
                let fan_in = (dims[1] * dims[2] * dims[3]) as f64;
                let std = libm::sqrt(2.0 / fan_in);
                let n = dims.iter().product();
                Param { data: (0..n).map(|_| std * rng.normal()).collect(), dims }
            }
            Role::Zero => Param::filled(dims, 0.0),
            Role::One => Param::filled(dims, 1.0),
        };
        store.insert(path, param);
    }
    Ok(store)
}
