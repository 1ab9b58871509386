//! JSON checkpoint schema.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "layers": [
//!     {"kind": "tvscm", "n": 784, "a": 0.01, "b": -0.02, "bias": null, "activation": "relu"},
//!     {"kind": "dense", "m": 10, "n": 784, "weights": [[...], ...], "bias": [...], "activation": "identity"}
//!   ],
//!   "loss": {"kind": "softmax_cross_entropy", "classes": 10}
//! }
//! ```
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! save/load cycle reproduces every parameter bit for bit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dense::DenseLayer;
use super::loss::Activation;
use super::model::{Block, Layer, Model};
use super::tvscm::TvscmLayer;
use crate::linalg::Matrix;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const LOSS_KIND: &str = "softmax_cross_entropy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub layers: Vec<LayerRecord>,
    pub loss: LossRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerRecord {
    Tvscm {
        n: usize,
        a: f64,
        b: f64,
        bias: Option<Vec<f64>>,
        activation: Activation,
    },
    Dense {
        m: usize,
        n: usize,
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        activation: Activation,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub kind: String,
    pub classes: usize,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let layers = model
            .blocks()
            .iter()
            .map(|block| match &block.layer {
                Layer::Tvscm(l) => LayerRecord::Tvscm {
                    n: l.n(),
                    a: l.params().a(),
                    b: l.params().b(),
                    bias: l.bias().map(<[f64]>::to_vec),
                    activation: block.activation,
                },
                Layer::Dense(l) => LayerRecord::Dense {
                    m: l.outputs(),
                    n: l.inputs(),
                    weights: l.weights().iter_rows().map(<[f64]>::to_vec).collect(),
                    bias: l.bias().to_vec(),
                    activation: block.activation,
                },
            })
            .collect();
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            layers,
            loss: LossRecord {
                kind: LOSS_KIND.to_string(),
                classes: model.classes(),
            },
        }
    }

    pub fn into_model(self) -> Result<Model> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.loss.kind != LOSS_KIND {
            return Err(Error::Checkpoint(format!("unknown loss kind `{}`", self.loss.kind)));
        }
        let mut blocks = Vec::with_capacity(self.layers.len());
        for record in self.layers {
            let block = match record {
                LayerRecord::Tvscm {
                    n,
                    a,
                    b,
                    bias,
                    activation,
                } => {
                    let mut layer = TvscmLayer::new(a, b, n, bias.is_some())?;
                    layer.set_bias(bias)?;
                    Block {
                        layer: Layer::Tvscm(layer),
                        activation,
                    }
                }
                LayerRecord::Dense {
                    m,
                    n,
                    weights,
                    bias,
                    activation,
                } => {
                    if weights.len() != m {
                        return Err(Error::Checkpoint(format!(
                            "dense layer declares {m} rows but stores {}",
                            weights.len()
                        )));
                    }
                    let w = Matrix::from_rows(&weights)?;
                    if m > 0 && w.cols() != n {
                        return Err(Error::Checkpoint(format!(
                            "dense layer declares {n} columns but stores {}",
                            w.cols()
                        )));
                    }
                    Block {
                        layer: Layer::Dense(DenseLayer::new(w, bias)?),
                        activation,
                    }
                }
            };
            blocks.push(block);
        }
        Model::new(blocks, self.loss.classes)
    }

    pub fn to_json(&self) -> String {
        // Serialization of plain data with string keys cannot fail.
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

impl Model {
    pub fn to_checkpoint_json(&self) -> String {
        Checkpoint::from_model(self).to_json()
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Model> {
        Checkpoint::from_json(text)?.into_model()
    }
}
