//! The closed set of experiment topologies.
//!
//! The dense baselines and TVSCM variants are the unique shapes whose
//! trainable-parameter counts equal the published figures:
//!
//! | topology     | layers                                   | parameters |
//! |--------------|------------------------------------------|-----------:|
//! | MNIST dense  | 784→784 dense + ReLU, 784→10 dense       |    623,290 |
//! | MNIST TVSCM  | TVSCM(784) no bias + ReLU, 784→10 dense  |      7,852 |
//! | ECG dense    | 187→128 dense + ReLU, 128→5 dense        |     24,709 |
//! | ECG TVSCM    | TVSCM(187) no bias + ReLU, 187→5 dense   |        942 |
//!
//! The classifier head stays dense because a circulant layer is square.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ECG_CLASSES, ECG_DIM, MNIST_CLASSES, MNIST_DIM};
use crate::nn::Activation;

/// Shape of one layer, before parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Tvscm {
        n: usize,
        use_bias: bool,
        activation: Activation,
    },
    Dense {
        inputs: usize,
        outputs: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Tvscm { activation, .. } | LayerSpec::Dense { activation, .. } => activation,
        }
    }

    pub fn parameter_count(&self) -> usize {
        match *self {
            LayerSpec::Tvscm { n, use_bias, .. } => 2 + if use_bias { n } else { 0 },
            LayerSpec::Dense {
                inputs, outputs, ..
            } => inputs * outputs + outputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSkeleton {
    pub layers: Vec<LayerSpec>,
    pub classes: usize,
}

impl ModelSkeleton {
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::parameter_count).sum()
    }
}

/// Layer family requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Dense,
    Tvscm,
}

impl FromStr for ArchKind {
    type Err = UnknownArch;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense" => Ok(ArchKind::Dense),
            "tvscm" => Ok(ArchKind::Tvscm),
            _ => Err(UnknownArch),
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArchKind::Dense => "dense",
            ArchKind::Tvscm => "tvscm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownArch;

impl fmt::Display for UnknownArch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown architecture (expected `dense` or `tvscm`)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    MnistDense,
    MnistTvscm,
    EcgDense,
    EcgTvscm,
    /// `dim → dim` dense + ReLU, then `dim → classes`.
    SyntheticDense { dim: usize, classes: usize },
    /// TVSCM(`dim`) + ReLU, then `dim → classes`.
    SyntheticTvscm { dim: usize, classes: usize },
}

pub const ECG_DENSE_HIDDEN: usize = 128;

fn dense(inputs: usize, outputs: usize, activation: Activation) -> LayerSpec {
    LayerSpec::Dense {
        inputs,
        outputs,
        activation,
    }
}

fn tvscm(n: usize) -> LayerSpec {
    LayerSpec::Tvscm {
        n,
        use_bias: false,
        activation: Activation::Relu,
    }
}

impl Topology {
    pub fn for_dataset_kind(kind: ArchKind, dataset: DatasetKind) -> Topology {
        match (dataset, kind) {
            (DatasetKind::Mnist, ArchKind::Dense) => Topology::MnistDense,
            (DatasetKind::Mnist, ArchKind::Tvscm) => Topology::MnistTvscm,
            (DatasetKind::Ecg, ArchKind::Dense) => Topology::EcgDense,
            (DatasetKind::Ecg, ArchKind::Tvscm) => Topology::EcgTvscm,
            (DatasetKind::Synthetic { dim, classes }, ArchKind::Dense) => {
                Topology::SyntheticDense { dim, classes }
            }
            (DatasetKind::Synthetic { dim, classes }, ArchKind::Tvscm) => {
                Topology::SyntheticTvscm { dim, classes }
            }
        }
    }

    pub fn skeleton(&self) -> ModelSkeleton {
        use Activation::{Identity, Relu};
        let (layers, classes) = match *self {
            Topology::MnistDense => (
                vec![
                    dense(MNIST_DIM, MNIST_DIM, Relu),
                    dense(MNIST_DIM, MNIST_CLASSES, Identity),
                ],
                MNIST_CLASSES,
            ),
            Topology::MnistTvscm => (
                vec![tvscm(MNIST_DIM), dense(MNIST_DIM, MNIST_CLASSES, Identity)],
                MNIST_CLASSES,
            ),
            Topology::EcgDense => (
                vec![
                    dense(ECG_DIM, ECG_DENSE_HIDDEN, Relu),
                    dense(ECG_DENSE_HIDDEN, ECG_CLASSES, Identity),
                ],
                ECG_CLASSES,
            ),
            Topology::EcgTvscm => (
                vec![tvscm(ECG_DIM), dense(ECG_DIM, ECG_CLASSES, Identity)],
                ECG_CLASSES,
            ),
            Topology::SyntheticDense { dim, classes } => (
                vec![dense(dim, dim, Relu), dense(dim, classes, Identity)],
                classes,
            ),
            Topology::SyntheticTvscm { dim, classes } => {
                (vec![tvscm(dim), dense(dim, classes, Identity)], classes)
            }
        };
        ModelSkeleton { layers, classes }
    }
}

/// Which dataset family a run uses; synthetic carries its shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    Mnist,
    Ecg,
    Synthetic { dim: usize, classes: usize },
}
