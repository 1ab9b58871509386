use alloc::format;
use alloc::vec::Vec;

use super::dense::{DenseGrad, DenseLayer};
use super::loss::{relu_backward, Activation};
use super::tvscm::{TvscmGrad, TvscmLayer};
use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum Layer {
    Tvscm(TvscmLayer),
    Dense(DenseLayer),
}

impl Layer {
    pub fn inputs(&self) -> usize {
        match self {
            Layer::Tvscm(l) => l.n(),
            Layer::Dense(l) => l.inputs(),
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            Layer::Tvscm(l) => l.n(),
            Layer::Dense(l) => l.outputs(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Layer::Tvscm(l) => l.parameter_count(),
            Layer::Dense(l) => l.parameter_count(),
        }
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Tvscm(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
        }
    }
}

/// A layer followed by its activation.
#[derive(Debug, Clone)]
pub struct Block {
    pub layer: Layer,
    pub activation: Activation,
}

/// Per-layer gradients, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrad {
    Tvscm(TvscmGrad),
    Dense(DenseGrad),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrad>,
}

/// Activations recorded by [`Model::forward_train`].
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input to each block.
    inputs: Vec<Matrix>,
    /// Pre-activation output of each block.
    pre: Vec<Matrix>,
    logits: Matrix,
}

impl Trace {
    pub fn logits(&self) -> &Matrix {
        &self.logits
    }
}

/// An ordered stack of blocks ending in `classes` logits, trained with
/// softmax cross-entropy.
#[derive(Debug, Clone)]
pub struct Model {
    blocks: Vec<Block>,
    classes: usize,
}

impl Model {
    pub fn new(blocks: Vec<Block>, classes: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Model("a model needs at least one layer".into()));
        }
        for (i, pair) in blocks.windows(2).enumerate() {
            let (out, inp) = (pair[0].layer.outputs(), pair[1].layer.inputs());
            if out != inp {
                return Err(Error::Model(format!(
                    "layer {i} produces {out} features but layer {} expects {inp}",
                    i + 1
                )));
            }
        }
        let last = blocks[blocks.len() - 1].layer.outputs();
        if last != classes {
            return Err(Error::Model(format!(
                "final layer produces {last} outputs for {classes} classes"
            )));
        }
        Ok(Model { blocks, classes })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input_dim(&self) -> usize {
        self.blocks[0].layer.inputs()
    }

    /// `count_parameters`: total trainable scalars.
    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().map(|b| b.layer.parameter_count()).sum()
    }

    /// Applies a new FFT crossover to every TVSCM layer.
    pub fn set_fft_threshold(&mut self, threshold: usize) -> Result<()> {
        for block in &mut self.blocks {
            if let Layer::Tvscm(l) = &mut block.layer {
                l.set_fft_threshold(threshold)?;
            }
        }
        Ok(())
    }

    /// Inference: logits for each row of `x`.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = self.blocks[0].layer.forward(x)?;
        apply_activation(self.blocks[0].activation, &mut h);
        for block in &self.blocks[1..] {
            h = block.layer.forward(&h)?;
            apply_activation(block.activation, &mut h);
        }
        Ok(h)
    }

    /// Row-wise argmax of the logits.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let logits = self.forward(x)?;
        Ok(logits.iter_rows().map(argmax).collect())
    }

    pub fn forward_train(&self, x: &Matrix) -> Result<Trace> {
        let mut inputs = Vec::with_capacity(self.blocks.len());
        let mut pre = Vec::with_capacity(self.blocks.len());
        let mut h = x.clone();
        for block in &self.blocks {
            let z = block.layer.forward(&h)?;
            inputs.push(h);
            h = z.clone();
            apply_activation(block.activation, &mut h);
            pre.push(z);
        }
        Ok(Trace {
            inputs,
            pre,
            logits: h,
        })
    }

    /// Backpropagates `dlogits` through the recorded trace.
    pub fn backward(&self, trace: &Trace, dlogits: &Matrix) -> Result<GradientBundle> {
        let mut grads = Vec::with_capacity(self.blocks.len());
        let mut g = dlogits.clone();
        for (i, block) in self.blocks.iter().enumerate().rev() {
            if block.activation == Activation::Relu {
                relu_backward(&trace.pre[i], &mut g);
            }
            let need_input = i > 0;
            let (grad, dx) = match &block.layer {
                Layer::Tvscm(l) => {
                    let (gr, dx) = l.backward(&trace.inputs[i], &g, need_input)?;
                    (LayerGrad::Tvscm(gr), dx)
                }
                Layer::Dense(l) => {
                    let (gr, dx) = l.backward(&trace.inputs[i], &g, need_input)?;
                    (LayerGrad::Dense(gr), dx)
                }
            };
            grads.push(grad);
            if let Some(dx) = dx {
                g = dx;
            }
        }
        grads.reverse();
        Ok(GradientBundle { layers: grads })
    }

    /// Visits every trainable tensor with its gradient, in a fixed order.
    ///
    /// The callback receives a stable slot index, the parameter slice (to be
    /// updated in place) and the matching gradient slice. TVSCM `(a, b)` are
    /// presented as one two-element slot and the cached operator is rebuilt
    /// afterwards.
    pub fn update_parameters<F>(&mut self, grads: &GradientBundle, mut update: F) -> Result<()>
    where
        F: FnMut(usize, &mut [f64], &[f64]),
    {
        if grads.layers.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                actual: grads.layers.len(),
            });
        }
        let mut slot = 0;
        for (block, grad) in self.blocks.iter_mut().zip(&grads.layers) {
            match (&mut block.layer, grad) {
                (Layer::Tvscm(l), LayerGrad::Tvscm(g)) => {
                    let p = l.params();
                    let mut ab = [p.a(), p.b()];
                    update(slot, &mut ab, &[g.a, g.b]);
                    slot += 1;
                    l.set_values(ab[0], ab[1])?;
                    if let (Some(bias), Some(gb)) = (l.bias_mut(), &g.bias) {
                        update(slot, bias, gb);
                        slot += 1;
                    }
                }
                (Layer::Dense(l), LayerGrad::Dense(g)) => {
                    update(slot, l.weights_mut().as_mut_slice(), g.weights.as_slice());
                    update(slot + 1, l.bias_mut(), &g.bias);
                    slot += 2;
                }
                _ => return Err(Error::Model("gradient bundle does not match model".into())),
            }
        }
        Ok(())
    }
}

fn apply_activation(activation: Activation, h: &mut Matrix) {
    if activation == Activation::Relu {
        for v in h.as_mut_slice() {
            *v = v.max(0.0);
        }
    }
}

/// Index of the largest entry; first wins on ties.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
