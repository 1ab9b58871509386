//! Layers, activations, loss and model composition.

mod checkpoint;
mod dense;
mod loss;
mod model;
mod tvscm;

pub use checkpoint::{Checkpoint, LayerRecord, LossRecord, CHECKPOINT_FORMAT_VERSION};
pub use dense::{DenseGrad, DenseLayer};
pub use loss::{relu, relu_backward, softmax_cross_entropy, Activation};
pub use model::{Block, GradientBundle, Layer, LayerGrad, Model, Trace};
pub use tvscm::{TvscmGrad, TvscmLayer, DEFAULT_FFT_THRESHOLD};
pub(crate) use model::argmax as model_argmax;
