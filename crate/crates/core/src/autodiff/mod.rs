//! Reverse-mode differentiation over (batch, channel, length) tensors, and
//! the segmentation losses built on it.

mod graph;
mod kernel;
pub mod losses;
mod tensor;

pub use graph::{BatchStats, Graph, TensorId};
pub use kernel::EdgeKernel;
pub use losses::{boundary_loss, dice_loss, f1_instance_loss, instance_counts};
pub use tensor::Tensor;
