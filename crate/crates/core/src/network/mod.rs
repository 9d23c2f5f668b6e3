//! 1-D U-Net / W-Net segmenter with optional channel attention, its
//! optimizer, trainer and checkpoint format.

pub mod checkpoint;
mod config;
mod model;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Manifest};
pub use config::{DataMix, NetworkConfig, TrainerConfig};
pub use model::{eca_kernel_size, ForwardPass, Model, ModelParams, ModelPredictor};
pub use optim::Adam;
pub use train::{make_batch, train, train_model, Batch, LossRow, TrainError, TrainResult, TrainingData, LOG_HEADER};
