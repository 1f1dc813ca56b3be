//! Feedforward neural detector: ReLU hidden layers, sigmoid bit outputs, MSE
//! loss, backpropagation and Adam.

mod adam;
mod mlp;
mod model_file;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use mlp::{mse_loss, threshold_bits, Dense, Gradients, Mlp, OutputActivation};
pub use model_file::{read_model, write_model, LayerEntry, ModelManifest, MODEL_MAGIC};
pub use train::{train, TrainConfig, TrainReport};

/// Hidden widths of the full-size architecture.
pub const FULL_HIDDEN: [usize; 4] = [1024, 512, 256, 128];
/// Hidden widths of the small profile used for quick runs.
pub const DESK_HIDDEN: [usize; 2] = [128, 64];
