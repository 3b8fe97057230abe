//! From-scratch two-branch gaze regressor: tensors, layers, losses, Adam,
//! training and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod loss;
pub mod network;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use loss::{
    loss_centroid, loss_theta, sample_loss, CentroidMetric, LossBreakdown, LossConfig, LossMode,
};
pub use network::{prepare_input, prepare_samples, BatchItem, Network, NetworkSpec, Sample, OUTPUTS};
pub use tensor::{downsample_input, Real, Tensor};
pub use train::{train, write_loss_csv, EpochLog, TrainConfig, TrainOutcome, Trainer};
