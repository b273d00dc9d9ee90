//! Asymptotic-preserving networks: per-mode macro and micro approximators,
//! collocation sampling, the H1-type stochastic loss and Adam training.

mod collocation;
mod config;
mod loss;
mod model;
mod network;
mod train;

pub use collocation::{sample_collocation, CollocationBatch};
pub use config::{CollocationConfig, Embedding, LossConfig, NetworkSpec, TrainConfig, VelocitySampling};
pub use loss::{
    assemble_loss, loss_and_gradient, loss_terms, LossAlgebra, LossBreakdown, ModeLoss, PART_NAMES,
};
pub use model::{FieldModel, ZeroModel};
pub use network::{points, postprocess_micro, NetworkBundle, PointDerivatives};
pub use train::{
    train, Adam, ApnnSettings, Checkpoint, FileObserver, LogRecord, NoObserver, TrainObserver,
    TrainState,
};
