//! A small multilayer perceptron: ReLU hidden layers, softmax output,
//! cross-entropy loss, trained by momentum SGD.

mod net;
mod train;

pub use net::{grad_check, Gradients, MLPArch, MLPParams, KINK_MARGIN};
pub use train::{
    batch_size_for, evaluate_gap, train, write_history_csv, EpochRecord, GapReport, NetPredictor,
    TrainConfig, TrainHistory, BATCH_SCHEDULE,
};
