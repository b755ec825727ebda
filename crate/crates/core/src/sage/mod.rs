//! GraphSAGE node classifier: three mean-aggregation layers followed by a
//! two-layer feed-forward head, trained with class-weighted cross-entropy.

mod checkpoint;
mod model;
mod predict;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use model::{
    loss_and_gradient, sage_forward, sage_forward_pass, Architecture, ForwardPass, Masks, ModelParams, NeighborMean,
};
pub use predict::{
    extract_embeddings, mc_dropout_predict, point_predict, read_prediction_csv, write_prediction_csv, McPrediction, PredictionRow,
};
pub use train::{train_classifier, LabeledNode, TrainConfig, TrainOutcome};
