//! Teacher-forced end-to-end training with the combined displacement loss.

mod config;
mod loss;
mod trainer;

pub use config::{lr_schedule, TrainConfig};
pub use loss::{loss, loss_graph};
pub use trainer::{
    prepare_inputs, score_inputs, train, train_split, EpochRecord, TrainOutcome, TrainReport, TrainSinks,
    BEST_CHECKPOINT, FINAL_CHECKPOINT, LAST_GOOD_CHECKPOINT,
};
