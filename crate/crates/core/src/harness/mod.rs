//! Training loop, multi-label metrics, threshold decoding, and the 5-fold
//! evaluation protocol.

mod config;
mod crossval;
mod evaluate;
mod metrics;
mod train;

pub use config::TrainConfig;
pub use crossval::{
    cross_validate, summary_table, CrossvalSummary, FoldOutcome, FoldPlan, DEFAULT_TEST_SIZE,
    FOLD_COUNT,
};
pub use evaluate::{evaluate, threshold_sweep, write_report_table};
pub use metrics::{decode_indices, decode_prescription, metrics, EvalReport, SampleMetrics};
pub use train::{train, EarlyStopper, EpochRecord, History};
