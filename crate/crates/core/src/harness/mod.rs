//! Experiment orchestration: presets, configuration, CSV output and the
//! `train` / `eval` / `sweep` commands.

mod commands;
mod config;
mod metrics_csv;
mod presets;

pub use commands::{
    median, run_eval, run_sweep, run_train, write_sweep_csv, EvalReport, EvalTarget, SweepAxis, SweepConfig, SweepRow,
    TrainReport, SWEEP_COLUMNS,
};
pub use config::{parse_config_text, resolve, Experiment, FadingSpec};
pub use metrics_csv::{read_metrics, write_metrics, MetricsWriter, CSV_COLUMNS};
pub use presets::{Preset, IID_DISTANCE, INID_DEST, INID_RELAYS, INID_SOURCE};
