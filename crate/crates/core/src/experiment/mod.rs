//! Parameter sweeps, aggregation, model comparison and CSV output.
//!
//! Every sweep point is an independent simulation with its own seed, so
//! points and repetitions can run on any number of threads and still give
//! byte-identical CSV.

mod compare;
mod presets;
mod stats;
mod sweep;
mod table;

pub use compare::{compare, Comparison, RowVerdict};
pub use presets::{
    ber_grid, packet_loss_grid, preset, reference_setup, FigurePreset, PresetLine, RunOverrides, PRESET_NAMES,
};
pub use stats::{mean, percentile, wilson_interval, Z_95};
pub use sweep::{evaluate_point, point_seed, sweep, ScenarioResult, SweepAxis, SweepRow};
pub use table::{emit_csv, parse_csv, to_csv_string, COLUMNS};
