//! Series ingest, normalisation, windowing and synthetic benchmarks.

mod io;
mod series;
mod synth;
mod window;

pub use io::{load_ranges_csv, load_series_csv, write_ranges_csv, write_series_csv};
pub use series::{
    fit_norm, labels_from_ranges, normalize, ranges_from_labels, NormStats, Role, TimeSeries,
};
pub use synth::{synth_series, Anomaly, AnomalyKind, BaseSignal, BenchmarkSpec, SynthSpec};
pub use window::{make_windows, window_origins, WindowBatch};
