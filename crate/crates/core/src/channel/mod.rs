//! The disk channel: parameters, eigenmodes and the series solution.

pub mod gfc;
pub mod modes;
pub mod observables;
pub mod params;

pub use gfc::{
    gfc_eval, gfc_field, gfc_time_series, rx_disc_average, rx_disc_series, truncation_converged,
    Probe, TruncationReport,
};
pub use modes::{build_mode_table, mode_norm, Mode, ModeTable, Truncation};
pub use observables::{ConcentrationSeries, GridField, Source};
pub use params::{wrap_angle, ChannelParams, ReceiverSpec};
