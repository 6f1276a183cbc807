//! Cross-checks between the two solvers.

pub mod compare;

pub use compare::{
    anisotropy_effect, compare_series, mass_check_gfc, AnisotropyRow, ComparisonReport, MassCheck,
    PeakScan,
};
