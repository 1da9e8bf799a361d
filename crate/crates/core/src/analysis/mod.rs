//! Coupling scans, extremum location, susceptibilities and scaling-law fits.

mod extremum;
mod fit;
mod scan;
mod search;
mod studies;

pub use extremum::{locate_extremum, susceptibility, ExtremumKind, ExtremumLocation, SusceptibilityCurve};
pub use fit::{fit_scaling_eta, fit_scaling_gamma, fit_size_law, PowerLawFit, SizeFit};
pub use scan::{
    correlator_average, order_parameter, scan_order_parameter, scan_otoc, CouplingGrid, OrderState, PointValue,
    ScanMeta, ScanResult,
};
pub use search::{minimum_search, susceptibility_peak_search, MinimumSearch, PeakSearch, SearchOutcome};
pub use studies::{cutoff_study, size_law_study, thermal_drift_study, CutoffRow, CutoffStudy, DriftRow, SizeLawRow};
