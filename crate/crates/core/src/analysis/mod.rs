//! Disk-I/O baseline, non-negative fitting and accuracy metrics.

mod correlation;
mod disk;
mod nnls;
mod report;

pub use correlation::{average_ranks, pearson, spearman};
pub use disk::{disk_cost_units, DiskCostUnits, DEFAULT_PAGE_BYTES};
pub use nnls::{fit_nonnegative, FittedDiskModel};
pub use report::{accuracy_report, AccuracyReport, Alignment, ReportOptions, ReportRow};
