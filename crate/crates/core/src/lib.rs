//! Epidemic nowcasting from official case counts and Internet search
//! volumes.
//!
//! The crate estimates the current month's case count by combining
//! autoregressive lags of the official series with contemporaneous
//! search-volume features under a differentially penalized L1 regression,
//! retrained on a rolling two-year window. A zoo of benchmark models, an
//! evaluation harness with relative-to-naive reporting, and a snapshot
//! robustness study round out the toolkit.

pub mod error;
pub mod ingest;
pub mod metrics;
pub mod models;
pub mod month;
pub mod panel;
pub mod solver;

pub use error::{Error, Result};
pub use month::{Month, MonthRange};
pub use panel::{LogPanel, MonthlyPanel};
