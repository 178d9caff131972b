//! Pipeline runner, dataset catalog and HTTP query service.

pub mod catalog;
pub mod config;
pub mod error;
pub mod http;
pub mod lasso;
pub mod pipeline;

pub use catalog::{DatasetCatalog, DatasetEntry, LoadedDataset};
pub use config::PipelineConfig;
pub use error::{Result, ServiceError};
pub use lasso::{lasso_select, SelectionQuery};
pub use pipeline::{run_pipeline, run_stages, PipelineReport, Stage};
