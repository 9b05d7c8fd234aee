//! Datasets, joint data layout, sub-domain indexing, preprocessing, file
//! ingestion and synthetic benchmark generation.
//!
//! Labels are 0-based class indices everywhere in memory. Files carry 1-based
//! labels; the conversion happens only in [`io`].

mod dataset;
pub mod io;
mod standardize;
pub mod synthetic;

pub use dataset::{DomainDataset, JointData, Role, SubdomainIndex};
pub use io::{load_dataset, save_csv, save_rawbinary, FileFormat};
pub use standardize::zscore_standardize;
pub use synthetic::{make_synthetic_pair, ClassShape, ClassSpec, SyntheticSpec};
