//! Datasets, TBIN files, model persistence and experiment sweeps.

pub mod dataset;
pub mod experiment;
pub mod model_io;
pub mod tbin;

pub use dataset::{
    gen_synthetic, read_dataset, split_dataset, synthetic_class_means, write_dataset, LabeledDataset, Manifest,
    ManifestEntry, SplitTag, SyntheticSpec, MANIFEST,
};
pub use experiment::{
    load_experiment_config, run_experiment, DatasetSource, ExperimentConfig, ExperimentReport, GridConfig, ReportRow,
    TimingRow,
};
pub use model_io::{load_model, read_metadata, save_model, ModelMetadata, Stage1Kind, FORMAT_VERSION};
pub use tbin::{decode_tbin, encode_tbin, read_tbin, write_tbin};
