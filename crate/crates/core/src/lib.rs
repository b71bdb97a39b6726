//! Two-stage tensor feature networks for small-sample classification of
//! third-order tensors (e.g. short RGB clips or multichannel images).
//!
//! Stage 1 learns either multilinear projections (MLDANet) or vectorized
//! LDA/PCA filters (LDANet, PCANet) on local patches; stage 2 learns LDA or
//! PCA filters on the resulting maps; binary hashing, block histograms and a
//! one-vs-rest linear SVM finish the pipeline.

pub mod error;
pub mod filters;
pub mod linalg;
pub mod mlda;
pub mod network;
pub mod pooling;
pub mod svm;
pub mod tensor;
pub mod workbench;

pub use error::{Error, Result};
pub use filters::{solve_lda_filters, solve_pca_filters, ClassMeans, FilterBank, ScatterPair};
pub use mlda::{solve_emp, solve_mlda, tvp_project, Emp, EmpSet, MldaConfig};
pub use network::{
    extract_features, train_network, FeatureMapStack, NetworkConfig, NetworkModel, SolverConfig, Stage1Bank, Variant,
};
pub use pooling::{binarize, block_histograms, block_partition, hash_stack, pool_features, PoolingConfig};
pub use svm::{train_linear_svm, LinearSvmModel, SvmConfig};
pub use tensor::{conv2d_same, emp_project, extract_tensor_patches, mode_product, DenseTensor, PatchSpec};
pub use workbench::{LabeledDataset, SyntheticSpec};
