//! Adaptive block thresholding estimation of large bandable covariance
//! matrices and their inverses, with banding/tapering baselines, synthetic
//! covariance models and a reproducible Monte Carlo harness.

pub mod baselines;
pub mod blocking;
pub mod cli;
pub mod csvio;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod matrix;
pub mod models;

pub use baselines::{
    banding_estimate, banding_weights, loss, select_bandwidth, taper_weight, tapering_estimate,
    tapering_weights, BandwidthSpec, LossMetric,
};
pub use blocking::{default_k0, norm_compression, Block, BlockPartition, BlockRecord};
pub use error::{Error, Result};
pub use estimators::{
    block_threshold, estimate, precision_estimate, psd_project, sample_covariance, Estimate,
    EstimatorConfig, RuleKind, ThresholdRule,
};
pub use linalg::{
    cholesky_lower, frobenius_norm, l1_operator_norm, l_inf_operator_norm, schur_product,
    spectral_norm, sym_eigen, sym_eigenvalues, SymEigen,
};
pub use matrix::{Matrix, Span};
pub use models::{
    check_class_membership, generate_model1, generate_model2, sample_gaussian, ClassParams,
    ClassReport, CovarianceModel,
};
