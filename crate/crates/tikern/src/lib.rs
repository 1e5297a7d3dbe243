//! Kernel machines with transformation-invariant kernels.
//!
//! The crate builds SVM classifiers whose kernels are invariant to finite
//! transformation groups acting on images: best-fit (max over the group)
//! and average-fit (mean over the group) variants of linear and
//! polynomial base kernels, optionally composed with multi-layer locality
//! kernels. It also ships positive-definiteness diagnostics for the
//! resulting Gram matrices, an SMO dual solver, IDX dataset handling with
//! translated/rotated synthesis, and a config-driven experiment harness.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gram;
pub mod image;
pub mod kernels;
pub mod locality;
pub mod pd;
pub mod rng;
pub mod shift;
pub mod svm;
pub mod toy;
pub mod transforms;

pub use config::{ExperimentConfig, KernelParams, Method};
pub use data::LabeledDataset;
pub use error::{Error, Result};
pub use gram::GramMatrix;
pub use image::Image;
pub use kernels::{BaseKernel, Invariance, KernelFunction, KernelSpec};
pub use locality::{LocalityLayer, LocalityStack};
pub use svm::{MulticlassModel, SvmModel};
pub use transforms::TransformGroup;
