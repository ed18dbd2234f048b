//! Hand-flapping detection from pre-extracted hand-landmark sequences.
//!
//! The pipeline runs from annotated source videos to evaluated classifiers:
//!
//! - [`landmark`]: clip data model, the JSON-lines interchange format, the
//!   dataset manifest and a synthetic sequence generator.
//! - [`segmentation`]: turns behavior annotations into positive and control
//!   clip spans and cuts clips out of whole-video landmark sequences.
//! - [`features`]: fixed-shape `90 x D` feature matrices under the four
//!   landmark-selection strategies.
//! - [`augmentation`]: per-clip coordinate shifts.
//! - [`neuralnet`]: single-layer LSTM binary classifier with BPTT, dropout,
//!   binary cross-entropy, Adam and early stopping.
//! - [`evaluation`]: metrics, ROC/AUROC, stratified k-fold and repeated
//!   cross-validation with CSV reports.
//! - [`cli`]: subcommand implementations behind the `handflap` binary.

pub mod augmentation;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod landmark;
pub mod neuralnet;
pub mod segmentation;
pub mod seed;

pub use error::{Error, Result};
