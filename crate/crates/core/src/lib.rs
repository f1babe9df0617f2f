//! Scan-level classification from slice-level confidence maps.
//!
//! The crate covers the stages that follow deep feature extraction in a
//! CT-scan hemorrhage-subtype pipeline:
//!
//! - [`imgprep`]: Otsu masking, foreground cropping and bilinear resizing of slices.
//! - [`featsel`]: PCA projection and Shapley-value feature screening.
//! - [`boostnet`]: a boosted ensemble of mixed-activation networks that turns
//!   feature rows into per-slice confidence vectors.
//! - [`fusion`]: Sugeno λ-measure / Choquet-integral fusion of those vectors
//!   into one decision per scan, with mean, majority-vote and learned baselines.
//! - [`metrics`]: macro-averaged classification metrics and likelihood-based
//!   fit statistics.
//! - [`synth`]: seeded synthetic confidence maps and feature tables, and the
//!   subset-enumeration fusion oracle.
//! - [`experiment`]: the four-way fusion comparison.
//!
//! Data types shared across stages live in [`confmap`] and are re-exported
//! at the crate root.

pub mod boostnet;
pub mod confmap;
pub mod error;
pub mod experiment;
pub mod featsel;
pub mod fusion;
pub mod imgprep;
pub mod metrics;
pub mod seed;
pub mod synth;

pub use confmap::{ConfidenceVector, Dataset, LabelSpace, ScanRecord, SliceRecord, Violation};
pub use error::{Error, Result};
pub use featsel::FeatureTable;
pub use fusion::{FusedScan, FusionConfig};
pub use metrics::EvalReport;
