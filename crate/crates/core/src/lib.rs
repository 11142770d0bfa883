//! Analytics for country-by-activity count data.
//!
//! The pipeline runs from raw quarterly contributor counts to regression
//! tables in five stages, each of which is usable on its own:
//!
//! 1. [`ingest`] — parse, clean, filter, and aggregate raw count files and
//!    auxiliary country data into canonical tables.
//! 2. [`specialization`] — pivot counts into matrices, compute revealed
//!    comparative advantage, binarize into specialization matrices, and
//!    expose diversity/ubiquity margins and nested sorting.
//! 3. [`complexity`] — country and activity complexity scores by the
//!    mutual-averaging fixed point or by eigendecomposition, with
//!    standardization, display rescaling, and ranking.
//! 4. [`relatedness`] — activity proximity, country-activity relatedness
//!    density, and a spanning-tree network backbone.
//! 5. [`dynamics`] — yearly specialization panels, entry/exit event
//!    detection, and regression-ready transition datasets.
//! 6. [`econometrics`] — OLS with robust/clustered errors and fixed
//!    effects, logit, two-stage least squares with diagnostics, and a
//!    grid runner producing the standard result tables.
//!
//! Everything is deterministic: reductions run in label order, no
//! randomness is used anywhere, and identical inputs produce bit-identical
//! outputs regardless of thread count.

pub mod complexity;
pub mod dynamics;
pub mod econometrics;
pub mod ingest;
pub mod io;
pub mod relatedness;
pub mod specialization;

pub(crate) mod stats;
