//! Long-term multi-face tracking by detection.
//!
//! Detections are associated to tracklets by maximum-IOU assignment, carried through
//! short gaps by a motion predictor, reconnected across long gaps by comparing face
//! templates of sufficient quality, and finally relabelled so every merged identity
//! keeps its oldest ID. [`metrics`] scores the result with fragmentation, identity
//! switch and completion-rate measures; [`synth`] produces scripted test streams.

pub mod association;
pub mod cli;
pub mod correction;
pub mod embedding;
pub mod error;
pub mod fbtr;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{iou, BBox, QualityAttrs};
pub use ingest::{AssignmentLog, DetectionRecord, GroundTruth, TrackId};
pub use tracker::{run, Ablation, TrackerConfig, TrackingOutput};
