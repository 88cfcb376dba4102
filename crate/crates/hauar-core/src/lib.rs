//! Fully autonomous occupancy-driven home automation at desk scale.
//!
//! A simulated PIR/climate sensor pair gates a from-scratch vision
//! pipeline — synthetic room frames, Haar-style cascade pre-filter, HOG
//! person detector, nearest-centroid pose classifier — whose room state
//! drives a fan/light state table. A discrete-event simulator scripts
//! occupants and climate, accounts energy against an always-on baseline,
//! and never persists a single frame.
//!
//! Module map:
//! - [`frame`]: grayscale frames, PGM I/O, resize + equalization
//! - [`synth`]: deterministic labeled scene and dataset generation
//! - [`vision`]: integral images, cascade, HOG, sliding-window detection
//! - [`pose`]: pose features, centroid classifier, frame-level aggregation
//! - [`state`]: the appliance state table
//! - [`controller`]: the motion-or-timer trigger loop
//! - [`sim`]: the discrete-event home simulator and energy ledger
//! - [`train`] / [`eval`]: model fitting and confusion-matrix evaluation
//! - [`pipeline`]: the model bundle file and the frame-analysis pipeline

pub mod controller;
pub mod eval;
pub mod frame;
pub mod pipeline;
pub mod pose;
pub mod sim;
pub mod state;
pub mod synth;
pub mod train;
pub mod vision;

pub use frame::{load_pgm, preprocess, write_pgm, Frame, PreprocessConfig};
pub use pipeline::{analyze_frame, FrameAnalysis, ModelBundle};
pub use pose::PoseLabel;
pub use state::{ApplianceState, ClimateReading, ClimateThresholds, FanSpeed, LightLevel};
