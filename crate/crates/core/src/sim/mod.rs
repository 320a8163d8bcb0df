//! Wireless multimedia sensor network simulator.
//!
//! Camera pairs compute disparity maps locally, flag depth events and send
//! compact maps (or raw frames, as a baseline) hop by hop to a single sink.
//! Energy is charged per byte of processed or transmitted data.

mod energy;
mod engine;
mod event;
mod node;
mod report;
mod routing;
mod scenario;

use std::fmt;

use thiserror::Error;

pub use energy::{charge_processing, charge_transmission, Charge, EnergyModel, HopCharges, REFERENCE_VOLUME};
pub use engine::run_simulation;
pub use event::{detect_event, transmission_bytes, EventCheck, Payload, PayloadKind};
pub use node::{NodeId, NodeRole, SensorNode};
pub use report::{
    network_lifetime, EventRecord, Lifetime, NodeLedger, PayloadSizes, SimReport, SkipReason,
    SkippedRecord, Totals, TransmissionRecord,
};
pub use routing::{RoutingError, Topology};
pub use scenario::{
    EnergySpec, FrameSequence, FrameSpec, MapEncoding, NodeSpec, PairSpec, Policy, Scenario,
    ScenarioFile, StereoPair, SyntheticFrames,
};

use crate::stereo::StereoError;

/// One scenario problem, located by its JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario validation failed:\n{}", list(.0))]
    Validation(Vec<Issue>),
    #[error("scenario has no sink")]
    NoSink,
    #[error("disparity maps differ in shape")]
    MapShape,
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Stereo(#[from] StereoError),
}

fn list(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}
