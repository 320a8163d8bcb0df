//! Simulation output. Field names here are the stable JSON interface.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::event::PayloadKind;
use super::node::{NodeId, NodeRole};

/// Step (1-based) at which the first camera or relay battery hit zero, or
/// survival of the whole schedule. Step 0 means a node started empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Lifetime {
    Step(u64),
    Survived,
}

impl fmt::Display for Lifetime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lifetime::Step(s) => write!(f, "step {s}"),
            Lifetime::Survived => f.write_str("survived"),
        }
    }
}

impl Serialize for Lifetime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Lifetime::Step(step) => s.serialize_u64(*step),
            Lifetime::Survived => s.serialize_str("survived"),
        }
    }
}

impl<'de> Deserialize<'de> for Lifetime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct LifetimeVisitor;

        impl Visitor<'_> for LifetimeVisitor {
            type Value = Lifetime;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a step number or \"survived\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Lifetime, E> {
                Ok(Lifetime::Step(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Lifetime, E> {
                if v == "survived" {
                    Ok(Lifetime::Survived)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(LifetimeVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLedger {
    pub id: NodeId,
    pub role: NodeRole,
    pub initial_battery_uj: f64,
    pub final_battery_uj: f64,
    /// Energy drawn for local processing.
    pub processing_uj: f64,
    /// Energy drawn for radio transmission.
    pub transmission_uj: f64,
    /// Energy requested by the fatal operation beyond what the battery held.
    pub deficit_uj: f64,
    pub bytes_transmitted: u64,
    pub died_at_step: Option<u64>,
}

impl NodeLedger {
    pub fn spent_uj(&self) -> f64 {
        self.processing_uj + self.transmission_uj
    }

    /// Gap between the battery drop and the recorded charges, relative to the
    /// largest quantity involved.
    pub fn conservation_error(&self) -> f64 {
        let drop = self.initial_battery_uj - self.final_battery_uj;
        let spent = self.spent_uj();
        let scale = self.initial_battery_uj.abs().max(spent.abs());
        if scale == 0.0 {
            return (drop - spent).abs();
        }
        (drop - spent).abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub step: u64,
    pub pair: usize,
    /// Mean absolute disparity change; `null` for a pair's first frame.
    pub change: Option<f64>,
    /// Mean depth over pixels with a usable disparity, in metres.
    pub mean_depth_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub step: u64,
    pub pair: usize,
    pub payload: PayloadKind,
    pub bytes: u64,
    pub path: Vec<NodeId>,
    pub hops_completed: usize,
    pub delivered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    LeftDead,
    RightDead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub step: u64,
    pub pair: usize,
    pub reason: SkipReason,
}

/// Wire sizes for one pair, so compactness is measured rather than assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadSizes {
    pub pair: usize,
    pub width: usize,
    pub height: usize,
    pub sidecar_bytes: u64,
    pub rle_bytes_min: Option<u64>,
    pub rle_bytes_max: Option<u64>,
    pub raw_pair_bytes: u64,
    /// Every computed map's run-length form was smaller than the raw pair.
    pub rle_smaller_than_raw: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub processing_uj: f64,
    pub transmission_uj: f64,
    pub elementary_ops: u64,
    pub bytes_transmitted: u64,
    pub transmissions: usize,
    pub dropped: usize,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub steps: u64,
    pub policy: super::Policy,
    pub encoding: super::MapEncoding,
    pub lifetime: Lifetime,
    pub nodes: Vec<NodeLedger>,
    pub events: Vec<EventRecord>,
    pub transmissions: Vec<TransmissionRecord>,
    pub skipped: Vec<SkippedRecord>,
    pub payload_sizes: Vec<PayloadSizes>,
    pub totals: Totals,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report contains only finite numbers");
        s.push('\n');
        s
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeLedger> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// First step at which a camera or relay battery reached zero.
pub fn network_lifetime(report: &SimReport) -> Lifetime {
    report
        .nodes
        .iter()
        .filter(|n| n.role != NodeRole::Sink)
        .filter_map(|n| n.died_at_step)
        .min()
        .map_or(Lifetime::Survived, Lifetime::Step)
}
