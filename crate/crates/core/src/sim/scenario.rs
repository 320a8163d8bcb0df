//! Scenario description: topology, camera pairs, frame schedules and policy.
//!
//! Scenarios are usually read from JSON (see [`Scenario::from_json`]); the
//! file layout is documented in the repository README.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::imaging::{parse_pgm, GrayImage};
use crate::stereo::{CostMethod, DisparityMap, MatchParams};
use crate::synth;

use super::energy::EnergyModel;
use super::node::{NodeId, NodeRole, SensorNode};
use super::routing::Topology;
use super::{Issue, SimError};

/// When a pair sends something towards the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Disparity map, only on steps where a depth event fires.
    #[default]
    DisparityOnEvent,
    /// Disparity map every step.
    DisparityAlways,
    /// Both raw frames every step.
    RawAlways,
}

/// Wire form of transmitted disparity maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapEncoding {
    #[default]
    Rle,
    Plain,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::DisparityOnEvent, Policy::DisparityAlways, Policy::RawAlways];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::DisparityOnEvent => "disparity_on_event",
            Policy::DisparityAlways => "disparity_always",
            Policy::RawAlways => "raw_always",
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown policy `{s}` (expected disparity_on_event, disparity_always or raw_always)"))
    }
}

impl MapEncoding {
    pub fn as_str(self) -> &'static str {
        match self {
            MapEncoding::Rle => "rle",
            MapEncoding::Plain => "plain",
        }
    }
}

impl FromStr for MapEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rle" => Ok(MapEncoding::Rle),
            "plain" => Ok(MapEncoding::Plain),
            other => Err(format!("unknown encoding `{other}` (expected rle or plain)")),
        }
    }
}

/// A seeded frame schedule: a static random-texture scene whose disparity
/// is `disparity + shift_per_step · t`, re-based at every entry of `changes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticFrames {
    pub width: usize,
    pub height: usize,
    pub steps: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub disparity: usize,
    #[serde(default)]
    pub shift_per_step: i64,
    /// `(step, disparity)`: from simulation step `step` (1-based, like the
    /// report) on, the scene sits at this disparity before `shift_per_step`
    /// resumes.
    #[serde(default)]
    pub changes: Vec<(usize, usize)>,
}

impl SyntheticFrames {
    /// Scene disparity at simulation step `step` (1-based).
    pub fn disparity_at(&self, step: usize) -> usize {
        let (base_step, base) = self
            .changes
            .iter()
            .filter(|(s, _)| *s <= step)
            .max_by_key(|(s, _)| *s)
            .copied()
            .unwrap_or((1, self.disparity));
        let d = base as i64 + self.shift_per_step * step.saturating_sub(base_step) as i64;
        d.max(0) as usize
    }
}

/// The frames a pair captures, one stereo pair per step.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameSequence {
    Synthetic { spec: SyntheticFrames, seed: u64 },
    Images(Vec<(GrayImage, GrayImage)>),
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        match self {
            FrameSequence::Synthetic { spec, .. } => spec.steps,
            FrameSequence::Images(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Left/right frame for a 0-based step.
    pub fn frame(&self, step: usize) -> Cow<'_, (GrayImage, GrayImage)> {
        match self {
            FrameSequence::Synthetic { spec, seed } => Cow::Owned(synth::shifted_pair(
                spec.width,
                spec.height,
                spec.disparity_at(step + 1),
                *seed,
            )),
            FrameSequence::Images(v) => Cow::Borrowed(&v[step]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereoPair {
    pub left_node: NodeId,
    pub right_node: NodeId,
    /// Metres.
    pub baseline: f64,
    /// Pixels.
    pub focal_length: f64,
    pub match_params: MatchParams,
    /// Most recent map this pair computed.
    pub last_map: Option<DisparityMap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<SensorNode>,
    pub pairs: Vec<StereoPair>,
    pub links: Vec<(NodeId, NodeId)>,
    /// One sequence per pair, index-aligned with `pairs`.
    pub frames: Vec<FrameSequence>,
    pub event_threshold: f64,
    pub policy: Policy,
    pub seed: u64,
    pub energy: EnergyModel,
    pub encoding: MapEncoding,
}

// ---- JSON schema ---------------------------------------------------------

fn default_threshold() -> f64 {
    1.0
}

fn default_baseline() -> f64 {
    0.1
}

fn default_focal() -> f64 {
    500.0
}

fn default_radius() -> usize {
    MatchParams::default().window_radius
}

fn default_max_disparity() -> usize {
    MatchParams::default().max_disparity
}

fn default_method() -> CostMethod {
    CostMethod::Sad
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub nodes: Vec<NodeSpec>,
    pub pairs: Vec<PairSpec>,
    #[serde(default)]
    pub links: Vec<(u32, u32)>,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default = "default_threshold")]
    pub event_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub energy: EnergySpec,
    #[serde(default)]
    pub encoding: MapEncoding,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u32,
    pub role: NodeRole,
    #[serde(default)]
    pub position: [f64; 2],
    #[serde(default)]
    pub battery_uj: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    pub tx_energy_per_64kb: Option<f64>,
    pub cpu_energy_per_64kb_processed: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub left_node: u32,
    pub right_node: u32,
    #[serde(default = "default_baseline")]
    pub baseline_m: f64,
    #[serde(default = "default_focal")]
    pub focal_length_px: f64,
    #[serde(default = "default_radius")]
    pub window_radius: usize,
    #[serde(default = "default_max_disparity")]
    pub max_disparity: usize,
    #[serde(default = "default_method")]
    pub method: CostMethod,
    pub frames: FrameSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FrameSpec {
    Synthetic(SyntheticFrames),
    /// `[left.pgm, right.pgm]` per step, relative to the scenario file.
    Files(Vec<(String, String)>),
}

/// Per-pair texture seed when a synthetic spec does not name one.
fn derived_seed(scenario_seed: u64, pair: usize) -> u64 {
    scenario_seed ^ (pair as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl Scenario {
    /// Parses scenario JSON. Relative frame paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, SimError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| SimError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.into_scenario(base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn sink(&self) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.role == NodeRole::Sink).map(|n| n.id)
    }

    pub fn topology(&self) -> Option<Topology> {
        let sink = self.sink()?;
        let mut t = Topology::new(self.nodes.iter().map(|n| n.id), sink);
        for &(a, b) in &self.links {
            t.link(a, b);
        }
        Some(t)
    }

    pub fn route_to_sink(&self, from: NodeId) -> Result<Vec<NodeId>, SimError> {
        let topology = self.topology().ok_or(SimError::NoSink)?;
        Ok(topology.route_to_sink(from)?)
    }

    /// Number of lock-step rounds: the longest frame schedule.
    pub fn steps(&self) -> usize {
        self.frames.iter().map(FrameSequence::len).max().unwrap_or(0)
    }

    /// Checks every scenario invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut issues = Vec::new();
        let mut push = |path: String, message: String| issues.push(Issue { path, message });

        let mut roles = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if roles.insert(n.id, n.role).is_some() {
                push(format!("nodes[{i}].id"), format!("duplicate node id {}", n.id));
            }
        }
        let sinks = self.nodes.iter().filter(|n| n.role == NodeRole::Sink).count();
        if sinks != 1 {
            push("nodes".into(), format!("expected exactly one sink, found {sinks}"));
        }
        for (i, &(a, b)) in self.links.iter().enumerate() {
            for (end, id) in [(0, a), (1, b)] {
                if !roles.contains_key(&id) {
                    push(format!("links[{i}][{end}]"), format!("unknown node {id}"));
                }
            }
            if a == b {
                push(format!("links[{i}]"), format!("self-loop on node {a}"));
            }
        }
        if !self.event_threshold.is_finite() || self.event_threshold < 0.0 {
            push("event_threshold".into(), "threshold must be finite and non-negative".into());
        }
        if !self.energy.is_valid() {
            push("energy".into(), "energy constants must be finite and positive".into());
        }
        if self.frames.len() != self.pairs.len() {
            push("pairs".into(), format!("{} pairs but {} frame sequences", self.pairs.len(), self.frames.len()));
        }

        let distances = (sinks == 1)
            .then(|| self.topology())
            .flatten()
            .map(|t| t.sink_distances())
            .unwrap_or_default();

        for (i, pair) in self.pairs.iter().enumerate() {
            for (field, id) in [("left_node", pair.left_node), ("right_node", pair.right_node)] {
                match roles.get(&id) {
                    None => push(format!("pairs[{i}].{field}"), format!("unknown node {id}")),
                    Some(NodeRole::Camera) => {}
                    Some(role) => push(
                        format!("pairs[{i}].{field}"),
                        format!("node {id} has role {role:?}, expected camera"),
                    ),
                }
            }
            if pair.left_node == pair.right_node {
                push(format!("pairs[{i}].right_node"), "left and right node must differ".into());
            }
            if roles.contains_key(&pair.left_node) && sinks == 1 && !distances.contains_key(&pair.left_node) {
                push(
                    format!("pairs[{i}].left_node"),
                    format!("node {} is not connected to the sink", pair.left_node),
                );
            }
            if !(pair.baseline.is_finite() && pair.baseline > 0.0) {
                push(format!("pairs[{i}].baseline_m"), "baseline must be positive".into());
            }
            if !(pair.focal_length.is_finite() && pair.focal_length > 0.0) {
                push(format!("pairs[{i}].focal_length_px"), "focal length must be positive".into());
            }
            if let Some(frames) = self.frames.get(i) {
                self.validate_frames(i, pair, frames, &mut push);
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(SimError::Validation(issues))
        }
    }

    fn validate_frames(
        &self,
        i: usize,
        pair: &StereoPair,
        frames: &FrameSequence,
        push: &mut impl FnMut(String, String),
    ) {
        let path = format!("pairs[{i}].frames");
        if frames.is_empty() {
            push(path, "frame schedule is empty".into());
            return;
        }
        let (w, h) = match frames {
            FrameSequence::Synthetic { spec, .. } => {
                if spec.width == 0 || spec.height == 0 {
                    push(format!("{path}.synthetic"), "width and height must be at least 1".into());
                    return;
                }
                for (c, &(step, _)) in spec.changes.iter().enumerate() {
                    if step == 0 || step > spec.steps {
                        push(
                            format!("{path}.synthetic.changes[{c}]"),
                            format!("change step {step} is outside 1..={}", spec.steps),
                        );
                    }
                }
                (spec.width, spec.height)
            }
            FrameSequence::Images(v) => {
                let (w, h) = (v[0].0.width(), v[0].0.height());
                for (s, (l, r)) in v.iter().enumerate() {
                    if !l.same_dimensions(r) || l.width() != w || l.height() != h {
                        push(
                            format!("{path}.files[{s}]"),
                            format!(
                                "frame sizes {}x{} / {}x{} differ from {w}x{h}",
                                l.width(),
                                l.height(),
                                r.width(),
                                r.height()
                            ),
                        );
                    }
                }
                (w, h)
            }
        };
        if let Err(e) = pair.match_params.validate_for(w, h) {
            push(format!("pairs[{i}]"), format!("match parameters do not fit {w}x{h} frames: {e}"));
        }
    }
}

impl ScenarioFile {
    /// Resolves node, pair and frame references and validates the result.
    /// Every unreadable frame is reported; the structural checks of
    /// [`Scenario::validate`] run once all frames have loaded.
    pub fn into_scenario(self, base_dir: &Path) -> Result<Scenario, SimError> {
        let mut issues = Vec::new();
        let nodes = self
            .nodes
            .iter()
            .map(|n| SensorNode::new(NodeId(n.id), n.position, n.battery_uj, n.role))
            .collect();
        for (i, n) in self.nodes.iter().enumerate() {
            if !(n.battery_uj.is_finite() && n.battery_uj >= 0.0) {
                issues.push(Issue {
                    path: format!("nodes[{i}].battery_uj"),
                    message: "battery must be finite and non-negative".into(),
                });
            }
        }
        let defaults = EnergyModel::default();
        let energy = EnergyModel {
            tx_energy_per_64kb: self.energy.tx_energy_per_64kb.unwrap_or(defaults.tx_energy_per_64kb),
            cpu_energy_per_64kb_processed: self
                .energy
                .cpu_energy_per_64kb_processed
                .unwrap_or(defaults.cpu_energy_per_64kb_processed),
        };

        let mut pairs = Vec::with_capacity(self.pairs.len());
        let mut frames = Vec::with_capacity(self.pairs.len());
        for (i, p) in self.pairs.into_iter().enumerate() {
            pairs.push(StereoPair {
                left_node: NodeId(p.left_node),
                right_node: NodeId(p.right_node),
                baseline: p.baseline_m,
                focal_length: p.focal_length_px,
                match_params: MatchParams::new(p.window_radius, p.max_disparity, p.method),
                last_map: None,
            });
            let seq = match p.frames {
                FrameSpec::Synthetic(spec) => {
                    let seed = spec.seed.unwrap_or_else(|| derived_seed(self.seed, i));
                    FrameSequence::Synthetic { spec, seed }
                }
                FrameSpec::Files(paths) => {
                    let mut images = Vec::with_capacity(paths.len());
                    for (s, (l, r)) in paths.iter().enumerate() {
                        let left = load_frame(base_dir, l, format!("pairs[{i}].frames.files[{s}][0]"), &mut issues);
                        let right = load_frame(base_dir, r, format!("pairs[{i}].frames.files[{s}][1]"), &mut issues);
                        if let (Some(l), Some(r)) = (left, right) {
                            images.push((l, r));
                        }
                    }
                    FrameSequence::Images(images)
                }
            };
            frames.push(seq);
        }
        if issues.iter().any(|i| i.path.contains(".frames.")) {
            return Err(SimError::Validation(issues));
        }

        let scenario = Scenario {
            nodes,
            pairs,
            links: self.links.into_iter().map(|(a, b)| (NodeId(a), NodeId(b))).collect(),
            frames,
            event_threshold: self.event_threshold,
            policy: self.policy,
            seed: self.seed,
            energy,
            encoding: self.encoding,
        };
        if let Err(SimError::Validation(more)) = scenario.validate() {
            issues.extend(more);
        }
        if issues.is_empty() {
            Ok(scenario)
        } else {
            Err(SimError::Validation(issues))
        }
    }
}

fn load_frame(base: &Path, rel: &str, path: String, issues: &mut Vec<Issue>) -> Option<GrayImage> {
    let full = base.join(rel);
    let bytes = match std::fs::read(&full) {
        Ok(b) => b,
        Err(e) => {
            issues.push(Issue {
                path,
                message: format!("{}: {e}", full.display()),
            });
            return None;
        }
    };
    match parse_pgm(&bytes) {
        Ok(img) => Some(img),
        Err(e) => {
            issues.push(Issue {
                path,
                message: format!("{}: {e}", full.display()),
            });
            None
        }
    }
}
