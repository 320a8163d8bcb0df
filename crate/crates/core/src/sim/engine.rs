//! Lock-step simulation loop.
//!
//! Every step visits the pairs in list order. For each active pair the right
//! camera sends its raw frame to the left camera over one hop, the left camera
//! computes the disparity map and pays for it, compares it with the pair's
//! previous map, and then (depending on the policy) pushes a payload along the
//! minimum-hop route to the sink.
//!
//! Relays forward payloads verbatim. [`Run::transmit`] is the single place a
//! payload crosses the network, so a relay-side transform of in-flight maps
//! would slot in there; none is applied.

use std::collections::BTreeMap;

use crate::sidecar;
use crate::stereo::{compute_disparity, disparity_to_depth, DisparityMap};

use super::energy::{charge_processing, charge_transmission, Charge};
use super::event::{detect_event, transmission_bytes, Payload};
use super::node::{NodeId, SensorNode};
use super::report::{
    network_lifetime, EventRecord, Lifetime, NodeLedger, PayloadSizes, SimReport, SkipReason,
    SkippedRecord, Totals, TransmissionRecord,
};
use super::scenario::{MapEncoding, Policy, Scenario};
use super::SimError;

#[derive(Default)]
struct Ledger {
    initial: f64,
    processing: f64,
    transmission: f64,
    deficit: f64,
    bytes: u64,
    died_at: Option<u64>,
}

impl Ledger {
    fn apply(&mut self, charge: Charge, step: u64, processing: bool) {
        if processing {
            self.processing += charge.drawn;
        } else {
            self.transmission += charge.drawn;
        }
        self.deficit += charge.deficit;
        if charge.died && self.died_at.is_none() {
            self.died_at = Some(step);
        }
    }
}

struct Run<'a> {
    scenario: &'a Scenario,
    nodes: Vec<SensorNode>,
    ledgers: Vec<Ledger>,
    index: BTreeMap<NodeId, usize>,
    transmissions: Vec<TransmissionRecord>,
    totals: Totals,
}

impl Run<'_> {
    fn transmit(&mut self, step: u64, pair: usize, path: &[usize], payload: &Payload<'_>) {
        let bytes = transmission_bytes(payload);
        let hops = charge_transmission(&mut self.nodes, path, bytes, &self.scenario.energy);
        for &(sender, charge) in &hops.charges {
            let state = &mut self.ledgers[sender];
            state.apply(charge, step, false);
            state.bytes += bytes;
            self.totals.bytes_transmitted += bytes;
            self.totals.transmission_uj += charge.drawn;
        }
        if !hops.delivered() {
            self.totals.dropped += 1;
        }
        self.totals.transmissions += 1;
        self.transmissions.push(TransmissionRecord {
            step,
            pair,
            payload: payload.kind(),
            bytes,
            path: path.iter().map(|&i| self.nodes[i].id).collect(),
            hops_completed: hops.charges.len(),
            delivered: hops.delivered(),
        });
    }
}

/// Runs the scenario to the end of its longest frame schedule.
///
/// The scenario is validated first and every violation is returned before any
/// step runs. Identical scenarios produce identical reports.
pub fn run_simulation(scenario: &Scenario) -> Result<SimReport, SimError> {
    scenario.validate()?;

    let index: BTreeMap<NodeId, usize> = scenario
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id, i))
        .collect();
    let ledgers: Vec<Ledger> = scenario
        .nodes
        .iter()
        .map(|n| Ledger {
            initial: n.battery(),
            died_at: (!n.is_alive()).then_some(0),
            ..Ledger::default()
        })
        .collect();

    let topology = scenario.topology().ok_or(SimError::NoSink)?;
    let mut routes = Vec::with_capacity(scenario.pairs.len());
    for pair in &scenario.pairs {
        let path = topology.route_to_sink(pair.left_node)?;
        routes.push(path.iter().map(|id| index[id]).collect::<Vec<_>>());
    }

    let mut run = Run {
        scenario,
        nodes: scenario.nodes.clone(),
        ledgers,
        index,
        transmissions: Vec::new(),
        totals: Totals::default(),
    };
    let mut last_maps: Vec<Option<DisparityMap>> =
        scenario.pairs.iter().map(|p| p.last_map.clone()).collect();
    let mut rle_range: Vec<Option<(u64, u64)>> = vec![None; scenario.pairs.len()];
    let mut events = Vec::new();
    let mut skipped = Vec::new();

    let steps = scenario.steps();
    for step0 in 0..steps {
        let step = step0 as u64 + 1;
        for (p, pair) in scenario.pairs.iter().enumerate() {
            let frames = &scenario.frames[p];
            if step0 >= frames.len() {
                continue;
            }
            let left = run.index[&pair.left_node];
            let right = run.index[&pair.right_node];
            if !run.nodes[left].is_alive() {
                skipped.push(SkippedRecord { step, pair: p, reason: SkipReason::LeftDead });
                continue;
            }
            if !run.nodes[right].is_alive() {
                skipped.push(SkippedRecord { step, pair: p, reason: SkipReason::RightDead });
                continue;
            }

            let frame = frames.frame(step0);
            let (limg, rimg) = (&frame.0, &frame.1);
            let (w, h) = (limg.width(), limg.height());

            run.transmit(step, p, &[right, left], &Payload::RawFrame { width: w, height: h });

            let (map, stats) = compute_disparity(limg, rimg, &pair.match_params)?;
            run.totals.elementary_ops += stats.elementary_ops;
            let work_bytes = (2 * w * h + sidecar::plain_len(w, h)) as u64;
            let charge = charge_processing(&mut run.nodes[left], work_bytes, &scenario.energy);
            run.ledgers[left].apply(charge, step, true);
            run.totals.processing_uj += charge.drawn;

            let rle_len = sidecar::encode_rle(&map).len() as u64;
            rle_range[p] = Some(match rle_range[p] {
                None => (rle_len, rle_len),
                Some((lo, hi)) => (lo.min(rle_len), hi.max(rle_len)),
            });

            let (triggered, change) = match &last_maps[p] {
                None => (true, None),
                Some(prev) => {
                    let check = detect_event(prev, &map, scenario.event_threshold)?;
                    (check.triggered, Some(check.change))
                }
            };
            if triggered {
                let depth = disparity_to_depth(&map, pair.focal_length, pair.baseline)?;
                let (sum, n) = depth
                    .depths
                    .iter()
                    .flatten()
                    .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
                events.push(EventRecord {
                    step,
                    pair: p,
                    change,
                    mean_depth_m: (n > 0).then(|| sum / n as f64),
                });
                run.totals.events += 1;
            }

            let payload = match scenario.policy {
                Policy::DisparityOnEvent if !triggered => None,
                Policy::DisparityOnEvent | Policy::DisparityAlways => Some(match scenario.encoding {
                    MapEncoding::Rle => Payload::DisparityRle(&map),
                    MapEncoding::Plain => Payload::Disparity(&map),
                }),
                Policy::RawAlways => Some(Payload::RawPair { width: w, height: h }),
            };
            if let Some(payload) = payload {
                run.transmit(step, p, &routes[p], &payload);
            }
            last_maps[p] = Some(map);
        }
    }

    let payload_sizes = scenario
        .frames
        .iter()
        .enumerate()
        .map(|(p, frames)| {
            let (w, h) = {
                let f = frames.frame(0);
                (f.0.width(), f.0.height())
            };
            let raw = transmission_bytes(&Payload::RawPair { width: w, height: h });
            PayloadSizes {
                pair: p,
                width: w,
                height: h,
                sidecar_bytes: sidecar::plain_len(w, h) as u64,
                rle_bytes_min: rle_range[p].map(|r| r.0),
                rle_bytes_max: rle_range[p].map(|r| r.1),
                raw_pair_bytes: raw,
                rle_smaller_than_raw: rle_range[p].is_some_and(|(_, hi)| hi < raw),
            }
        })
        .collect();

    let ledgers: Vec<NodeLedger> = run
        .nodes
        .iter()
        .zip(&run.ledgers)
        .map(|(n, s)| NodeLedger {
            id: n.id,
            role: n.role,
            initial_battery_uj: s.initial,
            final_battery_uj: n.battery(),
            processing_uj: s.processing,
            transmission_uj: s.transmission,
            deficit_uj: s.deficit,
            bytes_transmitted: s.bytes,
            died_at_step: s.died_at,
        })
        .collect();

    let mut report = SimReport {
        steps: steps as u64,
        policy: scenario.policy,
        encoding: scenario.encoding,
        lifetime: Lifetime::Survived,
        nodes: ledgers,
        events,
        transmissions: run.transmissions,
        skipped,
        payload_sizes,
        totals: run.totals,
    };
    report.lifetime = network_lifetime(&report);
    Ok(report)
}
