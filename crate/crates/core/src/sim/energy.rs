//! Volume-based energy accounting for radio and CPU work.

use serde::{Deserialize, Serialize};

use super::node::SensorNode;

/// Bytes in the 64 KiB reference volume the energy constants are quoted for.
pub const REFERENCE_VOLUME: f64 = 65536.0;

/// Energy per 64 KiB of data, in microjoules, scaled linearly by byte count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub tx_energy_per_64kb: f64,
    pub cpu_energy_per_64kb_processed: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            tx_energy_per_64kb: 377.0,
            cpu_energy_per_64kb_processed: 0.00195,
        }
    }
}

impl EnergyModel {
    pub fn is_valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        ok(self.tx_energy_per_64kb) && ok(self.cpu_energy_per_64kb_processed)
    }

    /// Radio energy per transmitted byte (µJ).
    pub fn tx_per_byte(&self) -> f64 {
        self.tx_energy_per_64kb / REFERENCE_VOLUME
    }

    /// CPU energy per processed byte (µJ).
    pub fn cpu_per_byte(&self) -> f64 {
        self.cpu_energy_per_64kb_processed / REFERENCE_VOLUME
    }

    pub fn transmission_cost(&self, bytes: u64) -> f64 {
        bytes as f64 * self.tx_per_byte()
    }

    pub fn processing_cost(&self, bytes: u64) -> f64 {
        bytes as f64 * self.cpu_per_byte()
    }
}

/// Outcome of debiting one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charge {
    /// Energy actually taken from the battery.
    pub drawn: f64,
    /// Part of the requested energy the battery could not cover.
    pub deficit: f64,
    /// The battery reached zero during this charge.
    pub died: bool,
}

impl Charge {
    pub const NONE: Charge = Charge {
        drawn: 0.0,
        deficit: 0.0,
        died: false,
    };
}

/// Debits `bytes` worth of processing from `node`.
pub fn charge_processing(node: &mut SensorNode, bytes: u64, model: &EnergyModel) -> Charge {
    node.debit(model.processing_cost(bytes))
}

/// Result of pushing one payload along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct HopCharges {
    /// `(sender index in the node list, energy drawn)` for every hop that ran.
    pub charges: Vec<(usize, Charge)>,
    /// Index into the path of the dead node that dropped the payload.
    pub dropped_at: Option<usize>,
}

impl HopCharges {
    pub fn delivered(&self) -> bool {
        self.dropped_at.is_none()
    }
}

/// Charges every transmitting node on `path` (all but the last) for `bytes`.
///
/// `path` holds indices into `nodes`. A node that dies on its own hop still
/// forwards the payload; a node that is already dead drops it and is not
/// charged.
pub fn charge_transmission(
    nodes: &mut [SensorNode],
    path: &[usize],
    bytes: u64,
    model: &EnergyModel,
) -> HopCharges {
    let cost = model.transmission_cost(bytes);
    let mut charges = Vec::with_capacity(path.len().saturating_sub(1));
    for (hop, &sender) in path.iter().enumerate().take(path.len().saturating_sub(1)) {
        let node = &mut nodes[sender];
        if !node.is_alive() {
            return HopCharges {
                charges,
                dropped_at: Some(hop),
            };
        }
        charges.push((sender, node.debit(cost)));
    }
    HopCharges {
        charges,
        dropped_at: None,
    }
}
