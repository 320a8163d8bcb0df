use std::fmt;

use serde::{Deserialize, Serialize};

use super::energy::Charge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Camera,
    Relay,
    /// Mains-powered collection point; never charged and never counted
    /// towards network lifetime.
    Sink,
}

/// A battery-powered (or, for the sink, mains-powered) network node.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    pub id: NodeId,
    /// Metres; used for topology construction and reporting only.
    pub position: [f64; 2],
    pub role: NodeRole,
    battery: f64,
    alive: bool,
}

impl SensorNode {
    /// A node with `battery` microjoules. A non-sink node starting at zero is
    /// already dead.
    pub fn new(id: NodeId, position: [f64; 2], battery: f64, role: NodeRole) -> Self {
        let battery = battery.max(0.0);
        Self {
            id,
            position,
            role,
            battery,
            alive: role == NodeRole::Sink || battery > 0.0,
        }
    }

    pub fn battery(&self) -> f64 {
        self.battery
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    /// Takes up to `amount` µJ from the battery. The battery never goes below
    /// zero; whatever it could not cover is returned as deficit.
    pub fn debit(&mut self, amount: f64) -> Charge {
        if !self.alive || amount <= 0.0 {
            return Charge::NONE;
        }
        if self.role == NodeRole::Sink {
            return Charge::NONE;
        }
        if amount >= self.battery {
            let drawn = self.battery;
            self.battery = 0.0;
            self.alive = false;
            Charge {
                drawn,
                deficit: amount - drawn,
                died: true,
            }
        } else {
            self.battery -= amount;
            Charge {
                drawn: amount,
                deficit: 0.0,
                died: false,
            }
        }
    }
}
