use serde::{Deserialize, Serialize};

use crate::booth::BoothPhase;
use crate::lcd::LcdBuffer;

/// Immutable copy of the observable state at `t_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t_ms: u64,
    pub booth: BoothView,
    pub doctor: DoctorView,
    pub queue: QueueView,
    pub link: LinkView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoothView {
    pub phase: BoothPhase,
    pub lcd: LcdBuffer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoctorView {
    pub lcd: LcdBuffer,
    pub last_latency_ms: Option<u32>,
    /// Hex dump of the last frame received.
    pub last_frame: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueView {
    pub count: usize,
    pub capacity: usize,
    pub next_serial: u32,
    pub serials: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkView {
    pub f_osc: u32,
    pub baud: u32,
    pub u2x: bool,
    pub error_pct: f64,
    pub usable: bool,
}

impl Snapshot {
    /// Same state, ignoring the timestamp.
    pub fn same_state(&self, other: &Snapshot) -> bool {
        self.booth == other.booth
            && self.doctor == other.doctor
            && self.queue == other.queue
            && self.link == other.link
    }
}
