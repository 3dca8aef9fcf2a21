/// Virtual simulation clock in milliseconds. Only moves forward, and only when
/// the event loop says so.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimClock {
    now_ms: u64,
}

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    /// Moves to `t_ms`; earlier targets leave the clock where it is.
    pub fn advance_to(&mut self, t_ms: u64) {
        debug_assert!(t_ms >= self.now_ms, "clock moved backwards: {} -> {}", self.now_ms, t_ms);
        self.now_ms = self.now_ms.max(t_ms);
    }

    pub fn advance_by(&mut self, delta_ms: u64) {
        self.now_ms += delta_ms;
    }
}
