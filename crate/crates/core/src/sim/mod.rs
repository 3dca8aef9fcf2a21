//! Discrete-event simulation of the two-node kiosk.
//!
//! Scenario events and internally scheduled completions (sensor windows,
//! booth timeouts) are processed in virtual-time order. Internal events due
//! at or before a scenario event's time run first.

mod clock;
pub mod report;
pub mod scenario;
pub mod sensor;
pub mod snapshot;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::booth::{BoothInput, BoothOutput, BoothPhase, BoothState, Effect, SensorReading};
use crate::doctor::{DoctorState, LatencyModel, PressOutcome};
use crate::keypad::{Key, KeypadEvent};
use crate::lcd::LcdBuffer;
use crate::queue::{PatientQueue, PatientRecord, DEFAULT_CAPACITY};
use crate::uart::{UartConfig, UartError, F_OSC_8MHZ};
use crate::vitals::{
    DEFAULT_PULSE_FS_HZ, DEFAULT_VREF_MV, PULSE_WINDOW_MS, TEMP_SAMPLE_SPACING_MS, TEMP_WINDOW,
};

pub use clock::SimClock;
pub use report::{report_counts, report_table, MetricsReport};
pub use scenario::{load_scenario, Action, ParseError, Scenario, ScenarioBuilder, SensorUpdate};
pub use sensor::{Capture, SensorNode, SensorSettings};
pub use snapshot::Snapshot;

pub const TEMP_CAPTURE_MS: u64 = TEMP_WINDOW as u64 * TEMP_SAMPLE_SPACING_MS;
/// Longest stretch simulated after the last scenario event.
pub const DRAIN_HORIZON_MS: u64 = 60_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Uart(#[from] UartError),
    #[error("queue capacity must be at least 1")]
    ZeroCapacity,
    #[error("vref must be positive")]
    ZeroVref,
    #[error("pulse sampling rate {0} Hz outside 50-1000 Hz")]
    PulseRate(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub f_osc_hz: u32,
    pub baud: u32,
    pub u2x: bool,
    pub vref_mv: u32,
    pub capacity: usize,
    pub seed: u64,
    pub pulse_fs_hz: u32,
    pub pulse_noise: f64,
    pub temp_noise_lsb: i64,
    pub latency: LatencyModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            f_osc_hz: F_OSC_8MHZ,
            baud: 9600,
            u2x: false,
            vref_mv: DEFAULT_VREF_MV,
            capacity: DEFAULT_CAPACITY,
            seed: 1,
            pulse_fs_hz: DEFAULT_PULSE_FS_HZ,
            pulse_noise: 0.05,
            temp_noise_lsb: 1,
            latency: LatencyModel::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<UartConfig, SimError> {
        if self.capacity == 0 {
            return Err(SimError::ZeroCapacity);
        }
        if self.vref_mv == 0 {
            return Err(SimError::ZeroVref);
        }
        if !(50..=1000).contains(&self.pulse_fs_hz) {
            return Err(SimError::PulseRate(self.pulse_fs_hz));
        }
        Ok(UartConfig::new(self.f_osc_hz, self.baud, self.u2x)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Measurement {
    Temperature,
    Pulse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Completion {
    token: u64,
    capture: Capture,
}

/// Run counters beyond the report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub registrations_completed: u32,
    pub lost_to_power_loss: u32,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    clock: SimClock,
    booth: BoothState,
    doctor: DoctorState,
    queue: PatientQueue,
    link: UartConfig,
    latency: LatencyModel,
    sensors: SensorNode,
    pending: BTreeMap<(u64, u64), Completion>,
    seq: u64,
    active: Option<(u64, Measurement)>,
    tick_at: Option<u64>,
    last_booth_lcd: LcdBuffer,
    report: MetricsReport,
    tally: Tally,
    dequeued: Vec<PatientRecord>,
    log: Vec<String>,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        let link = config.validate()?;
        let booth = BoothState::new(0);
        let mut sim = Self {
            clock: SimClock::new(),
            last_booth_lcd: booth.render(),
            booth,
            doctor: DoctorState::default(),
            queue: PatientQueue::new(config.capacity),
            link,
            latency: config.latency,
            sensors: SensorNode::new(SensorSettings {
                vref_mv: config.vref_mv,
                temp_noise_lsb: config.temp_noise_lsb,
                pulse_fs_hz: config.pulse_fs_hz,
                pulse_noise: config.pulse_noise,
                seed: config.seed,
            }),
            pending: BTreeMap::new(),
            seq: 0,
            active: None,
            tick_at: None,
            report: MetricsReport {
                uart_error_pct: link.error_pct(),
                ..Default::default()
            },
            tally: Tally::default(),
            dequeued: Vec::new(),
            log: Vec::new(),
        };
        sim.log_link();
        sim.log_line("booth", format!("lcd {}", sim.last_booth_lcd));
        Ok(sim)
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn booth(&self) -> &BoothState {
        &self.booth
    }

    pub fn doctor(&self) -> &DoctorState {
        &self.doctor
    }

    pub fn queue(&self) -> &PatientQueue {
        &self.queue
    }

    pub fn link(&self) -> &UartConfig {
        &self.link
    }

    pub fn sensors(&self) -> &SensorNode {
        &self.sensors
    }

    pub fn report(&self) -> &MetricsReport {
        &self.report
    }

    pub fn tally(&self) -> Tally {
        self.tally
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    /// Records delivered to the doctor, in display order.
    pub fn dequeued(&self) -> &[PatientRecord] {
        &self.dequeued
    }

    fn log_line(&mut self, source: &str, text: String) {
        self.log
            .push(format!("{:>9} {:<6} {}", self.clock.now_ms(), source, text));
    }

    fn log_link(&mut self) {
        let l = self.link;
        self.log_line(
            "link",
            format!(
                "f_osc={} baud={} u2x={} ubrr={} error={:+.2}%",
                l.f_osc_hz,
                l.target_baud,
                l.u2x,
                l.ubrr,
                l.error_pct()
            ),
        );
    }

    fn next_internal(&self) -> Option<u64> {
        let completion = self.pending.keys().next().map(|&(t, _)| t);
        [completion, self.tick_at].into_iter().flatten().min()
    }

    /// True while something is scheduled.
    pub fn has_pending(&self) -> bool {
        self.next_internal().is_some()
    }

    /// Processes every internal event due at or before `t_ms` and leaves the
    /// clock at `t_ms`.
    pub fn advance_to(&mut self, t_ms: u64) {
        while let Some(due) = self.next_internal().filter(|&due| due <= t_ms) {
            self.clock.advance_to(due);
            let first = self.pending.first_key_value().map(|(&k, _)| k);
            match first {
                Some(key) if key.0 == due => {
                    let done = self.pending.remove(&key).expect("key present");
                    self.complete(done);
                }
                _ => {
                    self.tick_at = None;
                    self.booth_step(BoothInput::Tick(due));
                }
            }
        }
        self.clock.advance_to(t_ms);
    }

    /// Runs internal events until nothing is scheduled or `horizon_ms` has
    /// passed.
    pub fn drain(&mut self, horizon_ms: u64) {
        let limit = self.now_ms() + horizon_ms;
        while let Some(due) = self.next_internal().filter(|&due| due <= limit) {
            self.advance_to(due);
        }
    }

    /// Advances to `t_ms` and applies `action` there.
    pub fn apply(&mut self, t_ms: u64, action: Action) {
        self.advance_to(t_ms);
        match action {
            Action::Key(key) => {
                self.log_line("booth", format!("key {key}"));
                self.booth_step(BoothInput::Key(KeypadEvent { key, t_ms }));
            }
            Action::Press => self.press_next(),
            Action::PowerLoss => self.power_loss(),
            Action::Sensor(update) => self.sensor_update(update),
        }
    }

    pub fn set_link(&mut self, link: UartConfig) {
        self.link = link;
        self.report.uart_error_pct = link.error_pct();
        self.log_link();
    }

    fn schedule(&mut self, at_ms: u64, completion: Completion) {
        self.seq += 1;
        self.pending.insert((at_ms, self.seq), completion);
    }

    fn start(&mut self, kind: Measurement) {
        let now = self.now_ms();
        self.seq += 1;
        let token = self.seq;
        self.active = Some((token, kind));
        let (at, capture) = match kind {
            Measurement::Temperature => (
                now + TEMP_CAPTURE_MS,
                self.sensors.capture_temperature(now),
            ),
            Measurement::Pulse => (now + PULSE_WINDOW_MS, self.sensors.capture_pulse()),
        };
        self.schedule(at, Completion { token, capture });
    }

    fn complete(&mut self, done: Completion) {
        if self.active.map(|(token, _)| token) != Some(done.token) {
            return;
        }
        self.active = None;
        let reading = match done.capture {
            Capture::Temperature { deci_c, truth_c } => {
                self.report
                    .record_temp_error(f64::from(deci_c) - truth_c * 10.0);
                self.log_line("sensor", format!("temp {deci_c} deci-C (truth {truth_c})"));
                SensorReading::Temperature(deci_c)
            }
            Capture::Pulse { bpm, truth_bpm } => {
                match bpm {
                    Some(b) => {
                        self.report.record_bpm_error(b.abs_diff(truth_bpm));
                        self.log_line("sensor", format!("pulse {b} bpm (truth {truth_bpm})"));
                    }
                    None => self.log_line("sensor", "pulse none".to_string()),
                }
                SensorReading::Pulse(bpm)
            }
        };
        let t_ms = self.now_ms();
        self.booth_step(BoothInput::SensorDone { t_ms, reading });
    }

    fn booth_step(&mut self, input: BoothInput) {
        let BoothOutput { lcd, effect } = self.booth.step(input, &mut self.queue);
        if lcd != self.last_booth_lcd {
            self.log_line("booth", format!("lcd {lcd}"));
            self.last_booth_lcd = lcd;
        }
        match effect {
            Effect::None => {}
            Effect::StartTempMeasurement => {
                self.log_line("booth", "start temp".to_string());
                self.start(Measurement::Temperature);
            }
            Effect::StartPulseMeasurement => {
                self.log_line("booth", "start pulse".to_string());
                self.start(Measurement::Pulse);
            }
            Effect::Enqueue(record) => {
                self.tally.registrations_completed += 1;
                self.log_line(
                    "queue",
                    format!("enqueue serial={} len={}", record.serial, self.queue.len()),
                );
            }
            Effect::QueueFull => {
                self.tally.registrations_completed += 1;
                self.report.queue_overflows += 1;
                self.log_line("queue", "full, registration rejected".to_string());
            }
        }
        if !self.booth.phase.is_measuring() {
            self.active = None;
        }
        self.tick_at = self.booth.next_deadline().map(|t| t.max(self.now_ms() + 1));
    }

    fn press_next(&mut self) {
        self.log_line("doctor", "press".to_string());
        let channel = self.link.channel();
        let outcome = self
            .doctor
            .press_next(&mut self.queue, &channel, &self.latency);
        match outcome {
            PressOutcome::Displayed {
                record, latency_ms, ..
            } => {
                self.report.record_latency(latency_ms);
                self.report.patients_processed += 1;
                self.log_line(
                    "doctor",
                    format!("serial={} latency={latency_ms}ms", record.serial),
                );
                self.dequeued.push(record);
            }
            PressOutcome::NoPatients { latency_ms } => {
                self.report.record_latency(latency_ms);
                self.log_line("doctor", format!("no patients latency={latency_ms}ms"));
            }
            PressOutcome::LinkError(e) => self.log_line("doctor", format!("link error: {e}")),
            PressOutcome::FrameRejected(e) => {
                self.log_line("doctor", format!("frame rejected: {e}"))
            }
        }
        self.log_line("doctor", format!("lcd {}", self.doctor.display));
    }

    fn power_loss(&mut self) {
        let lost = self.queue.len();
        self.tally.lost_to_power_loss += lost as u32;
        self.queue.power_loss();
        self.booth.reset(self.now_ms());
        self.doctor = DoctorState::default();
        self.pending.clear();
        self.active = None;
        self.tick_at = None;
        self.last_booth_lcd = self.booth.render();
        self.log_line("power", format!("loss, {lost} queued records cleared"));
        self.log_line("booth", format!("lcd {}", self.last_booth_lcd));
        self.log_line("doctor", format!("lcd {}", self.doctor.display));
    }

    fn sensor_update(&mut self, update: SensorUpdate) {
        self.sensors.apply(update);
        self.log_line("sensor", format!("set {update}"));
        // lifting the finger aborts a running pulse capture
        if update.finger == Some(false) {
            if let Some((token, Measurement::Pulse)) = self.active {
                self.pending.retain(|_, c| c.token != token);
                let capture = Capture::Pulse {
                    bpm: None,
                    truth_bpm: self.sensors.bpm,
                };
                self.complete(Completion { token, capture });
            }
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        use snapshot::{BoothView, DoctorView, LinkView, QueueView};
        Snapshot {
            t_ms: self.now_ms(),
            booth: BoothView {
                phase: self.booth.phase,
                lcd: self.booth.render(),
            },
            doctor: DoctorView {
                lcd: self.doctor.display.clone(),
                last_latency_ms: self.doctor.last_latency_ms,
                last_frame: self.doctor.last_frame.map(|f| f.to_hex()),
            },
            queue: QueueView {
                count: self.queue.len(),
                capacity: self.queue.capacity(),
                next_serial: self.queue.next_serial(),
                serials: self.queue.serials(),
            },
            link: LinkView {
                f_osc: self.link.f_osc_hz,
                baud: self.link.target_baud,
                u2x: self.link.u2x,
                error_pct: self.link.error_pct(),
                usable: self.link.usable(),
            },
        }
    }

    pub fn booth_phase(&self) -> BoothPhase {
        self.booth.phase
    }

    pub fn into_outcome(self) -> SimOutcome {
        SimOutcome {
            report: self.report,
            log: self.log,
            dequeued: self.dequeued,
            tally: self.tally,
            final_queue_len: self.queue.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub report: MetricsReport,
    pub log: Vec<String>,
    pub dequeued: Vec<PatientRecord>,
    pub tally: Tally,
    pub final_queue_len: usize,
}

impl SimOutcome {
    pub fn log_text(&self) -> String {
        let mut out = String::new();
        for line in &self.log {
            let _ = writeln!(out, "{line}");
        }
        out
    }

    /// Every completed registration is accounted for exactly once.
    pub fn conserved(&self) -> bool {
        let r = &self.report;
        r.patients_processed
            + self.final_queue_len as u32
            + r.queue_overflows
            + self.tally.lost_to_power_loss
            == self.tally.registrations_completed
    }
}

/// Batch run of a whole scenario.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<SimOutcome, SimError> {
    let mut sim = Simulation::new(config)?;
    for ev in &scenario.events {
        sim.apply(ev.t_ms, ev.action);
    }
    sim.drain(DRAIN_HORIZON_MS);
    Ok(sim.into_outcome())
}

/// Convenience for scripted keys at fixed spacing.
pub fn key_action(c: char) -> Action {
    Action::Key(Key::try_from(c).expect("keypad character"))
}
