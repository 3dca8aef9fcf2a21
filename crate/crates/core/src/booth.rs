//! Patient-side registration state machine.
//!
//! ```text
//! Idle --*--> EnterName --#--> EnterAge --#--> EnterMobile --#--> MeasureTemp
//!   MeasureTemp --temp--> MeasurePulse --bpm--> ShowSerial | QueueFullNotice
//!   ShowSerial, QueueFullNotice --5 s--> Idle
//! ```
//!
//! `D` erases, `C` cancels back to Idle. A rejected confirmation keeps the
//! phase and shows "Invalid, Retry" on the second row for 1.5 s.

use serde::{Deserialize, Serialize};

use crate::keypad::{Key, KeypadEvent, MultiTap, MULTITAP_TIMEOUT_MS};
use crate::lcd::LcdBuffer;
use crate::queue::{
    validate_age, validate_mobile, validate_name, PatientData, PatientQueue, PatientRecord,
    QueueError, BPM_MAX, MOBILE_LEN, NAME_MAX_LEN, TEMP_MAX_DECI_C, TEMP_MIN_DECI_C,
};

pub const SERIAL_DWELL_MS: u64 = 5000;
pub const ERROR_DWELL_MS: u64 = 1500;
const AGE_MAX_DIGITS: usize = 3;
const SPINNER: [char; 4] = ['|', '/', '-', '\\'];
const SPINNER_STEP_MS: u64 = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoothPhase {
    Idle,
    EnterName,
    EnterAge,
    EnterMobile,
    MeasureTemp,
    MeasurePulse,
    ShowSerial,
    QueueFullNotice,
}

impl BoothPhase {
    pub const ALL: [BoothPhase; 8] = [
        BoothPhase::Idle,
        BoothPhase::EnterName,
        BoothPhase::EnterAge,
        BoothPhase::EnterMobile,
        BoothPhase::MeasureTemp,
        BoothPhase::MeasurePulse,
        BoothPhase::ShowSerial,
        BoothPhase::QueueFullNotice,
    ];

    pub fn is_entry(self) -> bool {
        matches!(
            self,
            BoothPhase::EnterName | BoothPhase::EnterAge | BoothPhase::EnterMobile
        )
    }

    pub fn is_measuring(self) -> bool {
        matches!(self, BoothPhase::MeasureTemp | BoothPhase::MeasurePulse)
    }
}

/// Result of a sensor acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensorReading {
    /// Averaged temperature in tenths of °C.
    Temperature(i32),
    /// `None` when no usable pulse was captured.
    Pulse(Option<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoothInput {
    Key(KeypadEvent),
    SensorDone { t_ms: u64, reading: SensorReading },
    Tick(u64),
}

impl BoothInput {
    pub fn t_ms(&self) -> u64 {
        match *self {
            BoothInput::Key(ev) => ev.t_ms,
            BoothInput::SensorDone { t_ms, .. } => t_ms,
            BoothInput::Tick(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    None,
    StartTempMeasurement,
    StartPulseMeasurement,
    Enqueue(PatientRecord),
    /// Registration completed but the queue had no room.
    QueueFull,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoothOutput {
    pub lcd: LcdBuffer,
    pub effect: Effect,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoothState {
    pub phase: BoothPhase,
    pub name: String,
    pub age: String,
    pub mobile: String,
    pub multitap: MultiTap,
    pub temp_deci_c: Option<i16>,
    pub serial: Option<u16>,
    pub now_ms: u64,
    pub phase_since_ms: u64,
    pub error_until_ms: Option<u64>,
}

impl Default for BoothState {
    fn default() -> Self {
        Self::new(0)
    }
}

impl BoothState {
    pub fn new(t_ms: u64) -> Self {
        Self {
            phase: BoothPhase::Idle,
            name: String::new(),
            age: String::new(),
            mobile: String::new(),
            multitap: MultiTap::default(),
            temp_deci_c: None,
            serial: None,
            now_ms: t_ms,
            phase_since_ms: t_ms,
            error_until_ms: None,
        }
    }

    /// Back to Idle with every buffer cleared.
    pub fn reset(&mut self, t_ms: u64) {
        *self = Self::new(t_ms.max(self.now_ms));
    }

    fn enter(&mut self, phase: BoothPhase) {
        self.phase = phase;
        self.phase_since_ms = self.now_ms;
        self.error_until_ms = None;
        self.multitap.discard();
    }

    fn reject(&mut self) {
        self.error_until_ms = Some(self.now_ms + ERROR_DWELL_MS);
    }

    /// Earliest time at which a [`BoothInput::Tick`] would change the state.
    pub fn next_deadline(&self) -> Option<u64> {
        let dwell = matches!(self.phase, BoothPhase::ShowSerial | BoothPhase::QueueFullNotice)
            .then_some(self.phase_since_ms + SERIAL_DWELL_MS);
        let multitap = (self.phase == BoothPhase::EnterName)
            .then(|| self.multitap.deadline())
            .flatten();
        [dwell, multitap, self.error_until_ms].into_iter().flatten().min()
    }

    pub fn step(&mut self, input: BoothInput, queue: &mut PatientQueue) -> BoothOutput {
        self.now_ms = self.now_ms.max(input.t_ms());
        let now = self.now_ms;
        if self.error_until_ms.is_some_and(|until| now >= until) {
            self.error_until_ms = None;
        }
        let effect = match input {
            BoothInput::Tick(_) => {
                self.on_tick();
                Effect::None
            }
            BoothInput::Key(ev) => self.on_key(ev.key),
            BoothInput::SensorDone { reading, .. } => self.on_sensor(reading, queue),
        };
        BoothOutput {
            lcd: self.render(),
            effect,
        }
    }

    fn on_tick(&mut self) {
        let now = self.now_ms;
        match self.phase {
            BoothPhase::EnterName => {
                if let Some(c) = self.multitap.expire(now) {
                    self.name.push(c);
                }
            }
            BoothPhase::ShowSerial | BoothPhase::QueueFullNotice
                if now >= self.phase_since_ms + SERIAL_DWELL_MS =>
            {
                self.reset(now);
            }
            _ => {}
        }
    }

    fn on_key(&mut self, key: Key) -> Effect {
        let now = self.now_ms;
        match self.phase {
            BoothPhase::Idle => {
                if key == Key::Star {
                    self.reset(now);
                    self.enter(BoothPhase::EnterName);
                }
                Effect::None
            }
            phase if phase.is_entry() => {
                self.error_until_ms = None;
                match key {
                    Key::C => {
                        self.reset(now);
                        Effect::None
                    }
                    Key::D => {
                        self.backspace();
                        Effect::None
                    }
                    Key::Hash => self.confirm(),
                    Key::Digit(d) => {
                        self.type_digit(d);
                        Effect::None
                    }
                    _ => Effect::None,
                }
            }
            phase if phase.is_measuring() => {
                if key == Key::C {
                    self.reset(now);
                }
                Effect::None
            }
            _ => Effect::None,
        }
    }

    fn backspace(&mut self) {
        match self.phase {
            BoothPhase::EnterName => {
                if self.multitap.pending.is_some() {
                    self.multitap.discard();
                } else {
                    self.name.pop();
                }
            }
            BoothPhase::EnterAge => {
                self.age.pop();
            }
            BoothPhase::EnterMobile => {
                self.mobile.pop();
            }
            _ => {}
        }
    }

    fn type_digit(&mut self, d: u8) {
        let now = self.now_ms;
        match self.phase {
            BoothPhase::EnterName => {
                let cycling = self
                    .multitap
                    .pending
                    .is_some_and(|p| p.digit == d && now - p.last_t_ms <= MULTITAP_TIMEOUT_MS);
                if !cycling {
                    if let Some(c) = self.multitap.commit() {
                        self.name.push(c);
                    }
                    if self.name.len() >= NAME_MAX_LEN {
                        return;
                    }
                }
                let committed = self.multitap.press(d, now);
                debug_assert!(committed.is_none());
            }
            BoothPhase::EnterAge => {
                if self.age.len() < AGE_MAX_DIGITS {
                    self.age.push(char::from(b'0' + d));
                }
            }
            BoothPhase::EnterMobile if self.mobile.len() < MOBILE_LEN => {
                self.mobile.push(char::from(b'0' + d));
            }
            _ => {}
        }
    }

    fn confirm(&mut self) -> Effect {
        match self.phase {
            BoothPhase::EnterName => {
                if let Some(c) = self.multitap.commit() {
                    self.name.push(c);
                }
                if validate_name(&self.name).is_ok() {
                    self.enter(BoothPhase::EnterAge);
                } else {
                    self.reject();
                }
                Effect::None
            }
            BoothPhase::EnterAge => {
                match self.parsed_age() {
                    Some(_) => self.enter(BoothPhase::EnterMobile),
                    None => self.reject(),
                }
                Effect::None
            }
            BoothPhase::EnterMobile => {
                if validate_mobile(&self.mobile).is_ok() {
                    self.enter(BoothPhase::MeasureTemp);
                    Effect::StartTempMeasurement
                } else {
                    self.reject();
                    Effect::None
                }
            }
            _ => Effect::None,
        }
    }

    fn parsed_age(&self) -> Option<u8> {
        let age: u8 = self.age.parse().ok()?;
        validate_age(age).ok().map(|_| age)
    }

    fn on_sensor(&mut self, reading: SensorReading, queue: &mut PatientQueue) -> Effect {
        match (self.phase, reading) {
            (BoothPhase::MeasureTemp, SensorReading::Temperature(deci)) => {
                let window = i32::from(TEMP_MIN_DECI_C)..=i32::from(TEMP_MAX_DECI_C);
                if window.contains(&deci) {
                    self.temp_deci_c = Some(deci as i16);
                    self.enter(BoothPhase::MeasurePulse);
                    Effect::StartPulseMeasurement
                } else {
                    self.reject();
                    Effect::StartTempMeasurement
                }
            }
            (BoothPhase::MeasurePulse, SensorReading::Pulse(Some(bpm)))
                if (1..=u32::from(BPM_MAX)).contains(&bpm) =>
            {
                self.register(bpm as u8, queue)
            }
            (BoothPhase::MeasurePulse, SensorReading::Pulse(_)) => {
                self.reject();
                Effect::StartPulseMeasurement
            }
            _ => Effect::None,
        }
    }

    fn register(&mut self, bpm: u8, queue: &mut PatientQueue) -> Effect {
        let data = PatientData {
            name_code: self.name.clone(),
            age: self.parsed_age().unwrap_or_default(),
            mobile: self.mobile.clone(),
            temp_deci_c: self.temp_deci_c.unwrap_or_default(),
            bpm,
        };
        match queue.enqueue(data.clone()) {
            Ok(serial) => {
                self.serial = Some(serial);
                self.enter(BoothPhase::ShowSerial);
                Effect::Enqueue(data.with_serial(serial))
            }
            Err(QueueError::Full) => {
                self.enter(BoothPhase::QueueFullNotice);
                Effect::QueueFull
            }
            Err(_) => {
                self.reject();
                Effect::StartPulseMeasurement
            }
        }
    }

    fn spinner(&self) -> String {
        let frame = SPINNER[((self.now_ms / SPINNER_STEP_MS) % SPINNER.len() as u64) as usize];
        format!("Please wait {frame}")
    }

    pub fn render(&self) -> LcdBuffer {
        let (top, mut bottom) = match self.phase {
            BoothPhase::Idle => ("Press * to Start".to_string(), String::new()),
            BoothPhase::EnterName => {
                let mut live = self.name.clone();
                live.extend(self.multitap.candidate());
                ("Enter Name:".to_string(), LcdBuffer::tail(&live).to_string())
            }
            BoothPhase::EnterAge => ("Enter Age:".to_string(), self.age.clone()),
            BoothPhase::EnterMobile => {
                ("Enter Mobile:".to_string(), LcdBuffer::tail(&self.mobile).to_string())
            }
            BoothPhase::MeasureTemp => ("Measuring Temp...".to_string(), self.spinner()),
            BoothPhase::MeasurePulse => ("Place Finger on Sensor".to_string(), self.spinner()),
            BoothPhase::ShowSerial => (
                format!("Your Serial: {}", self.serial.unwrap_or_default()),
                "Please wait".to_string(),
            ),
            BoothPhase::QueueFullNotice => ("Queue Full".to_string(), "Please try later".to_string()),
        };
        if self.error_until_ms.is_some() {
            bottom = "Invalid, Retry".to_string();
        }
        LcdBuffer::new(&top, &bottom)
    }
}

pub fn render_lcd(state: &BoothState) -> LcdBuffer {
    state.render()
}

/// Functional form of [`BoothState::step`].
pub fn booth_step(
    state: &BoothState,
    input: BoothInput,
    queue: &mut PatientQueue,
) -> (BoothState, BoothOutput) {
    let mut next = state.clone();
    let out = next.step(input, queue);
    (next, out)
}
