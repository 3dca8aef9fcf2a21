//! Text scenario format.
//!
//! One event per line: `<t_ms> <target> <action>[ <key>=<value>...]`.
//! Blank lines and `#` comments are ignored; times must not decrease.
//!
//! ```text
//! 0      sensor set set_temp_c=36.6 set_bpm=72 finger=on
//! 100    booth  key k=*
//! 20000  doctor press
//! 30000  power  loss
//! ```

use std::fmt;

use thiserror::Error;

use crate::booth::SERIAL_DWELL_MS;
use crate::keypad::{presses_for, Key, MULTITAP_TIMEOUT_MS};
use crate::vitals::{PULSE_WINDOW_MS, TEMP_SAMPLE_SPACING_MS, TEMP_WINDOW};

pub const TEMP_C_RANGE: std::ops::RangeInclusive<f64> = 0.0..=150.0;
pub const BPM_RANGE: std::ops::RangeInclusive<u32> = 20..=250;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

/// Ground-truth changes for the emulated body at the sensors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SensorUpdate {
    pub temp_c: Option<f64>,
    pub bpm: Option<u32>,
    pub finger: Option<bool>,
}

impl fmt::Display for SensorUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(t) = self.temp_c {
            parts.push(format!("set_temp_c={t}"));
        }
        if let Some(b) = self.bpm {
            parts.push(format!("set_bpm={b}"));
        }
        if let Some(on) = self.finger {
            parts.push(format!("finger={}", if on { "on" } else { "off" }));
        }
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Key(Key),
    Press,
    PowerLoss,
    Sensor(SensorUpdate),
}

impl Action {
    pub fn target(&self) -> &'static str {
        match self {
            Action::Key(_) => "booth",
            Action::Press => "doctor",
            Action::PowerLoss => "power",
            Action::Sensor(_) => "sensor",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Key(k) => write!(f, "booth key k={k}"),
            Action::Press => write!(f, "doctor press"),
            Action::PowerLoss => write!(f, "power loss"),
            Action::Sensor(u) => write!(f, "sensor set {u}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioEvent {
    pub t_ms: u64,
    pub action: Action,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn last_t_ms(&self) -> u64 {
        self.events.last().map_or(0, |e| e.t_ms)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ev in &self.events {
            writeln!(f, "{} {}", ev.t_ms, ev.action)?;
        }
        Ok(())
    }
}

pub fn parse_temp_c(value: &str) -> Result<f64, String> {
    let v: f64 = value.parse().map_err(|_| format!("bad temperature {value:?}"))?;
    if v.is_finite() && TEMP_C_RANGE.contains(&v) {
        Ok(v)
    } else {
        Err(format!("temperature {v} outside 0-150 C"))
    }
}

pub fn parse_bpm(value: &str) -> Result<u32, String> {
    let v: u32 = value.parse().map_err(|_| format!("bad bpm {value:?}"))?;
    if BPM_RANGE.contains(&v) {
        Ok(v)
    } else {
        Err(format!("bpm {v} outside 20-250"))
    }
}

pub fn parse_finger(value: &str) -> Result<bool, String> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(format!("finger must be on or off, got {value:?}")),
    }
}

fn parse_args<'a>(tokens: impl Iterator<Item = &'a str>) -> Result<Vec<(&'a str, &'a str)>, String> {
    tokens
        .map(|tok| {
            tok.split_once('=')
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| format!("expected key=value, got {tok:?}"))
        })
        .collect()
}

fn parse_action(target: &str, action: &str, rest: Vec<&str>) -> Result<Action, String> {
    let no_args = |a: Action| {
        if rest.is_empty() {
            Ok(a)
        } else {
            Err(format!("{target} {action} takes no arguments"))
        }
    };
    match (target, action) {
        ("booth", "key") => {
            let args = parse_args(rest.into_iter())?;
            match args.as_slice() {
                [("k", k)] => k.parse().map(Action::Key).map_err(|e| e.to_string()),
                _ => Err("booth key expects exactly k=<key>".to_string()),
            }
        }
        ("doctor", "press") => no_args(Action::Press),
        ("power", "loss") => no_args(Action::PowerLoss),
        ("sensor", _) => {
            // `sensor set a=b ...` or the shorthand `sensor a=b ...`
            let tokens: Vec<&str> = if action == "set" {
                rest
            } else if action.contains('=') {
                std::iter::once(action).chain(rest).collect()
            } else {
                return Err(format!("unknown sensor action {action:?}"));
            };
            let mut update = SensorUpdate::default();
            for (k, v) in parse_args(tokens.into_iter())? {
                match k {
                    "set_temp_c" => update.temp_c = Some(parse_temp_c(v)?),
                    "set_bpm" => update.bpm = Some(parse_bpm(v)?),
                    "finger" => update.finger = Some(parse_finger(v)?),
                    _ => return Err(format!("unknown sensor argument {k:?}")),
                }
            }
            if update == SensorUpdate::default() {
                return Err("sensor set needs at least one argument".to_string());
            }
            Ok(Action::Sensor(update))
        }
        ("booth" | "doctor" | "power", _) => Err(format!("unknown {target} action {action:?}")),
        _ => Err(format!("unknown target {target:?}")),
    }
}

pub fn load_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut events = Vec::new();
    let mut last_t = 0u64;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |reason: String| ParseError { line, reason };
        let content = raw.split('#').next().unwrap_or("");
        // a '#' key value would be cut by the comment rule
        let content = if raw.contains("k=#") { raw } else { content };
        let mut tokens = content.split_whitespace();
        let Some(t_tok) = tokens.next() else { continue };
        let t_ms: u64 = t_tok
            .parse()
            .map_err(|_| err(format!("bad timestamp {t_tok:?}")))?;
        if t_ms < last_t {
            return Err(err(format!("time {t_ms} is before previous event at {last_t}")));
        }
        let target = tokens.next().ok_or_else(|| err("missing target".into()))?;
        let action = tokens.next().ok_or_else(|| err("missing action".into()))?;
        let action = parse_action(target, action, tokens.collect()).map_err(err)?;
        last_t = t_ms;
        events.push(ScenarioEvent { t_ms, action });
    }
    Ok(Scenario { events })
}

/// Time from mobile confirmation until the booth is ready for the next
/// patient, plus a margin.
pub const REGISTRATION_TAIL_MS: u64 =
    TEMP_WINDOW as u64 * TEMP_SAMPLE_SPACING_MS + PULSE_WINDOW_MS + SERIAL_DWELL_MS + 500;

/// Scripted input sequences, written against the booth's key map.
#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    t_ms: u64,
    key_gap_ms: u64,
    events: Vec<ScenarioEvent>,
}

impl Default for ScenarioBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ScenarioBuilder {
    pub fn new() -> Self {
        Self {
            t_ms: 0,
            key_gap_ms: 100,
            events: Vec::new(),
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.t_ms
    }

    pub fn at(&mut self, t_ms: u64) -> &mut Self {
        assert!(t_ms >= self.t_ms, "scenario time must not go backwards");
        self.t_ms = t_ms;
        self
    }

    pub fn wait(&mut self, ms: u64) -> &mut Self {
        self.t_ms += ms;
        self
    }

    pub fn action(&mut self, action: Action) -> &mut Self {
        self.events.push(ScenarioEvent {
            t_ms: self.t_ms,
            action,
        });
        self
    }

    pub fn key(&mut self, key: Key) -> &mut Self {
        self.action(Action::Key(key));
        self.wait(self.key_gap_ms)
    }

    /// Presses each character of `keys` as a raw key.
    pub fn keys(&mut self, keys: &str) -> &mut Self {
        for c in keys.chars() {
            let key = Key::try_from(c).expect("keypad character");
            self.key(key);
        }
        self
    }

    /// Multi-tap entry of `name`, waiting out the timeout between letters
    /// that share a key.
    pub fn type_name(&mut self, name: &str) -> &mut Self {
        let mut prev: Option<u8> = None;
        for c in name.chars() {
            let (digit, presses) = presses_for(c).expect("character on the keypad");
            if prev == Some(digit) {
                self.wait(MULTITAP_TIMEOUT_MS);
            }
            for _ in 0..presses {
                self.key(Key::Digit(digit));
            }
            prev = Some(digit);
        }
        self
    }

    pub fn sensor(&mut self, update: SensorUpdate) -> &mut Self {
        self.action(Action::Sensor(update))
    }

    /// Full registration from Idle; leaves the clock after the serial
    /// display has timed out.
    pub fn register(&mut self, name: &str, age: u8, mobile: &str) -> &mut Self {
        self.key(Key::Star)
            .type_name(name)
            .key(Key::Hash)
            .keys(&age.to_string())
            .key(Key::Hash)
            .keys(mobile)
            .action(Action::Key(Key::Hash))
            .wait(REGISTRATION_TAIL_MS)
    }

    pub fn press(&mut self) -> &mut Self {
        self.action(Action::Press)
    }

    pub fn power_loss(&mut self) -> &mut Self {
        self.action(Action::PowerLoss)
    }

    pub fn build(&self) -> Scenario {
        Scenario {
            events: self.events.clone(),
        }
    }
}
