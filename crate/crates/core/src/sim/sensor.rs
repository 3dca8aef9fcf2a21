//! Emulated sensor node: turns declared ground truth into ADC captures and
//! runs them through the same conversion code as the booth firmware.

use crate::rng::{splitmix64, XorShift64Star};
use crate::vitals::{
    average_temperature, estimate_bpm, synth_ppg, synth_temperature_window, PpgParams,
    DEFAULT_REFRACTORY_MS, DEFAULT_THRESHOLD, PULSE_WINDOW_MS,
};

use super::scenario::SensorUpdate;

pub const DEFAULT_TRUTH_TEMP_C: f64 = 37.0;
pub const DEFAULT_TRUTH_BPM: u32 = 72;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSettings {
    pub vref_mv: u32,
    pub temp_noise_lsb: i64,
    pub pulse_fs_hz: u32,
    pub pulse_noise: f64,
    pub seed: u64,
}

/// One finished acquisition together with the truth it was taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capture {
    Temperature { deci_c: i32, truth_c: f64 },
    Pulse { bpm: Option<u32>, truth_bpm: u32 },
}

#[derive(Debug, Clone)]
pub struct SensorNode {
    settings: SensorSettings,
    pub temp_c: f64,
    pub bpm: u32,
    pub finger: bool,
    temp_rng: XorShift64Star,
    pulse_captures: u64,
}

impl SensorNode {
    pub fn new(settings: SensorSettings) -> Self {
        Self {
            settings,
            temp_c: DEFAULT_TRUTH_TEMP_C,
            bpm: DEFAULT_TRUTH_BPM,
            finger: false,
            temp_rng: XorShift64Star::new(settings.seed),
            pulse_captures: 0,
        }
    }

    pub fn settings(&self) -> &SensorSettings {
        &self.settings
    }

    pub fn apply(&mut self, update: SensorUpdate) {
        if let Some(t) = update.temp_c {
            self.temp_c = t;
        }
        if let Some(b) = update.bpm {
            self.bpm = b;
        }
        if let Some(f) = update.finger {
            self.finger = f;
        }
    }

    /// Averaged reading of a 16-sample window starting at `start_ms`.
    pub fn capture_temperature(&mut self, start_ms: u64) -> Capture {
        let s = self.settings;
        let window = synth_temperature_window(
            self.temp_c,
            s.vref_mv,
            s.temp_noise_lsb,
            start_ms,
            &mut self.temp_rng,
        );
        let deci_c = average_temperature(&window, s.vref_mv).expect("window is never empty");
        Capture::Temperature {
            deci_c,
            truth_c: self.temp_c,
        }
    }

    /// Full pulse window; without a finger there is nothing to detect.
    pub fn capture_pulse(&mut self) -> Capture {
        let s = self.settings;
        self.pulse_captures += 1;
        let bpm = self.finger.then(|| {
            let seed = splitmix64(s.seed ^ splitmix64(self.pulse_captures));
            let wave = synth_ppg(PpgParams::new(
                self.bpm,
                PULSE_WINDOW_MS,
                s.pulse_fs_hz,
                s.pulse_noise,
                seed,
            ));
            estimate_bpm(&wave, DEFAULT_THRESHOLD, DEFAULT_REFRACTORY_MS).ok()
        });
        Capture::Pulse {
            bpm: bpm.flatten(),
            truth_bpm: self.bpm,
        }
    }
}
