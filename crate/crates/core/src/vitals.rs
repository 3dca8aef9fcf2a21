//! Sensor acquisition: LM35 temperature conversion and pulse-waveform beat
//! detection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::XorShift64Star;

pub const ADC_MAX: u16 = 1023;
const ADC_STEPS: u32 = 1024;

pub const DEFAULT_VREF_MV: u32 = 5000;
/// Samples per averaged temperature reading.
pub const TEMP_WINDOW: usize = 16;
pub const TEMP_SAMPLE_SPACING_MS: u64 = 10;

/// Midway between the synthetic baseline and peak.
pub const DEFAULT_THRESHOLD: u16 = 550;
/// 240 ms caps detection at 250 BPM.
pub const DEFAULT_REFRACTORY_MS: u32 = 240;
pub const DEFAULT_PULSE_FS_HZ: u32 = 500;
pub const PULSE_WINDOW_MS: u64 = 10_000;

pub const MIN_BEAT_MS: u32 = 240;
pub const MAX_BEAT_MS: u32 = 3000;

pub const PPG_BASELINE: f64 = 400.0;
pub const PPG_PEAK: f64 = 700.0;
/// Fraction of each period occupied by the pulse.
pub const PPG_PULSE_WIDTH: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VitalsError {
    #[error("empty sample window")]
    EmptyWindow,
    #[error("beat interval {0} ms outside 240-3000 ms")]
    OutOfRange(u32),
    #[error("only {0} beats detected, need at least 3")]
    InsufficientBeats(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdcSample {
    pub value: u16,
    pub t_ms: u64,
}

impl AdcSample {
    pub fn new(value: u16, t_ms: u64) -> Self {
        debug_assert!(value <= ADC_MAX);
        Self {
            value: value.min(ADC_MAX),
            t_ms,
        }
    }
}

/// Milliseconds between two consecutive detected peaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeatInterval(u32);

impl BeatInterval {
    pub fn new(t_beat_ms: u32) -> Result<Self, VitalsError> {
        if (MIN_BEAT_MS..=MAX_BEAT_MS).contains(&t_beat_ms) {
            Ok(Self(t_beat_ms))
        } else {
            Err(VitalsError::OutOfRange(t_beat_ms))
        }
    }

    pub fn ms(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitalsReading {
    pub temp_deci_c: i16,
    pub bpm: u8,
}

/// 10 mV/°C sensor: millivolts and tenths of a degree are numerically equal,
/// so the result is `round(adc * vref_mv / 1024)`.
pub fn lm35_to_deci_celsius(adc: u16, vref_mv: u32) -> i32 {
    let adc = u64::from(adc.min(ADC_MAX));
    let num = adc * u64::from(vref_mv);
    ((num + u64::from(ADC_STEPS / 2)) / u64::from(ADC_STEPS)) as i32
}

/// Averages the raw counts (half-up) and converts the mean once.
pub fn average_temperature(samples: &[AdcSample], vref_mv: u32) -> Result<i32, VitalsError> {
    if samples.is_empty() {
        return Err(VitalsError::EmptyWindow);
    }
    let n = samples.len() as u64;
    let sum: u64 = samples.iter().map(|s| u64::from(s.value)).sum();
    let mean = (sum + n / 2) / n;
    Ok(lm35_to_deci_celsius(mean as u16, vref_mv))
}

/// Timestamps of rising threshold crossings, at least `refractory_ms` apart.
pub fn detect_beats(waveform: &[AdcSample], threshold: u16, refractory_ms: u32) -> Vec<u64> {
    let mut beats: Vec<u64> = Vec::new();
    for pair in waveform.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        if prev.value < threshold && cur.value >= threshold {
            let clear = beats
                .last()
                .is_none_or(|&last| cur.t_ms - last >= u64::from(refractory_ms));
            if clear {
                beats.push(cur.t_ms);
            }
        }
    }
    beats
}

pub fn bpm_from_interval(interval: BeatInterval) -> u32 {
    let t = interval.ms();
    (60_000 + t / 2) / t
}

/// BPM from the median inter-beat interval.
pub fn estimate_bpm(
    waveform: &[AdcSample],
    threshold: u16,
    refractory_ms: u32,
) -> Result<u32, VitalsError> {
    let beats = detect_beats(waveform, threshold, refractory_ms);
    if beats.len() < 3 {
        return Err(VitalsError::InsufficientBeats(beats.len()));
    }
    let mut intervals: Vec<u64> = beats.windows(2).map(|w| w[1] - w[0]).collect();
    intervals.sort_unstable();
    let mid = intervals.len() / 2;
    let median = if intervals.len().is_multiple_of(2) {
        (intervals[mid - 1] + intervals[mid]) as f64 / 2.0
    } else {
        intervals[mid] as f64
    };
    if !(f64::from(MIN_BEAT_MS)..=f64::from(MAX_BEAT_MS)).contains(&median) {
        return Err(VitalsError::OutOfRange(median.round() as u32));
    }
    Ok((60_000.0 / median).round() as u32)
}

/// Parameters for [`synth_ppg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpgParams {
    pub bpm: u32,
    pub duration_ms: u64,
    pub fs_hz: u32,
    /// Noise amplitude as a fraction of the 300-count pulse height.
    pub noise_amp: f64,
    pub seed: u64,
}

impl PpgParams {
    pub fn new(bpm: u32, duration_ms: u64, fs_hz: u32, noise_amp: f64, seed: u64) -> Self {
        Self {
            bpm,
            duration_ms,
            fs_hz,
            noise_amp,
            seed,
        }
    }
}

/// Noise-free pulse value at `t_ms`: a half-sine lobe over the first 20% of
/// each period, flat baseline elsewhere.
pub fn ppg_shape(bpm: u32, t_ms: u64) -> f64 {
    // phase numerator in units of 1/60000 period, exact for integer t and bpm
    let phase_num = (t_ms * u64::from(bpm)) % 60_000;
    let phase = phase_num as f64 / 60_000.0;
    if phase < PPG_PULSE_WIDTH {
        PPG_BASELINE + (PPG_PEAK - PPG_BASELINE) * (PI * phase / PPG_PULSE_WIDTH).sin()
    } else {
        PPG_BASELINE
    }
}

/// Deterministic synthetic pulse waveform with seeded uniform noise.
///
/// # Panics
///
/// Panics if `bpm` is outside 20-250 or `fs_hz` outside 50-1000.
pub fn synth_ppg(params: PpgParams) -> Vec<AdcSample> {
    let PpgParams {
        bpm,
        duration_ms,
        fs_hz,
        noise_amp,
        seed,
    } = params;
    assert!((20..=250).contains(&bpm), "bpm {bpm} outside 20-250");
    assert!((50..=1000).contains(&fs_hz), "fs {fs_hz} Hz outside 50-1000");
    let amplitude = noise_amp.max(0.0) * (PPG_PEAK - PPG_BASELINE);
    let mut rng = XorShift64Star::new(seed);
    let n = duration_ms * u64::from(fs_hz) / 1000;
    (0..n)
        .map(|k| {
            let t_ms = k * 1000 / u64::from(fs_hz);
            let mut v = ppg_shape(bpm, t_ms);
            if amplitude > 0.0 {
                v += rng.symmetric(amplitude);
            }
            let value = v.round().clamp(0.0, f64::from(ADC_MAX)) as u16;
            AdcSample { value, t_ms }
        })
        .collect()
}

/// ADC count an ideal LM35 would produce at `temp_c`, before quantization.
pub fn lm35_ideal_counts(temp_c: f64, vref_mv: u32) -> f64 {
    temp_c * 10.0 * f64::from(ADC_STEPS) / f64::from(vref_mv)
}

/// A [`TEMP_WINDOW`]-sample acquisition of a constant temperature with
/// ±`noise_lsb` uniform integer noise.
pub fn synth_temperature_window(
    temp_c: f64,
    vref_mv: u32,
    noise_lsb: i64,
    start_ms: u64,
    rng: &mut XorShift64Star,
) -> Vec<AdcSample> {
    let ideal = lm35_ideal_counts(temp_c, vref_mv);
    (0..TEMP_WINDOW as u64)
        .map(|i| {
            let noise = if noise_lsb > 0 {
                rng.range_i64(-noise_lsb, noise_lsb)
            } else {
                0
            };
            let v = (ideal.round() as i64 + noise).clamp(0, i64::from(ADC_MAX)) as u16;
            AdcSample::new(v, start_ms + i * TEMP_SAMPLE_SPACING_MS)
        })
        .collect()
}
