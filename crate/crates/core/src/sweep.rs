//! Accuracy and codec sweeps. Each work item seeds its own generator, so the
//! results do not depend on the execution mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{decode_frame, encode_frame, FRAME_LEN};
use crate::parallel::Execution;
use crate::queue::{PatientRecord, AGE_MAX, AGE_MIN, BPM_MAX, MOBILE_LEN, NAME_MAX_LEN};
use crate::queue::{TEMP_MAX_DECI_C, TEMP_MIN_DECI_C};
use crate::rng::{splitmix64, XorShift64Star};
use crate::vitals::{
    average_temperature, estimate_bpm, synth_ppg, synth_temperature_window, PpgParams,
    DEFAULT_REFRACTORY_MS, DEFAULT_THRESHOLD, PULSE_WINDOW_MS,
};

pub const TEMP_SWEEP_START_DECI_C: i32 = 250;
pub const TEMP_SWEEP_END_DECI_C: i32 = 400;
pub const TEMP_SWEEP_STEP_DECI_C: i32 = 5;
pub const PULSE_SWEEP_BPMS: [u32; 6] = [50, 60, 75, 90, 100, 120];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempPoint {
    pub truth_c: f64,
    pub estimate_deci_c: i32,
}

impl TempPoint {
    pub fn abs_error_c(&self) -> f64 {
        (f64::from(self.estimate_deci_c) / 10.0 - self.truth_c).abs()
    }
}

/// 25.0 to 40.0 °C in 0.5 °C steps, one 16-sample window per point.
pub fn temperature_sweep(exec: Execution, vref_mv: u32, noise_lsb: i64, seed: u64) -> Vec<TempPoint> {
    let truths: Vec<i32> = (TEMP_SWEEP_START_DECI_C..=TEMP_SWEEP_END_DECI_C)
        .step_by(TEMP_SWEEP_STEP_DECI_C as usize)
        .collect();
    exec.map(&truths, |&deci| {
        let truth_c = f64::from(deci) / 10.0;
        let mut rng = XorShift64Star::new(splitmix64(seed ^ deci as u64));
        let window = synth_temperature_window(truth_c, vref_mv, noise_lsb, 0, &mut rng);
        TempPoint {
            truth_c,
            estimate_deci_c: average_temperature(&window, vref_mv).expect("non-empty window"),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulsePoint {
    pub truth_bpm: u32,
    pub seed: u64,
    pub estimate: Option<u32>,
}

impl PulsePoint {
    pub fn within(&self, tolerance: u32) -> bool {
        self.estimate
            .is_some_and(|b| b.abs_diff(self.truth_bpm) <= tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSweep<'a> {
    pub bpms: &'a [u32],
    pub seeds: u64,
    pub noise: f64,
    pub fs_hz: u32,
}

/// One 10 s capture per (bpm, seed) pair, seeds `0..seeds`.
pub fn pulse_sweep(exec: Execution, sweep: PulseSweep<'_>) -> Vec<PulsePoint> {
    let jobs: Vec<(u32, u64)> = sweep
        .bpms
        .iter()
        .flat_map(|&b| (0..sweep.seeds).map(move |s| (b, s)))
        .collect();
    exec.map(&jobs, |&(bpm, seed)| {
        let wave = synth_ppg(PpgParams::new(bpm, PULSE_WINDOW_MS, sweep.fs_hz, sweep.noise, seed));
        PulsePoint {
            truth_bpm: bpm,
            seed,
            estimate: estimate_bpm(&wave, DEFAULT_THRESHOLD, DEFAULT_REFRACTORY_MS).ok(),
        }
    })
}

pub fn pass_rate(points: &[PulsePoint], tolerance: u32) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().filter(|p| p.within(tolerance)).count() as f64 / points.len() as f64
}

const NAME_CHARS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// A valid record drawn uniformly over each field's range.
pub fn random_record<R: Rng>(rng: &mut R) -> PatientRecord {
    let name_len = rng.gen_range(1..=NAME_MAX_LEN);
    let name_code = (0..name_len)
        .map(|_| char::from(NAME_CHARS[rng.gen_range(0..NAME_CHARS.len())]))
        .collect();
    let mobile = (0..MOBILE_LEN)
        .map(|_| char::from(b'0' + rng.gen_range(0..10u8)))
        .collect();
    let temp_deci_c = if rng.gen_bool(0.1) {
        0
    } else {
        rng.gen_range(TEMP_MIN_DECI_C..=TEMP_MAX_DECI_C)
    };
    PatientRecord {
        serial: rng.gen_range(1..=u16::MAX),
        name_code,
        age: rng.gen_range(AGE_MIN..=AGE_MAX),
        mobile,
        temp_deci_c,
        bpm: rng.gen_range(0..=BPM_MAX),
    }
}

pub fn random_records(n: usize, seed: u64) -> Vec<PatientRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_record(&mut rng)).collect()
}

/// Records whose decode(encode(r)) differs from r.
pub fn round_trip_failures(exec: Execution, records: &[PatientRecord]) -> usize {
    exec.map(records, |r| decode_frame(encode_frame(r).as_bytes()).as_ref() != Ok(r))
        .into_iter()
        .filter(|&bad| bad)
        .count()
}

/// Single-bit corruptions of each record's frame that decode without error.
pub fn undetected_bit_flips(exec: Execution, records: &[PatientRecord]) -> usize {
    exec.map(records, |r| {
        let clean = *encode_frame(r).as_bytes();
        (0..FRAME_LEN * 8)
            .filter(|&bit| {
                let mut bytes = clean;
                bytes[bit / 8] ^= 1 << (bit % 8);
                decode_frame(&bytes).is_ok()
            })
            .count()
    })
    .into_iter()
    .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vitals::DEFAULT_VREF_MV;

    #[test]
    fn sweep_shapes() {
        let temps = temperature_sweep(Execution::Sequential, DEFAULT_VREF_MV, 1, 7);
        assert_eq!(temps.len(), 31);
        assert_eq!(temps[0].truth_c, 25.0);
        assert_eq!(temps[30].truth_c, 40.0);
        let sweep = PulseSweep { bpms: &[60, 90], seeds: 3, noise: 0.0, fs_hz: 500 };
        let pulses = pulse_sweep(Execution::Sequential, sweep);
        assert_eq!(pulses.len(), 6);
        assert_eq!(pass_rate(&pulses, 0), 1.0);
    }

    #[test]
    fn modes_agree() {
        let records = random_records(200, 3);
        for exec in [Execution::Sequential, Execution::Parallel] {
            assert_eq!(round_trip_failures(exec, &records), 0);
            assert_eq!(undetected_bit_flips(exec, &records[..20]), 0);
        }
        assert_eq!(
            temperature_sweep(Execution::Sequential, DEFAULT_VREF_MV, 1, 11),
            temperature_sweep(Execution::Parallel, DEFAULT_VREF_MV, 1, 11)
        );
    }

    #[test]
    fn generated_records_are_valid() {
        for r in random_records(1000, 1) {
            r.validate().unwrap();
        }
    }
}
