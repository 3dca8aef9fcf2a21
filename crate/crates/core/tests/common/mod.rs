#![allow(dead_code)]

use chamberline::sim::{Scenario, ScenarioBuilder, SensorUpdate};

pub const STRESS_PATIENTS: u16 = 55;

/// Name, age and mobile of the `i`-th scripted patient (1-based).
pub fn patient(i: u16) -> (String, u8, String) {
    (format!("P{i}"), 20 + (i % 60) as u8, format!("017{:08}", u32::from(i) * 7919))
}

pub fn vitals(temp_c: f64, bpm: u32) -> SensorUpdate {
    SensorUpdate {
        temp_c: Some(temp_c),
        bpm: Some(bpm),
        finger: Some(true),
    }
}

/// Ground truth declared before patient `i` registers.
pub fn truth(i: u16) -> (f64, u32) {
    (36.0 + f64::from(i % 10) * 0.2, 60 + u32::from(i % 7) * 8)
}

/// `n` registrations with varying vitals, then `n` doctor presses.
pub fn stress_scenario(n: u16) -> Scenario {
    let mut b = ScenarioBuilder::new();
    for i in 1..=n {
        let (name, age, mobile) = patient(i);
        let (t, bpm) = truth(i);
        b.sensor(vitals(t, bpm)).register(&name, age, &mobile);
    }
    for _ in 0..n {
        b.press().wait(1000);
    }
    b.build()
}
