//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use chamberline::doctor::{DoctorState, LatencyModel, PressOutcome};
use chamberline::parallel::Execution;
use chamberline::queue::{PatientData, PatientQueue, QueueError};
use chamberline::sim::{self, report_table, ScenarioBuilder, SimConfig};
use chamberline::sweep::{
    self, pass_rate, pulse_sweep, temperature_sweep, PulseSweep, PULSE_SWEEP_BPMS,
};
use chamberline::uart::{baud_error_pct, UartConfig, F_OSC_1MHZ, F_OSC_8MHZ};
use chamberline::vitals::{DEFAULT_PULSE_FS_HZ, DEFAULT_VREF_MV};

use common::{patient, stress_scenario, truth, vitals, STRESS_PATIENTS};

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn uart_error() -> Verdict {
    let at_9600 = baud_error_pct(F_OSC_8MHZ, 9600, false).unwrap();
    let slow = baud_error_pct(F_OSC_1MHZ, 38400, false).unwrap();
    verdict(
        (at_9600 - 0.16).abs() <= 0.01 && slow.abs() > 2.0,
        format!("8 MHz/9600 {at_9600:+.3}% (want +0.16 +/- 0.01), 1 MHz/38400 {slow:+.2}% (want |e| > 2)"),
    )
}

fn temperature_accuracy() -> Verdict {
    let points = temperature_sweep(Execution::default(), DEFAULT_VREF_MV, 1, 2024);
    let worst = points
        .iter()
        .map(|p| p.abs_error_c())
        .fold(0.0f64, f64::max);
    verdict(
        points.len() == 31 && worst <= 1.0,
        format!("{} points 25.0-40.0 C, max |error| {worst:.2} C (limit 1.0)", points.len()),
    )
}

fn pulse_accuracy() -> Verdict {
    let sweep = |noise| PulseSweep {
        bpms: &PULSE_SWEEP_BPMS,
        seeds: 20,
        noise,
        fs_hz: DEFAULT_PULSE_FS_HZ,
    };
    let noisy = pulse_sweep(Execution::default(), sweep(0.05));
    let clean = pulse_sweep(Execution::default(), sweep(0.0));
    let noisy_rate = pass_rate(&noisy, 3);
    let clean_rate = pass_rate(&clean, 3);
    verdict(
        noisy.len() == 120 && noisy_rate >= 0.95 && clean_rate == 1.0,
        format!(
            "within 3 BPM: {:.1}% of {} noisy runs (need 95%), {:.1}% noise-free (need 100%)",
            noisy_rate * 100.0,
            noisy.len(),
            clean_rate * 100.0
        ),
    )
}

fn latency_bound() -> Verdict {
    let model = LatencyModel::default();
    let mut worst = 0;
    let mut all_usable = true;
    for baud in [9600, 19200, 38400] {
        for u2x in [false, true] {
            let cfg = UartConfig::new(F_OSC_8MHZ, baud, u2x).unwrap();
            all_usable &= cfg.usable();
            worst = worst.max(model.total_ms(cfg.channel().tx_time_ms()));
        }
    }
    // end to end through the doctor node at the default link
    let mut q = PatientQueue::default();
    q.enqueue(PatientData {
        name_code: "A".into(),
        age: 30,
        mobile: "01700000000".into(),
        temp_deci_c: 366,
        bpm: 72,
    })
    .unwrap();
    let link = UartConfig::default().channel();
    let at_9600 = match DoctorState::default().press_next(&mut q, &link, &model) {
        PressOutcome::Displayed { latency_ms, .. } => latency_ms,
        _ => u32::MAX,
    };
    verdict(
        all_usable && worst < 1200 && at_9600.abs_diff(115) <= 1,
        format!("max {worst} ms over 6 configs (limit < 1200), {at_9600} ms at 9600 (expect ~115)"),
    )
}

fn queue_stress() -> Verdict {
    let out = sim::run(&stress_scenario(STRESS_PATIENTS), &SimConfig::default()).unwrap();
    let serials: Vec<u16> = out.dequeued.iter().map(|r| r.serial).collect();
    let in_order = serials == (1..=STRESS_PATIENTS).collect::<Vec<_>>();
    // oracle: every record carries exactly what its patient typed, and
    // vitals within tolerance of the declared truth
    let intact = out.dequeued.iter().zip(1..).all(|(r, i)| {
        let (name, age, mobile) = patient(i);
        let (t, bpm) = truth(i);
        r.name_code == name
            && r.age == age
            && r.mobile == mobile
            && (f64::from(r.temp_deci_c) / 10.0 - t).abs() <= 1.0
            && u32::from(r.bpm).abs_diff(bpm) <= 3
    });

    let mut q = PatientQueue::new(64);
    for i in 0..64 {
        q.enqueue(PatientData {
            name_code: format!("N{i}"),
            age: 40,
            mobile: "01711111111".into(),
            temp_deci_c: 0,
            bpm: 0,
        })
        .unwrap();
    }
    let before = q.clone();
    let overflow = q.enqueue(PatientData {
        name_code: "LATE".into(),
        age: 40,
        mobile: "01711111111".into(),
        temp_deci_c: 0,
        bpm: 0,
    });
    let full_ok = overflow == Err(QueueError::Full) && q == before;
    verdict(
        in_order && intact && out.report.queue_overflows == 0 && out.conserved() && full_ok,
        format!(
            "{} served in order: {in_order}, records intact: {intact}, overflows {}, 65th enqueue -> {:?}, state preserved: {}",
            serials.len(),
            out.report.queue_overflows,
            overflow.err(),
            q == before
        ),
    )
}

fn power_loss() -> Verdict {
    let mut b = ScenarioBuilder::new();
    b.sensor(vitals(36.6, 72))
        .register("AB", 45, "01712345678")
        .register("CD", 50, "01812345678")
        .power_loss()
        .wait(100)
        .press()
        .wait(1000)
        .register("EF", 30, "01912345678")
        .press();
    let out = sim::run(&b.build(), &SimConfig::default()).unwrap();
    let shows_none = out.log.iter().any(|l| l.contains("|No Patients"));
    let restarted = out.dequeued.first().map(|r| (r.serial, r.name_code.as_str())) == Some((1, "EF"));
    verdict(
        shows_none && restarted && out.tally.lost_to_power_loss == 2 && out.conserved(),
        format!(
            "2 queued records cleared: {}, press shows No Patients: {shows_none}, next registration gets serial 1: {restarted}",
            out.tally.lost_to_power_loss == 2
        ),
    )
}

fn codec_properties() -> Verdict {
    let records = sweep::random_records(10_000, 0xC0DEC);
    let exec = Execution::default();
    let round_trip = sweep::round_trip_failures(exec, &records);
    let undetected = sweep::undetected_bit_flips(exec, &records);
    verdict(
        round_trip == 0 && undetected == 0,
        format!(
            "{} records: {round_trip} round-trip failures, {undetected} of {} single-bit flips undetected",
            records.len(),
            records.len() * 240
        ),
    )
}

fn determinism() -> Verdict {
    let scenario = stress_scenario(STRESS_PATIENTS);
    let cfg = SimConfig::default();
    let a = sim::run(&scenario, &cfg).unwrap();
    let b = sim::run(&scenario, &cfg).unwrap();
    let same_log = a.log_text() == b.log_text();
    let same_report =
        report_table(&a.report) == report_table(&b.report) && a.report.to_json() == b.report.to_json();
    verdict(
        same_log && same_report,
        format!("{} log lines identical: {same_log}, reports identical: {same_report}", a.log.len()),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Verdict, Duration);
    let criteria: [Criterion; 8] = [
        ("UART error reproduction", uart_error, Duration::from_secs(1)),
        ("Temperature accuracy", temperature_accuracy, Duration::from_secs(1)),
        ("Pulse accuracy", pulse_accuracy, Duration::from_secs(5)),
        ("Latency bound", latency_bound, Duration::from_secs(1)),
        ("Queue stress", queue_stress, Duration::from_secs(1)),
        ("Power-loss semantics", power_loss, Duration::from_secs(1)),
        ("Codec properties", codec_properties, Duration::from_secs(5)),
        ("Determinism", determinism, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    println!();
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let ok = v.ok && in_time;
        failed += usize::from(!ok);
        println!(
            "{} {name:<24} {} [{:.0} ms, budget {} ms{}]",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64() * 1000.0,
            budget.as_millis(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!();
    if failed == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
