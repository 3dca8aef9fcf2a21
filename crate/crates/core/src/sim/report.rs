use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::uart::LINK_TOLERANCE_PCT;

pub const TEMP_TOLERANCE_DECI_C: f64 = 10.0;
pub const BPM_TOLERANCE: u32 = 3;
pub const LATENCY_BOUND_MS: u32 = 1200;

/// Aggregate performance figures for one run. `None` means nothing was
/// measured.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub max_abs_temp_error_deci_c: Option<f64>,
    pub max_abs_bpm_error: Option<u32>,
    pub max_latency_ms: Option<u32>,
    pub uart_error_pct: f64,
    pub patients_processed: u32,
    pub queue_overflows: u32,
}

fn fold_max<T: PartialOrd + Copy>(slot: &mut Option<T>, v: T) {
    match slot {
        Some(cur) if *cur >= v => {}
        _ => *slot = Some(v),
    }
}

impl MetricsReport {
    pub fn record_temp_error(&mut self, deci_c: f64) {
        fold_max(&mut self.max_abs_temp_error_deci_c, deci_c.abs());
    }

    pub fn record_bpm_error(&mut self, bpm: u32) {
        fold_max(&mut self.max_abs_bpm_error, bpm);
    }

    pub fn record_latency(&mut self, ms: u32) {
        fold_max(&mut self.max_latency_ms, ms);
    }

    /// Figures outside the performance targets, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(e) = self.max_abs_temp_error_deci_c {
            if e > TEMP_TOLERANCE_DECI_C {
                out.push(format!("temperature error {:.1} C exceeds 1.0 C", e / 10.0));
            }
        }
        if let Some(e) = self.max_abs_bpm_error {
            if e > BPM_TOLERANCE {
                out.push(format!("pulse error {e} BPM exceeds {BPM_TOLERANCE} BPM"));
            }
        }
        if let Some(ms) = self.max_latency_ms {
            if ms >= LATENCY_BOUND_MS {
                out.push(format!("latency {ms} ms not below {LATENCY_BOUND_MS} ms"));
            }
        }
        if self.uart_error_pct.abs() > LINK_TOLERANCE_PCT {
            out.push(format!("UART error {:+.2}% beyond 2%", self.uart_error_pct));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

const NA: &str = "n/a";

/// Fixed-width summary table, ASCII only.
pub fn report_table(report: &MetricsReport) -> String {
    let temp = report
        .max_abs_temp_error_deci_c
        .map_or(NA.to_string(), |e| format!("+/-{:.2} C", e / 10.0));
    let pulse = report
        .max_abs_bpm_error
        .map_or(NA.to_string(), |e| format!("+/-{e} BPM"));
    let latency = report
        .max_latency_ms
        .map_or(NA.to_string(), |ms| format!("{ms} ms"));
    let rows = [
        ("Temperature accuracy", temp),
        ("Pulse accuracy", pulse),
        ("Button-to-display latency", latency),
        ("UART error", format!("{:+.2}%", report.uart_error_pct)),
        ("Operation mode", "Offline, stand-alone".to_string()),
    ];
    let mut out = String::new();
    let _ = writeln!(out, "{:<26} Value", "Metric");
    let _ = writeln!(out, "{:-<26} {:-<20}", "", "");
    for (name, value) in rows {
        let _ = writeln!(out, "{name:<26} {value}");
    }
    out
}

/// One-line counts to accompany the table.
pub fn report_counts(report: &MetricsReport) -> String {
    format!(
        "{} patients processed, {} queue overflows",
        report.patients_processed, report.queue_overflows
    )
}
