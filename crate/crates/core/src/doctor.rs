//! Doctor-side logic: one Next button, one display.

use serde::{Deserialize, Serialize};

use crate::frame::{decode_frame, encode_frame, Frame, FrameError};
use crate::lcd::{LcdBuffer, LCD_COLS, LCD_ROWS};
use crate::queue::{PatientQueue, PatientRecord};
use crate::uart::{Channel, LinkUnusable};

/// Machine-side terms of the button-to-display latency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub debounce_ms: f64,
    pub lcd_ms_per_char: f64,
    pub lcd_chars: usize,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            debounce_ms: 20.0,
            lcd_ms_per_char: 2.0,
            lcd_chars: LCD_COLS * LCD_ROWS,
        }
    }
}

impl LatencyModel {
    pub fn lcd_update_ms(&self) -> f64 {
        self.lcd_ms_per_char * self.lcd_chars as f64
    }

    /// Total in whole milliseconds, rounded to nearest.
    pub fn total_ms(&self, tx_time_ms: f64) -> u32 {
        (self.debounce_ms + tx_time_ms + self.lcd_update_ms()).round() as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PressOutcome {
    Displayed {
        record: PatientRecord,
        frame: Frame,
        latency_ms: u32,
    },
    NoPatients {
        latency_ms: u32,
    },
    LinkError(LinkUnusable),
    /// The doctor node rejected what arrived.
    FrameRejected(FrameError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoctorState {
    pub display: LcdBuffer,
    pub current: Option<PatientRecord>,
    pub last_latency_ms: Option<u32>,
    pub last_frame: Option<Frame>,
}

impl Default for DoctorState {
    fn default() -> Self {
        Self {
            display: idle_display(),
            current: None,
            last_latency_ms: None,
            last_frame: None,
        }
    }
}

fn idle_display() -> LcdBuffer {
    LcdBuffer::new("Doctor's Corner", "Press Next")
}

fn link_error_display(e: &LinkUnusable) -> LcdBuffer {
    LcdBuffer::new("LINK ERROR", &format!("UART err {:+.1}%", e.error_pct))
}

fn format_temp(deci: i16) -> String {
    if deci == 0 {
        "--.-".to_string()
    } else {
        format!("{}.{}", deci / 10, deci % 10)
    }
}

/// `S<serial> A<age> T<temp>` over `P<bpm> <name>`, truncated to fit.
pub fn patient_display(record: &PatientRecord) -> LcdBuffer {
    LcdBuffer::new(
        &format!(
            "S{} A{} T{}",
            record.serial,
            record.age,
            format_temp(record.temp_deci_c)
        ),
        &format!("P{} {}", record.bpm, record.name_code),
    )
}

impl DoctorState {
    /// Sends the head record over `channel` and shows it. The record leaves
    /// the queue only once it has been delivered. The request itself crosses
    /// the link, so a bad link is reported even when the queue is empty.
    pub fn press_next(
        &mut self,
        queue: &mut PatientQueue,
        channel: &Channel,
        latency: &LatencyModel,
    ) -> PressOutcome {
        if let Err(e) = channel.check() {
            self.display = link_error_display(&e);
            return PressOutcome::LinkError(e);
        }
        let Some(head) = queue.peek() else {
            let latency_ms = latency.total_ms(0.0);
            self.display = LcdBuffer::new("No Patients", "");
            self.current = None;
            self.last_latency_ms = Some(latency_ms);
            return PressOutcome::NoPatients { latency_ms };
        };
        let delivered = match channel.transmit(encode_frame(head)) {
            Ok(d) => d,
            Err(e) => {
                self.display = link_error_display(&e);
                return PressOutcome::LinkError(e);
            }
        };
        let record = match decode_frame(delivered.frame.as_bytes()) {
            Ok(r) => r,
            Err(e) => {
                self.display = LcdBuffer::new("FRAME ERROR", "");
                return PressOutcome::FrameRejected(e);
            }
        };
        queue.dequeue().expect("head present");
        let latency_ms = latency.total_ms(delivered.tx_time_ms);
        self.display = patient_display(&record);
        self.current = Some(record.clone());
        self.last_latency_ms = Some(latency_ms);
        self.last_frame = Some(delivered.frame);
        PressOutcome::Displayed {
            record,
            frame: delivered.frame,
            latency_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue::PatientData;
    use crate::uart::UartConfig;

    fn data(name: &str) -> PatientData {
        PatientData {
            name_code: name.into(),
            age: 45,
            mobile: "01712345678".into(),
            temp_deci_c: 366,
            bpm: 72,
        }
    }

    fn link_9600() -> Channel {
        UartConfig::new(8_000_000, 9600, false).unwrap().channel()
    }

    #[test]
    fn shows_head_and_dequeues() {
        let mut q = PatientQueue::default();
        q.enqueue(data("R1")).unwrap();
        q.enqueue(data("R2")).unwrap();
        let mut doc = DoctorState::default();
        let out = doc.press_next(&mut q, &link_9600(), &LatencyModel::default());
        let PressOutcome::Displayed { record, latency_ms, .. } = out else {
            panic!("{out:?}");
        };
        assert_eq!(record.name_code, "R1");
        assert_eq!(q.serials(), vec![2]);
        assert_eq!(doc.display.row(0), "S1 A45 T36.6    ");
        assert_eq!(doc.display.row(1), "P72 R1          ");
        // 20 debounce + 31.2 transmit + 64 LCD
        assert_eq!(latency_ms, 115);
        assert_eq!(doc.last_latency_ms, Some(115));
    }

    #[test]
    fn empty_queue_notice() {
        let mut q = PatientQueue::default();
        let mut doc = DoctorState::default();
        let out = doc.press_next(&mut q, &link_9600(), &LatencyModel::default());
        assert_eq!(out, PressOutcome::NoPatients { latency_ms: 84 });
        assert_eq!(doc.display.row(0), "No Patients     ");
        assert!(q.is_empty());
    }

    #[test]
    fn unusable_link_keeps_patient_queued() {
        let mut q = PatientQueue::default();
        q.enqueue(data("R1")).unwrap();
        let before = q.clone();
        let mut doc = DoctorState::default();
        let bad = UartConfig::new(1_000_000, 38400, false).unwrap().channel();
        let out = doc.press_next(&mut q, &bad, &LatencyModel::default());
        assert!(matches!(out, PressOutcome::LinkError(_)));
        assert_eq!(doc.display.row(0), "LINK ERROR      ");
        assert_eq!(q, before);
        let mut empty = PatientQueue::default();
        let out = doc.press_next(&mut empty, &bad, &LatencyModel::default());
        assert!(matches!(out, PressOutcome::LinkError(_)));
        assert_eq!(doc.display.row(1), "UART err -18.6% ");
    }

    #[test]
    fn widest_record_fits() {
        let record = PatientRecord {
            serial: 65535,
            name_code: "ZZZZZZZZ".into(),
            age: 120,
            mobile: "99999999999".into(),
            temp_deci_c: 450,
            bpm: 250,
        };
        let lcd = patient_display(&record);
        assert_eq!(lcd.row(0), "S65535 A120 T45.");
        assert_eq!(lcd.row(1), "P250 ZZZZZZZZ   ");
        let unmeasured = PatientRecord { temp_deci_c: 0, bpm: 0, ..record };
        assert_eq!(patient_display(&unmeasured).row(0), "S65535 A120 T--.");
    }

    #[test]
    fn latency_under_bound_for_usable_links() {
        for baud in [9600, 19200, 38400] {
            for u2x in [false, true] {
                let cfg = UartConfig::new(8_000_000, baud, u2x).unwrap();
                assert!(cfg.usable());
                let ms = LatencyModel::default().total_ms(cfg.channel().tx_time_ms());
                assert!(ms < 1200, "{baud} {u2x}: {ms}");
            }
        }
    }

    #[test]
    fn smallest_serial_always_shown() {
        let mut q = PatientQueue::default();
        let mut doc = DoctorState::default();
        let link = link_9600();
        for round in 0..20u16 {
            q.enqueue(data("N")).unwrap();
            if round % 3 != 0 {
                q.enqueue(data("M")).unwrap();
            }
            let min = *q.serials().iter().min().unwrap();
            let len = q.len();
            let out = doc.press_next(&mut q, &link, &LatencyModel::default());
            let PressOutcome::Displayed { record, .. } = out else { panic!() };
            assert_eq!(record.serial, min);
            assert_eq!(q.len(), len - 1);
        }
    }
}
