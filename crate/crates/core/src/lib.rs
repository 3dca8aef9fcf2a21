//! Host-side simulator for a two-node patient-queue and vitals kiosk.
//!
//! The booth node registers patients over a 4x4 keypad, measures temperature
//! and pulse, and queues a fixed-size record. The doctor node pulls the head
//! record over a UART link and shows it on a 16x2 LCD.

pub mod booth;
pub mod doctor;
pub mod frame;
pub mod gateway;
pub mod keypad;
pub mod lcd;
pub mod parallel;
pub mod queue;
pub mod rng;
pub mod sim;
pub mod sweep;
pub mod uart;
pub mod vitals;

pub use booth::{booth_step, render_lcd, BoothPhase, BoothState};
pub use frame::{decode_frame, encode_frame, Frame, FrameError};
pub use parallel::Execution;
pub use queue::{PatientData, PatientQueue, PatientRecord, QueueError};
pub use sim::{load_scenario, report_table, run, MetricsReport, Scenario, SimConfig};
pub use uart::{baud_error_pct, UartConfig};
