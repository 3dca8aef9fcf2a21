//! AVR-style UART baud generator model and the all-or-nothing link channel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Frame, FRAME_LEN};

pub const UBRR_MAX: u16 = 4095;
/// Total baud mismatch tolerated by an 8N1 receiver.
pub const LINK_TOLERANCE_PCT: f64 = 2.0;
/// Start + 8 data + stop.
pub const BITS_PER_BYTE: u32 = 10;

pub const F_OSC_1MHZ: u32 = 1_000_000;
pub const F_OSC_8MHZ: u32 = 8_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum UartError {
    #[error("baud {baud} unreachable from {f_osc_hz} Hz (u2x={u2x})")]
    BaudUnreachable { f_osc_hz: u32, baud: u32, u2x: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("link unusable: baud error {error_pct:+.2}% exceeds tolerance")]
pub struct LinkUnusable {
    pub error_pct: f64,
}

fn divisor(u2x: bool) -> u32 {
    if u2x {
        8
    } else {
        16
    }
}

/// `round(f_osc / (k * baud)) - 1` with half-up rounding, clamped to 12 bits.
pub fn ubrr_for(f_osc_hz: u32, target_baud: u32, u2x: bool) -> Result<u16, UartError> {
    let unreachable = UartError::BaudUnreachable {
        f_osc_hz,
        baud: target_baud,
        u2x,
    };
    if target_baud == 0 {
        return Err(unreachable);
    }
    let step = u64::from(divisor(u2x)) * u64::from(target_baud);
    let rounded = (2 * u64::from(f_osc_hz) + step) / (2 * step);
    if rounded < 1 {
        return Err(unreachable);
    }
    Ok((rounded - 1).min(u64::from(UBRR_MAX)) as u16)
}

pub fn actual_baud(f_osc_hz: u32, ubrr: u16, u2x: bool) -> f64 {
    f64::from(f_osc_hz) / (f64::from(divisor(u2x)) * (f64::from(ubrr) + 1.0))
}

pub fn baud_error_pct(f_osc_hz: u32, target_baud: u32, u2x: bool) -> Result<f64, UartError> {
    let ubrr = ubrr_for(f_osc_hz, target_baud, u2x)?;
    Ok(error_pct_for(f_osc_hz, target_baud, ubrr, u2x))
}

fn error_pct_for(f_osc_hz: u32, target_baud: u32, ubrr: u16, u2x: bool) -> f64 {
    let target = f64::from(target_baud);
    100.0 * (actual_baud(f_osc_hz, ubrr, u2x) - target) / target
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UartConfig {
    pub f_osc_hz: u32,
    pub target_baud: u32,
    pub u2x: bool,
    pub ubrr: u16,
}

impl UartConfig {
    pub fn new(f_osc_hz: u32, target_baud: u32, u2x: bool) -> Result<Self, UartError> {
        Ok(Self {
            f_osc_hz,
            target_baud,
            u2x,
            ubrr: ubrr_for(f_osc_hz, target_baud, u2x)?,
        })
    }

    pub fn actual_baud(&self) -> f64 {
        actual_baud(self.f_osc_hz, self.ubrr, self.u2x)
    }

    pub fn error_pct(&self) -> f64 {
        error_pct_for(self.f_osc_hz, self.target_baud, self.ubrr, self.u2x)
    }

    pub fn usable(&self) -> bool {
        self.channel().usable()
    }

    pub fn channel(&self) -> Channel {
        Channel {
            error_pct: self.error_pct(),
            actual_baud: self.actual_baud(),
        }
    }
}

impl Default for UartConfig {
    /// 8 MHz internal oscillator at 9600 bps, normal speed.
    fn default() -> Self {
        Self::new(F_OSC_8MHZ, 9600, false).expect("default link is reachable")
    }
}

/// Deterministic channel: frames arrive intact when the baud mismatch is within
/// tolerance and never otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub error_pct: f64,
    pub actual_baud: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivered {
    pub frame: Frame,
    pub tx_time_ms: f64,
}

impl Channel {
    pub fn usable(&self) -> bool {
        self.error_pct.abs() <= LINK_TOLERANCE_PCT
    }

    pub fn tx_time_ms(&self) -> f64 {
        (FRAME_LEN as u32 * BITS_PER_BYTE) as f64 / self.actual_baud * 1000.0
    }

    pub fn check(&self) -> Result<(), LinkUnusable> {
        if self.usable() {
            Ok(())
        } else {
            Err(LinkUnusable {
                error_pct: self.error_pct,
            })
        }
    }

    pub fn transmit(&self, frame: Frame) -> Result<Delivered, LinkUnusable> {
        self.check()?;
        Ok(Delivered {
            tx_time_ms: self.tx_time_ms(),
            frame,
        })
    }
}

pub fn channel_transmit(frame: Frame, config: &UartConfig) -> Result<Delivered, LinkUnusable> {
    config.channel().transmit(frame)
}
