use std::fmt;

use serde::{Deserialize, Serialize};

pub const LCD_COLS: usize = 16;
pub const LCD_ROWS: usize = 2;

/// Contents of a 16x2 character display. Rows are always exactly 16
/// printable ASCII characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[String; 2]", into = "[String; 2]")]
pub struct LcdBuffer {
    rows: [String; LCD_ROWS],
}

fn fit(text: &str) -> String {
    let mut row: String = text
        .chars()
        .map(|c| if c.is_ascii_graphic() || c == ' ' { c } else { '?' })
        .take(LCD_COLS)
        .collect();
    while row.len() < LCD_COLS {
        row.push(' ');
    }
    row
}

impl LcdBuffer {
    /// Pads or truncates each line to the display width.
    pub fn new(top: &str, bottom: &str) -> Self {
        Self {
            rows: [fit(top), fit(bottom)],
        }
    }

    pub fn blank() -> Self {
        Self::new("", "")
    }

    pub fn row(&self, index: usize) -> &str {
        &self.rows[index]
    }

    pub fn rows(&self) -> &[String; LCD_ROWS] {
        &self.rows
    }

    /// Rightmost 16 characters of `text`, for live entry fields.
    pub fn tail(text: &str) -> &str {
        let skip = text.len().saturating_sub(LCD_COLS);
        &text[skip..]
    }
}

impl Default for LcdBuffer {
    fn default() -> Self {
        Self::blank()
    }
}

impl TryFrom<[String; 2]> for LcdBuffer {
    type Error = String;

    fn try_from(rows: [String; 2]) -> Result<Self, Self::Error> {
        for row in &rows {
            if row.len() != LCD_COLS || !row.bytes().all(|b| (0x20..0x7F).contains(&b)) {
                return Err(format!("LCD row must be 16 printable ASCII chars: {row:?}"));
            }
        }
        Ok(Self { rows })
    }
}

impl From<LcdBuffer> for [String; 2] {
    fn from(lcd: LcdBuffer) -> Self {
        lcd.rows
    }
}

impl fmt::Display for LcdBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}|{}|", self.rows[0], self.rows[1])
    }
}
