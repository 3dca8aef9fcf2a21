//! 4x4 matrix keypad events and the multi-tap text entry decoder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Same-key presses closer than this cycle the pending letter.
pub const MULTITAP_TIMEOUT_MS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Digit(u8),
    A,
    B,
    C,
    D,
    Star,
    Hash,
}

impl Key {
    pub const ALL: [Key; 16] = [
        Key::Digit(1),
        Key::Digit(2),
        Key::Digit(3),
        Key::A,
        Key::Digit(4),
        Key::Digit(5),
        Key::Digit(6),
        Key::B,
        Key::Digit(7),
        Key::Digit(8),
        Key::Digit(9),
        Key::C,
        Key::Star,
        Key::Digit(0),
        Key::Hash,
        Key::D,
    ];

    pub fn as_char(self) -> char {
        match self {
            Key::Digit(d) => char::from(b'0' + d),
            Key::A => 'A',
            Key::B => 'B',
            Key::C => 'C',
            Key::D => 'D',
            Key::Star => '*',
            Key::Hash => '#',
        }
    }

    pub fn digit(self) -> Option<u8> {
        match self {
            Key::Digit(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a keypad key: {0:?}")]
pub struct BadKey(pub String);

impl TryFrom<char> for Key {
    type Error = BadKey;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        Ok(match c {
            '0'..='9' => Key::Digit(c as u8 - b'0'),
            'A' => Key::A,
            'B' => Key::B,
            'C' => Key::C,
            'D' => Key::D,
            '*' => Key::Star,
            '#' => Key::Hash,
            _ => return Err(BadKey(c.to_string())),
        })
    }
}

impl FromStr for Key {
    type Err = BadKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Key::try_from(c),
            _ => Err(BadKey(s.to_string())),
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl Serialize for Key {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Key {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeypadEvent {
    pub key: Key,
    pub t_ms: u64,
}

/// Characters cycled by repeated presses of a digit key.
pub fn cycle_table(digit: u8) -> &'static [char] {
    match digit {
        0 => &[' ', '0'],
        1 => &['1'],
        2 => &['A', 'B', 'C', '2'],
        3 => &['D', 'E', 'F', '3'],
        4 => &['G', 'H', 'I', '4'],
        5 => &['J', 'K', 'L', '5'],
        6 => &['M', 'N', 'O', '6'],
        7 => &['P', 'Q', 'R', 'S', '7'],
        8 => &['T', 'U', 'V', '8'],
        9 => &['W', 'X', 'Y', 'Z', '9'],
        _ => &[],
    }
}

/// Number of presses of `digit` needed to select `c`, if the key carries it.
pub fn presses_for(c: char) -> Option<(u8, usize)> {
    (0..=9u8).find_map(|d| {
        cycle_table(d)
            .iter()
            .position(|&x| x == c)
            .map(|i| (d, i + 1))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pending {
    pub digit: u8,
    pub presses: usize,
    pub last_t_ms: u64,
}

impl Pending {
    pub fn candidate(&self) -> char {
        let table = cycle_table(self.digit);
        table[(self.presses - 1) % table.len()]
    }
}

/// Multi-tap state: at most one uncommitted candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiTap {
    pub pending: Option<Pending>,
}

impl MultiTap {
    pub fn candidate(&self) -> Option<char> {
        self.pending.map(|p| p.candidate())
    }

    /// Time after which the pending candidate commits on its own.
    pub fn deadline(&self) -> Option<u64> {
        self.pending.map(|p| p.last_t_ms + MULTITAP_TIMEOUT_MS + 1)
    }

    /// Handles a digit press. Returns the character committed by this press,
    /// if any; the new candidate stays pending.
    pub fn press(&mut self, digit: u8, t_ms: u64) -> Option<char> {
        debug_assert!(digit <= 9);
        if let Some(p) = self.pending.as_mut() {
            if p.digit == digit && t_ms.saturating_sub(p.last_t_ms) <= MULTITAP_TIMEOUT_MS {
                p.presses += 1;
                p.last_t_ms = t_ms;
                return None;
            }
        }
        let committed = self.commit();
        self.pending = Some(Pending {
            digit,
            presses: 1,
            last_t_ms: t_ms,
        });
        committed
    }

    /// Commits the candidate if its timeout has passed at `t_ms`.
    pub fn expire(&mut self, t_ms: u64) -> Option<char> {
        match self.pending {
            Some(p) if t_ms.saturating_sub(p.last_t_ms) > MULTITAP_TIMEOUT_MS => self.commit(),
            _ => None,
        }
    }

    /// Commits unconditionally.
    pub fn commit(&mut self) -> Option<char> {
        self.pending.take().map(|p| p.candidate())
    }

    pub fn discard(&mut self) {
        self.pending = None;
    }
}

/// Stateless form of [`MultiTap::press`].
pub fn multitap_decode(context: MultiTap, digit: u8, t_ms: u64) -> (MultiTap, Option<char>) {
    let mut next = context;
    let emitted = next.press(digit, t_ms);
    (next, emitted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_all_keys() {
        for key in Key::ALL {
            assert_eq!(key.to_string().parse::<Key>(), Ok(key));
        }
        assert!("E".parse::<Key>().is_err());
        assert!("12".parse::<Key>().is_err());
        assert!("".parse::<Key>().is_err());
    }

    #[test]
    fn repeated_press_then_timeout() {
        let (ctx, out) = multitap_decode(MultiTap::default(), 2, 0);
        assert_eq!(out, None);
        let (mut ctx, out) = multitap_decode(ctx, 2, 400);
        assert_eq!(out, None);
        assert_eq!(ctx.candidate(), Some('B'));
        assert_eq!(ctx.expire(1400), None);
        assert_eq!(ctx.expire(1401), Some('B'));
        assert_eq!(ctx.candidate(), None);
    }

    #[test]
    fn different_key_commits() {
        let (ctx, _) = multitap_decode(MultiTap::default(), 2, 0);
        let (ctx, out) = multitap_decode(ctx, 3, 10);
        assert_eq!(out, Some('A'));
        assert_eq!(ctx.candidate(), Some('D'));
    }

    #[test]
    fn timeout_boundary() {
        let (ctx, _) = multitap_decode(MultiTap::default(), 2, 0);
        let (ctx, out) = multitap_decode(ctx, 2, 1001);
        assert_eq!(out, Some('A'));
        assert_eq!(ctx.candidate(), Some('A'));
        let (ctx, out) = multitap_decode(ctx, 2, 2001);
        assert_eq!(out, None);
        assert_eq!(ctx.candidate(), Some('B'));
    }

    #[test]
    fn cycles_wrap() {
        let mut ctx = MultiTap::default();
        for i in 0..5 {
            ctx.press(2, i * 100);
        }
        assert_eq!(ctx.candidate(), Some('A'));
        let mut ctx = MultiTap::default();
        ctx.press(1, 0);
        ctx.press(1, 100);
        assert_eq!(ctx.candidate(), Some('1'));
    }

    #[test]
    fn presses_for_inverts_tables() {
        for d in 0..=9u8 {
            for (i, &c) in cycle_table(d).iter().enumerate() {
                assert_eq!(presses_for(c), Some((d, i + 1)));
            }
        }
        assert_eq!(presses_for('a'), None);
    }
}
