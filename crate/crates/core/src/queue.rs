//! Bounded circular FIFO of patient records.
//!
//! The queue lives in volatile memory: [`PatientQueue::power_loss`] drops every
//! record and restarts serial numbering at 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of slots.
pub const DEFAULT_CAPACITY: usize = 64;

/// Size of one record in the SRAM model and on the wire:
/// 2 serial + 8 name + 1 age + 11 mobile + 2 temp + 1 bpm + 1 flags.
pub const RECORD_BYTES: usize = 26;

pub const NAME_MAX_LEN: usize = 8;
pub const MOBILE_LEN: usize = 11;
pub const AGE_MIN: u8 = 1;
pub const AGE_MAX: u8 = 120;
/// Plausible measured temperature window, tenths of °C.
pub const TEMP_MIN_DECI_C: i16 = 200;
pub const TEMP_MAX_DECI_C: i16 = 450;
pub const BPM_MAX: u8 = 250;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("serial must be at least 1")]
    Serial,
    #[error("name code must be 1-8 characters from A-Z and 0-9, got {0:?}")]
    Name(String),
    #[error("age must be within 1-120, got {0}")]
    Age(u8),
    #[error("mobile number must be exactly 11 digits, got {0:?}")]
    Mobile(String),
    #[error("temperature {0} deci-C outside 20.0-45.0 C (0 = unmeasured)")]
    Temperature(i16),
    #[error("bpm {0} above 250")]
    Bpm(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueueError {
    #[error("queue full")]
    Full,
    #[error("queue empty")]
    Empty,
    #[error("serial counter exhausted")]
    SerialExhausted,
    #[error("invalid record: {0}")]
    InvalidRecord(#[from] FieldError),
}

/// Registration data collected by the booth, before a serial is assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientData {
    pub name_code: String,
    pub age: u8,
    pub mobile: String,
    /// Tenths of °C; 0 when unmeasured.
    pub temp_deci_c: i16,
    /// 0 when unmeasured.
    pub bpm: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatientRecord {
    pub serial: u16,
    pub name_code: String,
    pub age: u8,
    pub mobile: String,
    pub temp_deci_c: i16,
    pub bpm: u8,
}

pub fn validate_name(name: &str) -> Result<(), FieldError> {
    let ok = (1..=NAME_MAX_LEN).contains(&name.len())
        && name.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
    if ok {
        Ok(())
    } else {
        Err(FieldError::Name(name.to_string()))
    }
}

pub fn validate_age(age: u8) -> Result<(), FieldError> {
    if (AGE_MIN..=AGE_MAX).contains(&age) {
        Ok(())
    } else {
        Err(FieldError::Age(age))
    }
}

pub fn validate_mobile(mobile: &str) -> Result<(), FieldError> {
    if mobile.len() == MOBILE_LEN && mobile.bytes().all(|b| b.is_ascii_digit()) {
        Ok(())
    } else {
        Err(FieldError::Mobile(mobile.to_string()))
    }
}

pub fn validate_temperature(temp_deci_c: i16) -> Result<(), FieldError> {
    if temp_deci_c == 0 || (TEMP_MIN_DECI_C..=TEMP_MAX_DECI_C).contains(&temp_deci_c) {
        Ok(())
    } else {
        Err(FieldError::Temperature(temp_deci_c))
    }
}

impl PatientData {
    pub fn validate(&self) -> Result<(), FieldError> {
        validate_name(&self.name_code)?;
        validate_age(self.age)?;
        validate_mobile(&self.mobile)?;
        validate_temperature(self.temp_deci_c)?;
        if self.bpm > BPM_MAX {
            return Err(FieldError::Bpm(self.bpm));
        }
        Ok(())
    }

    pub fn with_serial(self, serial: u16) -> PatientRecord {
        PatientRecord {
            serial,
            name_code: self.name_code,
            age: self.age,
            mobile: self.mobile,
            temp_deci_c: self.temp_deci_c,
            bpm: self.bpm,
        }
    }
}

impl PatientRecord {
    pub fn validate(&self) -> Result<(), FieldError> {
        if self.serial == 0 {
            return Err(FieldError::Serial);
        }
        self.data().validate()
    }

    pub fn data(&self) -> PatientData {
        PatientData {
            name_code: self.name_code.clone(),
            age: self.age,
            mobile: self.mobile.clone(),
            temp_deci_c: self.temp_deci_c,
            bpm: self.bpm,
        }
    }
}

/// Fixed-capacity ring of patient records with a monotonic serial counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientQueue {
    slots: Vec<Option<PatientRecord>>,
    head: usize,
    count: usize,
    next_serial: u32,
}

impl Default for PatientQueue {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl PatientQueue {
    /// # Panics
    ///
    /// Panics if `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self {
            slots: vec![None; capacity],
            head: 0,
            count: 0,
            next_serial: 1,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.slots.len()
    }

    pub fn next_serial(&self) -> u32 {
        self.next_serial
    }

    /// Validates `data`, assigns the next serial and appends at the tail.
    pub fn enqueue(&mut self, data: PatientData) -> Result<u16, QueueError> {
        data.validate()?;
        if self.is_full() {
            return Err(QueueError::Full);
        }
        let serial = u16::try_from(self.next_serial).map_err(|_| QueueError::SerialExhausted)?;
        let tail = (self.head + self.count) % self.slots.len();
        self.slots[tail] = Some(data.with_serial(serial));
        self.count += 1;
        self.next_serial += 1;
        Ok(serial)
    }

    pub fn dequeue(&mut self) -> Result<PatientRecord, QueueError> {
        if self.count == 0 {
            return Err(QueueError::Empty);
        }
        let record = self.slots[self.head]
            .take()
            .expect("occupied slot at head");
        self.head = (self.head + 1) % self.slots.len();
        self.count -= 1;
        if self.count == 0 {
            self.head = 0;
        }
        Ok(record)
    }

    pub fn peek(&self) -> Option<&PatientRecord> {
        if self.count == 0 {
            None
        } else {
            self.slots[self.head].as_ref()
        }
    }

    /// Volatile memory is lost: queue empties and serials restart at 1.
    pub fn power_loss(&mut self) {
        self.slots.iter_mut().for_each(|slot| *slot = None);
        self.head = 0;
        self.count = 0;
        self.next_serial = 1;
    }

    /// Records from head to tail.
    pub fn iter(&self) -> impl Iterator<Item = &PatientRecord> + '_ {
        let cap = self.slots.len();
        (0..self.count).filter_map(move |i| self.slots[(self.head + i) % cap].as_ref())
    }

    pub fn serials(&self) -> Vec<u16> {
        self.iter().map(|r| r.serial).collect()
    }
}

/// Number of whole records that fit in `sram_budget_bytes`.
pub fn max_capacity(record_bytes: usize, sram_budget_bytes: usize) -> usize {
    assert!(record_bytes >= 1, "record size must be positive");
    sram_budget_bytes / record_bytes
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    pub(crate) fn data(name: &str) -> PatientData {
        PatientData {
            name_code: name.to_string(),
            age: 30,
            mobile: "01712345678".to_string(),
            temp_deci_c: 366,
            bpm: 72,
        }
    }

    #[test]
    fn first_enqueue_gets_serial_one() {
        let mut q = PatientQueue::default();
        assert_eq!(q.enqueue(data("A")), Ok(1));
        assert_eq!(q.len(), 1);
        assert_eq!(q.capacity(), 64);
    }

    #[test]
    fn fills_to_capacity_then_rejects() {
        let mut q = PatientQueue::new(DEFAULT_CAPACITY);
        for expected in 1..=64u16 {
            assert_eq!(q.enqueue(data("P")), Ok(expected));
        }
        let before = q.clone();
        assert_eq!(q.enqueue(data("P")), Err(QueueError::Full));
        assert_eq!(q, before);
    }

    #[test]
    fn fifo_past_fifty_entries() {
        let mut q = PatientQueue::default();
        let names: Vec<String> = (0..55).map(|i| format!("P{i}")).collect();
        for n in &names {
            q.enqueue(data(n)).unwrap();
        }
        let out: Vec<String> = (0..55).map(|_| q.dequeue().unwrap().name_code).collect();
        assert_eq!(out, names);
    }

    #[test]
    fn fifo_pair_and_empty() {
        let mut q = PatientQueue::default();
        q.enqueue(data("A")).unwrap();
        q.enqueue(data("B")).unwrap();
        assert_eq!(q.dequeue().unwrap().name_code, "A");
        assert_eq!(q.dequeue().unwrap().name_code, "B");
        let before = q.clone();
        assert_eq!(q.dequeue(), Err(QueueError::Empty));
        assert_eq!(q, before);
    }

    #[test]
    fn power_loss_clears_and_resets_serial() {
        let mut q = PatientQueue::default();
        for _ in 0..10 {
            q.enqueue(data("X")).unwrap();
        }
        q.power_loss();
        assert!(q.is_empty());
        assert_eq!(q.next_serial(), 1);
        q.power_loss();
        assert!(q.is_empty());
        assert_eq!(q.enqueue(data("Y")), Ok(1));
    }

    #[test]
    fn invalid_records_rejected_without_mutation() {
        let mut q = PatientQueue::default();
        let before = q.clone();
        let mut bad = data("A");
        bad.age = 0;
        assert!(matches!(q.enqueue(bad), Err(QueueError::InvalidRecord(FieldError::Age(0)))));
        let mut bad = data("a");
        bad.name_code = "abc".into();
        assert!(q.enqueue(bad).is_err());
        let mut bad = data("A");
        bad.mobile = "123".into();
        assert!(q.enqueue(bad).is_err());
        let mut bad = data("A");
        bad.temp_deci_c = 199;
        assert!(q.enqueue(bad).is_err());
        let mut bad = data("A");
        bad.bpm = 251;
        assert!(q.enqueue(bad).is_err());
        assert_eq!(q, before);
    }

    #[test]
    fn capacity_model() {
        assert_eq!(max_capacity(RECORD_BYTES, 1536), 59);
        assert_eq!(max_capacity(RECORD_BYTES, 0), 0);
        assert!(max_capacity(RECORD_BYTES, 1536) > 50);
    }

    #[test]
    fn wraps_without_loss() {
        let cap = 8;
        let mut q = PatientQueue::new(cap);
        q.enqueue(data("SEED")).unwrap();
        let mut expected = 2u16;
        for _ in 0..cap * 3 {
            q.enqueue(data("W")).unwrap();
            let r = q.dequeue().unwrap();
            assert_eq!(r.serial, expected - 1);
            expected += 1;
        }
        assert_eq!(q.len(), 1);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Enq,
        Deq,
        Power,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![4 => Just(Op::Enq), 4 => Just(Op::Deq), 1 => Just(Op::Power)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_unbounded_list_oracle(cap in 1usize..80, ops in proptest::collection::vec(op(), 0..10_000)) {
            let mut q = PatientQueue::new(cap);
            let mut oracle: VecDeque<u16> = VecDeque::new();
            let mut oracle_next = 1u16;
            for op in ops {
                match op {
                    Op::Enq => {
                        let before = q.clone();
                        let got = q.enqueue(data("Q"));
                        if oracle.len() == cap {
                            prop_assert_eq!(got, Err(QueueError::Full));
                            prop_assert_eq!(&q, &before);
                        } else {
                            prop_assert_eq!(got, Ok(oracle_next));
                            oracle.push_back(oracle_next);
                            oracle_next += 1;
                        }
                    }
                    Op::Deq => {
                        let before = q.clone();
                        match oracle.pop_front() {
                            Some(s) => prop_assert_eq!(q.dequeue().unwrap().serial, s),
                            None => {
                                prop_assert_eq!(q.dequeue(), Err(QueueError::Empty));
                                prop_assert_eq!(&q, &before);
                            }
                        }
                    }
                    Op::Power => {
                        q.power_loss();
                        oracle.clear();
                        oracle_next = 1;
                    }
                }
                let serials = q.serials();
                prop_assert!(serials.windows(2).all(|w| w[1] == w[0] + 1));
                prop_assert_eq!(serials, oracle.iter().copied().collect::<Vec<_>>());
            }
        }
    }
}
