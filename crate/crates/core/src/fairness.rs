//! Fairness reports from writer wait logs.
//!
//! Model runs (time in scheduler steps) and runtime probes (time in
//! microseconds) both reduce to an [`EventLog`]; [`aggregate`] is a pure
//! function of that log.

use serde::{Deserialize, Serialize};

use crate::sem::Pid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Steps,
    Micros,
}

/// One writer acquisition: time from its first internal `P(access)` to
/// entry, and reader entries in between.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaitSample {
    pub writer: Pid,
    pub wait: u64,
    pub bypass: u64,
    /// False when the run ended before the writer got in.
    pub completed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub unit: TimeUnit,
    pub duration: u64,
    pub reader_entries: u64,
    pub writer_entries: u64,
    pub writers: Vec<Pid>,
    pub waits: Vec<WaitSample>,
}

/// Nearest-rank order statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distribution {
    pub min: u64,
    pub median: u64,
    pub p99: u64,
    pub max: u64,
}

impl Distribution {
    pub fn of(values: &[u64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let rank = |q: f64| {
            let r = (q * sorted.len() as f64).ceil() as usize;
            sorted[r.clamp(1, sorted.len()) - 1]
        };
        Some(Self { min: sorted[0], median: rank(0.5), p99: rank(0.99), max: sorted[sorted.len() - 1] })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WriterFairness {
    pub writer: Pid,
    pub samples: u64,
    pub completed: u64,
    pub wait: Option<Distribution>,
    pub max_bypass: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub unit: TimeUnit,
    pub duration: u64,
    pub reader_entries: u64,
    pub writer_entries: u64,
    /// Critical-section entries per second (micros) or per 1000 steps.
    pub throughput: f64,
    pub writers: Vec<WriterFairness>,
    pub max_bypass: Option<u64>,
    pub writer_wait_p99: Option<u64>,
    /// Set for zero-duration logs; all statistics are then empty.
    pub empty: bool,
}

impl FairnessReport {
    pub fn throughput_unit(&self) -> &'static str {
        match self.unit {
            TimeUnit::Steps => "entries/kstep",
            TimeUnit::Micros => "entries/s",
        }
    }
}

pub fn aggregate(log: &EventLog) -> FairnessReport {
    if log.duration == 0 {
        return FairnessReport {
            unit: log.unit,
            duration: 0,
            reader_entries: 0,
            writer_entries: 0,
            throughput: 0.0,
            writers: Vec::new(),
            max_bypass: None,
            writer_wait_p99: None,
            empty: true,
        };
    }
    let mut writers = log.writers.clone();
    writers.sort_unstable();
    writers.dedup();
    let per_writer: Vec<WriterFairness> = writers
        .iter()
        .map(|&writer| {
            let mine: Vec<&WaitSample> = log.waits.iter().filter(|w| w.writer == writer).collect();
            let waits: Vec<u64> = mine.iter().map(|w| w.wait).collect();
            WriterFairness {
                writer,
                samples: mine.len() as u64,
                completed: mine.iter().filter(|w| w.completed).count() as u64,
                wait: Distribution::of(&waits),
                max_bypass: mine.iter().map(|w| w.bypass).max(),
            }
        })
        .collect();
    let all_waits: Vec<u64> = log.waits.iter().map(|w| w.wait).collect();
    let scale = match log.unit {
        TimeUnit::Steps => 1_000.0,
        TimeUnit::Micros => 1_000_000.0,
    };
    let entries = (log.reader_entries + log.writer_entries) as f64;
    let throughput = (entries * scale / log.duration as f64 * 1000.0).round() / 1000.0;
    FairnessReport {
        unit: log.unit,
        duration: log.duration,
        reader_entries: log.reader_entries,
        writer_entries: log.writer_entries,
        throughput,
        max_bypass: per_writer.iter().filter_map(|w| w.max_bypass).max(),
        writer_wait_p99: Distribution::of(&all_waits).map(|d| d.p99),
        writers: per_writer,
        empty: false,
    }
}
