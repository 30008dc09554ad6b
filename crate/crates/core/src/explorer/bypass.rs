use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::trace::ExecutionTrace;
use crate::program::StepLabel;
use crate::sem::{Pid, SemId};

/// One writer acquisition window inside a trace: from its first `P(access)`
/// of an iteration up to its `ENTER_WRITE` (or the end of the trace).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WriterWait {
    pub start: usize,
    /// Index of the `ENTER_WRITE` step; `None` if the trace ends first.
    pub entered_at: Option<usize>,
    pub bypass: u64,
}

impl WriterWait {
    /// Steps spent waiting, counting up to `trace_len` when unfinished.
    pub fn wait_steps(&self, trace_len: usize) -> u64 {
        (self.entered_at.unwrap_or(trace_len) - self.start) as u64
    }
}

pub fn writer_waits(trace: &ExecutionTrace, writer: Pid) -> Vec<WriterWait> {
    let mut waits = Vec::new();
    let mut open: Option<WriterWait> = None;
    for (i, rec) in trace.steps.iter().enumerate() {
        if rec.pid == writer {
            match rec.label {
                StepLabel::P(SemId::ACCESS) if open.is_none() => {
                    open = Some(WriterWait { start: i, entered_at: None, bypass: 0 });
                }
                StepLabel::EnterWrite => {
                    if let Some(mut w) = open.take() {
                        w.entered_at = Some(i);
                        waits.push(w);
                    }
                }
                _ => {}
            }
        } else if rec.label == StepLabel::EnterRead {
            if let Some(w) = open.as_mut() {
                w.bypass += 1;
            }
        }
    }
    waits.extend(open);
    waits
}

/// Reader entries during each of the writer's acquisition windows, in order.
/// Empty if the writer never reaches its `P(access)`.
pub fn bypass_count(trace: &ExecutionTrace, writer: Pid) -> Vec<u64> {
    writer_waits(trace, writer).into_iter().map(|w| w.bypass).collect()
}

/// Per-writer bypass counts, one entry per acquisition window.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BypassStats {
    pub per_writer: BTreeMap<Pid, Vec<u64>>,
}

impl BypassStats {
    pub fn from_trace(trace: &ExecutionTrace, writers: impl IntoIterator<Item = Pid>) -> Self {
        let per_writer = writers.into_iter().map(|w| (w, bypass_count(trace, w))).collect();
        Self { per_writer }
    }

    pub fn max_for(&self, writer: Pid) -> Option<u64> {
        self.per_writer.get(&writer).and_then(|v| v.iter().copied().max())
    }

    /// Largest window count over all writers.
    pub fn max(&self) -> Option<u64> {
        self.per_writer.values().flatten().copied().max()
    }
}
