use std::sync::Mutex;

use crate::explorer::{ExecutionTrace, TraceStep};
use crate::program::StepLabel;
use crate::sem::Pid;

/// Operation-logging shim: every semaphore, counter and critical-section
/// operation the runtime lock performs, in call order.
#[derive(Debug, Default)]
pub struct OpLog {
    records: Mutex<Vec<(Pid, StepLabel)>>,
}

impl OpLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn record(&self, pid: Pid, label: StepLabel) {
        self.records.lock().unwrap_or_else(|p| p.into_inner()).push((pid, label));
    }

    pub fn records(&self) -> Vec<(Pid, StepLabel)> {
        self.records.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// The log as a trace without digests, in the explorer's line format.
    pub fn to_trace(&self) -> ExecutionTrace {
        let steps = self.records().into_iter().map(|(pid, label)| TraceStep { pid, label, digest: None }).collect();
        ExecutionTrace { steps, seed: None }
    }
}
