//! Execution traces and their line-delimited text form.
//!
//! One step per line, tab separated: `index pid label digest`. The digest is
//! the hex digest of the state after the step, or `-` when the producer has
//! no model state (the runtime operation log). Lines starting with `#` are
//! comments; `# seed <n>` records the random seed and `# trace <name>`
//! starts a named section in multi-trace dumps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::state::{Digest, SystemState};
use super::{step, StepError};
use crate::program::{StepLabel, System};
use crate::sem::Pid;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub pid: Pid,
    pub label: StepLabel,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub digest: Option<Digest>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {index}: {source}")]
    Step { index: usize, source: StepError },
    #[error("step {index}: expected label {expected}, trace says {found}")]
    Label { index: usize, expected: StepLabel, found: StepLabel },
    #[error("step {index}: digest mismatch (computed {computed}, trace says {recorded})")]
    Digest { index: usize, computed: Digest, recorded: Digest },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {reason}")]
pub struct TraceParseError {
    pub line: usize,
    pub reason: String,
}

impl ExecutionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn pids(&self) -> Vec<Pid> {
        self.steps.iter().map(|s| s.pid).collect()
    }

    /// Runs a schedule from the initial state, recording labels and digests.
    pub fn from_schedule(system: &System, schedule: &[Pid]) -> Result<(Self, SystemState), ReplayError> {
        let mut state = system.initial().clone();
        let mut steps = Vec::with_capacity(schedule.len());
        for (index, &pid) in schedule.iter().enumerate() {
            let label = system.program(pid).step_at(state.proc(pid).pc as usize);
            state = step(system, &state, pid).map_err(|source| ReplayError::Step { index, source })?;
            steps.push(TraceStep { pid, label, digest: Some(state.digest()) });
        }
        Ok((Self { steps, seed: None }, state))
    }

    /// Replays the trace, checking every label and every recorded digest.
    pub fn replay(&self, system: &System) -> Result<SystemState, ReplayError> {
        let mut state = system.initial().clone();
        for (index, rec) in self.steps.iter().enumerate() {
            if rec.pid.index() >= state.procs.len() {
                return Err(ReplayError::Step { index, source: StepError::UnknownProcess { pid: rec.pid } });
            }
            let expected = system.program(rec.pid).step_at(state.proc(rec.pid).pc as usize);
            if expected != rec.label {
                return Err(ReplayError::Label { index, expected, found: rec.label });
            }
            state = step(system, &state, rec.pid).map_err(|source| ReplayError::Step { index, source })?;
            if let Some(recorded) = rec.digest {
                let computed = state.digest();
                if computed != recorded {
                    return Err(ReplayError::Digest { index, computed, recorded });
                }
            }
        }
        Ok(state)
    }

    pub fn final_digest(&self) -> Option<Digest> {
        self.steps.last().and_then(|s| s.digest)
    }

    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        self.write_lines(&mut out);
        out
    }

    fn write_lines(&self, out: &mut String) {
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed {seed}");
        }
        for (index, rec) in self.steps.iter().enumerate() {
            let _ = match rec.digest {
                Some(d) => writeln!(out, "{index}\t{}\t{}\t{d}", rec.pid, rec.label),
                None => writeln!(out, "{index}\t{}\t{}\t-", rec.pid, rec.label),
            };
        }
    }

    /// Parses a single trace; section headers are ignored.
    pub fn parse_lines(text: &str) -> Result<Self, TraceParseError> {
        let mut sections = Self::parse_sections(text)?;
        match sections.len() {
            0 => Ok(Self::default()),
            1 => Ok(sections.remove(0).1),
            _ => Err(TraceParseError { line: 0, reason: "multiple trace sections".into() }),
        }
    }

    pub fn sections_to_lines<'a>(sections: impl IntoIterator<Item = (&'a str, &'a ExecutionTrace)>) -> String {
        let mut out = String::new();
        for (name, trace) in sections {
            let _ = writeln!(out, "# trace {name}");
            trace.write_lines(&mut out);
        }
        out
    }

    pub fn parse_sections(text: &str) -> Result<Vec<(String, Self)>, TraceParseError> {
        let mut sections: Vec<(String, Self)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(name) = comment.strip_prefix("trace ") {
                    sections.push((name.trim().to_string(), Self::default()));
                } else if let Some(seed) = comment.strip_prefix("seed ") {
                    let seed = seed
                        .trim()
                        .parse()
                        .map_err(|_| TraceParseError { line: line_no, reason: format!("bad seed `{seed}`") })?;
                    current(&mut sections).seed = Some(seed);
                }
                continue;
            }
            let err = |reason: String| TraceParseError { line: line_no, reason };
            let fields: Vec<&str> = line.split('\t').collect();
            let [index, pid, label, digest] = fields.as_slice() else {
                return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
            };
            let trace = current(&mut sections);
            let index: usize = index.parse().map_err(|_| err(format!("bad index `{index}`")))?;
            if index != trace.steps.len() {
                return Err(err(format!("index {index} out of sequence")));
            }
            let pid = pid.parse().map(Pid).map_err(|_| err(format!("bad pid `{pid}`")))?;
            let label = label.parse().map_err(err)?;
            let digest = match *digest {
                "-" => None,
                hex => Some(hex.parse().map_err(err)?),
            };
            trace.steps.push(TraceStep { pid, label, digest });
        }
        Ok(sections)
    }
}

fn current(sections: &mut Vec<(String, ExecutionTrace)>) -> &mut ExecutionTrace {
    if sections.is_empty() {
        sections.push((String::new(), ExecutionTrace::default()));
    }
    &mut sections.last_mut().expect("nonempty").1
}
