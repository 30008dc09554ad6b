//! Report documents.
//!
//! Top-level keys, in order: `tool`, `scenario`, `result`, `timing`. Only
//! `timing` depends on the clock; everything before it is a function of the
//! scenario for explore, starve-search and random runs.

use std::collections::BTreeMap;

use semrw_core::{Digest, FairnessReport, Pid};
use serde::{Deserialize, Serialize};

use crate::scenario::ScenarioFile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    pub scenario: ScenarioFile,
    pub result: RunResult,
    pub timing: Timing,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self { name: "semrw".into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Milliseconds, rounded to microseconds.
    pub wall_clock_ms: f64,
}

impl Timing {
    pub fn from_duration(d: std::time::Duration) -> Self {
        Self { wall_clock_ms: (d.as_secs_f64() * 1e6).round() / 1e3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunResult {
    Explore(ExploreSummary),
    BudgetExceeded { budget: usize },
    StarveSearch(StarvationSummary),
    Random(RandomSummary),
    Bench(BenchSummary),
}

/// A trace kept in the `--trace` dump under `name`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRef {
    pub name: String,
    pub steps: usize,
    pub final_digest: Option<Digest>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRef {
    pub property: String,
    pub trace: TraceRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlockRef {
    pub trace: TraceRef,
    /// `access` permits held by each process in the stuck state.
    pub access_held: Vec<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreSummary {
    pub states_visited: u64,
    pub transitions: u64,
    pub safety_violation_count: u64,
    pub deadlock_count: u64,
    pub all_terminate: bool,
    pub cycle_found: bool,
    pub violations: Vec<ViolationRef>,
    pub deadlocks: Vec<DeadlockRef>,
    pub witnesses: BTreeMap<String, TraceRef>,
    pub bypass_stats: BTreeMap<Pid, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarvationSummary {
    pub found: bool,
    pub horizon: usize,
    pub writer: Option<Pid>,
    pub trace: Option<TraceRef>,
    pub prefix_len: Option<usize>,
    pub cycle_len: Option<usize>,
    pub bypass: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSummary {
    pub seed: u64,
    pub trace: TraceRef,
    /// The run stopped before `max_steps` with some process not halted.
    pub deadlocked: bool,
    pub exclusion_violations: u64,
    pub fairness: FairnessReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub gauge_violations: u64,
    pub permits_restored: bool,
    pub fairness: FairnessReport,
}

impl RunResult {
    pub fn fairness(&self) -> Option<&FairnessReport> {
        match self {
            RunResult::Random(r) => Some(&r.fairness),
            RunResult::Bench(b) => Some(&b.fairness),
            _ => None,
        }
    }
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The report without its `timing` key.
    pub fn deterministic_json(&self) -> String {
        #[derive(Serialize)]
        struct Stable<'a> {
            tool: &'a ToolInfo,
            scenario: &'a ScenarioFile,
            result: &'a RunResult,
        }
        serde_json::to_string_pretty(&Stable { tool: &self.tool, scenario: &self.scenario, result: &self.result })
            .expect("reports serialize")
    }

    /// Tabular statistics: one row per writer plus an `all` row for
    /// random and bench runs, one summary row otherwise.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        match &self.result {
            RunResult::Explore(e) => {
                w.write_record([
                    "states_visited",
                    "transitions",
                    "safety_violations",
                    "deadlocks",
                    "all_terminate",
                    "cycle_found",
                    "max_bypass",
                ])
                .unwrap();
                w.write_record([
                    e.states_visited.to_string(),
                    e.transitions.to_string(),
                    e.safety_violation_count.to_string(),
                    e.deadlock_count.to_string(),
                    e.all_terminate.to_string(),
                    e.cycle_found.to_string(),
                    opt(e.bypass_stats.values().copied().max()),
                ])
                .unwrap();
            }
            RunResult::BudgetExceeded { budget } => {
                w.write_record(["budget_exceeded"]).unwrap();
                w.write_record([budget.to_string()]).unwrap();
            }
            RunResult::StarveSearch(s) => {
                w.write_record(["found", "horizon", "writer", "trace_len", "prefix_len", "cycle_len", "bypass"])
                    .unwrap();
                w.write_record([
                    s.found.to_string(),
                    s.horizon.to_string(),
                    opt(s.writer.map(|p| p.0 as u64)),
                    opt(s.trace.as_ref().map(|t| t.steps as u64)),
                    opt(s.prefix_len.map(|v| v as u64)),
                    opt(s.cycle_len.map(|v| v as u64)),
                    opt(s.bypass),
                ])
                .unwrap();
            }
            RunResult::Random(RandomSummary { fairness, .. }) | RunResult::Bench(BenchSummary { fairness, .. }) => {
                w.write_record([
                    "writer",
                    "samples",
                    "completed",
                    "wait_min",
                    "wait_median",
                    "wait_p99",
                    "wait_max",
                    "max_bypass",
                    "throughput",
                ])
                .unwrap();
                for wf in &fairness.writers {
                    let d = wf.wait;
                    w.write_record([
                        wf.writer.to_string(),
                        wf.samples.to_string(),
                        wf.completed.to_string(),
                        opt(d.map(|d| d.min)),
                        opt(d.map(|d| d.median)),
                        opt(d.map(|d| d.p99)),
                        opt(d.map(|d| d.max)),
                        opt(wf.max_bypass),
                        String::new(),
                    ])
                    .unwrap();
                }
                let samples: u64 = fairness.writers.iter().map(|w| w.samples).sum();
                let completed: u64 = fairness.writers.iter().map(|w| w.completed).sum();
                w.write_record([
                    "all".to_string(),
                    samples.to_string(),
                    completed.to_string(),
                    String::new(),
                    String::new(),
                    opt(fairness.writer_wait_p99),
                    String::new(),
                    opt(fairness.max_bypass),
                    format!("{:.3}", fairness.throughput),
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}
