use std::time::Instant;

use semrw_core::explorer::{find_starvation_schedule, ExploreError};
use semrw_core::fairness::aggregate;
use semrw_core::runtime::{fairness_probe, ProbeConfig};
use semrw_core::{build_system, explore_system, run_random, step, ExecutionTrace, ExploreOptions, SemId, Verdict};

use crate::report::{
    BenchSummary, DeadlockRef, ExploreSummary, RandomSummary, ReportDocument, RunResult, StarvationSummary, Timing,
    ToolInfo, TraceRef, ViolationRef,
};
use crate::scenario::{Mode, ScenarioFile, DEFAULT_SEED};
use crate::{CliError, Status};

/// A finished run: its report, its exit status and the traces for `--trace`.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: ReportDocument,
    pub status: Status,
    pub traces: Vec<(String, ExecutionTrace)>,
}

impl RunOutput {
    /// Traces in the explorer's line format, one `# trace` section each.
    pub fn trace_dump(&self) -> String {
        ExecutionTrace::sections_to_lines(self.traces.iter().map(|(n, t)| (n.as_str(), t)))
    }
}

fn trace_ref(name: &str, trace: &ExecutionTrace) -> TraceRef {
    TraceRef { name: name.to_string(), steps: trace.len(), final_digest: trace.final_digest() }
}

fn model_error(e: impl std::fmt::Display) -> CliError {
    CliError::Model(e.to_string())
}

pub fn run_scenario(scenario: &ScenarioFile) -> Result<RunOutput, CliError> {
    scenario.validate()?;
    let scenario = scenario.resolved();
    let started = Instant::now();
    let mut traces = Vec::new();
    let (result, status) = match scenario.mode {
        Mode::Explore => explore_mode(&scenario, &mut traces)?,
        Mode::StarveSearch => starve_mode(&scenario, &mut traces)?,
        Mode::Random => random_mode(&scenario, &mut traces)?,
        Mode::Bench => bench_mode(&scenario)?,
    };
    let report = ReportDocument {
        tool: ToolInfo::current(),
        scenario,
        result,
        timing: Timing::from_duration(started.elapsed()),
    };
    Ok(RunOutput { report, status, traces })
}

fn explore_mode(
    scenario: &ScenarioFile,
    traces: &mut Vec<(String, ExecutionTrace)>,
) -> Result<(RunResult, Status), CliError> {
    let system = build_system(scenario.config())?;
    let mut options = ExploreOptions::default();
    if let Some(budget) = scenario.budget {
        options.budget = budget;
    }
    let verdict = match explore_system(&system, options) {
        Ok(v) => v,
        Err(ExploreError::BudgetExceeded { budget }) => {
            return Ok((RunResult::BudgetExceeded { budget }, Status::BudgetExceeded))
        }
        Err(ExploreError::Config(e)) => return Err(e.into()),
        Err(e) => return Err(model_error(e)),
    };
    let summary = summarize(&verdict, traces);
    let status =
        if verdict.safety_violation_count > 0 || verdict.deadlock_count > 0 { Status::Violation } else { Status::Ok };
    Ok((RunResult::Explore(summary), status))
}

fn summarize(verdict: &Verdict, traces: &mut Vec<(String, ExecutionTrace)>) -> ExploreSummary {
    let mut keep = |name: String, trace: &ExecutionTrace| {
        let r = trace_ref(&name, trace);
        traces.push((name, trace.clone()));
        r
    };
    let violations = verdict
        .safety_violations
        .iter()
        .enumerate()
        .map(|(i, v)| ViolationRef { property: v.property.clone(), trace: keep(format!("violation-{i}"), &v.trace) })
        .collect();
    let deadlocks = verdict
        .deadlocks
        .iter()
        .enumerate()
        .map(|(i, d)| DeadlockRef {
            trace: keep(format!("deadlock-{i}"), &d.trace),
            access_held: d.state.held.iter().map(|h| h[SemId::ACCESS.index()]).collect(),
        })
        .collect();
    let witnesses = verdict.witnesses.iter().map(|(name, t)| (name.clone(), keep(name.clone(), t))).collect();
    ExploreSummary {
        states_visited: verdict.states_visited,
        transitions: verdict.transitions,
        safety_violation_count: verdict.safety_violation_count,
        deadlock_count: verdict.deadlock_count,
        all_terminate: verdict.all_terminate,
        cycle_found: verdict.cycle_found,
        violations,
        deadlocks,
        witnesses,
        bypass_stats: verdict.bypass_stats.clone(),
    }
}

fn starve_mode(
    scenario: &ScenarioFile,
    traces: &mut Vec<(String, ExecutionTrace)>,
) -> Result<(RunResult, Status), CliError> {
    let horizon = scenario.horizon.expect("validated");
    let found = match find_starvation_schedule(scenario.config(), horizon) {
        Ok(found) => found,
        Err(ExploreError::BudgetExceeded { budget }) => {
            return Ok((RunResult::BudgetExceeded { budget }, Status::BudgetExceeded))
        }
        Err(ExploreError::Config(e)) => return Err(e.into()),
        Err(e) => return Err(model_error(e)),
    };
    let summary = match found {
        Some(s) => {
            traces.push(("starvation".into(), s.trace.clone()));
            StarvationSummary {
                found: true,
                horizon,
                writer: Some(s.writer),
                trace: Some(trace_ref("starvation", &s.trace)),
                prefix_len: Some(s.prefix_len),
                cycle_len: Some(s.cycle_len),
                bypass: Some(s.bypass),
            }
        }
        None => StarvationSummary {
            found: false,
            horizon,
            writer: None,
            trace: None,
            prefix_len: None,
            cycle_len: None,
            bypass: None,
        },
    };
    Ok((RunResult::StarveSearch(summary), Status::Ok))
}

fn random_mode(
    scenario: &ScenarioFile,
    traces: &mut Vec<(String, ExecutionTrace)>,
) -> Result<(RunResult, Status), CliError> {
    let system = build_system(scenario.config())?;
    let seed = scenario.seed.unwrap_or(DEFAULT_SEED);
    let run = run_random(&system, seed, scenario.max_steps.expect("validated")).map_err(model_error)?;
    let mut state = system.initial().clone();
    let mut exclusion_violations = 0;
    for rec in &run.trace.steps {
        state = step(&system, &state, rec.pid).map_err(model_error)?;
        exclusion_violations += state.violates_exclusion() as u64;
    }
    let fairness = aggregate(&run.event_log(&system));
    let trace = trace_ref("random", &run.trace);
    traces.push(("random".into(), run.trace.clone()));
    let deadlocked = run.stuck && !run.final_state.all_halted();
    let status = if exclusion_violations > 0 || deadlocked { Status::Violation } else { Status::Ok };
    Ok((RunResult::Random(RandomSummary { seed, trace, deadlocked, exclusion_violations, fairness }), status))
}

fn bench_mode(scenario: &ScenarioFile) -> Result<(RunResult, Status), CliError> {
    let out = fairness_probe(ProbeConfig {
        variant: scenario.variant,
        policy: scenario.policy,
        capacity: scenario.m as usize,
        workload: scenario.workload.expect("validated"),
    })?;
    let status = if out.gauge_violations > 0 || !out.permits_restored { Status::Violation } else { Status::Ok };
    let summary = BenchSummary {
        gauge_violations: out.gauge_violations,
        permits_restored: out.permits_restored,
        fairness: out.report,
    };
    Ok((RunResult::Bench(summary), status))
}
