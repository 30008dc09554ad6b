//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use semrw_cli::{run_scenario, ScenarioFile};
use semrw_core::explorer::{find_starvation_schedule, READER_CONCURRENCY};
use semrw_core::runtime::{stress, OpLog, RwFacade, StressConfig};
use semrw_core::{
    build_system, enabled_moves, explore, explore_system, run_random, step, ExecutionTrace, ExploreOptions, Pid, SemId,
    StepLabel, SystemConfig, Variant, WakeupPolicy,
};

const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(5 * 60);
const SWEEP_BUDGET: usize = 10_000_000;
const STARVATION_HORIZONS: [usize; 3] = [50, 100, 200];
const RANDOM_SEEDS: u64 = 100;
const RANDOM_STEPS: [usize; 3] = [1_000, 5_000, 25_000];
const FIFO_GROWTH_TOLERANCE: f64 = 0.10;
/// Loop bound for random runs; far beyond what 25k steps can use up.
const RANDOM_LOOP_BOUND: u32 = 1_000_000;
const STRESS_ITERATIONS: u32 = 10_000;
const STRESS_TIME_LIMIT: Duration = Duration::from_secs(60);

const POLICIES: [WakeupPolicy; 2] = [WakeupPolicy::FifoStrong, WakeupPolicy::Weak];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn safety_sweep() -> Outcome {
    let t0 = Instant::now();
    let mut instances = 0;
    let mut states = 0;
    for variant in [Variant::Standard, Variant::Fair] {
        for policy in POLICIES {
            for m in 1..=3 {
                for n in 0..=2 {
                    for bound in 1..=2 {
                        let config = SystemConfig::new(variant, m, n, bound, policy);
                        let options = ExploreOptions { budget: SWEEP_BUDGET, ..ExploreOptions::default() };
                        let verdict = explore_system(&build_system(config).unwrap(), options)
                            .map_err(|e| format!("{config:?}: {e}"))?;
                        let me = verdict.violations_of(semrw_core::explorer::MUTUAL_EXCLUSION).count();
                        check(me == 0 && verdict.safety_violation_count == 0, || {
                            format!("{config:?}: {} safety violations", verdict.safety_violation_count)
                        })?;
                        instances += 1;
                        states += verdict.states_visited;
                    }
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    check(elapsed < SWEEP_TIME_LIMIT, || format!("took {elapsed:.1?}, limit {SWEEP_TIME_LIMIT:?}"))?;
    Ok(format!("{instances} instances, {states} states, 0 violations in {elapsed:.1?} (limit {SWEEP_TIME_LIMIT:?})"))
}

fn deadlock_dichotomy() -> Outcome {
    let options = ExploreOptions { max_traces: 1_000, ..ExploreOptions::default() };
    let config = SystemConfig::new(Variant::BrokenFairNoMutex, 2, 2, 1, WakeupPolicy::FifoStrong);
    let system = build_system(config).unwrap();
    let broken = explore_system(&system, options).map_err(|e| e.to_string())?;
    check(broken.deadlock_count >= 1, || "no deadlock in the variant without mutex".into())?;
    let writers: Vec<Pid> = system.writers().collect();
    let half = broken
        .deadlocks
        .iter()
        .find(|d| writers.iter().all(|w| d.state.held[w.index()][SemId::ACCESS.index()] == 1))
        .ok_or("no deadlock with one access permit per writer")?;
    let end = half.trace.replay(&system).map_err(|e| format!("witness does not replay: {e}"))?;
    check(end == half.state && enabled_moves(&system, &end).is_empty(), || "replayed witness is not stuck".into())?;

    let fair = explore(SystemConfig { variant: Variant::Fair, ..config }).map_err(|e| e.to_string())?;
    check(fair.deadlock_count == 0, || format!("fair variant has {} deadlocks", fair.deadlock_count))?;
    Ok(format!(
        "no mutex: {} deadlocks, half-permit witness of {} steps replays; with mutex: 0",
        broken.deadlock_count,
        half.trace.len()
    ))
}

fn reader_concurrency() -> Outcome {
    let config = SystemConfig::new(Variant::Fair, 2, 1, 1, WakeupPolicy::FifoStrong);
    let system = build_system(config).unwrap();
    let verdict = explore(config).map_err(|e| e.to_string())?;
    let witness = verdict.witnesses.get(READER_CONCURRENCY).ok_or("no reader concurrency witness")?;
    let end = witness.replay(&system).map_err(|e| e.to_string())?;
    check(end.readers_in_cs() == 2, || format!("{} readers inside at witness end", end.readers_in_cs()))?;
    Ok(format!("witness of {} steps ends with 2 readers inside", witness.len()))
}

fn starvation() -> Outcome {
    let standard = SystemConfig::new(Variant::Standard, 2, 1, 1, WakeupPolicy::FifoStrong);
    let system = build_system(standard).unwrap().unbounded();
    let mut counts = Vec::new();
    for horizon in STARVATION_HORIZONS {
        let found = find_starvation_schedule(standard, horizon)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("standard: no schedule at horizon {horizon}"))?;
        found.trace.replay(&system).map_err(|e| e.to_string())?;
        check(found.trace.len() >= horizon, || format!("trace shorter than {horizon}"))?;
        counts.push(found.bypass);
    }
    check(counts.windows(2).all(|w| w[0] < w[1]), || format!("standard bypass not increasing: {counts:?}"))?;
    let fair = SystemConfig { variant: Variant::Fair, ..standard };
    for horizon in STARVATION_HORIZONS {
        let found = find_starvation_schedule(fair, horizon).map_err(|e| e.to_string())?;
        check(found.is_none(), || format!("fair+fifo starves at horizon {horizon}"))?;
    }
    Ok(format!("standard bypass at {STARVATION_HORIZONS:?} = {counts:?}; fair+fifo absent at all three"))
}

/// Max bypass per seed at each step count.
fn random_bypass(policy: WakeupPolicy) -> Vec<[u64; 3]> {
    let config = SystemConfig::new(Variant::Fair, 4, 1, RANDOM_LOOP_BOUND, policy);
    let system = build_system(config).unwrap();
    (0..RANDOM_SEEDS)
        .map(|seed| {
            let mut row = [0; 3];
            for (slot, &steps) in row.iter_mut().zip(&RANDOM_STEPS) {
                *slot = run_random(&system, seed, steps).unwrap().bypass.max().unwrap_or(0);
            }
            row
        })
        .collect()
}

fn weak_vs_fifo() -> Outcome {
    let fifo = random_bypass(WakeupPolicy::FifoStrong);
    let fifo_max: Vec<u64> = (0..3).map(|i| fifo.iter().map(|r| r[i]).max().unwrap()).collect();
    let weak = random_bypass(WakeupPolicy::Weak);
    let weak_max: Vec<u64> = (0..3).map(|i| weak.iter().map(|r| r[i]).max().unwrap()).collect();
    let growing: Vec<u64> = (0..RANDOM_SEEDS).filter(|&s| weak[s as usize].windows(2).all(|w| w[0] < w[1])).collect();
    let detail = format!(
        "{RANDOM_SEEDS} seeds, steps {RANDOM_STEPS:?}: fifo max {fifo_max:?}, weak max {weak_max:?}, \
         weak seeds with strictly growing bypass: {}",
        growing.len()
    );
    let limit = fifo_max[1] as f64 * (1.0 + FIFO_GROWTH_TOLERANCE);
    check(fifo_max[2] as f64 <= limit, || {
        format!("{detail}; fifo max rose from {} to {} (limit {limit:.1})", fifo_max[1], fifo_max[2])
    })?;
    check(!growing.is_empty(), || format!("{detail}; no weak seed shows growth"))?;
    Ok(detail)
}

fn verdicts_match_oracle() -> Outcome {
    use oracle::{path_tree, reachable, Algo, Instance};
    let golden: serde_json::Value =
        serde_json::from_str(include_str!("../../core/tests/golden/state_counts.json")).unwrap();
    let expected = |variant: &str, m: u64, n: u64| {
        golden["instances"]
            .as_array()
            .unwrap()
            .iter()
            .find(|e| {
                e["variant"] == variant && e["m"] == m && e["n"] == n && e["loop_bound"] == 1 && e["policy"] == "fifo"
            })
            .map(|e| (e["states"].as_u64().unwrap(), e["transitions"].as_u64().unwrap()))
            .unwrap()
    };
    let mut notes = Vec::new();
    for (variant, algo, m, n) in [(Variant::Fair, Algo::Fair, 2, 1), (Variant::Standard, Algo::Standard, 1, 1)] {
        let config = SystemConfig::new(variant, m, n, 1, WakeupPolicy::FifoStrong);
        let verdict = explore(config).map_err(|e| e.to_string())?;
        let inst = Instance { algo, readers: m as usize, writers: n as usize, rounds: 1, fifo: true };
        let o = reachable(&inst);
        let ours = (verdict.safety_violation_count > 0, verdict.deadlock_count, verdict.all_terminate);
        let theirs = (o.exclusion_states > 0, o.deadlocks, o.all_terminate);
        check(ours == theirs, || format!("{variant} m={m}: explorer {ours:?} vs oracle {theirs:?}"))?;
        let counts = (verdict.states_visited, verdict.transitions);
        check(counts == (o.states, o.transitions), || format!("{variant} m={m}: counts {counts:?} vs oracle"))?;
        let golden = expected(&variant.to_string(), m as u64, n as u64);
        check(counts == golden, || format!("{variant} m={m}: counts {counts:?} vs golden {golden:?}"))?;
        notes.push(format!("{variant}({m},{n},1) {} states", counts.0));
        if variant == Variant::Standard {
            let tree = path_tree(&inst, 50_000_000).ok_or("path tree too large")?;
            check(tree.exclusion_nodes == 0 && tree.stuck_paths == 0 && tree.distinct == counts.0, || {
                format!("path tree disagrees: {tree:?}")
            })?;
            notes.push(format!("{} interleavings enumerated without merging", tree.paths));
        }
    }
    Ok(notes.join(", "))
}

fn conformance() -> Outcome {
    let m = 3u32;
    let config = SystemConfig::new(Variant::Fair, m, 1, 1, WakeupPolicy::FifoStrong);
    let system = build_system(config).unwrap();
    let mut state = system.initial().clone();
    let mut schedule = Vec::new();
    for pid in [Pid(0), Pid(m as u16)] {
        while !state.proc(pid).halted {
            state = step(&system, &state, pid).unwrap();
            schedule.push(pid);
        }
    }
    let (trace, _) = ExecutionTrace::from_schedule(&system, &schedule).map_err(|e| e.to_string())?;
    let model: Vec<(Pid, StepLabel)> =
        trace.steps.iter().filter(|s| s.label.is_lock_visible()).map(|s| (s.pid, s.label)).collect();

    let log = Arc::new(OpLog::new());
    let lock = RwFacade::new(Variant::Fair, m as usize, WakeupPolicy::FifoStrong).unwrap().with_log(Arc::clone(&log));
    lock.acquire_read_as(Pid(0)).release();
    lock.acquire_write_as(Pid(m as u16)).release();
    let runtime = log.records();
    check(runtime == model, || format!("runtime {runtime:?} vs model {model:?}"))?;
    let count = |label| runtime.iter().filter(|(p, l)| *p == Pid(m as u16) && *l == label).count();
    let (p, v) = (count(StepLabel::P(SemId::ACCESS)), count(StepLabel::V(SemId::ACCESS)));
    check(p == 3 && v == 3, || format!("writer did {p} P(access) and {v} V(access)"))?;
    Ok(format!("{} operations identical, writer path has 3 P(access) and 3 V(access)", runtime.len()))
}

fn runtime_stress() -> Outcome {
    let mut notes = Vec::new();
    for variant in [Variant::Standard, Variant::Fair] {
        for policy in POLICIES {
            let out = stress(StressConfig {
                variant,
                policy,
                capacity: 4,
                readers: 4,
                writers: 2,
                iterations: STRESS_ITERATIONS,
            })
            .map_err(|e| e.to_string())?;
            let tag = format!("{variant}/{policy}");
            check(out.gauge_violations == 0 && out.observed_violations == 0, || {
                format!("{tag}: exclusion gauge fired")
            })?;
            check(out.permits_restored, || format!("{tag}: permits not restored"))?;
            check(out.elapsed < STRESS_TIME_LIMIT, || format!("{tag}: took {:?}", out.elapsed))?;
            notes.push(format!("{tag} {:.1?}", out.elapsed));
        }
    }
    Ok(format!("4 readers + 2 writers x {STRESS_ITERATIONS}: {} (limit {STRESS_TIME_LIMIT:?} each)", notes.join(", ")))
}

fn determinism() -> Outcome {
    let explore = r#"{"variant": "fair", "m": 2, "n": 2, "loop_bound": 1, "policy": "weak", "mode": "explore"}"#;
    let random = r#"{"variant": "fair", "m": 4, "n": 1, "loop_bound": 1000, "policy": "fifo", "mode": "random", "seed": 42, "max_steps": 5000}"#;
    for text in [explore, random] {
        let scenario = ScenarioFile::parse(text).map_err(|e| e.to_string())?;
        let a = run_scenario(&scenario).map_err(|e| e.to_string())?;
        let b = run_scenario(&scenario).map_err(|e| e.to_string())?;
        check(a.report.deterministic_json() == b.report.deterministic_json(), || {
            format!("{} reports differ", scenario.mode)
        })?;
        check(a.trace_dump() == b.trace_dump(), || format!("{} traces differ", scenario.mode))?;
    }
    Ok("explore and fixed-seed random reports byte-identical apart from timing".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("safety sweep", safety_sweep),
        ("deadlock dichotomy", deadlock_dichotomy),
        ("reader concurrency", reader_concurrency),
        ("starvation demonstration", starvation),
        ("weak vs fifo fairness gap", weak_vs_fifo),
        ("oracle equivalence", verdicts_match_oracle),
        ("model/runtime conformance", conformance),
        ("runtime stress", runtime_stress),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {} {name} [{:.1?}]: {detail}", i + 1, t0.elapsed());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
