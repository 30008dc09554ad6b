//! Exhaustive depth-first exploration with state deduplication.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::state::SystemState;
use super::store::StateStore;
use super::trace::ExecutionTrace;
use super::{enabled_moves, step, ExploreError, DEFAULT_STATE_BUDGET};
use crate::program::{build_system, Role, StepLabel, System, SystemConfig};
use crate::sem::{Pid, SemId};

pub const MUTUAL_EXCLUSION: &str = "mutual_exclusion";
pub const PERMIT_CONSERVATION: &str = "permit_conservation";
pub const READER_CONCURRENCY: &str = "reader_concurrency";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    /// Maximum number of distinct states before giving up.
    pub budget: usize,
    /// Traces kept per category; counts are always complete.
    pub max_traces: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_STATE_BUDGET, max_traces: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyViolation {
    pub property: String,
    pub trace: ExecutionTrace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlockWitness {
    pub trace: ExecutionTrace,
    pub state: SystemState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub safety_violations: Vec<SafetyViolation>,
    pub safety_violation_count: u64,
    pub deadlocks: Vec<DeadlockWitness>,
    pub deadlock_count: u64,
    /// Every maximal path ends with all processes halted.
    pub all_terminate: bool,
    pub cycle_found: bool,
    pub states_visited: u64,
    pub transitions: u64,
    pub witnesses: BTreeMap<String, ExecutionTrace>,
    /// Worst-case reader entries during one acquisition window, per writer,
    /// over all reachable executions.
    pub bypass_stats: BTreeMap<Pid, u64>,
}

impl Verdict {
    /// No safety violation, no deadlock, every path terminates.
    pub fn holds(&self) -> bool {
        self.safety_violation_count == 0 && self.deadlock_count == 0 && self.all_terminate
    }

    pub fn violations_of<'a>(&'a self, property: &'a str) -> impl Iterator<Item = &'a SafetyViolation> + 'a {
        self.safety_violations.iter().filter(move |v| v.property == property)
    }
}

pub fn explore(config: SystemConfig) -> Result<Verdict, ExploreError> {
    explore_system(&build_system(config)?, ExploreOptions::default())
}

const ON_STACK: u8 = 1;
const DONE: u8 = 2;
const NO_PARENT: u32 = u32::MAX;

struct Frame {
    idx: u32,
    state: SystemState,
    moves: Vec<Pid>,
    next: usize,
    in_window: SmallVec<[bool; 2]>,
    /// Longest remaining bypass run per writer, folded in from children.
    best: SmallVec<[u32; 2]>,
    /// Bypass weight of the edge from the parent, per writer.
    incoming: SmallVec<[u32; 2]>,
}

struct Explorer<'a> {
    system: &'a System,
    options: ExploreOptions,
    writers: Vec<Pid>,
    store: StateStore,
    parent: Vec<(u32, Pid)>,
    color: Vec<u8>,
    /// Finished-state bypass runs, `writers.len()` entries per state.
    runs: Vec<u32>,
    violations: Vec<(String, u32)>,
    violation_count: u64,
    deadlocks: Vec<u32>,
    deadlock_count: u64,
    witnesses: BTreeMap<String, u32>,
    transitions: u64,
    cycle_found: bool,
    max_bypass: Vec<u32>,
}

pub fn explore_system(system: &System, options: ExploreOptions) -> Result<Verdict, ExploreError> {
    let writers: Vec<Pid> = system.writers().collect();
    let mut ex = Explorer {
        system,
        options,
        max_bypass: vec![0; writers.len()],
        writers,
        store: StateStore::new(),
        parent: Vec::new(),
        color: Vec::new(),
        runs: Vec::new(),
        violations: Vec::new(),
        violation_count: 0,
        deadlocks: Vec::new(),
        deadlock_count: 0,
        witnesses: BTreeMap::new(),
        transitions: 0,
        cycle_found: false,
    };
    ex.run()?;
    ex.into_verdict()
}

impl Explorer<'_> {
    /// Registers a successor; returns its frame if it was not seen before,
    /// otherwise its index.
    fn discover(
        &mut self,
        state: SystemState,
        parent: u32,
        via: Pid,
        incoming: SmallVec<[u32; 2]>,
    ) -> Result<Result<Frame, u32>, ExploreError> {
        let (idx, fresh) = self.store.insert(&state);
        if !fresh {
            return Ok(Err(idx));
        }
        if self.store.len() > self.options.budget {
            return Err(ExploreError::BudgetExceeded { budget: self.options.budget });
        }
        self.parent.push((parent, via));
        self.color.push(ON_STACK);
        self.runs.extend(std::iter::repeat_n(0, self.writers.len()));
        self.check_state(idx, &state)?;
        let moves = enabled_moves(self.system, &state);
        if moves.is_empty() && !state.all_halted() {
            self.deadlock_count += 1;
            self.deadlocks.push(idx);
        }
        let in_window = self.writers.iter().map(|&w| state.in_writer_window(self.system, w)).collect();
        Ok(Ok(Frame {
            idx,
            state,
            moves,
            next: 0,
            in_window,
            best: SmallVec::from_elem(0, self.writers.len()),
            incoming,
        }))
    }

    fn check_state(&mut self, idx: u32, state: &SystemState) -> Result<(), ExploreError> {
        for sem in &state.sems {
            sem.check_invariants().map_err(|e| ExploreError::Invariant(e.to_string()))?;
        }
        if !state.cs_consistent(self.system) {
            return Err(ExploreError::Invariant("critical-section tag disagrees with process role".into()));
        }
        if state.violates_exclusion() {
            self.record_violation(MUTUAL_EXCLUSION, idx);
        }
        for id in [SemId::MUTEX, SemId::ACCESS] {
            let initial = self.system.initial_value(id) as i64;
            let value = state.sem(id).value() as i64;
            let held: i64 = state.held.iter().map(|h| h[id.index()] as i64).sum();
            if value + held != initial || value > initial {
                self.record_violation(PERMIT_CONSERVATION, idx);
            }
        }
        if state.readers_in_cs() >= 2 && !self.witnesses.contains_key(READER_CONCURRENCY) {
            self.witnesses.insert(READER_CONCURRENCY.to_string(), idx);
        }
        Ok(())
    }

    fn record_violation(&mut self, property: &str, idx: u32) {
        self.violation_count += 1;
        if self.violations.len() < self.options.max_traces {
            self.violations.push((property.to_string(), idx));
        }
    }

    fn run(&mut self) -> Result<(), ExploreError> {
        let root = self
            .discover(self.system.initial().clone(), NO_PARENT, Pid(0), SmallVec::from_elem(0, self.writers.len()))?
            .map_err(|_| ExploreError::Invariant("store not empty at start".into()))?;
        let mut stack = vec![root];
        while let Some(frame) = stack.last_mut() {
            if frame.next < frame.moves.len() {
                let pid = frame.moves[frame.next];
                frame.next += 1;
                self.transitions += 1;
                let entering_reader = self.system.program(pid).role() == Role::Reader
                    && self.system.program(pid).step_at(frame.state.proc(pid).pc as usize) == StepLabel::EnterRead;
                let weights: SmallVec<[u32; 2]> =
                    frame.in_window.iter().map(|&open| (open && entering_reader) as u32).collect();
                let succ = step(self.system, &frame.state, pid)?;
                let parent_idx = frame.idx;
                match self.discover(succ, parent_idx, pid, weights.clone())? {
                    Ok(child) => stack.push(child),
                    Err(child_idx) => {
                        if self.color[child_idx as usize] == ON_STACK {
                            self.cycle_found = true;
                        } else {
                            let nw = self.writers.len();
                            let base = child_idx as usize * nw;
                            let frame = stack.last_mut().expect("frame");
                            for k in 0..nw {
                                frame.best[k] = frame.best[k].max(weights[k] + self.runs[base + k]);
                            }
                        }
                    }
                }
            } else {
                let mut done = stack.pop().expect("frame");
                let nw = self.writers.len();
                let base = done.idx as usize * nw;
                for k in 0..nw {
                    if !done.in_window[k] {
                        done.best[k] = 0;
                    }
                    self.runs[base + k] = done.best[k];
                    self.max_bypass[k] = self.max_bypass[k].max(done.best[k]);
                }
                self.color[done.idx as usize] = DONE;
                if let Some(parent) = stack.last_mut() {
                    for k in 0..nw {
                        parent.best[k] = parent.best[k].max(done.incoming[k] + done.best[k]);
                    }
                }
            }
        }
        Ok(())
    }

    fn schedule_to(&self, mut idx: u32) -> Vec<Pid> {
        let mut pids = Vec::new();
        while let Some(&(parent, via)) = self.parent.get(idx as usize) {
            if parent == NO_PARENT {
                break;
            }
            pids.push(via);
            idx = parent;
        }
        pids.reverse();
        pids
    }

    fn trace_to(&self, idx: u32) -> Result<(ExecutionTrace, SystemState), ExploreError> {
        ExecutionTrace::from_schedule(self.system, &self.schedule_to(idx))
            .map_err(|e| ExploreError::Invariant(format!("witness does not replay: {e}")))
    }

    fn into_verdict(self) -> Result<Verdict, ExploreError> {
        let mut safety_violations = Vec::new();
        for (property, idx) in &self.violations {
            let (trace, _) = self.trace_to(*idx)?;
            safety_violations.push(SafetyViolation { property: property.clone(), trace });
        }
        let mut deadlocks = Vec::new();
        for &idx in self.deadlocks.iter().take(self.options.max_traces) {
            let (trace, state) = self.trace_to(idx)?;
            deadlocks.push(DeadlockWitness { trace, state });
        }
        let mut witnesses = BTreeMap::new();
        for (name, &idx) in &self.witnesses {
            witnesses.insert(name.clone(), self.trace_to(idx)?.0);
        }
        let bypass_stats = self.writers.iter().zip(&self.max_bypass).map(|(&w, &b)| (w, b as u64)).collect();
        Ok(Verdict {
            safety_violations,
            safety_violation_count: self.violation_count,
            deadlocks,
            deadlock_count: self.deadlock_count,
            all_terminate: self.deadlock_count == 0 && !self.cycle_found,
            cycle_found: self.cycle_found,
            states_visited: self.store.len() as u64,
            transitions: self.transitions,
            witnesses,
            bypass_stats,
        })
    }
}
