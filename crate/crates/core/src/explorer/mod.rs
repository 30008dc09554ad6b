//! Interleaving semantics over built systems: enabled moves, single steps,
//! exhaustive exploration, adversarial and random schedules.

mod bypass;
mod check;
mod random;
mod starvation;
pub mod state;
mod store;
mod trace;

use thiserror::Error;

use crate::program::{Access, ConfigError, StepLabel, System};
use crate::sem::{Pid, SemError, TryP, WakeupPolicy};
use state::SystemState;

pub use bypass::{bypass_count, writer_waits, BypassStats, WriterWait};
pub use check::{
    explore, explore_system, DeadlockWitness, ExploreOptions, SafetyViolation, Verdict, MUTUAL_EXCLUSION,
    PERMIT_CONSERVATION, READER_CONCURRENCY,
};
pub use random::{run_random, RandomRun};
pub use starvation::{find_starvation_schedule, StarvationSchedule};
pub use trace::{ExecutionTrace, ReplayError, TraceParseError, TraceStep};

/// Default cap on distinct states per exploration.
pub const DEFAULT_STATE_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("process {pid} has no enabled step")]
    NotEnabled { pid: Pid },
    #[error("process {pid} does not exist")]
    UnknownProcess { pid: Pid },
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error("register {0} is not part of this system")]
    MissingRegister(crate::sem::RegId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("state budget of {budget} states exceeded")]
    BudgetExceeded { budget: usize },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("model invariant broken: {0}")]
    Invariant(String),
}

/// Whether `pid` can take its next step in `state`.
///
/// A process at a `P` step that is not yet queued may always try (it either
/// acquires or joins the queue). A queued process is enabled only under the
/// weak policy while a permit is free; under FIFO it leaves the queue through
/// a handoff performed by the releasing `V`.
pub fn is_enabled(system: &System, state: &SystemState, pid: Pid) -> bool {
    let Some(proc) = state.procs.get(pid.index()) else {
        return false;
    };
    if proc.halted {
        return false;
    }
    match system.program(pid).step_at(proc.pc as usize) {
        StepLabel::P(id) => {
            let sem = state.sem(id);
            !sem.is_waiting(pid) || (sem.policy() == WakeupPolicy::Weak && sem.value() > 0)
        }
        _ => true,
    }
}

/// Enabled processes in ascending pid order.
pub fn enabled_moves(system: &System, state: &SystemState) -> Vec<Pid> {
    (0..state.procs.len() as u16).map(Pid).filter(|&pid| is_enabled(system, state, pid)).collect()
}

/// Executes exactly one step of `pid`.
pub fn step(system: &System, state: &SystemState, pid: Pid) -> Result<SystemState, StepError> {
    if pid.index() >= state.procs.len() {
        return Err(StepError::UnknownProcess { pid });
    }
    if !is_enabled(system, state, pid) {
        return Err(StepError::NotEnabled { pid });
    }
    let program = system.program(pid);
    let pc = state.proc(pid).pc as usize;
    let mut next = state.clone();
    let me = pid.index();
    match program.step_at(pc) {
        StepLabel::P(id) => {
            let sem = state.sem(id);
            let s = id.index();
            if sem.is_waiting(pid) {
                next.sems[s] = sem.retry_p(pid)?;
                next.held[me][s] += 1;
                next.procs[me].pc += 1;
            } else {
                match sem.try_p(pid)? {
                    TryP::Acquired(after) => {
                        next.sems[s] = after;
                        next.held[me][s] += 1;
                        next.procs[me].pc += 1;
                    }
                    TryP::Blocked(after) => next.sems[s] = after,
                }
            }
        }
        StepLabel::V(id) => {
            let s = id.index();
            let (after, released) = state.sem(id).v();
            next.sems[s] = after;
            next.held[me][s] -= 1;
            if let Some(waiter) = released {
                // Direct handoff: the waiter moves past its P in the same step.
                next.held[waiter.index()][s] += 1;
                next.procs[waiter.index()].pc += 1;
            }
            next.procs[me].pc += 1;
        }
        StepLabel::RegAdd { reg, delta } => {
            let slot = next.regs.get_mut(reg.index()).ok_or(StepError::MissingRegister(reg))?;
            *slot = slot.offset(delta);
            next.procs[me].pc += 1;
        }
        StepLabel::RegCheckEq { reg, literal, else_skip } => {
            let value = state.regs.get(reg.index()).ok_or(StepError::MissingRegister(reg))?.value;
            next.procs[me].pc += if value == literal { 1 } else { 1 + else_skip };
        }
        StepLabel::EnterRead => {
            next.procs[me].cs = Some(Access::Read);
            next.procs[me].pc += 1;
        }
        StepLabel::EnterWrite => {
            next.procs[me].cs = Some(Access::Write);
            next.procs[me].pc += 1;
        }
        StepLabel::ExitRead | StepLabel::ExitWrite => {
            next.procs[me].cs = None;
            next.procs[me].pc += 1;
        }
        StepLabel::LocalWork => next.procs[me].pc += 1,
        StepLabel::LoopBack => {
            let proc = &mut next.procs[me];
            match program.loop_bound() {
                crate::program::LoopBound::Unbounded => proc.pc = 0,
                crate::program::LoopBound::Finite(_) => {
                    proc.remaining = proc.remaining.saturating_sub(1);
                    proc.pc = if proc.remaining > 0 { 0 } else { program.len() as u16 };
                }
            }
        }
        StepLabel::Halt => next.procs[me].halted = true,
    }
    Ok(next)
}
