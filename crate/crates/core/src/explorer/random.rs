use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bypass::BypassStats;
use super::state::SystemState;
use super::trace::{ExecutionTrace, TraceStep};
use super::{enabled_moves, step, StepError};
use crate::fairness::{EventLog, TimeUnit, WaitSample};
use crate::program::{StepLabel, System};

/// Result of one seeded random schedule.
#[derive(Clone, Debug)]
pub struct RandomRun {
    pub trace: ExecutionTrace,
    pub bypass: BypassStats,
    pub final_state: SystemState,
    /// The run stopped because nothing was enabled before `max_steps`.
    pub stuck: bool,
}

/// Picks uniformly among enabled moves at every step.
///
/// The generator is ChaCha8 seeded with `seed_from_u64(seed)`, so the same
/// system and seed always give the same trace.
pub fn run_random(system: &System, seed: u64, max_steps: usize) -> Result<RandomRun, StepError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = system.initial().clone();
    let mut steps = Vec::with_capacity(max_steps);
    let mut stuck = false;
    while steps.len() < max_steps {
        let moves = enabled_moves(system, &state);
        if moves.is_empty() {
            stuck = true;
            break;
        }
        let pid = moves[rng.random_range(0..moves.len())];
        let label = system.program(pid).step_at(state.proc(pid).pc as usize);
        state = step(system, &state, pid)?;
        steps.push(TraceStep { pid, label, digest: Some(state.digest()) });
    }
    let trace = ExecutionTrace { steps, seed: Some(seed) };
    let bypass = BypassStats::from_trace(&trace, system.writers());
    Ok(RandomRun { trace, bypass, final_state: state, stuck })
}

impl RandomRun {
    /// Wait and entry events of this run with time measured in steps.
    pub fn event_log(&self, system: &System) -> EventLog {
        let len = self.trace.len();
        let mut waits: Vec<WaitSample> = Vec::new();
        for writer in system.writers() {
            for w in super::writer_waits(&self.trace, writer) {
                waits.push(WaitSample {
                    writer,
                    wait: w.wait_steps(len),
                    bypass: w.bypass,
                    completed: w.entered_at.is_some(),
                });
            }
        }
        let count = |label| self.trace.steps.iter().filter(|s| s.label == label).count() as u64;
        EventLog {
            unit: TimeUnit::Steps,
            duration: len as u64,
            reader_entries: count(StepLabel::EnterRead),
            writer_entries: count(StepLabel::EnterWrite),
            writers: system.writers().collect(),
            waits,
        }
    }
}
