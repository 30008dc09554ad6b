//! Semaphore-only reader-writer locking, checked two ways.
//!
//! The [`explorer`] runs reader and writer [`program`]s over the
//! deterministic semaphores of [`sem`] and enumerates every interleaving of
//! bounded instances. The [`runtime`] module implements the same algorithms
//! with real blocking semaphores for threads, and [`fairness`] turns wait
//! logs from either side into comparable reports.

pub mod explorer;
pub mod fairness;
pub mod program;
pub mod runtime;
pub mod sem;

pub use explorer::state::{Digest, ProcState, SystemState};
pub use explorer::{
    bypass_count, enabled_moves, explore, explore_system, find_starvation_schedule, run_random, step, BypassStats,
    ExecutionTrace, ExploreError, ExploreOptions, StarvationSchedule, TraceStep, Verdict,
};
pub use fairness::{EventLog, FairnessReport, TimeUnit, WaitSample};
pub use program::{build_system, Access, ConfigError, ProcessProgram, Role, StepLabel, System, SystemConfig, Variant};
pub use sem::{Pid, RegId, SemId, SemaphoreState, WakeupPolicy};
