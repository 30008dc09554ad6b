//! Real-thread reader-writer locks on blocking semaphores.

mod facade;
mod oplog;
mod probe;
mod semaphore;
mod stress;

pub use facade::{ExclusionGauge, ReadGuard, RuntimeError, RwFacade, WriteGuard, ANONYMOUS};
pub use oplog::OpLog;
pub use probe::{fairness_probe, ProbeConfig, ProbeOutcome, WorkloadSpec};
pub use semaphore::BlockingSemaphore;
pub use stress::{stress, StressConfig, StressOutcome};
