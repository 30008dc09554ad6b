use std::marker::PhantomData;
use std::sync::atomic::{AtomicI64, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use super::oplog::OpLog;
use super::semaphore::BlockingSemaphore;
use crate::program::{StepLabel, Variant};
use crate::sem::{Pid, RegId, SemId, WakeupPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("the runtime lock implements the standard and fair algorithms only")]
    UnsupportedVariant,
    #[error("capacity must be at least 1")]
    ZeroCapacity,
}

const WRITER: u64 = 1 << 32;
const READERS: u64 = WRITER - 1;

/// Entry/exit gauges checked on every critical-section transition.
///
/// Readers count in the low 32 bits and writers in the high bits of one
/// word, so every snapshot is consistent.
#[derive(Debug, Default)]
pub struct ExclusionGauge {
    inside: AtomicU64,
    max_readers: AtomicUsize,
    violations: AtomicU64,
}

impl ExclusionGauge {
    fn enter_read(&self, capacity: Option<usize>) {
        let now = self.inside.fetch_add(1, Ordering::SeqCst) + 1;
        let readers = (now & READERS) as usize;
        self.max_readers.fetch_max(readers, Ordering::SeqCst);
        if now >= WRITER || capacity.is_some_and(|c| readers > c) {
            self.violations.fetch_add(1, Ordering::SeqCst);
        }
    }

    fn exit_read(&self) {
        self.inside.fetch_sub(1, Ordering::SeqCst);
    }

    fn enter_write(&self) {
        let now = self.inside.fetch_add(WRITER, Ordering::SeqCst) + WRITER;
        if now != WRITER {
            self.violations.fetch_add(1, Ordering::SeqCst);
        }
    }

    fn exit_write(&self) {
        self.inside.fetch_sub(WRITER, Ordering::SeqCst);
    }

    /// Active `(readers, writers)` at one instant.
    pub fn snapshot(&self) -> (usize, usize) {
        let now = self.inside.load(Ordering::SeqCst);
        ((now & READERS) as usize, (now >> 32) as usize)
    }

    pub fn violations(&self) -> u64 {
        self.violations.load(Ordering::SeqCst)
    }

    /// Most readers observed inside at once.
    pub fn max_readers(&self) -> usize {
        self.max_readers.load(Ordering::SeqCst)
    }
}

/// Reader-writer lock built from two semaphores, following either the
/// counter-based or the semaphore-only algorithm.
///
/// `capacity` is the initial value of `access` for the fair variant; more
/// reader threads than `capacity` may use the lock, excess readers block.
/// The lock is not reentrant and offers no upgrade or downgrade.
#[derive(Debug)]
pub struct RwFacade {
    variant: Variant,
    capacity: usize,
    mutex: BlockingSemaphore,
    access: BlockingSemaphore,
    /// Reader count of the standard variant; only touched while holding `mutex`.
    num: AtomicI64,
    gauge: ExclusionGauge,
    reader_entries: AtomicU64,
    log: Option<Arc<OpLog>>,
}

/// Anonymous participant id used when the caller does not supply one.
pub const ANONYMOUS: Pid = Pid(u16::MAX);

impl RwFacade {
    pub fn new(variant: Variant, capacity: usize, policy: WakeupPolicy) -> Result<Self, RuntimeError> {
        if capacity == 0 {
            return Err(RuntimeError::ZeroCapacity);
        }
        let access_permits = match variant {
            Variant::Standard => 1,
            Variant::Fair => capacity,
            Variant::BrokenFairNoMutex => return Err(RuntimeError::UnsupportedVariant),
        };
        Ok(Self {
            variant,
            capacity,
            mutex: BlockingSemaphore::new(1, policy),
            access: BlockingSemaphore::new(access_permits, policy),
            num: AtomicI64::new(0),
            gauge: ExclusionGauge::default(),
            reader_entries: AtomicU64::new(0),
            log: None,
        })
    }

    /// Records every internal semaphore operation into `log`.
    pub fn with_log(mut self, log: Arc<OpLog>) -> Self {
        self.log = Some(log);
        self
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn gauge(&self) -> &ExclusionGauge {
        &self.gauge
    }

    /// Initial `(mutex, access)` permits.
    pub fn initial_permits(&self) -> (usize, usize) {
        match self.variant {
            Variant::Fair => (1, self.capacity),
            _ => (1, 1),
        }
    }

    /// Current free `(mutex, access)` permits.
    pub fn permits(&self) -> (usize, usize) {
        (self.mutex.permits(), self.access.permits())
    }

    pub fn reader_entries(&self) -> u64 {
        self.reader_entries.load(Ordering::SeqCst)
    }

    fn note(&self, pid: Pid, label: StepLabel) {
        if let Some(log) = &self.log {
            log.record(pid, label);
        }
    }

    fn sem(&self, id: SemId) -> &BlockingSemaphore {
        if id == SemId::MUTEX {
            &self.mutex
        } else {
            &self.access
        }
    }

    fn p(&self, pid: Pid, id: SemId) {
        self.note(pid, StepLabel::P(id));
        self.sem(id).acquire();
    }

    fn v(&self, pid: Pid, id: SemId) {
        self.note(pid, StepLabel::V(id));
        self.sem(id).release();
    }

    /// `num += delta` followed by the guard check against `literal`.
    fn bump_and_check(&self, pid: Pid, delta: i64, literal: i64) -> bool {
        self.note(pid, StepLabel::RegAdd { reg: RegId::NUM, delta });
        let now = self.num.fetch_add(delta, Ordering::SeqCst) + delta;
        self.note(pid, StepLabel::RegCheckEq { reg: RegId::NUM, literal, else_skip: 1 });
        now == literal
    }

    pub fn acquire_read(&self) -> ReadGuard<'_> {
        self.acquire_read_as(ANONYMOUS)
    }

    pub fn acquire_read_as(&self, pid: Pid) -> ReadGuard<'_> {
        match self.variant {
            Variant::Fair => self.p(pid, SemId::ACCESS),
            _ => {
                self.p(pid, SemId::MUTEX);
                if self.bump_and_check(pid, 1, 1) {
                    self.p(pid, SemId::ACCESS);
                }
                self.v(pid, SemId::MUTEX);
            }
        }
        let capacity = (self.variant == Variant::Fair).then_some(self.capacity);
        self.gauge.enter_read(capacity);
        self.reader_entries.fetch_add(1, Ordering::SeqCst);
        self.note(pid, StepLabel::EnterRead);
        ReadGuard { lock: self, pid, _not_send: PhantomData }
    }

    fn release_read(&self, pid: Pid) {
        self.note(pid, StepLabel::ExitRead);
        self.gauge.exit_read();
        match self.variant {
            Variant::Fair => self.v(pid, SemId::ACCESS),
            _ => {
                self.p(pid, SemId::MUTEX);
                if self.bump_and_check(pid, -1, 0) {
                    self.v(pid, SemId::ACCESS);
                }
                self.v(pid, SemId::MUTEX);
            }
        }
    }

    pub fn acquire_write(&self) -> WriteGuard<'_> {
        self.acquire_write_as(ANONYMOUS)
    }

    pub fn acquire_write_as(&self, pid: Pid) -> WriteGuard<'_> {
        let entries_at_first_p;
        match self.variant {
            Variant::Fair => {
                self.p(pid, SemId::MUTEX);
                entries_at_first_p = self.reader_entries();
                // One blocking P per permit; readers may interleave between them.
                for _ in 0..self.capacity {
                    self.p(pid, SemId::ACCESS);
                }
            }
            _ => {
                entries_at_first_p = self.reader_entries();
                self.p(pid, SemId::ACCESS);
            }
        }
        self.gauge.enter_write();
        self.note(pid, StepLabel::EnterWrite);
        let bypass = self.reader_entries() - entries_at_first_p;
        WriteGuard { lock: self, pid, bypass, _not_send: PhantomData }
    }

    fn release_write(&self, pid: Pid) {
        self.note(pid, StepLabel::ExitWrite);
        self.gauge.exit_write();
        match self.variant {
            Variant::Fair => {
                for _ in 0..self.capacity {
                    self.v(pid, SemId::ACCESS);
                }
                self.v(pid, SemId::MUTEX);
            }
            _ => self.v(pid, SemId::ACCESS),
        }
    }
}

/// Shared access; released on drop by the acquiring thread.
#[must_use = "dropping the guard releases the lock immediately"]
pub struct ReadGuard<'a> {
    lock: &'a RwFacade,
    pid: Pid,
    _not_send: PhantomData<*const ()>,
}

impl ReadGuard<'_> {
    pub fn release(self) {}
}

impl Drop for ReadGuard<'_> {
    fn drop(&mut self) {
        self.lock.release_read(self.pid);
    }
}

/// Exclusive access; released on drop by the acquiring thread.
#[must_use = "dropping the guard releases the lock immediately"]
pub struct WriteGuard<'a> {
    lock: &'a RwFacade,
    pid: Pid,
    bypass: u64,
    _not_send: PhantomData<*const ()>,
}

impl WriteGuard<'_> {
    /// Reader entries between this writer's first `P(access)` and its entry.
    pub fn bypass(&self) -> u64 {
        self.bypass
    }

    pub fn release(self) {}
}

impl Drop for WriteGuard<'_> {
    fn drop(&mut self) {
        self.lock.release_write(self.pid);
    }
}
