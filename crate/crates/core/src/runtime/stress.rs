use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use super::facade::{RuntimeError, RwFacade};
use crate::program::Variant;
use crate::sem::{Pid, WakeupPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StressConfig {
    pub variant: Variant,
    pub policy: WakeupPolicy,
    pub capacity: usize,
    pub readers: u16,
    pub writers: u16,
    /// Acquire/release rounds per thread.
    pub iterations: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StressOutcome {
    /// Gauge violations seen at critical-section transitions.
    pub gauge_violations: u64,
    /// Bad snapshots seen by the observer thread.
    pub observed_violations: u64,
    pub observations: u64,
    pub reader_entries: u64,
    pub writer_entries: u64,
    pub permits_restored: bool,
    pub elapsed: Duration,
}

/// Hammers one lock from `readers + writers` threads while an observer
/// thread samples the exclusion gauges.
pub fn stress(config: StressConfig) -> Result<StressOutcome, RuntimeError> {
    let lock = Arc::new(RwFacade::new(config.variant, config.capacity, config.policy)?);
    let workers = config.readers as usize + config.writers as usize;
    let start = Arc::new(Barrier::new(workers + 1));
    let done = Arc::new(AtomicBool::new(false));
    let t0 = Instant::now();

    let observer = {
        let (lock, done) = (Arc::clone(&lock), Arc::clone(&done));
        let cap = (config.variant == Variant::Fair).then_some(config.capacity);
        thread::spawn(move || {
            let (mut seen, mut bad) = (0u64, 0u64);
            while !done.load(Ordering::SeqCst) {
                let (readers, writers) = lock.gauge().snapshot();
                seen += 1;
                if writers > 1 || (writers == 1 && readers > 0) || cap.is_some_and(|c| readers > c) {
                    bad += 1;
                }
                thread::yield_now();
            }
            (seen, bad)
        })
    };

    let mut handles = Vec::with_capacity(workers);
    for i in 0..workers as u16 {
        let (lock, start) = (Arc::clone(&lock), Arc::clone(&start));
        let is_reader = i < config.readers;
        let iterations = config.iterations;
        handles.push(thread::spawn(move || {
            start.wait();
            let mut writes = 0u64;
            for _ in 0..iterations {
                if is_reader {
                    let g = lock.acquire_read_as(Pid(i));
                    std::hint::black_box(&g);
                } else {
                    let g = lock.acquire_write_as(Pid(i));
                    std::hint::black_box(&g);
                    writes += 1;
                }
            }
            writes
        }));
    }
    start.wait();
    let writer_entries: u64 = handles.into_iter().map(|h| h.join().expect("stress thread panicked")).sum();
    done.store(true, Ordering::SeqCst);
    let (observations, observed_violations) = observer.join().expect("observer panicked");
    Ok(StressOutcome {
        gauge_violations: lock.gauge().violations(),
        observed_violations,
        observations,
        reader_entries: lock.reader_entries(),
        writer_entries,
        permits_restored: lock.permits() == lock.initial_permits(),
        elapsed: t0.elapsed(),
    })
}
