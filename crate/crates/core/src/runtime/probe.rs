use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Barrier, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::facade::{RuntimeError, RwFacade};
use crate::fairness::{aggregate, EventLog, FairnessReport, TimeUnit, WaitSample};
use crate::program::Variant;
use crate::sem::{Pid, WakeupPolicy};

/// Thread counts and timing of a lock workload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub reader_threads: u32,
    pub writer_threads: u32,
    pub hold_us: u64,
    pub think_us: u64,
    pub duration_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbeConfig {
    pub variant: Variant,
    pub policy: WakeupPolicy,
    pub capacity: usize,
    pub workload: WorkloadSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOutcome {
    pub log: EventLog,
    pub report: FairnessReport,
    pub gauge_violations: u64,
    /// Every semaphore is back to its initial permit count after join.
    pub permits_restored: bool,
}

fn pause(us: u64) {
    match us {
        0 => {}
        1..=99 => {
            let until = Instant::now() + Duration::from_micros(us);
            while Instant::now() < until {
                std::hint::spin_loop();
            }
        }
        _ => thread::sleep(Duration::from_micros(us)),
    }
}

/// Runs the workload against a fresh lock and reports writer waits (in
/// microseconds) and bypass counts. Reader threads get pids `0..readers`,
/// writer threads follow. Reader `i` delays its first entry by
/// `i * hold_us / readers`; writers start after one full `hold_us`.
pub fn fairness_probe(config: ProbeConfig) -> Result<ProbeOutcome, RuntimeError> {
    let lock = Arc::new(RwFacade::new(config.variant, config.capacity, config.policy)?);
    let w = config.workload;
    let readers = w.reader_threads as u16;
    let writers: Vec<Pid> = (0..w.writer_threads as u16).map(|j| Pid(readers + j)).collect();
    if w.duration_ms == 0 {
        let log = EventLog {
            unit: TimeUnit::Micros,
            duration: 0,
            reader_entries: 0,
            writer_entries: 0,
            writers,
            waits: Vec::new(),
        };
        let report = aggregate(&log);
        return Ok(ProbeOutcome { log, report, gauge_violations: 0, permits_restored: true });
    }

    let stop = Arc::new(AtomicBool::new(false));
    let start = Arc::new(Barrier::new(readers as usize + writers.len() + 1));
    let samples = Arc::new(Mutex::new(Vec::new()));
    let mut handles = Vec::new();
    for r in 0..readers {
        let (lock, stop, start) = (Arc::clone(&lock), Arc::clone(&stop), Arc::clone(&start));
        // Offset first entries so reader holds overlap instead of lining up.
        let offset = w.hold_us * r as u64 / readers as u64;
        handles.push(thread::spawn(move || {
            start.wait();
            pause(offset);
            while !stop.load(Ordering::Relaxed) {
                let guard = lock.acquire_read_as(Pid(r));
                pause(w.hold_us);
                drop(guard);
                pause(w.think_us);
            }
        }));
    }
    for &pid in &writers {
        let (lock, stop, start, samples) =
            (Arc::clone(&lock), Arc::clone(&stop), Arc::clone(&start), Arc::clone(&samples));
        handles.push(thread::spawn(move || {
            start.wait();
            pause(w.hold_us);
            let mut mine = Vec::new();
            while !stop.load(Ordering::Relaxed) {
                let t0 = Instant::now();
                let guard = lock.acquire_write_as(pid);
                let wait = t0.elapsed().as_micros() as u64;
                mine.push(WaitSample { writer: pid, wait, bypass: guard.bypass(), completed: true });
                pause(w.hold_us);
                drop(guard);
                pause(w.think_us);
            }
            samples.lock().unwrap_or_else(|p| p.into_inner()).extend(mine);
        }));
    }
    start.wait();
    let t0 = Instant::now();
    thread::sleep(Duration::from_millis(w.duration_ms));
    stop.store(true, Ordering::Relaxed);
    for h in handles {
        h.join().expect("workload thread panicked");
    }
    let elapsed = (t0.elapsed().as_micros() as u64).max(1);

    let mut waits = std::mem::take(&mut *samples.lock().unwrap_or_else(|p| p.into_inner()));
    waits.sort_by_key(|s| s.writer);
    let log = EventLog {
        unit: TimeUnit::Micros,
        duration: elapsed,
        reader_entries: lock.reader_entries(),
        writer_entries: waits.len() as u64,
        writers,
        waits,
    };
    let report = aggregate(&log);
    Ok(ProbeOutcome {
        log,
        report,
        gauge_violations: lock.gauge().violations(),
        permits_restored: lock.permits() == lock.initial_permits(),
    })
}
