//! Shared fixtures for the criterion benches.

use std::sync::Barrier;
use std::thread;

use semrw_core::runtime::RwFacade;
use semrw_core::{SystemConfig, Variant, WakeupPolicy};

pub const POLICIES: [(WakeupPolicy, &str); 2] = [(WakeupPolicy::FifoStrong, "fifo"), (WakeupPolicy::Weak, "weak")];

/// Instances small enough for a criterion sample but large enough to matter.
pub fn explore_instances() -> Vec<(String, SystemConfig)> {
    let mut out = Vec::new();
    for variant in [Variant::Standard, Variant::Fair] {
        for (policy, tag) in POLICIES {
            out.push((format!("{variant}-{tag}-m2n2"), SystemConfig::new(variant, 2, 2, 1, policy)));
        }
    }
    out
}

/// Runs `readers + writers` threads, each doing `iterations` acquire/release
/// pairs on the same lock.
pub fn contend(lock: &RwFacade, readers: usize, writers: usize, iterations: usize) {
    let barrier = Barrier::new(readers + writers);
    thread::scope(|s| {
        for i in 0..readers + writers {
            let barrier = &barrier;
            s.spawn(move || {
                barrier.wait();
                for _ in 0..iterations {
                    if i < readers {
                        drop(lock.acquire_read());
                    } else {
                        drop(lock.acquire_write());
                    }
                }
            });
        }
    });
}
