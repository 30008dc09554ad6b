use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use crate::sem::WakeupPolicy;

struct Waiter {
    ticket: u64,
    granted: std::sync::atomic::AtomicBool,
    cv: Condvar,
}

#[derive(Default)]
struct Inner {
    permits: usize,
    queue: VecDeque<Arc<Waiter>>,
    next_ticket: u64,
    /// Tickets in the order their permits were granted (FIFO only).
    grants: u64,
}

/// A counting semaphore that really blocks.
///
/// FIFO: blocked acquirers are queued by ticket and a release hands its
/// permit straight to the head of the queue, so newcomers cannot barge.
/// Weak: a release bumps the counter and wakes one arbitrary waiter, which
/// then competes with any newcomer.
pub struct BlockingSemaphore {
    policy: WakeupPolicy,
    inner: Mutex<Inner>,
    available: Condvar,
}

impl BlockingSemaphore {
    pub fn new(permits: usize, policy: WakeupPolicy) -> Self {
        Self { policy, inner: Mutex::new(Inner { permits, ..Inner::default() }), available: Condvar::new() }
    }

    pub fn policy(&self) -> WakeupPolicy {
        self.policy
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// `P`: waits for and consumes one permit.
    pub fn acquire(&self) {
        let mut inner = self.lock();
        match self.policy {
            WakeupPolicy::FifoStrong => {
                if inner.permits > 0 && inner.queue.is_empty() {
                    inner.permits -= 1;
                    return;
                }
                let ticket = inner.next_ticket;
                inner.next_ticket += 1;
                let me = Arc::new(Waiter { ticket, granted: Default::default(), cv: Condvar::new() });
                inner.queue.push_back(Arc::clone(&me));
                while !me.granted.load(std::sync::atomic::Ordering::Relaxed) {
                    inner = me.cv.wait(inner).unwrap_or_else(|p| p.into_inner());
                }
            }
            WakeupPolicy::Weak => {
                while inner.permits == 0 {
                    inner = self.available.wait(inner).unwrap_or_else(|p| p.into_inner());
                }
                inner.permits -= 1;
            }
        }
    }

    /// `V`: returns one permit, handing it to the oldest waiter under FIFO.
    pub fn release(&self) {
        let mut inner = self.lock();
        match self.policy {
            WakeupPolicy::FifoStrong => match inner.queue.pop_front() {
                Some(head) => {
                    debug_assert_eq!(head.ticket, inner.grants);
                    inner.grants += 1;
                    head.granted.store(true, std::sync::atomic::Ordering::Relaxed);
                    head.cv.notify_one();
                }
                None => inner.permits += 1,
            },
            WakeupPolicy::Weak => {
                inner.permits += 1;
                self.available.notify_one();
            }
        }
    }

    /// Free permits right now.
    pub fn permits(&self) -> usize {
        self.lock().permits
    }

    /// Acquirers currently queued (FIFO only; weak waiters are not tracked).
    pub fn queued(&self) -> usize {
        self.lock().queue.len()
    }
}

impl std::fmt::Debug for BlockingSemaphore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inner = self.lock();
        f.debug_struct("BlockingSemaphore")
            .field("policy", &self.policy)
            .field("permits", &inner.permits)
            .field("queued", &inner.queue.len())
            .finish()
    }
}
