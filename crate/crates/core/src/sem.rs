//! Deterministic counting semaphores and shared registers.
//!
//! Every operation here is a pure function from one state to the next; no
//! thread ever blocks. The explorer drives these primitives and decides what
//! "blocked" means for scheduling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Process identifier inside a modeled system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pid(pub u16);

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Pid {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Semaphore identifier. Every built system carries the same two semaphores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SemId(pub u8);

impl SemId {
    pub const MUTEX: SemId = SemId(0);
    pub const ACCESS: SemId = SemId(1);

    pub fn name(self) -> &'static str {
        match self {
            SemId::MUTEX => "mutex",
            SemId::ACCESS => "access",
            _ => "sem?",
        }
    }

    pub fn from_name(name: &str) -> Option<SemId> {
        match name {
            "mutex" => Some(SemId::MUTEX),
            "access" => Some(SemId::ACCESS),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shared integer register identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegId(pub u8);

impl RegId {
    /// Reader count of the counter-based algorithm.
    pub const NUM: RegId = RegId(0);

    pub fn name(self) -> &'static str {
        match self {
            RegId::NUM => "num",
            _ => "reg?",
        }
    }

    pub fn from_name(name: &str) -> Option<RegId> {
        (name == "num").then_some(RegId::NUM)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a released permit finds its next owner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WakeupPolicy {
    /// Waiters are served in arrival order by direct handoff; no barging.
    #[serde(rename = "fifo")]
    FifoStrong,
    /// `V` only increments; any blocked process or newcomer may take the permit.
    #[serde(rename = "weak")]
    Weak,
}

impl WakeupPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            WakeupPolicy::FifoStrong => "fifo",
            WakeupPolicy::Weak => "weak",
        }
    }
}

impl fmt::Display for WakeupPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WakeupPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(WakeupPolicy::FifoStrong),
            "weak" => Ok(WakeupPolicy::Weak),
            other => Err(format!("unknown wakeup policy `{other}` (expected fifo or weak)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemError {
    #[error("process {pid} is already waiting on semaphore {sem}")]
    AlreadyWaiting { sem: SemId, pid: Pid },
    #[error("process {pid} is not waiting on semaphore {sem}")]
    NotWaiting { sem: SemId, pid: Pid },
    #[error("semaphore {sem} has no permit for a retry")]
    NoPermit { sem: SemId },
    #[error("retry is only meaningful under the weak policy (semaphore {sem})")]
    RetryUnderFifo { sem: SemId },
    #[error("semaphore {sem} invariant broken: {detail}")]
    Invariant { sem: SemId, detail: &'static str },
}

/// Value, ordered waiter queue and wakeup policy of one semaphore.
///
/// `waiters` is kept front-first: index 0 has waited longest.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SemaphoreState {
    pub id: SemId,
    value: u32,
    waiters: Vec<Pid>,
    policy: WakeupPolicy,
}

/// Outcome of a `P` attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TryP {
    Acquired(SemaphoreState),
    Blocked(SemaphoreState),
}

impl SemaphoreState {
    pub fn new(id: SemId, value: u32, policy: WakeupPolicy) -> Self {
        Self { id, value, waiters: Vec::new(), policy }
    }

    /// Builds a state with an explicit waiter queue. Invariants are checked.
    pub fn with_waiters(id: SemId, value: u32, waiters: Vec<Pid>, policy: WakeupPolicy) -> Result<Self, SemError> {
        let state = Self { id, value, waiters, policy };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn waiters(&self) -> &[Pid] {
        &self.waiters
    }

    pub fn policy(&self) -> WakeupPolicy {
        self.policy
    }

    pub fn is_waiting(&self, pid: Pid) -> bool {
        self.waiters.contains(&pid)
    }

    pub fn check_invariants(&self) -> Result<(), SemError> {
        if self.policy == WakeupPolicy::FifoStrong && self.value > 0 && !self.waiters.is_empty() {
            return Err(SemError::Invariant {
                sem: self.id,
                detail: "fifo semaphore holds a permit while processes wait",
            });
        }
        for (i, pid) in self.waiters.iter().enumerate() {
            if self.waiters[..i].contains(pid) {
                return Err(SemError::Invariant { sem: self.id, detail: "duplicate waiter" });
            }
        }
        Ok(())
    }

    /// The `P` primitive for a process that is not yet waiting.
    pub fn try_p(&self, pid: Pid) -> Result<TryP, SemError> {
        if self.is_waiting(pid) {
            return Err(SemError::AlreadyWaiting { sem: self.id, pid });
        }
        self.check_invariants()?;
        let mut next = self.clone();
        // Under FIFO the invariant guarantees an empty queue whenever value > 0.
        if self.value > 0 {
            next.value -= 1;
            Ok(TryP::Acquired(next))
        } else {
            next.waiters.push(pid);
            Ok(TryP::Blocked(next))
        }
    }

    /// A blocked process under the weak policy takes a free permit.
    pub fn retry_p(&self, pid: Pid) -> Result<SemaphoreState, SemError> {
        if self.policy != WakeupPolicy::Weak {
            return Err(SemError::RetryUnderFifo { sem: self.id });
        }
        let pos = self.waiters.iter().position(|&w| w == pid).ok_or(SemError::NotWaiting { sem: self.id, pid })?;
        if self.value == 0 {
            return Err(SemError::NoPermit { sem: self.id });
        }
        let mut next = self.clone();
        next.waiters.remove(pos);
        next.value -= 1;
        Ok(next)
    }

    /// The `V` primitive. Returns the waiter that received the permit by
    /// direct handoff, if any (FIFO policy only).
    pub fn v(&self) -> (SemaphoreState, Option<Pid>) {
        let mut next = self.clone();
        match self.policy {
            WakeupPolicy::FifoStrong if !next.waiters.is_empty() => {
                let head = next.waiters.remove(0);
                (next, Some(head))
            }
            _ => {
                next.value += 1;
                (next, None)
            }
        }
    }
}

/// A shared integer cell. Reads and writes are single atomic model steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterState {
    pub id: RegId,
    pub value: i64,
}

impl RegisterState {
    pub fn new(id: RegId, value: i64) -> Self {
        Self { id, value }
    }

    pub fn offset(self, delta: i64) -> Self {
        Self { value: self.value + delta, ..self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIFO: WakeupPolicy = WakeupPolicy::FifoStrong;
    const WEAK: WakeupPolicy = WakeupPolicy::Weak;

    fn sem(value: u32, waiters: &[u16], policy: WakeupPolicy) -> SemaphoreState {
        SemaphoreState::with_waiters(SemId::ACCESS, value, waiters.iter().copied().map(Pid).collect(), policy).unwrap()
    }

    #[test]
    fn p_with_free_permit_acquires() {
        let TryP::Acquired(next) = sem(1, &[], FIFO).try_p(Pid(3)).unwrap() else {
            panic!("expected acquisition");
        };
        assert_eq!(next.value(), 0);
        assert!(next.waiters().is_empty());
    }

    #[test]
    fn p_without_permit_appends_to_queue() {
        let TryP::Blocked(next) = sem(0, &[1], FIFO).try_p(Pid(2)).unwrap() else {
            panic!("expected block");
        };
        assert_eq!(next.waiters(), &[Pid(1), Pid(2)]);
        assert_eq!(next.value(), 0);
    }

    #[test]
    fn p_on_generalized_semaphore() {
        let TryP::Acquired(next) = sem(2, &[], FIFO).try_p(Pid(1)).unwrap() else {
            panic!("expected acquisition");
        };
        assert_eq!(next.value(), 1);
    }

    #[test]
    fn p_twice_by_waiting_process_is_an_error() {
        let err = sem(0, &[1], FIFO).try_p(Pid(1)).unwrap_err();
        assert_eq!(err, SemError::AlreadyWaiting { sem: SemId::ACCESS, pid: Pid(1) });
    }

    #[test]
    fn fifo_v_hands_off_to_head() {
        let (next, released) = sem(0, &[4, 7], FIFO).v();
        assert_eq!(released, Some(Pid(4)));
        assert_eq!(next.value(), 0);
        assert_eq!(next.waiters(), &[Pid(7)]);
    }

    #[test]
    fn v_without_waiters_increments() {
        let (next, released) = sem(0, &[], FIFO).v();
        assert_eq!(released, None);
        assert_eq!(next.value(), 1);
    }

    #[test]
    fn weak_v_increments_and_keeps_queue() {
        let (next, released) = sem(0, &[4, 7], WEAK).v();
        assert_eq!(released, None);
        assert_eq!(next.value(), 1);
        assert_eq!(next.waiters(), &[Pid(4), Pid(7)]);
        // Either waiter can win the retry.
        for winner in [4u16, 7] {
            let after = next.retry_p(Pid(winner)).unwrap();
            assert_eq!(after.value(), 0);
            assert_eq!(after.waiters().len(), 1);
            assert!(!after.is_waiting(Pid(winner)));
        }
    }

    #[test]
    fn retry_rules() {
        assert_eq!(sem(0, &[1], FIFO).retry_p(Pid(1)), Err(SemError::RetryUnderFifo { sem: SemId::ACCESS }));
        assert_eq!(sem(0, &[1], WEAK).retry_p(Pid(1)), Err(SemError::NoPermit { sem: SemId::ACCESS }));
        assert_eq!(sem(1, &[1], WEAK).retry_p(Pid(2)), Err(SemError::NotWaiting { sem: SemId::ACCESS, pid: Pid(2) }));
    }

    #[test]
    fn fifo_invariant_rejects_permit_with_waiters() {
        assert!(SemaphoreState::with_waiters(SemId::MUTEX, 1, vec![Pid(0)], FIFO).is_err());
        assert!(SemaphoreState::with_waiters(SemId::MUTEX, 1, vec![Pid(0)], WEAK).is_ok());
        assert!(SemaphoreState::with_waiters(SemId::MUTEX, 0, vec![Pid(0), Pid(0)], WEAK).is_err());
    }

    // V then P by the same lone process on a binary semaphore restores the
    // prior state, enumerated over value ∈ {0,1} and waiters ∈ {[], [x]}.
    #[test]
    fn v_then_p_round_trip_on_binary_semaphore() {
        let me = Pid(9);
        for policy in [FIFO, WEAK] {
            for value in 0..=1u32 {
                for waiters in [vec![], vec![Pid(2)]] {
                    let Ok(start) = SemaphoreState::with_waiters(SemId::MUTEX, value, waiters.clone(), policy) else {
                        continue;
                    };
                    let (after_v, released) = start.v();
                    match released {
                        // Handoff: the permit left with the waiter; the lone
                        // process blocks and must then receive a handoff back.
                        Some(w) => {
                            assert_eq!(w, Pid(2));
                            let TryP::Blocked(blocked) = after_v.try_p(me).unwrap() else {
                                panic!("permit went to the waiter");
                            };
                            assert_eq!(blocked.waiters(), &[me]);
                        }
                        None => {
                            let TryP::Acquired(back) = after_v.try_p(me).unwrap() else {
                                panic!("V made a permit available");
                            };
                            assert_eq!(back, start, "policy={policy} value={value} waiters={waiters:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn policy_strings() {
        assert_eq!("fifo".parse::<WakeupPolicy>().unwrap(), FIFO);
        assert_eq!(WEAK.to_string(), "weak");
        assert_eq!(serde_json::to_string(&FIFO).unwrap(), "\"fifo\"");
        assert!("strong".parse::<WakeupPolicy>().is_err());
    }
}
