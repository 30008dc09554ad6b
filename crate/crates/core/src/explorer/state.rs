//! Global snapshots of a modeled system and their canonical encoding.

use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use fnv::FnvHasher;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::program::{Access, Role, StepLabel, System};
use crate::sem::{Pid, RegisterState, SemId, SemaphoreState, WakeupPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcState {
    pub pc: u16,
    /// Iterations left including the current one (always 0 when unbounded).
    pub remaining: u32,
    pub cs: Option<Access>,
    pub halted: bool,
}

impl ProcState {
    pub fn new(remaining: u32) -> Self {
        Self { pc: 0, remaining, cs: None, halted: false }
    }
}

/// Program counters, semaphores, registers and permit bookkeeping.
///
/// `held` tracks permits per process and semaphore. It is explorer
/// bookkeeping and not part of the state identity: equality, hashing and
/// the canonical encoding cover `procs`, `sems` and `regs` only. Under the
/// counter-based algorithm a reader may return a permit taken by another
/// reader, so individual entries can go negative; the per-semaphore sum is
/// what permit conservation constrains.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemState {
    pub procs: Vec<ProcState>,
    pub sems: Vec<SemaphoreState>,
    pub regs: Vec<RegisterState>,
    pub held: Vec<[i32; 2]>,
}

impl PartialEq for SystemState {
    fn eq(&self, other: &Self) -> bool {
        self.procs == other.procs && self.sems == other.sems && self.regs == other.regs
    }
}

impl Eq for SystemState {}

impl std::hash::Hash for SystemState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.procs.hash(state);
        self.sems.hash(state);
        self.regs.hash(state);
    }
}

/// 64-bit FNV-1a digest of the canonical encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub u64);

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for Digest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 16 {
            return Err(format!("digest `{s}` is not 16 hex digits"));
        }
        u64::from_str_radix(s, 16).map(Digest).map_err(|e| format!("digest `{s}`: {e}"))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

pub fn digest_bytes(bytes: &[u8]) -> Digest {
    let mut hasher = FnvHasher::default();
    hasher.write(bytes);
    Digest(hasher.finish())
}

impl SystemState {
    /// Canonical byte encoding, little-endian throughout:
    ///
    /// 1. per process in pid order: `pc: u16`, `remaining: u32`, flags `u8`
    ///    (bit 0 halted, bits 1..2 critical section: 0 none, 1 read, 2 write);
    /// 2. per semaphore in id order: `value: u32`, policy `u8` (0 fifo,
    ///    1 weak), waiter count `u16`, then each waiter pid `u16` front first;
    /// 3. per register in id order: `value: i64`.
    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        buf.clear();
        for proc in &self.procs {
            buf.extend_from_slice(&proc.pc.to_le_bytes());
            buf.extend_from_slice(&proc.remaining.to_le_bytes());
            let cs = match proc.cs {
                None => 0u8,
                Some(Access::Read) => 1,
                Some(Access::Write) => 2,
            };
            buf.push(proc.halted as u8 | (cs << 1));
        }
        for sem in &self.sems {
            buf.extend_from_slice(&sem.value().to_le_bytes());
            buf.push(match sem.policy() {
                WakeupPolicy::FifoStrong => 0,
                WakeupPolicy::Weak => 1,
            });
            buf.extend_from_slice(&(sem.waiters().len() as u16).to_le_bytes());
            for pid in sem.waiters() {
                buf.extend_from_slice(&pid.0.to_le_bytes());
            }
        }
        for reg in &self.regs {
            buf.extend_from_slice(&reg.value.to_le_bytes());
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64);
        self.encode_into(&mut buf);
        buf
    }

    pub fn digest(&self) -> Digest {
        digest_bytes(&self.encode())
    }

    pub fn proc(&self, pid: Pid) -> &ProcState {
        &self.procs[pid.index()]
    }

    pub fn sem(&self, id: SemId) -> &SemaphoreState {
        &self.sems[id.index()]
    }

    /// The process sits at a `P` step and is queued on that semaphore.
    pub fn is_blocked(&self, system: &System, pid: Pid) -> bool {
        let proc = self.proc(pid);
        if proc.halted {
            return false;
        }
        match system.program(pid).step_at(proc.pc as usize) {
            StepLabel::P(sem) => self.sem(sem).is_waiting(pid),
            _ => false,
        }
    }

    pub fn all_halted(&self) -> bool {
        self.procs.iter().all(|p| p.halted)
    }

    pub fn readers_in_cs(&self) -> usize {
        self.procs.iter().filter(|p| p.cs == Some(Access::Read)).count()
    }

    pub fn writers_in_cs(&self) -> usize {
        self.procs.iter().filter(|p| p.cs == Some(Access::Write)).count()
    }

    /// A writer in the critical section together with anyone else.
    pub fn violates_exclusion(&self) -> bool {
        let writers = self.writers_in_cs();
        writers >= 1 && writers + self.readers_in_cs() >= 2
    }

    /// Writer `pid` has started collecting `access` and has not entered yet.
    pub fn in_writer_window(&self, system: &System, pid: Pid) -> bool {
        let Some((first, enter)) = system.program(pid).writer_window() else {
            return false;
        };
        let proc = self.proc(pid);
        let pc = proc.pc as usize;
        !proc.halted && ((pc > first && pc <= enter) || (pc == first && self.is_blocked(system, pid)))
    }

    /// Critical-section tags agree with process roles.
    pub fn cs_consistent(&self, system: &System) -> bool {
        self.procs.iter().zip(system.programs()).all(|(proc, program)| {
            matches!(
                (proc.cs, program.role()),
                (None, _) | (Some(Access::Read), Role::Reader) | (Some(Access::Write), Role::Writer)
            )
        })
    }
}
