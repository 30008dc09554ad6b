//! Reader and writer process programs for the counter-based and the
//! semaphore-only algorithms, plus system construction.

use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::explorer::state::{ProcState, SystemState};
use crate::sem::{Pid, RegId, RegisterState, SemId, SemaphoreState, WakeupPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Reader,
    Writer,
}

/// Which algorithm a system runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Counter `num` guarded by `mutex`; first reader in takes `access`.
    Standard,
    /// `access` starts at `m`; a writer collects all `m` permits under `mutex`.
    Fair,
    /// The fair writer with its `mutex` steps removed.
    BrokenFairNoMutex,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Fair => "fair",
            Variant::BrokenFairNoMutex => "broken-fair-no-mutex",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Variant::Standard),
            "fair" => Ok(Variant::Fair),
            "broken-fair-no-mutex" => Ok(Variant::BrokenFairNoMutex),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// Kind of critical-section occupancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Read,
    Write,
}

/// One scheduler-visible step of a process program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepLabel {
    P(SemId),
    V(SemId),
    RegAdd {
        reg: RegId,
        delta: i64,
    },
    /// Falls through to the next step when the register equals `literal`,
    /// otherwise skips the following `else_skip` steps.
    RegCheckEq {
        reg: RegId,
        literal: i64,
        else_skip: u16,
    },
    EnterRead,
    ExitRead,
    EnterWrite,
    ExitWrite,
    LocalWork,
    LoopBack,
    Halt,
}

impl StepLabel {
    /// Lock operations and critical-section markers, i.e. everything a
    /// runtime lock can observe. Local work and loop control are excluded.
    pub fn is_lock_visible(self) -> bool {
        !matches!(self, StepLabel::LocalWork | StepLabel::LoopBack | StepLabel::Halt)
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StepLabel::P(s) => write!(f, "P({s})"),
            StepLabel::V(s) => write!(f, "V({s})"),
            StepLabel::RegAdd { reg, delta } => write!(f, "REG_ADD({reg},{delta:+})"),
            StepLabel::RegCheckEq { reg, literal, else_skip } => {
                write!(f, "REG_CHECK_EQ({reg},{literal},skip={else_skip})")
            }
            StepLabel::EnterRead => f.write_str("ENTER_READ"),
            StepLabel::ExitRead => f.write_str("EXIT_READ"),
            StepLabel::EnterWrite => f.write_str("ENTER_WRITE"),
            StepLabel::ExitWrite => f.write_str("EXIT_WRITE"),
            StepLabel::LocalWork => f.write_str("LOCAL_WORK"),
            StepLabel::LoopBack => f.write_str("LOOP_BACK"),
            StepLabel::Halt => f.write_str("HALT"),
        }
    }
}

impl FromStr for StepLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unrecognized step label `{s}`");
        let simple = match s {
            "ENTER_READ" => Some(StepLabel::EnterRead),
            "EXIT_READ" => Some(StepLabel::ExitRead),
            "ENTER_WRITE" => Some(StepLabel::EnterWrite),
            "EXIT_WRITE" => Some(StepLabel::ExitWrite),
            "LOCAL_WORK" => Some(StepLabel::LocalWork),
            "LOOP_BACK" => Some(StepLabel::LoopBack),
            "HALT" => Some(StepLabel::Halt),
            _ => None,
        };
        if let Some(label) = simple {
            return Ok(label);
        }
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest.strip_suffix(')').ok_or_else(bad)?.split(',').collect();
        let sem = |name: &str| SemId::from_name(name).ok_or_else(bad);
        let reg = |name: &str| RegId::from_name(name).ok_or_else(bad);
        match (head, args.as_slice()) {
            ("P", [name]) => Ok(StepLabel::P(sem(name)?)),
            ("V", [name]) => Ok(StepLabel::V(sem(name)?)),
            ("REG_ADD", [name, delta]) => Ok(StepLabel::RegAdd {
                reg: reg(name)?,
                delta: delta.trim_start_matches('+').parse().map_err(|_| bad())?,
            }),
            ("REG_CHECK_EQ", [name, literal, skip]) => Ok(StepLabel::RegCheckEq {
                reg: reg(name)?,
                literal: literal.parse().map_err(|_| bad())?,
                else_skip: skip.strip_prefix("skip=").and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for StepLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StepLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of times a process runs its loop body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoopBound {
    Finite(NonZeroU32),
    /// `LOOP_BACK` always jumps back; used by the starvation search.
    Unbounded,
}

impl LoopBound {
    pub fn finite(iterations: u32) -> Result<Self, ProgramError> {
        NonZeroU32::new(iterations).map(LoopBound::Finite).ok_or(ProgramError::ZeroLoopBound)
    }

    /// Loop counter value a process starts with.
    pub fn initial_remaining(self) -> u32 {
        match self {
            LoopBound::Finite(n) => n.get(),
            LoopBound::Unbounded => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("loop_bound must be at least 1")]
    ZeroLoopBound,
    #[error("reader capacity m must be at least 1")]
    ZeroCapacity,
    #[error("program body must end with a single LOOP_BACK")]
    MisplacedLoopBack,
    #[error("HALT is implicit after the loop and may not appear in the body")]
    HaltInBody,
    #[error("step {at}: conditional skip runs past the loop body")]
    SkipOutOfRange { at: usize },
    #[error("step {at}: {label} breaks critical-section nesting")]
    BadNesting { at: usize, label: StepLabel },
    #[error("step {at}: {label} is not allowed in a {role:?} program")]
    RoleMismatch { at: usize, label: StepLabel, role: Role },
    #[error("P/V on {sem} do not balance within one iteration")]
    Unbalanced { sem: SemId },
}

/// A process as a loop body of labeled steps.
///
/// Program counters range over `0..=steps.len()`; position `steps.len()` is
/// the implicit final `HALT`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessProgram {
    pid: Pid,
    role: Role,
    steps: Vec<StepLabel>,
    loop_bound: LoopBound,
}

impl ProcessProgram {
    pub fn new(pid: Pid, role: Role, steps: Vec<StepLabel>, loop_bound: LoopBound) -> Result<Self, ProgramError> {
        let program = Self { pid, role, steps, loop_bound };
        program.validate()?;
        Ok(program)
    }

    pub fn pid(&self) -> Pid {
        self.pid
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Loop body, ending in `LOOP_BACK`. The implicit `HALT` is not included.
    pub fn steps(&self) -> &[StepLabel] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn loop_bound(&self) -> LoopBound {
        self.loop_bound
    }

    pub fn with_loop_bound(mut self, loop_bound: LoopBound) -> Self {
        self.loop_bound = loop_bound;
        self
    }

    /// Step at a program counter; `HALT` at the end.
    pub fn step_at(&self, pc: usize) -> StepLabel {
        self.steps.get(pc).copied().unwrap_or(StepLabel::Halt)
    }

    /// Index of the first `P(access)` in the body.
    pub fn first_access_p(&self) -> Option<usize> {
        self.steps.iter().position(|&s| s == StepLabel::P(SemId::ACCESS))
    }

    /// For writers: the program-counter range `(first P(access), ENTER_WRITE)`
    /// during which reader entries count as bypasses.
    pub fn writer_window(&self) -> Option<(usize, usize)> {
        if self.role != Role::Writer {
            return None;
        }
        let first = self.first_access_p()?;
        let enter = self.steps.iter().position(|&s| s == StepLabel::EnterWrite)?;
        (first < enter).then_some((first, enter))
    }

    pub fn count(&self, label: StepLabel) -> usize {
        self.steps.iter().filter(|&&s| s == label).count()
    }

    fn validate(&self) -> Result<(), ProgramError> {
        let len = self.steps.len();
        if len == 0 || self.steps[len - 1] != StepLabel::LoopBack || self.count(StepLabel::LoopBack) != 1 {
            return Err(ProgramError::MisplacedLoopBack);
        }
        if self.steps.contains(&StepLabel::Halt) {
            return Err(ProgramError::HaltInBody);
        }
        for (at, &label) in self.steps.iter().enumerate() {
            let forbidden = match self.role {
                Role::Reader => matches!(label, StepLabel::EnterWrite | StepLabel::ExitWrite),
                Role::Writer => matches!(label, StepLabel::EnterRead | StepLabel::ExitRead),
            };
            if forbidden {
                return Err(ProgramError::RoleMismatch { at, label, role: self.role });
            }
            if let StepLabel::RegCheckEq { else_skip, .. } = label {
                // The skip target must still lie before LOOP_BACK.
                if at + 1 + else_skip as usize > len - 1 {
                    return Err(ProgramError::SkipOutOfRange { at });
                }
            }
        }
        let mut paths = Vec::new();
        self.walk(0, None, [0; 2], Vec::new(), &mut paths)?;
        // Guards on the shared counter are correlated (first reader in, last
        // reader out), so balance is required on the uniform-outcome paths.
        for (outcomes, net) in &paths {
            let uniform = outcomes.iter().all(|&o| o) || outcomes.iter().all(|&o| !o);
            if uniform {
                for (i, &n) in net.iter().enumerate() {
                    if n != 0 {
                        return Err(ProgramError::Unbalanced { sem: SemId(i as u8) });
                    }
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::type_complexity)]
    fn walk(
        &self,
        mut pc: usize,
        mut cs: Option<Access>,
        mut net: [i64; 2],
        mut outcomes: Vec<bool>,
        paths: &mut Vec<(Vec<bool>, [i64; 2])>,
    ) -> Result<(), ProgramError> {
        loop {
            let label = self.steps[pc];
            match label {
                StepLabel::P(s) => net[s.index()] += 1,
                StepLabel::V(s) => net[s.index()] -= 1,
                StepLabel::EnterRead | StepLabel::EnterWrite => {
                    if cs.is_some() {
                        return Err(ProgramError::BadNesting { at: pc, label });
                    }
                    cs = Some(if label == StepLabel::EnterRead { Access::Read } else { Access::Write });
                }
                StepLabel::ExitRead | StepLabel::ExitWrite => {
                    let expected = if label == StepLabel::ExitRead { Access::Read } else { Access::Write };
                    if cs != Some(expected) {
                        return Err(ProgramError::BadNesting { at: pc, label });
                    }
                    cs = None;
                }
                StepLabel::RegCheckEq { else_skip, .. } => {
                    let mut taken = outcomes.clone();
                    taken.push(true);
                    self.walk(pc + 1, cs, net, taken, paths)?;
                    outcomes.push(false);
                    pc += 1 + else_skip as usize;
                    continue;
                }
                StepLabel::LoopBack => {
                    if cs.is_some() {
                        return Err(ProgramError::BadNesting { at: pc, label });
                    }
                    paths.push((outcomes, net));
                    return Ok(());
                }
                StepLabel::RegAdd { .. } | StepLabel::LocalWork | StepLabel::Halt => {}
            }
            pc += 1;
        }
    }
}

/// Counter-based reader: the first reader in takes `access`, the last one
/// out returns it.
pub fn build_standard_reader(pid: Pid, loop_bound: u32) -> Result<ProcessProgram, ProgramError> {
    use StepLabel::*;
    let num = RegId::NUM;
    let steps = vec![
        P(SemId::MUTEX),
        RegAdd { reg: num, delta: 1 },
        RegCheckEq { reg: num, literal: 1, else_skip: 1 },
        P(SemId::ACCESS),
        V(SemId::MUTEX),
        EnterRead,
        LocalWork,
        ExitRead,
        P(SemId::MUTEX),
        RegAdd { reg: num, delta: -1 },
        RegCheckEq { reg: num, literal: 0, else_skip: 1 },
        V(SemId::ACCESS),
        V(SemId::MUTEX),
        LocalWork,
        LoopBack,
    ];
    ProcessProgram::new(pid, Role::Reader, steps, LoopBound::finite(loop_bound)?)
}

pub fn build_standard_writer(pid: Pid, loop_bound: u32) -> Result<ProcessProgram, ProgramError> {
    use StepLabel::*;
    let steps = vec![P(SemId::ACCESS), EnterWrite, LocalWork, ExitWrite, V(SemId::ACCESS), LocalWork, LoopBack];
    ProcessProgram::new(pid, Role::Writer, steps, LoopBound::finite(loop_bound)?)
}

/// Semaphore-only reader: one permit of `access` per reader.
pub fn build_fair_reader(pid: Pid, loop_bound: u32) -> Result<ProcessProgram, ProgramError> {
    use StepLabel::*;
    let steps = vec![P(SemId::ACCESS), EnterRead, LocalWork, ExitRead, V(SemId::ACCESS), LocalWork, LoopBack];
    ProcessProgram::new(pid, Role::Reader, steps, LoopBound::finite(loop_bound)?)
}

/// Semaphore-only writer: takes all `m` permits of `access` one at a time,
/// serialized against other writers by `mutex` unless `with_mutex` is false.
pub fn build_fair_writer(pid: Pid, m: u32, loop_bound: u32, with_mutex: bool) -> Result<ProcessProgram, ProgramError> {
    use StepLabel::*;
    if m == 0 {
        return Err(ProgramError::ZeroCapacity);
    }
    let m = m as usize;
    let mut steps = Vec::with_capacity(2 * m + 7);
    if with_mutex {
        steps.push(P(SemId::MUTEX));
    }
    steps.extend(std::iter::repeat_n(P(SemId::ACCESS), m));
    steps.extend([EnterWrite, LocalWork, ExitWrite]);
    steps.extend(std::iter::repeat_n(V(SemId::ACCESS), m));
    if with_mutex {
        steps.push(V(SemId::MUTEX));
    }
    steps.extend([LocalWork, LoopBack]);
    ProcessProgram::new(pid, Role::Writer, steps, LoopBound::finite(loop_bound)?)
}

/// Largest reader count accepted; keeps program counters within `u16`.
pub const MAX_READERS: u32 = 4096;
pub const MAX_WRITERS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self { field, reason: reason.into() }
    }
}

/// Shape of a modeled system. `m` is both the reader count and, for the
/// fair variants, the initial value of `access`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub variant: Variant,
    pub m: u32,
    pub n: u32,
    pub loop_bound: u32,
    pub policy: WakeupPolicy,
}

impl SystemConfig {
    pub fn new(variant: Variant, m: u32, n: u32, loop_bound: u32, policy: WakeupPolicy) -> Self {
        Self { variant, m, n, loop_bound, policy }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m == 0 {
            return Err(ConfigError::new("m", "must be at least 1"));
        }
        if self.m > MAX_READERS {
            return Err(ConfigError::new("m", format!("must be at most {MAX_READERS}")));
        }
        if self.n > MAX_WRITERS {
            return Err(ConfigError::new("n", format!("must be at most {MAX_WRITERS}")));
        }
        if self.loop_bound == 0 {
            return Err(ConfigError::new("loop_bound", "must be at least 1"));
        }
        Ok(())
    }

    /// Initial `(mutex, access)` values.
    pub fn initial_values(&self) -> [u32; 2] {
        match self.variant {
            Variant::Standard => [1, 1],
            Variant::Fair | Variant::BrokenFairNoMutex => [1, self.m],
        }
    }
}

/// A built system: programs plus their initial global state.
#[derive(Clone, Debug)]
pub struct System {
    config: SystemConfig,
    programs: Vec<ProcessProgram>,
    initial: SystemState,
    initial_values: [u32; 2],
}

impl System {
    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn programs(&self) -> &[ProcessProgram] {
        &self.programs
    }

    pub fn program(&self, pid: Pid) -> &ProcessProgram {
        &self.programs[pid.index()]
    }

    pub fn initial(&self) -> &SystemState {
        &self.initial
    }

    pub fn initial_value(&self, sem: SemId) -> u32 {
        self.initial_values[sem.index()]
    }

    pub fn policy(&self) -> WakeupPolicy {
        self.config.policy
    }

    pub fn readers(&self) -> impl Iterator<Item = Pid> + '_ {
        self.programs.iter().filter(|p| p.role() == Role::Reader).map(|p| p.pid())
    }

    pub fn writers(&self) -> impl Iterator<Item = Pid> + '_ {
        self.programs.iter().filter(|p| p.role() == Role::Writer).map(|p| p.pid())
    }

    /// Same system with every process looping forever.
    pub fn unbounded(mut self) -> Self {
        for program in &mut self.programs {
            *program = program.clone().with_loop_bound(LoopBound::Unbounded);
        }
        for proc in &mut self.initial.procs {
            proc.remaining = LoopBound::Unbounded.initial_remaining();
        }
        self
    }
}

/// Builds `m` reader programs (pids `0..m`) and `n` writer programs (pids
/// `m..m+n`) with semaphores and registers initialized for the variant.
pub fn build_system(config: SystemConfig) -> Result<System, ConfigError> {
    config.validate()?;
    let program_err = |e: ProgramError| ConfigError::new("loop_bound", e.to_string());
    let mut programs = Vec::with_capacity((config.m + config.n) as usize);
    for i in 0..config.m {
        let pid = Pid(i as u16);
        let program = match config.variant {
            Variant::Standard => build_standard_reader(pid, config.loop_bound),
            Variant::Fair | Variant::BrokenFairNoMutex => build_fair_reader(pid, config.loop_bound),
        };
        programs.push(program.map_err(program_err)?);
    }
    for j in 0..config.n {
        let pid = Pid((config.m + j) as u16);
        let program = match config.variant {
            Variant::Standard => build_standard_writer(pid, config.loop_bound),
            Variant::Fair => build_fair_writer(pid, config.m, config.loop_bound, true),
            Variant::BrokenFairNoMutex => build_fair_writer(pid, config.m, config.loop_bound, false),
        };
        programs.push(program.map_err(program_err)?);
    }

    let initial_values = config.initial_values();
    let sems = [SemId::MUTEX, SemId::ACCESS]
        .into_iter()
        .map(|id| SemaphoreState::new(id, initial_values[id.index()], config.policy))
        .collect();
    let regs = match config.variant {
        Variant::Standard => vec![RegisterState::new(RegId::NUM, 0)],
        Variant::Fair | Variant::BrokenFairNoMutex => Vec::new(),
    };
    let procs = programs.iter().map(|p| ProcState::new(p.loop_bound().initial_remaining())).collect();
    let held = vec![[0; 2]; programs.len()];
    let initial = SystemState { procs, sems, regs, held };
    Ok(System { config, programs, initial, initial_values })
}
