//! Scenario files: one JSON object per run.
//!
//! ```json
//! {"variant": "fair", "m": 2, "n": 2, "loop_bound": 1, "policy": "fifo", "mode": "explore"}
//! ```
//!
//! Unknown keys are rejected. `seed`, `horizon`, `max_steps`, `budget` and
//! `workload` are optional in the file but required by some modes.

use std::fmt;
use std::path::Path;

use semrw_core::runtime::WorkloadSpec;
use semrw_core::{SystemConfig, Variant, WakeupPolicy};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Explore,
    StarveSearch,
    Random,
    Bench,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Explore => "explore",
            Mode::StarveSearch => "starve-search",
            Mode::Random => "random",
            Mode::Bench => "bench",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub variant: Variant,
    pub m: u32,
    pub n: u32,
    pub loop_bound: u32,
    pub policy: WakeupPolicy,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadSpec>,
}

/// Seed used by random mode when the file gives none.
pub const DEFAULT_SEED: u64 = 0;

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scenario: Self = serde_json::from_str(text).map_err(|e| CliError::Scenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn config(&self) -> SystemConfig {
        SystemConfig::new(self.variant, self.m, self.n, self.loop_bound, self.policy)
    }

    /// Checks field ranges and the keys each mode needs.
    pub fn validate(&self) -> Result<(), CliError> {
        self.config().validate()?;
        let need = |present: bool, field: &'static str| {
            if present {
                Ok(())
            } else {
                Err(CliError::field(field, format!("required in {} mode", self.mode)))
            }
        };
        if self.budget == Some(0) {
            return Err(CliError::field("budget", "must be at least 1"));
        }
        match self.mode {
            Mode::Explore => {}
            Mode::StarveSearch => {
                need(self.horizon.is_some(), "horizon")?;
                if self.horizon == Some(0) {
                    return Err(CliError::field("horizon", "must be at least 1"));
                }
                if self.n == 0 {
                    return Err(CliError::field("n", "starvation search needs at least one writer"));
                }
            }
            Mode::Random => need(self.max_steps.is_some(), "max_steps")?,
            Mode::Bench => {
                need(self.workload.is_some(), "workload")?;
                if self.variant == Variant::BrokenFairNoMutex {
                    return Err(CliError::field("variant", "bench mode runs the standard and fair locks only"));
                }
            }
        }
        Ok(())
    }

    /// The scenario with defaults filled in, as echoed in reports.
    pub fn resolved(&self) -> Self {
        let mut s = self.clone();
        if s.mode == Mode::Random && s.seed.is_none() {
            s.seed = Some(DEFAULT_SEED);
        }
        s
    }

    /// Everything except variant, policy and seed: scenarios with the same
    /// shape can be compared.
    pub fn shape(&self) -> Shape {
        Shape {
            mode: self.mode,
            m: self.m,
            n: self.n,
            loop_bound: self.loop_bound,
            max_steps: self.max_steps,
            workload: self.workload,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub mode: Mode,
    pub m: u32,
    pub n: u32,
    pub loop_bound: u32,
    pub max_steps: Option<usize>,
    pub workload: Option<WorkloadSpec>,
}
