//! Run configuration: a TOML file, overridable from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use afortiori::augment::GenerationQuota;
use afortiori::backend::GenerationParams;
use afortiori::prompt_kit::{Mode, Regime};
use serde::{Deserialize, Serialize};

use crate::error::{fail, Classify, ExitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    /// Replies come from a JSON script; no network.
    Mock,
    /// OpenAI-compatible endpoint; credentials from the environment.
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunTask {
    /// Full staged interpretation.
    Interpret,
    /// Binary AF / NAF identification only.
    Identify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub script: Option<PathBuf>,
    pub timeout_secs: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            script: None,
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub regime: String,
    pub mode: String,
    pub task: RunTask,
    pub with_examples: bool,
    pub params: GenerationParams,
    pub provider: ProviderConfig,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub concurrency: usize,
    pub quota: GenerationQuota,
    /// Prompt asset directory; the built-in assets when unset.
    pub prompts: Option<PathBuf>,
    pub prompt_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            regime: Regime::WithoutExternalInfo.as_str().into(),
            mode: Mode::Gated.as_str().into(),
            task: RunTask::Interpret,
            with_examples: true,
            params: GenerationParams::default(),
            provider: ProviderConfig::default(),
            cache_dir: None,
            output_dir: None,
            concurrency: 4,
            quota: GenerationQuota::default(),
            prompts: None,
            prompt_seed: 13,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| fail(ExitKind::Usage, format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| fail(ExitKind::Usage, format!("{}: {}", path.display(), e.message())))
    }

    pub fn regime(&self) -> anyhow::Result<Regime> {
        self.regime.parse().usage()
    }

    pub fn mode(&self) -> anyhow::Result<Mode> {
        self.mode.parse().usage()
    }

    /// Checks the invariants that do not need the file system.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.regime()?;
        self.mode()?;
        self.params.validate().usage()?;
        if self.corpus.is_none() {
            return Err(fail(ExitKind::Usage, "no corpus given"));
        }
        if self.provider.kind == ProviderKind::Mock && self.provider.script.is_none() {
            return Err(fail(ExitKind::Usage, "mock provider requires a script path"));
        }
        if self.concurrency == 0 {
            return Err(fail(ExitKind::Usage, "concurrency must be at least 1"));
        }
        Ok(())
    }
}
