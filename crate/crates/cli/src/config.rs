//! Run configuration: command-line flags, then environment variables, then
//! the configuration file, then built-in defaults.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context as _;
use clap::{Args, ValueEnum};
use ratg_core::context::ContextBudget;
use ratg_core::extract::{find_module, FocalFilter};
use regex::Regex;
use serde::{Deserialize, Serialize};

/// An invalid setting; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for UsageError {}

fn usage(field: &'static str, message: impl Into<String>) -> anyhow::Error {
    UsageError { field, message: message.into() }.into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Replay token files from `--tokens`.
    Scripted,
    /// Call the completion endpoint in `--endpoint` / `RATG_LLM_ENDPOINT`.
    Remote,
}

/// Settings shared by every command. Each one may also come from the
/// configuration file; flags win over environment variables, which win over
/// the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Configuration file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory holding every artifact of the run [default: ratg-run].
    #[arg(long, global = true, value_name = "DIR")]
    pub run_dir: Option<PathBuf>,
    /// Go module to generate tests for.
    #[arg(long, global = true, value_name = "DIR")]
    pub project: Option<PathBuf>,
    /// Language server executable [default: gopls].
    #[arg(long, global = true, env = "RATG_GOPLS", value_name = "PATH")]
    pub gopls: Option<PathBuf>,
    /// Token source [default: remote].
    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,
    /// Directory of token files for the scripted backend.
    #[arg(long, global = true, value_name = "DIR")]
    pub tokens: Option<PathBuf>,
    /// Completion endpoint for the remote backend.
    #[arg(long, global = true, env = "RATG_LLM_ENDPOINT", value_name = "URL")]
    pub endpoint: Option<String>,
    /// Sampling temperature for the remote backend [default: 0].
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    /// Attempts per token after a failed generator call [default: 3].
    #[arg(long, global = true)]
    pub retries: Option<u32>,
    /// Token cap per candidate [default: 512].
    #[arg(long, global = true)]
    pub max_tokens: Option<usize>,
    /// Candidates per focal unit [default: 1].
    #[arg(long, global = true)]
    pub candidates: Option<usize>,
    /// Context budget in characters, 0 for unlimited [default: 6000].
    #[arg(long, global = true, value_name = "CHARS")]
    pub context_budget: Option<usize>,
    /// Seconds allowed to compile one candidate [default: 300].
    #[arg(long, global = true, value_name = "SECS")]
    pub compile_timeout: Option<u64>,
    /// Seconds allowed for one test run [default: 120].
    #[arg(long, global = true, value_name = "SECS")]
    pub test_timeout: Option<u64>,
    /// Only focal units whose `Type.Name` or `pkg/Type.Name` matches.
    #[arg(long, global = true, value_name = "REGEX")]
    pub focal: Option<String>,
    /// Only exported focal units.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub exported_only: Option<bool>,
    /// Generate without looking up definitions (no language server).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub no_context: Option<bool>,
    /// Tool that rewrites imports of assembled test files (e.g. goimports).
    #[arg(long, global = true, value_name = "PATH")]
    pub import_fixer: Option<PathBuf>,
    /// External mutation tool run per package instead of the built-in one.
    #[arg(long, global = true, value_name = "PATH")]
    pub mutator: Option<PathBuf>,
    /// Argument passed to the external mutation tool (repeatable).
    #[arg(long = "mutator-arg", global = true, value_name = "ARG", allow_hyphen_values = true)]
    pub mutator_args: Vec<String>,
}

/// Configuration file schema. Relative paths are resolved against the
/// file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub project_dir: Option<PathBuf>,
    pub run_dir: Option<PathBuf>,
    pub gopls: Option<PathBuf>,
    pub max_tokens: Option<usize>,
    pub candidates: Option<usize>,
    pub context_budget: Option<usize>,
    pub compile_timeout_secs: Option<u64>,
    pub test_timeout_secs: Option<u64>,
    pub focal: Option<String>,
    pub exported_only: Option<bool>,
    pub no_context: Option<bool>,
    pub import_fixer: Option<PathBuf>,
    pub mutator: Option<PathBuf>,
    #[serde(default)]
    pub mutator_args: Vec<String>,
    #[serde(default)]
    pub generator: GeneratorFile,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub backend: Option<Backend>,
    pub tokens_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub temperature: Option<f64>,
    pub retries: Option<u32>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| usage("config", format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| usage("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.project_dir,
            &mut cfg.run_dir,
            &mut cfg.import_fixer,
            &mut cfg.mutator,
            &mut cfg.generator.tokens_dir,
        ] {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        }
        // A bare name like `gopls` is looked up on PATH, not next to the file.
        if let Some(g) = cfg.gopls.as_mut() {
            if g.components().count() > 1 && g.is_relative() {
                *g = base.join(&*g);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorConfig {
    pub backend: Backend,
    pub tokens_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
    #[serde(skip)]
    pub api_token: Option<String>,
    pub temperature: f64,
    pub retries: u32,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    /// Module root (the directory holding `go.mod`).
    pub project_dir: Option<PathBuf>,
    pub module_path: String,
    pub run_dir: PathBuf,
    pub gopls: PathBuf,
    pub generator: GeneratorConfig,
    pub max_tokens: usize,
    pub candidates: usize,
    /// Characters; `None` is unlimited.
    pub context_budget: Option<usize>,
    pub compile_timeout_secs: u64,
    pub test_timeout_secs: u64,
    pub focal: Option<String>,
    pub exported_only: bool,
    pub no_context: bool,
    pub import_fixer: Option<PathBuf>,
    pub mutator: Option<PathBuf>,
    pub mutator_args: Vec<String>,
}

impl RunConfig {
    /// Merge `flags` (already carrying environment values) over the
    /// configuration file and defaults, then validate.
    pub fn resolve(flags: &Settings, needs_project: bool) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let g = &file.generator;
        let budget = flags.context_budget.or(file.context_budget).unwrap_or(ContextBudget::DEFAULT_CHARS);
        let cfg = RunConfig {
            project_dir: flags.project.clone().or(file.project_dir.clone()),
            module_path: String::new(),
            run_dir: flags.run_dir.clone().or(file.run_dir.clone()).unwrap_or_else(|| PathBuf::from("ratg-run")),
            gopls: flags.gopls.clone().or(file.gopls.clone()).unwrap_or_else(|| PathBuf::from("gopls")),
            generator: GeneratorConfig {
                backend: flags.backend.or(g.backend).unwrap_or(Backend::Remote),
                tokens_dir: flags.tokens.clone().or(g.tokens_dir.clone()),
                endpoint: flags.endpoint.clone().or(g.endpoint.clone()),
                api_token: std::env::var("RATG_LLM_TOKEN").ok().filter(|t| !t.is_empty()),
                temperature: flags.temperature.or(g.temperature).unwrap_or(0.0),
                retries: flags.retries.or(g.retries).unwrap_or(3),
            },
            max_tokens: flags.max_tokens.or(file.max_tokens).unwrap_or(ratg_core::generate::DEFAULT_MAX_TOKENS),
            candidates: flags.candidates.or(file.candidates).unwrap_or(1),
            context_budget: (budget > 0).then_some(budget),
            compile_timeout_secs: flags.compile_timeout.or(file.compile_timeout_secs).unwrap_or(300),
            test_timeout_secs: flags.test_timeout.or(file.test_timeout_secs).unwrap_or(120),
            focal: flags.focal.clone().or(file.focal.clone()),
            exported_only: flags.exported_only.or(file.exported_only).unwrap_or(false),
            no_context: flags.no_context.or(file.no_context).unwrap_or(false),
            import_fixer: flags.import_fixer.clone().or(file.import_fixer.clone()),
            mutator: flags.mutator.clone().or(file.mutator.clone()),
            mutator_args: if flags.mutator_args.is_empty() { file.mutator_args.clone() } else { flags.mutator_args.clone() },
        };
        cfg.validate(needs_project)
    }

    fn validate(mut self, needs_project: bool) -> anyhow::Result<Self> {
        if self.max_tokens < 1 {
            return Err(usage("max_tokens", "must be at least 1"));
        }
        if self.candidates < 1 {
            return Err(usage("candidates", "must be at least 1"));
        }
        if !(0.0..=2.0).contains(&self.generator.temperature) {
            return Err(usage("temperature", "must be between 0 and 2"));
        }
        if self.compile_timeout_secs == 0 || self.test_timeout_secs == 0 {
            return Err(usage("timeout", "timeouts must be positive"));
        }
        if let Some(re) = &self.focal {
            Regex::new(re).map_err(|e| usage("focal", e.to_string()))?;
        }
        for (field, path) in [("import_fixer", &self.import_fixer), ("mutator", &self.mutator)] {
            if let Some(p) = path {
                ratg_core::lsp::resolve_executable(p).map_err(|_| usage(field, format!("{} not found", p.display())))?;
            }
        }
        match &self.project_dir {
            Some(dir) => {
                let dir = dir
                    .canonicalize()
                    .map_err(|e| usage("project_dir", format!("{}: {e}", dir.display())))?;
                let (root, module) =
                    find_module(&dir).ok_or_else(|| usage("project_dir", format!("no go.mod at or above {}", dir.display())))?;
                self.project_dir = Some(root);
                self.module_path = module;
            }
            None if needs_project => return Err(usage("project_dir", "required (--project or project_dir in the config file)")),
            None => {}
        }
        Ok(self)
    }

    /// Module root; only valid after `resolve(.., true)`.
    pub fn project(&self) -> &Path {
        self.project_dir.as_deref().expect("project resolved")
    }

    pub fn project_name(&self) -> String {
        self.project().file_name().map_or_else(|| self.module_path.clone(), |n| n.to_string_lossy().into_owned())
    }

    pub fn budget(&self) -> ContextBudget {
        self.context_budget.map_or_else(ContextBudget::unlimited, ContextBudget::chars)
    }

    pub fn focal_filter(&self) -> FocalFilter {
        FocalFilter {
            name_pattern: self.focal.as_deref().map(|r| Regex::new(r).expect("validated")),
            exported_only: self.exported_only,
        }
    }

    pub fn compile_timeout(&self) -> Duration {
        Duration::from_secs(self.compile_timeout_secs)
    }

    pub fn test_timeout(&self) -> Duration {
        Duration::from_secs(self.test_timeout_secs)
    }

    /// Backend-specific checks, done before generation starts.
    pub fn check_generator(&self) -> anyhow::Result<()> {
        match self.generator.backend {
            Backend::Scripted => {
                let dir = self.generator.tokens_dir.as_ref().ok_or_else(|| usage("tokens_dir", "the scripted backend needs --tokens"))?;
                if !dir.is_dir() {
                    return Err(usage("tokens_dir", format!("{} is not a directory", dir.display())));
                }
            }
            Backend::Remote => {
                if self.generator.endpoint.is_none() {
                    return Err(usage("endpoint", "the remote backend needs --endpoint or RATG_LLM_ENDPOINT"));
                }
            }
        }
        Ok(())
    }

    pub fn write_snapshot(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
