//! The benchmark configuration file: a TOML document mirroring the plan
//! the runner executes. Secrets never live in the file, only the names of
//! environment variables that hold them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use lookahead_core::benchmark::Variant;
use lookahead_core::engine::PeriodSpec;
use lookahead_core::strategies::{parse_strategy, QuantStrategy, StrategyConfig};
use lookahead_core::types::Ticker;

pub const DEFAULT_API_KEY_ENV: &str = "LOOKAHEAD_API_KEY";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub data: DataSection,
    pub universe: Vec<String>,
    #[serde(default = "default_capital")]
    pub initial_capital: f64,
    pub periods: Vec<PeriodSection>,
    pub strategies: StrategiesSection,
    #[serde(default)]
    pub agents: Vec<AgentSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_capital() -> f64 {
    100_000.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSection {
    /// Price CSV path, relative to the config file's directory.
    pub prices: PathBuf,
    /// Optional content pin; a mismatch is reported as a warning since
    /// adjusted closes drift with every new dividend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_sha256: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodSection {
    pub label: String,
    /// ISO date string, e.g. "2021-04-01".
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Trading days of pre-period history visible to this period's runs.
    /// Zero (the default) keeps runs hermetic to the period itself.
    #[serde(default)]
    pub warmup_days: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategiesSection {
    /// Strategy keys in report order. `buy_hold` must be present: it is
    /// the benchmark row alpha is measured against.
    pub enabled: Vec<String>,
    #[serde(default)]
    pub params: StrategyParams,
}

/// Strategy tunables with file-level defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    pub momentum_lookback_days: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_size: Option<usize>,
    pub ma_fast: usize,
    pub ma_slow: usize,
    pub noise_seed: u64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        let d = StrategyConfig::default();
        StrategyParams {
            momentum_lookback_days: d.momentum_lookback_days,
            selection_size: d.selection_size,
            ma_fast: d.ma_fast,
            ma_slow: d.ma_slow,
            noise_seed: d.noise_seed,
        }
    }
}

impl StrategyParams {
    pub fn to_core(&self) -> StrategyConfig {
        StrategyConfig {
            momentum_lookback_days: self.momentum_lookback_days,
            selection_size: self.selection_size,
            ma_fast: self.ma_fast,
            ma_slow: self.ma_slow,
            noise_seed: self.noise_seed,
        }
    }
}

/// A pluggable decision agent. Fixture agents replay canned reply texts
/// from a directory of `<date>.txt` files; remote agents call a
/// chat-completion endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSection {
    Fixture {
        label: String,
        #[serde(default = "default_variant")]
        variant: String,
        fixtures_dir: PathBuf,
        #[serde(default = "default_history_window")]
        history_window_days: usize,
    },
    Remote {
        label: String,
        #[serde(default = "default_variant")]
        variant: String,
        base_url: String,
        model: String,
        #[serde(default = "default_api_key_env")]
        api_key_env: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        max_retries: u32,
        #[serde(default)]
        temperature: f64,
        #[serde(default = "default_history_window")]
        history_window_days: usize,
    },
}

fn default_variant() -> String {
    "Standard".into()
}

fn default_history_window() -> usize {
    63
}

fn default_api_key_env() -> String {
    DEFAULT_API_KEY_ENV.into()
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

impl AgentSection {
    pub fn label(&self) -> &str {
        match self {
            AgentSection::Fixture { label, .. } | AgentSection::Remote { label, .. } => label,
        }
    }

    pub fn variant(&self) -> Result<Variant> {
        let raw = match self {
            AgentSection::Fixture { variant, .. } | AgentSection::Remote { variant, .. } => {
                variant
            }
        };
        Variant::parse(raw).map_err(|e| anyhow::anyhow!("{e}"))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl BenchmarkConfig {
    /// Parse and validate a config file. Relative paths inside the file
    /// resolve against the file's directory.
    pub fn load(path: &Path) -> Result<(BenchmarkConfig, String)> {
        let raw = fs::read(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let sha = crate::data::sha256_hex(&raw);
        let text = String::from_utf8(raw).context("config file is not UTF-8")?;
        let mut config: BenchmarkConfig =
            toml::from_str(&text).context("cannot parse config file")?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.data.prices = resolve(base, &config.data.prices);
        for agent in &mut config.agents {
            if let AgentSection::Fixture { fixtures_dir, .. } = agent {
                *fixtures_dir = resolve(base, fixtures_dir);
            }
        }
        if config.output.dir.as_os_str().is_empty() {
            config.output.dir = default_out_dir();
        }
        config.validate()?;
        Ok((config, sha))
    }

    pub fn validate(&self) -> Result<()> {
        if self.universe.is_empty() {
            bail!("universe is empty");
        }
        if self.periods.len() != 2 {
            bail!("exactly two labeled periods are required, found {}", self.periods.len());
        }
        if self.periods[0].label == self.periods[1].label {
            bail!("period labels must differ");
        }
        for p in &self.periods {
            if p.start >= p.end {
                bail!("period {}: start {} is not before end {}", p.label, p.start, p.end);
            }
        }
        if !(self.initial_capital.is_finite() && self.initial_capital > 0.0) {
            bail!("initial_capital must be positive");
        }
        if self.strategies.enabled.is_empty() {
            bail!("no strategies enabled");
        }
        for key in &self.strategies.enabled {
            parse_strategy(key).map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        if !self.strategies.enabled.iter().any(|k| k == "buy_hold") {
            bail!("the buy_hold benchmark strategy must be enabled");
        }
        self.strategies
            .params
            .to_core()
            .validate()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut labels: Vec<&str> = self
            .strategies
            .enabled
            .iter()
            .map(|k| parse_strategy(k).unwrap().label())
            .chain(self.agents.iter().map(|a| a.label()))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.strategies.enabled.len() + self.agents.len() {
            bail!("strategy and agent labels must be unique");
        }
        for agent in &self.agents {
            agent.variant()?;
        }
        Ok(())
    }

    pub fn universe_tickers(&self) -> Vec<Ticker> {
        let mut tickers: Vec<Ticker> = self
            .universe
            .iter()
            .map(|s| Ticker::from(s.as_str()))
            .collect();
        tickers.sort();
        tickers
    }

    pub fn enabled_strategies(&self) -> Vec<QuantStrategy> {
        self.strategies
            .enabled
            .iter()
            .map(|k| parse_strategy(k).expect("validated"))
            .collect()
    }

    pub fn period_specs(&self) -> Result<Vec<PeriodSpec>> {
        self.periods
            .iter()
            .map(|p| {
                PeriodSpec::new(p.label.clone(), p.start, p.end)
                    .map_err(|e| anyhow::anyhow!("{e}"))
            })
            .collect()
    }

    pub fn find_period(&self, label: &str) -> Result<&PeriodSection> {
        self.periods
            .iter()
            .find(|p| p.label == label)
            .with_context(|| {
                let known: Vec<&str> = self.periods.iter().map(|p| p.label.as_str()).collect();
                format!("unknown period `{label}` (known: {})", known.join(", "))
            })
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
