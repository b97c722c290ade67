//! The three subcommands: `validate`, `run`, and `bench`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use lookahead_core::benchmark::{
    period_data, run_dual_period, BenchmarkEntry, BenchmarkPlan, BenchmarkReport, PeriodWindow,
    Variant,
};
use lookahead_core::engine::{run_backtest, PeriodSpec, PortfolioMode, RebalancePolicy};
use lookahead_core::marketdata::{build_calendar, SeriesMap, TradingCalendar};
use lookahead_core::strategies::{parse_strategy, QuantStrategy, StrategyConfig};
use lookahead_core::types::Ticker;

use crate::config::{AgentSection, BenchmarkConfig};
use crate::data::{file_sha256, load_price_csv_path};
use crate::remote::{AgentEndpointConfig, FixtureAgent, RemoteChatAgent};
use crate::report::{
    fmt_signed2, render_csv, render_json, render_text, write_backtest_json, write_trades_csv,
    AgentMetadata, JsonReport, PeriodMetadata, ReportMetadata,
};

/// Failure class, mapped to the process exit code: configuration and
/// validation problems exit 1, runtime problems exit 2.
#[derive(Debug)]
pub enum CmdError {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 1,
            CmdError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CmdError::Config(e) | CmdError::Runtime(e) => format!("{e:#}"),
        }
    }
}

pub type CmdResult = std::result::Result<(), CmdError>;

fn config_err<T>(r: Result<T>) -> std::result::Result<T, CmdError> {
    r.map_err(CmdError::Config)
}

fn runtime_err<T>(r: Result<T>) -> std::result::Result<T, CmdError> {
    r.map_err(CmdError::Runtime)
}

/// Overrides from the command line; they take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn effective_params(config: &BenchmarkConfig, overrides: &Overrides) -> StrategyConfig {
    let mut params = config.strategies.params.to_core();
    if let Some(seed) = overrides.seed {
        params.noise_seed = seed;
    }
    params
}

fn out_dir(config: &BenchmarkConfig, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .unwrap_or_else(|| config.output.dir.clone())
}

/// Trading days of the full dataset calendar strictly before the period's
/// first trading day.
fn pre_period_depth(calendar: &TradingCalendar, start: chrono::NaiveDate) -> usize {
    calendar.index_on_or_after(start).unwrap_or(calendar.len())
}

/// Check the dataset against the config: CSV schema, universe coverage,
/// calendar intersection, warm-up depth for both periods. Prints one
/// diagnostic per check.
pub fn cmd_validate(config_path: &Path) -> CmdResult {
    let (config, _sha) = config_err(BenchmarkConfig::load(config_path))?;
    let universe = config.universe_tickers();

    let map = config_err(load_price_csv_path(&config.data.prices, &universe))?;
    let rows: usize = map.values().map(|s| s.bars().len()).sum();
    println!("csv ok: {rows} rows across {} tickers", map.len());
    println!("universe ok: {} tickers", universe.len());

    let calendar =
        config_err(build_calendar(&map).map_err(|e| anyhow!("calendar check failed: {e}")))?;
    println!(
        "calendar ok: {} trading days ({} to {})",
        calendar.len(),
        calendar.first(),
        calendar.last()
    );

    if let Some(expected) = &config.data.expected_sha256 {
        let actual = config_err(file_sha256(&config.data.prices))?;
        if &actual == expected {
            println!("dataset hash ok: {actual}");
        } else {
            println!(
                "warning: dataset hash mismatch: expected {expected}, found {actual} \
                 (adjusted closes drift as vendors restate; tolerances absorb small drift)"
            );
        }
    }

    // Warm-up: each period must find its full configured window in the
    // dataset. The largest strategy lookback is reported so the message
    // names what day-one signals would need.
    let params = config.strategies.params.to_core();
    let mut warmup_ok = true;
    for period in &config.periods {
        let spec = config_err(
            PeriodSpec::new(period.label.clone(), period.start, period.end)
                .map_err(|e| anyhow!("{e}")),
        )?;
        let days = config_err(
            lookahead_core::engine::period_days(&calendar, &spec)
                .map_err(|e| anyhow!("period {} has no trading days in the dataset: {e}", period.label)),
        )?;
        let available = pre_period_depth(&calendar, days[0]);
        if available < period.warmup_days {
            warmup_ok = false;
            let mut needs = String::new();
            for strategy in config.enabled_strategies() {
                let lookback = match strategy {
                    QuantStrategy::Momentum | QuantStrategy::MeanReversion => {
                        params.momentum_lookback_days + 1
                    }
                    QuantStrategy::MaCrossover => params.ma_slow,
                    _ => 0,
                };
                if lookback > available {
                    needs.push_str(&format!(
                        " {} needs {} prior trading days for day-one signals;",
                        strategy.label(),
                        lookback
                    ));
                }
            }
            println!(
                "warm-up violation: period {} requests {} trading days before {} but the dataset provides {}.{needs}",
                period.label, period.warmup_days, days[0], available
            );
        } else {
            for strategy in config.enabled_strategies() {
                let lookback = match strategy {
                    QuantStrategy::Momentum | QuantStrategy::MeanReversion => {
                        params.momentum_lookback_days + 1
                    }
                    QuantStrategy::MaCrossover => params.ma_slow,
                    _ => 0,
                };
                if lookback > period.warmup_days {
                    log::info!(
                        "period {}: {} will use its in-period fallback until {} trading days accumulate",
                        period.label,
                        strategy.label(),
                        lookback
                    );
                }
            }
        }
    }
    if !warmup_ok {
        return Err(CmdError::Config(anyhow!("warm-up check failed")));
    }
    println!(
        "{} tickers, calendar ok, warm-up ok",
        universe.len()
    );
    Ok(())
}

enum Source {
    Quant(QuantStrategy),
    Agent(AgentSection),
}

fn resolve_source(config: &BenchmarkConfig, label: &str) -> Result<Source> {
    if let Ok(strategy) = parse_strategy(label) {
        if config.strategies.enabled.iter().any(|k| k == label) {
            return Ok(Source::Quant(strategy));
        }
        bail!("strategy `{label}` is not enabled in the config");
    }
    if let Some(agent) = config.agents.iter().find(|a| a.label() == label) {
        return Ok(Source::Agent(agent.clone()));
    }
    bail!(
        "unknown strategy `{label}` (strategies: {}; agents: {})",
        config.strategies.enabled.join(", "),
        config
            .agents
            .iter()
            .map(|a| a.label())
            .collect::<Vec<_>>()
            .join(", ")
    )
}

fn make_agent_entry(
    section: &AgentSection,
    universe: &[Ticker],
) -> Result<BenchmarkEntry> {
    let variant = section.variant()?;
    let label = section.label().to_string();
    let universe = universe.to_vec();
    let make_agent: Box<
        dyn Fn() -> lookahead_core::error::Result<
                Box<dyn lookahead_core::agent::DecisionAgent + Send>,
            > + Send
            + Sync,
    > = match section {
        AgentSection::Fixture { fixtures_dir, .. } => {
            let dir = fixtures_dir.clone();
            Box::new(move || {
                Ok(Box::new(FixtureAgent::new(dir.clone(), universe.clone()))
                    as Box<dyn lookahead_core::agent::DecisionAgent + Send>)
            })
        }
        AgentSection::Remote {
            base_url,
            model,
            api_key_env,
            timeout_secs,
            max_retries,
            temperature,
            history_window_days,
            ..
        } => {
            let endpoint = AgentEndpointConfig {
                base_url: base_url.clone(),
                model_name: model.clone(),
                api_key_env: api_key_env.clone(),
                timeout_secs: *timeout_secs,
                max_retries: *max_retries,
                temperature: *temperature,
                history_window_days: *history_window_days,
            };
            Box::new(move || {
                RemoteChatAgent::new(endpoint.clone(), universe.clone())
                    .map(|a| Box::new(a) as Box<dyn lookahead_core::agent::DecisionAgent + Send>)
                    .map_err(|e| {
                        lookahead_core::error::Error::AgentUnavailable(format!("{e:#}"))
                    })
            })
        }
    };
    Ok(BenchmarkEntry {
        label,
        variant,
        // Agents follow the monthly decision protocol in holding mode.
        policy: RebalancePolicy::Monthly,
        mode: PortfolioMode::Holding,
        seed: None,
        make_agent,
    })
}

fn quant_entry(
    strategy: QuantStrategy,
    universe: &[Ticker],
    params: &StrategyConfig,
) -> BenchmarkEntry {
    let variant = match strategy {
        QuantStrategy::BuyHold => Variant::Passive,
        QuantStrategy::EqualWeight | QuantStrategy::Momentum | QuantStrategy::MeanReversion => {
            Variant::Systematic
        }
        QuantStrategy::MaCrossover => Variant::Trend,
        QuantStrategy::RandomNoise => Variant::Control,
    };
    let universe = universe.to_vec();
    let params = params.clone();
    BenchmarkEntry {
        label: strategy.label().to_string(),
        variant,
        policy: strategy.policy(),
        mode: strategy.mode(),
        seed: strategy.seed(&params),
        make_agent: Box::new(move || Ok(strategy.agent(&universe, &params))),
    }
}

fn build_plan(config: &BenchmarkConfig, params: &StrategyConfig) -> Result<BenchmarkPlan> {
    let universe = config.universe_tickers();
    let mut entries = Vec::new();
    for strategy in config.enabled_strategies() {
        entries.push(quant_entry(strategy, &universe, params));
    }
    for section in &config.agents {
        entries.push(make_agent_entry(section, &universe)?);
    }
    let periods = config
        .periods
        .iter()
        .map(|p| {
            Ok(PeriodWindow {
                spec: PeriodSpec::new(p.label.clone(), p.start, p.end)
                    .map_err(|e| anyhow!("{e}"))?,
                warmup_days: p.warmup_days,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let periods: [PeriodWindow; 2] = periods
        .try_into()
        .map_err(|_| anyhow!("exactly two periods are required"))?;
    Ok(BenchmarkPlan {
        universe,
        periods,
        initial_capital: config.initial_capital,
        benchmark_label: QuantStrategy::BuyHold.label().to_string(),
        entries,
    })
}

/// Run one (strategy | agent, period) backtest and write the result JSON
/// and trade-log CSV.
pub fn cmd_run(
    config_path: &Path,
    strategy_label: &str,
    period_label: &str,
    overrides: &Overrides,
) -> CmdResult {
    let (config, _sha) = config_err(BenchmarkConfig::load(config_path))?;
    let params = effective_params(&config, overrides);
    let universe = config.universe_tickers();
    let source = config_err(resolve_source(&config, strategy_label))?;
    let period_section = config_err(config.find_period(period_label).map(|p| p.clone()))?;

    let map = config_err(load_price_csv_path(&config.data.prices, &universe))?;
    let spec = config_err(
        PeriodSpec::new(
            period_section.label.clone(),
            period_section.start,
            period_section.end,
        )
        .map_err(|e| anyhow!("{e}")),
    )?;
    let window = PeriodWindow {
        spec: spec.clone(),
        warmup_days: period_section.warmup_days,
    };
    let visible: SeriesMap =
        runtime_err(period_data(&map, &window).map_err(|e| anyhow!("{e}")))?;
    let calendar = runtime_err(build_calendar(&visible).map_err(|e| anyhow!("{e}")))?;

    let result = match source {
        Source::Quant(strategy) => {
            let mut agent = strategy.agent(&universe, &params);
            runtime_err(
                run_backtest(
                    &visible,
                    &calendar,
                    &spec,
                    strategy.policy(),
                    agent.as_mut(),
                    config.initial_capital,
                    strategy.mode(),
                    strategy.label(),
                    strategy.seed(&params),
                )
                .map_err(|e| anyhow!("{e}")),
            )?
        }
        Source::Agent(section) => {
            let entry = config_err(make_agent_entry(&section, &universe))?;
            let mut agent =
                runtime_err((entry.make_agent)().map_err(|e| anyhow!("{e}")))?;
            let result = runtime_err(
                run_backtest(
                    &visible,
                    &calendar,
                    &spec,
                    entry.policy,
                    agent.as_mut(),
                    config.initial_capital,
                    entry.mode,
                    &entry.label,
                    entry.seed,
                )
                .map_err(|e| anyhow!("{e}")),
            )?;
            if result.decisions_made == 0 && result.decision_failures > 0 {
                return Err(CmdError::Runtime(anyhow!(
                    "agent `{}` produced no decision in {} attempts",
                    entry.label,
                    result.decision_failures
                )));
            }
            result
        }
    };

    let dir = out_dir(&config, overrides);
    runtime_err(
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display())),
    )?;
    let stem = format!(
        "run_{}_{}",
        strategy_label.replace([' ', '/'], "_"),
        period_label
    );
    let json_path = dir.join(format!("{stem}.json"));
    runtime_err(
        fs::write(&json_path, write_backtest_json(&result))
            .with_context(|| format!("cannot write {}", json_path.display())),
    )?;
    let trades_path = dir.join(format!("{stem}_trades.csv"));
    runtime_err(
        fs::write(&trades_path, write_trades_csv(&result.trades))
            .with_context(|| format!("cannot write {}", trades_path.display())),
    )?;

    println!(
        "{} {}: {}% ({} trades, {} decisions) -> {}",
        result.strategy_label,
        period_label,
        fmt_signed2(result.total_return_pct),
        result.trades.len(),
        result.decisions_made,
        json_path.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

/// Run the dual-period benchmark and write all three report renderings.
pub fn cmd_bench(config_path: &Path, overrides: &Overrides, format: OutputFormat) -> CmdResult {
    let (config, config_sha) = config_err(BenchmarkConfig::load(config_path))?;
    let params = effective_params(&config, overrides);
    let universe = config.universe_tickers();
    let plan = config_err(build_plan(&config, &params))?;

    let map = config_err(load_price_csv_path(&config.data.prices, &universe))?;
    let dataset_sha = config_err(file_sha256(&config.data.prices))?;

    let report: BenchmarkReport =
        runtime_err(run_dual_period(&map, &plan).map_err(|e| anyhow!("{e}")))?;

    let metadata = ReportMetadata {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_sha256: dataset_sha,
        config_sha256: config_sha,
        universe: config.universe.clone(),
        periods: config
            .periods
            .iter()
            .map(|p| PeriodMetadata {
                label: p.label.clone(),
                start: p.start.format("%Y-%m-%d").to_string(),
                end: p.end.format("%Y-%m-%d").to_string(),
                warmup_days: p.warmup_days,
            })
            .collect(),
        initial_capital: config.initial_capital,
        noise_seed: params.noise_seed,
        agents: config
            .agents
            .iter()
            .map(|a| match a {
                AgentSection::Fixture { label, .. } => AgentMetadata {
                    label: label.clone(),
                    kind: "fixture".into(),
                    model: None,
                    temperature: None,
                },
                AgentSection::Remote {
                    label,
                    model,
                    temperature,
                    ..
                } => AgentMetadata {
                    label: label.clone(),
                    kind: "remote".into(),
                    model: Some(model.clone()),
                    temperature: Some(*temperature),
                },
            })
            .collect(),
    };

    let text = render_text(&report.records, &report.failures, &report.period_labels);
    let csv = render_csv(&report.records, &report.period_labels);
    let json = render_json(&JsonReport {
        metadata,
        records: report.records.clone(),
        failures: report.failures.clone(),
    });

    let dir = out_dir(&config, overrides);
    runtime_err(
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display())),
    )?;
    runtime_err(fs::write(dir.join("report.txt"), &text).context("writing report.txt"))?;
    runtime_err(fs::write(dir.join("report.csv"), &csv).context("writing report.csv"))?;
    runtime_err(fs::write(dir.join("report.json"), &json).context("writing report.json"))?;

    match format {
        OutputFormat::Text => print!("{text}"),
        OutputFormat::Csv => print!("{csv}"),
        OutputFormat::Json => print!("{json}"),
    }

    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(CmdError::Runtime(anyhow!(
            "{} row(s) failed; partial report written to {}",
            report.failures.len(),
            dir.display()
        )))
    }
}
