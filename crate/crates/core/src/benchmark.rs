//! Alpha and alpha-decay arithmetic, and the dual-period benchmark
//! orchestration that produces the comparison table.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::agent::DecisionAgent;
use crate::engine::{
    run_backtest, BacktestResult, PeriodSpec, PortfolioMode, RebalancePolicy,
};
use crate::error::{Error, Result};
use crate::marketdata::{build_calendar, window_series, SeriesMap};
use crate::types::Ticker;

/// Excess return over the passive benchmark, in percentage points.
pub fn alpha(strategy_return_pct: f64, benchmark_return_pct: f64) -> f64 {
    strategy_return_pct - benchmark_return_pct
}

/// Out-of-sample alpha minus in-sample alpha. Strongly negative values
/// indicate in-sample performance that did not generalize.
pub fn alpha_decay(alpha_p1_pp: f64, alpha_p2_pp: f64) -> f64 {
    alpha_p2_pp - alpha_p1_pp
}

/// Row category in the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Passive,
    Systematic,
    Trend,
    Control,
    Standard,
    PiT,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Passive => "Passive",
            Variant::Systematic => "Systematic",
            Variant::Trend => "Trend",
            Variant::Control => "Control",
            Variant::Standard => "Standard",
            Variant::PiT => "PiT",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "Passive" => Ok(Variant::Passive),
            "Systematic" => Ok(Variant::Systematic),
            "Trend" => Ok(Variant::Trend),
            "Control" => Ok(Variant::Control),
            "Standard" => Ok(Variant::Standard),
            "PiT" => Ok(Variant::PiT),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown variant `{other}`"
            ))),
        }
    }
}

/// One row of the dual-period table, full precision. Rounding happens
/// only at rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRecord {
    pub strategy_label: String,
    pub variant: Variant,
    pub p1_return_pct: f64,
    pub p1_alpha_pp: f64,
    pub p2_return_pct: f64,
    pub p2_alpha_pp: f64,
    pub alpha_decay_pp: f64,
}

/// A row that could not be produced, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub strategy_label: String,
    pub variant: Variant,
    pub period_label: String,
    pub message: String,
}

/// An evaluation window plus the trading days of pre-period history its
/// runs may see. Zero keeps runs hermetic to the period itself, which is
/// the reference protocol; strategies then apply their insufficient-
/// history fallbacks early in the period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodWindow {
    pub spec: PeriodSpec,
    pub warmup_days: usize,
}

/// One table row to run: a labeled decision source with its cadence and
/// execution mode. The factory builds a fresh agent per period so stateful
/// sources (seeded generators, retry counters) never leak across runs.
pub struct BenchmarkEntry {
    pub label: String,
    pub variant: Variant,
    pub policy: RebalancePolicy,
    pub mode: PortfolioMode,
    pub seed: Option<u64>,
    pub make_agent: Box<dyn Fn() -> Result<Box<dyn DecisionAgent + Send>> + Send + Sync>,
}

/// The full dual-period experiment: data window per period, capital, and
/// the entries in table order. The first entry must be the passive
/// benchmark row that alpha is measured against.
pub struct BenchmarkPlan {
    pub universe: Vec<Ticker>,
    pub periods: [PeriodWindow; 2],
    pub initial_capital: f64,
    pub benchmark_label: String,
    pub entries: Vec<BenchmarkEntry>,
}

impl BenchmarkPlan {
    fn validate(&self) -> Result<()> {
        if self.universe.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if !self.entries.iter().any(|e| e.label == self.benchmark_label) {
            return Err(Error::InvalidConfig(alloc::format!(
                "benchmark entry `{}` missing from the plan",
                self.benchmark_label
            )));
        }
        if self.periods[0].spec.label == self.periods[1].spec.label {
            return Err(Error::InvalidConfig("period labels must differ".into()));
        }
        Ok(())
    }
}

/// The assembled table plus per-row failures and the raw period runs
/// (keyed by entry label) for callers that export them.
pub struct BenchmarkReport {
    pub period_labels: [String; 2],
    pub records: Vec<AlphaRecord>,
    pub failures: Vec<RowFailure>,
    pub runs: BTreeMap<String, [Option<BacktestResult>; 2]>,
}

/// The data actually visible to one period's runs: the loaded series
/// restricted to `[period start - warmup_days trading days, period end]`.
pub fn period_data(data: &SeriesMap, window: &PeriodWindow) -> Result<SeriesMap> {
    let full_calendar = build_calendar(data)?;
    let start_idx = full_calendar
        .index_on_or_after(window.spec.start)
        .ok_or_else(|| Error::EmptyPeriod {
            label: window.spec.label.clone(),
        })?;
    let visible_from: NaiveDate =
        full_calendar.days()[start_idx.saturating_sub(window.warmup_days)];
    window_series(data, visible_from, window.spec.end)
}

/// Run every entry over both periods independently, compute per-period
/// alpha against the benchmark entry of the same period, and assemble
/// records in plan order.
pub fn run_dual_period(data: &SeriesMap, plan: &BenchmarkPlan) -> Result<BenchmarkReport> {
    plan.validate()?;

    // Per-period visible data and calendars, shared by every entry.
    let mut period_maps = Vec::new();
    for window in &plan.periods {
        let map = period_data(data, window)?;
        let calendar = build_calendar(&map)?;
        period_maps.push((map, calendar, window.spec.clone()));
    }

    let mut runs: BTreeMap<String, [Option<BacktestResult>; 2]> = BTreeMap::new();
    let mut failures: Vec<RowFailure> = Vec::new();

    for entry in &plan.entries {
        let mut pair: [Option<BacktestResult>; 2] = [None, None];
        for (i, (map, calendar, spec)) in period_maps.iter().enumerate() {
            let outcome = entry.make_agent.as_ref()().and_then(|mut agent| {
                run_backtest(
                    map,
                    calendar,
                    spec,
                    entry.policy,
                    agent.as_mut(),
                    plan.initial_capital,
                    entry.mode,
                    &entry.label,
                    entry.seed,
                )
            });
            match outcome {
                Ok(result) => {
                    // A decision source that never produced a single
                    // decision has nothing to report.
                    if result.decisions_made == 0 && result.decision_failures > 0 {
                        failures.push(RowFailure {
                            strategy_label: entry.label.clone(),
                            variant: entry.variant,
                            period_label: spec.label.clone(),
                            message: alloc::format!(
                                "all {} decisions failed",
                                result.decision_failures
                            ),
                        });
                    } else {
                        pair[i] = Some(result);
                    }
                }
                Err(e) => failures.push(RowFailure {
                    strategy_label: entry.label.clone(),
                    variant: entry.variant,
                    period_label: spec.label.clone(),
                    message: alloc::format!("{e}"),
                }),
            }
        }
        runs.insert(entry.label.clone(), pair);
    }

    let benchmark_returns: [f64; 2] = {
        let pair = &runs[&plan.benchmark_label];
        let p1 = pair[0].as_ref().ok_or_else(|| {
            Error::InvalidConfig("benchmark run failed in the first period".into())
        })?;
        let p2 = pair[1].as_ref().ok_or_else(|| {
            Error::InvalidConfig("benchmark run failed in the second period".into())
        })?;
        [p1.total_return_pct, p2.total_return_pct]
    };

    let mut records = Vec::new();
    for entry in &plan.entries {
        let pair = &runs[&entry.label];
        let (Some(r1), Some(r2)) = (&pair[0], &pair[1]) else {
            continue; // failure already recorded
        };
        let p1_alpha = alpha(r1.total_return_pct, benchmark_returns[0]);
        let p2_alpha = alpha(r2.total_return_pct, benchmark_returns[1]);
        records.push(AlphaRecord {
            strategy_label: entry.label.clone(),
            variant: entry.variant,
            p1_return_pct: r1.total_return_pct,
            p1_alpha_pp: p1_alpha,
            p2_return_pct: r2.total_return_pct,
            p2_alpha_pp: p2_alpha,
            alpha_decay_pp: alpha_decay(p1_alpha, p2_alpha),
        });
    }

    Ok(BenchmarkReport {
        period_labels: [
            plan.periods[0].spec.label.clone(),
            plan.periods[1].spec.label.clone(),
        ],
        records,
        failures,
        runs,
    })
}
