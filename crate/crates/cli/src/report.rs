//! Report rendering: the aligned text table, the CSV, and the JSON
//! document with run metadata, plus per-run exports (result JSON and the
//! trade log CSV).
//!
//! Internal values stay full precision; rounding to two decimals with
//! half-away-from-zero happens only here.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use lookahead_core::benchmark::{AlphaRecord, RowFailure};
use lookahead_core::engine::BacktestResult;
use lookahead_core::portfolio::Trade;

/// Round to two decimals, halves away from zero.
pub fn round2(x: f64) -> f64 {
    let scaled = (x.abs() * 100.0 + 0.5).floor();
    let rounded = scaled / 100.0;
    if x < 0.0 {
        -rounded
    } else {
        rounded
    }
}

/// Signed two-decimal rendering: `+25.32`, `-2.46`, `+0.00`.
pub fn fmt_signed2(x: f64) -> String {
    let r = round2(x);
    if r == 0.0 {
        // avoid the "-0.00" artifact
        "+0.00".to_string()
    } else {
        format!("{r:+.2}")
    }
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "Model/Strategy",
    "Variant",
    "P1 Return (%)",
    "P1 Alpha (pp)",
    "P2 Return (%)",
    "P2 Alpha (pp)",
    "Alpha Decay (pp)",
];

fn column_names(period_labels: &[String; 2]) -> [String; 7] {
    [
        REPORT_COLUMNS[0].to_string(),
        REPORT_COLUMNS[1].to_string(),
        format!("{} Return (%)", period_labels[0]),
        format!("{} Alpha (pp)", period_labels[0]),
        format!("{} Return (%)", period_labels[1]),
        format!("{} Alpha (pp)", period_labels[1]),
        REPORT_COLUMNS[6].to_string(),
    ]
}

fn record_cells(record: &AlphaRecord) -> [String; 7] {
    [
        record.strategy_label.clone(),
        record.variant.as_str().to_string(),
        fmt_signed2(record.p1_return_pct),
        fmt_signed2(record.p1_alpha_pp),
        fmt_signed2(record.p2_return_pct),
        fmt_signed2(record.p2_alpha_pp),
        fmt_signed2(record.alpha_decay_pp),
    ]
}

/// The aligned, human-facing table. Failed rows appear with `FAILED` in
/// the numeric columns.
pub fn render_text(
    records: &[AlphaRecord],
    failures: &[RowFailure],
    period_labels: &[String; 2],
) -> String {
    let header = column_names(period_labels);
    let mut rows: Vec<[String; 7]> = records.iter().map(record_cells).collect();

    let mut failed_labels: Vec<(&str, &str)> = failures
        .iter()
        .map(|f| (f.strategy_label.as_str(), f.variant.as_str()))
        .collect();
    failed_labels.dedup();
    for (label, variant) in failed_labels {
        rows.push([
            label.to_string(),
            variant.to_string(),
            "FAILED".into(),
            "FAILED".into(),
            "FAILED".into(),
            "FAILED".into(),
            "FAILED".into(),
        ]);
    }

    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }

    let mut out = String::new();
    let write_row = |out: &mut String, cells: &[String; 7]| {
        for (i, (cell, width)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i < 2 {
                let _ = write!(out, "{cell:<width$}");
            } else {
                let _ = write!(out, "{cell:>width$}");
            }
        }
        out.push('\n');
    };
    write_row(&mut out, &header);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in &rows {
        write_row(&mut out, row);
    }
    for failure in failures {
        let _ = writeln!(
            out,
            "FAILED {} [{}]: {}",
            failure.strategy_label, failure.period_label, failure.message
        );
    }
    out
}

/// The machine-facing CSV: exact column header, `\n` line endings,
/// successful rows only.
pub fn render_csv(records: &[AlphaRecord], period_labels: &[String; 2]) -> String {
    let mut out = column_names(period_labels).join(",");
    out.push('\n');
    for record in records {
        out.push_str(&record_cells(record).join(","));
        out.push('\n');
    }
    out
}

/// Parse a rendered CSV back into (label, variant, five numeric cells).
/// Exists so round-trip rendering can be verified.
pub fn parse_report_csv(text: &str) -> anyhow::Result<Vec<(String, String, [f64; 5])>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let mut nums = [0.0f64; 5];
        for (i, cell) in record.iter().skip(2).enumerate() {
            nums[i] = cell.parse()?;
        }
        rows.push((record[0].to_string(), record[1].to_string(), nums));
    }
    Ok(rows)
}

/// Run metadata embedded in the JSON report so every published number is
/// traceable to its inputs. No timestamps: report bytes must be a pure
/// function of config, data, and seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub engine_version: String,
    pub dataset_sha256: String,
    pub config_sha256: String,
    pub universe: Vec<String>,
    pub periods: Vec<PeriodMetadata>,
    pub initial_capital: f64,
    pub noise_seed: u64,
    pub agents: Vec<AgentMetadata>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodMetadata {
    pub label: String,
    pub start: String,
    pub end: String,
    pub warmup_days: usize,
}

/// Agent settings worth recording; credentials never appear here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentMetadata {
    pub label: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonReport {
    pub metadata: ReportMetadata,
    pub records: Vec<AlphaRecord>,
    pub failures: Vec<RowFailure>,
}

pub fn render_json(report: &JsonReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

/// Per-run result export: `{label, period: {start, end}, total_return_pct,
/// nav: [{date, value}...], trades: [...], seed}` with NAV values at six
/// decimal places.
pub fn write_backtest_json(result: &BacktestResult) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"label\": {},", json_str(&result.strategy_label));
    let _ = writeln!(
        out,
        "  \"period\": {{\"start\": \"{}\", \"end\": \"{}\"}},",
        result.period.start.format("%Y-%m-%d"),
        result.period.end.format("%Y-%m-%d")
    );
    let _ = writeln!(out, "  \"total_return_pct\": {},", result.total_return_pct);
    out.push_str("  \"nav\": [\n");
    for (i, (date, value)) in result.nav_history.iter().enumerate() {
        let comma = if i + 1 < result.nav_history.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"date\": \"{}\", \"value\": {value:.6}}}{comma}",
            date.format("%Y-%m-%d")
        );
    }
    out.push_str("  ],\n");
    out.push_str("  \"trades\": [\n");
    for (i, trade) in result.trades.iter().enumerate() {
        let comma = if i + 1 < result.trades.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"date\": \"{}\", \"ticker\": {}, \"share_delta\": {}, \"price\": {}, \"cash_delta\": {}}}{comma}",
            trade.date.format("%Y-%m-%d"),
            json_str(trade.ticker.as_str()),
            trade.share_delta,
            trade.price,
            trade.cash_delta
        );
    }
    out.push_str("  ],\n");
    match result.seed {
        Some(seed) => {
            let _ = writeln!(out, "  \"seed\": {seed}");
        }
        None => {
            let _ = writeln!(out, "  \"seed\": null");
        }
    }
    out.push_str("}\n");
    out
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Trade log CSV: same formatting conventions as the price CSV.
pub fn write_trades_csv(trades: &[Trade]) -> String {
    let mut out = String::from("date,ticker,share_delta,price,cash_delta\n");
    for trade in trades {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            trade.date.format("%Y-%m-%d"),
            trade.ticker,
            trade.share_delta,
            trade.price,
            trade.cash_delta
        );
    }
    out
}
