//! Price CSV ingestion and export, plus dataset hashing and the coverage
//! checks behind `validate`.
//!
//! The price CSV is a fixed three-column schema: a `ticker,date,adjusted_close`
//! header, ISO-8601 dates, `.` decimal separators, UTF-8, `\n` line endings.
//! One file may hold many tickers; rows outside the expected universe are
//! ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use lookahead_core::marketdata::{PriceBar, PriceSeries, SeriesMap};
use lookahead_core::types::Ticker;

pub const PRICE_CSV_HEADER: &str = "ticker,date,adjusted_close";

/// Parse and validate a price CSV, returning one sorted series per
/// expected ticker. Errors carry the offending line number.
pub fn load_price_csv<R: Read>(reader: R, expected: &[Ticker]) -> Result<SeriesMap> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    {
        let headers = rdr.headers().context("cannot read CSV header")?;
        let expected_header: Vec<&str> = PRICE_CSV_HEADER.split(',').collect();
        if headers.iter().collect::<Vec<_>>() != expected_header {
            bail!(
                "bad CSV header: expected `{PRICE_CSV_HEADER}`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            );
        }
    }

    let want: HashSet<&Ticker> = expected.iter().collect();
    let mut columns: SeriesMapBuilder = SeriesMapBuilder::default();
    let mut seen: HashSet<(Ticker, NaiveDate)> = HashSet::new();

    for record in rdr.records() {
        let record = record.context("malformed CSV record")?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or_default();
        if record.len() != 3 {
            bail!("line {line}: expected 3 fields, found {}", record.len());
        }
        let ticker = Ticker::from(record[0].trim());
        if !want.contains(&ticker) {
            continue;
        }
        let date: NaiveDate = record[1]
            .trim()
            .parse()
            .with_context(|| format!("line {line}: bad date `{}`", &record[1]))?;
        let price: f64 = record[2]
            .trim()
            .parse()
            .with_context(|| format!("line {line}: bad price `{}`", &record[2]))?;
        if !(price.is_finite() && price > 0.0) {
            bail!("line {line}: non-positive price {price} for {ticker} on {date}");
        }
        if !seen.insert((ticker.clone(), date)) {
            bail!("line {line}: duplicate bar for {ticker} on {date}");
        }
        columns.push(ticker, PriceBar { date, adjusted_close: price });
    }

    let map = columns.finish()?;
    for ticker in expected {
        if !map.contains_key(ticker.as_str()) {
            bail!("expected ticker {ticker} is missing from the data");
        }
    }
    Ok(map)
}

#[derive(Default)]
struct SeriesMapBuilder {
    columns: std::collections::BTreeMap<Ticker, Vec<PriceBar>>,
}

impl SeriesMapBuilder {
    fn push(&mut self, ticker: Ticker, bar: PriceBar) {
        self.columns.entry(ticker).or_default().push(bar);
    }

    fn finish(self) -> Result<SeriesMap> {
        self.columns
            .into_iter()
            .map(|(t, bars)| {
                let series =
                    PriceSeries::new(t.clone(), bars).map_err(|e| anyhow::anyhow!("{e}"))?;
                Ok((t, series))
            })
            .collect()
    }
}

pub fn load_price_csv_path(path: &Path, expected: &[Ticker]) -> Result<SeriesMap> {
    let file = fs::File::open(path)
        .with_context(|| format!("cannot open price CSV {}", path.display()))?;
    load_price_csv(std::io::BufReader::new(file), expected)
        .with_context(|| format!("while loading {}", path.display()))
}

/// Serialize a series map back to the CSV schema. Full float precision;
/// `load(write(load(x)))` equals `load(x)`.
pub fn write_price_csv(map: &SeriesMap) -> String {
    let mut out = String::from(PRICE_CSV_HEADER);
    out.push('\n');
    for (ticker, series) in map {
        for bar in series.bars() {
            let _ = writeln!(
                out,
                "{ticker},{},{}",
                bar.date.format("%Y-%m-%d"),
                bar.adjusted_close
            );
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}
