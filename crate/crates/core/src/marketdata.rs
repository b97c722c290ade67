//! Market data: per-ticker daily price histories, the trading calendar,
//! and point-in-time slices that make future bars unreachable by
//! construction.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Ticker;

/// One daily observation: the adjusted close for a ticker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub adjusted_close: f64,
}

impl PriceBar {
    pub fn new(date: NaiveDate, adjusted_close: f64) -> Result<Self> {
        if !(adjusted_close.is_finite() && adjusted_close > 0.0) {
            return Err(Error::NonPositivePrice {
                ticker: Ticker::new(""),
                date,
                value: adjusted_close,
            });
        }
        Ok(PriceBar {
            date,
            adjusted_close,
        })
    }
}

/// A validated, date-ascending price history for one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    ticker: Ticker,
    bars: Vec<PriceBar>,
}

impl PriceSeries {
    /// Sorts the bars by date and validates: non-empty, no duplicate
    /// dates, strictly positive prices.
    pub fn new(ticker: Ticker, mut bars: Vec<PriceBar>) -> Result<Self> {
        if bars.is_empty() {
            return Err(Error::EmptySeries(ticker));
        }
        bars.sort_by_key(|b| b.date);
        for pair in bars.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(Error::DuplicateBar {
                    ticker,
                    date: pair[0].date,
                });
            }
        }
        if let Some(bad) = bars
            .iter()
            .find(|b| !(b.adjusted_close.is_finite() && b.adjusted_close > 0.0))
        {
            return Err(Error::NonPositivePrice {
                ticker,
                date: bad.date,
                value: bad.adjusted_close,
            });
        }
        Ok(PriceSeries { ticker, bars })
    }

    pub fn ticker(&self) -> &Ticker {
        &self.ticker
    }

    pub fn bars(&self) -> &[PriceBar] {
        &self.bars
    }

    pub fn first_date(&self) -> NaiveDate {
        self.bars[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.bars[self.bars.len() - 1].date
    }

    /// Number of bars dated on or before `date`.
    fn count_through(&self, date: NaiveDate) -> usize {
        self.bars.partition_point(|b| b.date <= date)
    }

    /// A copy restricted to `[start, end]`, for callers that window a
    /// dataset before handing it to a backtest run.
    pub fn window(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let bars: Vec<PriceBar> = self
            .bars
            .iter()
            .copied()
            .filter(|b| b.date >= start && b.date <= end)
            .collect();
        PriceSeries::new(self.ticker.clone(), bars)
    }
}

/// All loaded histories, keyed by ticker. BTreeMap keeps every iteration
/// in ascending-symbol order, which the determinism guarantees rely on.
pub type SeriesMap = BTreeMap<Ticker, PriceSeries>;

/// Restrict every series in the map to `[start, end]`.
pub fn window_series(map: &SeriesMap, start: NaiveDate, end: NaiveDate) -> Result<SeriesMap> {
    map.iter()
        .map(|(t, s)| Ok((t.clone(), s.window(start, end)?)))
        .collect()
}

/// The days on which every loaded ticker traded: the sorted intersection
/// of all per-ticker date sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradingCalendar {
    days: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn first(&self) -> NaiveDate {
        self.days[0]
    }

    pub fn last(&self) -> NaiveDate {
        self.days[self.days.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.days.binary_search(&date).is_ok()
    }

    /// Index of the first trading day on or after `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let i = self.days.partition_point(|d| *d < date);
        (i < self.days.len()).then_some(i)
    }

    /// Index of the last trading day on or before `date`.
    pub fn index_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        let i = self.days.partition_point(|d| *d <= date);
        i.checked_sub(1)
    }
}

/// Build the calendar from the intersection of all tickers' bar dates.
pub fn build_calendar(series_map: &SeriesMap) -> Result<TradingCalendar> {
    let mut iter = series_map.values();
    let first = iter.next().ok_or(Error::EmptyCalendar)?;
    let mut days: Vec<NaiveDate> = first.bars().iter().map(|b| b.date).collect();
    for series in iter {
        let other: Vec<NaiveDate> = series.bars().iter().map(|b| b.date).collect();
        days.retain(|d| other.binary_search(d).is_ok());
    }
    if days.is_empty() {
        return Err(Error::EmptyCalendar);
    }
    Ok(TradingCalendar { days })
}

/// An as-of-dated view over all price series. Every access path checks
/// the as-of bound, so a bar dated after `as_of` is unreachable through
/// the slice rather than merely unused by convention.
#[derive(Debug, Clone, Copy)]
pub struct PitSlice<'a> {
    series: &'a SeriesMap,
    as_of: NaiveDate,
}

/// Create a point-in-time view with visibility capped at `as_of`.
pub fn pit_slice(series: &SeriesMap, as_of: NaiveDate) -> PitSlice<'_> {
    PitSlice { series, as_of }
}

impl<'a> PitSlice<'a> {
    pub fn as_of(&self) -> NaiveDate {
        self.as_of
    }

    pub fn tickers(&self) -> impl Iterator<Item = &'a Ticker> {
        self.series.keys()
    }

    fn series(&self, ticker: &Ticker) -> Result<&'a PriceSeries> {
        self.series
            .get(ticker)
            .ok_or_else(|| Error::MissingTicker(ticker.clone()))
    }

    /// The ticker's bars truncated to dates on or before `as_of`. May be
    /// empty when the slice predates the series.
    pub fn bars(&self, ticker: &Ticker) -> Result<&'a [PriceBar]> {
        let series = self.series(ticker)?;
        let n = series.count_through(self.as_of);
        Ok(&series.bars()[..n])
    }

    /// The bar exactly on `date`, if the ticker traded that day.
    /// Requesting a date after `as_of` is a future-access error, never
    /// silent data.
    pub fn bar_on(&self, ticker: &Ticker, date: NaiveDate) -> Result<Option<PriceBar>> {
        if date > self.as_of {
            return Err(Error::FutureAccess {
                requested: date,
                as_of: self.as_of,
            });
        }
        let bars = self.bars(ticker)?;
        Ok(bars
            .binary_search_by_key(&date, |b| b.date)
            .ok()
            .map(|i| bars[i]))
    }

    /// The adjusted close from the last bar on or before `date`.
    pub fn price_on_or_before(&self, ticker: &Ticker, date: NaiveDate) -> Result<f64> {
        if date > self.as_of {
            return Err(Error::FutureAccess {
                requested: date,
                as_of: self.as_of,
            });
        }
        let bars = self.bars(ticker)?;
        let n = bars.partition_point(|b| b.date <= date);
        if n == 0 {
            return Err(Error::InsufficientHistory {
                ticker: ticker.clone(),
                needed: 1,
                available: 0,
            });
        }
        Ok(bars[n - 1].adjusted_close)
    }

    /// The last `n` bars visible through the slice, most recent last.
    pub fn trailing_bars(&self, ticker: &Ticker, n: usize) -> Result<&'a [PriceBar]> {
        let bars = self.bars(ticker)?;
        if bars.len() < n {
            return Err(Error::InsufficientHistory {
                ticker: ticker.clone(),
                needed: n,
                available: bars.len(),
            });
        }
        Ok(&bars[bars.len() - n..])
    }

    /// Trailing total return over the last `lookback` visible bars:
    /// latest close over the close `lookback` bars earlier, minus one.
    pub fn trailing_return(&self, ticker: &Ticker, lookback: usize) -> Result<f64> {
        let bars = self.trailing_bars(ticker, lookback + 1)?;
        Ok(bars[bars.len() - 1].adjusted_close / bars[0].adjusted_close - 1.0)
    }
}

/// Total return between two dates using last-bar-on-or-before semantics
/// at each endpoint.
pub fn total_return(
    slice: &PitSlice<'_>,
    ticker: &Ticker,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<f64> {
    if start > end {
        return Err(Error::InvalidRange { start, end });
    }
    let start_price = slice.price_on_or_before(ticker, start)?;
    let end_price = slice.price_on_or_before(ticker, end)?;
    Ok(end_price / start_price - 1.0)
}

/// Arithmetic mean of the last `window` adjusted closes on or before
/// `as_of`.
pub fn sma(slice: &PitSlice<'_>, ticker: &Ticker, as_of: NaiveDate, window: usize) -> Result<f64> {
    debug_assert!(window > 0);
    if as_of > slice.as_of() {
        return Err(Error::FutureAccess {
            requested: as_of,
            as_of: slice.as_of(),
        });
    }
    let bars = slice.bars(ticker)?;
    let n = bars.partition_point(|b| b.date <= as_of);
    if n < window {
        return Err(Error::InsufficientHistory {
            ticker: ticker.clone(),
            needed: window,
            available: n,
        });
    }
    let sum: f64 = bars[n - window..n].iter().map(|b| b.adjusted_close).sum();
    Ok(sum / window as f64)
}

/// Close-over-close returns for consecutive bars in `[start, end]`,
/// dated on the later bar of each pair.
pub fn daily_returns(
    slice: &PitSlice<'_>,
    ticker: &Ticker,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<Vec<(NaiveDate, f64)>> {
    if start > end {
        return Err(Error::InvalidRange { start, end });
    }
    if end > slice.as_of() {
        return Err(Error::FutureAccess {
            requested: end,
            as_of: slice.as_of(),
        });
    }
    let bars = slice.bars(ticker)?;
    let lo = bars.partition_point(|b| b.date < start);
    let hi = bars.partition_point(|b| b.date <= end);
    let span = &bars[lo..hi];
    if span.len() < 2 {
        return Err(Error::InsufficientHistory {
            ticker: ticker.clone(),
            needed: 2,
            available: span.len(),
        });
    }
    Ok(span
        .windows(2)
        .map(|p| (p[1].date, p[1].adjusted_close / p[0].adjusted_close - 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn series(ticker: &str, points: &[(NaiveDate, f64)]) -> PriceSeries {
        let bars = points
            .iter()
            .map(|&(date, px)| PriceBar {
                date,
                adjusted_close: px,
            })
            .collect();
        PriceSeries::new(Ticker::from(ticker), bars).unwrap()
    }

    fn map(entries: Vec<PriceSeries>) -> SeriesMap {
        entries
            .into_iter()
            .map(|s| (s.ticker().clone(), s))
            .collect()
    }

    #[test]
    fn series_sorts_out_of_order_bars() {
        let s = series(
            "AAPL",
            &[(d(2021, 4, 5), 110.0), (d(2021, 4, 1), 100.0)],
        );
        assert_eq!(s.bars()[0].date, d(2021, 4, 1));
        assert_eq!(s.bars()[1].adjusted_close, 110.0);
    }

    #[test]
    fn series_rejects_duplicates_and_bad_prices() {
        let dup = PriceSeries::new(
            Ticker::from("A"),
            vec![
                PriceBar {
                    date: d(2021, 1, 4),
                    adjusted_close: 1.0,
                },
                PriceBar {
                    date: d(2021, 1, 4),
                    adjusted_close: 2.0,
                },
            ],
        );
        assert!(matches!(dup, Err(Error::DuplicateBar { .. })));

        let neg = PriceSeries::new(
            Ticker::from("A"),
            vec![PriceBar {
                date: d(2021, 1, 4),
                adjusted_close: -5.0,
            }],
        );
        assert!(matches!(neg, Err(Error::NonPositivePrice { .. })));

        let empty = PriceSeries::new(Ticker::from("A"), vec![]);
        assert!(matches!(empty, Err(Error::EmptySeries(_))));
    }

    #[test]
    fn calendar_is_the_intersection() {
        let m = map(vec![
            series(
                "A",
                &[(d(2021, 1, 4), 1.0), (d(2021, 1, 5), 1.0), (d(2021, 1, 6), 1.0)],
            ),
            series(
                "B",
                &[(d(2021, 1, 5), 1.0), (d(2021, 1, 6), 1.0), (d(2021, 1, 7), 1.0)],
            ),
        ]);
        let cal = build_calendar(&m).unwrap();
        assert_eq!(cal.days(), &[d(2021, 1, 5), d(2021, 1, 6)]);
    }

    #[test]
    fn calendar_identity_for_identical_date_sets() {
        let dates = [(d(2021, 1, 4), 2.0), (d(2021, 1, 5), 3.0)];
        let m = map(vec![series("A", &dates), series("B", &dates)]);
        let cal = build_calendar(&m).unwrap();
        assert_eq!(cal.days(), &[d(2021, 1, 4), d(2021, 1, 5)]);
    }

    #[test]
    fn disjoint_date_sets_error() {
        let m = map(vec![
            series("A", &[(d(2021, 1, 4), 1.0)]),
            series("B", &[(d(2021, 1, 5), 1.0)]),
        ]);
        assert!(matches!(build_calendar(&m), Err(Error::EmptyCalendar)));
    }

    #[test]
    fn slice_truncates_at_as_of() {
        let m = map(vec![series(
            "A",
            &[(d(2021, 1, 4), 1.0), (d(2021, 1, 5), 2.0), (d(2021, 1, 6), 3.0)],
        )]);
        let slice = pit_slice(&m, d(2021, 1, 5));
        let bars = slice.bars(&Ticker::from("A")).unwrap();
        assert_eq!(bars.len(), 2);
        assert_eq!(bars.last().unwrap().date, d(2021, 1, 5));

        let all = pit_slice(&m, d(2021, 1, 6));
        assert_eq!(all.bars(&Ticker::from("A")).unwrap().len(), 3);
    }

    #[test]
    fn future_access_is_an_error_not_silence() {
        let m = map(vec![series(
            "A",
            &[(d(2021, 1, 4), 1.0), (d(2021, 1, 6), 3.0)],
        )]);
        let slice = pit_slice(&m, d(2021, 1, 4));
        let err = slice.bar_on(&Ticker::from("A"), d(2021, 1, 6)).unwrap_err();
        assert!(matches!(err, Error::FutureAccess { .. }));
        let err = slice
            .price_on_or_before(&Ticker::from("A"), d(2021, 1, 6))
            .unwrap_err();
        assert!(matches!(err, Error::FutureAccess { .. }));
    }

    #[test]
    fn total_return_arithmetic() {
        let m = map(vec![series(
            "A",
            &[(d(2021, 1, 4), 100.0), (d(2021, 1, 8), 110.0)],
        )]);
        let slice = pit_slice(&m, d(2021, 1, 8));
        let t = Ticker::from("A");
        let r = total_return(&slice, &t, d(2021, 1, 4), d(2021, 1, 8)).unwrap();
        assert!((r - 0.10).abs() < 1e-12);

        // start == end is exactly zero
        let r = total_return(&slice, &t, d(2021, 1, 8), d(2021, 1, 8)).unwrap();
        assert_eq!(r, 0.0);

        // start before any bar signals insufficient history
        let err = total_return(&slice, &t, d(2020, 12, 1), d(2021, 1, 8)).unwrap_err();
        assert!(err.is_insufficient_history());
    }

    #[test]
    fn sma_examples() {
        let m = map(vec![series(
            "A",
            &[
                (d(2021, 1, 4), 1.0),
                (d(2021, 1, 5), 2.0),
                (d(2021, 1, 6), 3.0),
                (d(2021, 1, 7), 4.0),
            ],
        )]);
        let slice = pit_slice(&m, d(2021, 1, 7));
        let t = Ticker::from("A");
        assert_eq!(sma(&slice, &t, d(2021, 1, 7), 4).unwrap(), 2.5);
        // insufficient bars
        let err = sma(&slice, &t, d(2021, 1, 7), 5).unwrap_err();
        assert!(err.is_insufficient_history());

        let constant = map(vec![series(
            "C",
            &[(d(2021, 1, 4), 7.0), (d(2021, 1, 5), 7.0), (d(2021, 1, 6), 7.0)],
        )]);
        let slice = pit_slice(&constant, d(2021, 1, 6));
        assert_eq!(sma(&slice, &Ticker::from("C"), d(2021, 1, 6), 3).unwrap(), 7.0);
    }

    #[test]
    fn daily_returns_examples() {
        let m = map(vec![series(
            "A",
            &[
                (d(2021, 1, 4), 100.0),
                (d(2021, 1, 5), 110.0),
                (d(2021, 1, 6), 99.0),
            ],
        )]);
        let slice = pit_slice(&m, d(2021, 1, 6));
        let t = Ticker::from("A");
        let rets = daily_returns(&slice, &t, d(2021, 1, 4), d(2021, 1, 6)).unwrap();
        assert_eq!(rets.len(), 2);
        assert!((rets[0].1 - 0.10).abs() < 1e-12);
        assert!((rets[1].1 + 0.10).abs() < 1e-12);

        let one = daily_returns(&slice, &t, d(2021, 1, 4), d(2021, 1, 4));
        assert!(one.unwrap_err().is_insufficient_history());
    }

    #[test]
    fn windowing_keeps_only_the_range() {
        let m = map(vec![series(
            "A",
            &[
                (d(2021, 1, 4), 1.0),
                (d(2021, 1, 5), 2.0),
                (d(2021, 1, 6), 3.0),
            ],
        )]);
        let w = window_series(&m, d(2021, 1, 5), d(2021, 1, 6)).unwrap();
        assert_eq!(w[&Ticker::from("A")].bars().len(), 2);
        assert_eq!(w[&Ticker::from("A")].first_date(), d(2021, 1, 5));
    }
}
