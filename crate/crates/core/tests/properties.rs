//! Property tests for the accounting, point-in-time, and normalization
//! invariants. The invariants named in the verification gate run at
//! 1000 randomized cases.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use lookahead_core::agent::ConstantWeightsAgent;
use lookahead_core::benchmark::{alpha, alpha_decay};
use lookahead_core::engine::{run_backtest, PeriodSpec, PortfolioMode, RebalancePolicy};
use lookahead_core::error::Error;
use lookahead_core::marketdata::{
    build_calendar, daily_returns, pit_slice, sma, total_return, PriceBar, PriceSeries,
    SeriesMap,
};
use lookahead_core::portfolio::{normalize_weights, Portfolio, TargetWeights};
use lookahead_core::strategies::{
    ma_crossover_weights, mean_reversion_weights, momentum_weights, random_noise_weights,
    StrategyConfig,
};
use lookahead_core::types::Ticker;

fn base_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, 4).unwrap()
}

/// Weekday dates starting at the base date.
fn weekdays(n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = base_date();
    while out.len() < n {
        if d.weekday().num_days_from_monday() < 5 {
            out.push(d);
        }
        d = d.succ_opt().unwrap();
    }
    out
}

fn series_from(sym: &str, prices: &[f64]) -> PriceSeries {
    let bars = weekdays(prices.len())
        .into_iter()
        .zip(prices)
        .map(|(date, &px)| PriceBar {
            date,
            adjusted_close: px,
        })
        .collect();
    PriceSeries::new(Ticker::from(sym), bars).unwrap()
}

fn map_from(columns: &[(&str, Vec<f64>)]) -> SeriesMap {
    columns
        .iter()
        .map(|(sym, prices)| {
            let s = series_from(sym, prices);
            (s.ticker().clone(), s)
        })
        .collect()
}

prop_compose! {
    /// A positive price path of the given length range.
    fn price_path(min_len: usize, max_len: usize)
        (len in min_len..=max_len)
        (prices in prop::collection::vec(1.0f64..1000.0, len..=len)) -> Vec<f64> {
        prices
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// No access path through a slice reveals a bar after as-of, and
    /// dated queries beyond as-of raise the future-access error.
    #[test]
    fn pit_enforcement(prices in price_path(5, 60), offset in 0usize..70) {
        let map = map_from(&[("A", prices.clone())]);
        let t = Ticker::from("A");
        let dates = weekdays(prices.len() + 5);
        let as_of = dates[offset.min(dates.len() - 1)];
        let slice = pit_slice(&map, as_of);

        let bars = slice.bars(&t).unwrap();
        prop_assert!(bars.iter().all(|b| b.date <= as_of));

        let future = as_of.succ_opt().unwrap();
        let is_future_err = |r: Result<f64, Error>| {
            matches!(r, Err(Error::FutureAccess { .. }))
        };
        prop_assert!(is_future_err(slice.price_on_or_before(&t, future)));
        prop_assert!(matches!(slice.bar_on(&t, future), Err(_)));
        prop_assert!(is_future_err(sma(&slice, &t, future, 2)));
        prop_assert!(is_future_err(total_return(&slice, &t, as_of, future)));
    }

    /// Zero-cost rebalancing conserves NAV, round-trips the weights, and
    /// keeps the trade cash legs consistent with the cash move.
    #[test]
    fn rebalance_conserves_nav(
        cash in 1000.0f64..1_000_000.0,
        held in prop::collection::vec(0.0f64..500.0, 3),
        raw_weights in prop::collection::vec(0.0f64..1.0, 3),
        prices in prop::collection::vec(1.0f64..900.0, 3),
    ) {
        let tickers: Vec<Ticker> = ["A", "B", "C"].into_iter().map(Ticker::from).collect();
        let price_map: BTreeMap<Ticker, f64> =
            tickers.iter().cloned().zip(prices.iter().copied()).collect();

        let mut portfolio = Portfolio::new(cash);
        let seed_targets = TargetWeights::from_pairs(
            tickers.iter().cloned().zip(held.iter().map(|h| h / 2000.0)),
        ).unwrap();
        portfolio
            .rebalance_to_weights(&seed_targets, &price_map, base_date())
            .unwrap();

        // normalize the random raws into a valid long-only target
        let sum: f64 = raw_weights.iter().sum();
        let scale = if sum > 1.0 { 1.0 / sum } else { 1.0 };
        let targets = TargetWeights::from_pairs(
            tickers.iter().cloned().zip(raw_weights.iter().map(|w| w * scale)),
        ).unwrap();
        targets.validate_long_only().unwrap();

        let cash_before = portfolio.cash;
        let nav_before = portfolio.mark_to_market(&price_map).unwrap();
        let next_day = base_date().succ_opt().unwrap();
        let trades = portfolio
            .rebalance_to_weights(&targets, &price_map, next_day)
            .unwrap();
        let nav_after = portfolio.mark_to_market(&price_map).unwrap();

        prop_assert!((nav_after - nav_before).abs() <= 1e-9 * nav_before.abs());

        // implied weights match the targets
        for ticker in &tickers {
            let implied = portfolio.shares(ticker) * price_map[ticker] / nav_after;
            prop_assert!((implied - targets.get(ticker)).abs() <= 1e-12);
        }

        // trade cash legs sum to the cash move
        let cash_sum: f64 = trades.iter().map(|tr| tr.cash_delta).sum();
        prop_assert!((cash_sum - (portfolio.cash - cash_before)).abs() <= 1e-9);
    }

    /// normalize(normalize(x)) == normalize(x), exactly.
    #[test]
    fn normalize_weights_is_idempotent(
        raws in prop::collection::vec(-2.0f64..3.0, 1..6),
    ) {
        let raw: BTreeMap<Ticker, f64> = raws
            .iter()
            .enumerate()
            .map(|(i, w)| (Ticker::new(format!("T{i}")), *w))
            .collect();
        let once = normalize_weights(raw).unwrap();
        once.validate_long_only().unwrap();
        let again = normalize_weights(once.iter().map(|(t, w)| (t.clone(), w)).collect()).unwrap();
        prop_assert_eq!(once, again);
    }

    /// Non-degenerate noise days have unit gross exposure.
    #[test]
    fn noise_weights_have_unit_gross_exposure(seed in any::<u64>(), n in 1usize..8) {
        let universe: Vec<Ticker> = (0..n).map(|i| Ticker::new(format!("T{i}"))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let w = random_noise_weights(&mut rng, &universe).unwrap();
            let gross = w.gross();
            prop_assert!(
                gross == 0.0 || (gross - 1.0).abs() <= 1e-12,
                "gross exposure {gross}"
            );
        }
    }

    /// alpha(a, b) == -alpha(b, a) and the same for decay, exactly.
    #[test]
    fn alpha_and_decay_antisymmetry(a in -1000.0f64..1000.0, b in -1000.0f64..1000.0) {
        prop_assert_eq!(alpha(a, b), -alpha(b, a));
        prop_assert_eq!(alpha_decay(a, b), -alpha_decay(b, a));
    }

    /// With equal initial allocation and no rebalances, the portfolio
    /// return is the arithmetic mean of the per-ticker returns.
    #[test]
    fn buy_and_hold_equals_mean_of_ticker_returns(
        a in price_path(25, 40),
        scale_b in 0.2f64..5.0,
        scale_c in 0.2f64..5.0,
    ) {
        let len = a.len();
        let b: Vec<f64> = a.iter().rev().map(|p| p * scale_b).collect();
        let c: Vec<f64> = a.iter().map(|p| (p + 10.0) * scale_c).collect();
        let map = map_from(&[("A", a), ("B", b), ("C", c)]);
        let calendar = build_calendar(&map).unwrap();
        let period = PeriodSpec::new("P", calendar.first(), calendar.last()).unwrap();
        let universe: Vec<Ticker> = ["A", "B", "C"].into_iter().map(Ticker::from).collect();
        let mut agent = ConstantWeightsAgent::equal(&universe).unwrap();
        let result = run_backtest(
            &map,
            &calendar,
            &period,
            RebalancePolicy::OnceAtStart,
            &mut agent,
            100_000.0,
            PortfolioMode::Holding,
            "bh",
            None,
        )
        .unwrap();

        let mean_pct = universe
            .iter()
            .map(|t| {
                let bars = map[t].bars();
                (bars[len - 1].adjusted_close / bars[0].adjusted_close - 1.0) * 100.0
            })
            .sum::<f64>()
            / 3.0;
        prop_assert!(
            (result.total_return_pct - mean_pct).abs() <= 1e-9 * mean_pct.abs().max(1.0),
            "engine {} vs mean {}",
            result.total_return_pct,
            mean_pct
        );
    }
}

proptest! {
    /// Compounding all daily returns reproduces the total return over the
    /// same span.
    #[test]
    fn daily_returns_compound_to_total_return(
        prices in price_path(10, 60),
        lo in 0usize..20,
        hi in 25usize..60,
    ) {
        let map = map_from(&[("A", prices.clone())]);
        let t = Ticker::from("A");
        let dates = weekdays(prices.len());
        let start = dates[lo.min(dates.len() - 2)];
        let end = dates[hi.min(dates.len() - 1).max(lo.min(dates.len() - 2) + 1)];
        let slice = pit_slice(&map, end);

        let rets = daily_returns(&slice, &t, start, end).unwrap();
        let compounded: f64 = rets.iter().map(|(_, r)| 1.0 + r).product::<f64>() - 1.0;
        let total = total_return(&slice, &t, start, end).unwrap();
        prop_assert!(
            (compounded - total).abs() <= 1e-12 * total.abs().max(1.0),
            "compounded {compounded} vs total {total}"
        );
    }

    /// The mean computed by `sma` matches a brute-force re-summation in
    /// the opposite order.
    #[test]
    fn sma_matches_brute_force(prices in price_path(10, 60), window in 1usize..20) {
        let map = map_from(&[("A", prices.clone())]);
        let t = Ticker::from("A");
        let dates = weekdays(prices.len());
        let as_of = *dates.last().unwrap();
        let slice = pit_slice(&map, as_of);
        let window = window.min(prices.len());

        let got = sma(&slice, &t, as_of, window).unwrap();
        let mut brute = 0.0;
        for px in prices[prices.len() - window..].iter().rev() {
            brute += px;
        }
        brute /= window as f64;
        prop_assert!((got - brute).abs() <= 1e-12 * brute.abs());
    }

    /// Scaling every price by a power of two changes no selection.
    #[test]
    fn selections_are_scale_invariant(
        paths in prop::collection::vec(price_path(30, 40), 4..=4),
        exp in -8i32..=8,
    ) {
        let len = paths.iter().map(|p| p.len()).min().unwrap();
        let syms = ["A", "B", "C", "D"];
        let cols: Vec<(&str, Vec<f64>)> = syms
            .iter()
            .zip(&paths)
            .map(|(s, p)| (*s, p[..len].to_vec()))
            .collect();
        let scale = 2.0f64.powi(exp);
        let scaled: Vec<(&str, Vec<f64>)> = cols
            .iter()
            .map(|(s, p)| (*s, p.iter().map(|px| px * scale).collect()))
            .collect();

        let map = map_from(&cols);
        let map_scaled = map_from(&scaled);
        let universe: Vec<Ticker> = syms.iter().map(|s| Ticker::from(*s)).collect();
        let cfg = StrategyConfig {
            momentum_lookback_days: 10,
            ma_fast: 5,
            ma_slow: 15,
            ..StrategyConfig::default()
        };
        let as_of = weekdays(len)[len - 1];
        let slice = pit_slice(&map, as_of);
        let slice_scaled = pit_slice(&map_scaled, as_of);

        for f in [momentum_weights, mean_reversion_weights, ma_crossover_weights] {
            let w = f(&slice, &universe, &cfg).unwrap();
            let ws = f(&slice_scaled, &universe, &cfg).unwrap();
            prop_assert_eq!(w, ws);
        }
    }

    /// Over distinct returns the momentum and mean-reversion selections
    /// cover exactly 2k tickers with no overlap.
    #[test]
    fn ranked_selections_cover_without_overlap(
        base in prop::collection::vec(-0.3f64..0.3, 6..=6),
        k in 1usize..=3,
    ) {
        // force distinct returns with a visible gap
        let mut rets: Vec<f64> = base;
        rets.sort_by(f64::total_cmp);
        for i in 1..rets.len() {
            if rets[i] - rets[i - 1] < 1e-3 {
                rets[i] = rets[i - 1] + 1e-3;
            }
        }
        let lookback = 10usize;
        let len = lookback + 1;
        let syms = ["A", "B", "C", "D", "E", "F"];
        let cols: Vec<(&str, Vec<f64>)> = syms
            .iter()
            .zip(&rets)
            .map(|(s, r)| {
                let mut prices = vec![100.0; len];
                for (i, px) in prices.iter_mut().enumerate() {
                    *px = 100.0 * (1.0 + r * i as f64 / lookback as f64);
                }
                (*s, prices)
            })
            .collect();
        let map = map_from(&cols);
        let universe: Vec<Ticker> = syms.iter().map(|s| Ticker::from(*s)).collect();
        let cfg = StrategyConfig {
            momentum_lookback_days: lookback,
            selection_size: Some(k),
            ..StrategyConfig::default()
        };
        let as_of = weekdays(len)[len - 1];
        let slice = pit_slice(&map, as_of);

        let top = momentum_weights(&slice, &universe, &cfg).unwrap();
        let bottom = mean_reversion_weights(&slice, &universe, &cfg).unwrap();
        let top_set: Vec<&Ticker> =
            universe.iter().filter(|t| top.get(t) > 0.0).collect();
        let bottom_set: Vec<&Ticker> =
            universe.iter().filter(|t| bottom.get(t) > 0.0).collect();
        prop_assert_eq!(top_set.len(), k);
        prop_assert_eq!(bottom_set.len(), k);
        prop_assert!(top_set.iter().all(|t| !bottom_set.contains(t)));
    }

    /// Identical seeds give identical weight streams.
    #[test]
    fn noise_streams_are_reproducible(seed in any::<u64>()) {
        let universe: Vec<Ticker> = ["A", "B", "C"].into_iter().map(Ticker::from).collect();
        let mut r1 = ChaCha8Rng::seed_from_u64(seed);
        let mut r2 = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            prop_assert_eq!(
                random_noise_weights(&mut r1, &universe).unwrap(),
                random_noise_weights(&mut r2, &universe).unwrap()
            );
        }
    }
}
