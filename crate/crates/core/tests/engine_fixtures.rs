//! Engine runs against the committed synthetic fixtures: a 3-ticker,
//! 70-trading-day dataset with independently computed NAV paths for a
//! buy-and-hold run, a monthly equal-weight run, and a scripted agent
//! replaying a fixed weight schedule. The engine must match the fixture
//! NAV path day by day to 1e-9 relative.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Deserialize;

use lookahead_core::agent::{ConstantWeightsAgent, DecisionAgent, ScheduleAgent};
use lookahead_core::engine::{run_backtest, PeriodSpec, PortfolioMode, RebalancePolicy};
use lookahead_core::marketdata::{build_calendar, PriceBar, PriceSeries, SeriesMap};
use lookahead_core::portfolio::TargetWeights;
use lookahead_core::types::Ticker;

const PRICES_CSV: &str = include_str!("fixtures/synthetic_prices.csv");
const NAV_JSON: &str = include_str!("fixtures/synthetic_nav.json");

#[derive(Deserialize)]
struct Fixtures {
    initial_capital: f64,
    dates: Vec<NaiveDate>,
    rebalance_dates: Vec<NaiveDate>,
    agent_schedule: BTreeMap<NaiveDate, BTreeMap<String, f64>>,
    nav: BTreeMap<String, Vec<f64>>,
}

fn load_fixtures() -> Fixtures {
    serde_json::from_str(NAV_JSON).expect("fixture JSON parses")
}

/// Minimal strict parse of the fixture dataset. The production CSV
/// loader lives in the companion crate; this keeps the engine oracle
/// check independent of it.
fn load_prices() -> SeriesMap {
    let mut columns: BTreeMap<Ticker, Vec<PriceBar>> = BTreeMap::new();
    let mut lines = PRICES_CSV.lines();
    assert_eq!(lines.next(), Some("ticker,date,adjusted_close"));
    for line in lines {
        let mut fields = line.split(',');
        let ticker = Ticker::from(fields.next().unwrap());
        let date: NaiveDate = fields.next().unwrap().parse().unwrap();
        let adjusted_close: f64 = fields.next().unwrap().parse().unwrap();
        assert!(fields.next().is_none());
        columns.entry(ticker).or_default().push(PriceBar {
            date,
            adjusted_close,
        });
    }
    columns
        .into_iter()
        .map(|(t, bars)| (t.clone(), PriceSeries::new(t, bars).unwrap()))
        .collect()
}

fn assert_nav_paths_match(
    label: &str,
    got: &[(NaiveDate, f64)],
    fixture_dates: &[NaiveDate],
    expected: &[f64],
) {
    assert_eq!(got.len(), expected.len(), "{label}: NAV path length");
    for (i, ((date, nav), want)) in got.iter().zip(expected).enumerate() {
        assert_eq!(*date, fixture_dates[i], "{label}: date at index {i}");
        assert!(
            (nav - want).abs() <= 1e-9 * want.abs(),
            "{label}: NAV mismatch at {date}: got {nav}, expected {want}"
        );
    }
}

fn run(
    map: &SeriesMap,
    agent: &mut dyn DecisionAgent,
    policy: RebalancePolicy,
    capital: f64,
    label: &str,
) -> Vec<(NaiveDate, f64)> {
    let calendar = build_calendar(map).unwrap();
    let period = PeriodSpec::new("P", calendar.first(), calendar.last()).unwrap();
    run_backtest(
        map,
        &calendar,
        &period,
        policy,
        agent,
        capital,
        PortfolioMode::Holding,
        label,
        None,
    )
    .unwrap()
    .nav_history
}

#[test]
fn dataset_shape_matches_fixtures() {
    let fixtures = load_fixtures();
    let map = load_prices();
    assert_eq!(map.len(), 3);
    assert_eq!(fixtures.dates.len(), 70);
    let calendar = build_calendar(&map).unwrap();
    assert_eq!(calendar.days(), fixtures.dates.as_slice());
}

#[test]
fn buy_and_hold_matches_fixture_nav_path() {
    let fixtures = load_fixtures();
    let map = load_prices();
    let universe: Vec<Ticker> = map.keys().cloned().collect();
    let mut agent = ConstantWeightsAgent::equal(&universe).unwrap();
    let nav = run(
        &map,
        &mut agent,
        RebalancePolicy::OnceAtStart,
        fixtures.initial_capital,
        "buy_hold",
    );
    assert_nav_paths_match("buy_hold", &nav, &fixtures.dates, &fixtures.nav["buy_hold"]);
}

#[test]
fn equal_weight_monthly_matches_fixture_nav_path() {
    let fixtures = load_fixtures();
    let map = load_prices();
    let universe: Vec<Ticker> = map.keys().cloned().collect();
    let mut agent = ConstantWeightsAgent::equal(&universe).unwrap();
    let nav = run(
        &map,
        &mut agent,
        RebalancePolicy::Monthly,
        fixtures.initial_capital,
        "equal_weight",
    );
    assert_nav_paths_match(
        "equal_weight",
        &nav,
        &fixtures.dates,
        &fixtures.nav["equal_weight"],
    );
}

#[test]
fn scripted_agent_matches_fixture_nav_path() {
    let fixtures = load_fixtures();
    let map = load_prices();
    let schedule: BTreeMap<NaiveDate, TargetWeights> = fixtures
        .agent_schedule
        .iter()
        .map(|(date, weights)| {
            let w = TargetWeights::from_pairs(
                weights.iter().map(|(sym, w)| (Ticker::from(sym.as_str()), *w)),
            )
            .unwrap();
            (*date, w)
        })
        .collect();
    // the schedule covers exactly the monthly rebalance dates
    assert_eq!(
        schedule.keys().copied().collect::<Vec<_>>(),
        fixtures.rebalance_dates
    );
    let mut agent = ScheduleAgent::new(schedule);
    let nav = run(
        &map,
        &mut agent,
        RebalancePolicy::Monthly,
        fixtures.initial_capital,
        "scripted_agent",
    );
    assert_nav_paths_match(
        "scripted_agent",
        &nav,
        &fixtures.dates,
        &fixtures.nav["scripted_agent"],
    );
}

#[test]
fn reported_return_matches_nav_endpoints() {
    let fixtures = load_fixtures();
    let map = load_prices();
    let universe: Vec<Ticker> = map.keys().cloned().collect();
    let calendar = build_calendar(&map).unwrap();
    let period = PeriodSpec::new("P", calendar.first(), calendar.last()).unwrap();
    let mut agent = ConstantWeightsAgent::equal(&universe).unwrap();
    let result = run_backtest(
        &map,
        &calendar,
        &period,
        RebalancePolicy::Monthly,
        &mut agent,
        fixtures.initial_capital,
        PortfolioMode::Holding,
        "equal_weight",
        None,
    )
    .unwrap();
    let recomputed = (result.final_nav() / result.first_nav() - 1.0) * 100.0;
    assert!((result.total_return_pct - recomputed).abs() <= 1e-9);
}
