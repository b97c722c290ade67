#!/usr/bin/env python3
"""Regenerate the synthetic engine fixtures.

Builds a 3-ticker, 70-trading-day dataset with exactly representable
prices, then computes reference NAV paths for three runs with an
independent implementation of the accounting rules:

  * buy_hold        -- equal allocation at the first day, never traded again
  * equal_weight    -- rebalanced to 1/3 each on the first trading day of
                       each calendar month
  * scripted_agent  -- a fixed monthly weight schedule, including a
                       partially-invested month and an all-cash month

Output files (committed):
  crates/core/tests/fixtures/synthetic_prices.csv
  crates/core/tests/fixtures/synthetic_nav.json

The NAV values are written with full float precision; the engine must
match them to 1e-9 relative.
"""

import json
import os
from datetime import date, timedelta

TICKERS = ["AAA", "BBB", "CCC"]
INITIAL_CAPITAL = 100000.0
OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "fixtures")


def trading_days():
    """70 weekdays starting Monday 2020-01-06."""
    days = []
    d = date(2020, 1, 6)
    while len(days) < 70:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def price(ticker, t):
    # Dyadic steps keep every price exactly representable in binary.
    if ticker == "AAA":
        return 100.0 + 0.5 * t
    if ticker == "BBB":
        return 150.0 - 0.25 * t
    return 90.0 + 0.25 * t + 3.0 * (t % 2)


def monthly_firsts(days):
    seen = set()
    out = []
    for d in days:
        key = (d.year, d.month)
        if key not in seen:
            seen.add(key)
            out.append(d)
    return out


def run(days, schedule, weights_for):
    """Holding-mode backtest: execute at the decision day's close, zero costs."""
    cash = INITIAL_CAPITAL
    shares = {t: 0.0 for t in TICKERS}
    sched = set(schedule)
    navs = []
    for i, d in enumerate(days):
        px = {t: price(t, i) for t in TICKERS}
        nav = cash + sum(shares[t] * px[t] for t in TICKERS)
        if d in sched:
            w = weights_for(d)
            for t in TICKERS:
                target = w.get(t, 0.0) * nav / px[t]
                if abs(target - shares[t]) > 1e-12 * max(1.0, abs(shares[t])):
                    shares[t] = target
            cash = nav - sum(shares[t] * px[t] for t in TICKERS)
            nav = cash + sum(shares[t] * px[t] for t in TICKERS)
        navs.append(nav)
    return navs


def main():
    days = trading_days()
    firsts = monthly_firsts(days)

    os.makedirs(OUT_DIR, exist_ok=True)
    csv_path = os.path.join(OUT_DIR, "synthetic_prices.csv")
    with open(csv_path, "w", newline="") as f:
        f.write("ticker,date,adjusted_close\n")
        for t in TICKERS:
            for i, d in enumerate(days):
                f.write(f"{t},{d.isoformat()},{price(t, i)!r}\n")

    equal = {t: 1.0 / 3.0 for t in TICKERS}
    agent_schedule = {
        firsts[0]: {"AAA": 1.0},
        firsts[1]: {"BBB": 0.5, "CCC": 0.5},
        firsts[2]: {"AAA": 0.25, "BBB": 0.25, "CCC": 0.25},
        firsts[3]: {},
    }

    fixtures = {
        "initial_capital": INITIAL_CAPITAL,
        "dates": [d.isoformat() for d in days],
        "rebalance_dates": [d.isoformat() for d in firsts],
        "agent_schedule": {d.isoformat(): w for d, w in agent_schedule.items()},
        "nav": {
            "buy_hold": run(days, [days[0]], lambda d: equal),
            "equal_weight": run(days, firsts, lambda d: equal),
            "scripted_agent": run(days, firsts, lambda d: agent_schedule[d]),
        },
    }
    json_path = os.path.join(OUT_DIR, "synthetic_nav.json")
    with open(json_path, "w") as f:
        json.dump(fixtures, f, indent=1)
        f.write("\n")

    for name, navs in fixtures["nav"].items():
        ret = (navs[-1] / navs[0] - 1.0) * 100.0
        print(f"{name:15s} final NAV {navs[-1]:.6f}  total return {ret:+.4f}%")


if __name__ == "__main__":
    main()
