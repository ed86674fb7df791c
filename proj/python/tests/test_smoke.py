import csv
import io
import json
import math
from pathlib import Path

import pytest

import peermarket as pm

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"


def test_cost_and_bounds():
    assert pm.cost(100, 0) == pytest.approx(100 * math.log(2))
    assert pm.price(100, 0) == 0.5
    qm, qp = pm.price_bounds(100, 0.05)
    assert qm == pytest.approx(100 * math.log(0.05))
    assert qp == pytest.approx(-qm)
    assert pm.phi_plus(100, 0.05, 50) == pytest.approx(268.26, rel=1e-5)
    assert pm.phi_infinite(0.05, 50) == pytest.approx(1050)


def test_market_round_trip():
    mk = pm.Market(100, 0.05, "multiple")
    mk.register_agent("a", 100)
    buy = mk.trade("a", 30)
    assert buy["fee"] == pytest.approx(0.05 * buy["gross_cost"])
    sell = mk.trade("a", -30)
    assert sell["fee"] == 0.0
    with pytest.raises(pm.TradeRejected):
        mk.trade("a", 1e5)
    snap = pm.ledger(mk)
    assert set(snap) == {"b", "f", "q", "agents", "collected_fees"}
    assert set(snap["agents"][0]) == {"id", "n", "c", "B", "fees"}


def test_payoffs_and_calibration():
    assert pm.expected_payoff(100, 10, 25, 0.1, 0.9, 0, 0) == pytest.approx(20.25)
    assert pm.expected_payoff(100, 10, 25, 0.1, 0.9, 0, 1) == pytest.approx(20.25)
    assert pm.min_k(100, 10, 0.8) == pytest.approx(25)
    assert pm.calibrate_min_fee(1.0, 1000, 1e6) == pytest.approx(0.04573, abs=1e-4)
    assert pm.calibrate_min_fee(0.3, 5000, 1e6, "single", 1000) == pytest.approx(0.0532, abs=1e-3)
    with pytest.raises(pm.InfeasibleCalibration):
        pm.calibrate_min_fee(0.1, 5e5, 1e6)
    assert not pm.subsidy_condition(1.0, 1000, 1e6, 0.01)["holds"]


def test_posteriors():
    mu, mu1, mu0 = pm.derive_posteriors(*pm.fit_posteriors(0.1, 0.9))
    assert (mu0, mu1) == pytest.approx((0.1, 0.9))
    assert mu == pytest.approx(0.5)


def test_simulate_and_probe():
    scenario = json.loads((SCENARIOS / "funded.json").read_text())
    a = pm.simulate(scenario)
    assert a == pm.simulate(json.dumps(scenario))
    assert a["fees_cover_payments"]
    assert abs(a["flow_balance"]) < 1e-9
    assert set(a["round"]) >= {"m", "k", "c", "signals", "reports", "peers", "outcome"}

    rows = pm.probe(SCENARIOS.joinpath("mixed_arbiters.json").read_text())
    assert all(r["truthful_best_response"] for r in rows)
    with pytest.raises(pm.ScenarioError):
        pm.simulate({**scenario, "arbiters": 1})


def test_sweep_csv():
    text = pm.sweep_csv({"M": 1e6, "delta": [1.0], "entry_mode": "multiple", "B_over_M": [0.001, 0.5]})
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["delta", "b", "entry_mode", "B_over_M", "min_fee", "reason"]
    assert float(rows[0]["min_fee"]) == pytest.approx(0.0457, abs=1e-4)
    assert math.isnan(float(rows[1]["min_fee"])) and rows[1]["reason"]
