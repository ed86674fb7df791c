"""LMSR prediction market whose outcome is set by peer-prediction arbiters."""

import json as _json

from ._peermarket import (  # noqa: F401
    InfeasibleCalibration,
    Market,
    ScenarioError,
    TradeRejected,
    calibrate_min_fee,
    cost,
    derive_posteriors,
    expected_payoff,
    fit_posteriors,
    min_k,
    peer_payment,
    phi_infinite,
    phi_minus,
    phi_plus,
    price,
    price_bounds,
    subsidy_condition,
    trade_cost,
)
from . import _peermarket


def _dump(doc):
    return doc if isinstance(doc, str) else _json.dumps(doc)


def simulate(scenario):
    """Run a scenario (dict or JSON text) and return the report as a dict."""
    return _json.loads(_peermarket._simulate(_dump(scenario)))


def probe(scenario):
    """Deviation-gain rows, analytic and Monte Carlo, for every arbiter."""
    return _json.loads(_peermarket._probe(_dump(scenario)))


def sweep_csv(grid):
    """Minimum-fee curves over a grid, as CSV text."""
    return _peermarket._sweep_csv(_dump(grid))


def ledger(market):
    return _json.loads(market._ledger_json())
