#pragma once

#include "peermarket/arbitration.hpp"
#include "peermarket/market.hpp"

#include <stdexcept>

namespace peermarket {

// An arbiter's situation when choosing a report, with all other arbiters
// assumed truthful.
struct IncentiveQuery {
    double shares = 0.0;  // n_i held in the market
    int m = 2;
    double k = 0.0;
    BeliefModel beliefs;
    int signal = 0;       // own signal x_i

    void validate() const;
};

// Expected market payout plus peer payment for `report`, paying relative to the
// belief midpoint.
//
// With mu_x the posterior that a peer is positive given own signal x, and c the
// payment reference:
//   market term   n (mu_x (m - 1) + report) / m
//   peer term     report == 1 ? mu_x k (1 - c) : (1 - mu_x) k c
// For x = 0 this is the truthful / misreport pair of the single-arbiter
// analysis; x = 1 is its signal mirror.
double expected_payoff(const IncentiveQuery& query, int report);

// Same payoff with an arbitrary payment reference `c` (the unmodified 1/prior
// rule uses c = mu).
double expected_payoff_with_reference(const IncentiveQuery& query, int report, double c);

// misreport payoff minus truthful payoff; positive means lying pays.
double deviation_gain(const IncentiveQuery& query);
double deviation_gain_with_reference(const IncentiveQuery& query, double c);

// Smallest k making truthful reporting a best response: 2 |n| / (m delta).
double min_k(double shares, int m, double delta);

struct CalibrationProblem {
    double delta = 1.0;
    double budget = 0.0;      // B, per-agent worst-case-loss cap
    double total_loss = 0.0;  // M, aggregate worst-case loss of all traders
    double liquidity = 0.0;   // b, single entry only
    EntryMode mode = EntryMode::multiple;

    // 0 < delta <= 1, 0 <= B <= M, b > 0 for single entry.
    void validate() const;
    // Same without relating B to M; enough to evaluate the payment bounds on
    // a realized market where one agent may outweigh the total.
    void validate_bounds() const;
};

// Largest position magnitude any budget-B agent can hold: max(|phi-|, phi+)
// for single entry, B (1 + f) / f for multiple entry.
double max_position(const CalibrationProblem& problem, double f);

// k large enough for every arbiter with budget B: 2 max_position / (m delta).
double min_k_budget(const CalibrationProblem& problem, double f, int m);

double total_payment_bound(int m, double k);

// Total arbiter payment that guarantees truthfulness: 2 max_position / delta.
double required_payment(const CalibrationProblem& problem, double f);

struct SubsidyVerdict {
    bool holds = false;
    double revenue = 0.0;   // f M
    double required = 0.0;  // required_payment
    double deficit = 0.0;   // max(0, required - revenue)
};

SubsidyVerdict subsidy_condition(const CalibrationProblem& problem, double f);

class InfeasibleCalibration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kFeeLowerBracket = 1e-9;
inline constexpr double kFeeUpperBracket = 1.0 - 1e-9;

// Positive root of M delta f^2 - 2 B f - 2 B = 0. Multiple entry only.
double calibrate_min_fee_closed_form(const CalibrationProblem& problem);

// Bisection on f M - required_payment(f) over [1e-9, 1 - 1e-9]. Works for
// both entry modes. Returns the upper end of the final bracket so the subsidy
// condition holds at the result.
double calibrate_min_fee_bisection(const CalibrationProblem& problem);

// Smallest fee in (0, 1) that subsidizes truthful arbitration: closed form for
// multiple entry, bisection for single entry. Returns 0 for B = 0. Throws
// InfeasibleCalibration when no fee below 1 suffices.
double calibrate_min_fee(const CalibrationProblem& problem);

}  // namespace peermarket
