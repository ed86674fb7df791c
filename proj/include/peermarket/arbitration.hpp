#pragma once

#include "peermarket/market.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace peermarket {

using Rng = std::mt19937_64;

// Latent-state signal model: X ~ Bernoulli(p_event), each arbiter's signal is
// Bernoulli(p_signal_given_event) when X = 1 and Bernoulli(p_signal_given_no_event)
// when X = 0, independently given X.
struct GenerativeModel {
    double p_event = 0.5;
    double p_signal_given_event = 1.0;
    double p_signal_given_no_event = 0.0;

    void validate() const;

    // Exchangeable two-point latent model whose pairwise posteriors are exactly
    // (mu0, mu1). Its prior is forced to mu0 / (1 - mu1 + mu0); the perfectly
    // informative case (0, 1) uses prior 1/2. Rejects mu1 <= mu0 and models
    // whose implied prior is 0 or 1.
    static GenerativeModel fit_posteriors(double mu0, double mu1);
};

// Common beliefs of an arbiter about a randomly chosen peer's signal.
struct BeliefModel {
    double mu = 0.5;   // prior probability of a positive signal
    double mu1 = 1.0;  // P(peer positive | own positive)
    double mu0 = 0.0;  // P(peer positive | own negative)

    double delta() const { return mu1 - mu0; }
    double midpoint() const { return 0.5 * (mu0 + mu1); }

    // Checks 0 <= mu0 <= mu <= mu1 <= 1 and mu1 > mu0.
    void validate() const;
};

// Bayes over the latent state with conditionally independent signals. Rejects
// models without stochastic relevance.
BeliefModel derive_posteriors(const GenerativeModel& gen);

struct PosteriorPair {
    double mu0;
    double mu1;
};

// Worst-case reduction for heterogeneous arbiters: mu1 = min, mu0 = max.
BeliefModel aggregate_beliefs(std::span<const PosteriorPair> per_arbiter, double mu);

// peer[i] != i, uniform over the other m - 1 arbiters; pairs need not be mutual.
std::vector<int> assign_peers(int m, Rng& rng);

// 1/prior payment with reference value `c` in place of the prior: k c when
// both report 0, k (1 - c) when both report 1, 0 on disagreement.
double peer_payment(int report_i, int report_j, double k, double c);

struct Outcome {
    int ones = 0;
    int m = 0;

    double value() const { return static_cast<double>(ones) / m; }
};

// Fraction of reports equal to 1.
Outcome resolve_outcome(std::span<const int> reports);

// Draws the latent state and every arbiter's signal.
std::vector<int> draw_signals(const GenerativeModel& gen, int m, Rng& rng);

// Draws signals with arbiter `fixed` conditioned on having signal `value`.
std::vector<int> draw_signals_given(const GenerativeModel& gen, int m, int fixed, int value, Rng& rng);

struct ArbitrationRound {
    int m = 0;
    double k = 0.0;
    double c = 0.5;  // payment reference; the midpoint (mu0 + mu1) / 2
    std::vector<int> signals;
    std::vector<int> reports;
    std::vector<int> peers;

    // Payment to arbiter i given its peer's report.
    double payment(int i) const;
    void validate() const;
};

// Round paying relative to the belief midpoint. Reports must be submitted as
// one vector; no arbiter observes another's report.
ArbitrationRound make_round(const BeliefModel& beliefs, double k, std::vector<int> signals,
                            std::vector<int> reports, std::vector<int> peers);

// {m, k, c, signals, reports, peers, outcome}
nlohmann::json round_to_json(const ArbitrationRound& round);

struct SettlementReport {
    double outcome = 0.0;
    std::map<std::string, double> market_payouts;  // n_i * outcome
    std::vector<double> arbiter_payments;
    double total_market_payout = 0.0;
    double total_arbiter_payments = 0.0;
    double collected_fees = 0.0;
    double maker_trading_net = 0.0;  // sum c_i - outcome * q
    double fee_pool_balance = 0.0;   // fees - arbiter payments (before subsidy)
    double deficit = 0.0;            // outside subsidy needed to pay arbiters
    bool fees_cover_payments = true;
};

SettlementReport settle(const Market& market, const Outcome& outcome, const ArbitrationRound& round);

nlohmann::json settlement_to_json(const SettlementReport& report);

}  // namespace peermarket
