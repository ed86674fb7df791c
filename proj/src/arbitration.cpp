#include "peermarket/arbitration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peermarket {

namespace {

bool is_probability(double p)
{
    return p >= 0.0 && p <= 1.0;
}

void require_binary(std::span<const int> xs, const char* what)
{
    for (int x : xs)
        if (x != 0 && x != 1)
            throw std::invalid_argument(std::string(what) + " must be 0 or 1");
}

}  // namespace

void GenerativeModel::validate() const
{
    if (!is_probability(p_event) || !is_probability(p_signal_given_event)
        || !is_probability(p_signal_given_no_event))
        throw std::invalid_argument("generative model probabilities must lie in [0, 1]");
}

GenerativeModel GenerativeModel::fit_posteriors(double mu0, double mu1)
{
    if (!is_probability(mu0) || !is_probability(mu1))
        throw std::invalid_argument("posteriors must lie in [0, 1]");
    if (!(mu1 > mu0))
        throw std::invalid_argument("posteriors must satisfy mu1 > mu0");

    double mu = 0.5;
    if (!(mu0 == 0.0 && mu1 == 1.0)) {
        mu = mu0 / (1.0 - mu1 + mu0);
        if (!(mu > 0.0 && mu < 1.0))
            throw std::invalid_argument("posteriors imply a degenerate prior");
    }
    // Latent success rate takes s1 with probability mu and s0 otherwise, with
    // mean mu and variance mu (mu1 - mu).
    const double spread = mu1 - mu;
    GenerativeModel gen;
    gen.p_event = mu;
    gen.p_signal_given_event = std::min(1.0, mu + std::sqrt(spread * (1.0 - mu)));
    gen.p_signal_given_no_event = std::max(0.0, mu - mu * std::sqrt(spread / (1.0 - mu)));
    return gen;
}

void BeliefModel::validate() const
{
    if (!is_probability(mu) || !is_probability(mu0) || !is_probability(mu1))
        throw std::invalid_argument("beliefs must lie in [0, 1]");
    if (!(mu0 <= mu && mu <= mu1))
        throw std::invalid_argument("beliefs must satisfy mu0 <= mu <= mu1");
    if (!(mu1 > mu0))
        throw std::invalid_argument("beliefs violate stochastic relevance (mu1 <= mu0)");
}

BeliefModel derive_posteriors(const GenerativeModel& gen)
{
    gen.validate();
    const double pi = gen.p_event;
    const double s1 = gen.p_signal_given_event;
    const double s0 = gen.p_signal_given_no_event;

    const double mu = pi * s1 + (1.0 - pi) * s0;
    if (!(mu > 0.0 && mu < 1.0))
        throw std::invalid_argument("signal is constant; posteriors undefined");

    const double both_one = pi * s1 * s1 + (1.0 - pi) * s0 * s0;
    const double zero_then_one = pi * (1.0 - s1) * s1 + (1.0 - pi) * (1.0 - s0) * s0;

    BeliefModel out;
    out.mu = mu;
    out.mu1 = both_one / mu;
    out.mu0 = zero_then_one / (1.0 - mu);
    if (!(out.delta() > 0.0))
        throw std::invalid_argument("signals are not stochastically relevant (delta <= 0)");
    // Rounding can put mu a hair outside [mu0, mu1] for nearly degenerate models.
    out.mu = std::clamp(out.mu, out.mu0, out.mu1);
    return out;
}

BeliefModel aggregate_beliefs(std::span<const PosteriorPair> per_arbiter, double mu)
{
    if (per_arbiter.empty())
        throw std::invalid_argument("at least one arbiter belief required");
    BeliefModel out;
    out.mu = mu;
    out.mu1 = per_arbiter.front().mu1;
    out.mu0 = per_arbiter.front().mu0;
    for (const auto& p : per_arbiter) {
        out.mu1 = std::min(out.mu1, p.mu1);
        out.mu0 = std::max(out.mu0, p.mu0);
    }
    out.validate();
    return out;
}

std::vector<int> assign_peers(int m, Rng& rng)
{
    if (m < 2)
        throw std::invalid_argument("peer assignment needs at least two arbiters");
    std::uniform_int_distribution<int> pick(0, m - 2);
    std::vector<int> peers(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const int u = pick(rng);
        peers[static_cast<std::size_t>(i)] = u < i ? u : u + 1;
    }
    return peers;
}

double peer_payment(int report_i, int report_j, double k, double c)
{
    if (report_i != report_j)
        return 0.0;
    return report_i == 0 ? k * c : k * (1.0 - c);
}

Outcome resolve_outcome(std::span<const int> reports)
{
    if (reports.empty())
        throw std::invalid_argument("no reports to resolve");
    require_binary(reports, "reports");
    Outcome out;
    out.m = static_cast<int>(reports.size());
    out.ones = static_cast<int>(std::count(reports.begin(), reports.end(), 1));
    return out;
}

std::vector<int> draw_signals(const GenerativeModel& gen, int m, Rng& rng)
{
    std::bernoulli_distribution event(gen.p_event);
    const bool x = event(rng);
    std::bernoulli_distribution signal(x ? gen.p_signal_given_event : gen.p_signal_given_no_event);
    std::vector<int> out(static_cast<std::size_t>(m));
    for (auto& s : out)
        s = signal(rng) ? 1 : 0;
    return out;
}

std::vector<int> draw_signals_given(const GenerativeModel& gen, int m, int fixed, int value, Rng& rng)
{
    if (fixed < 0 || fixed >= m)
        throw std::invalid_argument("conditioned arbiter out of range");
    const double s1 = gen.p_signal_given_event;
    const double s0 = gen.p_signal_given_no_event;
    const double like1 = value == 1 ? s1 : 1.0 - s1;
    const double like0 = value == 1 ? s0 : 1.0 - s0;
    const double joint1 = gen.p_event * like1;
    const double norm = joint1 + (1.0 - gen.p_event) * like0;
    if (!(norm > 0.0))
        throw std::invalid_argument("conditioning on a zero-probability signal");

    std::bernoulli_distribution event(joint1 / norm);
    const bool x = event(rng);
    std::bernoulli_distribution signal(x ? s1 : s0);
    std::vector<int> out(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        out[static_cast<std::size_t>(i)] = i == fixed ? value : (signal(rng) ? 1 : 0);
    return out;
}

double ArbitrationRound::payment(int i) const
{
    const auto idx = static_cast<std::size_t>(i);
    const auto peer = static_cast<std::size_t>(peers.at(idx));
    return peer_payment(reports.at(idx), reports.at(peer), k, c);
}

void ArbitrationRound::validate() const
{
    if (m < 2)
        throw std::invalid_argument("a round needs at least two arbiters");
    const auto sz = static_cast<std::size_t>(m);
    if (reports.size() != sz || peers.size() != sz || (!signals.empty() && signals.size() != sz))
        throw std::invalid_argument("round vectors must have one entry per arbiter");
    require_binary(reports, "reports");
    require_binary(signals, "signals");
    for (int i = 0; i < m; ++i) {
        const int p = peers[static_cast<std::size_t>(i)];
        if (p < 0 || p >= m || p == i)
            throw std::invalid_argument("peer assignment must map each arbiter to another arbiter");
    }
    if (!(k >= 0.0) || !std::isfinite(k))
        throw std::invalid_argument("payment scale k must be finite and non-negative");
    if (!(c > 0.0 && c < 1.0))
        throw std::invalid_argument("payment reference must lie in (0, 1)");
}

ArbitrationRound make_round(const BeliefModel& beliefs, double k, std::vector<int> signals,
                            std::vector<int> reports, std::vector<int> peers)
{
    beliefs.validate();
    ArbitrationRound round;
    round.m = static_cast<int>(reports.size());
    round.k = k;
    round.c = beliefs.midpoint();
    round.signals = std::move(signals);
    round.reports = std::move(reports);
    round.peers = std::move(peers);
    round.validate();
    return round;
}

nlohmann::json round_to_json(const ArbitrationRound& round)
{
    return {{"m", round.m},
            {"k", round.k},
            {"c", round.c},
            {"signals", round.signals},
            {"reports", round.reports},
            {"peers", round.peers},
            {"outcome", resolve_outcome(round.reports).value()}};
}

SettlementReport settle(const Market& market, const Outcome& outcome, const ArbitrationRound& round)
{
    round.validate();
    if (outcome.m != round.m)
        throw std::invalid_argument("outcome and round disagree on arbiter count");

    SettlementReport rep;
    rep.outcome = outcome.value();
    double sum_paid = 0.0;
    for (const auto& [id, pos] : market.ledger()) {
        const double payout = pos.shares * rep.outcome;
        rep.market_payouts[id] = payout;
        rep.total_market_payout += payout;
        sum_paid += pos.net_paid;
    }
    rep.arbiter_payments.reserve(static_cast<std::size_t>(round.m));
    for (int i = 0; i < round.m; ++i) {
        const double pay = round.payment(i);
        rep.arbiter_payments.push_back(pay);
        rep.total_arbiter_payments += pay;
    }
    rep.collected_fees = market.fee_revenue();
    rep.maker_trading_net = sum_paid - rep.outcome * market.outstanding();
    rep.fee_pool_balance = rep.collected_fees - rep.total_arbiter_payments;
    rep.deficit = std::max(0.0, -rep.fee_pool_balance);
    rep.fees_cover_payments = rep.deficit == 0.0;
    return rep;
}

nlohmann::json settlement_to_json(const SettlementReport& report)
{
    return {{"outcome", report.outcome},
            {"market_payouts", report.market_payouts},
            {"arbiter_payments", report.arbiter_payments},
            {"total_market_payout", report.total_market_payout},
            {"total_arbiter_payments", report.total_arbiter_payments},
            {"collected_fees", report.collected_fees},
            {"maker_trading_net", report.maker_trading_net},
            {"fee_pool_balance", report.fee_pool_balance},
            {"deficit", report.deficit},
            {"fees_cover_payments", report.fees_cover_payments}};
}

}  // namespace peermarket
