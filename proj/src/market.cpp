#include "peermarket/market.hpp"

#include <cmath>

namespace peermarket {

const char* to_string(EntryMode mode)
{
    return mode == EntryMode::single ? "single" : "multiple";
}

EntryMode entry_mode_from_string(const std::string& s)
{
    if (s == "single")
        return EntryMode::single;
    if (s == "multiple")
        return EntryMode::multiple;
    throw std::invalid_argument("entry mode must be 'single' or 'multiple', got '" + s + "'");
}

double worst_case_loss(const AgentPosition& pos)
{
    // outcome 0 for longs, outcome 1 for shorts
    return std::max(pos.net_paid, pos.net_paid - pos.shares);
}

double total_M(const Ledger& ledger)
{
    double total = 0.0;
    for (const auto& [id, pos] : ledger)
        total += worst_case_loss(pos);
    return total;
}

Market::Market(std::shared_ptr<const CostFunction> cf, FeeSchedule fees, EntryMode mode)
    : cf_(std::move(cf)), fees_(fees), mode_(mode)
{
    if (!cf_)
        throw std::invalid_argument("cost function required");
    if (!(fees_.rate() < 1.0))
        throw std::invalid_argument("fee rate must be below 1");
    bounds_ = price_bound_shares(*cf_, fees_);
}

void Market::register_agent(const std::string& id, double budget)
{
    if (!(budget >= 0.0) || !std::isfinite(budget))
        throw std::invalid_argument("budget must be finite and non-negative");
    if (has_agent(id))
        throw std::invalid_argument("agent '" + id + "' already registered");
    AgentPosition pos;
    pos.budget = budget;
    ledger_.emplace(id, pos);
}

const AgentPosition& Market::position(const std::string& id) const
{
    auto it = ledger_.find(id);
    if (it == ledger_.end())
        throw TradeRejected(TradeRejected::Reason::unknown_agent, "unknown agent '" + id + "'");
    return it->second;
}

TradeReceipt Market::quote(const std::string& id, double delta) const
{
    if (delta == 0.0 || !std::isfinite(delta))
        throw TradeRejected(TradeRejected::Reason::invalid_delta, "trade size must be finite and non-zero");

    const AgentPosition& before = position(id);
    const double f = fees_.rate();
    const double q0 = q_;
    const double q_end = q0 + delta;
    const double n = before.shares;

    // Split at the point where the agent's position crosses zero.
    double liquidated = 0.0;
    if (delta > 0.0 && n < 0.0)
        liquidated = std::min(delta, -n);
    else if (delta < 0.0 && n > 0.0)
        liquidated = std::min(-delta, n);
    const double q_mid = delta > 0.0 ? q0 + liquidated : q0 - liquidated;
    const double opened = std::abs(delta) - liquidated;

    TradeReceipt r;
    r.agent = id;
    r.delta = delta;
    r.q_before = q0;
    r.q_after = q_end;
    r.liquidated_shares = liquidated;
    r.gross_cost = trade_cost(*cf_, q0, q_end);
    r.position = before;

    if (opened > 0.0) {
        if (delta > 0.0) {
            const double paid = trade_cost(*cf_, q_mid, q_end);
            r.fee = f * paid;
            r.position.committed += paid;
            if (q_end > bounds_.q_plus) {
                const double from = std::max(q_mid, bounds_.q_plus);
                const double s = q_end - from;
                r.dominated = true;
                r.out_of_band_max_profit = s - (1.0 + f) * trade_cost(*cf_, from, q_end);
            }
        } else {
            const double proceeds = trade_cost(*cf_, q_end, q_mid);
            const double exposure = opened - proceeds;
            r.fee = f * exposure;
            r.position.committed += exposure;
            if (q_end < bounds_.q_minus) {
                const double from = std::min(q_mid, bounds_.q_minus);
                const double s = from - q_end;
                const double rev = trade_cost(*cf_, q_end, from);
                r.dominated = true;
                r.out_of_band_max_profit = rev - f * (s - rev);
            }
        }
    }

    r.position.shares += delta;
    r.position.net_paid += r.gross_cost;
    r.position.fees_paid += r.fee;
    r.position.trades += 1;
    return r;
}

bool Market::within_budget(const TradeReceipt& r) const
{
    const AgentPosition& p = r.position;
    return p.spend() <= p.budget + kMoneyTol
        && worst_case_loss(p) + p.fees_paid <= p.budget + kMoneyTol;
}

TradeReceipt Market::execute_trade(const std::string& id, double delta)
{
    const AgentPosition& before = position(id);
    if (mode_ == EntryMode::single && before.trades > 0)
        throw TradeRejected(TradeRejected::Reason::single_entry_repeat,
                            "agent '" + id + "' already traded in a single-entry market");

    TradeReceipt r = quote(id, delta);
    if (!within_budget(r))
        throw TradeRejected(TradeRejected::Reason::budget_exceeded,
                            "trade would exceed budget of agent '" + id + "'");

    q_ = r.q_after;
    collected_fees_ += r.fee;
    ledger_[id] = r.position;
    return r;
}

Market open_market(double b, double f, EntryMode mode)
{
    return Market(std::make_shared<Lmsr>(b), FeeSchedule(f), mode);
}

double fee_revenue(const Market& market)
{
    return market.fee_revenue();
}

nlohmann::json ledger_snapshot(const Market& market)
{
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& [id, pos] : market.ledger()) {
        agents.push_back({{"id", id},
                          {"n", pos.shares},
                          {"c", pos.net_paid},
                          {"B", pos.budget},
                          {"fees", pos.fees_paid}});
    }
    return {{"b", market.cost_function().liquidity()},
            {"f", market.fees().rate()},
            {"q", market.outstanding()},
            {"agents", agents},
            {"collected_fees", market.fee_revenue()}};
}

}  // namespace peermarket
