#pragma once

#include "peermarket/msr.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace peermarket {

enum class EntryMode { single, multiple };

const char* to_string(EntryMode mode);
EntryMode entry_mode_from_string(const std::string& s);

struct AgentPosition {
    double shares = 0.0;     // n_i, signed
    double net_paid = 0.0;   // c_i, gross cost paid to the maker, negative for net sellers
    double budget = 0.0;     // B
    double fees_paid = 0.0;
    // Sum of worst-case-loss increments over all risk-increasing legs. Never
    // refunded by liquidations; this plus fees_paid is what the budget caps.
    double committed = 0.0;
    int trades = 0;

    double spend() const { return committed + fees_paid; }
};

// max over outcome in {0, 1} of (c_i - n_i * outcome). Fees excluded; not
// clamped at zero.
double worst_case_loss(const AgentPosition& pos);

using Ledger = std::map<std::string, AgentPosition>;

// Sum of per-agent worst-case losses.
double total_M(const Ledger& ledger);

struct TradeReceipt {
    std::string agent;
    double delta = 0.0;
    double gross_cost = 0.0;
    double fee = 0.0;
    double liquidated_shares = 0.0;  // magnitude of the fee-free leg
    double q_before = 0.0;
    double q_after = 0.0;
    // Set when part of the risk-increasing leg lies outside [q-, q+]. The
    // best-case profit of that portion is reported and is never positive.
    bool dominated = false;
    double out_of_band_max_profit = 0.0;
    AgentPosition position;
};

class TradeRejected : public std::runtime_error {
public:
    enum class Reason { budget_exceeded, single_entry_repeat, unknown_agent, invalid_delta };

    TradeRejected(Reason reason, const std::string& what)
        : std::runtime_error(what), reason_(reason) {}

    Reason reason() const { return reason_; }

private:
    Reason reason_;
};

// Tolerance on money comparisons, in dollars.
inline constexpr double kMoneyTol = 1e-9;

class Market {
public:
    // Requires 0 < f < 1.
    Market(std::shared_ptr<const CostFunction> cf, FeeSchedule fees, EntryMode mode);

    const CostFunction& cost_function() const { return *cf_; }
    const FeeSchedule& fees() const { return fees_; }
    EntryMode entry_mode() const { return mode_; }
    const PriceBounds& bounds() const { return bounds_; }

    double outstanding() const { return q_; }
    double price() const { return cf_->price(q_); }
    double fee_revenue() const { return collected_fees_; }
    const Ledger& ledger() const { return ledger_; }

    // Adds an agent with a flat position. Re-registering an id is an error.
    void register_agent(const std::string& id, double budget);
    bool has_agent(const std::string& id) const { return ledger_.count(id) != 0; }
    const AgentPosition& position(const std::string& id) const;

    // Prices a trade without applying it or checking the budget.
    TradeReceipt quote(const std::string& id, double delta) const;

    // Throws TradeRejected and leaves the market untouched when the trade would
    // push the agent's spend above its budget, or repeats a single-entry agent.
    TradeReceipt execute_trade(const std::string& id, double delta);

    bool within_budget(const TradeReceipt& r) const;

private:
    std::shared_ptr<const CostFunction> cf_;
    FeeSchedule fees_;
    EntryMode mode_;
    PriceBounds bounds_;
    double q_ = 0.0;
    double collected_fees_ = 0.0;
    Ledger ledger_;
};

// LMSR market with q = 0 and an empty ledger.
Market open_market(double b, double f, EntryMode mode);

double fee_revenue(const Market& market);

// {b, f, q, agents: [{id, n, c, B, fees}], collected_fees}
nlohmann::json ledger_snapshot(const Market& market);

}  // namespace peermarket
