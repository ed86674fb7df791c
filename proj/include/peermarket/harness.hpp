#pragma once

#include "peermarket/arbitration.hpp"
#include "peermarket/incentives.hpp"
#include "peermarket/market.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace peermarket {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AgentSpec {
    std::string id;
    double budget = 0.0;
    double valuation = 0.5;  // expected outcome fraction
    bool is_arbiter = false;
};

struct BeliefSpec {
    std::optional<GenerativeModel> generative;
    std::optional<double> mu0;
    std::optional<double> mu1;
    std::optional<double> mu;  // defaults to the generative prior, else the closing price
    std::vector<PosteriorPair> heterogeneous;
};

struct KPolicy {
    bool automatic = true;
    double fixed = 0.0;
};

enum class ArrivalOrder { listed, shuffled };

struct Scenario {
    double b = 100.0;
    double f = 0.05;
    EntryMode mode = EntryMode::single;
    std::vector<AgentSpec> agents;
    int m = 2;  // arbiter count; arbiters beyond the flagged agents hold nothing
    BeliefSpec beliefs;
    KPolicy k;
    std::uint64_t seed = 0;
    ArrivalOrder order = ArrivalOrder::listed;
    int passes = 1;  // trading passes over the agent list (multiple entry)
    int probe_samples = 20000;

    void validate() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

// Signed trade a risk-neutral agent with `valuation` places now: it moves the
// fee-adjusted marginal price to its valuation, liquidating first, and stops
// where its budget binds. Returns 0 when no trade is worthwhile.
double rational_trade(const Market& market, const std::string& id, double valuation);

struct AgentResult {
    std::string id;
    bool is_arbiter = false;
    bool trader = true;
    double shares = 0.0;
    double net_paid = 0.0;
    double fees_paid = 0.0;
    double market_payout = 0.0;
    double arbiter_payment = 0.0;
    double pnl = 0.0;
};

struct DeviationRow {
    std::string id;
    int arbiter = 0;
    double shares = 0.0;
    int signal = 0;
    double analytic_gain = 0.0;
    std::optional<double> mc_gain;
    std::optional<double> mc_stderr;
};

struct RunReport {
    double closing_price = 0.0;
    double outcome = 0.0;
    BeliefModel beliefs;
    double k = 0.0;
    std::vector<AgentResult> agents;
    double fee_revenue = 0.0;
    double total_M = 0.0;
    double arbiter_payments = 0.0;
    double payment_bound = 0.0;  // m k
    SubsidyVerdict subsidy;      // f M against the required payment at B = max budget
    double outside_subsidy = 0.0;
    bool fees_cover_payments = true;
    double maker_net = 0.0;
    double fee_pool_net = 0.0;
    // Sum of every party's net flow: traders, arbiters, maker, fee pool and
    // the outside subsidy. Zero up to rounding.
    double flow_balance = 0.0;
    int trades = 0;
    int rejected_trades = 0;
    int dominated_trades = 0;
    std::vector<DeviationRow> deviations;
    nlohmann::json round;
    nlohmann::json ledger;
};

RunReport run_scenario(const Scenario& scenario);

// Runs the scenario, then for every arbiter and both signal values compares
// the analytic misreport gain (others truthful) against a Monte Carlo
// estimate drawn from the signal model.
std::vector<DeviationRow> probe_deviations(const Scenario& scenario);

nlohmann::json report_to_json(const RunReport& report);
nlohmann::json deviations_to_json(const std::vector<DeviationRow>& rows);

struct SweepGrid {
    double total_loss = 1e6;  // M
    std::vector<double> deltas;
    std::vector<double> liquidities;  // used by single-entry rows
    std::vector<EntryMode> modes;
    std::vector<double> budget_fractions;  // B / M
};

SweepGrid sweep_grid_from_json(const nlohmann::json& j);

struct SweepRow {
    double delta = 0.0;
    std::optional<double> b;  // empty for multiple entry, written as inf
    EntryMode mode = EntryMode::multiple;
    double budget_fraction = 0.0;
    double min_fee = 0.0;  // NaN when infeasible
    std::string reason;
};

std::vector<SweepRow> sweep_calibration(const SweepGrid& grid);

// Header `delta,b,entry_mode,B_over_M,min_fee,reason`.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace peermarket
