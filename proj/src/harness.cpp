#include "peermarket/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

namespace peermarket {

namespace {

using nlohmann::json;

constexpr std::uint64_t kProbeStream = 0x9E3779B97F4A7C15ULL;

double shares_at(const CostFunction& cf, double p)
{
    if (p <= 0.0)
        return -std::numeric_limits<double>::infinity();
    if (p >= 1.0)
        return std::numeric_limits<double>::infinity();
    return cf.shares_at_price(p);
}

// Largest s in [0, open_max] such that trading sign * (liquidated + s) fits
// the agent's budget. Spend is monotone in s.
double affordable(const Market& market, const std::string& id, double sign,
                  double liquidated, double open_max)
{
    const auto fits = [&](double s) {
        const double size = liquidated + s;
        if (size <= 0.0)
            return true;
        return market.within_budget(market.quote(id, sign * size));
    };
    if (fits(open_max))
        return open_max;
    double lo = 0.0;
    double hi = open_max;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
        const double mid = lo + (hi - lo) / 2.0;
        if (fits(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

BeliefModel resolve_beliefs(const BeliefSpec& spec, double closing_price)
{
    // explicit mu, then the signal model's own prior, then the market's price
    double mu = spec.mu.value_or(closing_price);
    if (!spec.mu && spec.heterogeneous.empty() && !(spec.mu0 && spec.mu1) && spec.generative)
        mu = derive_posteriors(*spec.generative).mu;
    try {
        if (!spec.heterogeneous.empty())
            return aggregate_beliefs(spec.heterogeneous, mu);
        BeliefModel out;
        out.mu = mu;
        if (spec.mu0 && spec.mu1) {
            out.mu0 = *spec.mu0;
            out.mu1 = *spec.mu1;
        } else if (spec.generative) {
            const BeliefModel derived = derive_posteriors(*spec.generative);
            out.mu0 = derived.mu0;
            out.mu1 = derived.mu1;
        } else {
            throw ScenarioError("beliefs need generative parameters, mu0/mu1, or heterogeneous posteriors");
        }
        out.validate();
        return out;
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("infeasible beliefs: ") + e.what() + " (mu = " + std::to_string(mu) + ")");
    }
}

GenerativeModel signal_model(const BeliefSpec& spec, const BeliefModel& beliefs)
{
    if (spec.generative)
        return *spec.generative;
    return GenerativeModel::fit_posteriors(beliefs.mu0, beliefs.mu1);
}

std::string format_number(double x)
{
    if (std::isnan(x))
        return "NaN";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

std::vector<double> number_list(const json& j, const char* key)
{
    if (!j.contains(key))
        throw std::invalid_argument(std::string("grid is missing '") + key + "'");
    const json& v = j.at(key);
    if (v.is_number())
        return {v.get<double>()};
    if (v.is_array())
        return v.get<std::vector<double>>();
    // {"start": a, "stop": b, "steps": n}, inclusive
    const double start = v.at("start").get<double>();
    const double stop = v.at("stop").get<double>();
    const int steps = v.at("steps").get<int>();
    if (steps < 1)
        throw std::invalid_argument(std::string("'") + key + "' needs at least one step");
    std::vector<double> out;
    for (int i = 0; i < steps; ++i)
        out.push_back(steps == 1 ? start : start + (stop - start) * i / (steps - 1));
    return out;
}

}  // namespace

void Scenario::validate() const
{
    if (!(b > 0.0) || !std::isfinite(b))
        throw ScenarioError("liquidity b must be positive");
    if (!(f > 0.0 && f < 1.0))
        throw ScenarioError("fee f must lie in (0, 1)");
    if (m < 2)
        throw ScenarioError("need at least two arbiters");
    if (passes < 1)
        throw ScenarioError("passes must be at least 1");
    if (probe_samples < 1)
        throw ScenarioError("probe_samples must be at least 1");
    if (!k.automatic && !(k.fixed >= 0.0 && std::isfinite(k.fixed)))
        throw ScenarioError("fixed k must be finite and non-negative");
    std::set<std::string> ids;
    int arbiters = 0;
    for (const auto& a : agents) {
        if (a.id.empty())
            throw ScenarioError("agent ids must be non-empty");
        if (!ids.insert(a.id).second)
            throw ScenarioError("duplicate agent id '" + a.id + "'");
        if (!(a.budget >= 0.0) || !std::isfinite(a.budget))
            throw ScenarioError("agent '" + a.id + "' has an invalid budget");
        if (!(a.valuation >= 0.0 && a.valuation <= 1.0))
            throw ScenarioError("agent '" + a.id + "' valuation must lie in [0, 1]");
        arbiters += a.is_arbiter ? 1 : 0;
    }
    if (arbiters > m)
        throw ScenarioError("more agents flagged as arbiters than the arbiter count m");
}

Scenario scenario_from_json(const json& j)
{
    Scenario s;
    const json& mk = j.at("market");
    s.b = mk.at("b").get<double>();
    s.f = mk.at("f").get<double>();
    s.mode = entry_mode_from_string(mk.value("entry_mode", std::string("single")));

    for (const auto& a : j.value("agents", json::array())) {
        AgentSpec spec;
        spec.id = a.at("id").get<std::string>();
        spec.budget = a.at("budget").get<double>();
        spec.valuation = a.value("valuation", 0.5);
        spec.is_arbiter = a.value("is_arbiter", false);
        s.agents.push_back(spec);
    }
    s.m = j.at("arbiters").get<int>();

    const json& bj = j.at("beliefs");
    if (bj.contains("generative")) {
        const json& g = bj.at("generative");
        GenerativeModel gen;
        gen.p_event = g.at("p_event").get<double>();
        gen.p_signal_given_event = g.at("p_signal_given_event").get<double>();
        gen.p_signal_given_no_event = g.at("p_signal_given_no_event").get<double>();
        s.beliefs.generative = gen;
    }
    if (bj.contains("mu0"))
        s.beliefs.mu0 = bj.at("mu0").get<double>();
    if (bj.contains("mu1"))
        s.beliefs.mu1 = bj.at("mu1").get<double>();
    if (bj.contains("mu"))
        s.beliefs.mu = bj.at("mu").get<double>();
    for (const auto& p : bj.value("heterogeneous", json::array()))
        s.beliefs.heterogeneous.push_back({p.at("mu0").get<double>(), p.at("mu1").get<double>()});

    const json kj = j.value("k", json("auto"));
    if (kj.is_string()) {
        if (kj.get<std::string>() != "auto")
            throw ScenarioError("k must be \"auto\" or a number");
    } else {
        s.k.automatic = false;
        s.k.fixed = kj.get<double>();
    }

    s.seed = j.value("seed", std::uint64_t{0});
    const std::string order = j.value("arrival_order", std::string("listed"));
    if (order == "listed")
        s.order = ArrivalOrder::listed;
    else if (order == "shuffled")
        s.order = ArrivalOrder::shuffled;
    else
        throw ScenarioError("arrival_order must be 'listed' or 'shuffled'");
    s.passes = j.value("passes", 1);
    s.probe_samples = j.value("probe_samples", 20000);
    s.validate();
    return s;
}

json scenario_to_json(const Scenario& s)
{
    json agents = json::array();
    for (const auto& a : s.agents)
        agents.push_back({{"id", a.id}, {"budget", a.budget}, {"valuation", a.valuation}, {"is_arbiter", a.is_arbiter}});
    json beliefs = json::object();
    if (s.beliefs.generative)
        beliefs["generative"] = {{"p_event", s.beliefs.generative->p_event},
                                 {"p_signal_given_event", s.beliefs.generative->p_signal_given_event},
                                 {"p_signal_given_no_event", s.beliefs.generative->p_signal_given_no_event}};
    if (s.beliefs.mu0)
        beliefs["mu0"] = *s.beliefs.mu0;
    if (s.beliefs.mu1)
        beliefs["mu1"] = *s.beliefs.mu1;
    if (s.beliefs.mu)
        beliefs["mu"] = *s.beliefs.mu;
    if (!s.beliefs.heterogeneous.empty()) {
        json h = json::array();
        for (const auto& p : s.beliefs.heterogeneous)
            h.push_back({{"mu0", p.mu0}, {"mu1", p.mu1}});
        beliefs["heterogeneous"] = h;
    }
    return {{"market", {{"b", s.b}, {"f", s.f}, {"entry_mode", to_string(s.mode)}}},
            {"agents", agents},
            {"arbiters", s.m},
            {"beliefs", beliefs},
            {"k", s.k.automatic ? json("auto") : json(s.k.fixed)},
            {"seed", s.seed},
            {"arrival_order", s.order == ArrivalOrder::listed ? "listed" : "shuffled"},
            {"passes", s.passes},
            {"probe_samples", s.probe_samples}};
}

double rational_trade(const Market& market, const std::string& id, double valuation)
{
    const CostFunction& cf = market.cost_function();
    const double f = market.fees().rate();
    const double q = market.outstanding();
    const double p = market.price();
    const double n = market.position(id).shares;
    const double v = valuation;

    double liquidated = 0.0;
    double open_max = 0.0;
    double sign = 0.0;

    if ((n < 0.0 && p < v) || (n >= 0.0 && p * (1.0 + f) < v)) {
        // buy: fee-free buyback up to price v, then new longs up to price v / (1 + f)
        sign = 1.0;
        double q_open = q;
        bool flat = n >= 0.0;
        if (n < 0.0) {
            liquidated = std::min(shares_at(cf, v) - q, -n);
            flat = liquidated >= -n;
            q_open = q + liquidated;
        }
        if (flat && cf.price(q_open) * (1.0 + f) < v)
            open_max = std::max(0.0, shares_at(cf, v / (1.0 + f)) - q_open);
    } else if ((n > 0.0 && p > v) || (n <= 0.0 && p * (1.0 + f) - f > v)) {
        // sell: fee-free liquidation down to price v, then new shorts down to
        // price (v + f) / (1 + f)
        sign = -1.0;
        double q_open = q;
        bool flat = n <= 0.0;
        if (n > 0.0) {
            liquidated = std::min(q - shares_at(cf, v), n);
            flat = liquidated >= n;
            q_open = q - liquidated;
        }
        if (flat && cf.price(q_open) * (1.0 + f) - f > v)
            open_max = std::max(0.0, q_open - shares_at(cf, (v + f) / (1.0 + f)));
    } else {
        return 0.0;
    }

    liquidated = std::max(0.0, liquidated);
    const double opened = open_max > 0.0 ? affordable(market, id, sign, liquidated, open_max) : 0.0;
    const double size = liquidated + opened;
    if (!(size > 1e-12 * std::max(1.0, cf.liquidity())))
        return 0.0;
    return sign * size;
}

RunReport run_scenario(const Scenario& scenario)
{
    scenario.validate();
    Rng rng(scenario.seed);

    Market market = open_market(scenario.b, scenario.f, scenario.mode);
    for (const auto& a : scenario.agents)
        market.register_agent(a.id, a.budget);

    RunReport rep;
    std::vector<std::size_t> order(scenario.agents.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (scenario.order == ArrivalOrder::shuffled)
        std::shuffle(order.begin(), order.end(), rng);

    const int passes = scenario.mode == EntryMode::single ? 1 : scenario.passes;
    for (int pass = 0; pass < passes; ++pass) {
        for (std::size_t idx : order) {
            const AgentSpec& a = scenario.agents[idx];
            const double delta = rational_trade(market, a.id, a.valuation);
            if (delta == 0.0)
                continue;
            try {
                const TradeReceipt r = market.execute_trade(a.id, delta);
                ++rep.trades;
                rep.dominated_trades += r.dominated ? 1 : 0;
            } catch (const TradeRejected&) {
                ++rep.rejected_trades;
            }
        }
    }

    rep.closing_price = market.price();
    rep.beliefs = resolve_beliefs(scenario.beliefs, rep.closing_price);
    const GenerativeModel gen = signal_model(scenario.beliefs, rep.beliefs);

    double max_budget = 0.0;
    for (const auto& a : scenario.agents)
        max_budget = std::max(max_budget, a.budget);
    rep.total_M = total_M(market.ledger());
    const CalibrationProblem problem{rep.beliefs.delta(), max_budget, rep.total_M, scenario.b, scenario.mode};
    rep.k = scenario.k.automatic ? min_k_budget(problem, scenario.f, scenario.m) : scenario.k.fixed;

    // Arbiter slots: flagged agents in listed order, then non-trading arbiters.
    std::vector<std::string> arbiter_ids;
    for (const auto& a : scenario.agents)
        if (a.is_arbiter)
            arbiter_ids.push_back(a.id);
    std::vector<std::string> pure_arbiters;
    for (int i = static_cast<int>(arbiter_ids.size()); i < scenario.m; ++i) {
        std::string id = "arbiter-" + std::to_string(i);
        while (market.has_agent(id))
            id += "'";
        arbiter_ids.push_back(id);
        pure_arbiters.push_back(id);
    }

    std::vector<int> signals = draw_signals(gen, scenario.m, rng);
    std::vector<int> reports = signals;
    std::vector<int> peers = assign_peers(scenario.m, rng);
    const ArbitrationRound round = make_round(rep.beliefs, rep.k, signals, reports, peers);
    const Outcome outcome = resolve_outcome(round.reports);
    const SettlementReport settlement = settle(market, outcome, round);

    rep.outcome = outcome.value();
    rep.fee_revenue = market.fee_revenue();
    rep.arbiter_payments = settlement.total_arbiter_payments;
    rep.payment_bound = total_payment_bound(scenario.m, rep.k);
    rep.subsidy = subsidy_condition(problem, scenario.f);
    rep.outside_subsidy = settlement.deficit;
    rep.fees_cover_payments = settlement.fees_cover_payments;
    rep.maker_net = settlement.maker_trading_net;
    rep.fee_pool_net = settlement.fee_pool_balance + settlement.deficit;

    std::map<std::string, double> arbiter_pay;
    for (int i = 0; i < scenario.m; ++i)
        arbiter_pay[arbiter_ids[static_cast<std::size_t>(i)]] = settlement.arbiter_payments[static_cast<std::size_t>(i)];

    double balance = 0.0;
    for (const auto& a : scenario.agents) {
        const AgentPosition& pos = market.position(a.id);
        AgentResult res;
        res.id = a.id;
        res.is_arbiter = a.is_arbiter;
        res.shares = pos.shares;
        res.net_paid = pos.net_paid;
        res.fees_paid = pos.fees_paid;
        res.market_payout = settlement.market_payouts.at(a.id);
        res.arbiter_payment = a.is_arbiter ? arbiter_pay.at(a.id) : 0.0;
        res.pnl = res.market_payout - res.net_paid - res.fees_paid + res.arbiter_payment;
        balance += res.pnl;
        rep.agents.push_back(res);
    }
    for (const auto& id : pure_arbiters) {
        AgentResult res;
        res.id = id;
        res.is_arbiter = true;
        res.trader = false;
        res.arbiter_payment = arbiter_pay.at(id);
        res.pnl = res.arbiter_payment;
        balance += res.pnl;
        rep.agents.push_back(res);
    }
    rep.flow_balance = balance + rep.maker_net + rep.fee_pool_net - rep.outside_subsidy;

    for (int i = 0; i < scenario.m; ++i) {
        const std::string& id = arbiter_ids[static_cast<std::size_t>(i)];
        const double n = market.has_agent(id) ? market.position(id).shares : 0.0;
        for (int x = 0; x <= 1; ++x) {
            IncentiveQuery query{n, scenario.m, rep.k, rep.beliefs, x};
            rep.deviations.push_back({id, i, n, x, deviation_gain(query), std::nullopt, std::nullopt});
        }
    }
    rep.round = round_to_json(round);
    rep.ledger = ledger_snapshot(market);
    return rep;
}

std::vector<DeviationRow> probe_deviations(const Scenario& scenario)
{
    const RunReport rep = run_scenario(scenario);
    const GenerativeModel gen = signal_model(scenario.beliefs, rep.beliefs);
    const double c = rep.beliefs.midpoint();
    const int m = scenario.m;
    Rng rng(scenario.seed ^ kProbeStream);

    std::vector<DeviationRow> rows = rep.deviations;
    for (auto& row : rows) {
        const int i = row.arbiter;
        const int x = row.signal;
        const double shift = (x == 0 ? 1.0 : -1.0) / m;
        double sum = 0.0;
        double sum_sq = 0.0;
        for (int s = 0; s < scenario.probe_samples; ++s) {
            const std::vector<int> sig = draw_signals_given(gen, m, i, x, rng);
            const std::vector<int> peers = assign_peers(m, rng);
            const int peer_report = sig[static_cast<std::size_t>(peers[static_cast<std::size_t>(i)])];
            const double gain = row.shares * shift
                              + peer_payment(1 - x, peer_report, rep.k, c)
                              - peer_payment(x, peer_report, rep.k, c);
            sum += gain;
            sum_sq += gain * gain;
        }
        const double n = scenario.probe_samples;
        const double mean = sum / n;
        const double var = std::max(0.0, sum_sq / n - mean * mean);
        row.mc_gain = mean;
        row.mc_stderr = std::sqrt(var / n);
    }
    return rows;
}

json deviations_to_json(const std::vector<DeviationRow>& rows)
{
    json out = json::array();
    for (const auto& r : rows) {
        json row = {{"id", r.id},
                    {"arbiter", r.arbiter},
                    {"n", r.shares},
                    {"signal", r.signal},
                    {"analytic_gain", r.analytic_gain},
                    {"truthful_best_response", r.analytic_gain <= kMoneyTol}};
        if (r.mc_gain)
            row["mc_gain"] = *r.mc_gain;
        if (r.mc_stderr)
            row["mc_stderr"] = *r.mc_stderr;
        out.push_back(row);
    }
    return out;
}

json report_to_json(const RunReport& r)
{
    json agents = json::array();
    for (const auto& a : r.agents)
        agents.push_back({{"id", a.id},
                          {"is_arbiter", a.is_arbiter},
                          {"trader", a.trader},
                          {"n", a.shares},
                          {"c", a.net_paid},
                          {"fees", a.fees_paid},
                          {"market_payout", a.market_payout},
                          {"arbiter_payment", a.arbiter_payment},
                          {"pnl", a.pnl}});
    return {{"closing_price", r.closing_price},
            {"outcome", r.outcome},
            {"beliefs", {{"mu", r.beliefs.mu}, {"mu0", r.beliefs.mu0}, {"mu1", r.beliefs.mu1}, {"delta", r.beliefs.delta()}}},
            {"k", r.k},
            {"agents", agents},
            {"fee_revenue", r.fee_revenue},
            {"total_M", r.total_M},
            {"arbiter_payments", r.arbiter_payments},
            {"payment_bound", r.payment_bound},
            {"subsidy", {{"holds", r.subsidy.holds},
                         {"revenue", r.subsidy.revenue},
                         {"required", r.subsidy.required},
                         {"deficit", r.subsidy.deficit}}},
            {"outside_subsidy", r.outside_subsidy},
            {"fees_cover_payments", r.fees_cover_payments},
            {"maker_net", r.maker_net},
            {"fee_pool_net", r.fee_pool_net},
            {"flow_balance", r.flow_balance},
            {"trades", r.trades},
            {"rejected_trades", r.rejected_trades},
            {"dominated_trades", r.dominated_trades},
            {"deviations", deviations_to_json(r.deviations)},
            {"round", r.round},
            {"ledger", r.ledger}};
}

SweepGrid sweep_grid_from_json(const json& j)
{
    SweepGrid g;
    g.total_loss = j.value("M", 1e6);
    g.deltas = number_list(j, "delta");
    g.budget_fractions = number_list(j, "B_over_M");
    for (const auto& m : j.value("entry_mode", json::array({"single", "multiple"})))
        g.modes.push_back(entry_mode_from_string(m.get<std::string>()));
    if (std::find(g.modes.begin(), g.modes.end(), EntryMode::single) != g.modes.end())
        g.liquidities = number_list(j, "b");
    return g;
}

std::vector<SweepRow> sweep_calibration(const SweepGrid& grid)
{
    std::vector<SweepRow> rows;
    const auto solve = [&](SweepRow row) {
        CalibrationProblem problem{row.delta, row.budget_fraction * grid.total_loss, grid.total_loss,
                                   row.b.value_or(0.0), row.mode};
        try {
            row.min_fee = calibrate_min_fee(problem);
        } catch (const std::exception& e) {
            row.min_fee = std::numeric_limits<double>::quiet_NaN();
            row.reason = e.what();
        }
        rows.push_back(row);
    };
    for (EntryMode mode : grid.modes) {
        for (double delta : grid.deltas) {
            if (mode == EntryMode::multiple) {
                for (double frac : grid.budget_fractions)
                    solve({delta, std::nullopt, mode, frac, 0.0, {}});
            } else {
                for (double b : grid.liquidities)
                    for (double frac : grid.budget_fractions)
                        solve({delta, b, mode, frac, 0.0, {}});
            }
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "delta,b,entry_mode,B_over_M,min_fee,reason\n";
    for (const auto& r : rows) {
        out << format_number(r.delta) << ','
            << (r.b ? format_number(*r.b) : std::string("inf")) << ','
            << to_string(r.mode) << ','
            << format_number(r.budget_fraction) << ','
            << format_number(r.min_fee) << ','
            << csv_field(r.reason) << '\n';
    }
}

}  // namespace peermarket
