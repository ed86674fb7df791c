// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure or time-budget overrun.

#include "peermarket/harness.hpp"
#include "peermarket/incentives.hpp"
#include "peermarket/msr.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace peermarket;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

int failures = 0;

void run(int id, const char* name, double budget_s, const std::function<Verdict()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.pass && secs > budget_s) {
        v.pass = false;
        v.detail = "over time budget of " + std::to_string(budget_s) + " s";
    }
    failures += v.pass ? 0 : 1;
    std::printf("[%s] %d %-34s %8.3f s  %s\n", v.pass ? "PASS" : "FAIL", id, name, secs, v.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

IncentiveQuery make_query(double n, int m, double k, double mu0, double mu1, int x, double mu)
{
    return {n, m, k, BeliefModel{mu, mu1, mu0}, x};
}

// 1. Truthful >= misreport exactly when k reaches 2|n|/(m delta).
Verdict truthfulness_threshold()
{
    Verdict v;
    double worst_boundary = 0.0;
    for (double n : {-100.0, -10.0, -1.0, 1.0, 10.0, 100.0})
        for (int m : {2, 5, 10, 50})
            for (double delta : {0.1, 0.5, 1.0})
                for (int x : {0, 1}) {
                    const double mu0 = 0.5 - delta / 2, mu1 = 0.5 + delta / 2;
                    const double kstar = 2.0 * std::abs(n) / (m * delta);
                    const bool tempted = (n > 0) == (x == 0);
                    const double at = deviation_gain(make_query(n, m, kstar, mu0, mu1, x, 0.5));
                    if (tempted)
                        worst_boundary = std::max(worst_boundary, std::abs(at));
                    for (double scale : {0.0, 0.25, 0.5, 0.9, 0.999, 1.001, 1.1, 2.0, 10.0}) {
                        const double k = kstar * scale;
                        const double gain = deviation_gain(make_query(n, m, k, mu0, mu1, x, 0.5));
                        const bool truthful = gain <= 0.0;
                        // a stake pulling away from the own signal only makes truth cheaper
                        const bool expected = tempted ? k >= kstar : true;
                        v.require(truthful == expected,
                                  fmt("n=%g m=%g mismatch at k/k*=%g", n, m, scale));
                    }
                }
    v.require(worst_boundary <= 1e-9, fmt("boundary gap %.3g", worst_boundary));
    if (v.pass)
        v.detail = fmt("max |gap| at threshold %.2e", worst_boundary);
    return v;
}

// 2. Simulated payoffs of truthful and misreporting arbiters.
Verdict monte_carlo_payoffs()
{
    Verdict v;
    const double n = 100.0, k = 25.0;
    const int m = 10;
    const GenerativeModel gen = GenerativeModel::fit_posteriors(0.1, 0.9);
    const BeliefModel bm = derive_posteriors(gen);
    const double c = bm.midpoint();
    const int rounds = 1000000;
    Rng rng(20240611);

    std::string summary;
    for (int x = 0; x <= 1; ++x) {
        double sum[2] = {0, 0}, sq[2] = {0, 0};
        for (int t = 0; t < rounds; ++t) {
            const std::vector<int> sig = draw_signals_given(gen, m, 0, x, rng);
            int others = 0;
            for (int i = 1; i < m; ++i)
                others += sig[static_cast<std::size_t>(i)];
            std::uniform_int_distribution<int> pick(1, m - 1);
            const int peer_report = sig[static_cast<std::size_t>(pick(rng))];
            for (int r = 0; r <= 1; ++r) {
                const double pay = n * (others + r) / m + peer_payment(r, peer_report, k, c);
                sum[r] += pay;
                sq[r] += pay * pay;
            }
        }
        const IncentiveQuery q{n, m, k, bm, x};
        for (int r = 0; r <= 1; ++r) {
            const double mean = sum[r] / rounds;
            const double se = std::sqrt((sq[r] / rounds - mean * mean) / rounds);
            const double analytic = expected_payoff(q, r);
            v.require(std::abs(mean - analytic) <= 3.0 * se,
                      fmt("x=%g: simulated %.5f vs analytic %.5f", x, mean, analytic) + fmt(" (se %.4f)", se));
            if (x == 0)
                summary += fmt("r=%g %.4f/%.4f ", r, mean, analytic);
        }
        if (x == 0) {
            v.require(std::abs(expected_payoff(q, 0) - 20.25) < 1e-12, "truthful payoff is not 20.25");
            v.require(std::abs(expected_payoff(q, 1) - 20.25) < 1e-12, "misreport payoff is not 20.25");
        }
    }
    if (v.pass)
        v.detail = summary + "(x=0, sim/analytic)";
    return v;
}

struct RandomMarket {
    double b, f;
    EntryMode mode;
};

RandomMarket random_market(std::mt19937_64& g, EntryMode mode)
{
    std::uniform_real_distribution<double> lb(0.0, 4.0);
    std::uniform_real_distribution<double> lf(-3.0, std::log10(0.3));
    return {std::pow(10.0, lb(g)), std::pow(10.0, lf(g)), mode};
}

// 3. Rational traders stay within the fee-implied share bounds.
Verdict price_bounds()
{
    Verdict v;
    std::mt19937_64 g(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_excursion = 0.0;
    int forced = 0;
    for (int seq = 0; seq < 1000; ++seq) {
        const RandomMarket rm = random_market(g, seq % 2 ? EntryMode::multiple : EntryMode::single);
        Market mk = open_market(rm.b, rm.f, rm.mode);
        const double limit = -rm.b * std::log(rm.f);
        // each agent keeps one valuation; extremes are over-represented
        std::vector<double> valuations;
        for (int t = 0; t < 100; ++t) {
            std::size_t who = 0;
            if (rm.mode == EntryMode::single || valuations.size() < 5 || u(g) < 0.3) {
                who = valuations.size();
                valuations.push_back(u(g) < 0.2 ? std::round(u(g)) : u(g));
                mk.register_agent("a" + std::to_string(who), std::pow(10.0, 4.0 * u(g)));
            } else {
                who = static_cast<std::size_t>(u(g) * static_cast<double>(valuations.size()));
            }
            const std::string id = "a" + std::to_string(who);
            const double d = rational_trade(mk, id, valuations[who]);
            if (d != 0.0)
                mk.execute_trade(id, d);
            const double q = mk.outstanding();
            worst_excursion = std::max(worst_excursion, (std::abs(q) - limit) / rm.b);
        }
        // now push past the bound on purpose
        mk.register_agent("forcer", 1e300);
        const double push = (mk.outstanding() < 0 ? 1.0 : -1.0) * (limit + std::abs(mk.outstanding()) + rm.b);
        const TradeReceipt r = mk.execute_trade("forcer", push);
        ++forced;
        v.require(r.dominated, "out-of-bound trade was not flagged");
        v.require(r.out_of_band_max_profit <= 1e-9 * rm.b, fmt("forced trade could profit %.3g", r.out_of_band_max_profit));
    }
    v.require(worst_excursion <= 1e-9, fmt("q left the bounds by %.3g b", worst_excursion));
    if (v.pass)
        v.detail = fmt("worst |q| - bound = %.2e b; %g forced trades all dominated", worst_excursion, forced);
    return v;
}

// 4. Position envelopes for budget-limited traders.
Verdict position_envelopes()
{
    Verdict v;
    std::mt19937_64 g(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_ratio = 0.0;
    for (int seed = 0; seed < 1000; ++seed) {
        const EntryMode mode = seed % 2 ? EntryMode::multiple : EntryMode::single;
        const RandomMarket rm = random_market(g, mode);
        const double budget = std::pow(10.0, 3.0 * u(g));
        Scenario s;
        s.b = rm.b;
        s.f = rm.f;
        s.mode = mode;
        s.m = 2;
        s.beliefs.mu0 = 0.1;
        s.beliefs.mu1 = 0.9;
        s.beliefs.mu = 0.5;
        s.seed = static_cast<std::uint64_t>(seed);
        s.order = ArrivalOrder::shuffled;
        s.passes = 5;
        s.probe_samples = 1;
        for (int i = 0; i < 12; ++i)
            s.agents.push_back({"t" + std::to_string(i), budget, u(g) < 0.5 ? std::round(u(g)) : u(g), false});
        const RunReport rep = run_scenario(s);

        const Lmsr cf(rm.b);
        const FeeSchedule fees(rm.f);
        const double envelope = mode == EntryMode::single
                                    ? std::max(std::abs(phi_minus(cf, fees, budget)), phi_plus(cf, fees, budget))
                                    : phi_infinite(fees, budget);
        for (const auto& a : rep.agents)
            if (a.trader)
                worst_ratio = std::max(worst_ratio, std::abs(a.shares) / envelope);
    }
    v.require(worst_ratio <= 1.0 + 1e-9, fmt("a position reached %.6f of its envelope", worst_ratio));

    const double limit = phi_plus(Lmsr(1e8), FeeSchedule(0.05), 50.0);
    const double inf = phi_infinite(FeeSchedule(0.05), 50.0);
    const double rel = std::abs(limit - inf) / inf;
    v.require(rel < 1e-3, fmt("phi+ at b=1e8 is %.4f vs %.4f", limit, inf));
    if (v.pass)
        v.detail = fmt("max |n|/envelope %.4f; b=1e8 rel. error %.2e", worst_ratio, rel);
    return v;
}

// 5. Minimum fees at the two quoted operating points.
Verdict calibration_points()
{
    Verdict v;
    const double multi = calibrate_min_fee({1.0, 1000.0, 1e6, 0.0, EntryMode::multiple});
    const double single = calibrate_min_fee({0.3, 5000.0, 1e6, 1000.0, EntryMode::single});
    v.require(multi >= 0.035 && multi <= 0.055, fmt("multiple-entry fee %.5f", multi));
    v.require(single >= 0.045 && single <= 0.06, fmt("single-entry fee %.5f", single));

    double worst = 0.0;
    for (double delta : {0.05, 0.1, 0.3, 0.5, 1.0})
        for (double frac : {1e-6, 1e-5, 1e-4, 1e-3, 5e-3, 1e-2, 5e-2}) {
            const CalibrationProblem p{delta, frac * 1e6, 1e6, 0.0, EntryMode::multiple};
            double a = NAN, b = NAN;
            try {
                a = calibrate_min_fee_closed_form(p);
            } catch (const InfeasibleCalibration&) {
            }
            try {
                b = calibrate_min_fee_bisection(p);
            } catch (const InfeasibleCalibration&) {
            }
            v.require(std::isnan(a) == std::isnan(b), fmt("solvers disagree on feasibility at delta=%g B/M=%g", delta, frac));
            if (!std::isnan(a) && !std::isnan(b))
                worst = std::max(worst, std::abs(a - b));
        }
    v.require(worst <= 1e-6, fmt("closed form and bisection differ by %.3g", worst));
    if (v.pass)
        v.detail = fmt("multiple %.5f, single %.5f, solver gap %.1e", multi, single, worst);
    return v;
}

Scenario funded_scenario(std::uint64_t seed)
{
    Scenario s;
    s.b = 10.0;
    s.f = 0.05;
    s.mode = EntryMode::single;
    s.m = 5;
    s.beliefs.mu0 = 0.0;
    s.beliefs.mu1 = 1.0;
    s.seed = seed;
    for (int i = 0; i < 200; ++i)
        s.agents.push_back({"t" + std::to_string(i), 10.0, i % 2 ? 0.01 : 0.99, false});
    return s;
}

// 6. Fees fund arbitration when the budget condition holds with margin.
Verdict fee_funded_arbitration()
{
    Verdict v;
    const RunReport ok = run_scenario(funded_scenario(6));
    v.require(ok.subsidy.holds, "engineered scenario does not satisfy the subsidy condition");
    v.require(ok.subsidy.revenue >= 1.1 * ok.subsidy.required, "margin below 10%");
    v.require(ok.arbiter_payments <= ok.payment_bound + 1e-9, "payments exceed m k");
    v.require(ok.fee_revenue >= ok.payment_bound, "fee revenue below m k");
    v.require(ok.fees_cover_payments && ok.outside_subsidy == 0.0, "outside subsidy was needed");

    Scenario bad = funded_scenario(6);
    bad.agents = {{"whale", 1000.0, 0.5, false}, {"minnow", 1.0, 0.9, false}};
    const RunReport short_run = run_scenario(bad);
    v.require(!short_run.subsidy.holds, "violating scenario satisfies the subsidy condition");
    v.require(short_run.subsidy.deficit > 0.0, "no deficit reported");
    v.require(!short_run.fees_cover_payments && short_run.outside_subsidy > 0.0, "no realized shortfall reported");
    if (v.pass)
        v.detail = fmt("funded: fees %.2f >= m k %.2f; violating: deficit %.2f", ok.fee_revenue, ok.payment_bound,
                       short_run.outside_subsidy);
    return v;
}

// 7. Midpoint reference equalizes deviation resistance; the prior does not.
Verdict midpoint_vs_prior()
{
    Verdict v;
    const double mu = 0.89, mu1 = 0.9, mu0 = 0.1, k = 10.0;
    const double delta = mu1 - mu0;
    double gap_prior[2], gap_mid[2];
    for (int x = 0; x <= 1; ++x) {
        const IncentiveQuery q = make_query(0.0, 10, k, mu0, mu1, x, mu);
        gap_prior[x] = -deviation_gain_with_reference(q, mu);
        gap_mid[x] = -deviation_gain(q);
        v.require(std::abs(gap_mid[x] - k * delta / 2) <= 1e-12, fmt("midpoint gap %.6f for x=%g", gap_mid[x], x));
    }
    v.require(std::abs(gap_prior[0] - gap_prior[1]) > 1e-3, "1/prior gaps are symmetric");
    if (v.pass)
        v.detail = fmt("1/prior gaps %.3f / %.3f; midpoint %.3f both", gap_prior[0], gap_prior[1], gap_mid[0]);
    return v;
}

// 8. Every run balances across maker, traders, fee pool and arbiters.
Verdict conservation()
{
    Verdict v;
    std::mt19937_64 g(88);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int run = 0; run < 100; ++run) {
        Scenario s;
        s.b = std::pow(10.0, 3.0 * u(g));
        s.f = std::pow(10.0, -3.0 + 2.5 * u(g));
        s.mode = u(g) < 0.5 ? EntryMode::single : EntryMode::multiple;
        s.m = 2 + static_cast<int>(u(g) * 8);
        s.beliefs.generative = GenerativeModel{0.2 + 0.6 * u(g), 0.6 + 0.4 * u(g), 0.4 * u(g)};
        s.seed = static_cast<std::uint64_t>(run) * 7919;
        s.order = ArrivalOrder::shuffled;
        s.passes = 1 + run % 4;
        s.k = u(g) < 0.3 ? KPolicy{false, 100.0 * u(g)} : KPolicy{};
        const int agents = 1 + static_cast<int>(u(g) * 30);
        for (int i = 0; i < agents; ++i)
            s.agents.push_back({"x" + std::to_string(i), std::pow(10.0, 3.0 * u(g)), u(g), i < s.m && u(g) < 0.5});
        const RunReport rep = run_scenario(s);

        // rebuild every party's flow from the report
        double traders = 0.0, cash_in = 0.0, shares = 0.0;
        for (const auto& a : rep.agents) {
            traders += a.shares * rep.outcome - a.net_paid - a.fees_paid + a.arbiter_payment;
            cash_in += a.net_paid;
            shares += a.shares;
        }
        const double maker = cash_in - rep.outcome * shares;
        const double pool = rep.fee_revenue - rep.arbiter_payments + rep.outside_subsidy;
        const double sponsor = -rep.outside_subsidy;
        const double total = traders + maker + pool + sponsor;
        worst = std::max({worst, std::abs(total), std::abs(rep.flow_balance)});
    }
    v.require(worst <= 1e-9, fmt("imbalance %.3g dollars", worst));
    if (v.pass)
        v.detail = fmt("max imbalance %.2e dollars over 100 runs", worst);
    return v;
}

}  // namespace

int main()
{
    run(1, "truthfulness threshold", 1.0, truthfulness_threshold);
    run(2, "monte carlo payoffs", 30.0, monte_carlo_payoffs);
    run(3, "price bounds", 10.0, price_bounds);
    run(4, "position envelopes", 10.0, position_envelopes);
    run(5, "calibration operating points", 1.0, calibration_points);
    run(6, "fee-funded arbitration", 5.0, fee_funded_arbitration);
    run(7, "midpoint vs prior reference", 1.0, midpoint_vs_prior);
    run(8, "money conservation", 10.0, conservation);
    std::printf("%d/8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
