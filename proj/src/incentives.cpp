#include "peermarket/incentives.hpp"

#include "peermarket/bisect.hpp"

#include <cmath>
#include <string>

namespace peermarket {

void IncentiveQuery::validate() const
{
    if (m < 2)
        throw std::invalid_argument("need at least two arbiters");
    if (!(k >= 0.0))
        throw std::invalid_argument("payment scale k must be non-negative");
    if (signal != 0 && signal != 1)
        throw std::invalid_argument("signal must be 0 or 1");
    beliefs.validate();
}

double expected_payoff_with_reference(const IncentiveQuery& query, int report, double c)
{
    query.validate();
    if (report != 0 && report != 1)
        throw std::invalid_argument("report must be 0 or 1");

    const double mu_x = query.signal == 1 ? query.beliefs.mu1 : query.beliefs.mu0;
    const double m = query.m;
    const double market = query.shares * (mu_x * (m - 1.0) + report) / m;
    const double peer = report == 1 ? mu_x * query.k * (1.0 - c)
                                    : (1.0 - mu_x) * query.k * c;
    return market + peer;
}

double expected_payoff(const IncentiveQuery& query, int report)
{
    return expected_payoff_with_reference(query, report, query.beliefs.midpoint());
}

double deviation_gain_with_reference(const IncentiveQuery& query, double c)
{
    return expected_payoff_with_reference(query, 1 - query.signal, c)
         - expected_payoff_with_reference(query, query.signal, c);
}

double deviation_gain(const IncentiveQuery& query)
{
    return deviation_gain_with_reference(query, query.beliefs.midpoint());
}

double min_k(double shares, int m, double delta)
{
    if (m < 2)
        throw std::invalid_argument("need at least two arbiters");
    if (!(delta > 0.0))
        throw std::invalid_argument("update strength delta must be positive");
    return 2.0 * std::abs(shares) / (m * delta);
}

void CalibrationProblem::validate_bounds() const
{
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("delta must lie in (0, 1]");
    if (!(budget >= 0.0) || !std::isfinite(budget))
        throw std::invalid_argument("budget B must be finite and non-negative");
    if (mode == EntryMode::single && !(liquidity > 0.0 && std::isfinite(liquidity)))
        throw std::invalid_argument("single entry needs a positive liquidity b");
}

void CalibrationProblem::validate() const
{
    validate_bounds();
    if (!(budget <= total_loss) || !std::isfinite(total_loss))
        throw std::invalid_argument("need 0 <= B <= M");
}

double max_position(const CalibrationProblem& problem, double f)
{
    problem.validate_bounds();
    const FeeSchedule fees(f);
    if (problem.mode == EntryMode::multiple)
        return phi_infinite(fees, problem.budget);
    const Lmsr cf(problem.liquidity);
    return std::max(std::abs(phi_minus(cf, fees, problem.budget)),
                    std::abs(phi_plus(cf, fees, problem.budget)));
}

double min_k_budget(const CalibrationProblem& problem, double f, int m)
{
    if (!(f > 0.0 && f < 1.0))
        throw std::invalid_argument("fee must lie in (0, 1)");
    return min_k(max_position(problem, f), m, problem.delta);
}

double total_payment_bound(int m, double k)
{
    return m * k;
}

double required_payment(const CalibrationProblem& problem, double f)
{
    return 2.0 * max_position(problem, f) / problem.delta;
}

SubsidyVerdict subsidy_condition(const CalibrationProblem& problem, double f)
{
    SubsidyVerdict v;
    v.revenue = f * problem.total_loss;
    v.required = required_payment(problem, f);
    v.holds = v.revenue >= v.required;
    v.deficit = std::max(0.0, v.required - v.revenue);
    return v;
}

double calibrate_min_fee_closed_form(const CalibrationProblem& problem)
{
    problem.validate();
    if (problem.mode != EntryMode::multiple)
        throw std::invalid_argument("closed-form calibration applies to multiple entry only");
    const double B = problem.budget;
    const double md = problem.total_loss * problem.delta;
    if (B == 0.0)
        return 0.0;
    double f = (B + std::sqrt(B * B + 2.0 * B * md)) / md;
    if (!(f < 1.0))
        throw InfeasibleCalibration("minimum fee " + std::to_string(f) + " is not below 1");
    // Step past rounding so the condition holds at the returned value.
    for (int i = 0; i < 64 && !subsidy_condition(problem, f).holds; ++i)
        f = std::nextafter(f, 1.0);
    return f;
}

double calibrate_min_fee_bisection(const CalibrationProblem& problem)
{
    problem.validate();
    if (problem.budget == 0.0)
        return 0.0;
    const auto slack = [&](double f) {
        const SubsidyVerdict v = subsidy_condition(problem, f);
        return v.revenue - v.required;
    };
    if (slack(kFeeLowerBracket) >= 0.0)
        return kFeeLowerBracket;
    if (slack(kFeeUpperBracket) < 0.0)
        throw InfeasibleCalibration("no fee in (0, 1) covers the required arbiter payments");

    auto root = bisect(slack, kFeeLowerBracket, kFeeUpperBracket,
                       BisectOptions{1e-12, 1e-12, 200}, /*keep_sign_of_hi=*/true);
    if (!root)
        throw InfeasibleCalibration("subsidy slack has no sign change in (0, 1)");
    return *root;
}

double calibrate_min_fee(const CalibrationProblem& problem)
{
    problem.validate();
    if (problem.mode == EntryMode::multiple)
        return calibrate_min_fee_closed_form(problem);
    return calibrate_min_fee_bisection(problem);
}

}  // namespace peermarket
