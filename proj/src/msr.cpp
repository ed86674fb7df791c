#include "peermarket/msr.hpp"

#include "peermarket/bisect.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace peermarket {

namespace {

constexpr BisectOptions kRootOptions{1e-12, 1e-300, 200};

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x))
        throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_budget(double budget)
{
    if (!(budget >= 0.0) || !std::isfinite(budget))
        throw std::invalid_argument("budget must be finite and non-negative");
}

void require_fee_below_one(const FeeSchedule& fs)
{
    if (!(fs.rate() < 1.0))
        throw std::invalid_argument("fee rate must be below 1 for price bounds");
}

// Doubles the step away from `anchor` until `fn` changes sign relative to fn(anchor).
template <class Fn>
double expand_bracket(const Fn& fn, double anchor, double step, int max_doublings = 2000)
{
    const bool anchor_sign = std::signbit(fn(anchor));
    for (int i = 0; i < max_doublings; ++i) {
        const double x = anchor + step;
        if (!std::isfinite(x))
            break;
        if (std::signbit(fn(x)) != anchor_sign)
            return x;
        step *= 2.0;
    }
    throw std::runtime_error("unable to bracket root");
}

}  // namespace

double CostFunction::cost_inverse(double dollars) const
{
    const auto target = [&](double q) { return cost(q) - dollars; };
    const double scale = liquidity();
    double lo = 0.0;
    double hi = 0.0;
    if (target(0.0) < 0.0) {
        hi = expand_bracket(target, 0.0, scale);
        lo = hi / 2.0;
        if (target(lo) > 0.0)
            lo = 0.0;
    } else {
        lo = expand_bracket(target, 0.0, -scale);
        hi = lo / 2.0;
        if (target(hi) < 0.0)
            hi = 0.0;
    }
    auto root = bisect(target, lo, hi, kRootOptions);
    if (!root)
        throw std::runtime_error("cost_inverse: root not bracketed");
    return *root;
}

double CostFunction::shares_at_price(double p) const
{
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("price must lie in (0, 1)");
    const auto target = [&](double q) { return price(q) - p; };
    const double step = target(0.0) < 0.0 ? liquidity() : -liquidity();
    const double far = expand_bracket(target, 0.0, step);
    const double lo = std::min(0.0, far);
    const double hi = std::max(0.0, far);
    auto root = bisect(target, lo, hi, kRootOptions);
    if (!root)
        throw std::runtime_error("shares_at_price: root not bracketed");
    return *root;
}

Lmsr::Lmsr(double liquidity) : b_(liquidity)
{
    if (!(liquidity > 0.0) || !std::isfinite(liquidity))
        throw std::invalid_argument("liquidity b must be positive and finite");
}

double Lmsr::cost(double q) const
{
    // softplus: b log(1 + e^{q/b}) = max(q, 0) + b log1p(e^{-|q|/b})
    return std::max(q, 0.0) + b_ * std::log1p(std::exp(-std::abs(q) / b_));
}

double Lmsr::price(double q) const
{
    const double z = q / b_;
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double Lmsr::cost_inverse(double dollars) const
{
    if (!(dollars > 0.0))
        throw std::invalid_argument("LMSR cost is positive; cannot invert non-positive cost");
    // q = b log(e^{y/b} - 1) = y + b log(-expm1(-y/b))
    return dollars + b_ * std::log(-std::expm1(-dollars / b_));
}

double Lmsr::shares_at_price(double p) const
{
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("price must lie in (0, 1)");
    return b_ * (std::log(p) - std::log1p(-p));
}

FeeSchedule::FeeSchedule(double rate) : rate_(rate)
{
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw std::invalid_argument("fee rate must be positive and finite");
}

double cost(const CostFunction& cf, double q)
{
    require_finite(q, "q");
    return cf.cost(q);
}

double price(const CostFunction& cf, double q)
{
    return cf.price(q);
}

double trade_cost(const CostFunction& cf, double q_from, double q_to)
{
    require_finite(q_from, "q_from");
    require_finite(q_to, "q_to");
    if (q_from == q_to)
        return 0.0;
    return cf.cost(q_to) - cf.cost(q_from);
}

PriceBounds price_bound_shares(const CostFunction& cf, const FeeSchedule& fs)
{
    require_fee_below_one(fs);
    PriceBounds out{};
    out.p_min = fs.min_price();
    out.p_max = fs.max_price();
    out.q_minus = cf.shares_at_price(out.p_min);
    out.q_plus = cf.shares_at_price(out.p_max);
    return out;
}

double phi_plus(const CostFunction& cf, const FeeSchedule& fs, double budget)
{
    require_budget(budget);
    if (budget == 0.0)
        return 0.0;
    const double q_minus = price_bound_shares(cf, fs).q_minus;
    return cf.cost_inverse(budget + cf.cost(q_minus)) - q_minus;
}

double phi_minus(const CostFunction& cf, const FeeSchedule& fs, double budget)
{
    require_budget(budget);
    if (budget == 0.0)
        return 0.0;
    const double q_plus = price_bound_shares(cf, fs).q_plus;
    const double c_plus = cf.cost(q_plus);
    // Residual is increasing in q' with value B at q' = q+; selling the
    // infinite-liquidity bound B(1+f)/f drives it non-positive.
    const auto residual = [&](double q) { return budget + c_plus - cf.cost(q) - (q_plus - q); };
    const double lo = q_plus - phi_infinite(fs, budget);
    auto root = bisect(residual, lo, q_plus, kRootOptions);
    if (!root)
        throw std::runtime_error("phi_minus: root not bracketed");
    return *root - q_plus;
}

double phi_infinite(const FeeSchedule& fs, double budget)
{
    require_budget(budget);
    return budget * (1.0 + fs.rate()) / fs.rate();
}

}  // namespace peermarket
