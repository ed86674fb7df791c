#pragma once

#include <memory>

namespace peermarket {

// Convex cost function of a market-scoring-rule market maker. `cost(q)` is the
// total amount paid into the maker when `q` shares are outstanding and
// `price(q)` is its derivative. Implementations must be convex, differentiable
// and strictly increasing, with price(q) in (0, 1).
//
// The two inverses have generic monotone root-finding defaults; closed forms
// may override them.
class CostFunction {
public:
    virtual ~CostFunction() = default;

    virtual double cost(double q) const = 0;
    virtual double price(double q) const = 0;

    // Liquidity scale. Used to size search brackets.
    virtual double liquidity() const = 0;

    // q such that cost(q) == dollars. Requires dollars > inf cost.
    virtual double cost_inverse(double dollars) const;

    // q such that price(q) == p, for p in (0, 1).
    virtual double shares_at_price(double p) const;
};

// Logarithmic market scoring rule: C_b(q) = b log(1 + e^{q/b}).
class Lmsr final : public CostFunction {
public:
    explicit Lmsr(double liquidity);

    double cost(double q) const override;
    double price(double q) const override;
    double liquidity() const override { return b_; }
    double cost_inverse(double dollars) const override;
    double shares_at_price(double p) const override;

private:
    double b_;
};

// Multiplicative trading fee rate. Buying a share at price p costs an extra f·p,
// shorting one at price p costs f·(1 - p); liquidations are free.
class FeeSchedule {
public:
    explicit FeeSchedule(double rate);

    double rate() const { return rate_; }
    double min_price() const { return rate_ / (1.0 + rate_); }
    double max_price() const { return 1.0 / (1.0 + rate_); }

private:
    double rate_;
};

// Outstanding-share interval outside of which no trade is profitable.
struct PriceBounds {
    double q_minus;
    double q_plus;
    double p_min;
    double p_max;
};

double cost(const CostFunction& cf, double q);
double price(const CostFunction& cf, double q);

// Amount the trader pays to move outstanding shares from `q_from` to `q_to`;
// negative for sales.
double trade_cost(const CostFunction& cf, double q_from, double q_to);

// Requires 0 < f < 1.
PriceBounds price_bound_shares(const CostFunction& cf, const FeeSchedule& fs);

// Largest long position one agent can take in a single transaction with worst
// case loss at most `budget`: C^{-1}(B + C(q-)) - q-.
double phi_plus(const CostFunction& cf, const FeeSchedule& fs, double budget);

// Most negative short position reachable in a single transaction with worst
// case loss at most `budget`. Solves B + C(q+) - C(q') = q+ - q' for q' <= q+
// and returns q' - q+ (non-positive).
double phi_minus(const CostFunction& cf, const FeeSchedule& fs, double budget);

// Position magnitude bound when the agent can trade at the extreme prices
// indefinitely (infinite liquidity or repeated entry): B (1 + f) / f.
double phi_infinite(const FeeSchedule& fs, double budget);

}  // namespace peermarket
