#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

namespace peermarket {

struct BisectOptions {
    double rel_tol = 1e-12;
    // Floor for the stopping width when the root sits near zero.
    double abs_tol = 1e-300;
    int max_iter = 200;
};

// Finds x in [lo, hi] with fn(x) == 0 for a monotone fn. Returns nullopt when
// the endpoints do not bracket a sign change. When `keep_sign_of_hi` is set the
// returned point is the final upper endpoint, so fn(result) has the same sign
// as fn(hi); otherwise the midpoint of the final bracket is returned.
template <class Fn>
std::optional<double> bisect(const Fn& fn, double lo, double hi,
                             const BisectOptions& opts = {},
                             bool keep_sign_of_hi = false)
{
    if (!(lo <= hi))
        throw std::invalid_argument("bisect: empty bracket");

    double f_lo = fn(lo);
    double f_hi = fn(hi);
    if (f_lo == 0.0 && !keep_sign_of_hi)
        return lo;
    if (f_hi == 0.0)
        return hi;
    if (std::signbit(f_lo) == std::signbit(f_hi))
        return std::nullopt;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const double width = hi - lo;
        const double scale = std::max(std::abs(lo), std::abs(hi));
        if (width <= std::max(opts.rel_tol * scale, opts.abs_tol))
            break;

        const double mid = lo + width / 2.0;
        if (mid <= lo || mid >= hi)
            break;  // bracket exhausted at double resolution
        const double f_mid = fn(mid);
        if (f_mid == 0.0 && !keep_sign_of_hi)
            return mid;
        if (std::signbit(f_mid) == std::signbit(f_lo)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    return keep_sign_of_hi ? hi : lo + (hi - lo) / 2.0;
}

}  // namespace peermarket
