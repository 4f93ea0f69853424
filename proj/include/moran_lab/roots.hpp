#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>

#include "moran_lab/errors.hpp"

namespace moran {

struct RootOptions {
    double x_tol = 1e-15;   // relative bracket width at which to stop
    double f_tol = 0.0;     // stop early once |f(x)| <= f_tol
    std::size_t max_iter = 400;
};

/// Root of f inside [lo, hi] where f(lo) and f(hi) have opposite signs.
/// Regula-falsi steps are taken while they shrink the bracket by at least
/// half; otherwise the step falls back to bisection.
template <class F>
double solve_bracketed(F&& f, double lo, double hi, const RootOptions& opt = {}) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi) || !std::isfinite(flo) || !std::isfinite(fhi)) {
        std::ostringstream msg;
        msg << "root not bracketed on [" << lo << ", " << hi << "] (f = " << flo << ", " << fhi << ")";
        throw NumericalError(msg.str());
    }

    bool force_bisect = false;
    double x = 0.5 * (lo + hi);
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        const double width = hi - lo;
        if (force_bisect) {
            x = lo + 0.5 * width;
        } else {
            x = hi - fhi * (hi - lo) / (fhi - flo);
            if (!(x > lo && x < hi)) x = lo + 0.5 * width;
        }
        const double fx = f(x);
        if (fx == 0.0 || std::abs(fx) <= opt.f_tol) return x;
        if (std::signbit(fx) == std::signbit(flo)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        force_bisect = (hi - lo) > 0.5 * width;
        if (hi - lo <= opt.x_tol * std::max(1.0, std::abs(x))) break;
    }
    return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

/// Expands [lo, hi] geometrically about its midpoint until g(lo) < target < g(hi)
/// for a nondecreasing g.
template <class G>
std::pair<double, double> expand_bracket(G&& g, double target, double lo = -1.0, double hi = 1.0,
                                         std::size_t max_doublings = 1100) {
    double step_lo = hi - lo;
    double step_hi = hi - lo;
    std::size_t n = 0;
    while (!(g(lo) < target) && n++ < max_doublings) {
        hi = lo;
        lo -= step_lo;
        step_lo *= 2.0;
    }
    n = 0;
    while (!(g(hi) > target) && n++ < max_doublings) {
        lo = std::max(lo, hi);
        hi += step_hi;
        step_hi *= 2.0;
    }
    if (!(g(lo) <= target && g(hi) >= target) || !std::isfinite(lo) || !std::isfinite(hi)) {
        std::ostringstream msg;
        msg << "could not bracket level " << target << " within [" << lo << ", " << hi << "]";
        throw NumericalError(msg.str());
    }
    return {lo, hi};
}

} // namespace moran
