#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "moran_lab/data_model.hpp"
#include "moran_lab/errors.hpp"
#include "moran_lab/hypothesis_tests.hpp"
#include "moran_lab/parallel.hpp"

namespace moran {

enum class PowerMethod { mc, quadrature, closed_form };

inline const char* to_string(PowerMethod m) {
    switch (m) {
    case PowerMethod::mc: return "mc";
    case PowerMethod::quadrature: return "quadrature";
    case PowerMethod::closed_form: return "closed_form";
    }
    return "?";
}

/// Estimate of beta(theta) = E_theta[phi(X)]. std_error is zero unless method is mc.
struct PowerEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    PowerMethod method = PowerMethod::mc;
};

inline constexpr std::size_t kMinMonteCarloSamples = 1000;

/// Throws ConfigError when the test cannot be applied to data from `model`.
inline void check_compatible(const Test& test, const DataModel& model) {
    if (!(test.shape() == model.shape())) {
        throw ConfigError("test." + test.label(), "data shape of test does not match model " + model.id());
    }
    if (test.gaussian_only() && !model.is_gaussian()) {
        throw ConfigError("test." + test.label(), "test is only valid for unit-variance Gaussian data, model is " +
                                                      model.id());
    }
}

/// Monte Carlo power. Randomized tests contribute their fractional values.
/// Deterministic in `seed` and independent of the worker count.
inline PowerEstimate power_mc(const Test& test, const DataModel& model, const Shift& theta, std::size_t n_samples,
                              std::uint64_t seed) {
    if (n_samples < kMinMonteCarloSamples) {
        throw DomainError("n_samples must be at least " + std::to_string(kMinMonteCarloSamples));
    }
    model.check_shift(theta);
    check_compatible(test, model);

    const std::size_t width = model.shape().size();
    std::vector<double> partial((n_samples + kBlockSize - 1) / kBlockSize, 0.0);
    for_each_block(seed, n_samples, [&](RandomStream& rng, std::size_t b, std::size_t begin, std::size_t count) {
        std::vector<double> x(width);
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            model.sample(theta, rng, x);
            const double v = test.evaluate_unchecked(x);
            if (!(v >= 0.0 && v <= 1.0)) {
                std::ostringstream msg;
                msg << "test '" << test.label() << "' returned " << v << " at sample " << begin + i << " (x =";
                for (double c : x) msg << ' ' << c;
                msg << ")";
                throw NumericalError(msg.str());
            }
            s += v;
        }
        partial[b] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;

    const double n = static_cast<double>(n_samples);
    const double value = total / n;
    return {value, std::sqrt(value * (1.0 - value) / n), n_samples, PowerMethod::mc};
}

/// Exact power of a scalar split test, using independence of X1 and X2:
/// (1 - F1(a - t))(1 - F2(b1 - t)) + F1(a - t) F2(b2 - t).
inline PowerEstimate power_moran_1d_closed(const MoranParams1D& p, const PairModel& model, double theta) {
    const auto& f1 = model.first;
    const auto& f2 = model.second;
    // Built-in families are even, so 1 - F(t) = F(-t); this keeps precision in the tails.
    const double upper1 = f1.cdf(theta - p.a);
    const double lower1 = f1.cdf(p.a - theta);
    const double upper2 = f2.cdf(theta - p.b1);
    const double lower2 = f2.cdf(p.b2 - theta);
    return {upper1 * upper2 + lower1 * lower2, 0.0, 0, PowerMethod::closed_form};
}

/// Closed form when the test is a scalar split test on a pair model, else nullopt.
inline std::optional<PowerEstimate> power_closed_if_available(const Test& test, const DataModel& model,
                                                              const Shift& theta) {
    const auto* pair = model.as_pair();
    if (!pair || !test.split_params()) return std::nullopt;
    model.check_shift(theta);
    return power_moran_1d_closed(*test.split_params(), *pair, theta[0]);
}

struct PowerCurve {
    std::vector<Shift> theta_grid;
    std::vector<PowerEstimate> estimates;
    std::string test_id;
    std::string family_id;
    std::uint64_t seed = 0;
};

enum class CurveMethod { mc, closed_form_if_available };

/// Point i uses seed derive_seed(seed, {i}).
inline PowerCurve power_curve(const Test& test, const DataModel& model, const std::vector<Shift>& theta_grid,
                              std::size_t n_samples, std::uint64_t seed, CurveMethod method = CurveMethod::mc) {
    PowerCurve curve{theta_grid, {}, test.label(), model.id(), seed};
    curve.estimates.reserve(theta_grid.size());
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        try {
            std::optional<PowerEstimate> est;
            if (method == CurveMethod::closed_form_if_available) est = power_closed_if_available(test, model, theta_grid[i]);
            if (!est) est = power_mc(test, model, theta_grid[i], n_samples, derive_seed(seed, {i}));
            curve.estimates.push_back(*est);
        } catch (const NumericalError& e) {
            throw NumericalError("theta grid index " + std::to_string(i) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError("theta grid index " + std::to_string(i) + ": " + e.what());
        }
    }
    return curve;
}

struct DominanceRow {
    Shift theta;
    PowerEstimate a;
    PowerEstimate b;
    double gap;          // a - b
    double se_combined;  // sqrt(se_a^2 + se_b^2)
};

struct DominanceReport {
    bool ge_everywhere = true;
    std::vector<Shift> strict_points;
    std::vector<DominanceRow> rows;
};

/// Compares beta_a and beta_b on a grid with common random numbers and
/// 3-SE buffers. Evidence at grid resolution only.
inline DominanceReport dominance_scan(const Test& test_a, const Test& test_b, const DataModel& model,
                                      const std::vector<Shift>& theta_grid, std::size_t n_samples,
                                      std::uint64_t seed) {
    DominanceReport report;
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        const auto s = derive_seed(seed, {i});
        const auto a = power_mc(test_a, model, theta_grid[i], n_samples, s);
        const auto b = power_mc(test_b, model, theta_grid[i], n_samples, s);
        const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
        const double gap = a.value - b.value;
        if (gap < -3.0 * se) report.ge_everywhere = false;
        if (gap > 3.0 * se) report.strict_points.push_back(theta_grid[i]);
        report.rows.push_back({theta_grid[i], a, b, gap, se});
    }
    return report;
}

struct RegularityRow {
    std::size_t direction;
    double radius;
    PowerEstimate power;
};

struct RegularityReport {
    bool limits_to_one = false;
    double min_power_at_max_radius = 1.0;
    double epsilon = 0.01;
    std::vector<Shift> directions;
    std::vector<RegularityRow> rows;
};

/// count radii geometrically spaced on [lo, hi].
inline std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi > lo) || count < 2) throw DomainError("log_spaced needs 0 < lo < hi and count >= 2");
    std::vector<double> r(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) r[i] = lo * std::exp(step * static_cast<double>(i));
    r.back() = hi;
    return r;
}

/// +e_i and -e_i for every axis.
inline std::vector<Shift> axis_directions(std::size_t dim) {
    std::vector<Shift> out;
    for (std::size_t i = 0; i < dim; ++i) {
        out.push_back(Shift::axis(dim, i, 1.0));
        out.push_back(Shift::axis(dim, i, -1.0));
    }
    return out;
}

/// Power along rays theta = r u. limits_to_one iff the power at the largest
/// radius exceeds 1 - epsilon in every direction.
inline RegularityReport regularity_check(const Test& test, const DataModel& model, const std::vector<double>& radius_grid,
                                         const std::vector<Shift>& directions, std::size_t n_samples,
                                         std::uint64_t seed, double epsilon = 0.01) {
    if (radius_grid.empty() || directions.empty()) throw DomainError("regularity check needs radii and directions");
    for (std::size_t i = 1; i < radius_grid.size(); ++i) {
        if (!(radius_grid[i] > radius_grid[i - 1])) throw DomainError("radius grid must be increasing");
    }
    RegularityReport report;
    report.epsilon = epsilon;
    for (std::size_t k = 0; k < directions.size(); ++k) {
        const double len = directions[k].norm();
        if (len == 0.0) throw DomainError("regularity direction must be nonzero");
        const Shift unit = directions[k].scaled(1.0 / len);
        report.directions.push_back(unit);
        for (std::size_t j = 0; j < radius_grid.size(); ++j) {
            const auto est = power_mc(test, model, unit.scaled(radius_grid[j]), n_samples, derive_seed(seed, {k, j}));
            report.rows.push_back({k, radius_grid[j], est});
            if (j + 1 == radius_grid.size()) {
                report.min_power_at_max_radius = std::min(report.min_power_at_max_radius, est.value);
            }
        }
    }
    report.limits_to_one = report.min_power_at_max_radius > 1.0 - epsilon;
    return report;
}

} // namespace moran
