#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "moran_lab/data_model.hpp"
#include "moran_lab/errors.hpp"
#include "moran_lab/families.hpp"
#include "moran_lab/roots.hpp"

namespace moran {

inline void check_level(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

inline double normal_quantile(double p) { return LocationFamily1D::normal().quantile(p); }

/// (1 - upper) quantile inverted from the regularized lower incomplete gamma.
inline double chi_square_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile requires 0 < p < 1");
    if (!(dof > 0.0)) throw DomainError("chi-square degrees of freedom must be positive");
    auto cdf = [dof](double q) { return q <= 0.0 ? 0.0 : boost::math::gamma_p(0.5 * dof, 0.5 * q); };
    auto [lo, hi] = expand_bracket(cdf, p, 0.0, std::max(1.0, 2.0 * dof));
    return solve_bracketed([&](double q) { return cdf(q) - p; }, lo, hi);
}

enum class TestKind { region_indicator, np_randomized, blended, two_sided_z, chi_square };

inline const char* to_string(TestKind k) {
    switch (k) {
    case TestKind::region_indicator: return "region_indicator";
    case TestKind::np_randomized: return "np_randomized";
    case TestKind::blended: return "blended";
    case TestKind::two_sided_z: return "two_sided_z";
    case TestKind::chi_square: return "chi_square";
    }
    return "?";
}

/// Scalar split test: reject iff (x1 > a and x2 > b1) or (x1 < a and x2 < b2).
struct MoranParams1D {
    double a;
    double b1;
    double b2;
    double alpha;
};

/// d-dimensional split test on n observations, first m used for direction.
struct MoranParamsD {
    std::size_t d;
    std::size_t m;
    std::size_t n;
    double threshold;  // D
    double alpha;
};

/// A test function x -> [0, 1] over data of a fixed shape. Immutable; copies
/// share the evaluator.
class Test {
public:
    using Evaluator = std::function<double(std::span<const double>)>;

    Test(TestKind kind, std::string label, DataShape shape, Evaluator eval)
        : kind_(kind), label_(std::move(label)), shape_(shape),
          eval_(std::make_shared<const Evaluator>(std::move(eval))) {}

    double operator()(std::span<const double> x) const {
        if (x.size() != shape_.size()) {
            throw InputError("test '" + label_ + "' expects " + std::to_string(shape_.size()) + " values, got " +
                             std::to_string(x.size()));
        }
        return (*eval_)(x);
    }

    double evaluate_unchecked(std::span<const double> x) const { return (*eval_)(x); }

    TestKind kind() const noexcept { return kind_; }
    const std::string& label() const noexcept { return label_; }
    DataShape shape() const noexcept { return shape_; }
    bool gaussian_only() const noexcept { return gaussian_only_; }

    /// Resolved thresholds in construction order, for audit output.
    const std::vector<std::pair<std::string, double>>& thresholds() const noexcept { return thresholds_; }

    std::optional<double> threshold(const std::string& name) const {
        for (const auto& [k, v] : thresholds_) if (k == name) return v;
        return std::nullopt;
    }

    const std::optional<MoranParams1D>& split_params() const noexcept { return split_; }

    Test& set_threshold(std::string name, double value) {
        thresholds_.emplace_back(std::move(name), value);
        return *this;
    }
    Test& set_gaussian_only() {
        gaussian_only_ = true;
        return *this;
    }
    Test& set_split_params(const MoranParams1D& p) {
        split_ = p;
        return *this;
    }
    Test& set_label(std::string label) {
        label_ = std::move(label);
        return *this;
    }

private:
    TestKind kind_;
    std::string label_;
    DataShape shape_;
    std::shared_ptr<const Evaluator> eval_;
    std::vector<std::pair<std::string, double>> thresholds_;
    std::optional<MoranParams1D> split_;
    bool gaussian_only_ = false;
};

/// Thresholds b1 (upper) and b2 (lower) of the one-sided second stage.
inline MoranParams1D split_params(double a, double alpha, const LocationFamily1D& null_family2) {
    check_level(alpha);
    if (!std::isfinite(a)) throw InputError("split threshold must be finite");
    return {a, null_family2.quantile(1.0 - alpha), null_family2.quantile(alpha), alpha};
}

inline Test split_test(const MoranParams1D& p, std::string label) {
    Test t(TestKind::region_indicator, std::move(label), DataShape{2, 1}, [p](std::span<const double> x) {
        return ((x[0] > p.a && x[1] > p.b1) || (x[0] < p.a && x[1] < p.b2)) ? 1.0 : 0.0;
    });
    t.set_threshold("a", p.a).set_threshold("b1", p.b1).set_threshold("b2", p.b2).set_split_params(p);
    return t;
}

/// Moran's single-split test on the statistic pair (x1, x2).
inline Test moran_1d(double a, double alpha, const LocationFamily1D& null_family2) {
    return split_test(split_params(a, alpha, null_family2), "moran_1d");
}

/// Same rejection shape as moran_1d with the split moved to zeta.
inline Test phi_plus(double zeta, double alpha, const LocationFamily1D& null_family2) {
    return split_test(split_params(zeta, alpha, null_family2), "phi_plus");
}

/// Two-sided Z test on total_n unit-variance scalar observations.
inline Test z_two_sided(double alpha, std::size_t total_n) {
    check_level(alpha);
    if (total_n < 1) throw DomainError("total_n must be at least 1");
    const double z = normal_quantile(1.0 - 0.5 * alpha);
    const double root_n = std::sqrt(static_cast<double>(total_n));
    Test t(TestKind::two_sided_z, "z_two_sided", DataShape{total_n, 1}, [z, root_n, total_n](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v;
        return std::abs(s / static_cast<double>(total_n)) * root_n > z ? 1.0 : 0.0;
    });
    t.set_threshold("z", z).set_gaussian_only();
    return t;
}

/// One-sided Z test in direction sign(direction). Not regular: power vanishes
/// on the far side.
inline Test z_one_sided(double alpha, std::size_t total_n, int direction = 1) {
    check_level(alpha);
    if (total_n < 1) throw DomainError("total_n must be at least 1");
    if (direction == 0) throw DomainError("direction must be nonzero");
    const double z = normal_quantile(1.0 - alpha);
    const double sign = direction > 0 ? 1.0 : -1.0;
    const double root_n = std::sqrt(static_cast<double>(total_n));
    Test t(TestKind::region_indicator, "z_one_sided", DataShape{total_n, 1},
           [z, sign, root_n, total_n](std::span<const double> x) {
               double s = 0.0;
               for (double v : x) s += v;
               return sign * s / static_cast<double>(total_n) * root_n > z ? 1.0 : 0.0;
           });
    t.set_threshold("z", z).set_threshold("direction", sign).set_gaussian_only();
    return t;
}

/// Projection threshold D = z_{1-alpha} / sqrt(n - m). Given the first-stage
/// mean, the projected second-stage mean is N(0, 1/(n - m)) under the null.
inline MoranParamsD moran_d_params(double alpha, std::size_t m, std::size_t n, std::size_t d) {
    check_level(alpha);
    if (d < 1) throw DomainError("dimension must be at least 1");
    if (!(m >= 1 && m < n)) throw DomainError("sub-sample sizes must satisfy 1 <= m < n");
    return {d, m, n, normal_quantile(1.0 - alpha) / std::sqrt(static_cast<double>(n - m)), alpha};
}

/// Split statistic (xbar1 . xbar2) / |xbar1|; nullopt when xbar1 = 0.
inline std::optional<double> split_statistic(std::span<const double> x, std::size_t m, std::size_t n, std::size_t d) {
    double dot = 0.0;
    double norm1 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) s1 += x[i * d + j];
        for (std::size_t i = m; i < n; ++i) s2 += x[i * d + j];
        s1 /= static_cast<double>(m);
        s2 /= static_cast<double>(n - m);
        dot += s1 * s2;
        norm1 += s1 * s1;
    }
    if (norm1 == 0.0) return std::nullopt;
    return dot / std::sqrt(norm1);
}

/// Moran's test for N(theta, I_d) data: reject iff xbar1 != 0 and the
/// projection of xbar2 on the direction of xbar1 exceeds D.
inline Test moran_gaussian_d(double alpha, std::size_t m, std::size_t n, std::size_t d) {
    const MoranParamsD p = moran_d_params(alpha, m, n, d);
    Test t(TestKind::region_indicator, "moran_gaussian_d", DataShape{n, d}, [p](std::span<const double> x) {
        auto stat = split_statistic(x, p.m, p.n, p.d);
        return (stat && *stat > p.threshold) ? 1.0 : 0.0;
    });
    t.set_threshold("D", p.threshold).set_gaussian_only();
    return t;
}

/// Chi-square test: reject iff n |xbar|^2 > q_{1-alpha}(d).
inline Test chi_square_d(double alpha, std::size_t n, std::size_t d) {
    check_level(alpha);
    if (d < 1 || n < 1) throw DomainError("chi-square test needs n >= 1 and d >= 1");
    const double q = chi_square_quantile(1.0 - alpha, static_cast<double>(d));
    Test t(TestKind::chi_square, "chi_square_d", DataShape{n, d}, [q, n, d](std::span<const double> x) {
        double stat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += x[i * d + j];
            s /= static_cast<double>(n);
            stat += s * s;
        }
        return static_cast<double>(n) * stat > q ? 1.0 : 0.0;
    });
    t.set_threshold("q", q).set_gaussian_only();
    return t;
}

inline double euclidean_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

/// min{1, 1{|x|<zeta} np_star(x) zeta/(1+zeta) + 1{|x|>eta} base(x) + 1/eta}.
inline double blend_value(double norm, double np_value, double base_value, double zeta, double eta) {
    double v = 1.0 / eta;
    if (norm < zeta) v += np_value * zeta / (1.0 + zeta);
    if (norm > eta) v += base_value;
    return std::min(1.0, v);
}

/// Test equal to the NP test inside radius zeta, the base test outside
/// radius eta, plus a floor of 1/eta.
inline Test blended(const Test& base, const Test& np_star, double zeta, double eta) {
    if (!(zeta > 0.0) || !(eta > 0.0) || !std::isfinite(zeta) || !std::isfinite(eta)) {
        throw DomainError("blend radii zeta and eta must be positive and finite");
    }
    if (!(base.shape() == np_star.shape())) throw InputError("blend components must share a data shape");
    Test t(TestKind::blended, "blend(" + base.label() + ")", base.shape(),
           [base, np_star, zeta, eta](std::span<const double> x) {
               const double r = euclidean_norm(x);
               const double np_value = r < zeta ? np_star.evaluate_unchecked(x) : 0.0;
               const double base_value = r > eta ? base.evaluate_unchecked(x) : 0.0;
               return blend_value(r, np_value, base_value, zeta, eta);
           });
    t.set_threshold("zeta", zeta).set_threshold("eta", eta);
    if (base.gaussian_only() || np_star.gaussian_only()) t.set_gaussian_only();
    return t;
}

/// Two acceptance-region points whose midpoint is rejected by the d-dim
/// Moran test (n = 2, m = 1): the acceptance region is not convex.
struct ConvexityCounterexample {
    std::vector<double> u1, v1, u2, v2;
    std::array<double, 2> endpoint_statistics;
    double midpoint_statistic;
    double threshold;
    double min_margin_under_perturbation = 0.0;  // filled by perturbation_sweep
};

inline double projection_statistic(std::span<const double> u, std::span<const double> v) {
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    return dot / euclidean_norm(u);
}

inline ConvexityCounterexample convexity_counterexample(double threshold, double delta, std::size_t d) {
    if (d < 2) throw DomainError("convexity counterexample needs d >= 2");
    if (!(delta > 1.0 && delta < std::numbers::sqrt2)) throw DomainError("delta must lie in (1, sqrt(2))");
    if (!(threshold > 0.0)) throw DomainError("threshold D must be positive");
    ConvexityCounterexample c;
    c.threshold = threshold;
    c.u1.assign(d, 0.0);
    c.u2.assign(d, 0.0);
    c.v1.assign(d, 0.0);
    c.u1[0] = c.u1[1] = c.u2[0] = 1.0 / std::numbers::sqrt2;
    c.u2[1] = -1.0 / std::numbers::sqrt2;
    c.v1[0] = delta * threshold;
    c.v2 = c.v1;
    c.endpoint_statistics = {projection_statistic(c.u1, c.v1), projection_statistic(c.u2, c.v2)};
    std::vector<double> um(d), vm(d);
    for (std::size_t i = 0; i < d; ++i) {
        um[i] = 0.5 * (c.u1[i] + c.u2[i]);
        vm[i] = 0.5 * (c.v1[i] + c.v2[i]);
    }
    c.midpoint_statistic = projection_statistic(um, vm);
    return c;
}

/// Perturbs all four points by random vectors of norm `size` (trials times)
/// and records the smallest margin of the three strict inequalities.
/// A positive result means every trial kept both endpoints accepted and the
/// midpoint rejected.
inline double perturbation_sweep(ConvexityCounterexample& c, double size, std::size_t trials, RandomStream& rng) {
    const std::size_t d = c.u1.size();
    auto jitter = [&](const std::vector<double>& p) {
        std::vector<double> dir(d);
        for (double& v : dir) v = rng.standard_normal();
        const double r = euclidean_norm(dir);
        auto out = p;
        for (std::size_t i = 0; i < d; ++i) out[i] += size * dir[i] / r;
        return out;
    };
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
        const auto u1 = jitter(c.u1), v1 = jitter(c.v1), u2 = jitter(c.u2), v2 = jitter(c.v2);
        std::vector<double> um(d), vm(d);
        for (std::size_t i = 0; i < d; ++i) {
            um[i] = 0.5 * (u1[i] + u2[i]);
            vm[i] = 0.5 * (v1[i] + v2[i]);
        }
        margin = std::min({margin, c.threshold - projection_statistic(u1, v1),
                           c.threshold - projection_statistic(u2, v2), projection_statistic(um, vm) - c.threshold});
    }
    c.min_margin_under_perturbation = margin;
    return margin;
}

} // namespace moran
