#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "moran_lab/errors.hpp"
#include "moran_lab/random.hpp"
#include "moran_lab/roots.hpp"

namespace moran {

/// Shift parameter theta. One component in the scalar models, d in the
/// d-dimensional Gaussian model.
class Shift {
public:
    Shift(double theta) : components_{theta} { check(); }  // NOLINT: implicit on purpose
    explicit Shift(std::vector<double> components) : components_(std::move(components)) { check(); }

    static Shift zero(std::size_t dim) { return Shift(std::vector<double>(dim, 0.0)); }

    /// r * e_axis in dimension `dim`.
    static Shift axis(std::size_t dim, std::size_t axis, double r = 1.0) {
        std::vector<double> c(dim, 0.0);
        c.at(axis) = r;
        return Shift(std::move(c));
    }

    std::size_t dim() const noexcept { return components_.size(); }
    double operator[](std::size_t i) const { return components_[i]; }
    std::span<const double> components() const noexcept { return components_; }

    double norm() const {
        double s = 0.0;
        for (double c : components_) s += c * c;
        return std::sqrt(s);
    }

    bool is_zero() const {
        for (double c : components_) if (c != 0.0) return false;
        return true;
    }

    Shift scaled(double r) const {
        auto c = components_;
        for (double& v : c) v *= r;
        return Shift(std::move(c));
    }

    friend bool operator==(const Shift&, const Shift&) = default;

private:
    void check() const {
        if (components_.empty()) throw InputError("shift must have at least one component");
        for (double c : components_) {
            if (!std::isfinite(c)) throw InputError("shift components must be finite");
        }
    }

    std::vector<double> components_;
};

enum class FamilyKind { normal, laplace, cauchy, logistic, student_t };

/// Base law of a noise variate U on the real line; observations are U + theta.
/// All built-in densities are even, continuous and strictly positive.
class LocationFamily1D {
public:
    static LocationFamily1D normal() { return LocationFamily1D(FamilyKind::normal, 0.0); }
    static LocationFamily1D laplace() { return LocationFamily1D(FamilyKind::laplace, 0.0); }
    static LocationFamily1D cauchy() { return LocationFamily1D(FamilyKind::cauchy, 0.0); }
    static LocationFamily1D logistic() { return LocationFamily1D(FamilyKind::logistic, 0.0); }
    static LocationFamily1D student_t(double dof) {
        if (!(dof > 0.0) || !std::isfinite(dof)) throw DomainError("student_t degrees of freedom must be positive");
        return LocationFamily1D(FamilyKind::student_t, dof);
    }

    /// Accepts "normal"/"gaussian", "laplace", "cauchy", "logistic", "student_t".
    static LocationFamily1D from_name(std::string_view name, double dof = 3.0) {
        if (name == "normal" || name == "gaussian") return normal();
        if (name == "laplace") return laplace();
        if (name == "cauchy") return cauchy();
        if (name == "logistic") return logistic();
        if (name == "student_t") return student_t(dof);
        throw DomainError("unknown family '" + std::string(name) + "'");
    }

    FamilyKind kind() const noexcept { return kind_; }
    double dof() const noexcept { return dof_; }

    std::string name() const {
        switch (kind_) {
        case FamilyKind::normal: return "normal";
        case FamilyKind::laplace: return "laplace";
        case FamilyKind::cauchy: return "cauchy";
        case FamilyKind::logistic: return "logistic";
        case FamilyKind::student_t: {
            std::ostringstream s;
            s << "student_t(" << dof_ << ")";
            return s.str();
        }
        }
        return "?";
    }

    bool is_standard_normal() const noexcept { return kind_ == FamilyKind::normal; }
    bool is_symmetric() const noexcept { return true; }

    double log_density(double x) const {
        const double ax = std::abs(x);
        switch (kind_) {
        case FamilyKind::normal:
            return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
        case FamilyKind::laplace:
            return -ax - std::numbers::ln2;
        case FamilyKind::cauchy:
            return -std::log(std::numbers::pi) - log1p_square(ax);
        case FamilyKind::logistic:
            return -ax - 2.0 * std::log1p(std::exp(-ax));
        case FamilyKind::student_t:
            return t_log_norm() - 0.5 * (dof_ + 1.0) * log1p_square(ax / std::sqrt(dof_));
        }
        return 0.0;
    }

    double density(double x) const {
        if (!std::isfinite(x)) throw InputError("density evaluated at non-finite x");
        return std::exp(log_density(x));
    }

    double shifted_density(double theta, double x) const {
        if (!std::isfinite(theta)) throw InputError("shift must be finite");
        return density(x - theta);
    }

    /// Upper bound M on the density (attained at the mode 0).
    double density_bound() const { return std::exp(log_density(0.0)); }

    double cdf(double x) const {
        if (std::isnan(x)) throw InputError("cdf evaluated at NaN");
        switch (kind_) {
        case FamilyKind::normal:
            return 0.5 * std::erfc(-x / std::numbers::sqrt2);
        case FamilyKind::laplace:
            return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
        case FamilyKind::cauchy:
            if (x == 0.0) return 0.5;
            return x < 0.0 ? std::atan(-1.0 / x) / std::numbers::pi : 1.0 - std::atan(1.0 / x) / std::numbers::pi;
        case FamilyKind::logistic:
            return x < 0.0 ? std::exp(x) / (1.0 + std::exp(x)) : 1.0 / (1.0 + std::exp(-x));
        case FamilyKind::student_t: {
            if (std::isinf(x)) return x < 0.0 ? 0.0 : 1.0;
            const double tail = 0.5 * boost::math::ibeta(0.5 * dof_, 0.5, dof_ / (dof_ + x * x));
            return x < 0.0 ? tail : 1.0 - tail;
        }
        }
        return 0.0;
    }

    /// t with cdf(t) = p. The cdf is strictly increasing, so this is also the
    /// infimum {t : cdf(t) >= p}.
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile requires 0 < p < 1");
        auto g = [this](double t) { return cdf(t); };
        auto [lo, hi] = expand_bracket(g, p);
        return solve_bracketed([&](double t) { return cdf(t) - p; }, lo, hi);
    }

    /// One draw of U (unshifted).
    double sample(RandomStream& rng) const {
        switch (kind_) {
        case FamilyKind::normal:
            return rng.standard_normal();
        case FamilyKind::laplace: {
            const double u = rng.uniform_open();
            return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
        }
        case FamilyKind::cauchy:
            return std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
        case FamilyKind::logistic: {
            const double u = rng.uniform_open();
            return std::log(u / (1.0 - u));
        }
        case FamilyKind::student_t: {
            const double z = rng.standard_normal();
            const double chi2 = 2.0 * rng.gamma(0.5 * dof_);
            return z / std::sqrt(chi2 / dof_);
        }
        }
        return 0.0;
    }

    friend bool operator==(const LocationFamily1D&, const LocationFamily1D&) = default;

private:
    LocationFamily1D(FamilyKind kind, double dof) : kind_(kind), dof_(dof) {}

    // log(1 + y^2) without overflowing y^2 for huge y.
    static double log1p_square(double y) {
        return y > 1e150 ? 2.0 * std::log(y) : std::log1p(y * y);
    }

    double t_log_norm() const {
        return std::lgamma(0.5 * (dof_ + 1.0)) - std::lgamma(0.5 * dof_) - 0.5 * std::log(dof_ * std::numbers::pi);
    }

    FamilyKind kind_;
    double dof_;
};

/// n iid draws of U + theta.
inline std::vector<double> sample(const LocationFamily1D& family, double theta, RandomStream& rng, std::size_t n) {
    if (!std::isfinite(theta)) throw InputError("shift must be finite");
    std::vector<double> out(n);
    for (auto& v : out) v = family.sample(rng) + theta;
    return out;
}

/// Standard d-dimensional Gaussian noise (identity covariance).
struct GaussianFamilyD {
    explicit GaussianFamilyD(std::size_t d) : dim(d) {
        if (d < 1) throw DomainError("dimension must be at least 1");
    }

    std::size_t dim;

    std::vector<double> sample(const Shift& theta, RandomStream& rng) const {
        if (theta.dim() != dim) throw InputError("shift dimension does not match family dimension");
        std::vector<double> out(dim);
        for (std::size_t i = 0; i < dim; ++i) out[i] = rng.standard_normal() + theta[i];
        return out;
    }
};

} // namespace moran
