#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include "moran_lab/errors.hpp"
#include "moran_lab/families.hpp"
#include "moran_lab/random.hpp"

namespace moran {

/// Layout of one data point: n_obs observations of `dim` coordinates each,
/// stored observation-major (x[i * dim + j]).
struct DataShape {
    std::size_t n_obs = 0;
    std::size_t dim = 0;

    std::size_t size() const noexcept { return n_obs * dim; }
    friend bool operator==(const DataShape&, const DataShape&) = default;
};

/// Two independent scalar statistics X_i = U_i + theta with U_i ~ f_i.
struct PairModel {
    LocationFamily1D first;
    LocationFamily1D second;
};

/// n iid observations N(theta, I_d).
struct GaussianSampleModel {
    std::size_t dim;
    std::size_t n;
};

/// Data-generating law of the location experiment: produces X(theta) and the
/// log likelihood ratio against theta = 0.
class DataModel {
public:
    static DataModel pair(LocationFamily1D first, LocationFamily1D second) {
        return DataModel(PairModel{first, second});
    }

    static DataModel gaussian(std::size_t dim, std::size_t n) {
        if (dim < 1) throw DomainError("dimension must be at least 1");
        if (n < 1) throw DomainError("sample size must be at least 1");
        return DataModel(GaussianSampleModel{dim, n});
    }

    DataShape shape() const {
        if (as_pair()) return {2, 1};
        const auto& g = std::get<GaussianSampleModel>(model_);
        return {g.n, g.dim};
    }

    /// Dimension of theta.
    std::size_t parameter_dim() const { return as_pair() ? 1 : std::get<GaussianSampleModel>(model_).dim; }

    const PairModel* as_pair() const noexcept { return std::get_if<PairModel>(&model_); }
    const GaussianSampleModel* as_gaussian() const noexcept { return std::get_if<GaussianSampleModel>(&model_); }

    /// True when every coordinate is unit-variance Gaussian noise.
    bool is_gaussian() const {
        if (auto p = as_pair()) return p->first.is_standard_normal() && p->second.is_standard_normal();
        return true;
    }

    std::string id() const {
        if (auto p = as_pair()) return "pair(" + p->first.name() + "," + p->second.name() + ")";
        const auto& g = std::get<GaussianSampleModel>(model_);
        return "gaussian(d=" + std::to_string(g.dim) + ",n=" + std::to_string(g.n) + ")";
    }

    void check_shift(const Shift& theta) const {
        if (theta.dim() != parameter_dim()) {
            throw InputError("shift has " + std::to_string(theta.dim()) + " components, model " + id() + " expects " +
                             std::to_string(parameter_dim()));
        }
    }

    /// Writes one draw of X(theta) into `out` (size shape().size()).
    void sample(const Shift& theta, RandomStream& rng, std::span<double> out) const {
        if (auto p = as_pair()) {
            out[0] = p->first.sample(rng) + theta[0];
            out[1] = p->second.sample(rng) + theta[0];
            return;
        }
        const auto& g = std::get<GaussianSampleModel>(model_);
        for (std::size_t i = 0; i < g.n; ++i) {
            for (std::size_t j = 0; j < g.dim; ++j) out[i * g.dim + j] = rng.standard_normal() + theta[j];
        }
    }

    /// log l_theta(x) - log l_0(x), formed from log-density differences.
    double log_likelihood_ratio(const Shift& theta, std::span<const double> x) const {
        if (auto p = as_pair()) {
            const double t = theta[0];
            return (p->first.log_density(x[0] - t) - p->first.log_density(x[0])) +
                   (p->second.log_density(x[1] - t) - p->second.log_density(x[1]));
        }
        const auto& g = std::get<GaussianSampleModel>(model_);
        double dot = 0.0;
        double sq = 0.0;
        for (std::size_t j = 0; j < g.dim; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < g.n; ++i) col += x[i * g.dim + j];
            dot += theta[j] * col;
            sq += theta[j] * theta[j];
        }
        return dot - 0.5 * static_cast<double>(g.n) * sq;
    }

private:
    explicit DataModel(std::variant<PairModel, GaussianSampleModel> m) : model_(std::move(m)) {}

    std::variant<PairModel, GaussianSampleModel> model_;
};

} // namespace moran
