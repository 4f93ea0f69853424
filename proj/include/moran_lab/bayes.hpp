#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moran_lab/data_model.hpp"
#include "moran_lab/errors.hpp"
#include "moran_lab/hypothesis_tests.hpp"
#include "moran_lab/parallel.hpp"
#include "moran_lab/power.hpp"

namespace moran {

struct PriorAtom {
    Shift theta;
    double weight;
};

/// Finite discrete probability measure on the alternative (theta != 0).
class Prior {
public:
    explicit Prior(std::vector<PriorAtom> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw DomainError("prior needs at least one atom");
        double total = 0.0;
        for (const auto& a : atoms_) {
            if (!(a.weight > 0.0) || !std::isfinite(a.weight)) throw DomainError("prior weights must be positive");
            if (a.theta.is_zero()) throw DomainError("prior atoms must lie off the null (theta != 0)");
            if (a.theta.dim() != atoms_.front().theta.dim()) throw DomainError("prior atoms must share a dimension");
            total += a.weight;
        }
        if (std::abs(total - 1.0) > 1e-12) throw DomainError("prior weights must sum to 1");
    }

    static Prior point_mass(Shift theta) { return Prior({{std::move(theta), 1.0}}); }

    /// Equal mass on +theta and -theta.
    static Prior symmetric_pair(const Shift& theta) { return Prior({{theta, 0.5}, {theta.scaled(-1.0), 0.5}}); }

    const std::vector<PriorAtom>& atoms() const noexcept { return atoms_; }
    std::size_t dim() const noexcept { return atoms_.front().theta.dim(); }

private:
    std::vector<PriorAtom> atoms_;
};

/// log of sum_i w_i l_{theta_i}(x) / l_0(x), with the max-shift trick.
inline double log_likelihood_ratio(const Prior& prior, const DataModel& model, std::span<const double> x) {
    double terms_max = -std::numeric_limits<double>::infinity();
    double small_buf[8];
    std::vector<double> big;
    const auto& atoms = prior.atoms();
    double* terms = small_buf;
    if (atoms.size() > 8) {
        big.resize(atoms.size());
        terms = big.data();
    }
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        terms[i] = std::log(atoms[i].weight) + model.log_likelihood_ratio(atoms[i].theta, x);
        terms_max = std::max(terms_max, terms[i]);
    }
    if (!std::isfinite(terms_max)) return terms_max;
    double s = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) s += std::exp(terms[i] - terms_max);
    return terms_max + std::log(s);
}

inline double likelihood_ratio(const Prior& prior, const DataModel& model, std::span<const double> x) {
    if (prior.dim() != model.parameter_dim()) throw InputError("prior dimension does not match model");
    if (x.size() != model.shape().size()) throw InputError("data point has the wrong size for model " + model.id());
    return std::exp(log_likelihood_ratio(prior, model, x));
}

struct NPCalibration {
    double c_star = 0.0;
    double log_c_star = 0.0;
    double tau_star = 0.0;
    double achieved_level = 0.0;
    double achieved_level_se = 0.0;
    double alpha = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// Randomized likelihood-ratio test 1{L > C*} + tau* 1{L = C*}, compared on the log scale.
inline Test np_test(const Prior& prior, const DataModel& model, const NPCalibration& cal) {
    if (prior.dim() != model.parameter_dim()) throw InputError("prior dimension does not match model");
    const double log_c = cal.log_c_star;
    const double tau = cal.tau_star;
    Test t(TestKind::np_randomized, "np", model.shape(), [prior, model, log_c, tau](std::span<const double> x) {
        const double l = log_likelihood_ratio(prior, model, x);
        if (l > log_c) return 1.0;
        return l == log_c ? tau : 0.0;
    });
    t.set_threshold("c_star", cal.c_star).set_threshold("log_c_star", log_c).set_threshold("tau_star", tau);
    return t;
}

/// Sets C* to the empirical (1 - alpha) quantile of L under the null and
/// validates the level on an independent sample (seed path {1}).
inline NPCalibration calibrate_np(const Prior& prior, const DataModel& model, double alpha, std::size_t n_samples,
                                  std::uint64_t seed) {
    check_level(alpha);
    if (n_samples < kMinMonteCarloSamples) {
        throw DomainError("n_samples must be at least " + std::to_string(kMinMonteCarloSamples));
    }
    if (prior.dim() != model.parameter_dim()) throw InputError("prior dimension does not match model");

    std::vector<double> log_l(n_samples);
    const Shift null = Shift::zero(model.parameter_dim());
    const std::size_t width = model.shape().size();
    for_each_block(derive_seed(seed, {0}), n_samples,
                   [&](RandomStream& rng, std::size_t, std::size_t begin, std::size_t count) {
                       std::vector<double> x(width);
                       for (std::size_t i = 0; i < count; ++i) {
                           model.sample(null, rng, x);
                           log_l[begin + i] = log_likelihood_ratio(prior, model, x);
                       }
                   });
    std::sort(log_l.begin(), log_l.end());
    if (!std::isfinite(log_l.front()) || !std::isfinite(log_l.back())) {
        throw NumericalError("likelihood ratio is not finite on the null sample");
    }
    if (log_l.front() == log_l.back()) {
        throw NumericalError("trivial-test regime: likelihood ratio is constant under the null");
    }

    const double n = static_cast<double>(n_samples);
    const auto exceed_budget = static_cast<std::size_t>(std::floor(alpha * n));
    const double log_c = log_l[n_samples - exceed_budget - 1];
    const auto [eq_lo, eq_hi] = std::equal_range(log_l.begin(), log_l.end(), log_c);
    const double p_gt = static_cast<double>(log_l.end() - eq_hi) / n;
    const double p_eq = static_cast<double>(eq_hi - eq_lo) / n;

    NPCalibration cal;
    cal.log_c_star = log_c;
    cal.c_star = std::exp(log_c);
    cal.tau_star = p_eq < 1.0 / std::sqrt(n) ? 0.0 : std::clamp((alpha - p_gt) / p_eq, 0.0, 1.0);
    cal.alpha = alpha;
    cal.n_samples = n_samples;
    cal.seed = seed;

    const auto level = power_mc(np_test(prior, model, cal), model, null, n_samples, derive_seed(seed, {1}));
    cal.achieved_level = level.value;
    cal.achieved_level_se = level.std_error;
    return cal;
}

/// sum_i w_i beta(theta_i); atom i uses seed derive_seed(seed, {i}), so two
/// tests evaluated with one seed share random numbers.
inline PowerEstimate mixture_power(const Test& test, const Prior& prior, const DataModel& model, std::size_t n_samples,
                                   std::uint64_t seed) {
    PowerEstimate out{0.0, 0.0, 0, PowerMethod::mc};
    double var = 0.0;
    for (std::size_t i = 0; i < prior.atoms().size(); ++i) {
        const auto& atom = prior.atoms()[i];
        const auto est = power_mc(test, model, atom.theta, n_samples, derive_seed(seed, {i}));
        out.value += atom.weight * est.value;
        var += atom.weight * atom.weight * est.std_error * est.std_error;
        out.n_samples += est.n_samples;
    }
    out.std_error = std::sqrt(var);
    return out;
}

/// Exact mixture power of a scalar split test on a pair model.
inline PowerEstimate mixture_power_closed(const MoranParams1D& params, const Prior& prior, const PairModel& model) {
    double v = 0.0;
    for (const auto& atom : prior.atoms()) v += atom.weight * power_moran_1d_closed(params, model, atom.theta[0]).value;
    return {v, 0.0, 0, PowerMethod::closed_form};
}

// ---------------------------------------------------------------------------
// Grid oracle

struct GridSpec {
    double lo = -6.0;
    double hi = 8.0;
    std::size_t cells = 300;  // per axis
};

/// Null and mixture probabilities of the cells of a square box.
struct GridDiscretization {
    GridSpec spec;
    std::vector<double> null_mass;     // row-major, cells x cells
    std::vector<double> mixture_mass;
    double captured_null_mass = 0.0;
};

struct GridOracleResult {
    double power = 0.0;
    double level_used = 0.0;
    std::size_t full_cells = 0;
    double last_cell_fraction = 0.0;
    double threshold_ratio = 0.0;
    double captured_null_mass = 0.0;
};

namespace detail {

// P(lo < U + shift < hi) for a symmetric family, using the tail on the far side.
inline double interval_mass(const LocationFamily1D& f, double lo, double hi, double shift) {
    const double a = lo - shift;
    const double b = hi - shift;
    return a >= 0.0 ? f.cdf(-a) - f.cdf(-b) : f.cdf(b) - f.cdf(a);
}

inline std::vector<double> axis_masses(const LocationFamily1D& f, const GridSpec& g, double shift) {
    std::vector<double> m(g.cells);
    const double h = (g.hi - g.lo) / static_cast<double>(g.cells);
    for (std::size_t i = 0; i < g.cells; ++i) {
        m[i] = interval_mass(f, g.lo + h * static_cast<double>(i), g.lo + h * static_cast<double>(i + 1), shift);
    }
    return m;
}

} // namespace detail

/// Exact cell probabilities from products of marginal CDF differences.
inline GridDiscretization discretize(const Prior& prior, const DataModel& model, const GridSpec& spec) {
    const auto* pair = model.as_pair();
    if (!pair) throw DomainError("grid oracle supports the scalar pair model only");
    if (prior.dim() != 1) throw DomainError("grid oracle needs a scalar prior");
    if (spec.cells < 1 || spec.cells > 400) throw DomainError("grid must have between 1 and 400 cells per axis");
    if (!(spec.hi > spec.lo)) throw DomainError("grid box must have hi > lo");

    const std::size_t n = spec.cells;
    GridDiscretization d{spec, std::vector<double>(n * n), std::vector<double>(n * n, 0.0), 0.0};
    const auto x0 = detail::axis_masses(pair->first, spec, 0.0);
    const auto y0 = detail::axis_masses(pair->second, spec, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d.null_mass[i * n + j] = x0[i] * y0[j];
    d.captured_null_mass = std::accumulate(x0.begin(), x0.end(), 0.0) * std::accumulate(y0.begin(), y0.end(), 0.0);

    for (const auto& atom : prior.atoms()) {
        const auto x1 = detail::axis_masses(pair->first, spec, atom.theta[0]);
        const auto y1 = detail::axis_masses(pair->second, spec, atom.theta[0]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d.mixture_mass[i * n + j] += atom.weight * x1[i] * y1[j];
    }
    return d;
}

/// Most powerful level-alpha test among cell-measurable tests: cells sorted by
/// mixture/null mass ratio fill the null budget, the last one fractionally.
inline GridOracleResult greedy_np_fill(const GridDiscretization& d, double alpha) {
    check_level(alpha);
    const std::size_t n = d.null_mass.size();
    std::vector<double> ratio(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double p0 = d.null_mass[k];
        const double p1 = d.mixture_mass[k];
        ratio[k] = p0 > 0.0 ? p1 / p0 : (p1 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratio[a] > ratio[b]; });

    GridOracleResult r;
    r.captured_null_mass = d.captured_null_mass;
    double budget = alpha;
    for (std::size_t k : order) {
        const double p0 = d.null_mass[k];
        if (p0 <= budget) {
            budget -= p0;
            r.power += d.mixture_mass[k];
            ++r.full_cells;
            r.threshold_ratio = ratio[k];
            continue;
        }
        r.last_cell_fraction = budget / p0;
        r.power += r.last_cell_fraction * d.mixture_mass[k];
        r.threshold_ratio = ratio[k];
        budget = 0.0;
        break;
    }
    r.level_used = alpha - budget;
    return r;
}

/// Brute-force NP optimum on a bounded grid. Throws when the box misses more
/// than 1e-6 of the null mass.
inline GridOracleResult grid_np_oracle(const Prior& prior, const DataModel& model, const GridSpec& spec, double alpha) {
    const auto d = discretize(prior, model, spec);
    if (d.captured_null_mass < 1.0 - 1e-6) {
        throw DomainError("grid box captures only " + std::to_string(d.captured_null_mass) +
                          " of the null mass; use a larger box");
    }
    return greedy_np_fill(d, alpha);
}

// ---------------------------------------------------------------------------
// Dominating blend search

struct BlendSearchOptions {
    std::size_t n_samples = 1'000'000;
    std::size_t calibration_samples = 0;  // NP calibration and eta fit; 0 means n_samples
    int ladder_first = 2;   // zeta_n = 2^n
    int ladder_last = 12;
    double level_tol = 0.002;
    std::size_t regularity_samples = 100'000;
    std::size_t regularity_radii = 25;
    double regularity_epsilon = 0.01;
};

struct BlendRung {
    double zeta = 0.0;
    double eta = 0.0;
    double fitted_level = 0.0;     // on the cached calibration sample
    PowerEstimate level;           // fresh-sample validation
    PowerEstimate mixture_power;
    double gain = 0.0;
    double se_combined = 0.0;
    bool level_ok = false;
    bool separated = false;
    bool regular = false;
};

struct BlendSearchReport {
    enum class Status { found, no_gain, inconclusive };
    Status status = Status::inconclusive;
    std::string message;
    NPCalibration calibration;
    PowerEstimate base_power;
    PowerEstimate np_power;
    std::vector<BlendRung> rungs;
    std::optional<Test> test;
    double zeta = 0.0;
    double eta = 0.0;
    PowerEstimate level;
    double mixture_power_gain = 0.0;
    std::optional<RegularityReport> regularity;
    /// Set when a regular level-alpha blend beats the base in mixture power
    /// by more than 3 combined SE: the base is not regularly admissible.
    bool base_not_regularly_admissible = false;
};

inline const char* to_string(BlendSearchReport::Status s) {
    switch (s) {
    case BlendSearchReport::Status::found: return "found";
    case BlendSearchReport::Status::no_gain: return "no_gain";
    case BlendSearchReport::Status::inconclusive: return "inconclusive";
    }
    return "?";
}

/// Walks zeta_n = 2^n, eta from 2 zeta upward, fitting eta by bisection so
/// the blend has level alpha, and returns the first blend that is regular
/// and beats `base` in mixture power.
inline BlendSearchReport find_dominating_blend(const Test& base, const Prior& prior, const DataModel& model,
                                               double alpha, std::uint64_t seed,
                                               const BlendSearchOptions& opt = {}) {
    check_level(alpha);
    check_compatible(base, model);
    BlendSearchReport rep;
    const std::size_t n = opt.calibration_samples ? opt.calibration_samples : opt.n_samples;
    rep.calibration = calibrate_np(prior, model, alpha, n, derive_seed(seed, {1}));
    const Test np = np_test(prior, model, rep.calibration);

    const auto power_seed = derive_seed(seed, {2});
    rep.base_power = mixture_power(base, prior, model, opt.n_samples, power_seed);
    rep.np_power = mixture_power(np, prior, model, opt.n_samples, power_seed);
    const double np_se = std::hypot(rep.base_power.std_error, rep.np_power.std_error);
    if (!(rep.np_power.value > rep.base_power.value + 3.0 * np_se)) {
        rep.status = BlendSearchReport::Status::no_gain;
        rep.message = "NP test does not beat the base in mixture power; no blend can";
        return rep;
    }

    // Null sample cache: |x|, np(x), base(x).
    const std::size_t width = model.shape().size();
    const Shift null = Shift::zero(model.parameter_dim());
    std::vector<double> norms(n), np_vals(n), base_vals(n);
    for_each_block(derive_seed(seed, {3}), n, [&](RandomStream& rng, std::size_t, std::size_t begin, std::size_t count) {
        std::vector<double> x(width);
        for (std::size_t i = 0; i < count; ++i) {
            model.sample(null, rng, x);
            norms[begin + i] = euclidean_norm(x);
            np_vals[begin + i] = np.evaluate_unchecked(x);
            base_vals[begin + i] = base.evaluate_unchecked(x);
        }
    });
    auto cached_level = [&](double zeta, double eta) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += blend_value(norms[i], np_vals[i], base_vals[i], zeta, eta);
        return s / static_cast<double>(n);
    };

    for (int k = opt.ladder_first; k <= opt.ladder_last; ++k) {
        BlendRung rung;
        rung.zeta = std::ldexp(1.0, k);
        // The level is nonincreasing in eta on a fixed sample.
        double lo = 2.0 * rung.zeta;
        double hi = 2.0 * lo;
        if (cached_level(rung.zeta, lo) < alpha) {
            rung.eta = lo;
            rung.fitted_level = cached_level(rung.zeta, lo);
            rep.rungs.push_back(rung);
            continue;
        }
        while (cached_level(rung.zeta, hi) >= alpha && hi < 1e12) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 100 && hi / lo > 1.0 + 1e-12; ++it) {
            const double mid = std::sqrt(lo * hi);
            (cached_level(rung.zeta, mid) >= alpha ? lo : hi) = mid;
        }
        rung.eta = hi;
        rung.fitted_level = cached_level(rung.zeta, hi);

        Test blend = blended(base, np, rung.zeta, rung.eta);
        rung.level = power_mc(blend, model, null, opt.n_samples, derive_seed(seed, {4, static_cast<std::uint64_t>(k)}));
        rung.level_ok = std::abs(rung.level.value - alpha) <= opt.level_tol;
        rung.mixture_power = mixture_power(blend, prior, model, opt.n_samples, power_seed);
        rung.gain = rung.mixture_power.value - rep.base_power.value;
        rung.se_combined = std::hypot(rung.mixture_power.std_error, rep.base_power.std_error);
        rung.separated = rung.gain > 3.0 * rung.se_combined;

        if (rung.level_ok && rung.separated) {
            // Rays must reach data norms well beyond eta for the base term to engage.
            const auto radii = log_spaced(1.0, 4.0 * rung.eta, opt.regularity_radii);
            auto reg = regularity_check(blend, model, radii, axis_directions(model.parameter_dim()),
                                        opt.regularity_samples, derive_seed(seed, {5, static_cast<std::uint64_t>(k)}),
                                        opt.regularity_epsilon);
            rung.regular = reg.limits_to_one;
            if (rung.regular) {
                rep.rungs.push_back(rung);
                rep.status = BlendSearchReport::Status::found;
                rep.message = "regular level-alpha blend dominates the base in mixture power";
                rep.test = blend;
                rep.zeta = rung.zeta;
                rep.eta = rung.eta;
                rep.level = rung.level;
                rep.mixture_power_gain = rung.gain;
                rep.regularity = std::move(reg);
                rep.base_not_regularly_admissible = true;
                return rep;
            }
        }
        rep.rungs.push_back(rung);
    }
    rep.status = BlendSearchReport::Status::inconclusive;
    rep.message = "ladder exhausted without a separated, regular, level-alpha blend";
    return rep;
}

// ---------------------------------------------------------------------------
// Split-point limit argument

struct PhiPlusRow {
    double zeta;
    PowerEstimate mixture_power;
    double closed_form;
};

struct PhiPlusLimitReport {
    std::vector<PhiPlusRow> rows;
    PowerEstimate base_power;
    double base_closed = 0.0;
    double limit = 0.0;             // sum_i w_i P_theta_i(X2 beyond the one-sided threshold)
    bool monotone_mc = false;
    bool monotone_closed = false;
    double gain_at_last = 0.0;
    double se_combined = 0.0;
    bool separated = false;
};

/// Mixture power of the split test as the split point moves away from `a`
/// toward the side opposite the prior. For a prior on (0, inf) the ladder
/// descends from a; for a prior on (-inf, 0) it ascends.
inline PhiPlusLimitReport phi_plus_limit_gain(const Prior& prior, const DataModel& model, double alpha, double a,
                                              const std::vector<double>& zeta_ladder, std::size_t n_samples,
                                              std::uint64_t seed) {
    const auto* pair = model.as_pair();
    if (!pair) throw DomainError("split-point limit needs the scalar pair model");
    if (prior.dim() != 1) throw DomainError("split-point limit needs a scalar prior");
    if (zeta_ladder.empty()) throw DomainError("zeta ladder must not be empty");
    const bool positive = prior.atoms().front().theta[0] > 0.0;
    for (const auto& atom : prior.atoms()) {
        if ((atom.theta[0] > 0.0) != positive) throw DomainError("prior atoms must all share one sign");
    }
    for (std::size_t i = 0; i < zeta_ladder.size(); ++i) {
        const double z = zeta_ladder[i];
        const bool side_ok = positive ? z <= a : z >= a;
        const bool order_ok = i == 0 || (positive ? z <= zeta_ladder[i - 1] : z >= zeta_ladder[i - 1]);
        if (!side_ok || !order_ok) throw DomainError("zeta ladder must move monotonically away from a, opposite the prior");
    }

    PhiPlusLimitReport rep;
    const auto base_params = split_params(a, alpha, pair->second);
    rep.base_power = mixture_power(split_test(base_params, "moran_1d"), prior, model, n_samples, seed);
    rep.base_closed = mixture_power_closed(base_params, prior, *pair).value;
    for (const auto& atom : prior.atoms()) {
        const double t = atom.theta[0];
        rep.limit += atom.weight * (positive ? pair->second.cdf(t - base_params.b1) : pair->second.cdf(base_params.b2 - t));
    }

    rep.monotone_mc = rep.monotone_closed = true;
    for (double z : zeta_ladder) {
        const auto p = split_params(z, alpha, pair->second);
        PhiPlusRow row{z, mixture_power(split_test(p, "phi_plus"), prior, model, n_samples, seed),
                       mixture_power_closed(p, prior, *pair).value};
        if (!rep.rows.empty()) {
            rep.monotone_mc = rep.monotone_mc && row.mixture_power.value >= rep.rows.back().mixture_power.value;
            rep.monotone_closed = rep.monotone_closed && row.closed_form >= rep.rows.back().closed_form;
        }
        rep.rows.push_back(row);
    }
    const auto& last = rep.rows.back().mixture_power;
    rep.gain_at_last = last.value - rep.base_power.value;
    rep.se_combined = std::hypot(last.std_error, rep.base_power.std_error);
    rep.separated = rep.gain_at_last > 3.0 * rep.se_combined;
    return rep;
}

} // namespace moran
