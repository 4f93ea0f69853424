#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "moran_lab/errors.hpp"
#include "moran_lab/families.hpp"

namespace moran {

enum class TailDirection { plus_infinity, minus_infinity };
enum class LimitClass { diverges, finite_limit, inconclusive };

inline const char* to_string(TailDirection d) { return d == TailDirection::plus_infinity ? "+inf" : "-inf"; }

inline const char* to_string(LimitClass c) {
    switch (c) {
    case LimitClass::diverges: return "diverges";
    case LimitClass::finite_limit: return "finite_limit";
    case LimitClass::inconclusive: return "inconclusive";
    }
    return "?";
}

/// Classification thresholds for the tail ratio f(x - theta) / f(x).
struct TailThresholds {
    double divergence_log = 13.815510557964274;  // log(1e6)
    double min_slope = 0.01;
    double flatness = 1e-4;
    double max_contraction = 0.75;   // |step_k| / |step_{k-1}| for a geometric tail
    double max_remainder = 0.1;      // extrapolated remaining change of the log ratio
};

struct ProbePoint {
    double x;
    double log_ratio;
};

struct ConditionReport {
    std::string family_id;
    double theta = 0.0;
    TailDirection direction = TailDirection::plus_infinity;
    std::vector<ProbePoint> probes;
    LimitClass classification = LimitClass::inconclusive;
    double limit_value = 0.0;     // meaningful for finite_limit only
    double slope_estimate = 0.0;  // d(log ratio) / d|x|
    bool ladder_shrunk = false;
};

/// Signed ladder +-2^k for k in [first, last].
inline std::vector<double> probe_ladder(TailDirection dir, int first = 4, int last = 10) {
    std::vector<double> out;
    for (int k = first; k <= last; ++k) out.push_back((dir == TailDirection::plus_infinity ? 1.0 : -1.0) * std::ldexp(1.0, k));
    return out;
}

/// Log tail ratio on a probe ladder, least-squares slope against |x|, and a
/// deterministic limit classification:
///   diverges      last log ratio > log(1e6) and slope > 0.01
///   finite 0      last log ratio < -log(1e6) and slope < -0.01
///   finite e^v    last step below 1e-4, or steps contracting geometrically
///                 with a small extrapolated remainder (power-law tails)
///   inconclusive  otherwise
inline ConditionReport tail_ratio_diagnostic(const LocationFamily1D& family, double theta, TailDirection direction,
                                             const std::vector<double>& probe_grid, const TailThresholds& th = {}) {
    if (!(theta != 0.0) || !std::isfinite(theta)) throw DomainError("tail diagnostic needs a finite theta != 0");
    if (probe_grid.size() < 3) throw DomainError("probe ladder needs at least three points");
    const double sign = direction == TailDirection::plus_infinity ? 1.0 : -1.0;
    for (std::size_t i = 0; i < probe_grid.size(); ++i) {
        if (!(sign * probe_grid[i] > 0.0)) throw DomainError("probe points must lie on the side of the tail direction");
        if (i > 0 && !(std::abs(probe_grid[i]) > std::abs(probe_grid[i - 1]))) {
            throw DomainError("probe ladder must increase in |x|");
        }
    }

    ConditionReport r;
    r.family_id = family.name();
    r.theta = theta;
    r.direction = direction;
    for (double x : probe_grid) {
        const double lr = family.log_density(x - theta) - family.log_density(x);
        if (!std::isfinite(lr)) {
            r.ladder_shrunk = true;
            break;
        }
        r.probes.push_back({x, lr});
    }
    const std::size_t n = r.probes.size();
    if (n < 3) return r;

    double mx = 0.0, my = 0.0;
    for (const auto& p : r.probes) {
        mx += std::abs(p.x);
        my += p.log_ratio;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : r.probes) {
        sxy += (std::abs(p.x) - mx) * (p.log_ratio - my);
        sxx += (std::abs(p.x) - mx) * (std::abs(p.x) - mx);
    }
    r.slope_estimate = sxy / sxx;

    const double last = r.probes[n - 1].log_ratio;
    const double step = last - r.probes[n - 2].log_ratio;
    const double prev_step = r.probes[n - 2].log_ratio - r.probes[n - 3].log_ratio;

    if (last > th.divergence_log && r.slope_estimate > th.min_slope) {
        r.classification = LimitClass::diverges;
    } else if (last < -th.divergence_log && r.slope_estimate < -th.min_slope) {
        r.classification = LimitClass::finite_limit;
        r.limit_value = 0.0;
    } else if (std::abs(step) < th.flatness) {
        r.classification = LimitClass::finite_limit;
        r.limit_value = std::exp(last);
    } else if (prev_step != 0.0) {
        const double q = std::abs(step / prev_step);
        const double remainder = step * q / (1.0 - q);
        if (q <= th.max_contraction && std::abs(remainder) < th.max_remainder && std::signbit(step) == std::signbit(prev_step)) {
            r.classification = LimitClass::finite_limit;
            r.limit_value = std::exp(last + remainder);
        }
    }
    return r;
}

enum class ConditionVerdict { evidence_satisfied, violated, inconclusive };

inline const char* to_string(ConditionVerdict v) {
    switch (v) {
    case ConditionVerdict::evidence_satisfied: return "evidence_satisfied";
    case ConditionVerdict::violated: return "violated";
    case ConditionVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct TailConditionReport {
    std::string family_pair;
    ConditionVerdict verdict = ConditionVerdict::inconclusive;
    bool densities_positive_bounded = false;
    std::vector<ConditionReport> sub_reports;
};

inline std::vector<double> default_theta_probes() { return {0.5, -0.5, 1.0, -1.0, 2.0, -2.0}; }

/// Grid check of positivity (log scale) and the density bound on [-50, 50].
inline bool densities_positive_bounded(const LocationFamily1D& f) {
    const double log_bound = f.log_density(0.0);
    for (int i = -5000; i <= 5000; ++i) {
        const double lv = f.log_density(0.01 * i);
        if (!std::isfinite(lv) || lv > log_bound + 1e-12) return false;
    }
    return true;
}

/// For theta > 0 the tail ratio must diverge at +inf and stay finite at -inf;
/// for theta < 0 the roles swap. Any contradicting probe means violated.
inline TailConditionReport check_tail_condition(const LocationFamily1D& first, const LocationFamily1D& second,
                                         const std::vector<double>& theta_probes = default_theta_probes(),
                                         const std::vector<double>& plus_ladder = probe_ladder(TailDirection::plus_infinity)) {
    bool has_pos = false, has_neg = false;
    for (double t : theta_probes) {
        has_pos = has_pos || t > 0.0;
        has_neg = has_neg || t < 0.0;
    }
    if (!has_pos || !has_neg) throw DomainError("theta probes must contain positive and negative values");

    std::vector<double> minus_ladder;
    for (double x : plus_ladder) minus_ladder.push_back(-x);

    TailConditionReport rep;
    rep.family_pair = first.name() + "," + second.name();
    rep.densities_positive_bounded = densities_positive_bounded(first) && densities_positive_bounded(second);
    bool violated = !rep.densities_positive_bounded;
    bool all_match = rep.densities_positive_bounded;
    for (double t : theta_probes) {
        auto up = tail_ratio_diagnostic(second, t, TailDirection::plus_infinity, plus_ladder);
        auto down = tail_ratio_diagnostic(second, t, TailDirection::minus_infinity, minus_ladder);
        const auto& must_diverge = t > 0.0 ? up : down;
        const auto& must_stay_finite = t > 0.0 ? down : up;
        if (must_diverge.classification == LimitClass::finite_limit) violated = true;
        if (must_stay_finite.classification == LimitClass::diverges) violated = true;
        if (must_diverge.classification != LimitClass::diverges ||
            must_stay_finite.classification != LimitClass::finite_limit) {
            all_match = false;
        }
        rep.sub_reports.push_back(std::move(up));
        rep.sub_reports.push_back(std::move(down));
    }
    rep.verdict = violated ? ConditionVerdict::violated
                           : (all_match ? ConditionVerdict::evidence_satisfied : ConditionVerdict::inconclusive);
    return rep;
}

struct InadmissibilityClaim {
    std::string family_pair;
    ConditionVerdict verdict;
    bool moran_inadmissible;
    std::string statement;
};

/// The tail condition is sufficient, not necessary: anything short of
/// evidence_satisfied yields no conclusion.
inline InadmissibilityClaim condition_to_claim(const TailConditionReport& rep) {
    InadmissibilityClaim c{rep.family_pair, rep.verdict, rep.verdict == ConditionVerdict::evidence_satisfied, {}};
    if (c.moran_inadmissible) {
        c.statement = "tail-ratio condition holds on all probes: Moran's single-split test is inadmissible among "
                      "regular level-alpha tests for this family pair";
    } else {
        c.statement = std::string("sufficient condition not established (") + to_string(rep.verdict) +
                      "): no conclusion about admissibility";
    }
    return c;
}

} // namespace moran
