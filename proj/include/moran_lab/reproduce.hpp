#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "moran_lab/bayes.hpp"
#include "moran_lab/conditions.hpp"
#include "moran_lab/io.hpp"

namespace moran {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct ReproduceOptions {
    std::uint64_t seed = 20'240'607;
    std::size_t n_samples = 1'000'000;
    std::size_t regularity_samples = 100'000;
    std::filesystem::path out = "reproduce_out";
    std::ostream* log = nullptr;
};

struct ReproduceReport {
    std::vector<CriterionResult> results;

    bool all_passed() const {
        for (const auto& r : results) {
            if (!r.passed) return false;
        }
        return true;
    }
    int first_failure() const {
        for (const auto& r : results) {
            if (!r.passed) return r.id;
        }
        return 0;
    }
};

inline std::string format_result(const CriterionResult& r) {
    std::ostringstream s;
    s << "criterion " << r.id << " [" << (r.passed ? "PASS" : "FAIL") << "] " << r.name << ": " << r.detail << " ("
      << std::fixed;
    s.precision(1);
    s << r.seconds << " s)";
    return s.str();
}

namespace repro {

inline constexpr double kAlpha = 0.05;
inline constexpr std::size_t kCalibrationFactor = 4;
inline constexpr double kMoranPowerAt1 = 0.2189865507;
inline constexpr double kZPowerAt1 = 0.2929889364;
inline constexpr double kNPPowerDelta1 = 0.4087972198;
inline constexpr double kPhiPlusLimit = 0.2595110228;
inline constexpr double kConvexEndpoint = 1.395704584;
inline constexpr double kConvexMidpoint = 1.973824352;

inline std::string num(double v) { return fmt_num(v); }

inline std::string yes_no(bool b) { return b ? "1" : "0"; }

inline DataModel gauss_pair() { return DataModel::pair(LocationFamily1D::normal(), LocationFamily1D::normal()); }

/// Expensive results shared between criteria.
class Fixtures {
public:
    explicit Fixtures(const ReproduceOptions& o) : opt_(o) {}

    const BlendSearchReport& blend() {
        if (!blend_) {
            BlendSearchOptions bo;
            bo.n_samples = opt_.n_samples;
            bo.calibration_samples = kCalibrationFactor * opt_.n_samples;
            bo.regularity_samples = opt_.regularity_samples;
            const auto model = gauss_pair();
            blend_ = find_dominating_blend(moran_1d(0.0, kAlpha, LocationFamily1D::normal()), Prior::point_mass(1.0),
                                           model, kAlpha, derive_seed(opt_.seed, {6}), bo);
        }
        return *blend_;
    }

    const NPCalibration& calibration(std::size_t which) {
        if (!cal_[which]) cal_[which] = calibrate_np(prior(which), gauss_pair(), kAlpha, kCalibrationFactor * opt_.n_samples,
                                                     derive_seed(opt_.seed, {5, which}));
        return *cal_[which];
    }

    static Prior prior(std::size_t which) { return which == 0 ? Prior::point_mass(1.0) : Prior::symmetric_pair(1.0); }
    static const char* prior_name(std::size_t which) { return which == 0 ? "delta1" : "sym1"; }

private:
    ReproduceOptions opt_;
    std::optional<BlendSearchReport> blend_;
    std::optional<NPCalibration> cal_[2];
};

inline CriterionResult sizes(const ReproduceOptions& o, Fixtures& fx) {
    CriterionResult r{1, "size certification", true, {}, 0.0};
    CsvTable csv({"test", "model", "value", "std_error", "n", "method", "within_3se"});
    int count = 0, bad = 0;
    std::string worst;
    double worst_z = 0.0;
    auto check = [&](const Test& t, const DataModel& m) {
        const auto e = power_mc(t, m, Shift::zero(m.parameter_dim()), o.n_samples,
                                derive_seed(o.seed, {1, static_cast<std::uint64_t>(count)}));
        const double z = std::abs(e.value - kAlpha) / e.std_error;
        const bool ok = z <= 3.0;
        std::vector<std::string> cells{t.label(), m.id()};
        append_estimate(cells, e);
        cells.push_back(yes_no(ok));
        csv.row(std::move(cells));
        ++count;
        if (!ok) ++bad;
        if (z >= worst_z) {
            worst_z = z;
            worst = t.label() + " on " + m.id();
        }
    };
    for (const auto& f : {LocationFamily1D::normal(), LocationFamily1D::laplace(), LocationFamily1D::cauchy(),
                          LocationFamily1D::logistic(), LocationFamily1D::student_t(3)}) {
        check(moran_1d(0.0, kAlpha, f), DataModel::pair(f, f));
    }
    for (std::size_t d : {2, 5, 10}) {
        const auto m = DataModel::gaussian(d, 2);
        check(moran_gaussian_d(kAlpha, 1, 2, d).set_label("moran_d" + std::to_string(d)), m);
        check(chi_square_d(kAlpha, 2, d).set_label("chi_square_d" + std::to_string(d)), m);
    }
    const auto gp = gauss_pair();
    check(z_two_sided(kAlpha, 2), gp);
    for (std::size_t w : {0, 1}) {
        check(np_test(Fixtures::prior(w), gp, fx.calibration(w)).set_label(std::string("np_") + Fixtures::prior_name(w)), gp);
    }
    const auto& b = fx.blend();
    if (b.test) {
        auto t = *b.test;
        check(t.set_label("blend"), gp);
    } else {
        r.passed = false;
        r.detail = "blend search returned no test (" + std::string(to_string(b.status)) + "); ";
    }
    csv.write(o.out / "c1_sizes.csv");
    r.passed = r.passed && bad == 0;
    r.detail += std::to_string(count - bad) + "/" + std::to_string(count) + " tests within alpha +- 3 SE; largest |z| " +
                num(worst_z) + " (" + worst + ")";
    return r;
}

inline CriterionResult closed_vs_mc(const ReproduceOptions& o) {
    CriterionResult r{2, "closed form vs Monte Carlo", true, {}, 0.0};
    CsvTable csv({"family", "theta", "mc", "std_error", "closed_form", "abs_diff", "within_4se"});
    std::vector<Shift> grid;
    for (int i = -6; i <= 6; ++i) grid.emplace_back(0.5 * i);
    double worst = 0.0;
    std::size_t f_index = 0;
    for (const auto& f : {LocationFamily1D::normal(), LocationFamily1D::laplace()}) {
        const auto model = DataModel::pair(f, f);
        const auto t = moran_1d(0.0, kAlpha, f);
        const auto curve = power_curve(t, model, grid, o.n_samples, derive_seed(o.seed, {2, f_index++}));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto& e = curve.estimates[i];
            const double exact = power_moran_1d_closed(*t.split_params(), *model.as_pair(), grid[i][0]).value;
            const double diff = std::abs(e.value - exact);
            const bool ok = diff <= 4.0 * e.std_error;
            r.passed = r.passed && ok;
            worst = std::max(worst, e.std_error > 0 ? diff / e.std_error : 0.0);
            csv.row({f.name(), num(grid[i][0]), num(e.value), num(e.std_error), num(exact), num(diff), yes_no(ok)});
        }
    }
    csv.write(o.out / "c2_closed_vs_mc.csv");
    r.detail = "26 points, largest |mc - closed| / SE = " + num(worst) + " (limit 4)";
    return r;
}

inline CriterionResult gaussian_dominance(const ReproduceOptions& o) {
    CriterionResult r{3, "two-sided Z dominates Moran (Gaussian)", false, {}, 0.0};
    const auto model = gauss_pair();
    const auto z = z_two_sided(kAlpha, 2);
    const auto moran = moran_1d(0.0, kAlpha, LocationFamily1D::normal());
    std::vector<Shift> grid;
    for (double t : {-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0}) grid.emplace_back(t);
    const auto rep = dominance_scan(z, moran, model, grid, o.n_samples, derive_seed(o.seed, {3}));
    CsvTable csv({"theta", "value_z", "std_error_z", "value_moran", "std_error_moran", "gap", "se_combined", "strict"});
    const DominanceRow* at1 = nullptr;
    for (const auto& row : rep.rows) {
        const bool strict = row.gap > 3.0 * row.se_combined;
        csv.row({num(row.theta[0]), num(row.a.value), num(row.a.std_error), num(row.b.value), num(row.b.std_error),
                 num(row.gap), num(row.se_combined), yes_no(strict)});
        if (row.theta[0] == 1.0) at1 = &row;
    }
    csv.write(o.out / "c3_dominance.csv");
    const bool strict1 = at1 && at1->gap > 3.0 * at1->se_combined;
    const bool oracle_z = at1 && std::abs(at1->a.value - kZPowerAt1) <= 4.0 * at1->a.std_error;
    const bool oracle_m = at1 && std::abs(at1->b.value - kMoranPowerAt1) <= 4.0 * at1->b.std_error;
    r.passed = rep.ge_everywhere && strict1 && oracle_z && oracle_m;
    r.detail = std::string("ge_everywhere=") + (rep.ge_everywhere ? "yes" : "no");
    if (at1) {
        r.detail += ", theta=1: " + num(at1->a.value) + " vs " + num(at1->b.value) + " (oracles " + num(kZPowerAt1) +
                    ", " + num(kMoranPowerAt1) + "), gap/SE = " + num(at1->gap / at1->se_combined);
    }
    return r;
}

inline CriterionResult phi_plus_limit(const ReproduceOptions& o) {
    CriterionResult r{4, "split-point limit gain", false, {}, 0.0};
    const std::vector<double> ladder{0.0, -2.0, -4.0, -8.0, -16.0};
    const auto rep = phi_plus_limit_gain(Prior::point_mass(1.0), gauss_pair(), kAlpha, 0.0, ladder, o.n_samples,
                                         derive_seed(o.seed, {4}));
    CsvTable csv({"zeta", "mixture_power", "std_error", "closed_form", "limit"});
    for (const auto& row : rep.rows) {
        csv.row({num(row.zeta), num(row.mixture_power.value), num(row.mixture_power.std_error), num(row.closed_form),
                 num(rep.limit)});
    }
    csv.write(o.out / "c4_phi_plus_limit.csv");
    const auto& last = rep.rows.back();
    const bool near_limit = std::abs(last.mixture_power.value - kPhiPlusLimit) <= 4.0 * last.mixture_power.std_error &&
                            std::abs(last.closed_form - kPhiPlusLimit) < 1e-6 && std::abs(rep.limit - kPhiPlusLimit) < 1e-8;
    r.passed = rep.monotone_mc && rep.monotone_closed && near_limit && rep.separated;
    r.detail = "last rung " + num(last.mixture_power.value) + " (closed " + num(last.closed_form) + ", limit " +
               num(rep.limit) + "), base " + num(rep.base_power.value) + ", gain/SE = " +
               num(rep.gain_at_last / rep.se_combined) + ", monotone mc=" + (rep.monotone_mc ? "yes" : "no") +
               " closed=" + (rep.monotone_closed ? "yes" : "no");
    return r;
}

inline CriterionResult np_machinery(const ReproduceOptions& o, Fixtures& fx) {
    CriterionResult r{5, "NP calibration and grid oracle", true, {}, 0.0};
    CsvTable csv({"prior", "c_star", "tau_star", "achieved_level", "level_se", "np_mixture_power", "np_se",
                  "grid_oracle_power", "abs_diff"});
    const auto model = gauss_pair();
    for (std::size_t w : {0, 1}) {
        const auto prior = Fixtures::prior(w);
        const auto& cal = fx.calibration(w);
        const auto mc = mixture_power(np_test(prior, model, cal), prior, model, o.n_samples, derive_seed(o.seed, {5, 2, w}));
        const auto oracle = grid_np_oracle(prior, model, GridSpec{-8.0, 8.0, 400}, kAlpha);
        const double diff = std::abs(mc.value - oracle.power);
        const bool level_ok = std::abs(cal.achieved_level - kAlpha) <= 0.002;
        bool ok = level_ok && diff <= 0.005;
        if (w == 0) ok = ok && std::abs(oracle.power - kNPPowerDelta1) <= 0.005 && std::abs(mc.value - kNPPowerDelta1) <= 0.005;
        r.passed = r.passed && ok;
        csv.row({Fixtures::prior_name(w), num(cal.c_star), num(cal.tau_star), num(cal.achieved_level),
                 num(cal.achieved_level_se), num(mc.value), num(mc.std_error), num(oracle.power), num(diff)});
        r.detail += std::string(w ? "; " : "") + Fixtures::prior_name(w) + ": level " + num(cal.achieved_level) +
                    ", mc " + num(mc.value) + " vs grid " + num(oracle.power);
    }
    csv.write(o.out / "c5_np.csv");
    r.detail += " (delta1 optimum " + num(kNPPowerDelta1) + ")";
    return r;
}

inline CriterionResult blend_construction(const ReproduceOptions& o, Fixtures& fx) {
    CriterionResult r{6, "dominating regular blend", false, {}, 0.0};
    const auto& b = fx.blend();
    CsvTable csv({"zeta", "eta", "level", "level_se", "mixture_power", "mixture_power_se", "gain", "se_combined",
                  "level_ok", "separated", "regular"});
    for (const auto& g : b.rungs) {
        csv.row({num(g.zeta), num(g.eta), num(g.level.value), num(g.level.std_error), num(g.mixture_power.value),
                 num(g.mixture_power.std_error), num(g.gain), num(g.se_combined), yes_no(g.level_ok),
                 yes_no(g.separated), yes_no(g.regular)});
    }
    csv.write(o.out / "c6_blend_rungs.csv");
    if (!b.test) {
        r.detail = std::string("search status ") + to_string(b.status) + ": " + b.message;
        return r;
    }
    const auto model = gauss_pair();
    const std::vector<Shift> dirs{Shift(1.0), Shift(-1.0)};
    const auto reg = regularity_check(*b.test, model, log_spaced(0.1, 10.0, 25), dirs, o.regularity_samples,
                                      derive_seed(o.seed, {6, 9}));
    CsvTable rc({"direction", "radius", "value", "std_error"});
    for (const auto& row : reg.rows) {
        rc.row({num(reg.directions[row.direction][0]), num(row.radius), num(row.power.value), num(row.power.std_error)});
    }
    rc.write(o.out / "c6_blend_regularity.csv");

    const bool level_ok = std::abs(b.level.value - kAlpha) <= 0.002;
    const double blend_mix = b.base_power.value + b.mixture_power_gain;
    const bool gain_ok = b.mixture_power_gain > 3.0 * b.rungs.back().se_combined;
    const bool reg10 = reg.min_power_at_max_radius > 0.99;
    r.passed = level_ok && gain_ok && reg10;
    r.detail = "zeta=" + num(b.zeta) + " eta=" + num(b.eta) + ", level " + num(b.level.value) + ", mixture power " +
               num(blend_mix) + " vs " + num(b.base_power.value) + "; min power at radius 10 = " +
               num(reg.min_power_at_max_radius) + " (needs > 0.99); min power at radius " +
               num(b.regularity->rows.back().radius) + " = " + num(b.regularity->min_power_at_max_radius);
    return r;
}

inline CriterionResult condition_classification(const ReproduceOptions& o) {
    CriterionResult r{7, "tail-ratio condition classification", true, {}, 0.0};
    CsvTable csv({"family", "theta", "direction", "classification", "limit_value", "expected_class", "expected_limit",
                  "match"});
    struct Case {
        LocationFamily1D f;
        ConditionVerdict expected;
    };
    const std::vector<Case> cases{{LocationFamily1D::normal(), ConditionVerdict::evidence_satisfied},
                                  {LocationFamily1D::laplace(), ConditionVerdict::violated},
                                  {LocationFamily1D::cauchy(), ConditionVerdict::violated},
                                  {LocationFamily1D::logistic(), ConditionVerdict::violated}};
    int mismatches = 0;
    std::string verdicts;
    for (const auto& c : cases) {
        const auto rep = check_tail_condition(c.f, c.f);
        verdicts += (verdicts.empty() ? "" : ", ") + c.f.name() + "=" + to_string(rep.verdict);
        if (rep.verdict != c.expected) r.passed = false;
        for (const auto& s : rep.sub_reports) {
            const double sign = s.direction == TailDirection::plus_infinity ? 1.0 : -1.0;
            LimitClass want = LimitClass::finite_limit;
            double limit = 0.0;
            switch (c.f.kind()) {
            case FamilyKind::normal:
                if (sign * s.theta > 0) want = LimitClass::diverges;
                break;
            case FamilyKind::laplace:
            case FamilyKind::logistic: limit = std::exp(sign * s.theta); break;
            default: limit = 1.0; break;
            }
            bool match = s.classification == want;
            if (match && want == LimitClass::finite_limit) {
                match = limit == 0.0 ? s.limit_value == 0.0 : std::abs(s.limit_value / limit - 1.0) < 1e-3;
            }
            if (!match) ++mismatches;
            csv.row({c.f.name(), num(s.theta), to_string(s.direction), to_string(s.classification), num(s.limit_value),
                     to_string(want), want == LimitClass::diverges ? "inf" : num(limit), yes_no(match)});
        }
    }
    csv.write(o.out / "c7_conditions.csv");
    r.passed = r.passed && mismatches == 0;
    r.detail = verdicts + "; " + std::to_string(mismatches) + " probe-level mismatches";
    return r;
}

inline CriterionResult gaussian_d_claims(const ReproduceOptions& o) {
    CriterionResult r{8, "d-dimensional Gaussian claims", false, {}, 0.0};
    // (a) non-convex acceptance region.
    const double d95 = normal_quantile(1.0 - kAlpha);
    auto ce = convexity_counterexample(d95, 1.2, 2);
    RandomStream rng(derive_seed(o.seed, {8, 1}));
    perturbation_sweep(ce, 1e-3, 10'000, rng);
    const bool a_ok = std::abs(ce.endpoint_statistics[0] - kConvexEndpoint) < 1e-6 &&
                      std::abs(ce.endpoint_statistics[1] - kConvexEndpoint) < 1e-6 &&
                      std::abs(ce.midpoint_statistic - kConvexMidpoint) < 1e-6 && ce.endpoint_statistics[0] < d95 &&
                      d95 < ce.midpoint_statistic && ce.min_margin_under_perturbation > 0.0;

    // (b) chi-square beats Moran at theta = 2 e_1.
    const auto model = DataModel::gaussian(10, 2);
    const auto chi = chi_square_d(kAlpha, 2, 10);
    const auto moran = moran_gaussian_d(kAlpha, 1, 2, 10);
    const auto cmp = dominance_scan(chi, moran, model, {Shift::axis(10, 0, 2.0)}, o.n_samples, derive_seed(o.seed, {8, 2}));
    const auto& row = cmp.rows.front();
    boost::math::non_central_chi_squared_distribution<> nc(10.0, 8.0);
    const double chi_exact = boost::math::cdf(boost::math::complement(nc, *chi.threshold("q")));
    const bool b_ok = row.gap > 3.0 * row.se_combined && std::abs(row.a.value - chi_exact) <= 4.0 * row.a.std_error;

    // (c) regularity.
    CsvTable csv({"part", "name", "value", "reference", "ok"});
    csv.row({"a", "endpoint_1", num(ce.endpoint_statistics[0]), num(kConvexEndpoint), yes_no(a_ok)});
    csv.row({"a", "endpoint_2", num(ce.endpoint_statistics[1]), num(kConvexEndpoint), yes_no(a_ok)});
    csv.row({"a", "midpoint", num(ce.midpoint_statistic), num(kConvexMidpoint), yes_no(a_ok)});
    csv.row({"a", "min_margin_1e-3", num(ce.min_margin_under_perturbation), "0", yes_no(a_ok)});
    csv.row({"b", "chi_square", num(row.a.value), num(chi_exact), yes_no(b_ok)});
    csv.row({"b", "moran_d", num(row.b.value), "", yes_no(b_ok)});
    csv.row({"b", "gap_over_se", num(row.gap / row.se_combined), "3", yes_no(b_ok)});

    const auto radii = log_spaced(0.1, 10.0, 25);
    const std::vector<Shift> line{Shift(1.0), Shift(-1.0)};
    std::vector<Shift> plane;
    for (std::size_t i = 0; i < 2; ++i) {
        plane.push_back(Shift::axis(10, i, 1.0));
        plane.push_back(Shift::axis(10, i, -1.0));
    }
    const auto gp = gauss_pair();
    struct RegCase {
        Test t;
        const DataModel* m;
        const std::vector<Shift>* dirs;
        bool want;
    };
    const std::vector<RegCase> regs{{z_one_sided(kAlpha, 2, +1), &gp, &line, false},
                                    {moran_1d(0.0, kAlpha, LocationFamily1D::normal()), &gp, &line, true},
                                    {z_two_sided(kAlpha, 2), &gp, &line, true},
                                    {chi, &model, &plane, true},
                                    {moran, &model, &plane, true}};
    bool c_ok = true;
    std::string c_detail;
    for (std::size_t k = 0; k < regs.size(); ++k) {
        const auto rep = regularity_check(regs[k].t, *regs[k].m, radii, *regs[k].dirs, o.regularity_samples,
                                          derive_seed(o.seed, {8, 3, k}));
        const bool ok = rep.limits_to_one == regs[k].want;
        c_ok = c_ok && ok;
        csv.row({"c", regs[k].t.label(), num(rep.min_power_at_max_radius), regs[k].want ? ">0.99" : "<=0.99", yes_no(ok)});
        c_detail += (k ? ", " : "") + regs[k].t.label() + " " + num(rep.min_power_at_max_radius);
    }
    csv.write(o.out / "c8_gaussian_d.csv");
    r.passed = a_ok && b_ok && c_ok;
    r.detail = "(a) " + num(ce.endpoint_statistics[0]) + " < " + num(d95) + " < " + num(ce.midpoint_statistic) +
               ", margin " + num(ce.min_margin_under_perturbation) + "; (b) chi " + num(row.a.value) + " vs moran " +
               num(row.b.value) + ", gap/SE " + num(row.gap / row.se_combined) + "; (c) power at r=10: " + c_detail;
    return r;
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

template <class F>
CriterionResult timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        r = f();
    } catch (const Error& e) {
        r.passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Criteria 1-8 into o.out.
inline std::vector<CriterionResult> run_criteria(const ReproduceOptions& o) {
    std::filesystem::create_directories(o.out);
    Fixtures fx(o);
    std::vector<std::function<CriterionResult()>> steps{
        [&] { return sizes(o, fx); },          [&] { return closed_vs_mc(o); },
        [&] { return gaussian_dominance(o); }, [&] { return phi_plus_limit(o); },
        [&] { return np_machinery(o, fx); },   [&] { return blend_construction(o, fx); },
        [&] { return condition_classification(o); }, [&] { return gaussian_d_claims(o); }};
    std::vector<CriterionResult> out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto r = timed(steps[i]);
        r.id = static_cast<int>(i) + 1;
        if (r.name.empty()) r.name = "criterion " + std::to_string(r.id);
        if (o.log) *o.log << format_result(r) << std::endl;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace repro

/// Runs criteria 1-8 twice (out/run_a, out/run_b) and checks that every CSV
/// body of the second pass matches the first (criterion 9).
inline ReproduceReport reproduce_all(const ReproduceOptions& opt) {
    if (opt.n_samples < kMinMonteCarloSamples) {
        throw ConfigError("n_samples", "must be at least " + std::to_string(kMinMonteCarloSamples));
    }
    if (opt.regularity_samples < kMinMonteCarloSamples) {
        throw ConfigError("regularity_samples", "must be at least " + std::to_string(kMinMonteCarloSamples));
    }
    ReproduceReport rep;
    auto first = opt;
    first.out = opt.out / "run_a";
    rep.results = repro::run_criteria(first);

    auto r9 = repro::timed([&] {
        auto second = opt;
        second.out = opt.out / "run_b";
        second.log = nullptr;
        repro::run_criteria(second);
        CriterionResult r{9, "determinism", true, {}, 0.0};
        std::size_t files = 0;
        std::vector<std::string> differing;
        for (const auto& entry : std::filesystem::directory_iterator(first.out)) {
            if (entry.path().extension() != ".csv") continue;
            ++files;
            const auto other = second.out / entry.path().filename();
            if (!std::filesystem::exists(other) || repro::read_bytes(entry.path()) != repro::read_bytes(other)) {
                differing.push_back(entry.path().filename().string());
            }
        }
        r.passed = files > 0 && differing.empty();
        r.detail = std::to_string(files - differing.size()) + "/" + std::to_string(files) + " CSV files byte-identical";
        for (const auto& d : differing) r.detail += "; differs: " + d;
        return r;
    });
    r9.id = 9;
    r9.name = "determinism";
    if (opt.log) *opt.log << format_result(r9) << std::endl;
    rep.results.push_back(std::move(r9));
    return rep;
}

} // namespace moran
