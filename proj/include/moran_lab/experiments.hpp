#pragma once

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "moran_lab/config.hpp"

namespace moran {

struct RunArtifacts {
    std::filesystem::path csv;
    std::filesystem::path json;
    Json summary;
};

/// Resolves a test spec against the model. Thresholds come from alpha and the
/// null law of the second statistic (pair models) or from (n, m, d).
inline Test build_test(const TestSpec& spec, const RunConfig& c, std::size_t index) {
    const auto shape = c.model.shape();
    const auto* pair = c.model.as_pair();
    const auto* gauss = c.model.as_gaussian();
    auto need_pair = [&] {
        if (!pair) throw ConfigError(spec.path + ".kind", spec.kind + " needs a pair model");
    };
    auto need_gauss = [&] {
        if (!gauss) throw ConfigError(spec.path + ".kind", spec.kind + " needs a gaussian model");
    };
    try {
        Test t = [&]() -> Test {
            if (spec.kind == "moran_1d") {
                need_pair();
                return moran_1d(spec.a, c.alpha, pair->second);
            }
            if (spec.kind == "phi_plus") {
                need_pair();
                return phi_plus(spec.a, c.alpha, pair->second);
            }
            if (spec.kind == "z_two_sided") return z_two_sided(c.alpha, shape.n_obs);
            if (spec.kind == "z_one_sided") return z_one_sided(c.alpha, shape.n_obs, spec.direction);
            if (spec.kind == "moran_d") {
                need_gauss();
                return moran_gaussian_d(c.alpha, spec.m, gauss->n, gauss->dim);
            }
            if (spec.kind == "chi_square") return chi_square_d(c.alpha, shape.n_obs, shape.dim);
            const auto cal = calibrate_np(*c.prior, c.model, c.alpha, c.n_samples, derive_seed(c.seed, {9, index}));
            return np_test(*c.prior, c.model, cal);
        }();
        t.set_label(spec.label);
        check_compatible(t, c.model);
        return t;
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(spec.path, e.what());
    }
}

inline std::vector<Test> build_tests(const RunConfig& c) {
    std::vector<Test> out;
    for (std::size_t i = 0; i < c.tests.size(); ++i) out.push_back(build_test(c.tests[i], c, i));
    return out;
}

inline Json thresholds_json(const Test& t) {
    Json th = Json::object();
    for (const auto& [name, v] : t.thresholds()) th[name] = v;
    return Json{{"label", t.label()}, {"kind", to_string(t.kind())}, {"thresholds", th}};
}

inline Json header_json(const RunConfig& c) {
    return Json{{"schema_version", c.schema_version},
                {"experiment", to_string(c.experiment)},
                {"seed", c.seed},
                {"alpha", c.alpha},
                {"n_samples", c.n_samples},
                {"model", c.model.id()}};
}

namespace detail {

inline void print_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "  " : "") << std::left << std::setw(16) << cells[i];
    os << '\n';
}

inline Json run_power_curve(const RunConfig& c, const std::vector<Test>& tests, CsvTable& csv,
                            std::vector<PowerCurve>& curves, std::ostream* os) {
    Json j = header_json(c);
    j["tests"] = Json::array();
    if (os) print_row(*os, {"test", "min power", "max power"});
    for (const auto& t : tests) {
        curves.push_back(power_curve(t, c.model, c.theta_grid, c.n_samples, c.seed, c.method));
        const auto& curve = curves.back();
        add_curve(csv, curve);
        double lo = 1.0, hi = 0.0;
        for (const auto& e : curve.estimates) {
            lo = std::min(lo, e.value);
            hi = std::max(hi, e.value);
        }
        auto tj = thresholds_json(t);
        tj["min_power"] = lo;
        tj["max_power"] = hi;
        j["tests"].push_back(tj);
        if (os) print_row(*os, {t.label(), fmt_num(lo), fmt_num(hi)});
    }
    return j;
}

inline Json run_dominance(const RunConfig& c, CsvTable& csv, std::ostream* os) {
    const auto tests = build_tests(c);
    const auto rep = dominance_scan(tests[0], tests[1], c.model, c.theta_grid, c.n_samples, c.seed);
    if (os) print_row(*os, {"theta", tests[0].label(), tests[1].label(), "gap", "strict"});
    Json strict = Json::array();
    for (const auto& s : rep.strict_points) strict.push_back(to_json(s));
    for (const auto& r : rep.rows) {
        const bool is_strict = r.gap > 3.0 * r.se_combined;
        std::vector<std::string> cells;
        append_theta(cells, r.theta);
        for (double v : {r.a.value, r.a.std_error, r.b.value, r.b.std_error, r.gap, r.se_combined}) cells.push_back(fmt_num(v));
        cells.push_back(is_strict ? "1" : "0");
        cells.push_back(std::to_string(r.a.n_samples));
        cells.push_back(to_string(r.a.method));
        csv.row(std::move(cells));
        if (os) {
            std::vector<std::string> th;
            append_theta(th, r.theta);
            std::string theta = th[0];
            for (std::size_t i = 1; i < th.size(); ++i) theta += ";" + th[i];
            print_row(*os, {theta, fmt_num(r.a.value), fmt_num(r.b.value), fmt_num(r.gap), is_strict ? "yes" : "no"});
        }
    }
    Json j = header_json(c);
    j["tests"] = {thresholds_json(tests[0]), thresholds_json(tests[1])};
    j["ge_everywhere"] = rep.ge_everywhere;
    j["strict_points"] = strict;
    return j;
}

inline Json calibration_json(const NPCalibration& cal) {
    return Json{{"c_star", cal.c_star},
                {"log_c_star", cal.log_c_star},
                {"tau_star", cal.tau_star},
                {"achieved_level", cal.achieved_level},
                {"achieved_level_se", cal.achieved_level_se},
                {"alpha", cal.alpha},
                {"n_samples", cal.n_samples},
                {"seed", cal.seed}};
}

inline Json run_calibrate_np(const RunConfig& c, CsvTable& csv, std::ostream* os) {
    const auto cal = calibrate_np(*c.prior, c.model, c.alpha, c.n_samples, derive_seed(c.seed, {1}));
    const auto power_seed = derive_seed(c.seed, {2});
    Json j = header_json(c);
    j["calibration"] = calibration_json(cal);
    Json powers = Json::array();
    auto add = [&](const std::string& label, const PowerEstimate& e) {
        std::vector<std::string> cells{label};
        append_estimate(cells, e);
        csv.row(std::move(cells));
        Json pj = to_json(e);
        pj["test"] = label;
        powers.push_back(pj);
        if (os) print_row(*os, {label, fmt_num(e.value), fmt_num(e.std_error), to_string(e.method)});
    };
    if (os) {
        *os << "C* = " << fmt_num(cal.c_star) << "  tau* = " << fmt_num(cal.tau_star) << "  level = "
            << fmt_num(cal.achieved_level) << " +- " << fmt_num(cal.achieved_level_se) << '\n';
        print_row(*os, {"test", "mixture power", "std_error", "method"});
    }
    add("np", mixture_power(np_test(*c.prior, c.model, cal), *c.prior, c.model, c.n_samples, power_seed));
    for (const auto& t : build_tests(c)) add(t.label(), mixture_power(t, *c.prior, c.model, c.n_samples, power_seed));
    if (c.grid_oracle) {
        const auto g = grid_np_oracle(*c.prior, c.model, *c.grid_oracle, c.alpha);
        add("grid_oracle", PowerEstimate{g.power, 0.0, 0, PowerMethod::quadrature});
        j["grid_oracle"] = Json{{"power", g.power},
                                {"level_used", g.level_used},
                                {"full_cells", g.full_cells},
                                {"last_cell_fraction", g.last_cell_fraction},
                                {"threshold_ratio", g.threshold_ratio},
                                {"captured_null_mass", g.captured_null_mass}};
    }
    j["mixture_power"] = powers;
    return j;
}

inline Json regularity_json(const RegularityReport& r) {
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        rows.push_back(Json{{"direction", to_json(r.directions[row.direction])},
                            {"radius", row.radius},
                            {"value", row.power.value},
                            {"std_error", row.power.std_error}});
    }
    return Json{{"limits_to_one", r.limits_to_one},
                {"min_power_at_max_radius", r.min_power_at_max_radius},
                {"epsilon", r.epsilon},
                {"rows", rows}};
}

inline Json run_blend_search(const RunConfig& c, CsvTable& csv, std::ostream* os) {
    const auto base = build_test(c.tests[0], c, 0);
    const auto rep = find_dominating_blend(base, *c.prior, c.model, c.alpha, c.seed, c.blend);
    for (const auto& r : rep.rungs) {
        std::vector<std::string> cells;
        for (double v : {r.zeta, r.eta, r.fitted_level, r.level.value, r.level.std_error, r.mixture_power.value,
                         r.mixture_power.std_error, r.gain, r.se_combined}) {
            cells.push_back(fmt_num(v));
        }
        for (bool b : {r.level_ok, r.separated, r.regular}) cells.push_back(b ? "1" : "0");
        csv.row(std::move(cells));
    }
    Json j = header_json(c);
    j["base"] = thresholds_json(base);
    j["status"] = to_string(rep.status);
    j["message"] = rep.message;
    j["calibration"] = calibration_json(rep.calibration);
    j["base_mixture_power"] = to_json(rep.base_power);
    j["np_mixture_power"] = to_json(rep.np_power);
    j["base_not_regularly_admissible"] = rep.base_not_regularly_admissible;
    if (rep.test) {
        j["zeta"] = rep.zeta;
        j["eta"] = rep.eta;
        j["level"] = to_json(rep.level);
        j["mixture_power_gain"] = rep.mixture_power_gain;
        j["regularity"] = regularity_json(*rep.regularity);
        const auto extra = regularity_check(*rep.test, c.model, c.radii, c.directions, c.blend.regularity_samples,
                                            derive_seed(c.seed, {6}), c.blend.regularity_epsilon);
        j["regularity_at_configured_radii"] = regularity_json(extra);
    }
    if (os) {
        *os << "status: " << to_string(rep.status) << " (" << rep.message << ")\n";
        *os << "base mixture power " << fmt_num(rep.base_power.value) << ", NP " << fmt_num(rep.np_power.value) << '\n';
        if (rep.test) {
            *os << "blend zeta=" << fmt_num(rep.zeta) << " eta=" << fmt_num(rep.eta) << " level=" << fmt_num(rep.level.value)
                << " gain=" << fmt_num(rep.mixture_power_gain) << '\n';
            *os << "regularity up to r=" << fmt_num(rep.regularity->rows.back().radius)
                << ": min power " << fmt_num(rep.regularity->min_power_at_max_radius) << '\n';
            *os << "regularity at r=" << fmt_num(c.radii.back()) << ": min power "
                << fmt_num(j["regularity_at_configured_radii"]["min_power_at_max_radius"].get<double>()) << '\n';
        }
    }
    return j;
}

inline Json run_condition_check(const RunConfig& c, CsvTable& csv, std::ostream* os) {
    const auto& pair = *c.model.as_pair();
    const auto rep = check_tail_condition(pair.first, pair.second, c.theta_probes,
                                      probe_ladder(TailDirection::plus_infinity, c.ladder_first, c.ladder_last));
    const auto claim = condition_to_claim(rep);
    Json subs = Json::array();
    for (const auto& s : rep.sub_reports) {
        Json probes = Json::array();
        for (const auto& p : s.probes) {
            probes.push_back(Json{{"x", p.x}, {"log_ratio", p.log_ratio}});
            csv.row({fmt_num(s.theta), to_string(s.direction), fmt_num(p.x), fmt_num(p.log_ratio),
                     to_string(s.classification), fmt_num(s.limit_value), fmt_num(s.slope_estimate)});
        }
        subs.push_back(Json{{"family", s.family_id},
                            {"theta", s.theta},
                            {"direction", to_string(s.direction)},
                            {"classification", to_string(s.classification)},
                            {"limit_value", s.limit_value},
                            {"slope_estimate", s.slope_estimate},
                            {"ladder_shrunk", s.ladder_shrunk},
                            {"probes", probes}});
    }
    Json j = header_json(c);
    j["family_pair"] = rep.family_pair;
    j["verdict"] = to_string(rep.verdict);
    j["densities_positive_bounded"] = rep.densities_positive_bounded;
    j["moran_inadmissible"] = claim.moran_inadmissible;
    j["statement"] = claim.statement;
    j["reports"] = subs;
    if (os) {
        print_row(*os, {"theta", "direction", "class", "limit"});
        for (const auto& s : rep.sub_reports) {
            print_row(*os, {fmt_num(s.theta), to_string(s.direction), to_string(s.classification),
                            s.classification == LimitClass::finite_limit ? fmt_num(s.limit_value) : "-"});
        }
        *os << "verdict: " << to_string(rep.verdict) << '\n' << claim.statement << '\n';
    }
    return j;
}

/// Pairwise gaps come from the curves themselves (common random numbers).
inline Json run_gaussian_d_compare(const RunConfig& c, CsvTable& csv, std::ostream* os) {
    const auto tests = build_tests(c);
    std::vector<PowerCurve> curves;
    Json j = run_power_curve(c, tests, csv, curves, os);
    if (tests.size() >= 2) {
        Json cmp = Json::array();
        for (std::size_t k = 1; k < tests.size(); ++k) {
            bool ge = true;
            Json strict = Json::array();
            for (std::size_t i = 0; i < c.theta_grid.size(); ++i) {
                const auto& a = curves[0].estimates[i];
                const auto& b = curves[k].estimates[i];
                const double se = std::hypot(a.std_error, b.std_error);
                if (a.value - b.value < -3.0 * se) ge = false;
                if (a.value - b.value > 3.0 * se) strict.push_back(to_json(c.theta_grid[i]));
            }
            cmp.push_back(Json{{"a", tests[0].label()}, {"b", tests[k].label()}, {"ge_everywhere", ge},
                               {"strict_points", strict}});
            if (os) {
                *os << tests[0].label() << " vs " << tests[k].label() << ": ge_everywhere=" << (ge ? "yes" : "no")
                    << ", strict points " << strict.size() << '\n';
            }
        }
        j["comparisons"] = cmp;
    }
    if (c.regularity_requested) {
        Json reg = Json::object();
        for (std::size_t k = 0; k < tests.size(); ++k) {
            const auto r = regularity_check(tests[k], c.model, c.radii, c.directions, c.n_samples,
                                            derive_seed(c.seed, {7, k}));
            reg[tests[k].label()] = regularity_json(r);
            if (os) {
                *os << tests[k].label() << " regularity: min power at r=" << fmt_num(c.radii.back()) << " is "
                    << fmt_num(r.min_power_at_max_radius) << '\n';
            }
        }
        j["regularity"] = reg;
    }
    return j;
}

inline Json run_convexity_demo(const RunConfig& c, CsvTable& csv, std::ostream* os) {
    const double threshold = c.convexity.threshold.value_or(normal_quantile(1.0 - c.alpha));
    auto ce = convexity_counterexample(threshold, c.convexity.delta, c.convexity.dim);
    RandomStream rng(derive_seed(c.seed, {1}));
    perturbation_sweep(ce, c.convexity.perturbation, c.convexity.trials, rng);
    const std::size_t d = c.convexity.dim;
    std::vector<double> um(d), vm(d);
    for (std::size_t i = 0; i < d; ++i) {
        um[i] = 0.5 * (ce.u1[i] + ce.u2[i]);
        vm[i] = 0.5 * (ce.v1[i] + ce.v2[i]);
    }
    auto add = [&](const char* name, const std::vector<double>& u, const std::vector<double>& v, double stat) {
        std::vector<std::string> cells{name};
        for (double x : u) cells.push_back(fmt_num(x));
        for (double x : v) cells.push_back(fmt_num(x));
        cells.push_back(fmt_num(stat));
        cells.push_back(fmt_num(threshold));
        cells.push_back(stat > threshold ? "1" : "0");
        csv.row(std::move(cells));
        if (os) print_row(*os, {name, fmt_num(stat), stat > threshold ? "reject" : "accept"});
    };
    if (os) print_row(*os, {"point", "statistic", "decision"});
    add("endpoint_1", ce.u1, ce.v1, ce.endpoint_statistics[0]);
    add("endpoint_2", ce.u2, ce.v2, ce.endpoint_statistics[1]);
    add("midpoint", um, vm, ce.midpoint_statistic);
    if (os) *os << "min margin under perturbation " << fmt_num(ce.min_margin_under_perturbation) << '\n';
    Json j = header_json(c);
    j["threshold"] = threshold;
    j["delta"] = c.convexity.delta;
    j["endpoint_statistics"] = {ce.endpoint_statistics[0], ce.endpoint_statistics[1]};
    j["midpoint_statistic"] = ce.midpoint_statistic;
    j["perturbation"] = c.convexity.perturbation;
    j["trials"] = c.convexity.trials;
    j["min_margin_under_perturbation"] = ce.min_margin_under_perturbation;
    j["counterexample_holds"] = ce.min_margin_under_perturbation > 0.0;
    return j;
}

} // namespace detail

/// Fixed CSV columns per experiment type.
inline CsvTable csv_schema(const RunConfig& c) {
    const auto dim = c.model.parameter_dim();
    switch (c.experiment) {
    case Experiment::power_curve:
    case Experiment::gaussian_d_compare: return curve_table(dim);
    case Experiment::dominance: {
        auto h = theta_columns(dim);
        for (const char* s : {"value_a", "std_error_a", "value_b", "std_error_b", "gap", "se_combined", "strict", "n",
                              "method"}) {
            h.emplace_back(s);
        }
        return CsvTable(std::move(h));
    }
    case Experiment::calibrate_np: return CsvTable({"test", "value", "std_error", "n", "method"});
    case Experiment::blend_search:
        return CsvTable({"zeta", "eta", "fitted_level", "level", "level_se", "mixture_power", "mixture_power_se", "gain",
                         "se_combined", "level_ok", "separated", "regular"});
    case Experiment::condition_check:
        return CsvTable({"theta", "direction", "x", "log_ratio", "classification", "limit_value", "slope"});
    case Experiment::convexity_demo: {
        std::vector<std::string> h{"point"};
        for (std::size_t i = 0; i < c.convexity.dim; ++i) h.push_back("u_" + std::to_string(i + 1));
        for (std::size_t i = 0; i < c.convexity.dim; ++i) h.push_back("v_" + std::to_string(i + 1));
        for (const char* s : {"statistic", "threshold", "rejects"}) h.emplace_back(s);
        return CsvTable(std::move(h));
    }
    }
    throw Error("unknown experiment");
}

/// Runs one experiment and writes <out>/<csv_name> and <out>/<json_name>.
/// `os` receives the summary table (pass nullptr for quiet runs).
inline RunArtifacts run(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream* os = nullptr) {
    auto csv = csv_schema(c);
    Json j;
    switch (c.experiment) {
    case Experiment::power_curve: {
        std::vector<PowerCurve> curves;
        j = detail::run_power_curve(c, build_tests(c), csv, curves, os);
        break;
    }
    case Experiment::dominance: j = detail::run_dominance(c, csv, os); break;
    case Experiment::calibrate_np: j = detail::run_calibrate_np(c, csv, os); break;
    case Experiment::blend_search: j = detail::run_blend_search(c, csv, os); break;
    case Experiment::condition_check: j = detail::run_condition_check(c, csv, os); break;
    case Experiment::gaussian_d_compare: j = detail::run_gaussian_d_compare(c, csv, os); break;
    case Experiment::convexity_demo: j = detail::run_convexity_demo(c, csv, os); break;
    }
    RunArtifacts a{out_dir / c.csv_name, out_dir / c.json_name, j};
    a.summary["csv"] = c.csv_name;
    csv.write(a.csv);
    write_json(a.json, a.summary);
    return a;
}

} // namespace moran
