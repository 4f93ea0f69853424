#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "moran_lab/bayes.hpp"
#include "moran_lab/conditions.hpp"
#include "moran_lab/io.hpp"

namespace moran {

inline constexpr int kSchemaVersion = 1;

enum class Experiment {
    power_curve,
    dominance,
    calibrate_np,
    blend_search,
    condition_check,
    gaussian_d_compare,
    convexity_demo
};

inline const char* to_string(Experiment e) {
    switch (e) {
    case Experiment::power_curve: return "power-curve";
    case Experiment::dominance: return "dominance";
    case Experiment::calibrate_np: return "calibrate-np";
    case Experiment::blend_search: return "blend-search";
    case Experiment::condition_check: return "condition-check";
    case Experiment::gaussian_d_compare: return "gaussian-d-compare";
    case Experiment::convexity_demo: return "convexity-demo";
    }
    return "?";
}

struct TestSpec {
    std::string kind;   // moran_1d, phi_plus, z_two_sided, z_one_sided, moran_d, chi_square, np
    std::string label;
    double a = 0.0;     // split point (moran_1d) or zeta (phi_plus)
    int direction = 1;  // z_one_sided
    std::size_t m = 1;  // moran_d
    std::string path;
};

struct ConvexitySpec {
    double delta = 1.2;
    std::size_t dim = 2;
    double perturbation = 1e-3;
    std::size_t trials = 10'000;
    std::optional<double> threshold;  // defaults to z_{1-alpha}
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    Experiment experiment = Experiment::power_curve;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    std::size_t n_samples = 1'000'000;
    DataModel model = DataModel::pair(LocationFamily1D::normal(), LocationFamily1D::normal());
    std::vector<TestSpec> tests;
    std::optional<Prior> prior;
    std::vector<Shift> theta_grid;
    std::vector<double> radii;
    std::vector<Shift> directions;
    bool regularity_requested = false;
    CurveMethod method = CurveMethod::mc;
    std::optional<GridSpec> grid_oracle;
    BlendSearchOptions blend;
    std::vector<double> theta_probes = default_theta_probes();
    int ladder_first = 4;
    int ladder_last = 10;
    ConvexitySpec convexity;
    std::string csv_name;
    std::string json_name;
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.count(key)) throw ConfigError(join_path(path, key), "unknown key");
    }
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) throw ConfigError(join_path(path, key), "required field is missing");
    return obj.at(key);
}

inline double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
}

inline std::int64_t as_integer(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<std::int64_t>();
}

inline std::size_t as_count(const Json& v, const std::string& path, std::size_t min) {
    const auto k = as_integer(v, path);
    if (k < static_cast<std::int64_t>(min)) throw ConfigError(path, "must be at least " + std::to_string(min));
    return static_cast<std::size_t>(k);
}

inline std::string as_string(const Json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

inline double number_or(const Json& obj, const char* key, const std::string& path, double fallback) {
    return obj.contains(key) ? as_number(obj.at(key), join_path(path, key)) : fallback;
}

inline Shift as_shift(const Json& v, const std::string& path, std::size_t dim) {
    std::vector<double> c;
    if (v.is_number()) {
        c.push_back(as_number(v, path));
    } else if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) c.push_back(as_number(v[i], index_path(path, i)));
    } else {
        throw ConfigError(path, "expected a number or an array of numbers");
    }
    if (c.size() != dim) throw ConfigError(path, "expected " + std::to_string(dim) + " components");
    return Shift(std::move(c));
}

inline LocationFamily1D parse_family(const Json& v, const std::string& path) {
    std::string name;
    double dof = 3.0;
    if (v.is_string()) {
        name = v.get<std::string>();
    } else if (v.is_object()) {
        reject_unknown(v, path, {"name", "dof"});
        name = as_string(require(v, "name", path), join_path(path, "name"));
        dof = number_or(v, "dof", path, dof);
    } else {
        throw ConfigError(path, "expected a family name or {name, dof}");
    }
    try {
        return LocationFamily1D::from_name(name, dof);
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

inline DataModel parse_model(const Json& v, const std::string& path) {
    if (!v.is_object()) throw ConfigError(path, "expected an object");
    const auto kind = as_string(require(v, "kind", path), join_path(path, "kind"));
    if (kind == "pair") {
        reject_unknown(v, path, {"kind", "first", "second", "family"});
        if (v.contains("family")) {
            if (v.contains("first") || v.contains("second")) throw ConfigError(path, "give either family or first/second");
            const auto f = parse_family(v.at("family"), join_path(path, "family"));
            return DataModel::pair(f, f);
        }
        return DataModel::pair(parse_family(require(v, "first", path), join_path(path, "first")),
                               parse_family(require(v, "second", path), join_path(path, "second")));
    }
    if (kind == "gaussian") {
        reject_unknown(v, path, {"kind", "dim", "n"});
        return DataModel::gaussian(as_count(require(v, "dim", path), join_path(path, "dim"), 1),
                                   as_count(require(v, "n", path), join_path(path, "n"), 1));
    }
    throw ConfigError(join_path(path, "kind"), "expected 'pair' or 'gaussian'");
}

inline TestSpec parse_test(const Json& v, const std::string& path) {
    if (!v.is_object()) throw ConfigError(path, "expected an object");
    reject_unknown(v, path, {"kind", "label", "a", "zeta", "direction", "m"});
    TestSpec t;
    t.path = path;
    t.kind = as_string(require(v, "kind", path), join_path(path, "kind"));
    static const std::set<std::string> kinds{"moran_1d", "phi_plus", "z_two_sided", "z_one_sided",
                                             "moran_d", "chi_square", "np"};
    if (!kinds.count(t.kind)) throw ConfigError(join_path(path, "kind"), "unknown test kind '" + t.kind + "'");
    t.label = v.contains("label") ? as_string(v.at("label"), join_path(path, "label")) : t.kind;
    if (t.kind == "phi_plus") {
        t.a = as_number(require(v, "zeta", path), join_path(path, "zeta"));
    } else {
        t.a = number_or(v, "a", path, 0.0);
    }
    if (v.contains("direction")) {
        const auto d = as_integer(v.at("direction"), join_path(path, "direction"));
        if (d != 1 && d != -1) throw ConfigError(join_path(path, "direction"), "must be 1 or -1");
        t.direction = static_cast<int>(d);
    }
    if (v.contains("m")) t.m = as_count(v.at("m"), join_path(path, "m"), 1);
    return t;
}

inline Prior parse_prior(const Json& v, const std::string& path, std::size_t dim) {
    if (!v.is_object()) throw ConfigError(path, "expected an object");
    reject_unknown(v, path, {"atoms"});
    const auto& atoms = require(v, "atoms", path);
    const auto apath = join_path(path, "atoms");
    if (!atoms.is_array() || atoms.empty()) throw ConfigError(apath, "expected a non-empty array");
    std::vector<PriorAtom> out;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto p = index_path(apath, i);
        if (!atoms[i].is_object()) throw ConfigError(p, "expected {theta, weight}");
        reject_unknown(atoms[i], p, {"theta", "weight"});
        out.push_back({as_shift(require(atoms[i], "theta", p), join_path(p, "theta"), dim),
                       as_number(require(atoms[i], "weight", p), join_path(p, "weight"))});
    }
    try {
        return Prior(std::move(out));
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

/// Array of points, or {lo, hi, count[, axis]} for an evenly spaced line.
inline std::vector<Shift> parse_theta_grid(const Json& v, const std::string& path, std::size_t dim) {
    std::vector<Shift> grid;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) grid.push_back(as_shift(v[i], index_path(path, i), dim));
    } else if (v.is_object()) {
        reject_unknown(v, path, {"lo", "hi", "count", "axis"});
        const double lo = as_number(require(v, "lo", path), join_path(path, "lo"));
        const double hi = as_number(require(v, "hi", path), join_path(path, "hi"));
        const auto count = as_count(require(v, "count", path), join_path(path, "count"), 2);
        const std::size_t axis = v.contains("axis") ? as_count(v.at("axis"), join_path(path, "axis"), 0) : 0;
        if (axis >= dim) throw ConfigError(join_path(path, "axis"), "must be below the parameter dimension");
        if (!(hi > lo)) throw ConfigError(path, "needs hi > lo");
        for (std::size_t i = 0; i < count; ++i) {
            grid.push_back(Shift::axis(dim, axis, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1)));
        }
    } else {
        throw ConfigError(path, "expected an array or {lo, hi, count}");
    }
    if (grid.empty()) throw ConfigError(path, "grid is empty");
    return grid;
}

/// Array of radii, or {lo, hi, count} log-spaced.
inline std::vector<double> parse_radii(const Json& v, const std::string& path) {
    std::vector<double> r;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) r.push_back(as_number(v[i], index_path(path, i)));
    } else if (v.is_object()) {
        reject_unknown(v, path, {"lo", "hi", "count"});
        try {
            r = log_spaced(as_number(require(v, "lo", path), join_path(path, "lo")),
                           as_number(require(v, "hi", path), join_path(path, "hi")),
                           as_count(require(v, "count", path), join_path(path, "count"), 2));
        } catch (const DomainError& e) {
            throw ConfigError(path, e.what());
        }
    } else {
        throw ConfigError(path, "expected an array or {lo, hi, count}");
    }
    if (r.empty()) throw ConfigError(path, "radius grid is empty");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0) || (i && !(r[i] > r[i - 1]))) throw ConfigError(path, "radii must be positive and increasing");
    }
    return r;
}

inline std::vector<Shift> parse_directions(const Json& v, const std::string& path, std::size_t dim) {
    if (v.is_string()) {
        if (v.get<std::string>() != "axes") throw ConfigError(path, "expected \"axes\" or an array of vectors");
        return axis_directions(dim);
    }
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected \"axes\" or a non-empty array of vectors");
    std::vector<Shift> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_shift(v[i], index_path(path, i), dim));
        if (out.back().is_zero()) throw ConfigError(index_path(path, i), "direction must be nonzero");
    }
    return out;
}

inline void parse_grids(const Json& v, RunConfig& c) {
    const std::string path = "grids";
    if (!v.is_object()) throw ConfigError(path, "expected an object");
    reject_unknown(v, path, {"theta", "radii", "directions", "zeta", "theta_probes", "ladder"});
    const auto dim = c.model.parameter_dim();
    if (v.contains("theta")) c.theta_grid = parse_theta_grid(v.at("theta"), "grids.theta", dim);
    if (v.contains("radii")) {
        c.radii = parse_radii(v.at("radii"), "grids.radii");
        c.regularity_requested = true;
    }
    if (v.contains("directions")) c.directions = parse_directions(v.at("directions"), "grids.directions", dim);
    if (v.contains("theta_probes")) {
        const auto& p = v.at("theta_probes");
        if (!p.is_array() || p.empty()) throw ConfigError("grids.theta_probes", "expected a non-empty array");
        c.theta_probes.clear();
        for (std::size_t i = 0; i < p.size(); ++i) {
            c.theta_probes.push_back(as_number(p[i], index_path("grids.theta_probes", i)));
            if (c.theta_probes.back() == 0.0) throw ConfigError(index_path("grids.theta_probes", i), "must be nonzero");
        }
    }
    if (v.contains("ladder")) {
        const auto& l = v.at("ladder");
        if (!l.is_object()) throw ConfigError("grids.ladder", "expected {first, last}");
        reject_unknown(l, "grids.ladder", {"first", "last"});
        c.ladder_first = static_cast<int>(as_integer(require(l, "first", "grids.ladder"), "grids.ladder.first"));
        c.ladder_last = static_cast<int>(as_integer(require(l, "last", "grids.ladder"), "grids.ladder.last"));
        if (c.ladder_last - c.ladder_first < 2) throw ConfigError("grids.ladder", "needs at least three rungs");
        if (c.ladder_first < 0 || c.ladder_last > 60) throw ConfigError("grids.ladder", "exponents must lie in [0, 60]");
    }
}

} // namespace detail

inline Experiment parse_experiment(const std::string& name) {
    for (auto e : {Experiment::power_curve, Experiment::dominance, Experiment::calibrate_np, Experiment::blend_search,
                   Experiment::condition_check, Experiment::gaussian_d_compare, Experiment::convexity_demo}) {
        if (name == to_string(e)) return e;
    }
    throw ConfigError("experiment", "unknown experiment '" + name + "'");
}

/// Validates a parsed JSON document and resolves it into a RunConfig.
/// `seed_override` replaces (or supplies) the seed.
inline RunConfig parse_config(const Json& j, std::optional<std::uint64_t> seed_override = std::nullopt) {
    using namespace detail;
    if (!j.is_object()) throw ConfigError("(root)", "expected an object");
    reject_unknown(j, "", {"schema_version", "experiment", "seed", "alpha", "n_samples", "model", "tests", "prior",
                           "grids", "method", "grid_oracle", "blend", "convexity", "outputs", "description"});
    RunConfig c;
    c.schema_version = static_cast<int>(as_integer(require(j, "schema_version", ""), "schema_version"));
    if (c.schema_version != kSchemaVersion) {
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                                                " (expected " + std::to_string(kSchemaVersion) + ")");
    }
    c.experiment = parse_experiment(as_string(require(j, "experiment", ""), "experiment"));

    if (seed_override) {
        c.seed = *seed_override;
    } else {
        const auto& s = require(j, "seed", "");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
            throw ConfigError("seed", "expected a non-negative integer");
        }
        c.seed = s.get<std::uint64_t>();
    }

    if (j.contains("alpha")) {
        c.alpha = as_number(j.at("alpha"), "alpha");
        if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
    }
    if (j.contains("n_samples")) c.n_samples = as_count(j.at("n_samples"), "n_samples", kMinMonteCarloSamples);

    if (j.contains("model")) {
        try {
            c.model = parse_model(j.at("model"), "model");
        } catch (const DomainError& e) {
            throw ConfigError("model", e.what());
        }
    }
    const auto dim = c.model.parameter_dim();

    if (j.contains("tests")) {
        const auto& t = j.at("tests");
        if (!t.is_array()) throw ConfigError("tests", "expected an array");
        for (std::size_t i = 0; i < t.size(); ++i) c.tests.push_back(parse_test(t[i], index_path("tests", i)));
    }
    if (j.contains("prior")) c.prior = parse_prior(j.at("prior"), "prior", dim);

    c.theta_grid = parse_theta_grid(Json{{"lo", -3.0}, {"hi", 3.0}, {"count", 13}}, "grids.theta", dim);
    c.radii = log_spaced(0.1, 10.0, 25);
    c.directions = axis_directions(dim);
    if (j.contains("grids")) parse_grids(j.at("grids"), c);

    if (j.contains("method")) {
        const auto m = as_string(j.at("method"), "method");
        if (m == "mc") c.method = CurveMethod::mc;
        else if (m == "closed_form_if_available") c.method = CurveMethod::closed_form_if_available;
        else throw ConfigError("method", "expected 'mc' or 'closed_form_if_available'");
    }
    if (j.contains("grid_oracle")) {
        const auto& g = j.at("grid_oracle");
        if (!g.is_object()) throw ConfigError("grid_oracle", "expected {lo, hi, cells}");
        reject_unknown(g, "grid_oracle", {"lo", "hi", "cells"});
        GridSpec s;
        s.lo = number_or(g, "lo", "grid_oracle", s.lo);
        s.hi = number_or(g, "hi", "grid_oracle", s.hi);
        if (g.contains("cells")) s.cells = as_count(g.at("cells"), "grid_oracle.cells", 1);
        if (s.cells > 400) throw ConfigError("grid_oracle.cells", "at most 400 cells per axis");
        if (!(s.hi > s.lo)) throw ConfigError("grid_oracle", "needs hi > lo");
        c.grid_oracle = s;
    }
    c.blend.n_samples = c.n_samples;
    if (j.contains("blend")) {
        const auto& b = j.at("blend");
        if (!b.is_object()) throw ConfigError("blend", "expected an object");
        reject_unknown(b, "blend", {"ladder_first", "ladder_last", "level_tol", "calibration_samples", "regularity_samples",
                                    "regularity_radii", "regularity_epsilon"});
        if (b.contains("ladder_first")) c.blend.ladder_first = static_cast<int>(as_integer(b.at("ladder_first"), "blend.ladder_first"));
        if (b.contains("ladder_last")) c.blend.ladder_last = static_cast<int>(as_integer(b.at("ladder_last"), "blend.ladder_last"));
        if (c.blend.ladder_first < 0 || c.blend.ladder_last < c.blend.ladder_first || c.blend.ladder_last > 60) {
            throw ConfigError("blend.ladder_last", "ladder exponents must satisfy 0 <= first <= last <= 60");
        }
        c.blend.level_tol = number_or(b, "level_tol", "blend", c.blend.level_tol);
        if (!(c.blend.level_tol > 0.0)) throw ConfigError("blend.level_tol", "must be positive");
        if (b.contains("calibration_samples")) {
            c.blend.calibration_samples = as_count(b.at("calibration_samples"), "blend.calibration_samples", kMinMonteCarloSamples);
        }
        if (b.contains("regularity_samples")) {
            c.blend.regularity_samples = as_count(b.at("regularity_samples"), "blend.regularity_samples", kMinMonteCarloSamples);
        }
        if (b.contains("regularity_radii")) c.blend.regularity_radii = as_count(b.at("regularity_radii"), "blend.regularity_radii", 2);
        c.blend.regularity_epsilon = number_or(b, "regularity_epsilon", "blend", c.blend.regularity_epsilon);
        if (!(c.blend.regularity_epsilon > 0.0 && c.blend.regularity_epsilon < 1.0)) {
            throw ConfigError("blend.regularity_epsilon", "must lie in (0, 1)");
        }
    }
    if (j.contains("convexity")) {
        const auto& v = j.at("convexity");
        if (!v.is_object()) throw ConfigError("convexity", "expected an object");
        reject_unknown(v, "convexity", {"delta", "dim", "perturbation", "trials", "threshold"});
        if (v.contains("threshold")) {
            c.convexity.threshold = as_number(v.at("threshold"), "convexity.threshold");
            if (!(*c.convexity.threshold > 0.0)) throw ConfigError("convexity.threshold", "must be positive");
        }
        c.convexity.delta = number_or(v, "delta", "convexity", c.convexity.delta);
        if (v.contains("dim")) c.convexity.dim = as_count(v.at("dim"), "convexity.dim", 2);
        c.convexity.perturbation = number_or(v, "perturbation", "convexity", c.convexity.perturbation);
        if (v.contains("trials")) c.convexity.trials = as_count(v.at("trials"), "convexity.trials", 1);
        if (!(c.convexity.perturbation >= 0.0)) throw ConfigError("convexity.perturbation", "must be non-negative");
        if (!(c.convexity.delta > 1.0 && c.convexity.delta < std::sqrt(2.0))) {
            throw ConfigError("convexity.delta", "must lie in (1, sqrt(2))");
        }
    }

    const std::string stem = to_string(c.experiment);
    c.csv_name = stem + ".csv";
    c.json_name = stem + ".json";
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        if (!o.is_object()) throw ConfigError("outputs", "expected {csv, json}");
        reject_unknown(o, "outputs", {"csv", "json"});
        if (o.contains("csv")) c.csv_name = as_string(o.at("csv"), "outputs.csv");
        if (o.contains("json")) c.json_name = as_string(o.at("json"), "outputs.json");
    }

    // Experiment-specific requirements.
    const auto need_tests = [&](std::size_t lo, std::size_t hi) {
        if (c.tests.size() < lo || c.tests.size() > hi) {
            throw ConfigError("tests", std::string(to_string(c.experiment)) + " needs " +
                                           (lo == hi ? std::to_string(lo) : std::to_string(lo) + " or more") + " test(s)");
        }
    };
    switch (c.experiment) {
    case Experiment::power_curve: need_tests(1, 64); break;
    case Experiment::dominance: need_tests(2, 2); break;
    case Experiment::calibrate_np:
        if (!c.prior) throw ConfigError("prior", "calibrate-np needs a prior");
        break;
    case Experiment::blend_search:
        need_tests(1, 1);
        if (!c.prior) throw ConfigError("prior", "blend-search needs a prior");
        break;
    case Experiment::condition_check:
        if (!c.model.as_pair()) throw ConfigError("model.kind", "condition-check needs a pair model");
        break;
    case Experiment::gaussian_d_compare:
        if (!c.model.is_gaussian()) throw ConfigError("model.kind", "gaussian-d-compare needs a gaussian model");
        need_tests(1, 64);
        break;
    case Experiment::convexity_demo: break;
    }
    for (const auto& t : c.tests) {
        if (t.kind == "np" && !c.prior) throw ConfigError(t.path + ".kind", "np test needs a prior");
    }
    return c;
}

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("(file)", "cannot open " + path.string());
    try {
        return Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw ConfigError("(file)", std::string("malformed JSON: ") + e.what());
    }
}

inline RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
    return parse_config(read_json_file(path), seed_override);
}

} // namespace moran
