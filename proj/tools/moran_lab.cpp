#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "moran_lab/experiments.hpp"
#include "moran_lab/reproduce.hpp"

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kReproduceBase = 10 };

int run_config(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::size_t> n_samples,
               const std::filesystem::path& out, bool quiet) {
    auto json = moran::read_json_file(path);
    if (n_samples) json["n_samples"] = *n_samples;
    const auto cfg = moran::parse_config(json, seed);
    if (!quiet) {
        std::cout << moran::to_string(cfg.experiment) << "  model=" << cfg.model.id() << "  seed=" << cfg.seed
                  << "  n=" << cfg.n_samples << '\n';
    }
    const auto art = moran::run(cfg, out, quiet ? nullptr : &std::cout);
    if (!quiet) {
        if (art.summary.contains("tests")) {
            moran::Json th = moran::Json::array();
            for (const auto& t : art.summary["tests"]) th.push_back({{"label", t["label"]}, {"thresholds", t["thresholds"]}});
            std::cout << "thresholds " << th.dump() << '\n';
        }
        std::cout << "wrote " << art.csv.string() << " and " << art.json.string() << '\n';
    }
    return kOk;
}

int run_reproduce(std::optional<std::uint64_t> seed, std::optional<std::size_t> n_samples,
                  const std::filesystem::path& out, bool quiet) {
    moran::ReproduceOptions opt;
    if (seed) opt.seed = *seed;
    if (n_samples) opt.n_samples = *n_samples;
    opt.out = out;
    opt.log = &std::cout;
    const auto rep = moran::reproduce_all(opt);
    const int failed = rep.first_failure();
    if (!quiet) {
        std::cout << (failed ? "first failing criterion: " + std::to_string(failed) : std::string("all criteria passed"))
                  << '\n';
    }
    return failed ? kReproduceBase + failed : kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power studies and admissibility diagnostics for split-sample location tests"};
    std::string config;
    std::uint64_t seed_value = 0;
    std::size_t n_value = 0;
    std::string out = "out";
    bool quiet = false;
    bool reproduce = false;
    auto* cfg_opt = app.add_option("--config", config, "run-config JSON file")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed_value, "root seed (overrides the config)");
    auto* n_opt = app.add_option("--n-samples", n_value, "Monte Carlo sample size (overrides the config)");
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_flag("--quiet", quiet, "suppress the summary table");
    auto* rep_opt = app.add_flag("--reproduce-all", reproduce, "run every acceptance criterion");
    cfg_opt->excludes(rep_opt);
    rep_opt->excludes(cfg_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }
    if (!reproduce && config.empty()) {
        std::cerr << "error: give --config PATH or --reproduce-all\n";
        return kConfig;
    }

    std::optional<std::uint64_t> seed;
    if (*seed_opt) seed = seed_value;
    std::optional<std::size_t> n_samples;
    if (*n_opt) n_samples = n_value;

    try {
        if (n_samples && *n_samples < moran::kMinMonteCarloSamples) {
            throw moran::ConfigError("n_samples", "must be at least " + std::to_string(moran::kMinMonteCarloSamples));
        }
        return reproduce ? run_reproduce(seed, n_samples, out, quiet) : run_config(config, seed, n_samples, out, quiet);
    } catch (const moran::ConfigError& e) {
        std::cerr << "config error at " << e.what() << '\n';
        return kConfig;
    } catch (const moran::DomainError& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return kConfig;
    } catch (const moran::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const moran::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
