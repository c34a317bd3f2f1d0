#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "sles/config.hpp"
#include "sles/error.hpp"
#include "sles/pipeline.hpp"

namespace sles {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int missing_artifact = 3;
inline constexpr int numerical = 4;
}  // namespace exit_code

[[nodiscard]] inline int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::config:
        case ErrorCode::invalid_argument:
        case ErrorCode::domain:
        case ErrorCode::provenance:
        case ErrorCode::alignment:
            return exit_code::config;
        case ErrorCode::missing_artifact:
        case ErrorCode::io:
            return exit_code::missing_artifact;
        default:
            return exit_code::numerical;
    }
}

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> members;
    std::string out = "sles_out";
    bool baseline = false;
};

/// Explicit --config wins; otherwise the manifest already in the output
/// directory; otherwise defaults. --seed and --members override the result.
/// --members sets both the benchmark and the LES ensemble size.
[[nodiscard]] inline RunConfig resolve_config(const CliOptions& opt) {
    RunConfig cfg;
    const auto manifest = std::filesystem::path(opt.out) / artifact::manifest;
    if (!opt.config_path.empty()) {
        cfg = load_config(opt.config_path);
    } else if (std::filesystem::exists(manifest)) {
        cfg = load_config(manifest.string());
    }
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.members) {
        cfg.members = *opt.members;
        cfg.les_members = *opt.members;
    }
    cfg.validate();
    return cfg;
}

/// Runs one command; returns the process exit status.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic large eddy simulation pipeline with a memory-kernel reaction-diffusion benchmark"};
    app.require_subcommand(1);
    CliOptions opt;
    auto common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON config or manifest");
        sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
        sub->add_option("--out", opt.out, "output directory")->capture_default_str();
        sub->add_option("--members", opt.members, "ensemble size for the benchmark and the LES");
        return sub;
    };
    auto* bench = common(app.add_subcommand("run-benchmark", "fine-mesh ensemble, filtered fields and SGS terms"));
    auto* calib = common(app.add_subcommand("calibrate", "fit the SGS drift and noise intensity"));
    auto* les = common(app.add_subcommand("run-sles", "stochastic LES ensemble on the coarse grid"));
    auto* cmp = common(app.add_subcommand("compare", "RMSE of the LES against the filtered benchmark"));
    cmp->add_flag("--baseline", opt.baseline, "also evaluate the unparameterized coarse solve");
    auto* fbm = common(app.add_subcommand("fbm-sample", "write one fractional Brownian motion path"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return exit_code::config;
    }

    try {
        const RunConfig cfg = resolve_config(opt);
        const std::filesystem::path dir(opt.out);
        if (bench->parsed()) {
            stage::run_benchmark(cfg, dir);
            out << "run-benchmark: " << cfg.members << " members written to " << dir.string() << "\n";
        } else if (calib->parsed()) {
            const auto model = stage::calibrate(cfg, dir);
            out << "calibrate: drift condition number " << model.drift.condition_number << "\n";
        } else if (les->parsed()) {
            stage::run_sles(cfg, dir);
            out << "run-sles: " << cfg.les_members << " realizations written to " << dir.string() << "\n";
        } else if (cmp->parsed()) {
            out << stage::compare(cfg, dir, opt.baseline).dump(2) << "\n";
        } else if (fbm->parsed()) {
            stage::fbm_sample(cfg, dir);
            out << "fbm-sample: path written to " << (dir / artifact::fbm).string() << "\n";
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::missing_artifact;
    }
    return exit_code::ok;
}

}  // namespace sles
