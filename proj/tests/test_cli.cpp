#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "sles/cli.hpp"

using namespace sles;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "sles_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
protected:
    fs::path dir;
    fs::path config;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / ("sles_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        config = dir / "config.json";
        write(config, R"({"n_fine": 24, "n_coarse": 6, "dt": 0.01, "t_end": 0.3, "members": 4,
                          "les_members": 4, "delta": 0.05, "seed": 9, "trajectory_stride": 5})");
    }
    void TearDown() override { fs::remove_all(dir); }

    void pipeline(const fs::path& out, const fs::path& cfg) {
        for (const char* cmd : {"run-benchmark", "calibrate", "run-sles"}) {
            const auto r = run({cmd, "--config", cfg.string(), "--out", out.string()});
            ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
        }
        const auto r = run({"compare", "--config", cfg.string(), "--out", out.string(), "--baseline"});
        ASSERT_EQ(r.code, 0) << r.err;
        ASSERT_EQ(run({"fbm-sample", "--config", cfg.string(), "--out", out.string()}).code, 0);
    }
};

}  // namespace

TEST_F(CliTest, FullPipelineEmitsAllArtifacts) {
    const auto out = dir / "run";
    pipeline(out, config);
    for (const char* a : {artifact::manifest, artifact::fine, artifact::filtered, artifact::raw, artifact::sgs,
                          artifact::drift, artifact::sigma, artifact::les, artifact::errors, artifact::summary,
                          artifact::baseline, artifact::baseline_errors, artifact::fbm}) {
        EXPECT_TRUE(fs::exists(out / a)) << a;
    }
    const auto manifest = Json::parse(slurp(out / artifact::manifest));
    EXPECT_EQ(manifest.at("tool_version"), tool_version);
    EXPECT_EQ(manifest.at("parameters").at("members"), 4);
    EXPECT_EQ(manifest.at("seeds").at("master"), 9);
    for (const char* stage : {"run-benchmark", "calibrate", "run-sles", "compare", "fbm-sample"}) {
        EXPECT_TRUE(manifest.at("artifacts").contains(stage)) << stage;
    }
    const auto summary = Json::parse(slurp(out / artifact::summary));
    for (const char* key : {"l2_time_avg", "max_error", "raw_l2_time_avg", "baseline_l2_time_avg"}) {
        ASSERT_TRUE(summary.contains(key)) << key;
        EXPECT_GT(summary.at(key).get<double>(), 0.0);
    }
    const auto header = slurp(out / artifact::errors).substr(0, 36);
    EXPECT_EQ(header, "t,x,error_vs_filtered,error_vs_raw\n0");
    EXPECT_EQ(slurp(out / artifact::sigma).substr(0, 8), "x,sigma\n");
    const auto drift = Json::parse(slurp(out / artifact::drift));
    for (const char* key : {"a0", "a1", "a2", "a3", "condition_number"}) EXPECT_TRUE(drift.contains(key)) << key;
}

TEST_F(CliTest, CompareOfIdenticalInputsIsZero) {
    const auto out = dir / "run";
    pipeline(out, config);
    fs::copy_file(out / artifact::filtered, out / artifact::les, fs::copy_options::overwrite_existing);
    const auto r = run({"compare", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = Json::parse(slurp(out / artifact::summary));
    EXPECT_EQ(summary.at("l2_time_avg").get<double>(), 0.0);
    EXPECT_EQ(summary.at("max_error").get<double>(), 0.0);
}

TEST_F(CliTest, RerunFromManifestIsByteIdentical) {
    const auto a = dir / "a";
    const auto b = dir / "b";
    pipeline(a, config);
    const auto manifest_copy = dir / "manifest_a.json";
    fs::copy_file(a / artifact::manifest, manifest_copy);
    pipeline(b, manifest_copy);
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
        ++compared;
    }
    EXPECT_EQ(compared, 13u);
}

TEST_F(CliTest, SeedOverrideChangesTheEnsemble) {
    const auto a = dir / "a";
    const auto b = dir / "b";
    ASSERT_EQ(run({"run-benchmark", "--config", config.string(), "--out", a.string()}).code, 0);
    ASSERT_EQ(run({"run-benchmark", "--config", config.string(), "--out", b.string(), "--seed", "10"}).code, 0);
    EXPECT_NE(slurp(a / artifact::sgs), slurp(b / artifact::sgs));
    EXPECT_EQ(Json::parse(slurp(b / artifact::manifest)).at("parameters").at("seed"), 10);
}

TEST_F(CliTest, MembersFlagSetsBothEnsembleSizes) {
    const auto out = dir / "run";
    ASSERT_EQ(run({"run-benchmark", "--config", config.string(), "--out", out.string(), "--members", "3"}).code, 0);
    const auto p = Json::parse(slurp(out / artifact::manifest)).at("parameters");
    EXPECT_EQ(p.at("members"), 3);
    EXPECT_EQ(p.at("les_members"), 3);
}

TEST_F(CliTest, MissingPrerequisiteNamesTheCommand) {
    const auto out = dir / "empty";
    auto r = run({"calibrate", "--config", config.string(), "--out", out.string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("run-benchmark"), std::string::npos) << r.err;

    ASSERT_EQ(run({"run-benchmark", "--config", config.string(), "--out", out.string()}).code, 0);
    r = run({"run-sles", "--out", out.string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("calibrate"), std::string::npos) << r.err;

    // artifacts produced under other parameters do not count
    ASSERT_EQ(run({"calibrate", "--out", out.string()}).code, 0);
    r = run({"run-sles", "--out", out.string(), "--seed", "123"});
    EXPECT_EQ(r.code, 3);

    fs::remove(out / artifact::sgs);
    r = run({"calibrate", "--out", out.string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("run-benchmark"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConfigErrorsNameTheKey) {
    write(config, R"({"n_fine": 24, "delta_x": 0.1})");
    auto r = run({"run-benchmark", "--config", config.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("delta_x"), std::string::npos) << r.err;

    write(config, R"({"tool_version": "x", "parameters": {"hurst": 1.5}})");
    r = run({"run-benchmark", "--config", config.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("parameters.hurst"), std::string::npos) << r.err;

    write(config, R"({"noise_mode": "sometimes"})");
    r = run({"run-benchmark", "--config", config.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("noise_mode"), std::string::npos) << r.err;

    write(config, "{ not json");
    EXPECT_EQ(run({"run-benchmark", "--config", config.string(), "--out", (dir / "o").string()}).code, 2);
    EXPECT_EQ(run({"run-benchmark", "--config", (dir / "absent.json").string()}).code, 2);
    EXPECT_EQ(run({"no-such-command"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
}

TEST_F(CliTest, BlowUpIsANumericalFailure) {
    const auto out = dir / "run";
    pipeline(out, config);
    auto drift = Json::parse(slurp(out / artifact::drift));
    drift["a3"] = 50.0;
    write(out / artifact::drift, drift.dump());
    const auto r = run({"run-sles", "--out", out.string()});
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("blow-up"), std::string::npos) << r.err;
}

TEST_F(CliTest, ProvenanceMismatchIsRejected) {
    const auto out = dir / "run";
    pipeline(out, config);
    auto drift = Json::parse(slurp(out / artifact::drift));
    drift["provenance"]["hurst"] = 0.6;
    write(out / artifact::drift, drift.dump());
    const auto r = run({"run-sles", "--out", out.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("provenance"), std::string::npos) << r.err;
}

TEST(Config, RoundTripsThroughJson) {
    RunConfig c;
    c.n_fine = 40;
    c.seed = 18446744073709551615ull;
    c.noise_mode = NoiseMode::shared;
    c.filter_normalization = FilterNormalization::literal;
    c.perturbation_mode = PerturbationMode::sine;
    c.wm_zero_adjust = false;
    const auto back = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(config_to_json(config_from_json(Json::object())), config_to_json(RunConfig{}));
}

TEST(Config, RejectsWrongTypes) {
    EXPECT_THROW((void)config_from_json(Json{{"members", -3}}), Error);
    EXPECT_THROW((void)config_from_json(Json{{"n_fine", 16.5}}), Error);
    EXPECT_THROW((void)config_from_json(Json{{"wm_zero_adjust", 1}}), Error);
    EXPECT_THROW((void)config_from_json(Json{{"t_end", 0.0105}}), Error);
    EXPECT_THROW((void)config_from_json(Json::array()), Error);
}

TEST(Io, SeriesRoundTripIsExact) {
    const ChebyshevGrid g(7);
    std::vector<Trajectory> members;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int m = 0; m < 3; ++m) {
        Trajectory t(g, 1.0 / 3.0);
        for (int k = 0; k < 5; ++k) {
            std::vector<double> v(g.size());
            for (double& x : v) x = normal(rng) * 1e-7;
            t.push_back(v);
        }
        members.push_back(t);
    }
    const auto path = fs::temp_directory_path() / ("sles_io_" + std::to_string(::getpid()) + ".csv");
    io::write_series<TrajectoryTag>(path, members);
    const auto back = io::read_series<TrajectoryTag>(path, g, 1.0 / 3.0, "test");
    ASSERT_EQ(back.size(), 3u);
    for (int m = 0; m < 3; ++m) EXPECT_TRUE(back[static_cast<std::size_t>(m)] == members[static_cast<std::size_t>(m)]);
    EXPECT_THROW((void)io::read_series<TrajectoryTag>(path, ChebyshevGrid(6), 1.0 / 3.0, "test"), Error);
    EXPECT_THROW((void)io::read_series<TrajectoryTag>(path, g, 0.5, "test"), Error);
    fs::remove(path);
}
