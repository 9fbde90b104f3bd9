#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "spectral/cli.hpp"
#include "spectral/config.hpp"

using namespace spectral;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal_semicircle() {
    return nlohmann::json::parse(R"({"model": {"n": 200, "sigma": 1.0}})");
}

nlohmann::json spikes_config() {
    return nlohmann::json::parse(R"({
      "model": {"n": 16, "sigma": 1.0,
                "bulk": {"type": "delta", "at": 0.0},
                "spike_law": {"type": "uniform", "lo": 2.0, "hi": 3.0},
                "rank_rule": {"type": "constant", "r": 4}}
    })");
}

bool has_violation(const ConfigResult& r, const std::string& text) {
    for (const auto& v : r.violations)
        if (v.find(text) != std::string::npos) return true;
    return false;
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("spectral_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

    fs::path write(const std::string& name, const nlohmann::json& j) const {
        std::ofstream(path_ / name) << j.dump(2);
        return path_ / name;
    }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "spectral");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return code;
}

std::set<fs::path> files_under(const fs::path& root) {
    std::set<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) out.insert(fs::relative(e.path(), root));
    return out;
}

} // namespace

TEST(Config, MinimalIsValid) {
    const auto r = validate_config(minimal_semicircle());
    ASSERT_TRUE(r.config.has_value()) << (r.violations.empty() ? "" : r.violations.front());
    EXPECT_EQ(r.config->size(), 200u);
    EXPECT_EQ(r.config->bulk_measure(), SpectralMeasure::delta(0.0));
}

TEST(Config, NegativeSigma) {
    auto doc = minimal_semicircle();
    doc["model"]["sigma"] = -1.0;
    const auto r = validate_config(doc);
    EXPECT_FALSE(r.config.has_value());
    EXPECT_TRUE(has_violation(r, "sigma must be positive"));
}

TEST(Config, PowerExponentOutOfRange) {
    auto doc = spikes_config();
    doc["model"]["rank_rule"] = {{"type", "power"}, {"alpha", 1.5}};
    const auto r = validate_config(doc);
    EXPECT_TRUE(has_violation(r, "α in (0,1)"));
}

TEST(Config, CollectsEveryViolation) {
    auto doc = spikes_config();
    doc["model"]["sigma"] = -1.0;
    doc["model"]["colour"] = "red";
    doc["solver"] = {{"damping", 2.0}};
    doc["output"] = {{"formats", {"xml"}}};
    doc["extra"] = 1;
    const auto r = validate_config(doc);
    EXPECT_FALSE(r.config.has_value());
    EXPECT_TRUE(has_violation(r, "sigma must be positive"));
    EXPECT_TRUE(has_violation(r, "unknown key 'model.colour'"));
    EXPECT_TRUE(has_violation(r, "unknown key 'extra'"));
    EXPECT_TRUE(has_violation(r, "damping"));
    EXPECT_TRUE(has_violation(r, "formats"));
    EXPECT_GE(r.violations.size(), 5u);
}

TEST(Config, MissingFieldsAreNamed) {
    const auto r = validate_config(nlohmann::json::parse(R"({"model": {"n": 10}})"));
    EXPECT_TRUE(has_violation(r, "model.sigma is required"));
    const auto r2 = validate_config(nlohmann::json::object());
    EXPECT_TRUE(has_violation(r2, "model is required"));
}

TEST(Config, EnsembleConstraintsChecked) {
    auto doc = spikes_config();
    doc["model"]["n"] = 8;  // 4 spikes > 8 / 4
    EXPECT_TRUE(has_violation(validate_config(doc), "N/4"));
    doc = spikes_config();
    doc["model"]["spike_law"] = {{"type", "uniform"}, {"lo", -1.0}, {"hi", 1.0}};
    EXPECT_TRUE(has_violation(validate_config(doc), "positive distance"));
}

TEST(Config, RoundTrip) {
    auto doc = spikes_config();
    doc["model"]["n_grid"] = {16, 32};
    doc["experiment"] = nlohmann::json::parse(
        R"({"kind": "outlier", "trials": 3, "seed": 9, "intervals": [[3.6, 10]], "spike_intervals": [[2.25, 2.75]], "probes": [[1, 1]]})");
    doc["solver"] = {{"tol", 1e-12}};
    const auto first = validate_config(doc);
    ASSERT_TRUE(first.config.has_value());
    const auto emitted = to_json(*first.config);
    const auto second = validate_config(nlohmann::json::parse(emitted.dump()));
    ASSERT_TRUE(second.config.has_value());
    EXPECT_EQ(*first.config, *second.config);
    EXPECT_EQ(to_json(*second.config).dump(), emitted.dump());
}

TEST(Config, LawForms) {
    auto doc = minimal_semicircle();
    doc["model"]["bulk"] = {{"type", "atomic"}, {"atoms", {{-1.0, 0.5}, {1.0, 0.5}}}};
    EXPECT_TRUE(validate_config(doc).config.has_value());
    doc["model"]["bulk"] = {{"type", "semicircle"}, {"sigma", 0.5}};
    EXPECT_TRUE(validate_config(doc).config.has_value());
    doc["model"]["bulk"] = to_json(SpectralMeasure::uniform(-1.0, 1.0));
    EXPECT_TRUE(validate_config(doc).config.has_value());
    doc["model"]["bulk"] = {{"type", "atomic"}, {"atoms", {{-1.0, 0.5}}}};
    EXPECT_FALSE(validate_config(doc).config.has_value());
    doc["model"]["bulk"] = {{"type", "cauchy"}};
    EXPECT_FALSE(validate_config(doc).config.has_value());
}

TEST(Cli, SolveWritesDensity) {
    TempDir tmp;
    const auto cfg = tmp.write("semicircle.json", minimal_semicircle());
    ASSERT_EQ(run({"solve", "--config", cfg.string(), "--output-dir", (tmp.path() / "out").string()}), 0);
    std::ifstream csv(tmp.path() / "out" / "density.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "x,rho");
    double best_x = 1e9, best_rho = 0.0;
    while (std::getline(csv, line)) {
        const double x = std::stod(line.substr(0, line.find(',')));
        const double rho = std::stod(line.substr(line.find(',') + 1));
        if (std::abs(x) < std::abs(best_x)) best_x = x, best_rho = rho;
    }
    EXPECT_NEAR(best_rho, 1.0 / std::numbers::pi, 1e-3);
    const auto support = nlohmann::json::parse(slurp(tmp.path() / "out" / "support.json"));
    EXPECT_NEAR(support["support"][0][1].get<double>(), 2.0, 1e-3);
    EXPECT_TRUE(fs::exists(tmp.path() / "out" / "config.json"));
}

TEST(Cli, PredictWritesPositions) {
    TempDir tmp;
    const auto cfg = tmp.write("spikes.json", spikes_config());
    ASSERT_EQ(run({"predict", "-c", cfg.string(), "-o", (tmp.path() / "out").string()}), 0);
    const auto j = nlohmann::json::parse(slurp(tmp.path() / "out" / "prediction.json"));
    const std::vector<double> ref{3.222826, 3.005952, 2.796053, 2.595588};
    ASSERT_EQ(j["mapped_positions"].size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(j["mapped_positions"][k].get<double>(), ref[k], 1e-4);
}

TEST(Cli, SampleWritesMatrices) {
    TempDir tmp;
    const auto cfg = tmp.write("spikes.json", spikes_config());
    ASSERT_EQ(run({"sample", "-c", cfg.string(), "-o", (tmp.path() / "out").string(), "--seed", "3"}), 0);
    std::ifstream w(tmp.path() / "out" / "W.symm", std::ios::binary);
    const auto mat = read_symm(w);
    EXPECT_EQ(mat.size(), 16u);
    std::ifstream s(tmp.path() / "out" / "S.symm", std::ios::binary);
    EXPECT_DOUBLE_EQ(read_symm(s)(0, 0), 2.875);
    EXPECT_TRUE(fs::exists(tmp.path() / "out" / "eigenvalues.csv"));
}

TEST(Cli, ExperimentIsReproducible) {
    TempDir tmp;
    auto doc = minimal_semicircle();
    doc["model"].erase("n");
    doc["model"]["n_grid"] = {16, 24, 32};
    doc["experiment"] = {{"kind", "rate"}, {"trials", 100}, {"probes", {{1.0, 1.0}}}};
    const auto cfg = tmp.write("rate.json", doc);
    const auto a = tmp.path() / "a", b = tmp.path() / "b";
    ASSERT_EQ(run({"experiment", "-c", cfg.string(), "-o", a.string(), "--seed", "7"}), 0);
    ASSERT_EQ(run({"experiment", "-c", cfg.string(), "-o", b.string(), "--seed", "7"}), 0);
    EXPECT_EQ(files_under(a), (std::set<fs::path>{"config.json", "rate.csv", "rate_report.json"}));
    for (const auto& f : {"rate.csv", "rate_report.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    auto resolved = nlohmann::json::parse(slurp(a / "config.json"));
    auto resolved_b = nlohmann::json::parse(slurp(b / "config.json"));
    EXPECT_EQ(resolved["output"]["dir"], a.string());
    resolved["output"].erase("dir");
    resolved_b["output"].erase("dir");
    EXPECT_EQ(resolved, resolved_b);
    EXPECT_EQ(resolved["experiment"]["seed"], 7);
}

TEST(Cli, WritesOnlyInsideOutputDir) {
    TempDir tmp;
    const auto cfg = tmp.write("spikes.json", spikes_config());
    const auto before = files_under(tmp.path());
    ASSERT_EQ(run({"predict", "-c", cfg.string(), "-o", (tmp.path() / "out").string()}), 0);
    auto after = files_under(tmp.path());
    for (const auto& f : before) after.erase(f);
    for (const auto& f : after) EXPECT_EQ(*f.begin(), fs::path("out")) << f;
}

TEST(Cli, ExitCodes) {
    TempDir tmp;
    std::string err;
    EXPECT_EQ(run({"solve", "--config", (tmp.path() / "missing.json").string()}, &err), 1);
    EXPECT_NE(err.find("missing.json"), std::string::npos);

    auto doc = minimal_semicircle();
    doc["model"]["sigma"] = -1.0;
    EXPECT_EQ(run({"solve", "-c", tmp.write("bad.json", doc).string()}, &err), 1);
    EXPECT_NE(err.find("sigma must be positive"), std::string::npos);

    doc = minimal_semicircle();
    doc["solver"] = {{"max_iter", 1}, {"damping", 0.01}};
    EXPECT_EQ(run({"solve", "-c", tmp.write("stiff.json", doc).string(), "-o", (tmp.path() / "o").string()}, &err), 2);

    EXPECT_EQ(run({"bogus"}), 1);
    EXPECT_EQ(run({"solve"}), 1);
}

TEST(Cli, VerboseLogsToStderr) {
    TempDir tmp;
    const auto cfg = tmp.write("semi.json", minimal_semicircle());
    std::string err;
    ASSERT_EQ(run({"solve", "-c", cfg.string(), "-o", (tmp.path() / "q").string()}, &err), 0);
    EXPECT_TRUE(err.empty());
    ASSERT_EQ(run({"solve", "-c", cfg.string(), "-o", (tmp.path() / "v").string(), "-v"}, &err), 0);
    EXPECT_NE(err.find("support:"), std::string::npos);
}
