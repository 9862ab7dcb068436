#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "sdw/cli.hpp"

using namespace sdw;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("sdw_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// Fast single-node toy: contact at t = 1 with a layer of width ~ 1e-2.
fs::path write_toy_config(const fs::path& dir, double eps = 1e-4) {
    nlohmann::json j = default_toy_config();
    j["graph"]["epsilon"] = eps;
    j["checks"] = {{"seed", 3}, {"candidates", 20}};
    j["sweep"] = {{"eps", {1e-2, 1e-3, 1e-4}}};
    const fs::path p = dir / "toy.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(SDWAVE_EXE) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Simulate, WritesArtifactsAndPasses) {
    const fs::path d = scratch("sim");
    const RunManifest m = cmd_simulate(write_toy_config(d), d / "run");
    EXPECT_EQ(m.exit_code(), kExitPass);
    for (auto f : {kTrajectoryFile, kEnergyFile, kXiFile, kSummaryFile, kManifestFile})
        EXPECT_TRUE(fs::exists(d / "run" / f)) << f;
    std::vector<std::string> names;
    for (const auto& v : m.verdicts) names.push_back(v.name);
    for (const char* n : {"energy_inequality", "subdifferential", "weak_residual", "overshoot_bound"})
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;

    std::vector<std::string> header;
    const auto rows = detail::read_numeric_csv(d / "run" / kTrajectoryFile, header);
    EXPECT_EQ(header, (std::vector<std::string>{"t", "node", "u", "v", "beta_eps_u", "beta_u"}));
    EXPECT_EQ(rows.size(), 20001u);
    const auto manifest = read_json(d / "run" / kManifestFile);
    EXPECT_EQ(manifest["config_hash"], m.config_hash);
    EXPECT_EQ(manifest["tool_version"], std::string(kToolVersion));
    EXPECT_TRUE(manifest["all_pass"].get<bool>());
}

TEST(Simulate, SameConfigSameHashAndNumbers) {
    const fs::path d = scratch("hash");
    const fs::path cfg = write_toy_config(d);
    const RunManifest a = cmd_simulate(cfg, d / "a");
    const RunManifest b = cmd_simulate(cfg, d / "b");
    EXPECT_EQ(a.config_hash, b.config_hash);
    EXPECT_EQ(slurp(d / "a" / kTrajectoryFile), slurp(d / "b" / kTrajectoryFile));
    const RunManifest c = cmd_simulate(write_toy_config(scratch("hash2"), 2e-4), d / "c");
    EXPECT_NE(a.config_hash, c.config_hash);
}

TEST(Verify, IdempotentAndAgreesWithSimulate) {
    const fs::path d = scratch("verify");
    const RunManifest sim = cmd_simulate(write_toy_config(d), d / "run");
    const RunManifest v1 = cmd_verify(d / "run");
    const std::string first = slurp(d / "run" / "verify.json");
    const RunManifest v2 = cmd_verify(d / "run");
    EXPECT_EQ(first, slurp(d / "run" / "verify.json"));
    EXPECT_EQ(v1.exit_code(), kExitPass);
    EXPECT_EQ(v1.config_hash, sim.config_hash);
    ASSERT_EQ(v1.verdicts.size(), sim.verdicts.size());
    for (std::size_t i = 0; i < sim.verdicts.size(); ++i) {
        EXPECT_EQ(v1.verdicts[i].name, sim.verdicts[i].name);
        EXPECT_EQ(v1.verdicts[i].pass, sim.verdicts[i].pass);
        EXPECT_NEAR(v1.verdicts[i].value, sim.verdicts[i].value, 1e-9 * (1 + std::abs(sim.verdicts[i].value)))
            << sim.verdicts[i].name;
    }
}

TEST(Verify, TamperedEnergyTableFails) {
    const fs::path d = scratch("tamper");
    cmd_simulate(write_toy_config(d), d / "run");
    const fs::path e = d / "run" / kEnergyFile;
    std::vector<std::string> lines;
    {
        std::ifstream in(e);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    // bump the total column of the last row
    std::string& last = lines.back();
    std::vector<std::string> cols;
    std::stringstream ss(last);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    cols[5] = fmt17(std::stod(cols[5]) + 0.25);
    last.clear();
    for (std::size_t i = 0; i < cols.size(); ++i) last += (i ? "," : "") + cols[i];
    {
        std::ofstream out(e);
        for (const auto& l : lines) out << l << '\n';
    }
    const RunManifest v = cmd_verify(d / "run");
    EXPECT_EQ(v.exit_code(), kExitCheckFailure);
    EXPECT_EQ(run_tool("verify --out " + (d / "run").string()), 1);
}

TEST(Verify, MissingArtifacts) {
    const fs::path d = scratch("empty");
    EXPECT_THROW(cmd_verify(d), MissingArtifact);
    EXPECT_THROW(cmd_verify(d / "nope"), MissingArtifact);
    EXPECT_EQ(run_tool("verify --out " + d.string()), 2);
}

TEST(Sweep, RejectsShortOrUnorderedLists) {
    const fs::path d = scratch("sweep_bad");
    const fs::path cfg = write_toy_config(d);
    EXPECT_THROW(cmd_sweep(cfg, {1e-2, 1e-3}, d / "out"), ConfigError);
    EXPECT_THROW(cmd_sweep(cfg, {1e-3, 1e-2, 1e-4}, d / "out"), ConfigError);
    EXPECT_EQ(run_tool("sweep --config " + cfg.string() + " --eps 1e-2,1e-3 --out " + (d / "out").string()), 2);
}

TEST(Sweep, WritesReportAndPasses) {
    const fs::path d = scratch("sweep");
    const RunManifest m = cmd_sweep(write_toy_config(d), {}, d / "out");
    EXPECT_EQ(m.exit_code(), kExitPass);
    const fs::path root = d / "out" / m.config_hash;
    const auto report = read_json(root / "sweep_report.json");
    EXPECT_EQ(report["runs"].size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(root / ("eps_" + std::to_string(k)) / kSummaryFile));
    EXPECT_TRUE(report["da_regularity"]["skipped"].get<bool>() == false ||
                report["da_regularity"]["diagnostic"] == "u0 not in D(A)");
    EXPECT_TRUE(report["limsup"]["pass"].get<bool>());
    // every per-run directory verifies on its own
    EXPECT_EQ(cmd_verify(root / "eps_2").exit_code(), kExitPass);
}

TEST(Toy, DefaultRunMatchesOracles) {
    const fs::path d = scratch("toy");
    const RunManifest m = cmd_toy(std::nullopt, d);
    EXPECT_EQ(m.exit_code(), kExitPass);
    EXPECT_TRUE(fs::exists(d / "toy_comparison.csv"));
    EXPECT_TRUE(fs::exists(d / "phase_portrait.csv"));
    for (const auto& v : m.verdicts) EXPECT_LE(v.value, v.tolerance) << v.name;
}

TEST(Toy, RejectsNonToyConfig) {
    const fs::path d = scratch("toy_bad");
    EXPECT_THROW(cmd_toy(fs::path(SDW_SOURCE_DIR) / "configs" / "dirichlet_sine.json", d), ConfigError);
}

TEST(Tool, ExitCodes) {
    const fs::path d = scratch("tool");
    EXPECT_EQ(run_tool("simulate --config " + write_toy_config(d).string() + " --out " + (d / "run").string()), 0);
    EXPECT_EQ(run_tool("simulate --config /nonexistent.json"), 2);
    EXPECT_EQ(run_tool("frobnicate"), 2);
    EXPECT_EQ(run_tool("--help"), 0);
}

TEST(ParseEpsList, Examples) {
    EXPECT_EQ(parse_eps_list("1e-2,1e-3"), (std::vector<double>{1e-2, 1e-3}));
    EXPECT_THROW(parse_eps_list("1e-2,,1e-3"), ConfigError);
    EXPECT_THROW(parse_eps_list("1e-2,x"), ConfigError);
}
