#pragma once

// Command implementations behind the sdwave executable: simulate, sweep, toy
// and verify. Each writes plain CSV/JSON into its output directory and
// returns a manifest whose verdicts decide the exit code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdw/artifacts.hpp"
#include "sdw/config.hpp"
#include "sdw/energy.hpp"
#include "sdw/experiments.hpp"
#include "sdw/integrator.hpp"
#include "sdw/test_functions.hpp"
#include "sdw/toy_oracle.hpp"
#include "sdw/weak_limit.hpp"

namespace sdw {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int { kExitPass = 0, kExitCheckFailure = 1, kExitError = 2 };

struct CheckVerdict {
    std::string name;
    bool pass = true;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail{};
};

inline void to_json(nlohmann::json& j, const CheckVerdict& c) {
    j = {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}, {"detail", c.detail}};
}

struct RunManifest {
    std::string config_hash;
    std::string tool_version{kToolVersion};
    std::string started;
    std::string finished;
    std::vector<std::string> files;
    std::vector<CheckVerdict> verdicts;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const CheckVerdict& c) { return c.pass; });
    }
    [[nodiscard]] int exit_code() const { return all_pass() ? kExitPass : kExitCheckFailure; }
};

inline nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json verdicts = nlohmann::json::object();
    for (const auto& c : m.verdicts) verdicts[c.name] = c.pass ? "pass" : "fail";
    return {{"config_hash", m.config_hash}, {"tool_version", m.tool_version}, {"started", m.started},
            {"finished", m.finished},       {"files", m.files},               {"verdicts", verdicts},
            {"all_pass", m.all_pass()}};
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Checks on a stored or fresh trajectory

/// Weak-form residual allowance for a single run: first order in dt plus the
/// boundary-layer width over which the reaction is smeared.
inline double weak_residual_tolerance(const SimConfig& cfg) {
    return 10.0 * (cfg.dt + std::sqrt(cfg.reaction.compliance()));
}

/// Energy, reaction and jump checks. `stored` is the energy table as written
/// to disk; it is cross-checked against the trajectory and then used for the
/// energy inequality, so a corrupted table fails.
inline std::vector<CheckVerdict> run_checks(const Trajectory& traj, const EnergyTable& stored,
                                            const CheckOptions& opts) {
    std::vector<CheckVerdict> out;
    const SimConfig& cfg = traj.config;
    const auto energies = energy_series(traj);

    {
        CheckVerdict c{.name = "energy_table_consistency", .tolerance = 1e-9};
        if (stored.total.size() != energies.size()) {
            c.pass = false;
            c.value = std::numeric_limits<double>::infinity();
            c.detail = "row count differs from trajectory";
        } else {
            for (std::size_t k = 0; k < energies.size(); ++k) {
                const double scale = 1.0 + std::abs(energies[k].total);
                c.value = std::max(c.value, std::abs(stored.total[k] - energies[k].total) / scale);
                c.value = std::max(c.value, std::abs(stored.dissipation_cum[k] - traj.dissipation_cum[k]) / scale);
                c.value = std::max(c.value, std::abs(stored.t[k] - traj.times[k]));
            }
            c.pass = !(c.value > c.tolerance);
        }
        out.push_back(c);
    }

    {
        CheckVerdict c{.name = "energy_inequality", .tolerance = default_energy_tolerance(cfg)};
        const std::size_t n = std::min(stored.total.size(), traj.size());
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        if (n >= 2) {
            pairs.emplace_back(0, n - 1);
            std::mt19937_64 rng(opts.seed);
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            while (pairs.size() < 50) {
                std::size_t a = pick(rng), b = pick(rng);
                if (a == b) continue;
                if (a > b) std::swap(a, b);
                pairs.emplace_back(a, b);
            }
        }
        const EnergyLedgerView view{std::span(traj.times).first(n), std::span(stored.total).first(n),
                                    std::span(stored.dissipation_cum).first(n), std::span(traj.work_cum).first(n)};
        const auto rep = energy_inequality_verdict(view, pairs, c.tolerance);
        c.value = rep.min_slack;
        c.pass = rep.all_pass;
        c.detail = std::to_string(pairs.size()) + " pairs";
        out.push_back(c);
    }

    const XiMeasure xi = accumulate_xi(traj);
    {
        CheckVerdict c{.name = "subdifferential", .tolerance = opts.subdifferential_tol};
        const auto cands = random_candidates(opts.seed, opts.candidates, cfg.T, cfg.grid.length());
        const auto rep = subdifferential_check(traj, xi, cands, c.tolerance);
        c.value = rep.min_slack;
        c.pass = rep.all_pass;
        c.detail = std::to_string(cands.size()) + " candidates";
        out.push_back(c);
    }

    {
        CheckVerdict c{.name = "weak_residual", .tolerance = weak_residual_tolerance(cfg)};
        const double T = traj.times.back();
        std::string worst;
        for (const auto& phi : test_dictionary(T, cfg.grid)) {
            const double r = weak_residual(traj, xi, phi, T);
            if (r > c.value) {
                c.value = r;
                worst = phi.name;
            }
        }
        c.pass = !(c.value > c.tolerance);
        c.detail = "largest for " + worst;
        out.push_back(c);
    }

    {
        // energy may not increase across a detected jump (beyond the work of
        // g); on a single node the impulse must also match the nearby mass
        CheckVerdict c{.name = "jump_admissibility", .tolerance = default_energy_tolerance(cfg)};
        const bool single = cfg.grid.size() == 1;
        const double w = 8.0 * std::sqrt(cfg.reaction.compliance()) + 2.0 * cfg.dt;
        const auto jumps = detect_jumps(traj, opts.jump_kappa);
        double mass_defect = 0.0;
        for (const auto& j : jumps) {
            const std::size_t a = traj.index_of(j.t_start), b = traj.index_of(j.t_end);
            const double gain = energies[b].total - energies[a].total - (traj.work_cum[b] - traj.work_cum[a]);
            c.value = std::max(c.value, gain);
            if (single) {
                const double mass = mass_within(xi, 0.5 * (j.t_start + j.t_end), 0.5 * (j.t_end - j.t_start) + w);
                mass_defect = std::max(mass_defect, std::abs(mass - j.impulse) / std::max(j.impulse, 1e-12));
            }
        }
        c.pass = !(c.value > c.tolerance) && !(mass_defect > 0.1);
        c.detail = std::to_string(jumps.size()) + " jumps";
        if (single) c.detail += ", impulse/mass defect " + std::to_string(mass_defect);
        out.push_back(c);
    }

    {
        // reaction of sign +-1 only where u sits at (or beyond) the matching
        // wall; a cell's theta-mean of u may trail the wall by one step of travel
        const double dead = cfg.reaction.dead_zone();
        double vmax = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k)
            for (double vi : traj.v.row(k)) vmax = std::max(vmax, std::abs(vi));
        CheckVerdict c{.name = "reaction_support", .tolerance = (1.0 - dead) + cfg.dt * vmax + 1e-9};
        double largest = 0.0;
        for (std::size_t it = 0; it < xi.n_t(); ++it)
            for (std::size_t ix = 0; ix < xi.n_x(); ++ix) largest = std::max(largest, std::abs(xi.cell(it, ix).mass));
        const double threshold = 1e-3 * largest;
        const auto rep = singular_support_check(xi, threshold);
        c.value = rep.max_defect;
        c.pass = !(c.value > c.tolerance);
        c.detail = std::to_string(rep.n_significant) + " significant cells";
        out.push_back(c);
    }

    {
        CheckVerdict c{.name = "overshoot_bound"};
        const RunSummary s = summarize(traj);
        c.value = s.overshoot;
        c.tolerance = std::sqrt(2.0 * s.compliance * std::max(s.energy_max, 0.0)) + 2.0 * cfg.dt;
        c.pass = !(c.value > c.tolerance);
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Artifacts of one run

namespace detail {

/// Config as stored next to the artifacts: init data inline, the
/// regularization index and time step resolved, so the run can be rebuilt
/// without the original file.
inline nlohmann::json resolved_config(const RunConfig& rc, const SimConfig& sim) {
    nlohmann::json j = rc.raw;
    for (const char* key : {"u0", "u1"}) {
        if (j.contains("init") && j["init"].contains(key) && j["init"][key].is_object())
            j["init"][key] = key == std::string("u0") ? sim.u0 : sim.u1;
    }
    const bool family = rc.family.kind == GraphKind::PiecewiseLinearFamily;
    if (family && j["graph"].contains("eps_param")) j["graph"]["eps_param"] = sim.reaction.regularization();
    else j["graph"]["epsilon"] = sim.reaction.regularization();
    j["time"]["dt"] = sim.dt;
    j["time"].erase("dt_fraction");
    return j;
}

inline nlohmann::json jumps_json(const std::vector<DetectedJump>& jumps) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& j : jumps)
        a.push_back({{"t", j.t}, {"t_start", j.t_start}, {"t_end", j.t_end}, {"v_before", j.v_before},
                     {"v_after", j.v_after}, {"impulse", j.impulse}});
    return a;
}

} // namespace detail

/// Writes the four artifacts of one run plus its manifest and returns the
/// manifest. `stored_config` must rebuild `traj` through parse_config.
inline RunManifest write_run(const fs::path& dir, const Trajectory& traj, const nlohmann::json& stored_config,
                             const CheckOptions& opts, std::string started) {
    fs::create_directories(dir);
    RunManifest m;
    m.started = std::move(started);
    m.config_hash = config_hash(stored_config);

    write_trajectory_csv(dir / kTrajectoryFile, traj);
    write_energy_csv(dir / kEnergyFile, traj);
    const XiMeasure xi = accumulate_xi(traj);
    write_xi_csv(dir / kXiFile, xi);

    m.verdicts = run_checks(traj, read_energy_csv(dir / kEnergyFile), opts);

    nlohmann::json energy = {{"t", traj.times}, {"total", nlohmann::json::array()}};
    for (const auto& e : energy_series(traj)) energy["total"].push_back(e.total);
    const nlohmann::json summary = {
        {"config", stored_config},
        {"config_hash", m.config_hash},
        {"energy", energy},
        {"ledger",
         {{"dissipation_cum", traj.dissipation_cum},
          {"work_cum", traj.work_cum},
          {"bv_cum", traj.bv_cum},
          {"reaction_pairing_cum", traj.reaction_pairing_cum}}},
        {"newton",
         {{"steps", traj.newton.steps},
          {"total_iterations", traj.newton.total_iterations},
          {"max_iterations", traj.newton.max_iterations},
          {"max_residual", traj.newton.max_residual}}},
        {"xi", {{"total_mass", xi.total_mass()}, {"l1_mass", xi.total_l1()}}},
        {"jumps", detail::jumps_json(detect_jumps(traj, opts.jump_kappa))},
        {"checks", m.verdicts},
        {"warnings", traj.warnings},
    };
    write_json(dir / kSummaryFile, summary);
    m.files = {std::string(kTrajectoryFile), std::string(kEnergyFile), std::string(kXiFile),
               std::string(kSummaryFile)};
    m.finished = utc_now();
    write_json(dir / kManifestFile, to_json(m));
    return m;
}

// ---------------------------------------------------------------------------
// Commands

inline RunManifest cmd_simulate(const fs::path& config_path, const fs::path& out_dir,
                                std::optional<std::uint64_t> seed = std::nullopt) {
    const std::string started = utc_now();
    RunConfig rc = load_config(config_path);
    if (seed) rc.checks.seed = *seed;
    const Trajectory traj = simulate(rc.sim);
    return write_run(out_dir, traj, detail::resolved_config(rc, rc.sim), rc.checks, started);
}

/// Re-runs every check on the artifacts in `dir`; writes verify.json.
inline RunManifest cmd_verify(const fs::path& dir, std::optional<std::uint64_t> seed = std::nullopt) {
    const std::string started = utc_now();
    if (!fs::is_directory(dir)) throw MissingArtifact("no run directory " + dir.string());
    for (auto f : {kTrajectoryFile, kEnergyFile, kSummaryFile})
        if (!fs::exists(dir / f)) throw MissingArtifact("missing artifact " + (dir / f).string());
    const nlohmann::json summary = read_json(dir / kSummaryFile);
    if (!summary.contains("config")) throw MissingArtifact("summary.json has no config");
    RunConfig rc = parse_config(summary.at("config"), dir);
    if (seed) rc.checks.seed = *seed;
    const Trajectory traj = read_trajectory(dir, rc.sim, summary);

    RunManifest m;
    m.started = started;
    m.config_hash = config_hash(summary.at("config"));
    m.verdicts = run_checks(traj, read_energy_csv(dir / kEnergyFile), rc.checks);
    write_json(dir / "verify.json", {{"config_hash", m.config_hash}, {"checks", m.verdicts}});
    m.files = {"verify.json"};
    m.finished = utc_now();
    return m;
}

inline std::string eps_label(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", eps);
    return buf;
}

/// Runs the epsilon sweep; per-run artifacts go to out/<hash>/eps_<k>, the
/// report to out/<hash>/sweep_report.json.
inline RunManifest cmd_sweep(const fs::path& config_path, std::vector<double> eps_list, const fs::path& out_dir,
                             std::optional<std::uint64_t> seed = std::nullopt) {
    const std::string started = utc_now();
    RunConfig rc = load_config(config_path);
    if (seed) rc.checks.seed = *seed;
    if (eps_list.empty()) eps_list = rc.sweep_eps;
    if (eps_list.size() < 3) throw ConfigError("sweep.eps", "need >= 3 epsilon values");

    nlohmann::json hashed = rc.raw;
    hashed["sweep"]["eps"] = eps_list;
    RunManifest m;
    m.started = started;
    m.config_hash = config_hash(hashed);
    const fs::path root = out_dir / m.config_hash;

    SimConfig base = rc.sim;
    const SweepReport rep = epsilon_sweep(base, rc.family, eps_list, rc.dt_policy);

    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t k = 0; k < rep.trajectories.size(); ++k) {
        const Trajectory& traj = rep.trajectories[k];
        const std::string sub = "eps_" + std::to_string(k);
        const RunManifest rm = write_run(root / sub, traj, detail::resolved_config(rc, traj.config), rc.checks, started);
        for (const auto& f : rm.files) m.files.push_back(sub + "/" + f);
        m.files.push_back(sub + "/" + std::string(kManifestFile));
        const auto& s = rep.runs[k];
        runs.push_back({{"epsilon", s.epsilon},
                        {"dir", sub},
                        {"dt", s.dt},
                        {"sup_velocity", s.sup_velocity},
                        {"sup_potential", s.sup_potential},
                        {"l1_mass", s.l1_mass},
                        {"bv", s.bv},
                        {"h1_time", s.h1_time},
                        {"sup_Au", s.sup_Au},
                        {"overshoot", s.overshoot},
                        {"energy_max", s.energy_max},
                        {"energy_initial", s.energy_initial},
                        {"energy_final", s.energy_final},
                        {"reaction_pairing", s.reaction_pairing},
                        {"linf_H_to_finest", rep.to_finest[k].linf_H},
                        {"l2_V_to_finest", rep.to_finest[k].l2_V},
                        {"mu", rep.mu[k]},
                        {"checks_pass", rm.all_pass()}});
        m.verdicts.push_back({.name = "run_checks[" + sub + "]", .pass = rm.all_pass()});
        CheckVerdict over{.name = "overshoot_bound[" + sub + "]", .value = s.overshoot};
        over.tolerance = std::sqrt(2.0 * s.compliance * std::max(s.energy_max, 0.0)) + 2.0 * s.dt;
        over.pass = !(over.value > over.tolerance);
        m.verdicts.push_back(over);
    }
    nlohmann::json consecutive = nlohmann::json::array();
    for (const auto& d : rep.consecutive) consecutive.push_back({{"linf_H", d.linf_H}, {"l2_V", d.l2_V}});

    for (const auto& b : rep.bounds)
        m.verdicts.push_back({.name = "uniform_bound[" + b.name + "]", .pass = b.pass, .value = b.ratio,
                              .tolerance = rep.ratio_limit});
    const LimsupAudit audit = limsup_identity_audit(rep);
    m.verdicts.push_back({.name = "limsup_identity", .pass = audit.pass, .value = audit.relative_gap,
                          .tolerance = 0.02});

    nlohmann::json regularity;
    if (!base.u0_in_domain_of_A) {
        regularity = {{"skipped", true}, {"diagnostic", "u0 not in D(A)"}};
    } else {
        std::vector<double> sup_Au;
        for (const auto& s : rep.runs) sup_Au.push_back(s.sup_Au);
        regularity = {{"skipped", false}, {"sup_Au", sup_Au}, {"ratio", bound_ratio(sup_Au)}};
    }

    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& b : rep.bounds)
        bounds.push_back({{"name", b.name}, {"values", b.values}, {"ratio", b.ratio}, {"pass", b.pass}});
    const nlohmann::json report = {
        {"config", hashed},
        {"config_hash", m.config_hash},
        {"eps", rep.eps},
        {"runs", runs},
        {"consecutive_differences", consecutive},
        {"differences_decreasing", rep.differences_decreasing},
        {"bounds", bounds},
        {"limsup", {{"sequence", audit.sequence}, {"limit", audit.limit}, {"converging", audit.converging},
                    {"limit_gap", audit.limit_gap},
                    {"finest_pairing", audit.finest_pairing},
                    {"relative_gap", audit.relative_gap}, {"pass", audit.pass}}},
        {"da_regularity", regularity},
        {"checks", m.verdicts},
    };
    write_json(root / "sweep_report.json", report);
    m.files.push_back("sweep_report.json");
    m.finished = utc_now();
    write_json(root / kManifestFile, to_json(m));
    return m;
}

/// Default single-node toy: u0 = 0, u1 = 1, Indicator-Yosida with eps = 1e-4.
inline nlohmann::json default_toy_config() {
    return nlohmann::json::parse(R"({
        "space": {"length": 1, "n_nodes": 1, "bc": "neumann"},
        "graph": {"kind": "indicator", "epsilon": 1e-4},
        "time": {"T": 2, "dt_fraction": 0.01, "theta": 0.5},
        "init": {"u0": "zero", "u1": "constant:1"}
    })");
}

/// Toy comparison: numeric run vs the closed-form layer and the limit
/// solution, plus phase-portrait samples.
inline RunManifest cmd_toy(const std::optional<fs::path>& config_path, const fs::path& out_dir) {
    const std::string started = utc_now();
    const RunConfig rc = config_path ? load_config(*config_path) : parse_config(default_toy_config());
    const SimConfig& cfg = rc.sim;
    if (cfg.grid.size() != 1) throw ConfigError("space.n_nodes", "toy comparison needs a single node");
    if (cfg.u0[0] != 0.0 || cfg.u1[0] != 1.0) throw ConfigError("init", "toy comparison needs u0 = 0, u1 = 1");
    if (!cfg.forcing.is_zero() || cfg.lambda != 0.0) throw ConfigError("forcing", "toy comparison needs g = 0, lambda = 0");
    if (rc.family.kind == GraphKind::Logarithmic) throw ConfigError("graph.kind", "no closed form for the logarithmic toy");

    fs::create_directories(out_dir);
    const Trajectory traj = simulate(cfg);
    const bool family = cfg.reaction.is_direct_family();
    const double rt = cfg.reaction.graph().r_threshold();
    const double a = cfg.reaction.regularization();
    const ToySolution limit = exact_limit_toy_solution(0.0, 1.0, -1.0, cfg.T);

    CheckVerdict cu{.name = "toy_oracle_u", .tolerance = 5.0 * cfg.dt};
    CheckVerdict cv{.name = "toy_oracle_v", .tolerance = 5.0 * cfg.dt};
    {
        auto out = detail::open_out(out_dir / "toy_comparison.csv");
        out << "t,u_num,v_num,u_oracle,v_oracle,u_limit,v_limit\n";
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const double t = traj.times[k];
            const double u = traj.u.row(k)[0], v = traj.v.row(k)[0];
            std::optional<PhasePoint> o;
            try {
                o = family ? exact_family_toy(rt, a, t) : yosida_layer_toy(a, t);
            } catch (const OutOfValidityWindow&) {
            }
            const PhasePoint lim = limit.at(t);
            out << fmt17(t) << ',' << fmt17(u) << ',' << fmt17(v) << ',';
            if (o) {
                out << fmt17(o->u) << ',' << fmt17(o->v);
                cu.value = std::max(cu.value, std::abs(u - o->u));
                cv.value = std::max(cv.value, std::abs(v - o->v));
            } else {
                out << ',';
            }
            out << ',' << fmt17(lim.u) << ',' << fmt17(lim.v) << '\n';
        }
    }
    cu.pass = !(cu.value > cu.tolerance);
    cv.pass = !(cv.value > cv.tolerance);

    {
        auto out = detail::open_out(out_dir / "phase_portrait.csv");
        out << "curve,level,branch,u,v\n";
        auto dump = [&](const std::string& name, double c, const PhaseCurve& curve) {
            for (const auto& p : curve.points)
                out << name << ',' << fmt17(c) << ',' << p.branch << ',' << fmt17(p.u) << ',' << fmt17(p.v) << '\n';
        };
        dump("limit", 0.5, phase_level_set(limit_graph(cfg.reaction), 0.5, 201));
        dump("regularized", 0.5, phase_level_set(cfg.reaction, 0.5, 201));
        const MonotoneGraph log = MonotoneGraph::logarithmic();
        const double c_log = eval_j(log, 0.9).value;
        dump("logarithmic", c_log, phase_level_set(log, c_log, 201));
    }

    RunManifest m;
    m.started = started;
    m.config_hash = config_hash(detail::resolved_config(rc, cfg));
    m.files = {"toy_comparison.csv", "phase_portrait.csv"};
    m.verdicts = {cu, cv};
    m.finished = utc_now();
    write_json(out_dir / kManifestFile, to_json(m));
    return m;
}

/// "1e-2,1e-3,1e-4" -> {0.01, 0.001, 0.0001}
inline std::vector<double> parse_eps_list(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(',', start);
        const std::string item = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ConfigError("--eps", "bad number '" + item + "'");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace sdw
