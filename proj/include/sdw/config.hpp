#pragma once

// JSON run configuration -> SimConfig. Every failure names the offending key.
//
//   {
//     "space":   {"length": 1, "n_nodes": 65, "bc": "dirichlet"},
//     "graph":   {"kind": "indicator", "epsilon": 1e-3},
//     "time":    {"T": 1, "dt": 1e-3, "theta": 1, "output_every": 1},
//     "init":    {"u0": "sine:1:0.5", "u1": "zero", "regularize": false},
//     "forcing": {"kind": "zero"},
//     "model":   {"lambda": 0},
//     "newton":  {"tol": 1e-10, "max_iter": 50},
//     "sweep":   {"eps": [1e-2, 1e-3, 1e-4], "dt_base": 1e-3, "layer_fraction": 0.1},
//     "checks":  {"seed": 1, "candidates": 100}
//   }
//
// For the family kind, "eps_param" (or "epsilon") is the family index and
// the threshold is "r_threshold" or 1 - pi_fraction * pi * eps_param.
// "time.dt_fraction" may replace "time.dt": dt = fraction * sqrt(compliance).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdw/constraint_graphs.hpp"
#include "sdw/errors.hpp"
#include "sdw/experiments.hpp"
#include "sdw/integrator.hpp"
#include "sdw/spatial.hpp"

namespace sdw {

using Json = nlohmann::json;

struct CheckOptions {
    std::uint64_t seed = 1;
    std::size_t candidates = 100;
    double jump_kappa = 50.0;
    double subdifferential_tol = 1e-6;
};

struct RunConfig {
    SimConfig sim;
    RegularizationFamily family;
    double epsilon = 0.0;
    std::optional<double> dt_fraction{};
    std::vector<double> sweep_eps{};
    DtPolicy dt_policy{};
    CheckOptions checks{};
    Json raw;
};

namespace detail {

inline const Json* find_key(const Json& j, const std::string& section, const std::string& key) {
    if (!j.contains(section)) return nullptr;
    const Json& s = j.at(section);
    if (!s.is_object()) throw ConfigError(section, "must be an object");
    if (!s.contains(key)) return nullptr;
    return &s.at(key);
}

template <class T>
T get_or(const Json& j, const std::string& section, const std::string& key, T fallback) {
    const Json* v = find_key(j, section, key);
    if (!v) return fallback;
    try {
        return v->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(section + "." + key, "has the wrong type");
    }
}

template <class T>
T require(const Json& j, const std::string& section, const std::string& key) {
    if (!find_key(j, section, key)) throw ConfigError(section + "." + key, "is required");
    return get_or<T>(j, section, key, T{});
}

inline Field read_csv_column(const std::filesystem::path& path, const std::string& column, const std::string& key) {
    std::ifstream in(path);
    if (!in) throw ConfigError(key, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::size_t col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == column) col = i;
    if (col == header.size()) throw ConfigError(key, "column '" + column + "' not found in " + path.string());
    Field out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; i <= col; ++i)
            if (!std::getline(ss, cell, ',')) throw ConfigError(key, "short row in " + path.string());
        try {
            out.push_back(std::stod(cell));
        } catch (const std::logic_error&) {
            throw ConfigError(key, "bad number '" + cell + "'");
        }
    }
    return out;
}

/// "init.u0" accepts a profile string, an array of nodal values, or
/// {"csv": path, "column": name} (path relative to the config file).
inline Profile parse_initial(const Json& j, const std::string& key, const std::filesystem::path& base_dir) {
    const std::string full = "init." + key;
    const Json* v = find_key(j, "init", key);
    if (!v) return Profile::parse("zero");
    try {
        if (v->is_string()) return Profile::parse(v->get<std::string>());
        if (v->is_array()) return Profile::samples(v->get<Field>());
        if (v->is_object()) {
            const std::filesystem::path p = base_dir / v->at("csv").get<std::string>();
            return Profile::samples(read_csv_column(p, v->value("column", key), full));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(full, e.what());
    }
    throw ConfigError(full, "must be a profile string, an array or a csv reference");
}

inline Forcing parse_forcing(const Json& j, const Grid& grid) {
    if (!j.contains("forcing")) return Forcing::zero();
    const std::string kind = get_or<std::string>(j, "forcing", "kind", "zero");
    try {
        if (kind == "zero") return Forcing::zero();
        if (kind == "constant") return Forcing::constant(require<double>(j, "forcing", "value"));
        if (kind == "profile") return Forcing::profile(Profile::parse(require<std::string>(j, "forcing", "profile")));
        if (kind == "table") {
            const auto times = require<std::vector<double>>(j, "forcing", "times");
            const auto rows = require<std::vector<std::vector<double>>>(j, "forcing", "values");
            Series s(grid.size());
            for (const auto& r : rows) s.push(r);
            return Forcing::table(times, std::move(s));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("forcing", e.what());
    }
    throw ConfigError("forcing.kind", "unknown kind '" + kind + "'");
}

} // namespace detail

/// Reaction for the regularization index eps under the config's graph section.
inline RegularizationFamily parse_family(const Json& j) {
    if (!detail::find_key(j, "graph", "kind")) throw ConfigError("graph.kind", "is required");
    RegularizationFamily fam;
    try {
        fam.kind = parse_graph_kind(detail::get_or<std::string>(j, "graph", "kind", ""));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("graph.kind", e.what());
    }
    if (fam.kind == GraphKind::PiecewiseLinearFamily) {
        if (detail::find_key(j, "graph", "pi_fraction"))
            fam.pi_fraction = detail::get_or<double>(j, "graph", "pi_fraction", 0.0);
        else
            fam.r_threshold = detail::require<double>(j, "graph", "r_threshold");
    }
    return fam;
}

inline double parse_epsilon(const Json& j, GraphKind kind) {
    const bool family = kind == GraphKind::PiecewiseLinearFamily;
    const std::string key = family && detail::find_key(j, "graph", "eps_param") ? "eps_param" : "epsilon";
    const double eps = detail::require<double>(j, "graph", key);
    if (!(eps > 0.0)) throw ConfigError("graph." + key, "must be positive");
    return eps;
}

/// Builds the run for regularization index eps (defaults to the config's own).
inline SimConfig build_sim(const RunConfig& rc, double eps) {
    SimConfig cfg = rc.sim;
    try {
        cfg.reaction = rc.family.at(eps);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("graph", e.what());
    }
    if (rc.dt_fraction) {
        const double dt = *rc.dt_fraction * std::sqrt(cfg.reaction.compliance());
        cfg.dt = cfg.T / std::ceil(cfg.T / dt - 1e-9);
    }
    if (cfg.init_regularization > 0.0) cfg.init_regularization = eps;
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".") {
    using detail::get_or;
    using detail::require;
    if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");

    const double length = get_or<double>(j, "space", "length", 1.0);
    const auto n_nodes = require<std::size_t>(j, "space", "n_nodes");
    BoundaryCondition bc;
    try {
        bc = parse_bc(get_or<std::string>(j, "space", "bc", "dirichlet"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("space.bc", e.what());
    }
    std::optional<Grid> grid;
    try {
        grid.emplace(length, n_nodes, bc);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("space", e.what());
    }

    const RegularizationFamily family = parse_family(j);
    const double epsilon = parse_epsilon(j, family.kind);

    const Profile u0 = detail::parse_initial(j, "u0", base_dir);
    const Profile u1 = detail::parse_initial(j, "u1", base_dir);
    Field u0s, u1s;
    try {
        u0s = u0.sample(*grid);
    } catch (const std::exception& e) {
        throw ConfigError("init.u0", e.what());
    }
    try {
        u1s = u1.sample(*grid);
    } catch (const std::exception& e) {
        throw ConfigError("init.u1", e.what());
    }

    RunConfig rc{.sim = {.grid = *grid, .reaction = family.at(epsilon)}, .family = family, .epsilon = epsilon,
                 .raw = j};
    SimConfig& s = rc.sim;
    s.lambda = get_or<double>(j, "model", "lambda", 0.0);
    s.T = require<double>(j, "time", "T");
    s.theta = get_or<double>(j, "time", "theta", 1.0);
    s.output_every = get_or<std::size_t>(j, "time", "output_every", 1);
    if (detail::find_key(j, "time", "dt")) {
        s.dt = require<double>(j, "time", "dt");
    } else if (detail::find_key(j, "time", "dt_fraction")) {
        rc.dt_fraction = require<double>(j, "time", "dt_fraction");
        if (!(*rc.dt_fraction > 0.0)) throw ConfigError("time.dt_fraction", "must be positive");
    } else {
        throw ConfigError("time.dt", "is required (or time.dt_fraction)");
    }
    s.u0 = std::move(u0s);
    s.u1 = std::move(u1s);
    s.u0_in_domain_of_A = u0.in_domain_of_A(bc);
    s.init_regularization = get_or<bool>(j, "init", "regularize", false) ? rc.epsilon : 0.0;
    s.forcing = detail::parse_forcing(j, *grid);
    s.newton.tol = get_or<double>(j, "newton", "tol", s.newton.tol);
    s.newton.max_iter = get_or<int>(j, "newton", "max_iter", s.newton.max_iter);

    rc.sweep_eps = get_or<std::vector<double>>(j, "sweep", "eps", {});
    // with time.dt_fraction the step follows the layer width alone
    rc.dt_policy.dt_base = get_or<double>(j, "sweep", "dt_base",
                                          rc.dt_fraction ? std::numeric_limits<double>::infinity() : s.dt);
    rc.dt_policy.layer_fraction = get_or<double>(j, "sweep", "layer_fraction", rc.dt_fraction.value_or(0.1));

    rc.checks.seed = get_or<std::uint64_t>(j, "checks", "seed", rc.checks.seed);
    rc.checks.candidates = get_or<std::size_t>(j, "checks", "candidates", rc.checks.candidates);
    rc.checks.jump_kappa = get_or<double>(j, "checks", "jump_kappa", rc.checks.jump_kappa);
    rc.checks.subdifferential_tol = get_or<double>(j, "checks", "subdifferential_tol", rc.checks.subdifferential_tol);

    s = build_sim(rc, rc.epsilon);
    return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j, path.parent_path());
}

} // namespace sdw
