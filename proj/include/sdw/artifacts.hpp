#pragma once

// Plain CSV/JSON run artifacts and their readers. Numbers are written with
// 17 significant digits so a trajectory survives the round trip bit-exactly.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sdw/energy.hpp"
#include "sdw/errors.hpp"
#include "sdw/integrator.hpp"
#include "sdw/weak_limit.hpp"

namespace sdw {

namespace fs = std::filesystem;

inline constexpr std::string_view kTrajectoryFile = "trajectory.csv";
inline constexpr std::string_view kEnergyFile = "energy.csv";
inline constexpr std::string_view kXiFile = "xi.csv";
inline constexpr std::string_view kSummaryFile = "summary.json";
inline constexpr std::string_view kManifestFile = "manifest.json";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of the canonical (key-sorted, compact) JSON dump.
inline std::string config_hash(const nlohmann::json& j) { return hex64(fnv1a(j.dump())); }

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

inline std::vector<std::vector<double>> read_numeric_csv(const fs::path& p, std::vector<std::string>& header) {
    std::ifstream in(p);
    if (!in) throw MissingArtifact("missing artifact " + p.string());
    std::string line;
    if (!std::getline(in, line)) throw MissingArtifact("empty artifact " + p.string());
    header.clear();
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::logic_error&) {
                throw Error("malformed number '" + cell + "' in " + p.string());
            }
        }
        if (row.size() != header.size()) throw Error("ragged row in " + p.string());
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace detail

/// Columns t, node, u, v, beta_eps_u, beta_u. The reaction columns hold the
/// interval means over (t_{k-1}, t_k] (zero on the first row).
inline void write_trajectory_csv(const fs::path& p, const Trajectory& traj) {
    auto out = detail::open_out(p);
    out << "t,node,u,v,beta_eps_u,beta_u\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto u = traj.u.row(k), v = traj.v.row(k), r = traj.reaction.row(k), ru = traj.reaction_u.row(k);
        const std::string t = fmt17(traj.times[k]);
        for (std::size_t i = 0; i < u.size(); ++i)
            out << t << ',' << i << ',' << fmt17(u[i]) << ',' << fmt17(v[i]) << ',' << fmt17(r[i]) << ','
                << fmt17(ru[i]) << '\n';
    }
}

/// Columns t, kinetic, gradient, potential, concave, total, dissipation_cum,
/// equality_residual (the energy balance measured from t = 0).
inline void write_energy_csv(const fs::path& p, const Trajectory& traj) {
    auto out = detail::open_out(p);
    out << "t,kinetic,gradient,potential,concave,total,dissipation_cum,equality_residual\n";
    const auto es = energy_series(traj);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& e = es[k];
        const double res = std::abs(e.total + traj.dissipation_cum[k] - es[0].total - traj.work_cum[k]);
        out << fmt17(traj.times[k]) << ',' << fmt17(e.kinetic) << ',' << fmt17(e.gradient) << ','
            << fmt17(e.potential) << ',' << fmt17(e.concave) << ',' << fmt17(e.total) << ','
            << fmt17(traj.dissipation_cum[k]) << ',' << fmt17(res) << '\n';
    }
}

/// Columns t_bin, x_bin, mass (nonzero cells only, bins as indices).
inline void write_xi_csv(const fs::path& p, const XiMeasure& xi) {
    auto out = detail::open_out(p);
    out << "t_bin,x_bin,mass\n";
    for (std::size_t it = 0; it < xi.n_t(); ++it)
        for (std::size_t ix = 0; ix < xi.n_x(); ++ix) {
            const double m = xi.cell(it, ix).mass;
            if (m != 0.0) out << it << ',' << ix << ',' << fmt17(m) << '\n';
        }
}

struct EnergyTable {
    std::vector<double> t, total, dissipation_cum;
};

inline EnergyTable read_energy_csv(const fs::path& p) {
    std::vector<std::string> header;
    const auto rows = detail::read_numeric_csv(p, header);
    auto col = [&](std::string_view name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("column '" + std::string(name) + "' missing in " + p.string());
    };
    const std::size_t ct = col("t"), ce = col("total"), cd = col("dissipation_cum");
    EnergyTable e;
    for (const auto& r : rows) {
        e.t.push_back(r[ct]);
        e.total.push_back(r[ce]);
        e.dissipation_cum.push_back(r[cd]);
    }
    return e;
}

/// Rebuilds the recorded part of a trajectory from trajectory.csv plus the
/// cumulative ledgers stored in the summary. `cfg` supplies grid and model.
inline Trajectory read_trajectory(const fs::path& dir, const SimConfig& cfg, const nlohmann::json& summary) {
    std::vector<std::string> header;
    const auto rows = detail::read_numeric_csv(dir / kTrajectoryFile, header);
    if (header.size() < 6) throw Error("trajectory.csv lacks reaction columns");
    const std::size_t n = cfg.grid.size();
    if (rows.empty() || rows.size() % n != 0) throw DimensionMismatch(n, rows.size());
    Trajectory traj{.config = cfg};
    traj.u = Series(n);
    traj.v = Series(n);
    traj.reaction = Series(n);
    traj.reaction_u = Series(n);
    Field u(n), v(n), r(n), ru(n);
    for (std::size_t k = 0; k < rows.size() / n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = rows[k * n + i];
            if (static_cast<std::size_t>(row[1]) != i) throw Error("trajectory.csv rows out of order");
            u[i] = row[2];
            v[i] = row[3];
            r[i] = row[4];
            ru[i] = row[5];
        }
        traj.times.push_back(rows[k * n][0]);
        traj.u.push(u);
        traj.v.push(v);
        traj.reaction.push(r);
        traj.reaction_u.push(ru);
    }
    try {
        const auto& led = summary.at("ledger");
        traj.dissipation_cum = led.at("dissipation_cum").get<std::vector<double>>();
        traj.work_cum = led.at("work_cum").get<std::vector<double>>();
        traj.bv_cum = led.at("bv_cum").get<std::vector<double>>();
        traj.reaction_pairing_cum = led.at("reaction_pairing_cum").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw MissingArtifact(std::string("summary.json lacks the ledger: ") + e.what());
    }
    if (traj.dissipation_cum.size() != traj.size() || traj.work_cum.size() != traj.size())
        throw DimensionMismatch(traj.size(), traj.dissipation_cum.size());
    return traj;
}

inline nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw MissingArtifact("missing artifact " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("malformed " + p.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& p, const nlohmann::json& j) {
    auto out = detail::open_out(p);
    out << j.dump(2) << '\n';
}

} // namespace sdw
