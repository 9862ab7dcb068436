#pragma once

// Energy functional E(u, v) = 1/2 |v|^2 + 1/2 |grad u|^2 + J(u) - lambda/2 |u|^2,
// the approximate energy identity and the limit energy inequality checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <span>
#include <utility>
#include <vector>

#include "sdw/constraint_graphs.hpp"
#include "sdw/integrator.hpp"
#include "sdw/spatial.hpp"

namespace sdw {

struct EnergyBreakdown {
    double kinetic = 0.0;
    double gradient = 0.0;
    double potential = 0.0;
    double concave = 0.0;
    double total = 0.0;
};

namespace detail {

inline EnergyBreakdown assemble(const Grid& grid, std::span<const double> u, std::span<const double> v,
                                double potential, double lambda) {
    EnergyBreakdown e;
    const Norms nu = norms(grid, u);
    e.kinetic = 0.5 * inner(grid, v, v);
    e.gradient = 0.5 * nu.h1_semi * nu.h1_semi;
    e.potential = potential;
    e.concave = -0.5 * lambda * nu.l2 * nu.l2;
    e.total = e.kinetic + e.gradient + e.potential + e.concave;
    return e;
}

} // namespace detail

/// Energy with the regularized potential J^eps(u) = sum_i w_i j^eps(u_i).
inline EnergyBreakdown energy(const Grid& grid, std::span<const double> u, std::span<const double> v,
                              const Reaction& reaction, double lambda) {
    grid.check(u);
    grid.check(v);
    const auto w = grid.weights();
    double pot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) pot += w[i] * reaction.potential(u[i]);
    return detail::assemble(grid, u, v, pot, lambda);
}

/// Energy with the limit potential J(u); +infinity when u leaves D(j).
inline EnergyBreakdown energy(const Grid& grid, std::span<const double> u, std::span<const double> v,
                              const MonotoneGraph& graph, double lambda) {
    grid.check(u);
    grid.check(v);
    const auto w = grid.weights();
    double pot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) pot += w[i] * eval_j(graph, u[i]).to_double();
    return detail::assemble(grid, u, v, pot, lambda);
}

inline EnergyBreakdown energy_at(const Trajectory& traj, std::size_t k) {
    return energy(traj.grid(), traj.u.row(k), traj.v.row(k), traj.config.reaction, traj.config.lambda);
}

inline std::vector<EnergyBreakdown> energy_series(const Trajectory& traj) {
    std::vector<EnergyBreakdown> out;
    out.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) out.push_back(energy_at(traj, k));
    return out;
}

/// |E(t) + int_s^t |grad u_t|^2 - E(s) - int_s^t (g, u_t)| for output times s < t.
inline double energy_equality_residual(const Trajectory& traj, double s, double t) {
    const std::size_t ks = traj.index_of(s);
    const std::size_t kt = traj.index_of(t);
    if (ks > kt) throw std::invalid_argument("energy residual needs s <= t");
    const double es = energy_at(traj, ks).total;
    const double et = energy_at(traj, kt).total;
    const double diss = traj.dissipation_cum[kt] - traj.dissipation_cum[ks];
    const double work = traj.work_cum[kt] - traj.work_cum[ks];
    return std::abs(et + diss - es - work);
}

/// Default slack tolerance 10 (dt + eps).
inline double default_energy_tolerance(const SimConfig& cfg) {
    return 10.0 * (cfg.dt + cfg.reaction.regularization());
}

struct EnergyPairVerdict {
    double s = 0.0;
    double t = 0.0;
    double slack = 0.0;
    bool pass = true;
};

struct EnergyInequalityReport {
    std::vector<EnergyPairVerdict> pairs;
    double tolerance = 0.0;
    double min_slack = 0.0;
    bool all_pass = true;
};

/// Energy ledger columns needed by the inequality check, indexed by output time.
struct EnergyLedgerView {
    std::span<const double> times;
    std::span<const double> total;
    std::span<const double> dissipation_cum;
    std::span<const double> work_cum;
};

/// slack = E(s) + int_s^t (g, u_t) - E(t) - int_s^t |grad u_t|^2 for each
/// index pair (s < t); a pair fails only when slack < -tol.
inline EnergyInequalityReport energy_inequality_verdict(const EnergyLedgerView& ledger,
                                                        std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                                        double tol) {
    EnergyInequalityReport rep;
    rep.tolerance = tol;
    rep.min_slack = pairs.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (auto [a, b] : pairs) {
        if (a >= b || b >= ledger.times.size()) throw std::invalid_argument("energy pair needs s < t on the grid");
        EnergyPairVerdict v;
        v.s = ledger.times[a];
        v.t = ledger.times[b];
        v.slack = ledger.total[a] + (ledger.work_cum[b] - ledger.work_cum[a]) - ledger.total[b] -
                  (ledger.dissipation_cum[b] - ledger.dissipation_cum[a]);
        v.pass = v.slack >= -tol;
        rep.all_pass = rep.all_pass && v.pass;
        rep.min_slack = std::min(rep.min_slack, v.slack);
        rep.pairs.push_back(v);
    }
    return rep;
}

/// Same check on a trajectory, with s and t given as output times.
inline EnergyInequalityReport energy_inequality_verdict(const Trajectory& traj,
                                                        std::span<const std::pair<double, double>> st_pairs,
                                                        double tol) {
    std::vector<double> total;
    total.reserve(traj.size());
    for (const auto& e : energy_series(traj)) total.push_back(e.total);
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (auto [s, t] : st_pairs) idx.emplace_back(traj.index_of(s), traj.index_of(t));
    return energy_inequality_verdict({traj.times, total, traj.dissipation_cum, traj.work_cum}, idx, tol);
}

} // namespace sdw
