#pragma once

// Epsilon-continuation sweeps: one simulation per epsilon (run concurrently),
// uniform-bound audits across the sweep, Cauchy-type differences against the
// finest run, and the limit identity for <<beta_eps(u_eps), u_eps>>.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sdw/constraint_graphs.hpp"
#include "sdw/energy.hpp"
#include "sdw/errors.hpp"
#include "sdw/integrator.hpp"
#include "sdw/spatial.hpp"
#include "sdw/weak_limit.hpp"

namespace sdw {

/// How the nonlinearity depends on epsilon across a sweep.
struct RegularizationFamily {
    /// Indicator/Logarithmic: Yosida approximant; PiecewiseLinearFamily: the explicit family.
    GraphKind kind = GraphKind::Indicator;
    double r_threshold = 1.0;
    /// Family only: r_threshold = 1 - pi_fraction * pi * eps when set.
    std::optional<double> pi_fraction;

    [[nodiscard]] Reaction at(double eps) const {
        if (kind == GraphKind::PiecewiseLinearFamily) {
            const double r = pi_fraction ? 1.0 - *pi_fraction * std::numbers::pi * eps : r_threshold;
            return Reaction::family(r, eps);
        }
        const MonotoneGraph g = kind == GraphKind::Indicator ? MonotoneGraph::indicator() : MonotoneGraph::logarithmic();
        return Reaction::yosida_of(RegularizedPotential(g, eps));
    }
};

/// dt(eps) = min(dt_base, layer_fraction * sqrt(compliance)).
struct DtPolicy {
    double dt_base = 1e-3;
    double layer_fraction = 0.1;

    [[nodiscard]] double dt(const Reaction& reaction) const {
        return std::min(dt_base, layer_fraction * std::sqrt(reaction.compliance()));
    }
};

/// The configuration of one sweep member.
inline SimConfig config_for(const SimConfig& base, const RegularizationFamily& family, double eps,
                            const DtPolicy& policy) {
    SimConfig cfg = base;
    cfg.reaction = family.at(eps);
    cfg.dt = policy.dt(cfg.reaction);
    // keep T a whole number of steps
    cfg.dt = cfg.T / std::ceil(cfg.T / cfg.dt - 1e-9);
    if (base.init_regularization > 0.0) cfg.init_regularization = eps;
    return cfg;
}

struct RunSummary {
    double epsilon = 0.0;
    double dt = 0.0;
    double sup_velocity = 0.0;   ///< sup_t ||v||
    double sup_potential = 0.0;  ///< sup_t J_eps(u)
    double l1_mass = 0.0;        ///< ||beta_eps(u_eps)||_{L1(Q)}
    double bv = 0.0;             ///< sum of ||v(t+dt) - v(t)||_{L1}
    double h1_time = 0.0;        ///< ||u||_{H1(0,T;V)}
    double sup_Au = 0.0;         ///< sup_t ||A_h u||
    double overshoot = 0.0;      ///< max (|u| - 1)^+
    double energy_max = 0.0;
    double energy_initial = 0.0;
    double energy_final = 0.0;
    /// largest increase of E(t) - int (g, u_t) between consecutive outputs
    double energy_increase = 0.0;
    double reaction_pairing = 0.0; ///< <<beta_eps(u_eps), u_eps>>
    double compliance = 0.0;
};

inline RunSummary summarize(const Trajectory& traj) {
    const Grid& grid = traj.grid();
    RunSummary s;
    s.epsilon = traj.config.reaction.regularization();
    s.dt = traj.config.dt;
    s.compliance = traj.config.reaction.compliance();
    const auto energies = energy_series(traj);
    s.energy_initial = energies.front().total;
    s.energy_final = energies.back().total;
    s.energy_max = -std::numeric_limits<double>::infinity();
    double h1 = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto u = traj.u.row(k);
        const auto v = traj.v.row(k);
        s.sup_velocity = std::max(s.sup_velocity, std::sqrt(inner(grid, v, v)));
        s.sup_potential = std::max(s.sup_potential, energies[k].potential);
        const Field Au = apply_A(grid, u);
        s.sup_Au = std::max(s.sup_Au, std::sqrt(inner(grid, Au, Au)));
        for (double ui : u) s.overshoot = std::max(s.overshoot, std::abs(ui) - 1.0);
        s.energy_max = std::max(s.energy_max, energies[k].total);
        if (k > 0) {
            const double dt = traj.times[k] - traj.times[k - 1];
            const Norms nu = norms(grid, u), nv = norms(grid, v);
            h1 += dt * (nu.l2 * nu.l2 + nu.h1_semi * nu.h1_semi + nv.l2 * nv.l2 + nv.h1_semi * nv.h1_semi);
            const double rise = (energies[k].total - traj.work_cum[k]) - (energies[k - 1].total - traj.work_cum[k - 1]);
            s.energy_increase = std::max(s.energy_increase, rise);
        }
    }
    s.overshoot = std::max(0.0, s.overshoot);
    s.h1_time = std::sqrt(h1);
    s.l1_mass = l1_mass(accumulate_xi(traj));
    s.bv = traj.bv_cum.back();
    s.reaction_pairing = traj.reaction_pairing_cum.back();
    return s;
}

/// u of `traj` at time t, linearly interpolated between output states.
inline Field interpolate_u(const Trajectory& traj, double t) {
    const auto& ts = traj.times;
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) {
        const auto r = traj.u.row(0);
        return {r.begin(), r.end()};
    }
    if (it == ts.end()) {
        const auto r = traj.u.row(ts.size() - 1);
        return {r.begin(), r.end()};
    }
    const std::size_t k = static_cast<std::size_t>(it - ts.begin());
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    const auto a = traj.u.row(k - 1), b = traj.u.row(k);
    Field out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
    return out;
}

struct TrajectoryDistance {
    double linf_H = 0.0; ///< max_t ||u - w||
    double l2_V = 0.0;   ///< (int ||u - w||_V^2 dt)^(1/2)
};

/// Distance between two runs on the output times of `reference`.
inline TrajectoryDistance trajectory_distance(const Trajectory& run, const Trajectory& reference) {
    const Grid& grid = reference.grid();
    TrajectoryDistance d;
    double l2 = 0.0;
    Field diff(grid.size());
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const Field u = interpolate_u(run, reference.times[k]);
        const auto r = reference.u.row(k);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = u[i] - r[i];
        const Norms n = norms(grid, diff);
        d.linf_H = std::max(d.linf_H, n.l2);
        if (k > 0) l2 += (reference.times[k] - reference.times[k - 1]) * (n.l2 * n.l2 + n.h1_semi * n.h1_semi);
    }
    d.l2_V = std::sqrt(l2);
    return d;
}

/// max/min of a family of nonnegative bounds; 1 when all vanish, infinity
/// when some vanish and others do not.
inline double bound_ratio(std::span<const double> values, double floor = 1e-12) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (*mx <= floor) return 1.0;
    if (*mn <= floor) return std::numeric_limits<double>::infinity();
    return *mx / *mn;
}

struct BoundVerdict {
    std::string name;
    std::vector<double> values;
    double ratio = 1.0;
    bool pass = true;
};

struct SweepReport {
    std::vector<double> eps;
    std::vector<RunSummary> runs;
    std::vector<Trajectory> trajectories;
    std::vector<TrajectoryDistance> to_finest;     ///< against the last (finest) run
    std::vector<TrajectoryDistance> consecutive;   ///< eps_k vs eps_{k+1}
    /// int int beta_eps(u_eps) (u_eps - u_finest)
    std::vector<double> mu;
    std::vector<BoundVerdict> bounds;
    double ratio_limit = 10.0;
    bool differences_decreasing = true;
    bool all_bounds_pass = true;
};

namespace detail {

inline double mu_against(const Trajectory& run, const Trajectory& finest) {
    const Grid& grid = run.grid();
    const auto w = grid.weights();
    double s = 0.0;
    for (std::size_t k = 1; k < run.size(); ++k) {
        const double dt = run.times[k] - run.times[k - 1];
        const Field uf = interpolate_u(finest, 0.5 * (run.times[k] + run.times[k - 1]));
        const auto r = run.reaction.row(k), ru = run.reaction_u.row(k);
        for (std::size_t i = 0; i < grid.size(); ++i) s += dt * w[i] * (ru[i] - r[i] * uf[i]);
    }
    return s;
}

} // namespace detail

/// Runs one simulation per epsilon (strictly decreasing, at least 3) and
/// audits the family. Members run concurrently; results are assembled in
/// input order so the report is deterministic.
inline SweepReport epsilon_sweep(const SimConfig& base, const RegularizationFamily& family,
                                 std::span<const double> eps_list, const DtPolicy& policy,
                                 double ratio_limit = 10.0) {
    if (eps_list.size() < 3) throw ConfigError("sweep.eps", "need >= 3 epsilon values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw ConfigError("sweep.eps", "must be strictly decreasing");

    SweepReport rep;
    rep.eps.assign(eps_list.begin(), eps_list.end());
    rep.ratio_limit = ratio_limit;
    std::vector<std::future<Trajectory>> jobs;
    for (double eps : eps_list) {
        SimConfig cfg = config_for(base, family, eps, policy);
        jobs.push_back(std::async(std::launch::async, [cfg = std::move(cfg), eps]() {
            try {
                return simulate(cfg);
            } catch (const Error& e) {
                throw Error("run with eps=" + std::to_string(eps) + " failed: " + e.what());
            }
        }));
    }
    for (auto& j : jobs) rep.trajectories.push_back(j.get());
    for (const auto& t : rep.trajectories) rep.runs.push_back(summarize(t));

    const Trajectory& finest = rep.trajectories.back();
    for (const auto& t : rep.trajectories) {
        rep.to_finest.push_back(trajectory_distance(t, finest));
        rep.mu.push_back(detail::mu_against(t, finest));
    }
    for (std::size_t i = 0; i + 1 < rep.trajectories.size(); ++i)
        rep.consecutive.push_back(trajectory_distance(rep.trajectories[i], rep.trajectories[i + 1]));
    for (std::size_t i = 1; i + 1 < rep.to_finest.size(); ++i)
        if (rep.to_finest[i].linf_H > rep.to_finest[i - 1].linf_H) rep.differences_decreasing = false;

    auto add = [&](std::string name, auto field) {
        BoundVerdict b;
        b.name = std::move(name);
        for (const auto& r : rep.runs) b.values.push_back(field(r));
        b.ratio = bound_ratio(b.values);
        b.pass = b.ratio <= ratio_limit;
        rep.all_bounds_pass = rep.all_bounds_pass && b.pass;
        rep.bounds.push_back(std::move(b));
    };
    add("sup_velocity", [](const RunSummary& r) { return r.sup_velocity; });
    add("sup_potential", [](const RunSummary& r) { return r.sup_potential; });
    add("l1_reaction_mass", [](const RunSummary& r) { return r.l1_mass; });
    add("bv_velocity", [](const RunSummary& r) { return r.bv; });
    add("h1_time_norm", [](const RunSummary& r) { return r.h1_time; });
    if (base.u0_in_domain_of_A) add("sup_Au", [](const RunSummary& r) { return r.sup_Au; });
    return rep;
}

struct RegularityReport {
    bool skipped = false;
    std::string diagnostic;
    std::vector<double> eps;
    std::vector<double> sup_Au;
    double ratio = 1.0;
    bool pass = true;
};

/// sup_t ||A_h u_eps(t)|| across a sweep; bounded when max/min <= factor.
inline RegularityReport da_regularity_check(const SimConfig& base, const RegularizationFamily& family,
                                            std::span<const double> eps_list, const DtPolicy& policy,
                                            double factor = 10.0) {
    RegularityReport rep;
    if (!base.u0_in_domain_of_A) {
        rep.skipped = true;
        rep.diagnostic = "u0 not in D(A)";
        return rep;
    }
    const SweepReport sweep = epsilon_sweep(base, family, eps_list, policy, factor);
    rep.eps = sweep.eps;
    for (const auto& r : sweep.runs) rep.sup_Au.push_back(r.sup_Au);
    rep.ratio = bound_ratio(rep.sup_Au);
    rep.pass = rep.ratio <= factor;
    return rep;
}

struct LimsupAudit {
    std::vector<double> sequence; ///< <<beta_eps(u_eps), u_eps>> per eps
    double limit = 0.0;           ///< Aitken extrapolation of the sequence
    bool converging = true;       ///< consecutive increments shrink
    double finest_pairing = 0.0;  ///< int u dxi on the finest run, u projected onto [-1, 1]
    double limit_gap = 0.0;       ///< |limit - finest_pairing| / max(|limit|, |finest_pairing|)
    double relative_gap = 0.0;
    bool pass = true;
};

/// Aitken delta-squared estimate from the last three terms (the last term
/// itself when the increments do not contract).
inline double aitken_limit(std::span<const double> s) {
    if (s.size() < 3) return s.empty() ? 0.0 : s.back();
    const double a = s[s.size() - 3], b = s[s.size() - 2], c = s[s.size() - 1];
    const double d1 = b - a, d2 = c - b;
    const double denom = d2 - d1;
    if (std::abs(d2) >= std::abs(d1) || std::abs(denom) <= 1e-15 * (1.0 + std::abs(c))) return c;
    return c - d2 * d2 / denom;
}

/// Verdict: |s_last - pairing| / (1 + |pairing|) <= tol, where s_eps =
/// <<beta_eps(u_eps), u_eps>> and pairing = int u dxi on the finest run. u
/// enters the pairing projected onto [-1, 1], the closure of the limit
/// constraint set; unprojected it would reproduce s_last identically. The
/// convergence of the whole sequence (Aitken limit vs pairing) is reported
/// alongside but does not gate.
inline LimsupAudit limsup_identity_audit(const SweepReport& report, double tol = 0.02) {
    LimsupAudit a;
    for (const auto& r : report.runs) a.sequence.push_back(r.reaction_pairing);
    for (std::size_t k = 2; k < a.sequence.size(); ++k)
        if (std::abs(a.sequence[k] - a.sequence[k - 1]) > std::abs(a.sequence[k - 1] - a.sequence[k - 2]) + 1e-12)
            a.converging = false;
    a.limit = aitken_limit(a.sequence);
    const Trajectory& finest = report.trajectories.back();
    const XiMeasure xi = accumulate_xi(finest);
    double pairing = 0.0;
    for (std::size_t it = 0; it < xi.n_t(); ++it)
        for (std::size_t ix = 0; ix < xi.n_x(); ++ix) {
            const double m = xi.cell(it, ix).mass;
            if (m == 0.0) continue;
            pairing += m * std::clamp(interpolate_u(finest, xi.centroid_time(it, ix))[ix], -1.0, 1.0);
        }
    a.finest_pairing = pairing;
    const double scale = std::max(std::abs(pairing), std::abs(a.limit));
    a.limit_gap = scale > 1e-12 ? std::abs(a.limit - pairing) / scale : 0.0;
    a.relative_gap = std::abs(a.sequence.back() - pairing) / (1.0 + std::abs(pairing));
    a.pass = a.relative_gap <= tol;
    return a;
}

} // namespace sdw
