#pragma once

// Reconstruction of the constraint reaction xi as a space-time measure from
// the recorded beta_eps(u_eps), and the checks a weak limit must pass:
// weak-form residual, the subdifferential inequality defining beta_w,
// support/sign of the concentrated part, and velocity jumps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdw/constraint_graphs.hpp"
#include "sdw/errors.hpp"
#include "sdw/integrator.hpp"
#include "sdw/spatial.hpp"
#include "sdw/test_functions.hpp"

namespace sdw {

// ---------------------------------------------------------------------------
// XiMeasure

struct XiCell {
    double mass = 0.0;     ///< signed, int int_cell beta dx dt
    double abs_mass = 0.0; ///< int int_cell |beta| dx dt
    double t_moment = 0.0; ///< int int_cell t beta dx dt
    double u_moment = 0.0; ///< int int_cell u beta dx dt
};

/// Space-time histogram of the reaction: time bins x grid nodes.
class XiMeasure {
public:
    XiMeasure(std::vector<double> t_edges, std::vector<double> x)
        : t_edges_(std::move(t_edges)), x_(std::move(x)),
          cells_((t_edges_.size() - 1) * x_.size()) {
        if (t_edges_.size() < 2) throw std::invalid_argument("xi measure needs at least one time bin");
    }

    [[nodiscard]] std::size_t n_t() const { return t_edges_.size() - 1; }
    [[nodiscard]] std::size_t n_x() const { return x_.size(); }
    [[nodiscard]] std::span<const double> t_edges() const { return t_edges_; }
    [[nodiscard]] std::span<const double> x() const { return x_; }
    [[nodiscard]] double t_center(std::size_t it) const { return 0.5 * (t_edges_[it] + t_edges_[it + 1]); }

    [[nodiscard]] XiCell& cell(std::size_t it, std::size_t ix) { return cells_[it * n_x() + ix]; }
    [[nodiscard]] const XiCell& cell(std::size_t it, std::size_t ix) const { return cells_[it * n_x() + ix]; }

    /// Mass-weighted mean time of a cell (bin center when the cell is empty).
    [[nodiscard]] double centroid_time(std::size_t it, std::size_t ix) const {
        const XiCell& c = cell(it, ix);
        if (c.mass == 0.0) return t_center(it);
        return std::clamp(c.t_moment / c.mass, t_edges_[it], t_edges_[it + 1]);
    }
    /// Mass-weighted mean of u over a cell.
    [[nodiscard]] double mean_u(std::size_t it, std::size_t ix) const {
        const XiCell& c = cell(it, ix);
        return c.mass == 0.0 ? 0.0 : c.u_moment / c.mass;
    }

    [[nodiscard]] double total_l1() const {
        double s = 0.0;
        for (const auto& c : cells_) s += std::abs(c.mass);
        return s;
    }
    [[nodiscard]] double total_mass() const {
        double s = 0.0;
        for (const auto& c : cells_) s += c.mass;
        return s;
    }

    /// Signed mass of the restriction to [0, t]: full cells with centers
    /// below t, plus the straddling bin weighted by its covered fraction.
    [[nodiscard]] double restricted_mass(double t) const {
        double s = 0.0;
        for (std::size_t it = 0; it < n_t(); ++it) {
            const double lo = t_edges_[it], hi = t_edges_[it + 1];
            double frac = 0.0;
            if (hi <= t) frac = 1.0;
            else if (lo < t) frac = (t - lo) / (hi - lo);
            if (frac == 0.0) continue;
            for (std::size_t ix = 0; ix < n_x(); ++ix) s += frac * cell(it, ix).mass;
        }
        return s;
    }

    /// int phi dxi over cells ending no later than t_end, with phi evaluated
    /// at each cell's centroid time.
    [[nodiscard]] double pair(const std::function<double(double, double)>& phi,
                              double t_end = std::numeric_limits<double>::infinity()) const {
        double s = 0.0;
        const double tol = 1e-12 * std::max(1.0, std::abs(t_edges_.back()));
        for (std::size_t it = 0; it < n_t(); ++it) {
            if (t_edges_[it + 1] > t_end + tol) break;
            for (std::size_t ix = 0; ix < n_x(); ++ix) {
                const XiCell& c = cell(it, ix);
                if (c.mass != 0.0) s += c.mass * phi(centroid_time(it, ix), x_[ix]);
            }
        }
        return s;
    }

    double epsilon = 0.0;
    std::string run_id;

private:
    std::vector<double> t_edges_;
    std::vector<double> x_;
    std::vector<XiCell> cells_;
};

/// Bins the recorded reaction of a trajectory. With n_time_bins == 0 every
/// recorded interval is its own bin; otherwise bins are uniform on [0, T] and
/// each interval is assigned by its midpoint.
inline XiMeasure accumulate_xi(const Trajectory& traj, std::size_t n_time_bins = 0) {
    if (traj.size() < 2 || traj.reaction.rows() != traj.size() || traj.reaction_u.rows() != traj.size())
        throw MissingReactionRecords("trajectory carries no reaction record per interval");
    const Grid& grid = traj.grid();
    std::vector<double> edges;
    if (n_time_bins == 0) {
        edges = traj.times;
    } else {
        edges.resize(n_time_bins + 1);
        const double T = traj.times.back();
        for (std::size_t i = 0; i <= n_time_bins; ++i)
            edges[i] = T * static_cast<double>(i) / static_cast<double>(n_time_bins);
    }
    XiMeasure xi(std::move(edges), {grid.x().begin(), grid.x().end()});
    xi.epsilon = traj.config.reaction.regularization();
    const auto w = grid.weights();
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double dt = traj.times[k] - traj.times[k - 1];
        const double mid = 0.5 * (traj.times[k] + traj.times[k - 1]);
        std::size_t bin = k - 1;
        if (n_time_bins != 0) {
            const auto e = xi.t_edges();
            bin = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), mid) - e.begin());
            bin = std::clamp<std::size_t>(bin, 1, xi.n_t()) - 1;
        }
        const auto r = traj.reaction.row(k);
        const auto ru = traj.reaction_u.row(k);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (r[i] == 0.0) continue;
            XiCell& c = xi.cell(bin, i);
            const double m = dt * w[i] * r[i];
            c.mass += m;
            c.abs_mass += std::abs(m);
            c.t_moment += m * mid;
            c.u_moment += dt * w[i] * ru[i];
        }
    }
    return xi;
}

/// Total variation of the reaction measure (the L1(0,T; L1) norm of beta_eps(u_eps)).
inline double l1_mass(const XiMeasure& xi) { return xi.total_l1(); }

/// Total |mass| of cells whose centroid time lies within half_width of t.
inline double mass_within(const XiMeasure& xi, double t, double half_width) {
    double s = 0.0;
    for (std::size_t it = 0; it < xi.n_t(); ++it)
        for (std::size_t ix = 0; ix < xi.n_x(); ++ix) {
            const auto& c = xi.cell(it, ix);
            if (c.mass != 0.0 && std::abs(xi.centroid_time(it, ix) - t) <= half_width) s += std::abs(c.mass);
        }
    return s;
}

/// Mass captured in windows of half-widths {8, 4, 2, 1} x scale around t.
/// A Dirac atom shows as a flat profile once the windows exceed the layer.
inline std::vector<double> concentration_profile(const XiMeasure& xi, double t, double scale) {
    std::vector<double> out;
    for (double f : {8.0, 4.0, 2.0, 1.0}) out.push_back(mass_within(xi, t, f * scale));
    return out;
}

// ---------------------------------------------------------------------------
// Weak formulation residual

/// | -<<u_t, phi_t>> + (u_t(t_end), phi(t_end)) + <<grad u_t, grad phi>>
///   + <<grad u, grad phi>> + int phi dxi - lambda <<u, phi>> - (u_1, phi(0))
///   - <<g, phi>> |  over (0, t_end), every pairing in the scheme's quadrature.
inline double weak_residual(const Trajectory& traj, const XiMeasure& xi, const TestFunction& phi, double t_end) {
    const Grid& grid = traj.grid();
    if (!phi.admissible(grid))
        throw InadmissibleTestFunction("test function '" + phi.name + "' does not vanish on the Dirichlet boundary");
    const std::size_t k_end = traj.index_of(t_end);
    const auto& cfg = traj.config;
    const double th = cfg.theta;
    const auto x = grid.x();
    const std::size_t n = grid.size();
    auto sample = [&](double t) {
        Field f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = phi(t, x[i]);
        return f;
    };

    double total = 0.0;
    Field ut(n), uth(n), vbar(n), phit(n), gth(n);
    for (std::size_t k = 1; k <= k_end; ++k) {
        const double t0 = traj.times[k - 1], t1 = traj.times[k];
        const double dt = t1 - t0;
        const double tau = 0.5 * (t0 + t1);
        const auto u0 = traj.u.row(k - 1), u1 = traj.u.row(k);
        const auto v0 = traj.v.row(k - 1), v1 = traj.v.row(k);
        const Field ph = sample(tau);
        const Field g0 = cfg.forcing.at(grid, t0);
        const Field g1 = cfg.forcing.at(grid, t1);
        for (std::size_t i = 0; i < n; ++i) {
            ut[i] = (u1[i] - u0[i]) / dt;
            uth[i] = th * u1[i] + (1.0 - th) * u0[i];
            vbar[i] = 0.5 * (v0[i] + v1[i]);
            phit[i] = phi.dt(tau, x[i]);
            gth[i] = th * g1[i] + (1.0 - th) * g0[i];
        }
        const Field Aut = apply_A(grid, ut);
        const Field Au = apply_A(grid, uth);
        total += dt * (-inner(grid, vbar, phit) + inner(grid, Aut, ph) + inner(grid, Au, ph) -
                       cfg.lambda * inner(grid, uth, ph) - inner(grid, gth, ph));
    }
    const Field ph_end = sample(traj.times[k_end]);
    const Field ph0 = sample(0.0);
    total += inner(grid, traj.v.row(k_end), ph_end);
    total -= inner(grid, traj.v.row(0), ph0);
    total += xi.pair([&](double t, double xx) { return phi(t, xx); }, traj.times[k_end]);
    return std::abs(total);
}

// ---------------------------------------------------------------------------
// Subdifferential inequality

/// Admissible competitor v(t, x) with values in [-1, 1].
using Candidate = std::function<double(double, double)>;

/// Bilinear interpolant of random knot values in [-1, 1] on a tensor grid
/// over [0, T] x [0, L]; always admissible for the indicator constraint.
inline std::vector<Candidate> random_candidates(std::uint64_t seed, std::size_t count, double T, double L,
                                                std::size_t knots = 6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Candidate> out;
    out.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        std::vector<double> vals(knots * knots);
        for (double& v : vals) v = dist(rng);
        out.emplace_back([vals = std::move(vals), knots, T, L](double t, double x) {
            auto locate = [knots](double s, double span) {
                const double pos = std::clamp(s / span, 0.0, 1.0) * static_cast<double>(knots - 1);
                const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos), knots - 2);
                return std::pair{i, pos - static_cast<double>(i)};
            };
            const auto [it, ft] = locate(t, T);
            const auto [ix, fx] = locate(x, L > 0.0 ? L : 1.0);
            auto at = [&](std::size_t a, std::size_t b) { return vals[a * knots + b]; };
            return (1 - ft) * ((1 - fx) * at(it, ix) + fx * at(it, ix + 1)) +
                   ft * ((1 - fx) * at(it + 1, ix) + fx * at(it + 1, ix + 1));
        });
    }
    return out;
}

/// The graph whose potential the regularization approximates. The explicit
/// family converges to the indicator of [-1, 1].
inline MonotoneGraph limit_graph(const Reaction& reaction) {
    return reaction.is_direct_family() ? MonotoneGraph::indicator() : reaction.graph();
}

struct SubdifferentialReport {
    std::vector<double> slacks;
    double min_slack = 0.0;
    double tolerance = 0.0;
    bool all_pass = true;
};

/// slack(v) = calJ(v) - calJ(u) - <xi, v - u>, with calJ the space-time
/// integral of the limit potential. u is evaluated through its projection
/// onto [-1, 1] inside calJ and through the recorded u-moments inside <xi, u>.
inline SubdifferentialReport subdifferential_check(const Trajectory& traj, const XiMeasure& xi,
                                                   std::span<const Candidate> candidates, double tol) {
    const Grid& grid = traj.grid();
    const MonotoneGraph graph = limit_graph(traj.config.reaction);
    const auto w = grid.weights();
    const auto x = grid.x();
    const double th = traj.config.theta;

    double J_u = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double dt = traj.times[k] - traj.times[k - 1];
        const auto u0 = traj.u.row(k - 1), u1 = traj.u.row(k);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double uth = std::clamp(th * u1[i] + (1.0 - th) * u0[i], -1.0, 1.0);
            J_u += dt * w[i] * eval_j(graph, uth).value;
        }
    }
    double xi_u = 0.0;
    for (std::size_t it = 0; it < xi.n_t(); ++it)
        for (std::size_t ix = 0; ix < xi.n_x(); ++ix) xi_u += xi.cell(it, ix).u_moment;

    SubdifferentialReport rep;
    rep.tolerance = tol;
    rep.min_slack = std::numeric_limits<double>::infinity();
    const auto edges = xi.t_edges();
    for (const auto& v : candidates) {
        double J_v = 0.0;
        for (std::size_t it = 0; it < xi.n_t(); ++it) {
            const double dt = edges[it + 1] - edges[it];
            const double tc = xi.t_center(it);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double val = v(tc, x[i]);
                if (std::abs(val) > 1.0 + 1e-12)
                    throw InadmissibleCandidate("candidate leaves [-1, 1] at t=" + std::to_string(tc));
                const ExtendedReal jv = eval_j(graph, val);
                if (jv.infinite) throw InadmissibleCandidate("candidate has infinite potential");
                J_v += dt * w[i] * jv.value;
            }
        }
        const double xi_v = xi.pair(v);
        const double slack = J_v - J_u - (xi_v - xi_u);
        rep.slacks.push_back(slack);
        rep.min_slack = std::min(rep.min_slack, slack);
        rep.all_pass = rep.all_pass && slack >= -tol;
    }
    if (candidates.empty()) rep.min_slack = 0.0;
    return rep;
}

/// Point mass of a purely spatial reaction.
struct SpatialAtom {
    double x = 0.0;
    double mass = 0.0;
};

/// Static version of the subdifferential slack: J(v) - J(u) - <xi, v - u>
/// for xi a sum of spatial atoms at grid nodes, J by mass-weighted quadrature.
inline double static_subdifferential_slack(const Grid& grid, const MonotoneGraph& graph, std::span<const double> u,
                                           std::span<const SpatialAtom> atoms, std::span<const double> v) {
    grid.check(u);
    grid.check(v);
    const auto w = grid.weights();
    const auto x = grid.x();
    double Jv = 0.0, Ju = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ExtendedReal jv = eval_j(graph, v[i]);
        if (jv.infinite) throw InadmissibleCandidate("candidate outside the domain of j");
        Jv += w[i] * jv.value;
        Ju += w[i] * eval_j(graph, u[i]).to_double();
    }
    double pairing = 0.0;
    for (const auto& a : atoms) {
        const auto it = std::min_element(x.begin(), x.end(), [&](double p, double q) {
            return std::abs(p - a.x) < std::abs(q - a.x);
        });
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        pairing += a.mass * (v[i] - u[i]);
    }
    return Jv - Ju - pairing;
}

// ---------------------------------------------------------------------------
// Support of the concentrated part

struct SupportReport {
    std::size_t n_significant = 0;
    std::size_t n_positive = 0;
    std::size_t n_negative = 0;
    /// max over significant cells of 1 - sign(mass) * mean_u; <= 0 means the
    /// mass sits where u has reached the wall matching its sign.
    double max_defect = -std::numeric_limits<double>::infinity();
    double min_u_positive = std::numeric_limits<double>::infinity();
    double max_u_negative = -std::numeric_limits<double>::infinity();
};

inline SupportReport singular_support_check(const XiMeasure& xi, double threshold) {
    SupportReport rep;
    for (std::size_t it = 0; it < xi.n_t(); ++it)
        for (std::size_t ix = 0; ix < xi.n_x(); ++ix) {
            const double m = xi.cell(it, ix).mass;
            if (std::abs(m) <= threshold) continue;
            ++rep.n_significant;
            const double ubar = xi.mean_u(it, ix);
            const double sign = m > 0.0 ? 1.0 : -1.0;
            rep.max_defect = std::max(rep.max_defect, 1.0 - sign * ubar);
            if (m > 0.0) {
                ++rep.n_positive;
                rep.min_u_positive = std::min(rep.min_u_positive, ubar);
            } else {
                ++rep.n_negative;
                rep.max_u_negative = std::max(rep.max_u_negative, ubar);
            }
        }
    if (rep.n_significant == 0) rep.max_defect = 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Velocity jumps

struct DetectedJump {
    double t = 0.0;         ///< variation-weighted mean time of the event
    double t_start = 0.0;
    double t_end = 0.0;
    double v_before = 0.0;  ///< spatial mean velocity before the event
    double v_after = 0.0;
    double impulse = 0.0;   ///< ||v_after - v_before|| in the weighted L1 norm
};

namespace detail {

inline double mean_velocity(const Grid& grid, std::span<const double> v) {
    const auto w = grid.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
    return s / grid.length();
}

} // namespace detail

/// Flags intervals whose velocity change exceeds kappa times the median
/// change (and a floor of 1e-8 times the largest change, which keeps
/// round-off from registering on piecewise-constant velocities), then merges
/// flags closer than `merge_window` into one event. merge_window <= 0 uses
/// sqrt(compliance), the boundary-layer width.
inline std::vector<DetectedJump> detect_jumps(const Trajectory& traj, double kappa, double merge_window = 0.0) {
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    const Grid& grid = traj.grid();
    if (merge_window <= 0.0) merge_window = std::sqrt(traj.config.reaction.compliance());
    const std::size_t n = traj.size();
    std::vector<DetectedJump> events;
    if (n < 2) return events;
    std::vector<double> change(n, 0.0);
    Field dv(grid.size());
    for (std::size_t k = 1; k < n; ++k) {
        const auto a = traj.v.row(k - 1), b = traj.v.row(k);
        for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = b[i] - a[i];
        change[k] = l1_norm(grid, dv);
    }
    std::vector<double> sorted(change.begin() + 1, change.end());
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double largest = *std::max_element(change.begin(), change.end());
    const double threshold = std::max(kappa * median, 1e-8 * largest);

    std::size_t k = 1;
    while (k < n) {
        if (!(change[k] > threshold)) {
            ++k;
            continue;
        }
        std::size_t first = k, last = k;
        for (std::size_t j = k + 1; j < n; ++j) {
            if (traj.times[j] - traj.times[last] > merge_window) break;
            if (change[j] > threshold) last = j;
        }
        DetectedJump ev;
        double wsum = 0.0, tsum = 0.0;
        for (std::size_t j = first; j <= last; ++j) {
            const double mid = 0.5 * (traj.times[j] + traj.times[j - 1]);
            wsum += change[j];
            tsum += change[j] * mid;
        }
        ev.t = tsum / wsum;
        ev.t_start = traj.times[first - 1];
        ev.t_end = traj.times[last];
        ev.v_before = detail::mean_velocity(grid, traj.v.row(first - 1));
        ev.v_after = detail::mean_velocity(grid, traj.v.row(last));
        const auto a = traj.v.row(first - 1), b = traj.v.row(last);
        for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = b[i] - a[i];
        ev.impulse = l1_norm(grid, dv);
        events.push_back(ev);
        k = last + 1;
    }
    return events;
}

// ---------------------------------------------------------------------------
// Restriction compatibility

/// |int phi dxi_sub - int phi~ dxi_full| where phi~ is phi cut off after t;
/// phi must vanish at t.
inline double restriction_compat(const XiMeasure& xi_full, const XiMeasure& xi_sub, const TestFunction& phi,
                                 double t) {
    if (!phi.vanishes_at(t))
        throw InadmissibleTestFunction("test function '" + phi.name + "' does not vanish at the cut time");
    auto cut = [&](double s, double x) { return s <= t ? phi(s, x) : 0.0; };
    return std::abs(xi_sub.pair(cut) - xi_full.pair(cut));
}

} // namespace sdw
