#pragma once

// Closed-form solutions of the spatially homogeneous model u_tt + beta(u) = 0
// and of its regularizations, used as ground truth.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdw/constraint_graphs.hpp"
#include "sdw/errors.hpp"
#include "sdw/test_functions.hpp"

namespace sdw {

struct PhasePoint {
    double u = 0.0;
    double v = 0.0;
};

/// Velocity jump at a wall: v jumps from v_before to v_after at time t.
struct JumpEvent {
    double t = 0.0;
    double v_before = 0.0;
    double v_after = 0.0;
};

/// Atom of the constraint reaction, mass * delta_{t}.
struct XiAtom {
    double t = 0.0;
    double mass = 0.0;
};

/// Piecewise-affine limit trajectory: on [t_start, t_end) u = u_start + v (t - t_start).
struct AffineSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    double u_start = 0.0;
    double v = 0.0;
};

struct ToySolution {
    std::vector<AffineSegment> segments;
    std::vector<JumpEvent> jumps;
    std::vector<XiAtom> atoms;

    /// (u, v) with v right-continuous at jump times.
    [[nodiscard]] PhasePoint at(double t) const {
        for (const auto& s : segments)
            if (t >= s.t_start && t < s.t_end) return {s.u_start + s.v * (t - s.t_start), s.v};
        const auto& s = segments.back();
        return {s.u_start + s.v * (t - s.t_start), s.v};
    }
};

/// Limit solution of the toy problem with constraint [-1, 1] on [0, T]. At
/// every wall hit the velocity becomes |ell| pointing back into the domain
/// (ell <= 0 is the post-impact velocity at +1); ell = 0 sticks to the wall.
inline ToySolution exact_limit_toy_solution(double u0, double u1, double ell, double T) {
    if (!(u0 >= -1.0 && u0 <= 1.0)) throw std::invalid_argument("u0 must lie in [-1, 1]");
    const bool hits = u1 != 0.0;
    if (hits && ell > 0.0) throw InvalidEll("ell must be <= 0 at a wall hit");
    if (hits && std::abs(ell) > std::abs(u1))
        throw InvalidEll("|ell| > |u1| would increase the energy");
    ToySolution sol;
    double t = 0.0, u = u0, v = u1;
    while (t < T) {
        if (v == 0.0) {
            sol.segments.push_back({t, std::numeric_limits<double>::infinity(), u, 0.0});
            break;
        }
        const double wall = v > 0.0 ? 1.0 : -1.0;
        const double t_hit = t + (wall - u) / v;
        sol.segments.push_back({t, t_hit, u, v});
        if (t_hit >= T) break;
        const double v_after = -wall * std::abs(ell);
        sol.jumps.push_back({t_hit, v, v_after});
        sol.atoms.push_back({t_hit, v - v_after});
        t = t_hit;
        u = wall;
        v = v_after;
    }
    sol.segments.back().t_end = std::numeric_limits<double>::infinity();
    return sol;
}

/// (u, v) of the limit toy solution at time t.
inline PhasePoint exact_limit_toy(double u0, double u1, double ell, double t) {
    return exact_limit_toy_solution(u0, u1, ell, t + 1.0).at(t);
}

/// |-int_0^T u_t phi_t dt + phi(T) u_t(T) + <xi, phi> - phi(0) u_1| for a
/// piecewise-affine solution with its atoms, integrated exactly.
inline double toy_weak_identity_residual(const ToySolution& sol, double u1, double T, const Factor& phi) {
    double total = 0.0;
    for (const auto& s : sol.segments) {
        if (s.t_start >= T) break;
        const double end = std::min(s.t_end, T);
        total -= s.v * (phi.value(end) - phi.value(s.t_start));
    }
    total += phi.value(T) * sol.at(T).v;
    for (const auto& a : sol.atoms)
        if (a.t <= T) total += a.mass * phi.value(a.t);
    total -= phi.value(0.0) * u1;
    return std::abs(total);
}

/// Mass of the reaction atom at the first impact of the u0 = 0, u1 = 1 problem.
inline double toy_xi_atom(double ell) {
    if (ell > 0.0) throw InvalidEll("ell must be <= 0");
    return 1.0 - ell;
}

/// Regularized toy with the explicit family (data u0 = 0, u1 = 1): free flight,
/// one harmonic arch of frequency 1/eps_param beyond r_threshold, then flight
/// back at velocity -1 until the opposite dead-zone edge.
inline PhasePoint exact_family_toy(double r_threshold, double eps_param, double t) {
    if (!(r_threshold > 0.0 && r_threshold <= 1.0) || !(eps_param > 0.0))
        throw std::invalid_argument("family parameters out of range");
    if (t < 0.0) throw OutOfValidityWindow("negative time");
    if (t <= r_threshold) return {t, 1.0};
    const double arch_end = r_threshold + std::numbers::pi * eps_param;
    if (t <= arch_end) {
        const double phase = (t - r_threshold) / eps_param;
        return {r_threshold + eps_param * std::sin(phase), std::cos(phase)};
    }
    const double back = arch_end + 2.0 * r_threshold;
    if (t > back) throw OutOfValidityWindow("past the first return to the dead zone");
    return {r_threshold - (t - arch_end), -1.0};
}

/// Same for the Yosida regularization of the indicator: u = t, then the layer
/// u = 1 + sqrt(eps) sin((t - 1) / sqrt(eps)), then flight at velocity -1
/// until u = -1.
inline PhasePoint yosida_layer_toy(double epsilon, double t) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (t < 0.0) throw OutOfValidityWindow("negative time");
    if (t <= 1.0) return {t, 1.0};
    const double s = std::sqrt(epsilon);
    const double layer_end = 1.0 + std::numbers::pi * s;
    if (t <= layer_end) {
        const double phase = (t - 1.0) / s;
        return {1.0 + s * std::sin(phase), std::cos(phase)};
    }
    if (t > layer_end + 2.0) throw OutOfValidityWindow("past the next wall");
    return {1.0 - (t - layer_end), -1.0};
}

/// Sampled level set {phi(u) + v^2/2 = c} in the phase plane.
struct PhaseCurve {
    struct Point {
        double u;
        double v;
        int branch; ///< +1 upper (v >= 0), -1 lower
    };
    std::vector<Point> points;
    double u_min = 0.0;
    double u_max = 0.0;
    /// Upper and lower branches meet (v = 0 at both ends of the u-range).
    bool connected = true;
};

namespace detail {

/// Largest |u| on one side with phi(u) <= c for a convex phi with phi(0) = 0,
/// restricted to [-bound, bound]. Returns (edge, phi(edge) < c).
inline std::pair<double, bool> level_edge(const std::function<double(double)>& phi, double c, double sign,
                                          double bound) {
    double hi = bound;
    if (std::isinf(bound)) {
        hi = 1.0;
        while (phi(sign * hi) <= c) hi *= 2.0;
    } else if (phi(sign * bound) <= c) {
        return {sign * bound, phi(sign * bound) < c};
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (phi(sign * mid) <= c) lo = mid; else hi = mid;
    }
    return {sign * lo, false};
}

inline PhaseCurve sample_level_set(const std::function<double(double)>& phi, double c, std::size_t n,
                                   double bound) {
    if (!(c >= 0.0)) throw std::invalid_argument("level must be nonnegative");
    if (n < 2) n = 2;
    PhaseCurve curve;
    const auto [left, open_left] = level_edge(phi, c, -1.0, bound);
    const auto [right, open_right] = level_edge(phi, c, 1.0, bound);
    curve.u_min = left;
    curve.u_max = right;
    curve.connected = !(open_left || open_right);
    for (int branch : {1, -1}) {
        for (std::size_t i = 0; i < n; ++i) {
            // cosine spacing: v ~ sqrt(distance to a turning point), so cluster there
            const double s = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
            const double u = i + 1 == n ? right : left + (right - left) * 0.5 * (1.0 - std::cos(s));
            const double v = std::sqrt(std::max(0.0, 2.0 * (c - phi(u))));
            curve.points.push_back({u, branch * v, branch});
        }
    }
    return curve;
}

} // namespace detail

/// Level set of the limit energy j(u) + v^2/2 (the domain is [-1, 1]).
inline PhaseCurve phase_level_set(const MonotoneGraph& graph, double c, std::size_t n_samples) {
    const double bound = graph.kind() == GraphKind::PiecewiseLinearFamily
                             ? std::numeric_limits<double>::infinity()
                             : 1.0;
    return detail::sample_level_set([&](double u) { return eval_j(graph, u).value; }, c, n_samples, bound);
}

/// Level set of the regularized energy j_eps(u) + v^2/2.
inline PhaseCurve phase_level_set(const Reaction& reaction, double c, std::size_t n_samples) {
    return detail::sample_level_set([&](double u) { return reaction.potential(u); }, c, n_samples,
                                    std::numeric_limits<double>::infinity());
}

} // namespace sdw
