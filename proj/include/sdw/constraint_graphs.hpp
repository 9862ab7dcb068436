#pragma once

// Maximal monotone graphs beta = dj on the real line with dom closure [-1, 1],
// their resolvents, Yosida approximants and Moreau envelopes, plus the
// explicit piecewise-linear approximating family.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sdw/errors.hpp"

namespace sdw {

/// Value of a convex potential that may be +infinity. `value` is a finite
/// sentinel (0) whenever `infinite` is set.
struct ExtendedReal {
    double value = 0.0;
    bool infinite = false;

    static constexpr ExtendedReal finite(double v) { return {v, false}; }
    static constexpr ExtendedReal plus_infinity() { return {0.0, true}; }

    [[nodiscard]] bool is_finite() const { return !infinite; }
    /// Lossy conversion used when summing into diagnostics.
    [[nodiscard]] double to_double() const {
        return infinite ? std::numeric_limits<double>::infinity() : value;
    }
    friend bool operator<=(const ExtendedReal& a, const ExtendedReal& b) {
        if (b.infinite) return true;
        if (a.infinite) return false;
        return a.value <= b.value;
    }
};

enum class GraphKind { Indicator, Logarithmic, PiecewiseLinearFamily };

inline std::string_view to_string(GraphKind kind) {
    switch (kind) {
    case GraphKind::Indicator: return "indicator";
    case GraphKind::Logarithmic: return "logarithmic";
    case GraphKind::PiecewiseLinearFamily: return "family";
    }
    return "unknown";
}

inline GraphKind parse_graph_kind(std::string_view s) {
    if (s == "indicator") return GraphKind::Indicator;
    if (s == "logarithmic") return GraphKind::Logarithmic;
    if (s == "family") return GraphKind::PiecewiseLinearFamily;
    throw std::invalid_argument("unknown graph kind '" + std::string(s) + "'");
}

/// beta = 0 on [-r_threshold, r_threshold], slope eps_param^-2 outside.
inline double family_beta(double r_threshold, double eps_param, double r) {
    const double k = 1.0 / (eps_param * eps_param);
    if (r > r_threshold) return k * (r - r_threshold);
    if (r < -r_threshold) return k * (r + r_threshold);
    return 0.0;
}

/// Antiderivative of family_beta vanishing at 0 (even in r).
inline double family_j(double r_threshold, double eps_param, double r) {
    const double excess = std::max(std::abs(r) - r_threshold, 0.0);
    return excess * excess / (2.0 * eps_param * eps_param);
}

class MonotoneGraph {
public:
    static MonotoneGraph indicator() { return MonotoneGraph(GraphKind::Indicator, 1.0, 1.0); }
    static MonotoneGraph logarithmic() { return MonotoneGraph(GraphKind::Logarithmic, 1.0, 1.0); }
    static MonotoneGraph family(double r_threshold, double eps_param) {
        if (!(r_threshold > 0.0 && r_threshold <= 1.0))
            throw std::invalid_argument("family r_threshold must lie in (0, 1]");
        if (!(eps_param > 0.0)) throw std::invalid_argument("family eps_param must be positive");
        return MonotoneGraph(GraphKind::PiecewiseLinearFamily, r_threshold, eps_param);
    }

    [[nodiscard]] GraphKind kind() const { return kind_; }
    [[nodiscard]] double r_threshold() const { return r_threshold_; }
    [[nodiscard]] double eps_param() const { return eps_param_; }

private:
    MonotoneGraph(GraphKind kind, double rt, double ep) : kind_(kind), r_threshold_(rt), eps_param_(ep) {}

    GraphKind kind_;
    double r_threshold_;
    double eps_param_;
};

namespace detail {

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double log_beta(double x) { return std::log1p(x) - std::log1p(-x); }

/// Root of x + eps * log((1+x)/(1-x)) = r on (-1, 1): Newton steps kept
/// inside a shrinking bisection bracket.
inline double log_resolvent(double eps, double r) {
    if (r == 0.0) return 0.0;
    constexpr double tol = 1e-12;
    constexpr int max_iter = 200;
    // The root has the sign of r and |x| < min(|r|, 1).
    const double sign = r > 0.0 ? 1.0 : -1.0;
    const double target = std::abs(r);
    double lo = 0.0;
    double hi = std::min(target, std::nextafter(1.0, 0.0));
    auto g = [&](double x) { return x + eps * log_beta(x) - target; };
    if (g(hi) <= 0.0) return sign * hi; // root closer to the wall than one ulp
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        const double gx = g(x);
        if (gx > 0.0) hi = x; else lo = x;
        if (hi - lo <= tol || gx == 0.0) return sign * x;
        const double dg = 1.0 + eps * 2.0 / ((1.0 - x) * (1.0 + x));
        double next = x - gx / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= tol) return sign * next;
        x = next;
    }
    throw NonConvergence("logarithmic resolvent did not converge for r=" + std::to_string(r));
}

} // namespace detail

/// The convex potential j; +infinity outside the domain.
inline ExtendedReal eval_j(const MonotoneGraph& graph, double r) {
    switch (graph.kind()) {
    case GraphKind::Indicator:
        return std::abs(r) <= 1.0 ? ExtendedReal::finite(0.0) : ExtendedReal::plus_infinity();
    case GraphKind::Logarithmic:
        if (std::abs(r) > 1.0) return ExtendedReal::plus_infinity();
        // the sum cancels near r = 0; the exact value is never negative
        return ExtendedReal::finite(std::max(0.0, detail::xlogx(1.0 + r) + detail::xlogx(1.0 - r)));
    case GraphKind::PiecewiseLinearFamily:
        return ExtendedReal::finite(family_j(graph.r_threshold(), graph.eps_param(), r));
    }
    return ExtendedReal::plus_infinity();
}

/// j regularized by inf-convolution with |.|^2 / (2 epsilon).
class RegularizedPotential {
public:
    RegularizedPotential(MonotoneGraph graph, double epsilon) : graph_(graph), epsilon_(epsilon) {
        if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    }

    [[nodiscard]] const MonotoneGraph& graph() const { return graph_; }
    [[nodiscard]] double epsilon() const { return epsilon_; }

private:
    MonotoneGraph graph_;
    double epsilon_;
};

/// The unique x with x + epsilon * beta(x) containing r.
inline double resolvent(const RegularizedPotential& pot, double r) {
    const auto& g = pot.graph();
    const double eps = pot.epsilon();
    switch (g.kind()) {
    case GraphKind::Indicator:
        return std::clamp(r, -1.0, 1.0);
    case GraphKind::Logarithmic:
        return detail::log_resolvent(eps, r);
    case GraphKind::PiecewiseLinearFamily: {
        const double rt = g.r_threshold();
        const double a2 = g.eps_param() * g.eps_param();
        if (r > rt) return (r * a2 + eps * rt) / (a2 + eps);
        if (r < -rt) return (r * a2 - eps * rt) / (a2 + eps);
        return r;
    }
    }
    return r;
}

inline double yosida(const RegularizedPotential& pot, double r) {
    const auto& g = pot.graph();
    if (g.kind() == GraphKind::PiecewiseLinearFamily) {
        // Closed form avoids the cancellation in (r - x) / eps.
        const double rt = g.r_threshold();
        const double denom = g.eps_param() * g.eps_param() + pot.epsilon();
        if (r > rt) return (r - rt) / denom;
        if (r < -rt) return (r + rt) / denom;
        return 0.0;
    }
    return (r - resolvent(pot, r)) / pot.epsilon();
}

/// Derivative of the Yosida approximant. At kinks the active-side value is
/// returned (semismooth Newton convention).
inline double yosida_slope(const RegularizedPotential& pot, double r) {
    const auto& g = pot.graph();
    const double eps = pot.epsilon();
    switch (g.kind()) {
    case GraphKind::Indicator:
        return std::abs(r) >= 1.0 ? 1.0 / eps : 0.0;
    case GraphKind::Logarithmic: {
        const double x = resolvent(pot, r);
        // beta'(x) / (1 + eps beta'(x)) with beta'(x) = 2 / (1 - x^2)
        const double inv_slope = 0.5 * (1.0 - x) * (1.0 + x);
        return 1.0 / (inv_slope + eps);
    }
    case GraphKind::PiecewiseLinearFamily: {
        const double a2 = g.eps_param() * g.eps_param();
        return std::abs(r) >= g.r_threshold() ? 1.0 / (a2 + eps) : 0.0;
    }
    }
    return 0.0;
}

/// min_s j(s) + (r - s)^2 / (2 epsilon), evaluated at the resolvent.
inline double moreau(const RegularizedPotential& pot, double r) {
    const double x = resolvent(pot, r);
    const double y = yosida(pot, r);
    return eval_j(pot.graph(), x).value + 0.5 * pot.epsilon() * y * y;
}

/// The single-valued nonlinearity driving the regularized dynamics: either
/// the Yosida approximant of a graph or the explicit family used verbatim.
class Reaction {
public:
    static Reaction yosida_of(RegularizedPotential pot) { return Reaction(pot, false); }
    static Reaction family(double r_threshold, double eps_param) {
        return Reaction(RegularizedPotential(MonotoneGraph::family(r_threshold, eps_param), 1.0), true);
    }

    [[nodiscard]] double operator()(double r) const {
        if (direct_family_) {
            const auto& g = pot_.graph();
            return family_beta(g.r_threshold(), g.eps_param(), r);
        }
        return yosida(pot_, r);
    }

    [[nodiscard]] double slope(double r) const {
        if (direct_family_) {
            const auto& g = pot_.graph();
            return std::abs(r) >= g.r_threshold() ? 1.0 / (g.eps_param() * g.eps_param()) : 0.0;
        }
        return yosida_slope(pot_, r);
    }

    /// Potential j^eps whose derivative is operator().
    [[nodiscard]] double potential(double r) const {
        if (direct_family_) {
            const auto& g = pot_.graph();
            return family_j(g.r_threshold(), g.eps_param(), r);
        }
        return moreau(pot_, r);
    }

    /// Inverse of the largest slope: how far the state may penetrate the
    /// wall per unit of potential energy, (|r| - 1)^2 <= 2 compliance j(r).
    [[nodiscard]] double compliance() const {
        if (direct_family_) return pot_.graph().eps_param() * pot_.graph().eps_param();
        if (pot_.graph().kind() == GraphKind::PiecewiseLinearFamily)
            return pot_.epsilon() + pot_.graph().eps_param() * pot_.graph().eps_param();
        return pot_.epsilon();
    }

    /// The family index epsilon of the regularization (Yosida epsilon, or
    /// eps_param for the explicit family).
    [[nodiscard]] double regularization() const {
        return direct_family_ ? pot_.graph().eps_param() : pot_.epsilon();
    }

    /// Threshold below which the reaction vanishes identically (1 for the
    /// indicator, 0 for the logarithmic potential).
    [[nodiscard]] double dead_zone() const {
        switch (pot_.graph().kind()) {
        case GraphKind::Indicator: return 1.0;
        case GraphKind::Logarithmic: return 0.0;
        case GraphKind::PiecewiseLinearFamily: return pot_.graph().r_threshold();
        }
        return 0.0;
    }

    [[nodiscard]] const MonotoneGraph& graph() const { return pot_.graph(); }
    [[nodiscard]] const RegularizedPotential& regularized() const { return pot_; }
    [[nodiscard]] bool is_direct_family() const { return direct_family_; }

private:
    Reaction(RegularizedPotential pot, bool direct) : pot_(pot), direct_family_(direct) {}

    RegularizedPotential pot_;
    bool direct_family_;
};

} // namespace sdw
