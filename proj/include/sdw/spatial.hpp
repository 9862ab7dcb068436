#pragma once

// 1D finite-difference grid on (0, L) with Dirichlet or Neumann conditions.
//
// Dirichlet grids store the interior nodes x_1..x_{n-2}; Neumann grids store
// every node x_0..x_{n-1} and close the stencil with mirror ghost nodes. A
// Neumann grid with a single node is the spatially homogeneous (toy) model:
// A = 0 and the node carries the whole length as its weight.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sdw/errors.hpp"

namespace sdw {

using Field = std::vector<double>;

enum class BoundaryCondition { Dirichlet, Neumann };

inline BoundaryCondition parse_bc(std::string_view s) {
    if (s == "dirichlet") return BoundaryCondition::Dirichlet;
    if (s == "neumann") return BoundaryCondition::Neumann;
    throw std::invalid_argument("unknown boundary condition '" + std::string(s) + "'");
}

inline std::string_view to_string(BoundaryCondition bc) {
    return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann";
}

class Grid {
public:
    /// `n_nodes` counts every mesh point including both endpoints.
    Grid(double length, std::size_t n_nodes, BoundaryCondition bc)
        : length_(length), n_nodes_(n_nodes), bc_(bc) {
        if (!(length > 0.0)) throw std::invalid_argument("grid length must be positive");
        const bool toy = bc == BoundaryCondition::Neumann && n_nodes == 1;
        if (n_nodes < 3 && !toy)
            throw std::invalid_argument("grid needs at least 3 nodes (or 1 node with Neumann)");
        h_ = toy ? length : length / static_cast<double>(n_nodes - 1);
        const std::size_t dim = size();
        x_.resize(dim);
        weights_.assign(dim, h_);
        const std::size_t offset = bc == BoundaryCondition::Dirichlet ? 1 : 0;
        for (std::size_t i = 0; i < dim; ++i) x_[i] = h_ * static_cast<double>(i + offset);
        if (toy) {
            x_[0] = 0.0;
            weights_[0] = length;
        } else if (bc == BoundaryCondition::Neumann) {
            weights_.front() = 0.5 * h_;
            weights_.back() = 0.5 * h_;
        }
    }

    static Grid single_node(double length = 1.0) { return Grid(length, 1, BoundaryCondition::Neumann); }

    [[nodiscard]] double length() const { return length_; }
    [[nodiscard]] std::size_t n_nodes() const { return n_nodes_; }
    [[nodiscard]] double h() const { return h_; }
    [[nodiscard]] BoundaryCondition bc() const { return bc_; }
    [[nodiscard]] bool is_single_node() const { return n_nodes_ == 1; }
    /// Number of unknowns stored per field.
    [[nodiscard]] std::size_t size() const {
        return bc_ == BoundaryCondition::Dirichlet ? n_nodes_ - 2 : n_nodes_;
    }
    [[nodiscard]] std::span<const double> x() const { return x_; }
    /// Trapezoidal mass weights; A is self-adjoint in the induced inner product.
    [[nodiscard]] std::span<const double> weights() const { return weights_; }

    void check(std::span<const double> u) const {
        if (u.size() != size()) throw DimensionMismatch(size(), u.size());
    }

private:
    double length_;
    std::size_t n_nodes_;
    BoundaryCondition bc_;
    double h_ = 0.0;
    std::vector<double> x_;
    std::vector<double> weights_;
};

/// Tridiagonal matrix in band storage: lower[i] couples row i to i-1,
/// upper[i] couples row i to i+1.
struct Tridiagonal {
    std::vector<double> lower, diag, upper;

    explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
    [[nodiscard]] std::size_t size() const { return diag.size(); }
};

/// Thomas algorithm. Throws SingularSystem on a zero pivot.
inline std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs) {
    const std::size_t n = m.size();
    if (rhs.size() != n) throw DimensionMismatch(n, rhs.size());
    std::vector<double> c(n), d(n);
    double pivot = m.diag[0];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw SingularSystem("zero pivot in row 0");
    c[0] = m.upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = m.diag[i] - m.lower[i] * c[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw SingularSystem("zero pivot in row " + std::to_string(i));
        c[i] = m.upper[i] / pivot;
        d[i] = (rhs[i] - m.lower[i] * d[i - 1]) / pivot;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

/// The discrete -Laplacian as a tridiagonal matrix.
inline Tridiagonal laplacian_matrix(const Grid& grid) {
    const std::size_t n = grid.size();
    Tridiagonal a(n);
    if (grid.is_single_node()) return a;
    const double k = 1.0 / (grid.h() * grid.h());
    for (std::size_t i = 0; i < n; ++i) {
        a.diag[i] = 2.0 * k;
        if (i > 0) a.lower[i] = -k;
        if (i + 1 < n) a.upper[i] = -k;
    }
    if (grid.bc() == BoundaryCondition::Neumann) {
        // mirror ghosts u_{-1} = u_1, u_n = u_{n-2}
        a.upper[0] = -2.0 * k;
        a.lower[n - 1] = -2.0 * k;
    }
    return a;
}

/// A u with the 3-point stencil (-u_{i-1} + 2u_i - u_{i+1}) / h^2.
inline Field apply_A(const Grid& grid, std::span<const double> u) {
    grid.check(u);
    const std::size_t n = u.size();
    Field out(n, 0.0);
    if (grid.is_single_node()) return out;
    const double k = 1.0 / (grid.h() * grid.h());
    const bool neumann = grid.bc() == BoundaryCondition::Neumann;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? u[i - 1] : (neumann ? u[1] : 0.0);
        const double right = i + 1 < n ? u[i + 1] : (neumann ? u[n - 2] : 0.0);
        out[i] = k * (2.0 * u[i] - left - right);
    }
    return out;
}

/// Mass-weighted inner product (u, w).
inline double inner(const Grid& grid, std::span<const double> u, std::span<const double> w) {
    grid.check(u);
    grid.check(w);
    const auto wt = grid.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += wt[i] * u[i] * w[i];
    return s;
}

/// Weighted L1 norm, the X-norm used for velocity variation.
inline double l1_norm(const Grid& grid, std::span<const double> u) {
    grid.check(u);
    const auto wt = grid.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += wt[i] * std::abs(u[i]);
    return s;
}

struct Norms {
    double l2 = 0.0;
    double h1_semi = 0.0;
};

/// h1_semi sums squared difference quotients over every cell, with the
/// boundary cells of a Dirichlet grid seeing the zero boundary values, so
/// that h1_semi^2 == (A u, u) exactly.
inline Norms norms(const Grid& grid, std::span<const double> u) {
    grid.check(u);
    Norms out;
    out.l2 = std::sqrt(inner(grid, u, u));
    if (grid.is_single_node()) return out;
    const double h = grid.h();
    double s = 0.0;
    auto diff = [&](double a, double b) { s += (b - a) * (b - a) / h; };
    if (grid.bc() == BoundaryCondition::Dirichlet) {
        diff(0.0, u.front());
        diff(u.back(), 0.0);
    }
    for (std::size_t i = 0; i + 1 < u.size(); ++i) diff(u[i], u[i + 1]);
    out.h1_semi = std::sqrt(s);
    return out;
}

/// Solves (I + epsilon A) w = u0: the elliptic regularization of initial data.
inline Field regularize_initial(const Grid& grid, std::span<const double> u0, double epsilon) {
    grid.check(u0);
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    Tridiagonal m = laplacian_matrix(grid);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.lower[i] *= epsilon;
        m.upper[i] *= epsilon;
        m.diag[i] = 1.0 + epsilon * m.diag[i];
    }
    return solve_tridiagonal(m, u0);
}

/// Named initial/forcing profiles: "zero", "constant:c", "sine:k", "cosine:k",
/// "ramp", each optionally followed by ":amplitude" (e.g. "sine:1:0.5").
class Profile {
public:
    enum class Kind { Zero, Constant, Sine, Cosine, Ramp, Samples };

    static Profile parse(std::string_view text) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            const auto pos = text.find(':', start);
            parts.emplace_back(text.substr(start, pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        auto num = [&](std::size_t i, double fallback) {
            if (parts.size() <= i) return fallback;
            std::size_t used = 0;
            const double v = std::stod(parts[i], &used);
            if (used != parts[i].size()) throw std::invalid_argument("bad number in profile");
            return v;
        };
        try {
            Profile p;
            const std::string& name = parts[0];
            if (name == "zero") {
                p.kind_ = Kind::Zero;
            } else if (name == "constant") {
                p.kind_ = Kind::Constant;
                p.amplitude_ = num(1, 0.0);
            } else if (name == "sine" || name == "cosine") {
                p.kind_ = name == "sine" ? Kind::Sine : Kind::Cosine;
                p.mode_ = num(1, 1.0);
                p.amplitude_ = num(2, 1.0);
            } else if (name == "ramp") {
                p.kind_ = Kind::Ramp;
                p.amplitude_ = num(1, 1.0);
            } else {
                throw std::invalid_argument("unknown profile '" + std::string(text) + "'");
            }
            return p;
        } catch (const std::logic_error&) {
            throw std::invalid_argument("cannot parse profile '" + std::string(text) + "'");
        }
    }

    static Profile samples(Field values) {
        Profile p;
        p.kind_ = Kind::Samples;
        p.samples_ = std::move(values);
        return p;
    }

    [[nodiscard]] Kind kind() const { return kind_; }

    [[nodiscard]] Field sample(const Grid& grid) const {
        const auto x = grid.x();
        const double L = grid.length();
        Field out(x.size(), 0.0);
        if (kind_ == Kind::Samples) {
            grid.check(samples_);
            return samples_;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double arg = mode_ * std::numbers::pi * x[i] / L;
            switch (kind_) {
            case Kind::Zero: out[i] = 0.0; break;
            case Kind::Constant: out[i] = amplitude_; break;
            case Kind::Sine: out[i] = amplitude_ * std::sin(arg); break;
            case Kind::Cosine: out[i] = amplitude_ * std::cos(arg); break;
            case Kind::Ramp: out[i] = amplitude_ * x[i] / L; break;
            case Kind::Samples: break;
            }
        }
        return out;
    }

    /// Whether the continuous profile lies in D(A) for the given condition:
    /// smooth and compatible with the boundary condition.
    [[nodiscard]] bool in_domain_of_A(BoundaryCondition bc) const {
        switch (kind_) {
        case Kind::Zero: return true;
        case Kind::Constant: return bc == BoundaryCondition::Neumann || amplitude_ == 0.0;
        case Kind::Sine:
            return bc == BoundaryCondition::Dirichlet && mode_ == std::round(mode_);
        case Kind::Cosine:
            return bc == BoundaryCondition::Neumann && mode_ == std::round(mode_);
        case Kind::Ramp: return amplitude_ == 0.0;
        case Kind::Samples: return false;
        }
        return false;
    }

private:
    Kind kind_ = Kind::Zero;
    double amplitude_ = 0.0;
    double mode_ = 1.0;
    Field samples_;
};

} // namespace sdw
