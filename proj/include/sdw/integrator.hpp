#pragma once

// Implicit theta-scheme for the regularized strongly damped wave equation
//
//   u_tt + A u_t + A u + beta_eps(u) - lambda u = g,
//
// written as the first-order system u' = v, v' = F(u, v, t) with
// F = -A v - A u - beta_eps(u) + lambda u + g. Each step solves for u+ by a
// (semismooth) Newton iteration on a tridiagonal Jacobian; v+ follows from
// u+ = u + dt (theta v+ + (1 - theta) v).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdw/constraint_graphs.hpp"
#include "sdw/errors.hpp"
#include "sdw/spatial.hpp"

namespace sdw {

/// Row-major table of equally sized rows.
class Series {
public:
    Series() = default;
    explicit Series(std::size_t cols) : cols_(cols) {}

    void push(std::span<const double> row) {
        if (row.size() != cols_) throw DimensionMismatch(cols_, row.size());
        data_.insert(data_.end(), row.begin(), row.end());
    }
    void reserve(std::size_t rows) { data_.reserve(rows * cols_); }

    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t rows() const { return cols_ == 0 ? 0 : data_.size() / cols_; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    friend bool operator==(const Series&, const Series&) = default;

private:
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Source term g(t, x).
class Forcing {
public:
    enum class Kind { Zero, Profile, Table };

    static Forcing zero() { return Forcing(); }
    static Forcing constant(double value) {
        return profile(Profile::parse("constant:" + std::to_string(value)));
    }
    /// Time-independent spatial profile.
    static Forcing profile(Profile p) {
        Forcing f;
        f.kind_ = Kind::Profile;
        f.profile_ = std::move(p);
        return f;
    }
    /// Samples over time x space, linearly interpolated in time and held
    /// constant outside the sampled window.
    static Forcing table(std::vector<double> times, Series values) {
        if (times.empty() || times.size() != values.rows())
            throw std::invalid_argument("forcing table needs one row per time");
        if (!std::is_sorted(times.begin(), times.end()))
            throw std::invalid_argument("forcing table times must be increasing");
        Forcing f;
        f.kind_ = Kind::Table;
        f.times_ = std::move(times);
        f.table_ = std::move(values);
        return f;
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_zero() const { return kind_ == Kind::Zero; }

    [[nodiscard]] Field at(const Grid& grid, double t) const {
        switch (kind_) {
        case Kind::Zero: return Field(grid.size(), 0.0);
        case Kind::Profile: return profile_.sample(grid);
        case Kind::Table: {
            if (table_.cols() != grid.size()) throw DimensionMismatch(grid.size(), table_.cols());
            const auto it = std::upper_bound(times_.begin(), times_.end(), t);
            if (it == times_.begin()) return copy(table_.row(0));
            if (it == times_.end()) return copy(table_.row(times_.size() - 1));
            const std::size_t k = static_cast<std::size_t>(it - times_.begin());
            const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
            Field out(grid.size());
            const auto a = table_.row(k - 1);
            const auto b = table_.row(k);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
            return out;
        }
        }
        return Field(grid.size(), 0.0);
    }

private:
    static Field copy(std::span<const double> s) { return {s.begin(), s.end()}; }

    Kind kind_ = Kind::Zero;
    Profile profile_ = Profile::parse("zero");
    std::vector<double> times_;
    Series table_;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
};

struct SimConfig {
    Grid grid;
    Reaction reaction;
    double lambda = 0.0;
    double T = 1.0;
    double dt = 1e-3;
    double theta = 1.0;
    Field u0{};
    Field u1{};
    Forcing forcing = Forcing::zero();
    NewtonOptions newton = {};
    std::size_t output_every = 1;
    /// epsilon of the elliptic regularization (I + eps A) u0_eps = u0; 0 skips it.
    double init_regularization = 0.0;
    /// Whether the continuous u0 profile lies in D(A) (gates the regularity audit).
    bool u0_in_domain_of_A = false;

    [[nodiscard]] std::size_t n_steps() const {
        const double ratio = T / dt;
        const double nearest = std::round(ratio);
        if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio))
            return static_cast<std::size_t>(nearest);
        return static_cast<std::size_t>(std::ceil(ratio));
    }

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("time.dt", "must be positive");
        if (!(T > 0.0)) throw ConfigError("time.T", "must be positive");
        if (dt > T) throw ConfigError("time.dt", "must not exceed time.T");
        if (!(theta >= 0.5 && theta <= 1.0)) throw ConfigError("time.theta", "must lie in [0.5, 1]");
        if (!(lambda >= 0.0)) throw ConfigError("model.lambda", "must be nonnegative");
        if (output_every == 0) throw ConfigError("time.output_every", "must be at least 1");
        if (!(newton.tol > 0.0)) throw ConfigError("newton.tol", "must be positive");
        if (newton.max_iter < 1) throw ConfigError("newton.max_iter", "must be at least 1");
        if (u0.size() != grid.size()) throw ConfigError("init.u0", "dimension does not match the grid");
        if (u1.size() != grid.size()) throw ConfigError("init.u1", "dimension does not match the grid");
    }
};

struct SimState {
    double t = 0.0;
    Field u;
    Field v;
};

struct NewtonStats {
    std::size_t steps = 0;
    std::size_t total_iterations = 0;
    int max_iterations = 0;
    double max_residual = 0.0;
};

/// Output of simulate(). Row k of `u`/`v` is the state at times[k]. Interval
/// records (index k >= 1) cover (times[k-1], times[k]] and hold dt-weighted
/// means of per-step quantities, so that summing `record * span` over
/// intervals reproduces the scheme's own time quadrature. Cumulative series
/// are indexed like `times` and start at 0.
struct Trajectory {
    SimConfig config;
    std::vector<double> times{};
    Series u{};
    Series v{};
    /// mean of theta-weighted beta_eps(u) over each interval (row 0 is zero)
    Series reaction{};
    /// mean of the pointwise product beta_theta * u_theta over each interval
    Series reaction_u{};
    /// int ||grad u_t||^2 with the scheme's theta-weights
    std::vector<double> dissipation_cum{};
    /// int (g, u_t) with the scheme's theta-weights
    std::vector<double> work_cum{};
    /// sum of step-to-step velocity changes in the weighted L1 norm
    std::vector<double> bv_cum{};
    /// sum over steps of dt (beta_theta, u_theta)
    std::vector<double> reaction_pairing_cum{};
    /// Newton iterations summed over each interval
    std::vector<int> newton_iterations{};
    NewtonStats newton{};
    std::vector<std::string> warnings{};

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] SimState state(std::size_t k) const {
        const auto uk = u.row(k);
        const auto vk = v.row(k);
        return {times[k], {uk.begin(), uk.end()}, {vk.begin(), vk.end()}};
    }
    [[nodiscard]] const Grid& grid() const { return config.grid; }
    /// Index of an output time, or TimeNotOnGrid.
    [[nodiscard]] std::size_t index_of(double t) const {
        const double tol = 1e-9 * std::max(1.0, std::abs(t)) + 1e-6 * config.dt;
        const auto it = std::lower_bound(times.begin(), times.end(), t - tol);
        if (it == times.end() || std::abs(*it - t) > tol) throw TimeNotOnGrid(t);
        return static_cast<std::size_t>(it - times.begin());
    }
};

namespace detail {

inline Field rhs_F(const SimConfig& cfg, std::span<const double> u, std::span<const double> v,
                   std::span<const double> g) {
    const Field Av = apply_A(cfg.grid, v);
    const Field Au = apply_A(cfg.grid, u);
    Field out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = -Av[i] - Au[i] - cfg.reaction(u[i]) + cfg.lambda * u[i] + g[i];
    return out;
}

inline double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double xi : x) m = std::max(m, std::abs(xi));
    return m;
}

} // namespace detail

/// One theta-step together with the per-step quantities the diagnostics need.
struct StepOutcome {
    SimState next;
    Field reaction_theta; ///< theta beta(u+) + (1 - theta) beta(u)
    Field u_theta;
    Field v_theta;        ///< (u+ - u) / dt
    Field g_theta;
    int iterations = 0;
    double residual = 0.0;
};

/// Advances `state` by cfg.dt. `step_index` only labels errors.
inline StepOutcome advance(const SimState& state, const SimConfig& cfg, std::size_t step_index = 0) {
    const Grid& grid = cfg.grid;
    const std::size_t n = grid.size();
    grid.check(state.u);
    grid.check(state.v);
    const double dt = cfg.dt;
    const double th = cfg.theta;
    const double c = dt * th;
    const double t_next = state.t + dt;

    const Field g_old = cfg.forcing.at(grid, state.t);
    const Field g_new = cfg.forcing.at(grid, t_next);
    const Field F_old = detail::rhs_F(cfg, state.u, state.v, g_old);

    Field base(n); // u + dt (1 - theta) v
    for (std::size_t i = 0; i < n; ++i) base[i] = state.u[i] + dt * (1.0 - th) * state.v[i];

    auto velocity = [&](std::span<const double> up) {
        Field vp(n);
        for (std::size_t i = 0; i < n; ++i) vp[i] = (up[i] - base[i]) / c;
        return vp;
    };
    // R(u+) = v+ - v - c F(u+, v+) - dt (1 - theta) F_old, in velocity units
    auto residual = [&](std::span<const double> up) {
        const Field vp = velocity(up);
        const Field Fn = detail::rhs_F(cfg, up, vp, g_new);
        Field r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = vp[i] - state.v[i] - c * Fn[i] - dt * (1.0 - th) * F_old[i];
        return r;
    };
    auto norm2 = [](std::span<const double> r) {
        double s = 0.0;
        for (double x : r) s += x * x;
        return std::sqrt(s);
    };

    const Tridiagonal A = laplacian_matrix(grid);
    Field up(n);
    for (std::size_t i = 0; i < n; ++i) up[i] = state.u[i] + dt * state.v[i];
    Field r = residual(up);
    double rnorm = norm2(r);
    int it = 0;
    auto converged = [&](std::span<const double> res, std::span<const double> upc) {
        const double scale = 1.0 + detail::max_abs(velocity(upc));
        return detail::max_abs(res) <= cfg.newton.tol * scale;
    };
    if (!std::isfinite(rnorm)) throw NewtonDiverged(step_index, 0, rnorm);
    while (!converged(r, up)) {
        if (it >= cfg.newton.max_iter) throw StepRejected(step_index, detail::max_abs(r));
        ++it;
        // scaled Jacobian c dR/du+ = I + c (1 + c) A + c^2 (beta' - lambda)
        Tridiagonal J(n);
        for (std::size_t i = 0; i < n; ++i) {
            J.lower[i] = c * (1.0 + c) * A.lower[i];
            J.upper[i] = c * (1.0 + c) * A.upper[i];
            J.diag[i] = 1.0 + c * (1.0 + c) * A.diag[i] + c * c * (cfg.reaction.slope(up[i]) - cfg.lambda);
        }
        Field rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -c * r[i];
        Field delta;
        try {
            delta = solve_tridiagonal(J, rhs);
        } catch (const SingularSystem&) {
            throw NewtonDiverged(step_index, it, rnorm);
        }
        // backtracking on ||R||; a semismooth step may overshoot a kink
        double alpha = 1.0;
        Field trial(n);
        Field r_trial;
        double trial_norm = 0.0;
        bool decreased = false;
        for (int ls = 0; ls < 30; ++ls) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = up[i] + alpha * delta[i];
            r_trial = residual(trial);
            trial_norm = norm2(r_trial);
            if (std::isfinite(trial_norm) && trial_norm < rnorm) {
                decreased = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!decreased) {
            if (!std::isfinite(trial_norm)) throw NewtonDiverged(step_index, it, trial_norm);
            // stagnation at round-off level
            const double scale = 1.0 + detail::max_abs(velocity(up));
            if (detail::max_abs(r) <= 100.0 * cfg.newton.tol * scale) break;
            throw StepRejected(step_index, detail::max_abs(r));
        }
        up = std::move(trial);
        r = std::move(r_trial);
        rnorm = trial_norm;
    }

    StepOutcome out;
    out.next.t = t_next;
    out.next.v = velocity(up);
    out.reaction_theta.resize(n);
    out.u_theta.resize(n);
    out.v_theta.resize(n);
    out.g_theta.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.reaction_theta[i] = th * cfg.reaction(up[i]) + (1.0 - th) * cfg.reaction(state.u[i]);
        out.u_theta[i] = th * up[i] + (1.0 - th) * state.u[i];
        out.v_theta[i] = (up[i] - state.u[i]) / dt;
        out.g_theta[i] = th * g_new[i] + (1.0 - th) * g_old[i];
    }
    out.next.u = std::move(up);
    out.iterations = it;
    out.residual = detail::max_abs(r);
    return out;
}

/// Single theta-step of the regularized equation.
inline SimState step(const SimState& state, const SimConfig& cfg) { return advance(state, cfg).next; }

/// Runs the scheme from t = 0 to T, recording states every `output_every`
/// steps together with the reaction and energy bookkeeping.
inline Trajectory simulate(const SimConfig& cfg) {
    cfg.validate();
    const Grid& grid = cfg.grid;
    const std::size_t n = grid.size();
    const std::size_t n_steps = cfg.n_steps();

    Trajectory traj{.config = cfg};
    if (cfg.init_regularization > 0.0)
        traj.config.u0 = regularize_initial(grid, cfg.u0, cfg.init_regularization);
    const double layer = std::sqrt(cfg.reaction.compliance());
    if (cfg.dt > layer / 10.0)
        traj.warnings.push_back("dt exceeds sqrt(compliance)/10; boundary layers are under-resolved");

    const std::size_t n_out = n_steps / cfg.output_every + 2;
    traj.u = Series(n);
    traj.v = Series(n);
    traj.reaction = Series(n);
    traj.reaction_u = Series(n);
    for (Series* s : {&traj.u, &traj.v, &traj.reaction, &traj.reaction_u}) s->reserve(n_out);

    SimState state{0.0, traj.config.u0, cfg.u1};
    const Field zeros(n, 0.0);
    traj.times.push_back(0.0);
    traj.u.push(state.u);
    traj.v.push(state.v);
    traj.reaction.push(zeros);
    traj.reaction_u.push(zeros);
    traj.dissipation_cum.push_back(0.0);
    traj.work_cum.push_back(0.0);
    traj.bv_cum.push_back(0.0);
    traj.reaction_pairing_cum.push_back(0.0);
    traj.newton_iterations.push_back(0);

    double diss = 0.0, work = 0.0, bv = 0.0, pairing = 0.0;
    Field acc_reaction(n, 0.0), acc_reaction_u(n, 0.0);
    double acc_time = 0.0;
    int acc_iters = 0;

    for (std::size_t k = 1; k <= n_steps; ++k) {
        StepOutcome s = advance(state, cfg, k);
        s.next.t = static_cast<double>(k) * cfg.dt; // no accumulated drift
        const Field Avt = apply_A(grid, s.v_theta);
        diss += cfg.dt * inner(grid, Avt, s.v_theta);
        work += cfg.dt * inner(grid, s.g_theta, s.v_theta);
        pairing += cfg.dt * inner(grid, s.reaction_theta, s.u_theta);
        Field dv(n);
        for (std::size_t i = 0; i < n; ++i) dv[i] = s.next.v[i] - state.v[i];
        bv += l1_norm(grid, dv);
        for (std::size_t i = 0; i < n; ++i) {
            acc_reaction[i] += cfg.dt * s.reaction_theta[i];
            acc_reaction_u[i] += cfg.dt * s.reaction_theta[i] * s.u_theta[i];
        }
        acc_time += cfg.dt;
        acc_iters += s.iterations;

        traj.newton.steps += 1;
        traj.newton.total_iterations += static_cast<std::size_t>(s.iterations);
        traj.newton.max_iterations = std::max(traj.newton.max_iterations, s.iterations);
        traj.newton.max_residual = std::max(traj.newton.max_residual, s.residual);

        state = std::move(s.next);
        if (k % cfg.output_every == 0 || k == n_steps) {
            traj.times.push_back(state.t);
            traj.u.push(state.u);
            traj.v.push(state.v);
            for (std::size_t i = 0; i < n; ++i) {
                acc_reaction[i] /= acc_time;
                acc_reaction_u[i] /= acc_time;
            }
            traj.reaction.push(acc_reaction);
            traj.reaction_u.push(acc_reaction_u);
            traj.dissipation_cum.push_back(diss);
            traj.work_cum.push_back(work);
            traj.bv_cum.push_back(bv);
            traj.reaction_pairing_cum.push_back(pairing);
            traj.newton_iterations.push_back(acc_iters);
            std::fill(acc_reaction.begin(), acc_reaction.end(), 0.0);
            std::fill(acc_reaction_u.begin(), acc_reaction_u.end(), 0.0);
            acc_time = 0.0;
            acc_iters = 0;
        }
    }
    return traj;
}

} // namespace sdw
