#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "sdw/energy.hpp"
#include "sdw/integrator.hpp"
#include "sdw/toy_oracle.hpp"

using namespace sdw;

namespace {

Reaction indicator(double eps) { return Reaction::yosida_of(RegularizedPotential(MonotoneGraph::indicator(), eps)); }

SimConfig toy(double eps, double T, double theta = 0.5) {
    SimConfig c{.grid = Grid::single_node(), .reaction = indicator(eps)};
    c.T = T;
    c.dt = std::sqrt(eps) / 100.0;
    c.theta = theta;
    c.u0 = {0.0};
    c.u1 = {1.0};
    return c;
}

SimConfig dirichlet_sine(double eps, double dt, std::size_t n_nodes = 65) {
    const Grid g(1.0, n_nodes, BoundaryCondition::Dirichlet);
    SimConfig c{.grid = g, .reaction = indicator(eps)};
    c.T = 1.0;
    c.dt = dt;
    c.theta = 1.0;
    c.u0 = Profile::parse("sine:1:0.5").sample(g);
    c.u1 = Field(g.size(), 0.0);
    return c;
}

} // namespace

TEST(Step, RestIsFixedPoint) {
    for (auto r : {indicator(0.1), Reaction::yosida_of(RegularizedPotential(MonotoneGraph::logarithmic(), 0.1)),
                   Reaction::family(0.5, 0.1)}) {
        const Grid g(1.0, 9, BoundaryCondition::Neumann);
        SimConfig c{.grid = g, .reaction = r};
        c.dt = 0.01;
        c.u0 = c.u1 = Field(g.size(), 0.0);
        const SimState s = step({0.0, c.u0, c.u1}, c);
        for (double x : s.u) EXPECT_EQ(x, 0.0);
        for (double x : s.v) EXPECT_EQ(x, 0.0);
        EXPECT_NEAR(s.t, 0.01, 1e-15);
    }
}

TEST(Step, FreeFlightInsideDeadZone) {
    for (double theta : {0.5, 0.75, 1.0}) {
        SimConfig c{.grid = Grid::single_node(), .reaction = Reaction::family(1.0, 0.1)};
        c.dt = 0.1;
        c.theta = theta;
        c.u0 = {0.5};
        c.u1 = {1.0};
        const SimState s = step({0.0, {0.5}, {1.0}}, c);
        EXPECT_NEAR(s.u[0], 0.6, 1e-14);
        EXPECT_NEAR(s.v[0], 1.0, 1e-14);
    }
}

TEST(Step, DimensionMismatch) {
    SimConfig c = dirichlet_sine(1e-3, 1e-3);
    EXPECT_THROW(step({0.0, Field(3, 0.0), Field(3, 0.0)}, c), DimensionMismatch);
}

TEST(Step, RejectedWhenNewtonBudgetExhausted) {
    const Grid g(1.0, 9, BoundaryCondition::Neumann);
    SimConfig c{.grid = g, .reaction = Reaction::yosida_of(RegularizedPotential(MonotoneGraph::logarithmic(), 1e-2))};
    c.dt = 0.1;
    c.newton.max_iter = 1;
    c.newton.tol = 1e-15;
    c.u0 = Field(g.size(), 0.9);
    c.u1 = Field(g.size(), 3.0);
    EXPECT_THROW(advance({0.0, c.u0, c.u1}, c, 17), StepRejected);
}

TEST(Step, DivergesOnNonFiniteForcing) {
    const Grid g = Grid::single_node();
    SimConfig c{.grid = g, .reaction = indicator(1e-3)};
    c.dt = 0.01;
    c.u0 = {0.0};
    c.u1 = {0.0};
    Series vals(1);
    vals.push(Field{std::numeric_limits<double>::quiet_NaN()});
    c.forcing = Forcing::table({0.0}, vals);
    EXPECT_THROW(advance({0.0, c.u0, c.u1}, c, 1), NewtonDiverged);
}

TEST(Simulate, ZeroDataStaysZero) {
    const Grid g(1.0, 17, BoundaryCondition::Dirichlet);
    SimConfig c{.grid = g, .reaction = indicator(1e-3)};
    c.T = 0.1;
    c.dt = 1e-3;
    c.u0 = c.u1 = Field(g.size(), 0.0);
    const Trajectory t = simulate(c);
    EXPECT_EQ(t.size(), 101u);
    for (std::size_t k = 0; k < t.size(); ++k)
        for (std::size_t i = 0; i < g.size(); ++i) {
            EXPECT_EQ(t.u.row(k)[i], 0.0);
            EXPECT_EQ(t.v.row(k)[i], 0.0);
        }
    EXPECT_EQ(t.dissipation_cum.back(), 0.0);
}

TEST(Simulate, ToyFreeFlightBeforeContact) {
    const Trajectory t = simulate(toy(1e-6, 0.9));
    EXPECT_NEAR(t.u.row(t.size() - 1)[0], 0.9, 1e-6);
    EXPECT_NEAR(t.v.row(t.size() - 1)[0], 1.0, 1e-6);
    EXPECT_NEAR(t.times.back(), 0.9, 1e-12);
}

TEST(Simulate, ToyReboundVelocity) {
    const Trajectory t = simulate(toy(1e-6, 1.5));
    EXPECT_NEAR(t.v.row(t.size() - 1)[0], -1.0, 1e-3);
}

// Integrator agreement with the closed-form layer within 5 dt before exit.
TEST(Simulate, ToyMatchesLayerOracle) {
    for (double eps : {1e-4, 1e-6}) {
        const double T = 1.0 + std::numbers::pi * std::sqrt(eps) + 0.5;
        SimConfig c = toy(eps, T);
        const Trajectory t = simulate(c);
        double eu = 0.0, ev = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) {
            const PhasePoint o = yosida_layer_toy(eps, t.times[k]);
            eu = std::max(eu, std::abs(t.u.row(k)[0] - o.u));
            ev = std::max(ev, std::abs(t.v.row(k)[0] - o.v));
        }
        EXPECT_LE(eu, 5.0 * c.dt) << "eps=" << eps;
        EXPECT_LE(ev, 5.0 * c.dt) << "eps=" << eps;
    }
}

// Trapezoidal scheme in the smooth regime: a logarithmic potential never
// produces a layer, so j_eps(u) + v^2/2 is conserved to high accuracy.
TEST(Simulate, ToyConservationTrapezoidal) {
    SimConfig c{.grid = Grid::single_node(),
                .reaction = Reaction::yosida_of(RegularizedPotential(MonotoneGraph::logarithmic(), 0.1))};
    c.T = 10.0;
    c.dt = 1e-4;
    c.theta = 0.5;
    c.u0 = {0.0};
    c.u1 = {1.0};
    c.output_every = 100;
    const Trajectory t = simulate(c);
    const double e0 = energy_at(t, 0).total;
    double drift = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) drift = std::max(drift, std::abs(energy_at(t, k).total - e0));
    EXPECT_LE(drift / e0, 1e-6);
}

TEST(Simulate, DirichletEnergyDecays) {
    const Trajectory t = simulate(dirichlet_sine(1e-3, 1e-3));
    const auto e = energy_series(t);
    EXPECT_LT(e.back().total, e.front().total);
    for (std::size_t k = 1; k < e.size(); ++k) EXPECT_LE(e[k].total, e[k - 1].total + 1e-12);
}

TEST(Simulate, Deterministic) {
    SimConfig c = dirichlet_sine(1e-4, 1e-3);
    c.u1 = Profile::parse("sine:1:8").sample(c.grid);
    const Trajectory a = simulate(c), b = simulate(c);
    EXPECT_TRUE(a.u == b.u);
    EXPECT_TRUE(a.v == b.v);
    EXPECT_TRUE(a.reaction == b.reaction);
    EXPECT_EQ(a.dissipation_cum, b.dissipation_cum);
}

TEST(Simulate, OutputStrideAndRecords) {
    SimConfig c = toy(1e-4, 2.0);
    c.output_every = 7;
    const Trajectory t = simulate(c);
    EXPECT_EQ(t.times.front(), 0.0);
    EXPECT_NEAR(t.times.back(), 2.0, 1e-12);
    for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GT(t.times[k], t.times[k - 1]);
    EXPECT_EQ(t.reaction.rows(), t.size());
    EXPECT_EQ(t.u.row(0)[0], 0.0);
    EXPECT_EQ(t.v.row(0)[0], 1.0);
    EXPECT_EQ(t.newton.steps, c.n_steps());
    EXPECT_EQ(t.index_of(t.times[3]), 3u);
    EXPECT_THROW((void)t.index_of(0.5 * (t.times[3] + t.times[4])), TimeNotOnGrid);
}

TEST(Simulate, WarnsOnUnresolvedLayer) {
    SimConfig c = toy(1e-4, 0.5);
    c.dt = 0.01;
    EXPECT_FALSE(simulate(c).warnings.empty());
    EXPECT_TRUE(simulate(toy(1e-4, 0.5)).warnings.empty());
}

TEST(Simulate, OvershootBoundHolds) {
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        SimConfig c = dirichlet_sine(eps, std::min(1e-3, std::sqrt(eps) / 10));
        c.u1 = Profile::parse("sine:1:8").sample(c.grid);
        const Trajectory t = simulate(c);
        double emax = 0.0, over = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) {
            emax = std::max(emax, energy_at(t, k).total);
            for (double u : t.u.row(k)) over = std::max(over, std::abs(u) - 1.0);
        }
        EXPECT_LE(over, std::sqrt(2.0 * eps * emax) + 2.0 * c.dt) << "eps=" << eps;
    }
}

TEST(SimConfig, ValidationNamesKey) {
    auto expect_key = [](SimConfig c, const std::string& key) {
        try {
            c.validate();
            FAIL() << "expected ConfigError for " << key;
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.key, key);
        }
    };
    const SimConfig base = toy(1e-4, 1.0);
    SimConfig c = base;
    c.dt = 0.0;
    expect_key(c, "time.dt");
    c = base;
    c.dt = 2.0;
    expect_key(c, "time.dt");
    c = base;
    c.T = -1.0;
    expect_key(c, "time.T");
    c = base;
    c.theta = 0.3;
    expect_key(c, "time.theta");
    c = base;
    c.lambda = -1.0;
    expect_key(c, "model.lambda");
    c = base;
    c.u1 = {1.0, 2.0};
    expect_key(c, "init.u1");
}

TEST(Forcing, TableInterpolatesInTime) {
    const Grid g = Grid::single_node();
    Series s(1);
    s.push(Field{0.0});
    s.push(Field{2.0});
    const Forcing f = Forcing::table({0.0, 1.0}, s);
    EXPECT_NEAR(f.at(g, 0.25)[0], 0.5, 1e-15);
    EXPECT_EQ(f.at(g, -1.0)[0], 0.0);
    EXPECT_EQ(f.at(g, 5.0)[0], 2.0);
    EXPECT_EQ(Forcing::constant(2.0).at(g, 0.3)[0], 2.0);
    EXPECT_THROW(Forcing::table({1.0, 0.0}, s), std::invalid_argument);
}

// Constant forcing on a single node: u = t^2 g / 2 exactly for the
// trapezoidal scheme (quadratic solutions are reproduced).
TEST(Simulate, ConstantForcingQuadratic) {
    SimConfig c{.grid = Grid::single_node(), .reaction = Reaction::family(1.0, 0.1)};
    c.T = 0.5;
    c.dt = 0.01;
    c.theta = 0.5;
    c.u0 = {0.0};
    c.u1 = {0.0};
    c.forcing = Forcing::constant(2.0);
    const Trajectory t = simulate(c);
    for (std::size_t k = 0; k < t.size(); ++k) {
        EXPECT_NEAR(t.u.row(k)[0], t.times[k] * t.times[k], 1e-12);
        EXPECT_NEAR(t.v.row(k)[0], 2.0 * t.times[k], 1e-12);
    }
}
