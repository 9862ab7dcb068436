#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sdw/experiments.hpp"
#include "sdw/toy_oracle.hpp"

using namespace sdw;

namespace {

SimConfig toy_base(double T = 2.0) {
    SimConfig c{.grid = Grid::single_node(), .reaction = Reaction::family(0.5, 0.1)};
    c.T = T;
    c.dt = 1e-3;
    c.theta = 0.5;
    c.u0 = {0.0};
    c.u1 = {1.0};
    return c;
}

const std::vector<double> kToyEps{1e-2, 1e-3, 1e-4};

} // namespace

TEST(ConfigFor, DtRuleAndWholeSteps) {
    SimConfig base = toy_base(1.0);
    const RegularizationFamily ind{};
    const DtPolicy pol{.dt_base = 1e-3, .layer_fraction = 0.1};
    EXPECT_DOUBLE_EQ(config_for(base, ind, 1e-2, pol).dt, 1e-3);
    const SimConfig fine = config_for(base, ind, 1e-6, pol);
    EXPECT_NEAR(fine.dt, 1e-4, 1e-16);
    base.T = 1.0005;
    const SimConfig odd = config_for(base, ind, 1e-2, pol);
    const double steps = odd.T / odd.dt;
    EXPECT_NEAR(steps, std::round(steps), 1e-9);
    EXPECT_LE(odd.dt, 1e-3);
}

TEST(ConfigFor, FamilyThreshold) {
    const RegularizationFamily fam{.kind = GraphKind::PiecewiseLinearFamily, .pi_fraction = 1.0 / 3.0};
    const Reaction r = fam.at(0.01);
    EXPECT_TRUE(r.is_direct_family());
    EXPECT_NEAR(r.graph().r_threshold(), 1.0 - 0.01 * std::numbers::pi / 3.0, 1e-15);
    EXPECT_NEAR(r.compliance(), 1e-4, 1e-18);
}

TEST(BoundRatio, Examples) {
    const std::vector<double> zeros{0.0, 0.0, 0.0}, mixed{0.0, 1.0}, plain{1.0, 4.0, 2.0};
    EXPECT_EQ(bound_ratio(zeros), 1.0);
    EXPECT_TRUE(std::isinf(bound_ratio(mixed)));
    EXPECT_EQ(bound_ratio(plain), 4.0);
}

TEST(Sweep, ZeroDataHasZeroDifferences) {
    const Grid g(1.0, 17, BoundaryCondition::Dirichlet);
    SimConfig base{.grid = g, .reaction = Reaction::family(0.5, 0.1)};
    base.T = 0.2;
    base.u0 = base.u1 = Field(g.size(), 0.0);
    const auto rep = epsilon_sweep(base, RegularizationFamily{}, kToyEps, DtPolicy{});
    for (const auto& d : rep.to_finest) {
        EXPECT_EQ(d.linf_H, 0.0);
        EXPECT_EQ(d.l2_V, 0.0);
    }
    for (double m : rep.mu) EXPECT_EQ(m, 0.0);
    EXPECT_TRUE(rep.all_bounds_pass);
    for (const auto& b : rep.bounds) EXPECT_EQ(b.ratio, 1.0) << b.name;
}

TEST(Sweep, ToyDifferencesMatchLayerOracleAndDecrease) {
    const auto rep = epsilon_sweep(toy_base(), RegularizationFamily{}, kToyEps, DtPolicy{});
    ASSERT_EQ(rep.trajectories.size(), 3u);
    EXPECT_TRUE(rep.differences_decreasing);
    EXPECT_GT(rep.to_finest[0].linf_H, rep.to_finest[1].linf_H);
    EXPECT_EQ(rep.to_finest[2].linf_H, 0.0);
    // independent: the same distance between closed-form layer solutions
    const auto& ref = rep.trajectories.back();
    for (std::size_t k = 0; k + 1 < kToyEps.size(); ++k) {
        double exact = 0.0;
        for (double t : ref.times)
            exact = std::max(exact, std::abs(yosida_layer_toy(kToyEps[k], t).u - yosida_layer_toy(kToyEps.back(), t).u));
        EXPECT_NEAR(rep.to_finest[k].linf_H, exact, 10.0 * rep.runs[k].dt) << "eps=" << kToyEps[k];
    }
    EXPECT_TRUE(rep.all_bounds_pass);
    for (const auto& b : rep.bounds) EXPECT_LE(b.ratio, 10.0) << b.name;
    // overshoot of the layer is sqrt(eps) (energy 1/2 = (u-1)^2 / (2 eps))
    for (std::size_t k = 0; k < kToyEps.size(); ++k)
        EXPECT_NEAR(rep.runs[k].overshoot, std::sqrt(kToyEps[k]), 5.0 * rep.runs[k].dt);
}

TEST(Sweep, ValidatesEpsilonList) {
    const std::vector<double> two{1e-2, 1e-3}, flat{1e-2, 1e-2, 1e-3}, up{1e-4, 1e-3, 1e-2};
    EXPECT_THROW(epsilon_sweep(toy_base(), RegularizationFamily{}, two, DtPolicy{}), ConfigError);
    EXPECT_THROW(epsilon_sweep(toy_base(), RegularizationFamily{}, flat, DtPolicy{}), ConfigError);
    try {
        epsilon_sweep(toy_base(), RegularizationFamily{}, up, DtPolicy{});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key, "sweep.eps");
    }
}

TEST(Sweep, Deterministic) {
    const auto a = epsilon_sweep(toy_base(0.5), RegularizationFamily{}, kToyEps, DtPolicy{});
    const auto b = epsilon_sweep(toy_base(0.5), RegularizationFamily{}, kToyEps, DtPolicy{});
    for (std::size_t k = 0; k < kToyEps.size(); ++k) {
        EXPECT_EQ(a.runs[k].sup_velocity, b.runs[k].sup_velocity);
        EXPECT_EQ(a.runs[k].reaction_pairing, b.runs[k].reaction_pairing);
        EXPECT_EQ(a.to_finest[k].l2_V, b.to_finest[k].l2_V);
    }
}

TEST(DaRegularity, SkippedOutsideDomain) {
    const Grid g(1.0, 33, BoundaryCondition::Dirichlet);
    SimConfig base{.grid = g, .reaction = Reaction::family(0.5, 0.1)};
    base.T = 0.1;
    base.u0 = Profile::parse("ramp:0.5").sample(g);
    base.u1 = Field(g.size(), 0.0);
    base.u0_in_domain_of_A = false;
    const auto rep = da_regularity_check(base, RegularizationFamily{}, kToyEps, DtPolicy{});
    EXPECT_TRUE(rep.skipped);
    EXPECT_EQ(rep.diagnostic, "u0 not in D(A)");
    EXPECT_TRUE(rep.sup_Au.empty());
}

TEST(DaRegularity, BoundedForSmoothData) {
    const Grid g(1.0, 33, BoundaryCondition::Dirichlet);
    SimConfig base{.grid = g, .reaction = Reaction::family(0.5, 0.1)};
    base.T = 0.5;
    base.theta = 1.0;
    base.u0 = Profile::parse("sine:1:0.5").sample(g);
    base.u1 = Profile::parse("sine:1:3").sample(g);
    base.u0_in_domain_of_A = true;
    const auto rep = da_regularity_check(base, RegularizationFamily{}, kToyEps, DtPolicy{});
    EXPECT_FALSE(rep.skipped);
    ASSERT_EQ(rep.sup_Au.size(), 3u);
    EXPECT_TRUE(rep.pass) << rep.ratio;
}

TEST(LimsupAudit, ToyPairingConverges) {
    const auto rep = epsilon_sweep(toy_base(), RegularizationFamily{}, kToyEps, DtPolicy{});
    const auto audit = limsup_identity_audit(rep);
    // limit: int u dxi = 1 * (atom of mass 2)
    EXPECT_NEAR(audit.finest_pairing, 2.0, 0.05);
    EXPECT_TRUE(audit.pass) << audit.relative_gap;
    EXPECT_TRUE(audit.converging);
    EXPECT_NEAR(audit.limit, 2.0, 5.0 * rep.runs.back().dt);
    ASSERT_EQ(audit.sequence.size(), 3u);
    // <<beta_eps(u), u>> exceeds the limit by the layer term pi sqrt(eps) / 2
    for (std::size_t k = 0; k < 3; ++k)
        EXPECT_NEAR(audit.sequence[k] - 2.0, std::numbers::pi * std::sqrt(kToyEps[k]) / 2.0, 10.0 * rep.runs[k].dt);
}

// Property: the pairing sequence converges to int u dxi once the sweep reaches
// the asymptotic range (the 1D sine run is pre-asymptotic above eps ~ 1e-5).
TEST(LimsupAudit, DirichletSequenceConvergesDeepInTheSweep) {
    const Grid g(1.0, 65, BoundaryCondition::Dirichlet);
    SimConfig base{.grid = g, .reaction = Reaction::family(0.5, 0.1)};
    base.T = 1.0;
    base.theta = 1.0;
    base.u0 = Profile::parse("sine:1:0.5").sample(g);
    base.u1 = Profile::parse("sine:1:8").sample(g);
    base.u0_in_domain_of_A = true;
    const std::vector<double> eps{1e-5, 1e-6, 1e-7};
    const auto rep = epsilon_sweep(base, RegularizationFamily{}, eps, DtPolicy{});
    const auto audit = limsup_identity_audit(rep);
    EXPECT_TRUE(audit.converging);
    EXPECT_LE(audit.limit_gap, 0.02);
    EXPECT_TRUE(audit.pass) << audit.relative_gap;
    EXPECT_GT(audit.finest_pairing, 0.0);
}

TEST(LimsupAudit, ZeroDataAllZero) {
    const Grid g(1.0, 17, BoundaryCondition::Dirichlet);
    SimConfig base{.grid = g, .reaction = Reaction::family(0.5, 0.1)};
    base.T = 0.2;
    base.u0 = base.u1 = Field(g.size(), 0.0);
    const auto audit = limsup_identity_audit(epsilon_sweep(base, RegularizationFamily{}, kToyEps, DtPolicy{}));
    for (double s : audit.sequence) EXPECT_EQ(s, 0.0);
    EXPECT_EQ(audit.finest_pairing, 0.0);
    EXPECT_TRUE(audit.pass);
}

TEST(LimsupAudit, AitkenExamples) {
    // geometric sequence 2 + q^k converges to 2 exactly under Aitken
    const std::vector<double> geo{3.0, 2.5, 2.25}, flat{1.0, 1.0, 1.0}, diverging{1.0, 2.0, 4.0};
    EXPECT_NEAR(aitken_limit(geo), 2.0, 1e-14);
    EXPECT_EQ(aitken_limit(flat), 1.0);
    EXPECT_EQ(aitken_limit(diverging), 4.0);
}

TEST(TrajectoryDistance, SelfIsZeroAndInterpolationIsLinear) {
    const auto rep = epsilon_sweep(toy_base(0.5), RegularizationFamily{}, kToyEps, DtPolicy{});
    const auto& t = rep.trajectories[0];
    EXPECT_EQ(trajectory_distance(t, t).linf_H, 0.0);
    // free flight before contact: u(t) = t exactly, also between output times
    EXPECT_NEAR(interpolate_u(t, 0.2345)[0], 0.2345, 1e-12);
}
