#include "gapfield/error.hpp"
#include "gapfield/geometry.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace gapfield;

namespace {

GapGeometry quadratic(double eps) {
    GapGeometry g;
    g.epsilon = eps;
    return g;
}

bool check_failed(const ValidationReport& rep, const std::string& name) {
    for (const auto& c : rep.checks)
        if (c.name == name) return !c.passed;
    return false;
}

}  // namespace

TEST(Delta, Examples) {
    const GapGeometry g = quadratic(0.01);
    EXPECT_DOUBLE_EQ(delta(g, 0.0), 0.01);
    EXPECT_NEAR(delta(g, 0.1), 0.02, 1e-15);

    GapGeometry h = quadratic(1e-4);
    h.f = RadialProfile({2.0});
    h.g = RadialProfile({-1.0});
    h.kappa = 1.0 / 3.0;
    EXPECT_NEAR(delta(h, 0.05), 7.6e-3, 1e-15);
}

TEST(Delta, VectorArgumentMatchesRadius) {
    const GapGeometry g = quadratic(0.01);
    Eigen::VectorXd z(2);
    z << 0.06, -0.08;
    EXPECT_NEAR(delta(g, z), delta(g, 0.1), 1e-15);
    EXPECT_NEAR(eta(g, z), 0.02, 1e-15);
}

TEST(Delta, OutsidePatchIsDomainError) {
    const GapGeometry g = quadratic(0.01);
    EXPECT_THROW(delta(g, 2.0 * g.R + 1e-9), DomainError);
    EXPECT_THROW(eta(g, 1.0), DomainError);
    EXPECT_NO_THROW(delta(g, 2.0 * g.R));
}

TEST(Eta, Examples) {
    const GapGeometry g = quadratic(0.01);
    EXPECT_DOUBLE_EQ(eta(g, 0.0), 0.01);
    EXPECT_NEAR(eta(g, 0.1), 0.02, 1e-15);
}

TEST(Eta, ComparableToDeltaForHalfCurvature) {
    GapGeometry g = quadratic(1e-3);
    g.f = RadialProfile({0.5});
    g.kappa = 0.5;
    for (int k = 0; k <= 10000; ++k) {
        const double r = 2.0 * g.R * k / 10000;
        const double ratio = delta(g, r) / eta(g, r);
        EXPECT_GE(ratio, 0.5);
        EXPECT_LE(ratio, 1.0);
    }
}

TEST(Validate, Examples) {
    EXPECT_TRUE(validate(quadratic(1e-3)).passed());

    GapGeometry flat = quadratic(1e-3);
    flat.f = RadialProfile({0.0});
    const ValidationReport a = validate(flat);
    EXPECT_FALSE(a.passed());
    EXPECT_TRUE(check_failed(a, "hessian"));

    GapGeometry crossed = quadratic(1e-3);
    crossed.g = RadialProfile({2.0});
    crossed.kappa = 0.5;
    const ValidationReport b = validate(crossed);
    EXPECT_FALSE(b.passed());
    EXPECT_TRUE(check_failed(b, "f>=g"));
    EXPECT_FALSE(b.failures().empty());
}

TEST(Validate, RejectsZeroGapAndBadKappa) {
    EXPECT_FALSE(validate(quadratic(0.0)).passed());
    GapGeometry g = quadratic(1e-3);
    g.kappa = 1.5;
    EXPECT_FALSE(validate(g).passed());
    g.kappa = 0.9;  // f - g = |x'|^2 violates nothing with kappa < 1
    EXPECT_TRUE(validate(g).passed());
    g.f = RadialProfile({0.5});  // now below kappa |x'|^2
    EXPECT_TRUE(check_failed(validate(g), "kappa-lower"));
}

TEST(Validate, ReportsWorstSample) {
    GapGeometry g = quadratic(1e-3);
    g.f = RadialProfile({1.0, -20.0});  // f - g turns negative for |x'|^2 > 1/20
    g.kappa = 0.1;
    const ValidationReport rep = validate(g);
    ASSERT_FALSE(rep.passed());
    for (const auto& c : rep.checks)
        if (c.name == "f>=g") {
            EXPECT_FALSE(c.passed);
            EXPECT_NEAR(c.worst_radius, 2.0 * g.R, 1e-12);
            EXPECT_GT(c.worst_violation, 0.0);
        }
}

TEST(Profile, VanishesToFirstOrderAtOrigin) {
    const RadialProfile p({1.5, -0.3, 2.0});
    EXPECT_EQ(p.value(0.0), 0.0);
    EXPECT_EQ(p.derivative(0.0), 0.0);
    EXPECT_DOUBLE_EQ(p.second_derivative(0.0), 3.0);
    // Laplacian of 1.5 r^2 in R^m is 3m at the origin.
    EXPECT_NEAR(p.laplacian(0.0, 2), 6.0, 1e-12);
    EXPECT_NEAR(p.laplacian(1e-9, 3), 9.0, 1e-6);
}

TEST(Profile, DerivativesMatchFiniteDifferences) {
    const RadialProfile p({0.7, 1.3, -0.4});
    for (double r : {0.05, 0.1, 0.3}) {
        const double h = 1e-6;
        EXPECT_NEAR(p.derivative(r), (p.value(r + h) - p.value(r - h)) / (2 * h), 1e-8);
        EXPECT_NEAR(p.second_derivative(r), (p.derivative(r + h) - p.derivative(r - h)) / (2 * h), 1e-7);
    }
}

TEST(GeometryProperty, DeltaBracketedByEta) {
    const std::vector<std::pair<std::vector<double>, std::vector<double>>> profiles = {
        {{1.0}, {0.0}}, {{0.6}, {-0.2}}, {{0.5, 1.0}, {-0.1}}, {{2.0}, {0.0}}};
    for (const auto& [f, gcoef] : profiles)
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            GapGeometry g = quadratic(eps);
            g.f = RadialProfile(f);
            g.g = RadialProfile(gcoef);
            g.kappa = 0.4;
            ASSERT_TRUE(validate(g).passed());
            for (int k = 0; k <= 2000; ++k) {
                const double r = g.R * k / 2000;
                EXPECT_LE(g.kappa * eta(g, r), delta(g, r) * (1 + 1e-14));
                EXPECT_LE(delta(g, r), (1.0 + 1.0 / g.kappa) * eta(g, r) * (1 + 1e-14));
            }
        }
}

TEST(GeometryProperty, EtaComparableOnQuarterBalls) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const GapGeometry g = quadratic(eps);
        for (int k = 0; k < 20000; ++k) {
            Eigen::VectorXd z(2), y(2);
            z << unit(rng) * g.R, unit(rng) * g.R;
            if (z.norm() >= g.R) continue;
            Eigen::Vector2d d(unit(rng), unit(rng));
            if (d.norm() > 1.0 || d.norm() == 0.0) continue;
            y = z + 0.25 * std::sqrt(eta(g, z)) * d;
            const double ez = eta(g, z), ey = eta(g, y);
            EXPECT_LE(ey / 8.0, ez);
            EXPECT_LE(ez, 8.0 * ey);
        }
    }
}

TEST(LowerBoundPrerequisite, DeltaRatioAtQuarterRootEps) {
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const GapGeometry g = quadratic(eps);
        EXPECT_NEAR(delta(g, 0.25 * std::sqrt(eps)) / delta(g, 0.0), 1.0 + 1.0 / 16.0, 1e-13);
    }
}

TEST(Region, Checks) {
    const GapGeometry g = quadratic(1e-3);
    EXPECT_NO_THROW(check_region(Region::gap_patch(2.0 * g.R), g));
    EXPECT_THROW(check_region(Region::gap_patch(2.0 * g.R * 1.01), g), DomainError);
    EXPECT_THROW(check_region(Region::base_disk(0.0), g), DomainError);
    EXPECT_THROW(check_region(Region::flat_cylinder(-1.0), g), DomainError);

    const Region patch = Region::gap_patch(0.1, 0.02);
    EXPECT_TRUE(patch.contains_base(0.1, true));
    EXPECT_FALSE(patch.contains_base(-0.1, true));
    EXPECT_TRUE(patch.contains_base(-0.05, false));  // unsigned radius 0.05
    const Region outside = Region::outer_complement(0.1);
    EXPECT_FALSE(outside.contains_base(0.05, false));
    EXPECT_TRUE(outside.contains_base(0.15, false));
}

TEST(Closure, SurfacesMatchProfilesInsidePatch) {
    const GapGeometry g = quadratic(1e-3);
    for (double r : {0.0, 0.05, 0.1, 0.2}) {
        EXPECT_NEAR(g.inclusion_height(r), g.epsilon + g.f.value(r), 1e-14);
        EXPECT_NEAR(g.boundary_height(r), g.g.value(r), 1e-14);
        EXPECT_NEAR(g.closed_gap(r), delta(g, r), 1e-14);
    }
    // Beyond 2R the surfaces are the closing spheres.
    const double r = 0.45;
    const double ro = g.outer.outer_radius, ri = g.outer.inclusion_radius;
    EXPECT_NEAR(g.boundary_height(r), ro - std::sqrt(ro * ro - r * r), 1e-12);
    EXPECT_NEAR(g.inclusion_height(r), g.epsilon + ri - std::sqrt(ri * ri - r * r), 1e-12);
}
