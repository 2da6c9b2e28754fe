#include "gapfield/error.hpp"
#include "gapfield/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gapfield;

namespace {

GapGeometry quadratic(double eps, int n = 3) {
    GapGeometry g;
    g.n = n;
    g.epsilon = eps;
    return g;
}

// Consecutive gap-line positions with t >= 0, in grid order.
std::vector<double> gap_positions(const CurvilinearGrid& grid) {
    std::vector<double> t;
    for (int i = 0; i < grid.ni; ++i)
        if (grid.gap_line[i] && grid.lateral[i] >= 0.0) t.push_back(grid.lateral[i]);
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

TEST(Grid, TransverseSpacingAtContact) {
    const GapGeometry g = quadratic(1e-2);
    const CurvilinearGrid grid = build_grid(g, {});
    int checked = 0;
    for (int i = 0; i < grid.ni; ++i) {
        if (!grid.gap_line[i] || std::abs(grid.lateral[i]) > 1e-15) continue;
        for (int j = 0; j + 1 < grid.nj; ++j) {
            const double h = grid.z[grid.index(i, j + 1)] - grid.z[grid.index(i, j)];
            EXPECT_GT(h, 0.0);
            EXPECT_LE(h, g.epsilon / 16.0 * (1.0 + 1e-12));
        }
        ++checked;
    }
    EXPECT_GE(checked, 1);
}

TEST(Grid, AtLeastSixteenCellsAcrossTheGap) {
    for (int n : {2, 3}) {
        const GapGeometry g = quadratic(1e-3, n);
        const CurvilinearGrid grid = build_grid(g, {});
        EXPECT_GE(grid.nj, 17);
        for (int i = 0; i < grid.ni; ++i) {
            if (!grid.gap_line[i] || std::abs(grid.lateral[i]) > g.R) continue;
            const double top = grid.z[grid.index(i, grid.nj - 1)];
            const double bottom = grid.z[grid.index(i, 0)];
            EXPECT_NEAR(top - bottom, delta(g, std::abs(grid.lateral[i])), 1e-14);
        }
    }
}

TEST(Grid, LateralSpacingResolvesRootEps) {
    const GapGeometry g = quadratic(1e-4);
    const std::vector<double> t = gap_positions(build_grid(g, {}));
    ASSERT_GT(t.size(), 4u);
    EXPECT_EQ(t.front(), 0.0);
    bool quarter = false;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        if (t[k] < std::sqrt(g.epsilon)) EXPECT_LE(t[k + 1] - t[k], 2.5e-3 * (1 + 1e-12));
        if (std::abs(t[k] - 0.25 * std::sqrt(g.epsilon)) < 1e-15) quarter = true;
        EXPECT_LE(t[k + 1] - t[k], 0.025 * (1 + 1e-12));
    }
    EXPECT_TRUE(quarter);
    EXPECT_NEAR(t.back(), 2.0 * g.R, 1e-14);
}

TEST(Grid, SpacingCoarsensGeometrically) {
    const std::vector<double> t = gap_line_positions(quadratic(1e-4), {});
    for (std::size_t k = 2; k + 1 < t.size(); ++k) {
        const double ratio = (t[k + 1] - t[k]) / (t[k] - t[k - 1]);
        EXPECT_LE(ratio, 1.1 * (1 + 1e-9)) << "at t = " << t[k];
    }
}

TEST(Grid, Layouts) {
    const CurvilinearGrid planar = build_grid(quadratic(1e-3, 2), {});
    EXPECT_TRUE(planar.periodic);
    EXPECT_FALSE(planar.axis_ends);
    for (double w : planar.weight) EXPECT_EQ(w, 1.0);

    const CurvilinearGrid meridian = build_grid(quadratic(1e-3, 3), {});
    EXPECT_FALSE(meridian.periodic);
    EXPECT_TRUE(meridian.axis_ends);
    for (std::size_t k = 0; k < meridian.size(); ++k) {
        if (meridian.tags[k] & kAxis) {
            EXPECT_EQ(meridian.r[k], 0.0);
            EXPECT_EQ(meridian.weight[k], 0.0);
        } else {
            EXPECT_GT(meridian.weight[k], 0.0);
            EXPECT_NEAR(meridian.weight[k], meridian.r[k], 1e-15);
        }
    }
    const CurvilinearGrid four = build_grid(quadratic(1e-3, 4), {});
    for (std::size_t k = 0; k < four.size(); ++k) EXPECT_NEAR(four.weight[k], four.r[k] * four.r[k], 1e-15);
}

TEST(Grid, BoundaryTags) {
    const GapGeometry g = quadratic(1e-3);
    const CurvilinearGrid grid = build_grid(g, {});
    for (int i = 0; i < grid.ni; ++i) {
        EXPECT_TRUE(grid.tags[grid.index(i, 0)] & kOuter);
        EXPECT_TRUE(grid.tags[grid.index(i, grid.nj - 1)] & kInclusion);
        for (int j = 1; j + 1 < grid.nj; ++j) EXPECT_FALSE(grid.tags[grid.index(i, j)] & (kOuter | kInclusion));
        // Outer nodes lie on the closed outer boundary.
        const int k = grid.index(i, 0);
        const double ro = g.outer.outer_radius;
        const double sphere = std::hypot(grid.r[k], grid.z[k] - ro);
        if (std::abs(grid.r[k]) > 2 * g.R) EXPECT_NEAR(sphere, ro, 1e-12);
    }
}

TEST(Grid, NodeCountPrediction) {
    for (int n : {2, 3})
        for (double eps : {1e-2, 1e-4}) {
            const GapGeometry g = quadratic(eps, n);
            EXPECT_EQ(grid_node_count(g, {}), build_grid(g, {}).size());
        }
}

TEST(Grid, ResourceLimit) {
    const GapGeometry g = quadratic(1e-3);
    ResolutionPolicy p;
    p.max_unknowns = 100;
    try {
        build_grid(g, p);
        FAIL() << "expected ResourceError";
    } catch (const ResourceError& e) {
        EXPECT_EQ(e.required(), grid_node_count(g, {}));
    }
}

TEST(Grid, RejectsInvalidGeometry) {
    EXPECT_THROW(build_grid(quadratic(0.0), {}), DomainError);
    GapGeometry crossed = quadratic(1e-3);
    crossed.g = RadialProfile({2.0});
    EXPECT_THROW(build_grid(crossed, {}), DomainError);
    ResolutionPolicy bad;
    bad.n_gap = 1;
    EXPECT_THROW(build_grid(quadratic(1e-3), bad), InputError);
}

TEST(Grid, FixedLateralSpacing) {
    ResolutionPolicy p;
    p.fixed_lateral_spacing = 0.01;
    const std::vector<double> t = gap_positions(build_grid(quadratic(1e-4), p));
    for (std::size_t k = 0; k + 1 < t.size(); ++k) EXPECT_LE(t[k + 1] - t[k], 0.01 * (1 + 1e-12));
    EXPECT_LT(t.size(), gap_line_positions(quadratic(1e-4), {}).size());
}

TEST(Grid, GapPatch) {
    GapGeometry slab = quadratic(1e-3, 2);
    slab.f = RadialProfile({0.0});
    const CurvilinearGrid grid = build_gap_patch_grid(slab, {});
    for (int i = 0; i < grid.ni; ++i) EXPECT_TRUE(grid.gap_line[i]);
    EXPECT_NEAR(grid.lateral.front(), -2 * slab.R, 1e-15);
    EXPECT_NEAR(grid.lateral.back(), 2 * slab.R, 1e-15);
    for (double z : grid.z) {
        EXPECT_GE(z, 0.0);
        EXPECT_LE(z, slab.epsilon * (1 + 1e-15));
    }
}

TEST(Grid, Annulus) {
    const CurvilinearGrid grid = build_annulus_grid(0.5, 32, 5);
    EXPECT_EQ(grid.size(), 160u);
    for (int i = 0; i < grid.ni; ++i) {
        EXPECT_NEAR(std::hypot(grid.r[grid.index(i, 0)], grid.z[grid.index(i, 0)]), 1.0, 1e-15);
        EXPECT_NEAR(std::hypot(grid.r[grid.index(i, 4)], grid.z[grid.index(i, 4)]), 0.5, 1e-15);
    }
    EXPECT_THROW(build_annulus_grid(1.5, 32, 5), DomainError);
}
