#include "gapfield/error.hpp"
#include "gapfield/linalg.hpp"
#include "gapfield/solver.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>

using namespace gapfield;

namespace {

GapGeometry quadratic(double eps, int n = 3) {
    GapGeometry g;
    g.n = n;
    g.epsilon = eps;
    return g;
}

constexpr double kR1 = 0.5;

// Separated solutions on kR1 < rho < 1 with cos(theta) data at rho = 1 and
// an insulated inner circle.
double annulus_exact(double x, double y, bool neumann) {
    const double rho = std::hypot(x, y);
    const double c = neumann ? 1.0 / (1.0 - kR1 * kR1) : 1.0 / (1.0 + kR1 * kR1);
    return c * (rho + kR1 * kR1 / rho) * (x / rho);
}

struct AnnulusRun {
    double rel_error;
    double max_grad;
    double energy;
    double pairing;
};

AnnulusRun solve_annulus(int n_theta, int n_radial, bool neumann) {
    const CurvilinearGrid grid = build_annulus_grid(kR1, n_theta, n_radial);
    const BoundaryData bc =
        BoundaryData::function(neumann ? BoundaryKind::Neumann : BoundaryKind::Dirichlet,
                               [](double x, double) { return x; });
    const DiscreteField u = neumann ? solve_neumann(bc, grid) : solve_dirichlet(bc, grid);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double e = annulus_exact(grid.r[k], grid.z[k], neumann);
        err = std::max(err, std::abs(u.values[k] - e));
        scale = std::max(scale, std::abs(e));
    }
    const EnergyReport en = energy(u);
    return {err / scale, max_gradient(u).value, en.energy, en.pairing};
}

bool bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index k = 0; k < a.size(); ++k)
        if (std::memcmp(&a[k], &b[k], sizeof(double)) != 0) return false;
    return true;
}

}  // namespace

TEST(Annulus, NeumannOracleAndOrder) {
    const AnnulusRun coarse = solve_annulus(64, 9, true);
    const AnnulusRun base = solve_annulus(128, 17, true);
    const AnnulusRun fine = solve_annulus(256, 33, true);
    EXPECT_LE(base.rel_error, 1e-3);
    const double p1 = std::log2(coarse.rel_error / base.rel_error);
    const double p2 = std::log2(base.rel_error / fine.rel_error);
    EXPECT_GE(p1, 1.7);
    EXPECT_LE(p1, 2.3);
    EXPECT_GE(p2, 1.7);
    EXPECT_LE(p2, 2.3);
}

TEST(Annulus, MaxGradientAndEnergy) {
    const AnnulusRun run = solve_annulus(128, 17, true);
    // |grad u| peaks on the inner circle at theta = pi/2 with value 2 / (1 - r1^2).
    EXPECT_NEAR(run.max_grad / (2.0 / (1.0 - kR1 * kR1)), 1.0, 1e-3);
    // Energy of the separated solution: pi (1 + r1^2) / (1 - r1^2).
    const double exact = std::numbers::pi * (1.0 + kR1 * kR1) / (1.0 - kR1 * kR1);
    EXPECT_NEAR(run.energy / exact, 1.0, 1e-3);
    EXPECT_NEAR(run.pairing / run.energy, 1.0, 1e-6);
}

TEST(Annulus, DirichletOracle) {
    EXPECT_LE(solve_annulus(128, 17, false).rel_error, 1e-3);
}

TEST(Annulus, SmallHoleSelfConvergence) {
    // Affine data x around a small insulated hole, compared with a grid four
    // times finer at the shared nodes.
    auto run = [](int nt, int nr) {
        const CurvilinearGrid grid = build_annulus_grid(0.05, nt, nr);
        return std::make_pair(grid, solve_dirichlet(BoundaryData::function(BoundaryKind::Dirichlet,
                                                                           [](double x, double) { return x; }),
                                                    grid));
    };
    auto errors = [&](int s) {
        const auto [gc, uc] = run(2 * s, s / 4 + 1);
        const auto [gf, uf] = run(8 * s, s + 1);
        double all = 0.0, far = 0.0;
        for (int i = 0; i < gc.ni; ++i)
            for (int j = 0; j < gc.nj; ++j) {
                const int k = gc.index(i, j);
                const double e = std::abs(uc.values[k] - uf.values[gf.index(4 * i, 4 * j)]);
                all = std::max(all, e);
                if (std::hypot(gc.r[k], gc.z[k]) > 0.3) far = std::max(far, e);
            }
        return std::make_pair(all, far);
    };
    const auto [all32, far32] = errors(32);
    const auto [all64, far64] = errors(64);
    EXPECT_LE(all64, 0.6 * all32);
    EXPECT_LE(far64, 0.6 * far32);
    EXPECT_LE(all64, 5e-3);
    EXPECT_LE(far64, 5e-4);
    // Far from the hole the field is close to the affine extension.
    const auto [gf, uf] = run(256, 65);
    for (int i = 0; i < gf.ni; ++i) {
        const int k = gf.index(i, 8);
        EXPECT_NEAR(uf.values[k], gf.r[k], 0.01);
    }
}

TEST(Neumann, ZeroDataGivesZero) {
    for (int n : {2, 3}) {
        const GapGeometry g = quadratic(1e-3, n);
        const CurvilinearGrid grid = build_grid(g, {});
        const DiscreteField u = solve_neumann(g, BoundaryData::bump(BoundaryKind::Neumann, g, 0.0), grid);
        EXPECT_EQ(u.values.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(max_gradient(u).value, 0.0);
    }
}

TEST(Neumann, ResidualAndCompatibility) {
    const GapGeometry g = quadratic(1e-3);
    const CurvilinearGrid grid = build_grid(g, {});
    const BoundaryData bc = BoundaryData::bump(BoundaryKind::Neumann, g, 1.0);
    const LinearSystem sys = assemble_system(grid, bc);
    EXPECT_LE(std::abs(sys.rhs.sum()), 1e-12 * sys.rhs.cwiseAbs().sum());
    EXPECT_NE(sys.far_cap_constant, 0.0);
    EXPECT_LE((sys.matrix * Eigen::VectorXd::Ones(grid.size())).cwiseAbs().maxCoeff(), 1e-9);
    const DiscreteField u = solve_neumann(g, bc, grid);
    EXPECT_LE(u.residual, 1e-9);
    EXPECT_GT(u.stats.iterations, 0);
}

TEST(Neumann, PreconditionersAgree) {
    const GapGeometry g = quadratic(1e-3, 2);
    const CurvilinearGrid grid = build_grid(g, {});
    const BoundaryData bc = BoundaryData::bump(BoundaryKind::Neumann, g, 1.0);
    SolveOptions ic, jac;
    jac.preconditioner = Preconditioner::Jacobi;
    const DiscreteField a = solve_neumann(g, bc, grid, ic);
    const DiscreteField b = solve_neumann(g, bc, grid, jac);
    EXPECT_LE((a.values - b.values).cwiseAbs().maxCoeff(), 1e-6 * a.values.cwiseAbs().maxCoeff());
    EXPECT_LT(a.stats.iterations, b.stats.iterations);
}

TEST(Neumann, GreenIdentity) {
    for (int n : {2, 3, 4})
        for (double eps : {1e-2, 1e-4}) {
            const GapGeometry g = quadratic(eps, n);
            const CurvilinearGrid grid = build_grid(g, {});
            for (const BoundaryData& bc : {BoundaryData::bump(BoundaryKind::Neumann, g, 1.0),
                                           BoundaryData::power(BoundaryKind::Neumann, g, 1.0, 0.8)}) {
                const EnergyReport e = energy(solve_neumann(g, bc, grid));
                ASSERT_TRUE(e.has_pairing);
                EXPECT_GT(e.energy, 0.0);
                EXPECT_LE(std::abs(e.energy - e.pairing) / e.energy, 1e-6) << "n=" << n << " eps=" << eps;
            }
        }
}

TEST(Neumann, GaugeBitIdentity) {
    for (int n : {2, 3}) {
        const GapGeometry g = quadratic(1e-3, n);
        const CurvilinearGrid grid = build_grid(g, {});
        const DiscreteField u = solve_neumann(g, BoundaryData::bump(BoundaryKind::Neumann, g, 1.0), grid);
        EXPECT_LE(std::abs(gauge_mean(u)), 1e-10 * u.values.cwiseAbs().maxCoeff());
        for (double c : {1.0, -2.5, 7.25}) {
            DiscreteField v = u;
            v.values.array() += c;
            normalize_gauge(v);
            EXPECT_TRUE(bitwise_equal(v.values, u.values)) << "shift " << c;
            EXPECT_EQ(max_gradient(v).value, max_gradient(u).value);
            EXPECT_EQ(oscillation(v, Region::gap_patch(0.1)), oscillation(u, Region::gap_patch(0.1)));
        }
    }
}

TEST(Neumann, MaxGradientNearContact) {
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const GapGeometry g = quadratic(eps);
        const DiscreteField u = solve_neumann(g, BoundaryData::bump(BoundaryKind::Neumann, g, 1.0), build_grid(g, {}));
        const GradientMax m = max_gradient(u);
        EXPECT_LE(std::abs(m.r), 2.0 * std::sqrt(eps));
        EXPECT_LE(m.z, g.epsilon + g.f.value(std::abs(m.r)) + 1e-15);
        EXPECT_EQ(max_gradient(u, Region::gap_patch(g.R)).value, m.value);
    }
}

TEST(Dirichlet, ConstantData) {
    for (int n : {2, 3}) {
        const GapGeometry g = quadratic(1e-3, n);
        const CurvilinearGrid grid = build_grid(g, {});
        const DiscreteField u =
            solve_dirichlet(g, BoundaryData::function(BoundaryKind::Dirichlet, [](double, double) { return 0.75; }), grid);
        EXPECT_LE((u.values.array() - 0.75).abs().maxCoeff(), 1e-12);
        EXPECT_LE(max_gradient(u).value, 1e-9);
        EXPECT_LE(u.residual, 1e-9);
    }
}

TEST(Dirichlet, KindMismatchIsInputError) {
    const GapGeometry g = quadratic(1e-3);
    const CurvilinearGrid grid = build_grid(g, {});
    EXPECT_THROW(solve_dirichlet(g, BoundaryData::bump(BoundaryKind::Neumann, g, 1.0), grid), InputError);
    EXPECT_THROW(solve_neumann(g, BoundaryData::bump(BoundaryKind::Dirichlet, g, 1.0), grid), InputError);
}

TEST(Gradient, AffineFieldsExact) {
    for (int n : {2, 3}) {
        const GapGeometry g = quadratic(1e-3, n);
        const CurvilinearGrid grid = build_grid(g, {});
        Eigen::VectorXd vz(grid.size()), vr(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            vz[k] = grid.z[k];
            vr[k] = grid.r[k];
        }
        const NodalGradient dz = nodal_gradient(make_field(grid, vz));
        for (std::size_t k = 0; k < grid.size(); ++k) {
            EXPECT_NEAR(dz.dr[k], 0.0, 1e-10);
            EXPECT_NEAR(dz.dz[k], 1.0, 1e-10);
        }
        if (n == 2) {
            const NodalGradient dr = nodal_gradient(make_field(grid, vr));
            for (std::size_t k = 0; k < grid.size(); ++k) {
                EXPECT_NEAR(dr.dr[k], 1.0, 1e-10);
                EXPECT_NEAR(dr.dz[k], 0.0, 1e-10);
            }
        }
        const Eigen::Vector2d p = gradient(make_field(grid, vz), 0.01, 0.5e-3);
        EXPECT_NEAR(p(0), 0.0, 1e-10);
        EXPECT_NEAR(p(1), 1.0, 1e-10);
    }
}

TEST(Gradient, ConstantFieldAndOutsidePoint) {
    const GapGeometry g = quadratic(1e-3);
    const CurvilinearGrid grid = build_grid(g, {});
    const DiscreteField c = make_field(grid, Eigen::VectorXd::Constant(grid.size(), 3.0));
    EXPECT_EQ(max_gradient(c).value, 0.0);
    EXPECT_EQ(oscillation(c), 0.0);
    EXPECT_NEAR(energy(c).energy, 0.0, 1e-20);
    EXPECT_THROW(gradient(c, 0.0, -0.1), DomainError);
    EXPECT_THROW(gradient(c, 0.0, 5.0), DomainError);
}

TEST(Oscillation, HeightOfGapLine) {
    const GapGeometry g = quadratic(1e-3);
    const CurvilinearGrid grid = build_grid(g, {});
    Eigen::VectorXd vz(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) vz[k] = grid.z[k];
    const DiscreteField u = make_field(grid, vz);
    // A patch thinner than the first lateral spacing holds only the line x' = 0.
    EXPECT_NEAR(oscillation(u, Region::gap_patch(1e-4)), delta(g, 0.0), 1e-15);
    // A window strictly between two consecutive gap lines holds no nodes.
    std::vector<double> t;
    for (int i = 0; i < grid.ni; ++i)
        if (grid.gap_line[i] && grid.lateral[i] > 0.0) t.push_back(grid.lateral[i]);
    std::sort(t.begin(), t.end());
    ASSERT_GE(t.size(), 2u);
    EXPECT_THROW(oscillation(u, Region::gap_patch(0.25 * (t[1] - t[0]), 0.5 * (t[0] + t[1]))), DomainError);
}

TEST(LinearAlgebra, NonConvergenceCarriesHistory) {
    const GapGeometry g = quadratic(1e-3);
    const CurvilinearGrid grid = build_grid(g, {});
    const LinearSystem sys = assemble_system(grid, BoundaryData::bump(BoundaryKind::Neumann, g, 1.0));
    PcgOptions opt;
    opt.max_iterations = 3;
    opt.project_constants = true;
    SolveStats stats;
    try {
        pcg(sys.matrix, sys.rhs, opt, stats);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.history().size(), 3u);
    }
}

TEST(FieldDump, RoundTrip) {
    const GapGeometry g = quadratic(1e-2, 2);
    const CurvilinearGrid grid = build_grid(g, {});
    const DiscreteField u = solve_neumann(g, BoundaryData::bump(BoundaryKind::Neumann, g, 1.0), grid);
    const std::string path = ::testing::TempDir() + "gapfield_dump.bin";
    write_field_dump(u, path);
    const FieldDump d = read_field_dump(path);
    EXPECT_EQ(d.n, 2);
    EXPECT_EQ(d.ni, grid.ni);
    EXPECT_EQ(d.nj, grid.nj);
    EXPECT_EQ(d.r, grid.r);
    EXPECT_EQ(d.z, grid.z);
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_EQ(d.values[k], u.values[k]);
    std::remove(path.c_str());
    EXPECT_THROW(read_field_dump(path), InputError);
}
