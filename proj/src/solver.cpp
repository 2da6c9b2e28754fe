#include "gapfield/solver.hpp"

#include "gapfield/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace gapfield {

namespace {

struct GaussRule {
    std::vector<double> x, w;
};

GaussRule gauss(int points) {
    if (points == 2) {
        const double a = 1.0 / std::sqrt(3.0);
        return {{-a, a}, {1.0, 1.0}};
    }
    const double a = std::sqrt(0.6);
    return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
}

constexpr std::array<double, 4> kXi{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kZeta{-1.0, -1.0, 1.0, 1.0};

std::array<int, 4> cell_nodes(const CurvilinearGrid& g, int i, int j) {
    const int i1 = g.next_line(i);
    return {g.index(i, j), g.index(i1, j), g.index(i1, j + 1), g.index(i, j + 1)};
}

double axis_weight(int n, double r) { return n == 2 ? 1.0 : std::pow(std::abs(r), n - 2); }

// Shape-function derivatives in physical coordinates at a reference point.
struct PointEval {
    std::array<double, 4> n{};
    std::array<double, 4> dr{};
    std::array<double, 4> dz{};
    double det = 0.0;
    double r = 0.0;
    double z = 0.0;
};

PointEval evaluate(const CurvilinearGrid& g, const std::array<int, 4>& c, double xi, double zeta) {
    PointEval e;
    std::array<double, 4> dxi{}, dzeta{};
    double r_xi = 0, r_zeta = 0, z_xi = 0, z_zeta = 0;
    for (int k = 0; k < 4; ++k) {
        e.n[k] = 0.25 * (1.0 + kXi[k] * xi) * (1.0 + kZeta[k] * zeta);
        dxi[k] = 0.25 * kXi[k] * (1.0 + kZeta[k] * zeta);
        dzeta[k] = 0.25 * kZeta[k] * (1.0 + kXi[k] * xi);
        e.r += e.n[k] * g.r[c[k]];
        e.z += e.n[k] * g.z[c[k]];
        r_xi += dxi[k] * g.r[c[k]];
        r_zeta += dzeta[k] * g.r[c[k]];
        z_xi += dxi[k] * g.z[c[k]];
        z_zeta += dzeta[k] * g.z[c[k]];
    }
    e.det = r_xi * z_zeta - r_zeta * z_xi;
    for (int k = 0; k < 4; ++k) {
        e.dr[k] = (z_zeta * dxi[k] - z_xi * dzeta[k]) / e.det;
        e.dz[k] = (-r_zeta * dxi[k] + r_xi * dzeta[k]) / e.det;
    }
    return e;
}

int quadrature_points(int n) { return n <= 3 ? 2 : 3; }

double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// Nearest multiple of a power-of-two quantum.
double round_to(double x, double quantum) { return std::nearbyint(x / quantum) * quantum; }

std::vector<double> lumped_mass(const CurvilinearGrid& g) {
    std::vector<double> mass(g.size(), 0.0);
    const GaussRule q = gauss(quadrature_points(g.n));
    for (int i = 0; i < g.cells_lateral(); ++i)
        for (int j = 0; j + 1 < g.nj; ++j) {
            const auto c = cell_nodes(g, i, j);
            for (std::size_t a = 0; a < q.x.size(); ++a)
                for (std::size_t b = 0; b < q.x.size(); ++b) {
                    const PointEval e = evaluate(g, c, q.x[a], q.x[b]);
                    const double f = q.w[a] * q.w[b] * e.det * axis_weight(g.n, e.r);
                    for (int k = 0; k < 4; ++k) mass[c[k]] += f * e.n[k];
                }
        }
    return mass;
}

std::vector<char> gauge_set(const CurvilinearGrid& g, double radius) {
    std::vector<char> in(g.size(), 1);
    for (int i = 0; i < g.ni; ++i) {
        if (!g.gap_line[i] || !(std::abs(g.lateral[i]) < radius)) continue;
        for (int j = 0; j < g.nj; ++j) in[g.index(i, j)] = 0;
    }
    return in;
}

// Neumaier-compensated weighted mean.
double weighted_mean(const Eigen::VectorXd& u, const std::vector<double>& mass,
                     const std::vector<char>& in) {
    double s = 0.0, cs = 0.0, m = 0.0, cm = 0.0;
    auto add = [](double& sum, double& comp, double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    };
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        if (!in[k]) continue;
        add(s, cs, mass[k] * u[k]);
        add(m, cm, mass[k]);
    }
    const double total = m + cm;
    if (!(total > 0.0)) throw DomainError("gauge region is empty");
    return (s + cs) / total;
}

void apply_gauge(DiscreteField& field) {
    const CurvilinearGrid& g = *field.grid;
    Eigen::VectorXd& u = field.values;
    if (u.size() == 0) return;
    const double scale = u.maxCoeff() - u.minCoeff();
    if (scale == 0.0) {
        u.setZero();
        return;
    }
    const std::vector<double> mass = lumped_mass(g);
    const std::vector<char> in = gauge_set(g, field.gauge_radius);
    const int e = std::ilogb(scale);
    const double fine = std::ldexp(1.0, e - 44);
    const double coarse = std::ldexp(1.0, e - 34);
    const double shift = round_to(weighted_mean(u, mass, in), coarse);
    for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = round_to(u[k] - shift, fine);
    const double rest = round_to(weighted_mean(u, mass, in), fine);
    u.array() -= rest;
}

double default_gauge_radius(const GapGeometry& geom, const SolveOptions& options) {
    return options.gauge_radius >= 0.0 ? options.gauge_radius : geom.R / 4.0;
}

void check_bc(const BoundaryData& bc, BoundaryKind expected) {
    if (bc.kind != expected)
        throw InputError(expected == BoundaryKind::Neumann
                             ? "solve_neumann needs Neumann boundary data"
                             : "solve_dirichlet needs Dirichlet boundary data");
    if (bc.profile == DataProfile::Custom && !bc.custom)
        throw InputError("custom boundary data without a function");
}

DiscreteField neumann_core(const BoundaryData& bc, const CurvilinearGrid& grid,
                           const SolveOptions& options, double gauge_radius) {
    check_bc(bc, BoundaryKind::Neumann);
    LinearSystem sys = assemble_system(grid, bc);
    PcgOptions po;
    po.tolerance = options.tolerance;
    po.preconditioner = options.preconditioner;
    po.project_constants = true;

    DiscreteField field;
    field.grid = std::make_shared<const CurvilinearGrid>(grid);
    field.gauge = Gauge::MeanZeroOutsideCore;
    field.gauge_radius = gauge_radius;
    field.far_cap_constant = sys.far_cap_constant;
    field.values = pcg(sys.matrix, sys.rhs, po, field.stats);
    const double bnorm = sys.rhs.norm();
    if (bnorm > 0.0) {
        Eigen::VectorXd res = sys.rhs - sys.matrix * field.values;
        project_out_constants(res);
        field.residual = res.norm() / bnorm;
    }
    field.boundary_load = std::move(sys.rhs);
    apply_gauge(field);
    return field;
}

DiscreteField dirichlet_core(const BoundaryData& bc, const CurvilinearGrid& grid,
                             const SolveOptions& options) {
    check_bc(bc, BoundaryKind::Dirichlet);
    const LinearSystem sys = assemble_system(grid, bc);
    const int total = static_cast<int>(grid.size());
    std::vector<int> map(total, -1);
    int free = 0;
    Eigen::VectorXd ud = Eigen::VectorXd::Zero(total);
    for (int k = 0; k < total; ++k) {
        if (grid.tags[k] & kOuter)
            ud[k] = bc.value(grid.r[k], grid.z[k]);
        else
            map[k] = free++;
    }
    // Solve for the deviation from the mean boundary value.
    double shift = 0.0;
    for (int k = 0; k < total; ++k)
        if (map[k] < 0) shift += ud[k];
    shift /= static_cast<double>(total - free);
    for (int k = 0; k < total; ++k)
        if (map[k] < 0) ud[k] -= shift;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free);
    for (int row = 0; row < total; ++row) {
        if (map[row] < 0) continue;
        for (SparseMatrix::InnerIterator it(sys.matrix, row); it; ++it) {
            const int col = static_cast<int>(it.col());
            if (map[col] >= 0)
                trip.emplace_back(map[row], map[col], it.value());
            else
                rhs[map[row]] -= it.value() * ud[col];
        }
    }
    SparseMatrix kii(free, free);
    kii.setFromTriplets(trip.begin(), trip.end());

    PcgOptions po;
    po.tolerance = options.tolerance;
    po.preconditioner = options.preconditioner;
    DiscreteField field;
    field.grid = std::make_shared<const CurvilinearGrid>(grid);
    const Eigen::VectorXd ui = pcg(kii, rhs, po, field.stats);
    if (rhs.norm() > 0.0) field.residual = (rhs - kii * ui).norm() / rhs.norm();
    field.values = ud;
    for (int k = 0; k < total; ++k)
        if (map[k] >= 0) field.values[k] = ui[map[k]];
    field.values.array() += shift;
    return field;
}

// Nodal derivative along the lateral index with mirror ghosts on the axis.
void lateral_diff(const CurvilinearGrid& g, const Eigen::VectorXd& u, int i, int j, double& r_xi,
                  double& z_xi, double& u_xi) {
    const int k = g.index(i, j);
    if (g.periodic) {
        const int a = g.index((i + g.ni - 1) % g.ni, j), b = g.index((i + 1) % g.ni, j);
        r_xi = 0.5 * (g.r[b] - g.r[a]);
        z_xi = 0.5 * (g.z[b] - g.z[a]);
        u_xi = 0.5 * (u[b] - u[a]);
        return;
    }
    if (i > 0 && i + 1 < g.ni) {
        const int a = g.index(i - 1, j), b = g.index(i + 1, j);
        r_xi = 0.5 * (g.r[b] - g.r[a]);
        z_xi = 0.5 * (g.z[b] - g.z[a]);
        u_xi = 0.5 * (u[b] - u[a]);
        return;
    }
    const int inner = g.index(i == 0 ? 1 : i - 1, j);
    const double sign = i == 0 ? 1.0 : -1.0;
    if (g.axis_ends) {
        // Ghost is the mirror image of the inner neighbour.
        r_xi = sign * 0.5 * (g.r[inner] + g.r[inner]);
        z_xi = 0.0;
        u_xi = 0.0;
        return;
    }
    const int far = g.index(i == 0 ? 2 : i - 2, j);
    r_xi = sign * (-1.5 * g.r[k] + 2.0 * g.r[inner] - 0.5 * g.r[far]);
    z_xi = sign * (-1.5 * g.z[k] + 2.0 * g.z[inner] - 0.5 * g.z[far]);
    u_xi = sign * (-1.5 * u[k] + 2.0 * u[inner] - 0.5 * u[far]);
}

void transverse_diff(const CurvilinearGrid& g, const Eigen::VectorXd& u, int i, int j,
                     double& r_z, double& z_z, double& u_z) {
    auto d = [&](const auto& f) {
        const int nj = g.nj;
        if (j > 0 && j + 1 < nj) return 0.5 * (f(g.index(i, j + 1)) - f(g.index(i, j - 1)));
        if (nj == 2) return f(g.index(i, 1)) - f(g.index(i, 0));
        if (j == 0)
            return -1.5 * f(g.index(i, 0)) + 2.0 * f(g.index(i, 1)) - 0.5 * f(g.index(i, 2));
        return 1.5 * f(g.index(i, nj - 1)) - 2.0 * f(g.index(i, nj - 2)) +
               0.5 * f(g.index(i, nj - 3));
    };
    r_z = d([&](int k) { return g.r[k]; });
    z_z = d([&](int k) { return g.z[k]; });
    u_z = d([&](int k) { return u[k]; });
}

bool locate(const CurvilinearGrid& g, double r, double z, std::array<int, 4>& cell, double& xi,
            double& zeta) {
    const double tol = 1e-10;
    for (int i = 0; i < g.cells_lateral(); ++i)
        for (int j = 0; j + 1 < g.nj; ++j) {
            const auto c = cell_nodes(g, i, j);
            double rmin = g.r[c[0]], rmax = rmin, zmin = g.z[c[0]], zmax = zmin;
            for (int k = 1; k < 4; ++k) {
                rmin = std::min(rmin, g.r[c[k]]);
                rmax = std::max(rmax, g.r[c[k]]);
                zmin = std::min(zmin, g.z[c[k]]);
                zmax = std::max(zmax, g.z[c[k]]);
            }
            const double pad = tol * (1.0 + std::max(rmax - rmin, zmax - zmin));
            if (r < rmin - pad || r > rmax + pad || z < zmin - pad || z > zmax + pad) continue;
            double x = 0.0, y = 0.0;
            for (int it = 0; it < 30; ++it) {
                const PointEval e = evaluate(g, c, x, y);
                double r_xi = 0, r_zeta = 0, z_xi = 0, z_zeta = 0;
                for (int k = 0; k < 4; ++k) {
                    r_xi += 0.25 * kXi[k] * (1.0 + kZeta[k] * y) * g.r[c[k]];
                    r_zeta += 0.25 * kZeta[k] * (1.0 + kXi[k] * x) * g.r[c[k]];
                    z_xi += 0.25 * kXi[k] * (1.0 + kZeta[k] * y) * g.z[c[k]];
                    z_zeta += 0.25 * kZeta[k] * (1.0 + kXi[k] * x) * g.z[c[k]];
                }
                const double fr = e.r - r, fz = e.z - z;
                const double det = r_xi * z_zeta - r_zeta * z_xi;
                const double dx = (z_zeta * fr - r_zeta * fz) / det;
                const double dy = (-z_xi * fr + r_xi * fz) / det;
                x -= dx;
                y -= dy;
                if (std::abs(dx) + std::abs(dy) < 1e-14) break;
            }
            if (std::abs(x) <= 1.0 + 1e-9 && std::abs(y) <= 1.0 + 1e-9) {
                cell = c;
                xi = std::clamp(x, -1.0, 1.0);
                zeta = std::clamp(y, -1.0, 1.0);
                return true;
            }
        }
    return false;
}

GradientMax max_over(const DiscreteField& field, const std::vector<char>* in) {
    const NodalGradient grad = nodal_gradient(field);
    const CurvilinearGrid& g = *field.grid;
    GradientMax out;
    bool any = false;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (in && !(*in)[k]) continue;
        any = true;
        const double m = std::hypot(grad.dr[k], grad.dz[k]);
        if (out.node < 0 || m > out.value) {
            out.value = m;
            out.node = static_cast<int>(k);
            out.r = g.r[k];
            out.z = g.z[k];
        }
        out.max_dn = std::max(out.max_dn, std::abs(grad.dz[k]));
    }
    if (!any) throw DomainError("region contains no grid node");
    return out;
}

std::vector<char> region_mask(const CurvilinearGrid& g, const Region& region) {
    std::vector<char> in(g.size(), 0);
    for (std::size_t k = 0; k < g.size(); ++k)
        in[k] = node_in_region(g, static_cast<int>(k), region) ? 1 : 0;
    return in;
}

template <typename T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw InputError("truncated field dump");
    return v;
}

}  // namespace

BoundaryData BoundaryData::bump(BoundaryKind kind, const GapGeometry& geom, double phi0) {
    BoundaryData bc;
    bc.kind = kind;
    bc.profile = DataProfile::Bump;
    bc.phi0 = phi0;
    bc.R = geom.R;
    bc.outer_radius = geom.outer.outer_radius;
    return bc;
}

BoundaryData BoundaryData::power(BoundaryKind kind, const GapGeometry& geom, double phi0,
                                 double alpha) {
    BoundaryData bc = bump(kind, geom, phi0);
    bc.profile = DataProfile::Power;
    bc.alpha = alpha;
    return bc;
}

BoundaryData BoundaryData::function(BoundaryKind kind, std::function<double(double, double)> fn) {
    BoundaryData bc;
    bc.kind = kind;
    bc.profile = DataProfile::Custom;
    bc.custom = std::move(fn);
    bc.balance_far_cap = false;
    return bc;
}

double BoundaryData::value(double r, double z) const {
    if (profile == DataProfile::Custom) return custom(r, z);
    if (z >= outer_radius) return 0.0;
    const double s = std::abs(r) / R;
    if (s >= 1.0) return 0.0;
    const double b = (1.0 - s * s) * (1.0 - s * s) * (1.0 - s * s);
    if (profile == DataProfile::Power) return phi0 * std::pow(std::abs(r), alpha) * b;
    return phi0 * b;
}

double BoundaryData::far_cap_weight(double z) const {
    return smoothstep((z - outer_radius) / (0.5 * outer_radius));
}

double BoundaryData::phi_at_origin() const {
    if (profile == DataProfile::Custom) return custom(0.0, 0.0);
    return profile == DataProfile::Power ? 0.0 : phi0;
}

LinearSystem assemble_system(const CurvilinearGrid& g, const BoundaryData& bc) {
    LinearSystem sys;
    sys.neumann = bc.kind == BoundaryKind::Neumann;
    const int total = static_cast<int>(g.size());
    const GaussRule q = gauss(quadrature_points(g.n));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(g.cells_lateral()) * (g.nj - 1) * 16);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(total);
    for (int i = 0; i < g.cells_lateral(); ++i)
        for (int j = 0; j + 1 < g.nj; ++j) {
            const auto c = cell_nodes(g, i, j);
            double ke[4][4] = {};
            for (std::size_t a = 0; a < q.x.size(); ++a)
                for (std::size_t b = 0; b < q.x.size(); ++b) {
                    const PointEval e = evaluate(g, c, q.x[a], q.x[b]);
                    const double f = q.w[a] * q.w[b] * e.det * axis_weight(g.n, e.r);
                    for (int s = 0; s < 4; ++s) {
                        mass[c[s]] += f * e.n[s];
                        for (int t = 0; t < 4; ++t)
                            ke[s][t] += f * (e.dr[s] * e.dr[t] + e.dz[s] * e.dz[t]);
                    }
                }
            for (int s = 0; s < 4; ++s)
                for (int t = 0; t < 4; ++t) trip.emplace_back(c[s], c[t], ke[s][t]);
        }
    sys.matrix.resize(total, total);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.lumped_mass = std::move(mass);
    sys.rhs = Eigen::VectorXd::Zero(total);
    if (!sys.neumann) return sys;

    // Outer boundary loads, with and without the far-cap step.
    const GaussRule edge = gauss(3);
    Eigen::VectorXd near = Eigen::VectorXd::Zero(total);
    Eigen::VectorXd cap = Eigen::VectorXd::Zero(total);
    for (int i = 0; i < g.cells_lateral(); ++i) {
        const int a = g.index(i, 0), b = g.index(g.next_line(i), 0);
        const double half = 0.5 * std::hypot(g.r[b] - g.r[a], g.z[b] - g.z[a]);
        for (std::size_t k = 0; k < edge.x.size(); ++k) {
            const double na = 0.5 * (1.0 - edge.x[k]), nb = 0.5 * (1.0 + edge.x[k]);
            const double r = na * g.r[a] + nb * g.r[b];
            const double z = na * g.z[a] + nb * g.z[b];
            const double f = edge.w[k] * half * axis_weight(g.n, r);
            const double phi = bc.value(r, z);
            near[a] += f * phi * na;
            near[b] += f * phi * nb;
            if (bc.balance_far_cap) {
                const double chi = bc.far_cap_weight(z);
                cap[a] += f * chi * na;
                cap[b] += f * chi * nb;
            }
        }
    }
    const double cap_total = cap.sum();
    if (bc.balance_far_cap && cap_total > 0.0) {
        sys.far_cap_constant = -near.sum() / cap_total;
        near += sys.far_cap_constant * cap;
    }
    project_out_constants(near);
    sys.rhs = std::move(near);
    return sys;
}

DiscreteField solve_neumann(const GapGeometry& geom, const BoundaryData& bc,
                            const CurvilinearGrid& grid, const SolveOptions& options) {
    return neumann_core(bc, grid, options, default_gauge_radius(geom, options));
}

DiscreteField solve_neumann(const BoundaryData& bc, const CurvilinearGrid& grid,
                            const SolveOptions& options) {
    return neumann_core(bc, grid, options, std::max(0.0, options.gauge_radius));
}

DiscreteField solve_dirichlet(const GapGeometry&, const BoundaryData& bc,
                              const CurvilinearGrid& grid, const SolveOptions& options) {
    return dirichlet_core(bc, grid, options);
}

DiscreteField solve_dirichlet(const BoundaryData& bc, const CurvilinearGrid& grid,
                              const SolveOptions& options) {
    return dirichlet_core(bc, grid, options);
}

DiscreteField make_field(const CurvilinearGrid& grid, Eigen::VectorXd values) {
    if (values.size() != static_cast<Eigen::Index>(grid.size()))
        throw InputError("field size does not match the grid");
    DiscreteField field;
    field.grid = std::make_shared<const CurvilinearGrid>(grid);
    field.values = std::move(values);
    return field;
}

void normalize_gauge(DiscreteField& field) {
    field.gauge = Gauge::MeanZeroOutsideCore;
    apply_gauge(field);
}

double gauge_mean(const DiscreteField& field) {
    return weighted_mean(field.values, lumped_mass(*field.grid),
                         gauge_set(*field.grid, field.gauge_radius));
}

bool node_in_region(const CurvilinearGrid& g, int node, const Region& region) {
    const int i = g.line_of(node);
    const bool gap = g.gap_line[i] != 0;
    if (region.kind == RegionKind::OuterComplement)
        return !(gap && std::abs(g.lateral[i]) < region.radius);
    return gap && region.contains_base(g.lateral[i], g.signed_lateral());
}

NodalGradient nodal_gradient(const DiscreteField& field) {
    const CurvilinearGrid& g = *field.grid;
    NodalGradient out;
    out.dr.resize(static_cast<Eigen::Index>(g.size()));
    out.dz.resize(static_cast<Eigen::Index>(g.size()));
    for (int i = 0; i < g.ni; ++i)
        for (int j = 0; j < g.nj; ++j) {
            double r_xi, z_xi, u_xi, r_ze, z_ze, u_ze;
            lateral_diff(g, field.values, i, j, r_xi, z_xi, u_xi);
            transverse_diff(g, field.values, i, j, r_ze, z_ze, u_ze);
            const double det = r_xi * z_ze - r_ze * z_xi;
            const int k = g.index(i, j);
            // grad u = J^{-T} (u_xi, u_zeta) with J = [[r_xi, r_ze], [z_xi, z_ze]].
            out.dr[k] = (z_ze * u_xi - z_xi * u_ze) / det;
            out.dz[k] = (-r_ze * u_xi + r_xi * u_ze) / det;
        }
    return out;
}

Eigen::Vector2d gradient(const DiscreteField& field, double r, double z) {
    const CurvilinearGrid& g = *field.grid;
    std::array<int, 4> c{};
    double xi = 0.0, zeta = 0.0;
    if (!locate(g, r, z, c, xi, zeta)) {
        std::ostringstream os;
        os << "point (" << r << ", " << z << ") is outside the grid";
        throw DomainError(os.str());
    }
    const NodalGradient grad = nodal_gradient(field);
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (int k = 0; k < 4; ++k) {
        const double w = 0.25 * (1.0 + kXi[k] * xi) * (1.0 + kZeta[k] * zeta);
        out[0] += w * grad.dr[c[k]];
        out[1] += w * grad.dz[c[k]];
    }
    return out;
}

GradientMax max_gradient(const DiscreteField& field) { return max_over(field, nullptr); }

GradientMax max_gradient(const DiscreteField& field, const Region& region) {
    const std::vector<char> in = region_mask(*field.grid, region);
    return max_over(field, &in);
}

double oscillation(const DiscreteField& field) {
    if (field.values.size() == 0) throw DomainError("empty field");
    return field.values.maxCoeff() - field.values.minCoeff();
}

double oscillation(const DiscreteField& field, const Region& region) {
    const CurvilinearGrid& g = *field.grid;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!node_in_region(g, static_cast<int>(k), region)) continue;
        lo = std::min(lo, field.values[k]);
        hi = std::max(hi, field.values[k]);
    }
    if (!(hi >= lo)) throw DomainError("region contains no grid node");
    return hi - lo;
}

EnergyReport energy(const DiscreteField& field) {
    const CurvilinearGrid& g = *field.grid;
    const GaussRule q = gauss(quadrature_points(g.n));
    const Eigen::VectorXd& u = field.values;
    EnergyReport out;
    for (int i = 0; i < g.cells_lateral(); ++i)
        for (int j = 0; j + 1 < g.nj; ++j) {
            const auto c = cell_nodes(g, i, j);
            for (std::size_t a = 0; a < q.x.size(); ++a)
                for (std::size_t b = 0; b < q.x.size(); ++b) {
                    const PointEval e = evaluate(g, c, q.x[a], q.x[b]);
                    double gr = 0.0, gz = 0.0;
                    for (int k = 0; k < 4; ++k) {
                        gr += e.dr[k] * u[c[k]];
                        gz += e.dz[k] * u[c[k]];
                    }
                    out.energy +=
                        q.w[a] * q.w[b] * e.det * axis_weight(g.n, e.r) * (gr * gr + gz * gz);
                }
        }
    if (field.boundary_load.size() == u.size()) {
        out.pairing = field.boundary_load.dot(u);
        out.has_pairing = true;
    }
    return out;
}

void write_field_dump(const DiscreteField& field, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    const CurvilinearGrid& g = *field.grid;
    os.write("GAPF", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.ni));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.nj));
    for (double v : g.r) put(os, v);
    for (double v : g.z) put(os, v);
    for (Eigen::Index k = 0; k < field.values.size(); ++k) put(os, field.values[k]);
    if (!os) throw std::runtime_error("write to " + path + " failed");
}

FieldDump read_field_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GAPF", 4) != 0) throw InputError("not a GAPF dump: " + path);
    if (get<std::uint32_t>(is) != 1) throw InputError("unsupported GAPF version");
    FieldDump d;
    d.n = static_cast<int>(get<std::uint32_t>(is));
    d.ni = static_cast<int>(get<std::uint32_t>(is));
    d.nj = static_cast<int>(get<std::uint32_t>(is));
    const std::size_t count = static_cast<std::size_t>(d.ni) * d.nj;
    for (auto* v : {&d.r, &d.z, &d.values}) {
        v->resize(count);
        for (auto& x : *v) x = get<double>(is);
    }
    return d;
}

}  // namespace gapfield
