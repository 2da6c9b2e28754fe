#include "gapfield/grid.hpp"

#include "gapfield/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gapfield {

namespace {

struct Line {
    std::vector<double> r;
    std::vector<double> z;
    bool gap = false;
    double t = std::numeric_limits<double>::quiet_NaN();
};

void check_policy(const ResolutionPolicy& p) {
    if (p.n_gap < 2) throw InputError("resolution.n_gap must be at least 2");
    if (!(p.lateral_fraction > 0.0)) throw InputError("resolution.lateral_fraction must be positive");
    if (!(p.growth >= 1.0)) throw InputError("resolution.growth must be >= 1");
    if (!(p.max_spacing > 0.0)) throw InputError("resolution.max_spacing must be positive");
    if (p.fixed_lateral_spacing < 0.0)
        throw InputError("resolution.fixed_lateral_spacing must be non-negative");
}

// Appends points in (a, b] whose spacing starts near h * growth, grows
// geometrically up to hmax, and is shrunk to land exactly on b.
void graded_segment(std::vector<double>& out, double a, double b, double& h,
                    double growth, double hmax) {
    std::vector<double> steps;
    double total = 0.0;
    double step = std::min(h * growth, hmax);
    while (total < b - a) {
        steps.push_back(step);
        total += step;
        step = std::min(step * growth, hmax);
    }
    const double scale = (b - a) / total;
    double x = a;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        x += steps[k] * scale;
        out.push_back(k + 1 == steps.size() ? b : x);
    }
    h = steps.back() * scale;
}

void uniform_segment(std::vector<double>& out, double a, double b, double h) {
    const int count = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int k = 1; k <= count; ++k) out.push_back(k == count ? b : a + (b - a) * k / count);
}

// Points of the inclusion and outer sphere used beyond 2R, by polar angle
// measured from the lowest point.
struct SpherePoints {
    double eps, ri, ro;
    double inclusion_r(double a) const { return ri * std::sin(a); }
    double inclusion_z(double a) const { return eps + ri - ri * std::cos(a); }
    double outer_r(double b) const { return ro * std::sin(b); }
    double outer_z(double b) const { return ro - ro * std::cos(b); }
};

}  // namespace

std::vector<double> gap_line_positions(const GapGeometry& geom, const ResolutionPolicy& policy) {
    check_policy(policy);
    const double se = std::sqrt(geom.epsilon);
    if (!(se < geom.R))
        throw DomainError("epsilon must be small against R^2 to resolve the gap");
    const double two_r = 2.0 * geom.R;
    std::vector<double> breaks{se / 4.0, se, geom.R / 4.0, geom.R / 2.0, geom.R, two_r};
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
                 breaks.end());

    std::vector<double> t{0.0};
    if (policy.fixed_lateral_spacing > 0.0) {
        for (double b : breaks) uniform_segment(t, t.back(), b, policy.fixed_lateral_spacing);
        return t;
    }
    // Uniform spacing that puts a node exactly on sqrt(eps)/4.
    const double h_target = std::min({policy.lateral_fraction * se, se / 4.0, policy.max_spacing});
    const double h0 = (se / 4.0) / std::ceil((se / 4.0) / h_target - 1e-9);
    double h = h0;
    for (double b : breaks) {
        const double a = t.back();
        if (b <= a) continue;
        if (b <= se * (1.0 + 1e-12)) {
            uniform_segment(t, a, b, h0);
            h = h0;
        } else {
            graded_segment(t, a, b, h, policy.growth, policy.max_spacing);
        }
    }
    return t;
}

namespace {

std::vector<Line> half_lines(const GapGeometry& geom, const ResolutionPolicy& policy) {
    const int ns = policy.n_gap + 1;
    std::vector<Line> lines;
    const std::vector<double> ts = gap_line_positions(geom, policy);
    for (double t : ts) {
        Line line;
        line.gap = true;
        line.t = t;
        const double bottom = geom.boundary_height(t);
        const double top = geom.inclusion_height(t);
        for (int j = 0; j < ns; ++j) {
            line.r.push_back(t);
            line.z.push_back(j + 1 == ns ? top : bottom + (top - bottom) * j / (ns - 1));
        }
        lines.push_back(std::move(line));
    }

    // Beyond 2R: segments from the outer sphere point at angle b(tau) to the
    // inclusion point at angle a(tau), both angles running linearly to pi.
    const SpherePoints sp{geom.epsilon, geom.outer.inclusion_radius, geom.outer.outer_radius};
    const double two_r = 2.0 * geom.R;
    const double a0 = std::asin(two_r / sp.ri);
    const double b0 = std::asin(two_r / sp.ro);
    const double pi = std::numbers::pi;
    auto mid = [&](double tau, double& mr, double& mz) {
        const double a = a0 + tau * (pi - a0);
        const double b = b0 + tau * (pi - b0);
        mr = 0.5 * (sp.inclusion_r(a) + sp.outer_r(b));
        mz = 0.5 * (sp.inclusion_z(a) + sp.outer_z(b));
    };
    constexpr int kTable = 4000;
    std::vector<double> arc(kTable + 1, 0.0);
    double pr, pz;
    mid(0.0, pr, pz);
    for (int k = 1; k <= kTable; ++k) {
        double qr, qz;
        mid(static_cast<double>(k) / kTable, qr, qz);
        arc[k] = arc[k - 1] + std::hypot(qr - pr, qz - pz);
        pr = qr;
        pz = qz;
    }
    const double length = arc.back();
    std::vector<double> s{0.0};
    const double h_last = ts.size() > 1 ? ts[ts.size() - 1] - ts[ts.size() - 2] : policy.max_spacing;
    if (policy.fixed_lateral_spacing > 0.0) {
        uniform_segment(s, 0.0, length, policy.fixed_lateral_spacing);
    } else {
        double h = h_last;
        graded_segment(s, 0.0, length, h, policy.growth, policy.max_spacing);
    }
    for (std::size_t k = 1; k < s.size(); ++k) {
        double tau = 1.0;
        if (k + 1 < s.size()) {
            const auto it = std::lower_bound(arc.begin(), arc.end(), s[k]);
            const int hi = static_cast<int>(it - arc.begin());
            const int lo = std::max(0, hi - 1);
            const double w = arc[hi] > arc[lo] ? (s[k] - arc[lo]) / (arc[hi] - arc[lo]) : 0.0;
            tau = (lo + w) / kTable;
        }
        const double a = a0 + tau * (pi - a0);
        const double b = b0 + tau * (pi - b0);
        Line line;
        for (int j = 0; j < ns; ++j) {
            const double w = static_cast<double>(j) / (ns - 1);
            double rr = sp.outer_r(b) + w * (sp.inclusion_r(a) - sp.outer_r(b));
            if (k + 1 == s.size()) rr = 0.0;
            line.r.push_back(rr);
            line.z.push_back(sp.outer_z(b) + w * (sp.inclusion_z(a) - sp.outer_z(b)));
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

void finalize_tags_and_check(CurvilinearGrid& grid) {
    grid.tags.assign(grid.size(), kInterior);
    for (int i = 0; i < grid.ni; ++i) {
        grid.tags[grid.index(i, 0)] |= kOuter;
        grid.tags[grid.index(i, grid.nj - 1)] |= kInclusion;
        if (grid.axis_ends && (i == 0 || i == grid.ni - 1))
            for (int j = 0; j < grid.nj; ++j) grid.tags[grid.index(i, j)] |= kAxis;
    }
    grid.weight.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        grid.weight[k] = grid.n == 2 ? 1.0 : std::pow(std::abs(grid.r[k]), grid.n - 2);

    for (int i = 0; i < grid.cells_lateral(); ++i) {
        const int i1 = grid.next_line(i);
        for (int j = 0; j + 1 < grid.nj; ++j) {
            const int c[4] = {grid.index(i, j), grid.index(i1, j), grid.index(i1, j + 1),
                              grid.index(i, j + 1)};
            for (int k = 0; k < 4; ++k) {
                const int a = c[(k + 3) % 4], b = c[k], d = c[(k + 1) % 4];
                const double cross = (grid.r[d] - grid.r[b]) * (grid.z[a] - grid.z[b]) -
                                     (grid.z[d] - grid.z[b]) * (grid.r[a] - grid.r[b]);
                if (!(cross > 0.0)) {
                    std::ostringstream os;
                    os << "grid cell (" << i << ", " << j << ") is folded";
                    throw DomainError(os.str());
                }
            }
        }
    }
}

}  // namespace

std::size_t grid_node_count(const GapGeometry& geom, const ResolutionPolicy& policy) {
    const std::size_t ns = static_cast<std::size_t>(policy.n_gap) + 1;
    const std::size_t k = half_lines(geom, policy).size();
    return (geom.n == 2 ? 2 * (k - 1) : k) * ns;
}

CurvilinearGrid build_grid(const GapGeometry& geom, const ResolutionPolicy& policy) {
    check_policy(policy);
    if (!validate(geom).passed()) throw DomainError("geometry does not validate");
    std::vector<Line> lines = half_lines(geom, policy);
    const std::size_t ns = static_cast<std::size_t>(policy.n_gap) + 1;
    const std::size_t k = lines.size();
    const std::size_t required = (geom.n == 2 ? 2 * (k - 1) : k) * ns;
    if (required > policy.max_unknowns) {
        std::ostringstream os;
        os << "grid needs " << required << " nodes, limit is " << policy.max_unknowns;
        throw ResourceError(os.str(), required);
    }

    if (geom.n == 2) {
        for (std::size_t m = k - 1; m-- > 1;) {
            Line mirror = lines[m];
            for (double& v : mirror.r) v = -v;
            mirror.t = -mirror.t;
            lines.push_back(std::move(mirror));
        }
    }

    CurvilinearGrid grid;
    grid.n = geom.n;
    grid.ni = static_cast<int>(lines.size());
    grid.nj = static_cast<int>(ns);
    grid.periodic = geom.n == 2;
    grid.axis_ends = geom.n != 2;
    grid.epsilon = geom.epsilon;
    grid.r.reserve(required);
    grid.z.reserve(required);
    for (const Line& line : lines) {
        grid.gap_line.push_back(line.gap ? 1 : 0);
        grid.lateral.push_back(line.t);
        grid.r.insert(grid.r.end(), line.r.begin(), line.r.end());
        grid.z.insert(grid.z.end(), line.z.begin(), line.z.end());
    }
    finalize_tags_and_check(grid);
    return grid;
}

CurvilinearGrid build_gap_patch_grid(const GapGeometry& geom, const ResolutionPolicy& policy) {
    check_policy(policy);
    std::vector<double> ts = gap_line_positions(geom, policy);
    if (geom.n == 2) {
        std::vector<double> full;
        for (std::size_t k = ts.size(); k-- > 1;) full.push_back(-ts[k]);
        full.insert(full.end(), ts.begin(), ts.end());
        ts = std::move(full);
    }
    CurvilinearGrid grid;
    grid.n = geom.n;
    grid.ni = static_cast<int>(ts.size());
    grid.nj = policy.n_gap + 1;
    grid.epsilon = geom.epsilon;
    for (double t : ts) {
        const double bottom = geom.g.value(std::abs(t));
        const double width = delta(geom, std::abs(t));
        if (!(width > 0.0)) throw DomainError("gap width must be positive");
        grid.gap_line.push_back(1);
        grid.lateral.push_back(t);
        for (int j = 0; j < grid.nj; ++j) {
            grid.r.push_back(t);
            grid.z.push_back(bottom + width * j / (grid.nj - 1));
        }
    }
    finalize_tags_and_check(grid);
    return grid;
}

CurvilinearGrid build_annulus_grid(double r1, int n_theta, int n_radial) {
    if (!(r1 > 0.0 && r1 < 1.0)) throw DomainError("annulus needs 0 < r1 < 1");
    if (n_theta < 4 || n_radial < 2) throw InputError("annulus resolution too small");
    CurvilinearGrid grid;
    grid.n = 2;
    grid.ni = n_theta;
    grid.nj = n_radial;
    grid.periodic = true;
    grid.axis_ends = false;
    for (int i = 0; i < n_theta; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / n_theta;
        grid.gap_line.push_back(0);
        grid.lateral.push_back(std::numeric_limits<double>::quiet_NaN());
        for (int j = 0; j < n_radial; ++j) {
            const double rho = 1.0 - (1.0 - r1) * j / (n_radial - 1);
            grid.r.push_back(rho * std::cos(theta));
            grid.z.push_back(rho * std::sin(theta));
        }
    }
    finalize_tags_and_check(grid);
    return grid;
}

}  // namespace gapfield
