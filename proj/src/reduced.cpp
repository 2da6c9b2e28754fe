#include "gapfield/reduced.hpp"

#include "gapfield/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace gapfield {

namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGx{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGw{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                    0.2223810344533745, 0.1012285362903763};

template <typename F>
double integrate(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int k = 0; k < 8; ++k) s += kGw[k] * f(mid + half * kGx[k]);
    return s * half;
}

double power(double r, int e) { return e == 0 ? 1.0 : std::pow(r, e); }

// Graded nodes on [0, rho]: spacing max(sqrt(eps)/8, r/32) / refine.
std::vector<double> radial_nodes(double eps, double rho, std::vector<double> breaks,
                                 double refine) {
    const double hmin = std::sqrt(eps) / 8.0 / refine;
    breaks.push_back(rho / 2.0);
    breaks.push_back(rho);
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> r{0.0};
    for (double b : breaks) {
        if (!(b > r.back() * (1.0 + 1e-12)) || b > rho) continue;
        const double a = r.back();
        std::vector<double> seg;
        double x = a;
        while (true) {
            const double h = std::max(hmin, x / 32.0 / refine);
            if (x + 1.5 * h >= b) break;
            x += h;
            seg.push_back(x);
        }
        r.insert(r.end(), seg.begin(), seg.end());
        r.push_back(b);
    }
    return r;
}

// Mean over [0, 1] of samples on a uniform grid; Simpson when the cell count is even.
double simpson_mean(const std::vector<double>& v) {
    const int cells = static_cast<int>(v.size()) - 1;
    if (cells % 2 == 0) {
        double s = v.front() + v.back();
        for (int j = 1; j < cells; ++j) s += (j % 2 ? 4.0 : 2.0) * v[j];
        return s / (3.0 * cells);
    }
    double s = 0.5 * (v.front() + v.back());
    for (int j = 1; j < cells; ++j) s += v[j];
    return s / cells;
}

// Values of u along line i, ordered from the outer boundary to the inclusion.
std::vector<double> line_values(const DiscreteField& field, int i) {
    const CurvilinearGrid& g = *field.grid;
    std::vector<double> v(g.nj);
    for (int j = 0; j < g.nj; ++j) v[j] = field.values[g.index(i, j)];
    return v;
}

// Gap lines sorted by lateral coordinate; only t >= 0 on meridian grids.
std::vector<int> gap_lines(const CurvilinearGrid& g, const GapGeometry& geom) {
    std::vector<int> lines;
    for (int i = 0; i < g.ni; ++i) {
        if (!g.gap_line[i]) continue;
        if (!g.signed_lateral() && g.lateral[i] < 0.0) continue;
        if (std::abs(g.lateral[i]) > 2.0 * geom.R * (1.0 + 1e-12)) continue;
        lines.push_back(i);
    }
    if (lines.empty()) throw DomainError("grid does not cover the gap");
    std::sort(lines.begin(), lines.end(),
              [&](int a, int b) { return g.lateral[a] < g.lateral[b]; });
    return lines;
}

ReducedField base_field(const DiscreteField& field, const GapGeometry& geom) {
    ReducedField out;
    out.m = geom.n - 1;
    out.epsilon = geom.epsilon;
    out.signed_lateral = field.grid->signed_lateral();
    return out;
}

// Signed slope of a radial profile along x_1 (n = 2) or along the ray.
double slope(const RadialProfile& p, double t) {
    return t < 0.0 ? -p.derivative(-t) : p.derivative(t);
}

// Second-order derivative at node k on a non-uniform grid (one-sided at ends).
double derivative(const std::vector<double>& x, const std::vector<double>& f, std::size_t k) {
    const std::size_t n = x.size();
    std::size_t a, b, c;
    if (k == 0) {
        a = 0, b = 1, c = 2;
    } else if (k + 1 == n) {
        a = n - 3, b = n - 2, c = n - 1;
    } else {
        a = k - 1, b = k, c = k + 1;
    }
    // Derivative at x[k] of the quadratic through the three points.
    const double xa = x[a], xb = x[b], xc = x[c], xk = x[k];
    const double la = ((xk - xb) + (xk - xc)) / ((xa - xb) * (xa - xc));
    const double lb = ((xk - xa) + (xk - xc)) / ((xb - xa) * (xb - xc));
    const double lc = ((xk - xa) + (xk - xb)) / ((xc - xa) * (xc - xb));
    return la * f[a] + lb * f[b] + lc * f[c];
}

void thomas(std::vector<double> lo, std::vector<double> di, std::vector<double> up,
            std::vector<double>& rhs) {
    const std::size_t n = di.size();
    for (std::size_t k = 1; k < n; ++k) {
        const double w = lo[k] / di[k - 1];
        di[k] -= w * up[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    rhs[n - 1] /= di[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) rhs[k] = (rhs[k] - up[k] * rhs[k + 1]) / di[k];
}

ReducedField solve_radial(const DegenerateProblem& p, const std::vector<double>& r) {
    const int m = p.m;
    const std::size_t nn = r.size();
    const std::size_t cells = nn - 1;
    auto a = [&](double s) { return p.coefficient(s); };
    auto source = [&](double s) { return p.G(s) * power(s, m - 1); };
    std::vector<double> g_cell(cells), i0(cells, 0.0), jk(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        const double lo = r[c], hi = r[c + 1];
        g_cell[c] = integrate(source, lo, hi);
        if (c > 0) i0[c] = integrate([&](double s) { return 1.0 / (a(s) * power(s, m - 1)); }, lo, hi);
        // Flux of G accumulated from r_c, then w' contribution; K from F.
        jk[c] = integrate(
            [&](double s) {
                const double acc = integrate(source, lo, s);
                const double w = s > 0.0 ? acc / power(s, m - 1) : 0.0;
                return (w + p.F(s)) / a(s);
            },
            lo, hi);
    }
    // Unknowns w_0 .. w_{N-1}; w_N is the boundary value.
    const std::size_t n = nn - 1;
    const double wb = p.boundary(p.rho);
    std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0), rhs(n, 0.0);
    // Node 0: Pi(0) = 0 gives w_1 - w_0 = J_0.
    di[0] = -1.0;
    if (n > 1) up[0] = 1.0; else rhs[0] -= wb;
    rhs[0] += jk[0];
    for (std::size_t k = 1; k < n; ++k) {
        // (w_{k+1} - w_k - J_k) / I_k = Pi_{k-1} + G_{k-1}, with
        // Pi_{k-1} = (w_k - w_{k-1} - J_{k-1}) / I_{k-1} for k > 1 and 0 for k = 1.
        const double ik = i0[k];
        di[k] = -1.0 / ik;
        rhs[k] = jk[k] / ik + g_cell[k - 1];
        if (k + 1 < n) up[k] = 1.0 / ik; else rhs[k] -= wb / ik;
        if (k > 1) {
            const double ip = i0[k - 1];
            di[k] -= 1.0 / ip;
            lo[k] = 1.0 / ip;
            rhs[k] -= jk[k - 1] / ip;
        }
    }
    std::vector<double> sol = rhs;
    thomas(lo, di, up, sol);

    ReducedField out;
    out.m = m;
    out.epsilon = p.epsilon;
    out.r = r;
    out.values = sol;
    out.values.push_back(wb);
    double res = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double ax = di[k] * sol[k];
        if (k > 0) ax += lo[k] * sol[k - 1];
        if (k + 1 < n) ax += up[k] * sol[k + 1];
        res += (ax - rhs[k]) * (ax - rhs[k]);
        nb += rhs[k] * rhs[k];
    }
    out.residual = nb > 0.0 ? std::sqrt(res / nb) : std::sqrt(res);
    return out;
}

ReducedField solve_polar(const DegenerateProblem& p, const std::vector<double>& r, int nt) {
    if (p.m != 2) throw UnsupportedInput("polar mode needs a two-dimensional base");
    if (nt < 8 || nt % 4 != 0) throw InputError("n_theta must be a multiple of 4, at least 8");
    const int nr = static_cast<int>(r.size());
    const double dth = 2.0 * std::numbers::pi / nt;
    auto theta = [&](int l) { return dth * l; };
    auto a = [&](double s) { return p.coefficient(s); };
    // Unknown 0 is the centre, ring k (1 <= k < nr - 1) node l is 1 + (k-1) nt + l.
    const int unknowns = 1 + (nr - 2) * nt;
    auto id = [&](int k, int l) { return k == 0 ? 0 : 1 + (k - 1) * nt + ((l % nt) + nt) % nt; };
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
    auto half = [&](int k) { return 0.5 * (r[k] + r[k + 1]); };
    auto couple = [&](int row, int k2, int l2, double t) {
        // Adds t (w_row - w_other) to row; boundary ring goes to the rhs.
        trip.emplace_back(row, row, t);
        if (k2 == nr - 1)
            rhs[row] += t * p.boundary(r[k2], theta(l2));
        else
            trip.emplace_back(row, id(k2, l2), -t);
    };
    // Centre: flux to ring 1 through r_{1/2} with a linear profile.
    {
        const double t0 = a(half(0)) * half(0) * dth / r[1];
        for (int l = 0; l < nt; ++l) couple(0, 1, l, t0);
        const double area = std::numbers::pi * half(0) * half(0);
        rhs[0] -= p.G(0.0) * area;
        for (int l = 0; l < nt; ++l) rhs[0] -= p.F(half(0), theta(l)) * half(0) * dth;
    }
    for (int k = 1; k + 1 < nr; ++k) {
        const double rin = half(k - 1), rout = half(k);
        const double t_in = k == 1 ? a(rin) * rin * dth / r[1]
                                   : dth / integrate([&](double s) { return 1.0 / (a(s) * s); },
                                                     r[k - 1], r[k]);
        const double t_out =
            dth / integrate([&](double s) { return 1.0 / (a(s) * s); }, r[k], r[k + 1]);
        const double t_th = integrate([&](double s) { return a(s) / s; }, rin, rout) / dth;
        const double area = 0.5 * (rout * rout - rin * rin) * dth;
        for (int l = 0; l < nt; ++l) {
            const int row = id(k, l);
            couple(row, k - 1, l, t_in);
            couple(row, k + 1, l, t_out);
            couple(row, k, l - 1, t_th);
            couple(row, k, l + 1, t_th);
            const double th = theta(l);
            rhs[row] += -p.G(r[k], th) * area + p.F(rin, th) * rin * dth - p.F(rout, th) * rout * dth;
        }
    }
    Eigen::SparseMatrix<double> mat(unknowns, unknowns);
    mat.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(mat);
    if (ldlt.info() != Eigen::Success) throw SolverError("polar degenerate factorization failed", {});
    const Eigen::VectorXd w = ldlt.solve(rhs);

    ReducedField out;
    out.m = 2;
    out.epsilon = p.epsilon;
    out.r = r;
    out.n_theta = nt;
    out.values.resize(static_cast<std::size_t>(nr) * nt);
    for (int k = 0; k < nr; ++k)
        for (int l = 0; l < nt; ++l)
            out.values[static_cast<std::size_t>(k) * nt + l] =
                k == nr - 1 ? p.boundary(r[k], theta(l)) : w[id(k, l)];
    const double nb = rhs.norm();
    out.residual = (mat * w - rhs).norm() / (nb > 0.0 ? nb : 1.0);
    return out;
}

}  // namespace

BaseFunction BaseFunction::zero() { return {}; }

BaseFunction BaseFunction::constant(double c) {
    return {[c](double, double) { return c; }, true};
}

BaseFunction BaseFunction::of_radius(std::function<double(double)> f) {
    return {[f = std::move(f)](double r, double) { return f(r); }, true};
}

BaseFunction BaseFunction::polar(std::function<double(double, double)> f) {
    return {std::move(f), false};
}

double ReducedField::theta(int l) const {
    return n_theta > 0 ? 2.0 * std::numbers::pi * l / n_theta : 0.0;
}

double ReducedField::oscillation() const {
    if (values.empty()) throw DomainError("empty reduced field");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
}

double ReducedField::oscillation(double center, double radius) const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const int stride = std::max(1, n_theta);
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double off = signed_lateral ? std::abs(r[k] - center) : std::abs(std::abs(r[k]) - center);
        if (off > radius * (1.0 + 1e-12)) continue;
        for (int l = 0; l < stride; ++l) {
            const double v = values[k * stride + l];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi >= lo)) throw DomainError("no base node in the requested disk");
    return hi - lo;
}

ReducedField average_field(const DiscreteField& field, const GapGeometry& geom) {
    const CurvilinearGrid& g = *field.grid;
    ReducedField out = base_field(field, geom);
    for (int i : gap_lines(g, geom)) {
        out.r.push_back(g.lateral[i]);
        out.values.push_back(simpson_mean(line_values(field, i)));
    }
    return out;
}

ReducedField assemble_F_tilde(const DiscreteField& field, const GapGeometry& geom) {
    const CurvilinearGrid& g = *field.grid;
    ReducedField out = base_field(field, geom);
    const int nj = g.nj;
    for (int i : gap_lines(g, geom)) {
        const double t = g.lateral[i];
        const double dg = slope(geom.g, t), df = slope(geom.f, t);
        const std::vector<double> v = line_values(field, i);
        std::vector<double> integrand(nj);
        const double hs = 1.0 / (nj - 1);
        for (int j = 0; j < nj; ++j) {
            double us;
            if (j > 0 && j + 1 < nj)
                us = (v[j + 1] - v[j - 1]) / (2.0 * hs);
            else if (j == 0)
                us = (-1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2]) / hs;
            else
                us = (1.5 * v[nj - 1] - 2.0 * v[nj - 2] + 0.5 * v[nj - 3]) / hs;
            const double s = j * hs;
            integrand[j] = ((s - 1.0) * dg - s * df) * us;
        }
        out.r.push_back(t);
        out.values.push_back(simpson_mean(integrand));
    }
    return out;
}

double weighted_sup_norm(const ReducedField& h, double t, double radius) {
    double best = 0.0;
    const int stride = std::max(1, h.n_theta);
    for (std::size_t k = 0; k < h.r.size(); ++k) {
        if (std::abs(h.r[k]) > radius * (1.0 + 1e-12)) continue;
        const double w = std::pow(h.epsilon + h.r[k] * h.r[k], t);
        for (int l = 0; l < stride; ++l) best = std::max(best, std::abs(h.values[k * stride + l]) / w);
    }
    return best;
}

ReducedField solve_degenerate(const DegenerateProblem& p, const DegenerateOptions& options) {
    if (!(p.rho > 0.0)) throw DomainError("rho must be positive");
    if (p.m < 1) throw DomainError("base dimension must be at least 1");
    if (!(p.epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (!(options.refine > 0.0)) throw InputError("refine must be positive");
    for (double r : {0.25 * p.rho, 0.5 * p.rho, p.rho})
        if (!(p.A.value(r) > 0.0)) throw DomainError("coefficient A must be positive away from 0");
    const std::vector<double> r = radial_nodes(p.epsilon, p.rho, options.breakpoints, options.refine);
    if (options.mode == DegenerateMode::Polar) return solve_polar(p, r, options.n_theta);
    if (!p.F.radial || !p.G.radial || !p.boundary.radial)
        throw UnsupportedInput("radial mode needs radial F, G and boundary data");
    return solve_radial(p, r);
}

double RadialOracle::operator()(double r) const {
    return G0 / (2.0 * m) * (std::log(epsilon + r * r) - std::log(epsilon + rho * rho));
}

double RadialOracle::oscillation() const {
    return std::abs(G0) / (2.0 * m) * std::log((epsilon + rho * rho) / epsilon);
}

RadialOracle radial_oracle(double epsilon, int m, double G0, double rho) {
    if (m < 1) throw DomainError("base dimension must be at least 1");
    if (!(epsilon > 0.0) || !(rho > 0.0)) throw DomainError("epsilon and rho must be positive");
    return {epsilon, m, G0, rho};
}

double LogBarriers::lower(double r) const {
    if (psi0 == 0.0) return 0.0;
    const double l = std::log((epsilon + gap.value(r)) / (epsilon + gap.value(rho)));
    return std::min(M * psi0 * l, psi0 / M * l);
}

double LogBarriers::upper(double r) const {
    if (psi0 == 0.0) return 0.0;
    const double l = std::log((epsilon + gap.value(r)) / (epsilon + gap.value(rho)));
    return std::max(M * psi0 * l, psi0 / M * l);
}

LogBarriers log_barrier_bounds(const GapGeometry& geom, double psi0, double rho) {
    if (!(rho > 0.0)) throw DomainError("rho must be positive");
    LogBarriers out;
    out.psi0 = psi0;
    out.rho = rho;
    out.epsilon = geom.epsilon;
    out.gap = geom.f - geom.g;
    const int m = geom.n - 1;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    constexpr int kSamples = 10000;
    for (int k = 0; k < kSamples; ++k) {
        const double lap = out.gap.laplacian(rho * k / (kSamples - 1), m);
        lo = std::min(lo, lap);
        hi = std::max(hi, lap);
    }
    if (!(lo > 0.0)) throw DomainError("Laplacian of f - g is not positive on the ball");
    out.M = std::max(hi, 1.0 / lo);
    return out;
}

HarnackReport harnack_decay(const DegenerateProblem& p, const DegenerateOptions& options) {
    if (!(p.rho > std::sqrt(p.epsilon)))
        throw DomainError("Harnack decay needs rho > sqrt(eps)");
    HarnackReport out;
    for (int k : {1, 2}) {
        DegenerateProblem q = p;
        q.m = 2;
        q.F = BaseFunction::zero();
        q.G = BaseFunction::zero();
        q.boundary = BaseFunction::polar([k](double, double th) { return std::cos(k * th); });
        DegenerateOptions o = options;
        o.mode = DegenerateMode::Polar;
        const ReducedField w = solve_degenerate(q, o);
        const double inner = w.oscillation(0.0, 0.5 * q.rho);
        const double outer = w.oscillation(q.rho, 0.0);
        out.ratios.push_back(inner / outer);
        out.beta = std::max(out.beta, inner / outer);
    }
    return out;
}

ConsistencyReport reduced_consistency(const DiscreteField& field, const GapGeometry& geom,
                                      const BoundaryData& bc, double radius) {
    if (radius < 0.0) radius = 0.5 * geom.R;
    const ReducedField ubar = average_field(field, geom);
    const ReducedField ft = assemble_F_tilde(field, geom);
    const int m = ubar.m;
    const std::vector<double>& t = ubar.r;
    const std::size_t n = t.size();
    std::vector<double> q(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double d = delta(geom, std::abs(t[k]));
        const double du = derivative(t, ubar.values, k);
        const double w = ubar.signed_lateral ? 1.0 : power(t[k], m - 1);
        q[k] = w * (d * du + ft.values[k]);
    }
    ConsistencyReport out;
    double rr = 0.0, pp = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (!(std::abs(t[k]) < radius) || (!ubar.signed_lateral && t[k] <= 0.0)) continue;
        const double w = ubar.signed_lateral ? 1.0 : power(t[k], m - 1);
        const double gs = slope(geom.g, t[k]);
        const double psi = bc.value(t[k], geom.g.value(std::abs(t[k]))) * std::sqrt(1.0 + gs * gs);
        const double res = derivative(t, q, k) / w + psi;
        const double vol = 0.5 * (t[k + 1] - t[k - 1]) * w;
        rr += res * res * vol;
        pp += psi * psi * vol;
        ++out.nodes;
    }
    out.residual_norm = std::sqrt(rr);
    out.psi_norm = std::sqrt(pp);
    out.relative = out.psi_norm > 0.0 ? out.residual_norm / out.psi_norm : out.residual_norm;
    return out;
}

}  // namespace gapfield
