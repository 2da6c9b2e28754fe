#include "gapfield/transform.hpp"

#include "gapfield/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace gapfield {

namespace {

// Slack for points produced by floating-point arithmetic on the boundary.
constexpr double kSlabSlack = 1e-12;

Eigen::VectorXd radial_gradient(const RadialProfile& p, const Eigen::VectorXd& xp) {
    const double r = xp.norm();
    if (r == 0.0) return Eigen::VectorXd::Zero(xp.size());
    return p.derivative(r) / r * xp;
}

void check_point(const GapGeometry& geom, const Eigen::VectorXd& p) {
    if (p.size() != geom.n) throw DomainError("point dimension does not match geometry");
}

}  // namespace

GapChart::GapChart(const GapGeometry& geom, Eigen::VectorXd z_prime)
    : geom_(&geom), z_prime_(std::move(z_prime)) {
    if (z_prime_.size() != geom.n - 1)
        throw DomainError("base point must have n - 1 coordinates");
    delta_z_ = delta(geom, z_prime_);
    eta_z_ = eta(geom, z_prime_);
}

Eigen::VectorXd GapChart::flatten(const Eigen::VectorXd& x) const {
    check_point(*geom_, x);
    const Eigen::VectorXd xp = x.head(geom_->n - 1);
    const double r = xp.norm();
    const double d = delta(*geom_, r);
    const double g = geom_->g.value(r);
    const double s = (x[geom_->n - 1] - g) / d;
    if (s < -kSlabSlack || s > 1.0 + kSlabSlack)
        throw DomainError("point lies outside the gap slab g <= x_n <= eps + f");
    Eigen::VectorXd y = x;
    y[geom_->n - 1] = 2.0 * delta_z_ * (s - 0.5);
    return y;
}

Eigen::VectorXd GapChart::unflatten(const Eigen::VectorXd& y) const {
    check_point(*geom_, y);
    const double yn = y[geom_->n - 1];
    if (std::abs(yn) > delta_z_ * (1.0 + kSlabSlack))
        throw DomainError("|y_n| exceeds delta(z')");
    const double r = y.head(geom_->n - 1).norm();
    const double d = delta(*geom_, r);
    Eigen::VectorXd x = y;
    x[geom_->n - 1] = geom_->g.value(r) + d * (yn / (2.0 * delta_z_) + 0.5);
    return x;
}

Eigen::MatrixXd GapChart::jacobian(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd y = flatten(x);
    const int n = geom_->n;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
    const CoefficientMatrix c = coefficients(y);
    J.row(n - 1) = c.e.transpose();
    return J;
}

CoefficientMatrix GapChart::coefficients(const Eigen::VectorXd& y) const {
    check_point(*geom_, y);
    const int n = geom_->n;
    const double yn = y[n - 1];
    if (std::abs(yn) > delta_z_ * (1.0 + kSlabSlack))
        throw DomainError("|y_n| exceeds delta(z')");
    const Eigen::VectorXd yp = y.head(n - 1);
    const double dy = delta(*geom_, yp);
    const Eigen::VectorXd dg = radial_gradient(geom_->g, yp);
    const Eigen::VectorXd df = radial_gradient(geom_->f, yp);

    CoefficientMatrix out;
    out.e.resize(n);
    out.e.head(n - 1) = (dg * (yn - delta_z_) - df * (yn + delta_z_)) / dy;
    out.e[n - 1] = 2.0 * delta_z_ / dy;

    const double scale = dy / (2.0 * delta_z_);
    out.a = Eigen::MatrixXd::Identity(n, n);
    out.a.col(n - 1).head(n - 1) = out.e.head(n - 1);
    out.a.row(n - 1).head(n - 1) = out.e.head(n - 1).transpose();
    out.a(n - 1, n - 1) = out.e.squaredNorm();
    out.a *= scale;
    return out;
}

CoefficientBounds coefficient_bounds_check(const GapGeometry& geom,
                                           const Eigen::VectorXd& z_prime,
                                           int sample_count, std::uint64_t seed,
                                           int holder_pairs) {
    if (!(z_prime.norm() < geom.R))
        throw DomainError("coefficient bounds need |z'| < R");
    const GapChart chart(geom, z_prime);
    const int n = geom.n;
    const int m = n - 1;
    const double radius = 0.25 * std::sqrt(chart.eta_base());
    const double dz = chart.delta_base();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto sample = [&]() {
        Eigen::VectorXd y(n);
        Eigen::VectorXd dir(m);
        for (int i = 0; i < m; ++i) dir[i] = normal(rng);
        const double len = dir.norm();
        const double rad = radius * std::pow(unit(rng), 1.0 / m);
        y.head(m) = z_prime + (len > 0.0 ? rad / len : 0.0) * dir;
        y[m] = dz * (2.0 * unit(rng) - 1.0);
        return y;
    };

    CoefficientBounds out;
    out.lambda_min = std::numeric_limits<double>::infinity();
    out.lambda_max = 0.0;
    const double sqrt_eta = std::sqrt(chart.eta_base());
    for (int k = 0; k < sample_count; ++k) {
        // The first sample is the base point itself.
        Eigen::VectorXd y = k == 0 ? Eigen::VectorXd::Zero(n) : sample();
        if (k == 0) y.head(m) = z_prime;
        const CoefficientMatrix c = chart.coefficients(y);
        for (int i = 0; i < n; ++i) {
            out.lambda_min = std::min(out.lambda_min, c.a(i, i));
            out.lambda_max = std::max(out.lambda_max, c.a(i, i));
        }
        for (int j = 0; j < m; ++j)
            out.c_hat = std::max(out.c_hat, std::abs(c.a(m, j)) / sqrt_eta);
        ++out.samples;
    }

    for (int k = 0; k < holder_pairs; ++k) {
        const Eigen::VectorXd y1 = sample();
        const Eigen::VectorXd y2 = sample();
        const double dist = (y1 - y2).norm();
        if (dist == 0.0) continue;
        const CoefficientMatrix c1 = chart.coefficients(y1);
        const CoefficientMatrix c2 = chart.coefficients(y2);
        for (int j = 0; j < m; ++j)
            out.holder_anj = std::max(out.holder_anj,
                                      std::abs(c1.a(m, j) - c2.a(m, j)) / std::sqrt(dist));
        ++out.pairs;
    }
    // The weight eta^{(2 mu - 1) / 2} is 1 at mu = 1/2.
    out.holder_scaled = out.holder_anj;
    return out;
}

}  // namespace gapfield
