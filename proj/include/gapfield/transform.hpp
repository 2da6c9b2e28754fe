#pragma once

#include "gapfield/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace gapfield {

/// Transformed operator at a point of the flattened cylinder.
struct CoefficientMatrix {
    Eigen::MatrixXd a;  // symmetric n x n
    Eigen::VectorXd e;  // e^1..e^{n-1}, e^n = 2 delta(z') / delta(y')
};

/// Gap-flattening chart based at z'.
///
/// Maps the slab g(x') <= x_n <= eps + f(x') onto |y_n| <= delta(z') with
/// y' = x' and y_n = 2 delta(z') ((x_n - g(x')) / delta(x') - 1/2).
/// Points carry all n coordinates, the last one being x_n.
class GapChart {
public:
    GapChart(const GapGeometry& geom, Eigen::VectorXd z_prime);

    const GapGeometry& geometry() const { return *geom_; }
    const Eigen::VectorXd& base_point() const { return z_prime_; }
    double delta_base() const { return delta_z_; }
    double eta_base() const { return eta_z_; }

    Eigen::VectorXd flatten(const Eigen::VectorXd& x) const;
    Eigen::VectorXd unflatten(const Eigen::VectorXd& y) const;
    /// d y / d x at x.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
    CoefficientMatrix coefficients(const Eigen::VectorXd& y) const;

private:
    const GapGeometry* geom_;
    Eigen::VectorXd z_prime_;
    double delta_z_;
    double eta_z_;
};

struct CoefficientBounds {
    double lambda_min = 0.0;    // smallest diagonal entry seen
    double lambda_max = 0.0;    // largest diagonal entry seen
    double c_hat = 0.0;         // max |a^{nj}| / sqrt(eta(z')), j < n
    double holder_anj = 0.0;    // max |a^{nj}(y1) - a^{nj}(y2)| / |y1 - y2|^{1/2}
    double holder_scaled = 0.0; // holder_anj * eta(z')^{(2 mu - 1) / 2}, mu = 1/2
    int samples = 0;
    int pairs = 0;
};

/// Samples the flattened cylinder Q_{delta, sqrt(eta(z'))/4}(z) and reports
/// the empirical coefficient bounds. Deterministic for a given seed.
CoefficientBounds coefficient_bounds_check(const GapGeometry& geom,
                                           const Eigen::VectorXd& z_prime,
                                           int sample_count,
                                           std::uint64_t seed = 0,
                                           int holder_pairs = 100000);

}  // namespace gapfield
