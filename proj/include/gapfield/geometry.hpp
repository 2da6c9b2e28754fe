#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace gapfield {

/// Radial polynomial p(x') = sum_k c_k |x'|^{2k}, k = 1..K.
///
/// The constant term is structurally zero, so p(0') = 0 and grad p(0') = 0
/// hold for every profile. Coefficient 0 is the quadratic one.
class RadialProfile {
public:
    RadialProfile() = default;
    explicit RadialProfile(std::vector<double> coefficients);

    const std::vector<double>& coefficients() const { return coefficients_; }
    bool empty() const { return coefficients_.empty(); }

    double value(double r) const;
    /// d/dr along a ray.
    double derivative(double r) const;
    double second_derivative(double r) const;
    /// Laplacian in R^m of the radial function, p'' + (m-1) p'/r.
    double laplacian(double r, int m) const;

    RadialProfile operator-(const RadialProfile& other) const;
    bool operator==(const RadialProfile&) const = default;

private:
    std::vector<double> coefficients_;
};

/// Spheres closing the computational domain away from the gap.
struct Closure {
    double outer_radius = 1.0;      // ball D, lowest point at the origin
    double inclusion_radius = 0.5;  // inclusion D1, lowest point at (0', eps)

    bool operator==(const Closure&) const = default;
};

/// The eps-gap domain near the contact point.
///
/// Inclusion bottom x_n = eps + f(x'), outer boundary x_n = g(x') for
/// |x'| <= 2R. Beyond R both surfaces blend (C^2, quintic step) into the
/// spheres of `outer`; beyond 2R they coincide with the spheres.
struct GapGeometry {
    int n = 3;
    double epsilon = 1e-3;
    RadialProfile f{{1.0}};
    RadialProfile g{{0.0}};
    double R = 0.2;
    double kappa = 1.0;
    Closure outer;

    bool operator==(const GapGeometry&) const = default;

    int base_dimension() const { return n - 1; }

    /// Height of the closed inclusion surface over radius r <= 2R.
    double inclusion_height(double r) const;
    double inclusion_slope(double r) const;
    /// Height of the closed outer boundary over radius r <= 2R.
    double boundary_height(double r) const;
    double boundary_slope(double r) const;
    /// Local width of the closed gap, inclusion_height - boundary_height.
    double closed_gap(double r) const;
};

/// Gap width eps + f(z') - g(z'). Throws DomainError if |z'| > 2R.
double delta(const GapGeometry& geom, double radius);
double delta(const GapGeometry& geom, const Eigen::VectorXd& z_prime);

/// Canonical scale eps + |z'|^2. Throws DomainError if |z'| > 2R.
double eta(const GapGeometry& geom, double radius);
double eta(const GapGeometry& geom, const Eigen::VectorXd& z_prime);

struct ValidationCheck {
    std::string name;
    bool passed = true;
    double worst_radius = 0.0;  // sample |x'| with the largest violation
    double worst_violation = 0.0;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool passed() const;
    std::vector<std::string> failures() const;
};

/// Checks the profile hypotheses on 10^4 uniform samples of |x'| <= 2R and
/// that the closure produces a valid domain. Never throws; failures are
/// carried in the report.
ValidationReport validate(const GapGeometry& geom);

/// Sets of the gap neighbourhood used for oscillations and maxima.
///
/// Fields are axisymmetric, so a base point is given by its radial offset
/// from the contact axis (signed lateral coordinate when n = 2).
enum class RegionKind { GapPatch, BaseDisk, FlatCylinder, OuterComplement };

struct Region {
    RegionKind kind = RegionKind::GapPatch;
    double center = 0.0;
    double radius = 0.0;

    static Region gap_patch(double radius, double center = 0.0);
    static Region base_disk(double radius, double center = 0.0);
    static Region flat_cylinder(double radius, double center = 0.0);
    static Region outer_complement(double radius);

    /// True if lateral coordinate x' (signed for n = 2, radius otherwise)
    /// lies in the base projection of the region.
    bool contains_base(double lateral, bool signed_lateral) const;
};

/// Throws DomainError unless radius > 0 (and radius <= 2R for patches).
void check_region(const Region& region, const GapGeometry& geom);

}  // namespace gapfield
