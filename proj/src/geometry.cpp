#include "gapfield/geometry.hpp"

#include "gapfield/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gapfield {

namespace {

constexpr int kValidationSamples = 10000;

// Quintic smoothstep on [0, 1]; C^2 at both ends.
double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double smoothstep_slope(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

// Lower cap of a sphere of radius a whose lowest point is at height 0.
double cap(double a, double r) { return a - std::sqrt(a * a - r * r); }
double cap_slope(double a, double r) { return r / std::sqrt(a * a - r * r); }

double blended(double patch, double sphere, double r, double R) {
    return patch + smoothstep((r - R) / R) * (sphere - patch);
}

double blended_slope(double patch, double patch_slope, double sphere,
                     double sphere_slope, double r, double R) {
    const double t = (r - R) / R;
    const double w = smoothstep(t);
    return patch_slope + w * (sphere_slope - patch_slope) +
           smoothstep_slope(t) / R * (sphere - patch);
}

void check_radius(const GapGeometry& geom, double radius) {
    if (!(radius >= 0.0) || radius > 2.0 * geom.R * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "|z'| = " << radius << " outside the profile patch |z'| <= 2R = "
           << 2.0 * geom.R;
        throw DomainError(os.str());
    }
}

}  // namespace

RadialProfile::RadialProfile(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {}

double RadialProfile::value(double r) const {
    const double r2 = r * r;
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it)
        acc = (acc + *it) * r2;
    return acc;
}

double RadialProfile::derivative(double r) const {
    // d/dr c_k r^{2k} = 2k c_k r^{2k-1}
    const double r2 = r * r;
    double acc = 0.0;
    double power = r;
    for (std::size_t k = 1; k <= coefficients_.size(); ++k) {
        acc += 2.0 * static_cast<double>(k) * coefficients_[k - 1] * power;
        power *= r2;
    }
    return acc;
}

double RadialProfile::second_derivative(double r) const {
    const double r2 = r * r;
    double acc = 0.0;
    double power = 1.0;
    for (std::size_t k = 1; k <= coefficients_.size(); ++k) {
        const double kk = static_cast<double>(k);
        acc += 2.0 * kk * (2.0 * kk - 1.0) * coefficients_[k - 1] * power;
        power *= r2;
    }
    return acc;
}

double RadialProfile::laplacian(double r, int m) const {
    // Delta_m r^{2k} = 2k (2k + m - 2) r^{2k-2}; finite at the origin.
    const double r2 = r * r;
    double acc = 0.0;
    double power = 1.0;
    for (std::size_t k = 1; k <= coefficients_.size(); ++k) {
        const double kk = static_cast<double>(k);
        acc += 2.0 * kk * (2.0 * kk + m - 2.0) * coefficients_[k - 1] * power;
        power *= r2;
    }
    return acc;
}

RadialProfile RadialProfile::operator-(const RadialProfile& other) const {
    std::vector<double> out(std::max(coefficients_.size(), other.coefficients_.size()), 0.0);
    for (std::size_t k = 0; k < coefficients_.size(); ++k) out[k] += coefficients_[k];
    for (std::size_t k = 0; k < other.coefficients_.size(); ++k) out[k] -= other.coefficients_[k];
    return RadialProfile(std::move(out));
}

double GapGeometry::inclusion_height(double r) const {
    return epsilon + blended(f.value(r), cap(outer.inclusion_radius, r), r, R);
}

double GapGeometry::inclusion_slope(double r) const {
    const double a = outer.inclusion_radius;
    return blended_slope(f.value(r), f.derivative(r), cap(a, r), cap_slope(a, r), r, R);
}

double GapGeometry::boundary_height(double r) const {
    return blended(g.value(r), cap(outer.outer_radius, r), r, R);
}

double GapGeometry::boundary_slope(double r) const {
    const double a = outer.outer_radius;
    return blended_slope(g.value(r), g.derivative(r), cap(a, r), cap_slope(a, r), r, R);
}

double GapGeometry::closed_gap(double r) const {
    return inclusion_height(r) - boundary_height(r);
}

double delta(const GapGeometry& geom, double radius) {
    check_radius(geom, radius);
    return geom.epsilon + geom.f.value(radius) - geom.g.value(radius);
}

double delta(const GapGeometry& geom, const Eigen::VectorXd& z_prime) {
    return delta(geom, z_prime.norm());
}

double eta(const GapGeometry& geom, double radius) {
    check_radius(geom, radius);
    return geom.epsilon + radius * radius;
}

double eta(const GapGeometry& geom, const Eigen::VectorXd& z_prime) {
    return eta(geom, z_prime.norm());
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidationCheck& c) { return c.passed; });
}

std::vector<std::string> ValidationReport::failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
        if (c.passed) continue;
        std::ostringstream os;
        os << c.name << ": " << c.message;
        if (c.worst_violation != 0.0)
            os << " (worst at |x'| = " << c.worst_radius << ", violation "
               << c.worst_violation << ")";
        out.push_back(os.str());
    }
    return out;
}

ValidationReport validate(const GapGeometry& geom) {
    ValidationReport report;
    auto add = [&](std::string name, bool ok, std::string message) {
        ValidationCheck c;
        c.name = std::move(name);
        c.passed = ok;
        c.message = ok ? std::string() : std::move(message);
        report.checks.push_back(std::move(c));
        return &report.checks.back();
    };

    const bool scalars_ok = geom.n >= 2 && geom.epsilon > 0.0 && geom.R > 0.0 &&
                            geom.kappa > 0.0 && geom.kappa <= 1.0 &&
                            std::isfinite(geom.epsilon) && std::isfinite(geom.R);
    add("parameters", scalars_ok,
        "require n >= 2, epsilon > 0, R > 0 and kappa in (0, 1]");
    add("profiles", !geom.f.empty() && !geom.g.empty(),
        "f and g need at least the quadratic coefficient");
    if (!scalars_ok || geom.f.empty() || geom.g.empty()) return report;

    // f(0') = g(0') = 0 and vanishing gradients; evaluated, not assumed.
    const double origin = std::abs(geom.f.value(0.0)) + std::abs(geom.g.value(0.0)) +
                          std::abs(geom.f.derivative(0.0)) + std::abs(geom.g.derivative(0.0));
    add("origin", origin == 0.0, "f, g or their gradients do not vanish at 0'");

    const RadialProfile h = geom.f - geom.g;
    add("hessian", h.second_derivative(0.0) > 0.0, "D^2(f-g)(0') is not positive");

    ValidationCheck order{"f>=g", true, 0.0, 0.0, ""};
    ValidationCheck lower{"kappa-lower", true, 0.0, 0.0, ""};
    ValidationCheck upper{"kappa-upper", true, 0.0, 0.0, ""};
    const double rmax = 2.0 * geom.R;
    for (int k = 0; k < kValidationSamples; ++k) {
        const double r = rmax * k / (kValidationSamples - 1);
        const double diff = h.value(r);
        auto record = [r](ValidationCheck& c, double violation) {
            if (violation > 0.0 && violation > c.worst_violation) {
                c.passed = false;
                c.worst_violation = violation;
                c.worst_radius = r;
            }
        };
        record(order, -diff);
        // Relative tolerance so exact equality (kappa = 1, f - g = r^2) passes.
        const double r2 = r * r;
        record(lower, geom.kappa * r2 - diff - 1e-13 * r2);
        record(upper, diff - r2 / geom.kappa - 1e-13 * r2);
    }
    if (!order.passed) order.message = "f < g somewhere on |x'| <= 2R";
    if (!lower.passed) lower.message = "kappa |x'|^2 <= f - g violated";
    if (!upper.passed) upper.message = "f - g <= |x'|^2 / kappa violated";
    report.checks.push_back(order);
    report.checks.push_back(lower);
    report.checks.push_back(upper);

    const Closure& c = geom.outer;
    const bool spheres = c.inclusion_radius > 2.0 * geom.R && c.outer_radius > c.inclusion_radius;
    add("closure-radii", spheres,
        "need 2R < inclusion_radius < outer_radius so both caps are graphs over |x'| <= 2R");
    if (spheres) {
        ValidationCheck gap{"closure-gap", true, 0.0, 0.0, ""};
        for (int k = 0; k < kValidationSamples; ++k) {
            const double r = rmax * k / (kValidationSamples - 1);
            const double violation = -geom.closed_gap(r);
            if (violation >= 0.0 && violation >= gap.worst_violation) {
                gap.passed = false;
                gap.worst_violation = violation;
                gap.worst_radius = r;
            }
        }
        if (!gap.passed) gap.message = "blended inclusion touches or crosses the outer boundary";
        report.checks.push_back(gap);
    }
    return report;
}

Region Region::gap_patch(double radius, double center) {
    return {RegionKind::GapPatch, center, radius};
}
Region Region::base_disk(double radius, double center) {
    return {RegionKind::BaseDisk, center, radius};
}
Region Region::flat_cylinder(double radius, double center) {
    return {RegionKind::FlatCylinder, center, radius};
}
Region Region::outer_complement(double radius) {
    return {RegionKind::OuterComplement, 0.0, radius};
}

bool Region::contains_base(double lateral, bool signed_lateral) const {
    // For radial fields a disk around z' with |z'| = c meets the circle
    // |x'| = rho iff |rho - c| <= radius.
    const double offset = signed_lateral ? std::abs(lateral - center)
                                         : std::abs(std::abs(lateral) - center);
    if (kind == RegionKind::OuterComplement) return std::abs(lateral) >= radius;
    return offset <= radius;
}

void check_region(const Region& region, const GapGeometry& geom) {
    if (!(region.radius > 0.0)) throw DomainError("region radius must be positive");
    if (region.kind == RegionKind::GapPatch &&
        region.radius > 2.0 * geom.R * (1.0 + 1e-12))
        throw DomainError("gap patch radius exceeds 2R");
}

}  // namespace gapfield
