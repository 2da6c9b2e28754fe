#pragma once

#include "gapfield/geometry.hpp"
#include "gapfield/solver.hpp"

#include <functional>
#include <vector>

namespace gapfield {

/// Function on the (n-1)-dimensional base, radial or given in polar form.
/// Radial functions ignore theta.
struct BaseFunction {
    std::function<double(double r, double theta)> fn;
    bool radial = true;

    static BaseFunction zero();
    static BaseFunction constant(double c);
    static BaseFunction of_radius(std::function<double(double)> f);
    static BaseFunction polar(std::function<double(double, double)> f);

    double operator()(double r, double theta = 0.0) const { return fn ? fn(r, theta) : 0.0; }
};

/// Values on base nodes. Radial fields (n_theta = 0) store one value per
/// radius; polar fields store values[k * n_theta + l] at (r[k], theta_l),
/// with r[0] = 0 a single centre value repeated over l.
struct ReducedField {
    int m = 2;              // base dimension n - 1
    double epsilon = 0.0;
    bool signed_lateral = false;  // r holds the signed x_1 (n = 2)
    std::vector<double> r;
    std::vector<double> values;
    int n_theta = 0;
    double residual = 0.0;  // relative residual of the linear system, if solved

    double theta(int l) const;
    double oscillation() const;
    /// Oscillation over nodes with |r - center| <= radius (radial fields).
    double oscillation(double center, double radius) const;
};

/// Transverse average of u across the gap on each vertical gap line.
ReducedField average_field(const DiscreteField& field, const GapGeometry& geom);

/// Radial component of F~(x') = int [(s - 1) g' - s f'] u_s ds on the gap lines.
ReducedField assemble_F_tilde(const DiscreteField& field, const GapGeometry& geom);

/// sup over base nodes with |x'| <= radius of |H| / (eps + |x'|^2)^t.
double weighted_sup_norm(const ReducedField& h, double t, double radius);

/// div[(eps + A(|x'|)) grad w] = div F + G in B_rho in R^m, w given on the sphere.
struct DegenerateProblem {
    double epsilon = 1e-3;
    int m = 2;
    RadialProfile A{{1.0}};
    BaseFunction F = BaseFunction::zero();  // radial component of the flux
    BaseFunction G = BaseFunction::zero();
    double rho = 0.5;
    BaseFunction boundary = BaseFunction::zero();
    double sigma = 0.0;

    double coefficient(double r) const { return epsilon + A.value(r); }
};

enum class DegenerateMode { Radial, Polar };

struct DegenerateOptions {
    DegenerateMode mode = DegenerateMode::Radial;
    int n_theta = 64;                  // polar mode only
    std::vector<double> breakpoints;   // extra radii forced onto the grid
    double refine = 1.0;               // divides the radial spacing
};

/// Radial mode: exact-flux finite volumes on a graded grid, spacing
/// proportional to max(sqrt(eps)/8, r/32). Polar mode (m = 2): the same
/// radial grid times a uniform angular grid. Throws UnsupportedInput for
/// non-radial data in radial mode.
ReducedField solve_degenerate(const DegenerateProblem& p, const DegenerateOptions& options = {});

/// w(r) = (G0 / (2m)) [ln(eps + r^2) - ln(eps + rho^2)] for the coefficient
/// eps + r^2 with constant source G0 and w(rho) = 0.
struct RadialOracle {
    double epsilon;
    int m;
    double G0;
    double rho;

    double operator()(double r) const;
    /// Oscillation over [0, rho].
    double oscillation() const;
};

RadialOracle radial_oracle(double epsilon, int m, double G0, double rho);

/// Log barriers M psi0 ln(delta / delta(rho)) and (psi0 / M) ln(delta / delta(rho)),
/// with M >= Delta delta >= 1/M on |x'| <= rho. Both vanish at |x'| = rho.
struct LogBarriers {
    double M = 0.0;
    double psi0 = 0.0;
    double rho = 0.0;
    double epsilon = 0.0;
    RadialProfile gap;  // f - g

    double lower(double r) const;
    double upper(double r) const;
};

LogBarriers log_barrier_bounds(const GapGeometry& geom, double psi0, double rho);

struct HarnackReport {
    double beta = 0.0;
    std::vector<double> ratios;  // osc(B_{rho/2}) / osc(dB_rho) for cos k theta, k = 1, 2
};

/// Oscillation decay of homogeneous solutions (F and G of p are ignored).
/// Throws DomainError unless rho > sqrt(eps).
HarnackReport harnack_decay(const DegenerateProblem& p, const DegenerateOptions& options = {});

struct ConsistencyReport {
    double residual_norm = 0.0;  // base L2 norm of div(delta grad u~) + div F~ + psi
    double psi_norm = 0.0;
    double relative = 0.0;       // residual_norm / psi_norm, or residual_norm if psi vanishes
    int nodes = 0;
};

/// Residual of the averaged field in the reduced equation on 0 < |x'| < radius
/// (default R / 2). psi = phi(x', g(x')) sqrt(1 + |grad g|^2).
ConsistencyReport reduced_consistency(const DiscreteField& field, const GapGeometry& geom,
                                      const BoundaryData& bc, double radius = -1.0);

}  // namespace gapfield
