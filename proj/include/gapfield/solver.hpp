#pragma once

#include "gapfield/geometry.hpp"
#include "gapfield/grid.hpp"
#include "gapfield/linalg.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gapfield {

enum class BoundaryKind { Neumann, Dirichlet };
enum class DataProfile { Bump, Power, Custom };

/// Outer boundary datum phi on dD.
///
/// Bump: phi0 (1 - (|x'|/R)^2)^3 near the contact. Power: |x'|^alpha times
/// the bump, so phi(0') = 0. Neumann data add c * chi on the far cap, with
/// chi a smooth step that is 1 above height 1.5 * outer_radius and c set so
/// the discrete total flux vanishes.
struct BoundaryData {
    BoundaryKind kind = BoundaryKind::Neumann;
    DataProfile profile = DataProfile::Bump;
    double phi0 = 1.0;
    double alpha = 0.8;
    double R = 0.2;
    double outer_radius = 1.0;
    bool balance_far_cap = true;
    std::function<double(double r, double z)> custom;

    static BoundaryData bump(BoundaryKind kind, const GapGeometry& geom, double phi0);
    static BoundaryData power(BoundaryKind kind, const GapGeometry& geom, double phi0,
                              double alpha);
    static BoundaryData function(BoundaryKind kind, std::function<double(double, double)> fn);

    /// Datum before far-cap balancing at boundary point (r, z).
    double value(double r, double z) const;
    double far_cap_weight(double z) const;
    double phi_at_origin() const;
};

enum class Gauge { None, MeanZeroOutsideCore };

struct DiscreteField {
    std::shared_ptr<const CurvilinearGrid> grid;
    Eigen::VectorXd values;
    Gauge gauge = Gauge::None;
    double gauge_radius = 0.0;      // nodes of gap lines with |t| < gauge_radius are excluded
    Eigen::VectorXd boundary_load;  // Neumann load vector, empty otherwise
    double far_cap_constant = 0.0;
    SolveStats stats;
    double residual = 0.0;          // relative residual of the discrete system
};

struct SolveOptions {
    double tolerance = 1e-10;
    Preconditioner preconditioner = Preconditioner::IncompleteCholesky;
    double gauge_radius = -1.0;  // < 0: R / 4, the half of Rtilde = R / 2
};

struct LinearSystem {
    SparseMatrix matrix;         // full stiffness over all nodes
    Eigen::VectorXd rhs;         // Neumann load (projected) or zero
    Eigen::VectorXd lumped_mass; // integral of each shape function with the weight
    bool neumann = true;
    double far_cap_constant = 0.0;
};

/// Q1 Galerkin assembly of div(w grad u) = 0 with the axisymmetric weight w.
LinearSystem assemble_system(const CurvilinearGrid& grid, const BoundaryData& bc);

DiscreteField solve_neumann(const GapGeometry& geom, const BoundaryData& bc,
                            const CurvilinearGrid& grid, const SolveOptions& options = {});
/// Variant without a gap geometry; the gauge averages over every node.
DiscreteField solve_neumann(const BoundaryData& bc, const CurvilinearGrid& grid,
                            const SolveOptions& options = {});
DiscreteField solve_dirichlet(const GapGeometry& geom, const BoundaryData& bc,
                              const CurvilinearGrid& grid, const SolveOptions& options = {});
DiscreteField solve_dirichlet(const BoundaryData& bc, const CurvilinearGrid& grid,
                              const SolveOptions& options = {});

/// Wraps nodal values (e.g. an analytic field) without solving.
DiscreteField make_field(const CurvilinearGrid& grid, Eigen::VectorXd values);

/// Fixes the additive constant: zero weighted mean over the nodes outside
/// the core of radius gauge_radius. Values are quantized relative to their
/// oscillation so that adding a constant that is a multiple of 2^-34 times
/// the oscillation scale leaves the result bitwise unchanged.
void normalize_gauge(DiscreteField& field);
/// Weighted mean over the gauge set.
double gauge_mean(const DiscreteField& field);

bool node_in_region(const CurvilinearGrid& grid, int node, const Region& region);

struct NodalGradient {
    Eigen::VectorXd dr;  // derivative along the lateral coordinate
    Eigen::VectorXd dz;  // derivative along x_n
};

NodalGradient nodal_gradient(const DiscreteField& field);

/// Gradient (d/dr, d/dx_n) at a point of the domain, interpolated from the
/// nodal gradients. Throws DomainError outside the grid.
Eigen::Vector2d gradient(const DiscreteField& field, double r, double z);

struct GradientMax {
    double value = 0.0;   // max |grad u|
    int node = -1;        // smallest index attaining it
    double r = 0.0;
    double z = 0.0;
    double max_dn = 0.0;  // max |d_n u| over the same nodes
};

/// Max over the whole grid, or over the nodes of a region.
GradientMax max_gradient(const DiscreteField& field);
GradientMax max_gradient(const DiscreteField& field, const Region& region);

/// sup - inf of the nodal values. Throws DomainError if no node is in the region.
double oscillation(const DiscreteField& field);
double oscillation(const DiscreteField& field, const Region& region);

struct EnergyReport {
    double energy = 0.0;   // integral of w |grad u|^2
    double pairing = 0.0;  // boundary pairing of u with phi (Neumann only)
    bool has_pairing = false;
};

EnergyReport energy(const DiscreteField& field);

/// Binary dump: "GAPF", u32 version, u32 n, u32 ni, u32 nj, then r, z and
/// values as little-endian f64 arrays.
void write_field_dump(const DiscreteField& field, const std::string& path);

struct FieldDump {
    int n = 0;
    int ni = 0;
    int nj = 0;
    std::vector<double> r, z, values;
};

FieldDump read_field_dump(const std::string& path);

}  // namespace gapfield
