#pragma once

#include "gapfield/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gapfield {

struct ResolutionPolicy {
    int n_gap = 16;                 // transverse cells across the gap
    double lateral_fraction = 0.125; // spacing near the contact, in units of sqrt(eps)
    double growth = 1.1;            // geometric coarsening ratio away from the contact
    double max_spacing = 0.025;     // cap on the far-field lateral spacing
    std::size_t max_unknowns = 4000000;
    double fixed_lateral_spacing = 0.0;  // > 0 disables the sqrt(eps) grading

    bool operator==(const ResolutionPolicy&) const = default;
};

enum NodeTag : std::uint8_t {
    kInterior = 0,
    kOuter = 1,      // on the outer boundary, j = 0
    kInclusion = 2,  // on the inclusion boundary, j = nj - 1
    kAxis = 4,       // on the symmetry axis of a meridian grid
};

/// Structured body-fitted grid of the meridian (n >= 3) or full (n = 2)
/// cross-section. Node (i, j) has index i * nj + j; j runs from the outer
/// boundary to the inclusion, i runs laterally along the gap.
struct CurvilinearGrid {
    int n = 2;
    int ni = 0;
    int nj = 0;
    bool periodic = false;    // lateral index wraps around
    bool axis_ends = false;   // lines i = 0 and i = ni - 1 lie on the axis
    double epsilon = 0.0;

    // Node coordinates: r is |x'| on meridian grids and the signed x_1 for n = 2.
    std::vector<double> r;
    std::vector<double> z;
    std::vector<double> weight;  // r^{n-2}, 1 when n = 2
    std::vector<std::uint8_t> tags;

    // Per lateral line: whether it is a vertical line x' = t across the gap,
    // and its t (signed for n = 2). Non-gap lines carry t = NaN.
    std::vector<char> gap_line;
    std::vector<double> lateral;

    std::size_t size() const { return r.size(); }
    int index(int i, int j) const { return i * nj + j; }
    int line_of(int node) const { return node / nj; }
    int slot_of(int node) const { return node % nj; }
    bool signed_lateral() const { return n == 2; }
    int cells_lateral() const { return periodic ? ni : ni - 1; }
    int next_line(int i) const { return periodic ? (i + 1) % ni : i + 1; }
};

/// Grid of Omega closed by the spheres of geom.outer. Throws ResourceError
/// when the node count would exceed policy.max_unknowns and DomainError when
/// eps is not small against R^2 or a cell folds.
CurvilinearGrid build_grid(const GapGeometry& geom, const ResolutionPolicy& policy = {});

/// Only the vertical gap lines over |x'| <= 2R, without the closure. Needs
/// delta > 0 but not the convexity hypotheses (n = 2 lines cover [-2R, 2R]).
CurvilinearGrid build_gap_patch_grid(const GapGeometry& geom, const ResolutionPolicy& policy = {});

/// Concentric annulus r1 <= |x| <= 1 in the plane: n_theta periodic lines,
/// n_radial nodes from |x| = 1 (j = 0) to |x| = r1.
CurvilinearGrid build_annulus_grid(double r1, int n_theta, int n_radial);

/// Node count build_grid would produce, without allocating the grid.
std::size_t grid_node_count(const GapGeometry& geom, const ResolutionPolicy& policy = {});

/// Lateral node positions t >= 0 of the vertical gap lines.
std::vector<double> gap_line_positions(const GapGeometry& geom, const ResolutionPolicy& policy);

}  // namespace gapfield
