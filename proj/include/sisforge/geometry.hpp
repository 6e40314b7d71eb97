// SPDX-License-Identifier: Apache-2.0
//
// 3D layout of the antenna arrays and the stacked-surface layers. All
// positions are in meters; the alpha parameters are in wavelengths.

#ifndef SISFORGE_GEOMETRY_HPP
#define SISFORGE_GEOMETRY_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace sisforge {

enum class Side { tx, rx };

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Layout of one node: its antenna array plus the stacked surface in
// front of it. Layer planes are orthogonal to the x axis and the layer
// index increases along the propagation direction: tx layer 1 is the
// antenna-adjacent plane (the wave leaves through layer L toward the
// channel), rx layer 1 is the channel-facing plane (the wave exits
// through layer L toward the antennas).
struct SisGeometry {
    Side side = Side::tx;
    std::size_t layers = 0;            // L
    std::size_t elements_per_layer = 0; // N, a perfect square
    std::size_t grid_dim = 0;           // sqrt(N), elements per row/column
    double wavelength = 0.0;            // lambda [m]
    double standoff = 0.0;              // alpha1 [wavelengths]
    double element_spacing = 0.0;       // alpha2 [wavelengths]
    double thickness = 0.0;             // alpha3 [wavelengths]
    Point3 anchor;                      // antenna-array center
    std::vector<Point3> antenna_coords; // one per antenna
    // element_coords[(l-1) * N + i] is element i of layer l; within a
    // layer the index runs row-major over (z-row, y-column).
    std::vector<Point3> element_coords;
    std::string note; // degenerate-input remarks (e.g. L=1 ignoring alpha3)

    const Point3 &element(std::size_t layer, std::size_t index) const {
        return element_coords[(layer - 1) * elements_per_layer + index];
    }

    // In-plane offsets of element i from the grid center, in meters.
    double y_offset(std::size_t index) const;
    double z_offset(std::size_t index) const;

    // Center of mass of all surface elements.
    Point3 surface_center() const;

    // Debug dump: one "layer index x y z" line per element.
    std::string dump() const;
};

// Construct the layout for one side.
//
// The grid of each layer is centered on the anchor's (y, z); adjacent
// elements are alpha2 * lambda apart in y and in z. Antennas form a
// linear array along z with lambda/2 spacing, centered on the anchor.
//
// Along x, the stack occupies alpha3 * lambda with inter-layer gap
// alpha3 * lambda / (L - 1); the antenna-adjacent plane sits at
// alpha1 * lambda from the antenna plane (tx layer 1 at +alpha1*lambda,
// rx layer L at -alpha1*lambda; the tx surface faces +x, the rx surface
// faces -x). For L = 1 the single layer sits at alpha1 * lambda and
// alpha3 is ignored (noted in .note).
SisGeometry build_geometry(Side side, std::size_t antennas, std::size_t elements,
                           std::size_t layers, double wavelength, double alpha1,
                           double alpha2, double alpha3, Point3 anchor);

// Euclidean distance between p and q plus |cos| of the angle of (q - p)
// to the plane normal. Throws on coincident points (singular kernel).
void pairwise_distance_and_angle(const Point3 &p, const Point3 &q,
                                 const Point3 &plane_normal, double &r,
                                 double &cos_chi);

} // namespace sisforge

#endif
