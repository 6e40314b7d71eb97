// SPDX-License-Identifier: Apache-2.0

#include "sisforge/geometry.hpp"
#include "sisforge/common.hpp"

#include <cmath>

namespace sisforge {

namespace {

std::size_t integer_sqrt(std::size_t n) {
    std::size_t r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    while (r * r > n)
        --r;
    while ((r + 1) * (r + 1) <= n)
        ++r;
    return r;
}

} // namespace

double SisGeometry::y_offset(std::size_t index) const {
    const std::size_t iy = index % grid_dim;
    return (static_cast<double>(iy) - 0.5 * static_cast<double>(grid_dim - 1)) *
           element_spacing * wavelength;
}

double SisGeometry::z_offset(std::size_t index) const {
    const std::size_t iz = index / grid_dim;
    return (static_cast<double>(iz) - 0.5 * static_cast<double>(grid_dim - 1)) *
           element_spacing * wavelength;
}

Point3 SisGeometry::surface_center() const {
    Point3 c;
    for (const auto &p : element_coords) {
        c.x += p.x;
        c.y += p.y;
        c.z += p.z;
    }
    const double n = static_cast<double>(element_coords.size());
    c.x /= n;
    c.y /= n;
    c.z /= n;
    return c;
}

std::string SisGeometry::dump() const {
    std::string out;
    for (std::size_t l = 1; l <= layers; ++l)
        for (std::size_t i = 0; i < elements_per_layer; ++i) {
            const Point3 &p = element(l, i);
            out += strfmt("%zu %zu %.17g %.17g %.17g\n", l, i, p.x, p.y, p.z);
        }
    return out;
}

SisGeometry build_geometry(Side side, std::size_t antennas, std::size_t elements,
                           std::size_t layers, double wavelength, double alpha1,
                           double alpha2, double alpha3, Point3 anchor) {
    if (antennas < 1 || elements < 1 || layers < 1)
        throw Error("build_geometry: counts must be >= 1");
    const std::size_t dim = integer_sqrt(elements);
    if (dim * dim != elements)
        throw Error(strfmt("build_geometry: element count %zu is not a perfect square", elements));
    if (wavelength <= 0.0 || alpha2 <= 0.0)
        throw Error("build_geometry: wavelength and element spacing must be positive");
    if (layers >= 2 && alpha3 <= 0.0)
        throw Error("build_geometry: thickness must be positive for multi-layer stacks");

    SisGeometry g;
    g.side = side;
    g.layers = layers;
    g.elements_per_layer = elements;
    g.grid_dim = dim;
    g.wavelength = wavelength;
    g.standoff = alpha1;
    g.element_spacing = alpha2;
    g.thickness = alpha3;
    g.anchor = anchor;

    // Antennas: linear array along z, lambda/2 spacing, centered.
    g.antenna_coords.resize(antennas);
    for (std::size_t a = 0; a < antennas; ++a) {
        g.antenna_coords[a] = anchor;
        g.antenna_coords[a].z +=
            (static_cast<double>(a) - 0.5 * static_cast<double>(antennas - 1)) * 0.5 * wavelength;
    }

    // Surface stack along x; the layer index increases along the
    // propagation direction on both sides (which is +x for both).
    const double gap = layers >= 2 ? alpha3 * wavelength / static_cast<double>(layers - 1) : 0.0;
    if (layers == 1 && alpha3 > 0.0)
        g.note = "single-layer stack: thickness parameter ignored";

    g.element_coords.resize(layers * elements);
    for (std::size_t l = 1; l <= layers; ++l) {
        double x;
        if (side == Side::tx) {
            // Antenna-adjacent plane is layer 1 at +alpha1*lambda.
            x = anchor.x + alpha1 * wavelength + static_cast<double>(l - 1) * gap;
        } else {
            // Antenna-adjacent plane is layer L at -alpha1*lambda; layer
            // index decreases toward the channel.
            x = anchor.x - alpha1 * wavelength - static_cast<double>(layers - l) * gap;
        }
        for (std::size_t i = 0; i < elements; ++i) {
            Point3 p;
            p.x = x;
            p.y = anchor.y + (static_cast<double>(i % dim) - 0.5 * static_cast<double>(dim - 1)) *
                                 alpha2 * wavelength;
            p.z = anchor.z + (static_cast<double>(i / dim) - 0.5 * static_cast<double>(dim - 1)) *
                                 alpha2 * wavelength;
            g.element_coords[(l - 1) * elements + i] = p;
        }
    }
    return g;
}

void pairwise_distance_and_angle(const Point3 &p, const Point3 &q,
                                 const Point3 &plane_normal, double &r,
                                 double &cos_chi) {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    const double dz = q.z - p.z;
    r = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (r == 0.0)
        throw Error("pairwise_distance_and_angle: coincident points (singular kernel)");
    cos_chi = std::abs(dx * plane_normal.x + dy * plane_normal.y + dz * plane_normal.z) / r;
}

} // namespace sisforge
