// SPDX-License-Identifier: Apache-2.0
//
// The fixed physics: Rayleigh-Sommerfeld couplings between adjacent
// planes of a stack (including the antenna planes) and the Rician
// surface-to-surface channel.

#ifndef SISFORGE_WAVEFIELD_HPP
#define SISFORGE_WAVEFIELD_HPP

#include "sisforge/complex_matrix.hpp"
#include "sisforge/geometry.hpp"
#include "sisforge/rng.hpp"

#include <cstdint>
#include <vector>

namespace sisforge {

// Plane identifiers for build_kernel: 0 is the antenna plane, 1..L are
// the surface layers.
constexpr std::size_t kAntennaPlane = 0;

struct PropagationKernel {
    ComplexMatrix matrix;  // dest_count x src_count
    std::size_t src_plane = 0;
    std::size_t dst_plane = 0;
    double aperture = 0.0; // alpha2 of the source elements [wavelengths]
};

// Scalar Rayleigh-Sommerfeld coupling between a source element of
// aperture alpha2 and a destination point at distance r, where cos_chi
// is the cosine of the angle to the source-plane normal:
//
//   (alpha2^2 lambda^2 cos_chi / r) * (1/(2 pi r) - j/lambda) * e^{j 2 pi r / lambda}
cdouble rs_kernel_entry(double wavelength, double alpha2, double r, double cos_chi);

// Coupling matrix between two adjacent planes of the geometry: layer
// l <-> l+1, plus the antenna plane and its adjacent layer (tx 0 <-> 1,
// rx L <-> 0). Entry (i_dst, i_src) follows rs_kernel_entry. Antennas
// are treated as point elements with the same alpha2 aperture factor.
PropagationKernel build_kernel(const SisGeometry &geo, std::size_t src_plane,
                               std::size_t dst_plane);

// The full propagation chain of one side in application order:
// tx -> [antennas->1, 1->2, ..., L-1->L], rx -> [1->2, ..., L-1->L, L->antennas].
std::vector<PropagationKernel> build_chain_kernels(const SisGeometry &geo);

struct ChannelRealization {
    ComplexMatrix h;      // N_r x N_t, rx layer 1 from tx layer L
    double kappa = 0.0;   // Rician factor
    double distance = 0.0; // surface-center separation [m]
    std::uint64_t seed_tag = 0;
};

// Far-field amplitude prefactor lambda / (4 pi d).
double path_gain(double wavelength, double distance);

// Draw one Rician channel between the tx and rx surfaces:
//
//   h_{i,j} = path_gain * ( sqrt(kappa/(kappa+1)) e^{-2 pi j (a_t2 D_i + a_r2 D_j)}
//                           + sqrt(1/(kappa+1)) l_{i,j} ),  l ~ CN(0,1)
//
// with D measured from the surface center as (y_offset + z_offset) /
// lambda. The matrix entry at (row j, col i) couples tx element i to rx
// element j. Above kappa = 1e9 the scatter term is dropped, making the
// pure line-of-sight limit |h| = path_gain exact.
ChannelRealization sample_channel(const SisGeometry &geo_t, const SisGeometry &geo_r,
                                  double kappa, std::uint64_t seed);

// rows x cols of i.i.d. circular complex Gaussian entries with variance
// noise_power per complex sample (split evenly across real/imag).
ComplexMatrix sample_noise(std::size_t rows, std::size_t cols, double noise_power,
                           Rng &rng);

} // namespace sisforge

#endif
