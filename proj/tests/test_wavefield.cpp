// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "sisforge/common.hpp"
#include "sisforge/parallel.hpp"
#include "sisforge/wavefield.hpp"

#include <cmath>

using namespace sisforge;

namespace {

SisGeometry tx_geo(std::size_t n = 16, std::size_t l = 2) {
    return build_geometry(Side::tx, 4, n, l, 0.1, 4.0, 0.5, 6.0, {0.0, 0.0, 15.0});
}
SisGeometry rx_geo(std::size_t n = 16, std::size_t l = 2) {
    return build_geometry(Side::rx, 4, n, l, 0.1, 4.0, 0.5, 6.0, {50.0, 0.0, 15.0});
}

} // namespace

TEST_CASE("kernel entry matches the hand-evaluated scalar") {
    // lambda=0.1 m, alpha2=0.5, r=0.2 m, cos chi=1:
    // 0.25 * 0.01 * (1/0.2) * (1/(2 pi 0.2) - 10 j) * e^{j 4 pi}
    const cdouble got = rs_kernel_entry(0.1, 0.5, 0.2, 1.0);
    CHECK(got.real() == doctest::Approx(0.009947).epsilon(1e-3));
    CHECK(got.imag() == doctest::Approx(-0.125).epsilon(1e-6));
    // Direct evaluation of the same formula, written independently.
    const cdouble phase = std::exp(cdouble{0.0, 2.0 * M_PI * 0.2 / 0.1});
    const cdouble want = 0.5 * 0.5 * 0.1 * 0.1 * 1.0 / 0.2 *
                         (cdouble{1.0 / (2.0 * M_PI * 0.2), -1.0 / 0.1}) * phase;
    CHECK(std::abs(got - want) < 1e-15);
}

TEST_CASE("in-plane pair couples to exactly zero") {
    CHECK(rs_kernel_entry(0.1, 0.5, 0.2, 0.0) == cdouble{0.0, 0.0});
}

TEST_CASE("kernel magnitude decreases when distance doubles") {
    const double m1 = std::abs(rs_kernel_entry(0.1, 0.5, 0.2, 1.0));
    const double m2 = std::abs(rs_kernel_entry(0.1, 0.5, 0.4, 1.0));
    CHECK(m2 < m1);
}

TEST_CASE("zero-distance pair is an error") {
    CHECK_THROWS_AS(rs_kernel_entry(0.1, 0.5, 0.0, 1.0), Error);
}

TEST_CASE("build_kernel shapes and adjacency") {
    SisGeometry t = tx_geo();
    PropagationKernel w1 = build_kernel(t, kAntennaPlane, 1);
    CHECK(w1.matrix.rows() == 16);
    CHECK(w1.matrix.cols() == 4);
    PropagationKernel w2 = build_kernel(t, 1, 2);
    CHECK(w2.matrix.rows() == 16);
    CHECK(w2.matrix.cols() == 16);
    CHECK_THROWS_AS(build_kernel(t, kAntennaPlane, 2), Error);

    SisGeometry r = rx_geo();
    PropagationKernel el = build_kernel(r, 2, kAntennaPlane);
    CHECK(el.matrix.rows() == 4);
    CHECK(el.matrix.cols() == 16);
    CHECK_THROWS_AS(build_kernel(r, kAntennaPlane, 1), Error);
}

TEST_CASE("chain kernels compose in application order") {
    std::vector<PropagationKernel> tk = build_chain_kernels(tx_geo());
    REQUIRE(tk.size() == 2);
    CHECK(tk[0].matrix.cols() == 4);  // antennas in
    CHECK(tk[1].matrix.rows() == 16); // layer 2 out
    std::vector<PropagationKernel> rk = build_chain_kernels(rx_geo());
    REQUIRE(rk.size() == 2);
    CHECK(rk[0].matrix.cols() == 16);
    CHECK(rk[1].matrix.rows() == 4); // antennas out
}

TEST_CASE("kernel reciprocity: swapped planes transpose the magnitudes") {
    SisGeometry t = tx_geo();
    PropagationKernel fwd = build_kernel(t, 1, 2);
    PropagationKernel rev = build_kernel(t, 2, 1);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j)
            CHECK(std::abs(fwd.matrix(i, j)) ==
                  doctest::Approx(std::abs(rev.matrix(j, i))).epsilon(1e-12));
}

TEST_CASE("kernel construction is deterministic") {
    SisGeometry t = tx_geo();
    PropagationKernel a = build_kernel(t, 1, 2);
    PropagationKernel b = build_kernel(t, 1, 2);
    CHECK(oracles::max_abs_diff(a.matrix, b.matrix) == 0.0);
}

TEST_CASE("path gain prefactor at 3 GHz and 50 m") {
    const double lambda = 299792458.0 / 3e9;
    CHECK(path_gain(lambda, 50.0) == doctest::Approx(1.590e-4).epsilon(1e-3));
}

TEST_CASE("pure line-of-sight limit has exact magnitudes") {
    SisGeometry t = tx_geo(), r = rx_geo();
    ChannelRealization c = sample_channel(t, r, 1e12, 7);
    const double want = path_gain(0.1, c.distance);
    for (std::size_t i = 0; i < c.h.size(); ++i)
        CHECK(std::abs(c.h.data()[i]) == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("line-of-sight channel is numerically rank one") {
    SisGeometry t = tx_geo(25, 2), r = rx_geo(25, 2);
    ChannelRealization c = sample_channel(t, r, 1e12, 11);
    SvdResult svd = truncated_svd(c.h, 2);
    CHECK(svd.s[1] / svd.s[0] < 1e-8);
}

TEST_CASE("surface-center distance excludes the standoffs") {
    SisGeometry t = tx_geo(), r = rx_geo();
    ChannelRealization c = sample_channel(t, r, 15.0, 1);
    // 50 m anchor separation minus both standoffs (0.4) and both
    // half-thicknesses (0.3 each).
    CHECK(c.distance == doctest::Approx(50.0 - 2 * 0.4 - 2 * 0.3).epsilon(1e-12));
}

TEST_CASE("rayleigh channel mean power matches the path gain") {
    SisGeometry t = tx_geo(), r = rx_geo();
    double acc = 0.0;
    std::size_t count = 0;
    for (std::uint64_t rep = 0; rep < 500; ++rep) {
        ChannelRealization c = sample_channel(t, r, 0.0, 1000 + rep);
        acc += frobenius_norm_sq(c.h);
        count += c.h.size();
    }
    const double want = std::pow(path_gain(0.1, 48.6), 2.0);
    CHECK(acc / static_cast<double>(count) == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("same seed gives a bit-identical channel, serial or parallel") {
    SisGeometry t = tx_geo(), r = rx_geo();
    ChannelRealization a = sample_channel(t, r, 15.0, 99);
    ChannelRealization b = sample_channel(t, r, 15.0, 99);
    CHECK(oracles::max_abs_diff(a.h, b.h) == 0.0);

    // Per-index seeds make a parallel batch equal the serial one.
    std::vector<ComplexMatrix> serial(8), parallel(8);
    for (std::size_t i = 0; i < 8; ++i)
        serial[i] = sample_channel(t, r, 15.0, realization_seed(123, i)).h;
    parallel_for(8, 8, [&](std::size_t i) {
        parallel[i] = sample_channel(t, r, 15.0, realization_seed(123, i)).h;
    });
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(oracles::max_abs_diff(serial[i], parallel[i]) == 0.0);
}

TEST_CASE("noise rejects nonpositive variance") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_noise(2, 2, 0.0, rng), Error);
    CHECK_THROWS_AS(sample_noise(2, 2, -1.0, rng), Error);
}

TEST_CASE("noise variance and circularity") {
    Rng rng(2024);
    const double power = 3.0;
    ComplexMatrix z = sample_noise(1000, 1000, power, rng);
    double total = 0.0, re2 = 0.0, im2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        total += std::norm(z.data()[i]);
        re2 += z.data()[i].real() * z.data()[i].real();
        im2 += z.data()[i].imag() * z.data()[i].imag();
    }
    const double n = static_cast<double>(z.size());
    CHECK(total / n == doctest::Approx(power).epsilon(0.01));
    CHECK(re2 / n == doctest::Approx(power / 2.0).epsilon(0.02));
    CHECK(im2 / n == doctest::Approx(power / 2.0).epsilon(0.02));
}

TEST_CASE("kappa must be nonnegative") {
    CHECK_THROWS_AS(sample_channel(tx_geo(), rx_geo(), -0.1, 1), Error);
}
