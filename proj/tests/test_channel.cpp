// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "covmec/channel.hpp"
#include "covmec/errors.hpp"

using namespace covmec;

namespace {

double rel_err(const CMat& a, const CMat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

struct Geometry {
    Vec3 uav, node;
};

Geometry random_geometry(std::mt19937_64& rng, double node_height) {
    std::uniform_real_distribution<double> xy(-200.0, 200.0);
    std::uniform_real_distribution<double> h(60.0, 150.0);
    return {Vec3(xy(rng), xy(rng), h(rng)), Vec3(xy(rng), xy(rng), node_height)};
}

}  // namespace

TEST_CASE("steering vectors have unit-modulus entries starting at one") {
    const CVec a = steering(0.7, 6, 0.5);
    CHECK(std::abs(a[0] - cplx(1.0, 0.0)) < 1e-15);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(a[i]) == doctest::Approx(1.0));
    // Adjacent entries differ by the phase 2 pi d cos(theta).
    const cplx step = a[1] / a[0];
    CHECK(std::arg(step) == doctest::Approx(std::remainder(std::numbers::pi * std::cos(0.7), 2 * std::numbers::pi)));
}

TEST_CASE("offload channel is rank one with the free-space gain") {
    const ArrayConfig arr{4, 2, 3, 0.5};
    const Vec3 uav(10, 20, 100), ap(40, -10, 0);
    const CMat H = offload_channel(uav, ap, 1e-3, arr);
    REQUIRE(H.rows() == 2);
    REQUIRE(H.cols() == 3);
    const double d = (uav - ap).norm();
    // ||a u^T||_F^2 = N_R N_U, scaled by C0 / d^2.
    CHECK(H.squaredNorm() == doctest::Approx(1e-3 / (d * d) * 6));
    Eigen::JacobiSVD<CMat> svd(H);
    CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);
}

TEST_CASE("aggregate channels stack the per-AP blocks") {
    const ArrayConfig arr{3, 2, 2, 0.5};
    const std::vector<Vec3> aps = {Vec3(0, 0, 0), Vec3(50, 0, 0)};
    const Vec3 uav(20, 30, 90), warden(10, 80, 100), target(25, 5, 10);
    const CMat H = aggregate_offload(aps, uav, 1e-3, arr);
    CHECK(rel_err(H.middleRows(2, 2), offload_channel(uav, aps[1], 1e-3, arr)) < 1e-15);
    const CVec g = aggregate_jamming(aps, warden, 1e-3, arr);
    CHECK(rel_err(g.segment(0, 3), jamming_channel(aps[0], warden, 1e-3, arr)) < 1e-15);
    const CMat G = aggregate_sensing(aps, target, 1e-3, arr);
    CHECK(rel_err(G.block(2, 0, 2, 3), sensing_channel(aps[0], aps[1], target, 1e-3, arr)) < 1e-15);
}

TEST_CASE("coincident nodes are rejected") {
    const ArrayConfig arr{2, 2, 2, 0.5};
    CHECK_THROWS_AS(offload_channel(Vec3(1, 2, 0), Vec3(1, 2, 0), 1e-3, arr), SingularityError);
    CHECK_THROWS_AS(warden_channel(Vec3(1, 2, 3), Vec3(1, 2, 3), 1e-3, arr), SingularityError);
}

TEST_CASE("channel gradients match central differences") {
    std::mt19937_64 rng(11);
    const ArrayConfig arr{4, 2, 3, 0.5};
    const double h = 1e-4;
    for (int trial = 0; trial < 50; ++trial) {
        const Geometry ga = random_geometry(rng, 0.0);
        const auto G = offload_channel_gradient(ga.uav, ga.node, 1e-3, arr);
        const Vec3 ex(h, 0, 0), ey(0, h, 0);
        const CMat fdx = (offload_channel(ga.uav + ex, ga.node, 1e-3, arr) -
                          offload_channel(ga.uav - ex, ga.node, 1e-3, arr)) / (2 * h);
        const CMat fdy = (offload_channel(ga.uav + ey, ga.node, 1e-3, arr) -
                          offload_channel(ga.uav - ey, ga.node, 1e-3, arr)) / (2 * h);
        CHECK(rel_err(G.dx, fdx) < 1e-6);
        CHECK(rel_err(G.dy, fdy) < 1e-6);

        const Geometry gw = random_geometry(rng, 105.0);
        const auto W = warden_channel_gradient(gw.uav, gw.node, 1e-3, arr);
        const CVec wdx = (warden_channel(gw.uav + ex, gw.node, 1e-3, arr) -
                          warden_channel(gw.uav - ex, gw.node, 1e-3, arr)) / (2 * h);
        CHECK(rel_err(W.dx, wdx) < 1e-6);
    }
}

TEST_CASE("channel set covers every slot, warden and target") {
    ScenarioConfig s = ScenarioConfig::desk();
    const auto targets = sample_sensing_area(s.sensing_box, s.target_samples);
    const ChannelSet ch = build_channels(s, straight_trajectory(s), targets);
    CHECK(ch.slots.size() == static_cast<std::size_t>(s.slots));
    CHECK(ch.g.size() == 1u);
    CHECK(ch.G.size() == 4u);
    CHECK(ch.slots[0].H[0].rows() == s.num_aps() * s.rx_antennas);
    CHECK(ch.G[0].cols() == s.num_aps() * s.tx_antennas);
}
