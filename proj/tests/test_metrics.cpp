// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covmec/metrics.hpp"

using namespace covmec;

namespace {

// One AP, one UAV, one warden, single antennas everywhere: every channel is a
// scalar with magnitude sqrt(C0)/d (sensing: C0/d^2), so the metrics reduce
// to hand-checkable arithmetic.
ScenarioConfig scalar_scenario() {
    ScenarioConfig s = ScenarioConfig::desk();
    s.ap_positions = {Vec3(0, 0, 0)};
    s.warden_positions = {Vec3(0, 300, 100)};
    s.tx_antennas = s.rx_antennas = s.uav_antennas = 1;
    s.uav_start = {Vec2(0, 0)};
    s.uav_end = {Vec2(0, 0)};
    s.sensing_box = Box{Vec3(49, -1, 9), Vec3(51, 1, 11)};
    s.target_samples = 1;
    return s;
}

struct Fixture {
    ScenarioConfig s = scalar_scenario();
    std::vector<Vec3> targets = sample_sensing_area(s.sensing_box, 1);
    Trajectory t = straight_trajectory(s);
    ChannelSet ch = build_channels(s, t, targets);
    SlotAllocation a = SlotAllocation::zeros(s);

    Fixture() {
        a.w[0] = CVec::Constant(1, cplx(0.0, std::sqrt(4e-3)));
        a.R0 = CMat::Constant(1, 1, 2.0);
        a.R1 = CMat::Constant(1, 1, 3.0);
        a.t0 = 0.6;
        a.t1 = 0.4;
        a.f_local[0] = 1e9;
        a.f_edge[0] = 2e10;
    }
    SlotView view() const { return SlotView{s, ch.slots[0], ch.g, ch.G, 0}; }
};

}  // namespace

TEST_CASE("communication SINR and offloaded bits by hand") {
    Fixture f;
    const SlotView v = f.view();
    const double du = 100.0;  // UAV straight above the AP
    const double gain_u = f.s.reference_gain / (du * du);
    const double dt = (f.targets[0] - Vec3(0, 0, 0)).norm();
    const double gain_s = std::pow(f.s.reference_gain / (dt * dt), 2);
    const double n0 = f.s.server_noise_power;
    const double sinr = gain_u * 4e-3 / (gain_s * 3.0 + n0);
    CHECK(comm_sinr(0, f.a, v, 0) == doctest::Approx(sinr).epsilon(1e-12));
    CHECK(offloaded_bits(0, f.a, v, 0) == doctest::Approx(0.4 * 30e6 * std::log2(1 + sinr)).epsilon(1e-12));

    const double radar = 0.6 * gain_s * 2.0 / n0 + 0.4 * gain_s * 3.0 / (gain_u * 4e-3 + n0);
    CHECK(radar_sinr_expected(f.a, v, 0) == doctest::Approx(radar).epsilon(1e-12));
}

TEST_CASE("warden statistics by hand") {
    Fixture f;
    const SlotView v = f.view();
    const double dw = (Vec3(0, 300, 100) - Vec3(0, 0, 0)).norm();
    const double dl = (Vec3(0, 300, 100) - Vec3(0, 0, 100)).norm();
    const double c0 = f.s.reference_gain;
    const DetectionStats st = lambda_pair(0, f.a, v);
    CHECK(st.lambda0 == doctest::Approx(c0 / (dw * dw) * 2.0 + 1e-10).epsilon(1e-12));
    CHECK(st.lambda1 == doctest::Approx(c0 / (dl * dl) * 4e-3 + c0 / (dw * dw) * 3.0 + 1e-10).epsilon(1e-12));
}

TEST_CASE("energies and bit counts by hand") {
    Fixture f;
    const ScenarioConfig& s = f.s;
    CHECK(local_bits(0, f.a, s) == doctest::Approx(1e9 * 1.0 / 1e3));
    CHECK(edge_bits(0, f.a, s) == doctest::Approx(2e10 * 0.6 / 1e3));
    CHECK(local_energy(0, f.a, s) == doctest::Approx(1e-26 * 1e27 * 1.0));
    CHECK(edge_energy(0, f.a, s) == doctest::Approx(1e-28 * 8e30 * 0.6));
    CHECK(comm_energy(f.a) == doctest::Approx(0.4 * 4e-3));
    CHECK(sensing_energy(f.a) == doctest::Approx(0.6 * 2.0 + 0.4 * 3.0));

    ResourceAllocation ra;
    ra.slots.assign(s.slots, f.a);
    const EnergyBreakdown e = energy_breakdown(ra, f.t, s);
    const SlotEnergy se = slot_energy(f.a, s);
    CHECK(e.slots.size() == static_cast<std::size_t>(s.slots));
    CHECK(e.propulsion == doctest::Approx(s.slots * 168.49));
    CHECK(e.total == doctest::Approx(s.slots * se.total() + e.propulsion).epsilon(1e-12));
    CHECK(e.comm + e.sensing + e.local + e.edge + e.propulsion == doctest::Approx(e.total).epsilon(1e-12));
}

TEST_CASE("offloading ratio counts edge-computed bits") {
    Fixture f;
    ResourceAllocation ra;
    ra.slots.assign(f.s.slots, f.a);
    const double expect = 2e10 * 0.6 / 1e3 / 7e6;
    CHECK(offloading_ratio(ra, f.s) == doctest::Approx(expect));
}

TEST_CASE("residual report flags exactly the violated families") {
    Fixture f;
    ResidualReport r;
    check_slot(f.a, f.view(), r);
    // 1 GHz local plus 20 GHz edge over 0.6 s cover 13 Mbit > 7 Mbit of task.
    CHECK(r.max_residual(Family::comm_edge) <= 0.0);
    CHECK(r.max_residual(Family::time) <= 0.0);

    SlotAllocation bad = f.a;
    bad.t0 = 0.8;  // t0 + t1 > slot length
    bad.f_edge[0] = 60e9;
    bad.w[0] *= 10.0;  // 0.4 W > 10 mW
    ResidualReport rb;
    check_slot(bad, f.view(), rb);
    CHECK(rb.max_residual(Family::time) == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(rb.max_residual(Family::cpu_edge) > 0.0);
    CHECK(rb.max_residual(Family::uav_power) == doctest::Approx(39.0).epsilon(1e-9));
    CHECK_FALSE(rb.satisfied());
    REQUIRE(rb.worst() != nullptr);
    CHECK(rb.worst()->family == Family::uav_power);

    SlotAllocation neg = f.a;
    neg.R0(0, 0) = -1.0;
    ResidualReport rn;
    check_slot(neg, f.view(), rn);
    CHECK(rn.max_residual(Family::psd) > kPsdTolerance);
}
