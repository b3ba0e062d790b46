// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "covmec/errors.hpp"
#include "covmec/scenario.hpp"

using namespace covmec;

namespace {

// Textbook form of the rotary-wing model, evaluated in long double.
long double propulsion_reference(long double v, const PropulsionParams& p) {
    const long double U = p.tip_speed, v0 = p.induced_velocity;
    const long double blade = p.blade_profile_power * (1.0L + 3.0L * v * v / (U * U));
    const long double parasite = 0.5L * p.fuselage_drag_ratio * p.air_density * p.rotor_solidity *
                                 p.rotor_disc_area * v * v * v;
    const long double inner = std::sqrt(1.0L + v * v * v * v / (4.0L * v0 * v0 * v0 * v0)) - v * v / (2.0L * v0 * v0);
    return blade + parasite + p.induced_power * std::sqrt(inner);
}

}  // namespace

TEST_CASE("hover power is blade profile plus induced power") {
    const PropulsionParams p;
    CHECK(std::abs(propulsion_power(0.0, p) - 168.49) <= 1e-10 * 168.49);
}

TEST_CASE("propulsion power matches the textbook form at moderate speeds") {
    const PropulsionParams p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> speed(0.0, 30.0);
    for (int i = 0; i < 500; ++i) {
        const double v = speed(rng);
        const double ref = static_cast<double>(propulsion_reference(v, p));
        CHECK(std::abs(propulsion_power(v, p) - ref) <= 1e-9 * ref);
    }
}

TEST_CASE("propulsion power stays finite and positive at high speed") {
    const PropulsionParams p;
    for (double v : {50.0, 100.0, 1e3, 1e5}) {
        const double P = propulsion_power(v, p);
        CHECK(std::isfinite(P));
        CHECK(P > 0.0);
    }
    CHECK_THROWS_AS(propulsion_power(-1.0, p), InputError);
}

TEST_CASE("straight trajectory flies at constant velocity between the endpoints") {
    const ScenarioConfig s = ScenarioConfig::table1();
    const Trajectory t = straight_trajectory(s);
    REQUIRE(t.num_uavs() == 2);
    REQUIRE(t.num_slots() == s.slots);
    CHECK(t.slot_length == doctest::Approx(1.0));
    const auto v = speeds(t);
    for (int k = 0; k < 2; ++k) {
        CHECK((t.waypoints[k].front() - s.uav_start[k]).norm() == doctest::Approx(0.0));
        CHECK((t.waypoints[k].back() - s.uav_end[k]).norm() < 1e-12);
        for (double sp : v[k]) CHECK(sp == doctest::Approx(10.0));
    }
    CHECK(propulsion_energy(t, s.propulsion) ==
          doctest::Approx(2 * s.slots * propulsion_power(10.0, s.propulsion)).epsilon(1e-12));
}

TEST_CASE("slot n is served at waypoint n + 1") {
    ScenarioConfig s = ScenarioConfig::desk();
    const Trajectory t = straight_trajectory(s);
    for (int n = 0; n < s.slots; ++n) {
        const Vec3 p = uav_position(s, t, 0, n);
        CHECK(p.x() == doctest::Approx(t.waypoints[0][n + 1].x()));
        CHECK(p.z() == doctest::Approx(s.uav_altitudes[0]));
    }
}

TEST_CASE("sensing samples fill the box on a cell-centred grid") {
    const ScenarioConfig s = ScenarioConfig::table1();
    const auto pts = sample_sensing_area(s.sensing_box, s.target_samples);
    REQUIRE(pts.size() == 18u);
    const auto shape = sensing_grid_shape(s.sensing_box, 18);
    CHECK(shape[0] * shape[1] * shape[2] == 18);
    Vec3 mean = Vec3::Zero();
    for (const auto& p : pts) {
        CHECK(s.sensing_box.contains(p));
        mean += p / 18.0;
    }
    const Vec3 centre = 0.5 * (s.sensing_box.lower + s.sensing_box.upper);
    CHECK((mean - centre).norm() < 1e-9);

    for (int q : {1, 4, 7, 12}) CHECK(sample_sensing_area(s.sensing_box, q).size() == static_cast<std::size_t>(q));
}

TEST_CASE("validation rejects inconsistent scenarios") {
    CHECK_NOTHROW(ScenarioConfig::table1().validate());
    CHECK_NOTHROW(ScenarioConfig::desk().validate());

    ScenarioConfig far = ScenarioConfig::desk();
    far.uav_end[0] = Vec2(1000, 70);
    CHECK_THROWS_AS(far.validate(), InputError);

    ScenarioConfig bits = ScenarioConfig::desk();
    bits.task_bits = Eigen::MatrixXd::Constant(1, 3, 1e6);
    CHECK_THROWS_AS(bits.validate(), InputError);

    ScenarioConfig ap = ScenarioConfig::desk();
    ap.ap_positions[0].z() = 5.0;
    CHECK_THROWS_AS(ap.validate(), InputError);
}

TEST_CASE("covert cap comes from the DEP floor when one is given") {
    ScenarioConfig s = ScenarioConfig::table1();
    CHECK(s.covert_mu_max() == doctest::Approx(0.0276));
    s.dep_min = 0.99;
    CHECK(s.covert_mu_max() == doctest::Approx(0.0276).epsilon(0.02));
}

TEST_CASE("trajectory validation reports each violated check") {
    ScenarioConfig s = ScenarioConfig::desk();
    const auto targets = sample_sensing_area(s.sensing_box, s.target_samples);
    Trajectory t = straight_trajectory(s);
    CHECK(validate_trajectory(t, s, targets).feasible());

    Trajectory fast = t;
    fast.waypoints[0][3] += Vec2(0, 60);
    const auto rep = validate_trajectory(fast, s, targets);
    CHECK_FALSE(rep.feasible());
    bool speed = false;
    for (const auto& v : rep.violations) speed |= v.check == TrajectoryCheck::speed;
    CHECK(speed);
    CHECK(rep.worst_margin < 0.0);
}
