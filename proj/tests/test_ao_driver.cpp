// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covmec/ao_driver.hpp"
#include "covmec/errors.hpp"

using namespace covmec;

namespace {

const SolveReport& proposed_desk() {
    static const SolveReport r = alternate(ScenarioConfig::desk());
    return r;
}

void check_report(const SolveReport& r) {
    // Accepted rounds never raise the energy.
    double last = std::numeric_limits<double>::infinity();
    for (const auto& ro : r.rounds) {
        if (!ro.accepted) continue;
        CHECK(ro.energy <= last * (1.0 + 1e-6));
        last = ro.energy;
    }
    CHECK(r.residuals.satisfied());
    // The breakdown is recomputed from the raw variables.
    const EnergyBreakdown e = energy_breakdown(r.allocation, r.trajectory, r.scenario);
    CHECK(e.total == doctest::Approx(r.energy.total).epsilon(1e-12));
    CHECK(r.energy.total == doctest::Approx(last).epsilon(1e-6));
}

}  // namespace

TEST_CASE("proposed design on the desk scenario") {
    const SolveReport& r = proposed_desk();
    check_report(r);
    CHECK(r.design == Design::proposed);
    CHECK(r.rounds.size() >= 1u);
    CHECK(r.rounds.size() <= 10u);
    CHECK(r.ra_traces.size() == 6u);
    CHECK(r.offloading_ratio > 0.0);
    CHECK(r.offloading_ratio <= 1.0 + 1e-12);
}

TEST_CASE("straight flight keeps the uniform-speed line") {
    const ScenarioConfig s = ScenarioConfig::desk();
    const SolveReport r = benchmark_straight_flight(s);
    check_report(r);
    const Trajectory line = straight_trajectory(s);
    for (std::size_t j = 0; j < line.waypoints[0].size(); ++j) {
        CHECK((r.trajectory.waypoints[0][j] - line.waypoints[0][j]).norm() == 0.0);
    }
    CHECK(r.rounds.size() == 1u);
    CHECK(proposed_desk().energy.total <= r.energy.total + 1e-9);
}

TEST_CASE("one round with the trajectory frozen equals the allocation-only energy") {
    const ScenarioConfig s = ScenarioConfig::desk();
    AoSettings one;
    one.max_rounds = 1;
    const SolveReport r = alternate(s, one);
    const SolveReport b = benchmark_straight_flight(s);
    CHECK(r.energy.total == b.energy.total);
}

TEST_CASE("fixed-time benchmark pins the phase ratio") {
    const SolveReport r = benchmark_fixed_time(ScenarioConfig::desk());
    check_report(r);
    for (const auto& a : r.allocation.slots) CHECK(a.t0 == doctest::Approx(4.0 * a.t1).epsilon(1e-12));
    CHECK(proposed_desk().energy.total <= r.energy.total + 1e-9);
}

TEST_CASE("full-offloading benchmark computes nothing on board") {
    const SolveReport r = benchmark_full_offloading(ScenarioConfig::desk());
    check_report(r);
    for (const auto& a : r.allocation.slots) CHECK(a.f_local[0] == 0.0);
    CHECK(r.offloading_ratio == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(proposed_desk().energy.total <= r.energy.total + 1e-9);
}

TEST_CASE("power-allocation benchmark uses matched beams and isotropic sensing") {
    const SolveReport r = benchmark_power_allocation(ScenarioConfig::desk());
    check_report(r);
    for (const auto& a : r.allocation.slots) {
        const double beta = a.R0.trace().real() / a.R0.rows();
        CHECK((a.R0 - beta * CMat::Identity(a.R0.rows(), a.R0.cols())).norm() <= 1e-9 * std::max(beta, 1e-300));
    }
    CHECK(proposed_desk().energy.total <= r.energy.total + 1e-9);
}

TEST_CASE("names round-trip") {
    for (Design d : {Design::proposed, Design::straight, Design::power, Design::fixed_time, Design::full_offload}) {
        CHECK(parse_design(to_string(d)) == d);
    }
    for (SweepParam p :
         {SweepParam::uav_power, SweepParam::radar_sinr, SweepParam::task_bits, SweepParam::server_capacitance}) {
        CHECK(parse_sweep_param(to_string(p)) == p);
    }
    CHECK_THROWS_AS(parse_design("fastest"), InputError);
    CHECK_THROWS_AS(parse_sweep_param("bandwidth"), InputError);
}

TEST_CASE("parameter overrides touch only their field") {
    const ScenarioConfig s = ScenarioConfig::desk();
    CHECK(with_parameter(s, SweepParam::uav_power, 4e-3).uav_power_max == 4e-3);
    CHECK(with_parameter(s, SweepParam::radar_sinr, 0.5).radar_sinr_min == 0.5);
    CHECK(with_parameter(s, SweepParam::server_capacitance, 1e-27).server_capacitance == 1e-27);
    const ScenarioConfig b = with_parameter(s, SweepParam::task_bits, 3e6);
    CHECK(b.task_bits.minCoeff() == 3e6);
    CHECK(b.task_bits.maxCoeff() == 3e6);
    CHECK(b.uav_power_max == s.uav_power_max);
    CHECK_THROWS_AS(with_parameter(s, SweepParam::uav_power, -1.0), InputError);
}

TEST_CASE("sweep results do not depend on the worker count") {
    const ScenarioConfig s = ScenarioConfig::desk();
    AoSettings seq, par;
    seq.max_rounds = par.max_rounds = 2;
    par.jobs = 2;
    const auto a = sweep(s, SweepParam::uav_power, {6e-3, 10e-3}, Design::proposed, seq);
    const auto b = sweep(s, SweepParam::uav_power, {6e-3, 10e-3}, Design::proposed, par);
    REQUIRE(a.size() == 2u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].value == b[i].value);
        CHECK(a[i].report.energy.total == b[i].report.energy.total);
    }
    CHECK(a[1].report.energy.total <= a[0].report.energy.total * 1.01);
}

TEST_CASE("infeasible scenario is reported with its constraint family") {
    ScenarioConfig s = ScenarioConfig::desk();
    s.task_bits.setConstant(1e12);
    try {
        alternate(s);
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK_FALSE(e.family().empty());
    }
}
