// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "covmec/errors.hpp"
#include "covmec/ra_solver.hpp"

using namespace covmec;

namespace {

struct Instance {
    ScenarioConfig s;
    std::vector<Vec3> targets;
    Trajectory t;
    ChannelSet ch;

    explicit Instance(ScenarioConfig sc)
        : s(std::move(sc)),
          targets(sample_sensing_area(s.sensing_box, s.target_samples)),
          t(straight_trajectory(s)),
          ch(build_channels(s, t, targets)) {}

    SlotView view(int n) const { return SlotView{s, ch.slots[n], ch.g, ch.G, n}; }
};

void check_trace(const RaResult& r) {
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].energy <= r.trace[i - 1].energy + 1e-9);
    CHECK(r.max_residual <= 1e-6);
}

}  // namespace

TEST_CASE("tangent line never exceeds the exponential") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int i = 0; i < 10000; ++i) {
        const double x = u(rng), xt = u(rng);
        CHECK(kappa(x, xt) <= std::exp(x) * (1.0 + 1e-15));
    }
    for (double xt : {-5.0, 0.0, 0.3, 12.0}) CHECK(std::abs(kappa(xt, xt) - std::exp(xt)) <= 1e-12 * std::exp(xt));
}

TEST_CASE("sensing subspace is orthonormal and spans the sensing and warden directions") {
    const Instance in(ScenarioConfig::desk());
    const SlotModel m(in.view(0), RaVariant{});
    const CMat& B = m.sensing_basis();
    CHECK((B.adjoint() * B - CMat::Identity(B.cols(), B.cols())).norm() < 1e-10);
    for (const CVec& g : in.ch.g) CHECK((g - B * (B.adjoint() * g)).norm() <= 1e-9 * g.norm());
    for (const CMat& G : in.ch.G) {
        const CMat Gh = G.adjoint();
        CHECK((Gh - B * (B.adjoint() * Gh)).norm() <= 1e-9 * Gh.norm());
    }
}

TEST_CASE("program structure has one block per constraint instance") {
    const Instance in(ScenarioConfig::desk());
    const SlotModel m(in.view(0), RaVariant{});
    const RaIterate it = initialize_feasible(m, RaSettings{});
    const P12 p = build_p12(m, it);
    const int K = 1, Q = 4, L = 1;
    CHECK(p.program.count_blocks_tagged("rate[") == K * Q);
    CHECK(p.program.count_blocks_tagged("offload_cycles[") == K * Q);
    CHECK(p.program.count_blocks_tagged("sensing_sinr[") == Q);
    CHECK(p.program.count_blocks_tagged("covert[") == L);
    CHECK(p.program.count_blocks_tagged("uav_power[") == K);
    CHECK(p.program.count_blocks_tagged("sensing_cov_psd[") == 2);
    CHECK(p.program.count_blocks_tagged("edge_cycles[") == K);
    CHECK(p.program.count_blocks_tagged("energy_") > 0);
    CHECK_FALSE(p.slack.has_value());
    // The linearisation point is inside the restriction.
    CHECK(p.program.max_violation(p.start) <= 1e-9);

    const P12 r = build_p12(m, it, true);
    CHECK(r.slack.has_value());
}

TEST_CASE("SCA on the desk slots: monotone and feasible") {
    const Instance in(ScenarioConfig::desk());
    for (int n = 0; n < in.s.slots; ++n) {
        const RaResult r = sca_solve(in.view(n), RaSettings{});
        check_trace(r);
        CHECK(r.energy == doctest::Approx(slot_energy(r.alloc, in.s).total()).epsilon(1e-12));
        CHECK(r.trace.back().energy <= r.trace.front().energy);
    }
}

TEST_CASE("warm start from a solution does not lose ground") {
    const Instance in(ScenarioConfig::desk());
    const RaResult cold = sca_solve(in.view(2), RaSettings{});
    const RaResult warm = sca_solve(in.view(2), RaSettings{}, &cold.alloc);
    CHECK_FALSE(warm.restored);
    CHECK(warm.trace.front().energy == doctest::Approx(cold.energy).epsilon(1e-12));
    CHECK(warm.energy <= cold.energy + 1e-12);
}

TEST_CASE("random desk instances: monotone traces and exact feasibility") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(0.0, 120.0), uy(0.0, 100.0), bits(2e6, 8e6);
    for (int trial = 0; trial < 4; ++trial) {
        ScenarioConfig s = ScenarioConfig::desk();
        s.warden_positions = {Vec3(ux(rng), 150.0 + uy(rng), 105.0)};
        s.task_bits.setConstant(bits(rng));
        const Instance in(s);
        const RaResult r = sca_solve(in.view(trial % s.slots), RaSettings{});
        check_trace(r);
    }
}

TEST_CASE("restricted variants keep their pinned degrees of freedom") {
    const Instance in(ScenarioConfig::desk());
    RaSettings ft;
    ft.variant.fixed_time_ratio = true;
    const RaResult a = sca_solve(in.view(1), ft);
    CHECK(a.alloc.t0 == doctest::Approx(4.0 * a.alloc.t1).epsilon(1e-12));
    check_trace(a);

    RaSettings fo;
    fo.variant.full_offload = true;
    const RaResult b = sca_solve(in.view(1), fo);
    CHECK(b.alloc.f_local[0] == 0.0);
    check_trace(b);

    RaSettings pw;
    pw.variant.fixed_directions = true;
    pw.variant.isotropic_sensing = true;
    CVec d = CVec::Ones(2) / std::sqrt(2.0);
    pw.variant.directions = {d};
    const RaResult c = sca_solve(in.view(1), pw);
    const CVec w = c.alloc.w[0];
    CHECK((w - d * d.dot(w)).norm() <= 1e-12 * std::max(w.norm(), 1e-300));
    const CMat& R = c.alloc.R0;
    const double beta = R.trace().real() / R.rows();
    CHECK((R - beta * CMat::Identity(R.rows(), R.cols())).norm() <= 1e-9 * std::max(beta, 1e-300));
    check_trace(c);
}

TEST_CASE("impossible task load is reported as infeasible") {
    ScenarioConfig s = ScenarioConfig::desk();
    s.task_bits.setConstant(1e12);
    const Instance in(s);
    try {
        sca_solve(in.view(0), RaSettings{});
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK_FALSE(e.family().empty());
        CHECK(e.slot() == 0);
    }
}

TEST_CASE("parallel and sequential slot solves agree bit for bit") {
    const Instance in(ScenarioConfig::desk());
    const auto a = solve_all_slots(in.s, in.ch, RaSettings{}, nullptr, 1);
    const auto b = solve_all_slots(in.s, in.ch, RaSettings{}, nullptr, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a[n].energy == b[n].energy);
        CHECK(a[n].alloc.t1 == b[n].alloc.t1);
    }
}
