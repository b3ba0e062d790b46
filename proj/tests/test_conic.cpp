// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "covmec/conic.hpp"
#include "covmec/errors.hpp"

using namespace covmec;

TEST_CASE("linear program with bounds") {
    // min -x - 2y s.t. x + y <= 4, x <= 3, y <= 2.5, x, y >= 0 -> x = 1.5, y = 2.5
    ConicProgram p;
    const Var x = p.add_variable("x", 0.0, 3.0);
    const Var y = p.add_variable("y", 0.0, 2.5);
    p.add_nonneg(4.0 - LinExpr(x) - LinExpr(y), "sum");
    p.set_objective(-LinExpr(x) - 2.0 * LinExpr(y));
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(-6.5).epsilon(1e-7));
    CHECK(s.x[0] == doctest::Approx(1.5).epsilon(1e-5));
    CHECK(s.gap_bound >= 0.0);
    CHECK(s.objective - (-6.5) <= s.gap_bound + 1e-9);
}

TEST_CASE("second-order cone projection onto a line") {
    ConicProgram p;
    const Var a = p.add_variable("a"), b = p.add_variable("b"), t = p.add_variable("t");
    p.add_soc(t, {LinExpr(a) - 1.0, LinExpr(b) - 2.0}, "dist");
    p.add_equality(LinExpr(a) + LinExpr(b), "line");
    p.set_objective(t);
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-7));
    CHECK(s.x[0] + s.x[1] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("exponential and power cone epigraphs") {
    // min e^{-z} + z^3 over z in [0.1, 10]; stationary point 3 z^2 = e^{-z}.
    ConicProgram p;
    const Var x = p.add_variable("x"), y = p.add_variable("y"), z = p.add_variable("z", 0.1, 10.0);
    exp_epigraph(p, x, -LinExpr(z), "exp");
    cubic_epigraph(p, z, y, "cube");
    p.set_objective(LinExpr(x) + LinExpr(y));
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    double zs = 0.5;  // Newton on 3 z^2 - e^{-z} = 0
    for (int i = 0; i < 50; ++i) zs -= (3 * zs * zs - std::exp(-zs)) / (6 * zs + std::exp(-zs));
    CHECK(s.x[2] == doctest::Approx(zs).epsilon(1e-5));
    CHECK(s.objective == doctest::Approx(std::exp(-zs) + zs * zs * zs).epsilon(1e-7));
}

TEST_CASE("inverse-square epigraph") {
    ConicProgram p;
    const Var v = p.add_variable("v", 0.0, 2.0);
    const Var L = p.add_variable("L");
    inverse_square_epigraph(p, L, v, "inv");
    p.set_objective(L);
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("complex semidefinite program picks the smallest eigenvalue") {
    ConicProgram p;
    const HermitianExpr X = HermitianExpr::variable(p, 3, "X");
    CMat C(3, 3);
    C << 2, cplx(0, 1), 0, cplx(0, -1), 2, 0, 0, 0, 3;
    p.add_equality(X.trace() - 1.0, "trace");
    add_hermitian_psd(p, X, "psd");
    p.set_objective(X.trace_product(C));
    const ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    Eigen::SelfAdjointEigenSolver<CMat> es(C);
    CHECK(s.objective == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-6));
    const CMat Xv = X.evaluate(s.x);
    CHECK(std::abs(Xv.trace() - cplx(1.0, 0.0)) < 1e-8);
}

TEST_CASE("infeasible program is reported") {
    ConicProgram p;
    const Var x = p.add_variable("x", 0.0, 1.0);
    p.add_nonneg(LinExpr(x) - 2.0, "impossible");
    p.set_objective(x);
    const ConicSolution s = solve(p);
    CHECK(s.status == SolveStatus::infeasible);
}

TEST_CASE("random feasible LPs: primal feasibility and certified gap") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4, m = 8;
        ConicProgram p;
        std::vector<Var> x;
        for (int i = 0; i < n; ++i) x.push_back(p.add_variable("x" + std::to_string(i), -5.0, 5.0));
        // Rows a^T x <= b with b > 0 keep the origin strictly feasible.
        for (int r = 0; r < m; ++r) {
            LinExpr row = 1.0 + std::abs(u(rng));
            for (int i = 0; i < n; ++i) row -= u(rng) * LinExpr(x[i]);
            p.add_nonneg(row, "row");
        }
        LinExpr obj;
        for (int i = 0; i < n; ++i) obj += u(rng) * LinExpr(x[i]);
        p.set_objective(obj);
        const ConicSolution s = solve(p);
        REQUIRE(s.status == SolveStatus::optimal);
        CHECK(p.max_violation(s.x) <= 1e-8);
        CHECK(s.gap_bound <= 1e-6 * std::max(1.0, std::abs(s.objective)));
    }
}

TEST_CASE("cone violation and block bookkeeping") {
    ConicProgram p;
    const Var a = p.add_variable("a"), b = p.add_variable("b");
    p.add_soc(a, {LinExpr(b)}, "soc[0]");
    p.add_nonneg(a, "pos[0]");
    p.add_nonneg(b, "pos[1]");
    CHECK(p.count_blocks(ConeKind::soc) == 1);
    CHECK(p.count_blocks_tagged("pos") == 2);
    Eigen::VectorXd x(2);
    x << 1.0, 0.5;
    CHECK(p.max_violation(x) == 0.0);
    x << 1.0, 3.0;
    CHECK(p.max_violation(x) > 0.0);
    std::ostringstream os;
    p.dump(os);
    CHECK(os.str().rfind("covmec-conic 1\n", 0) == 0);
}

TEST_CASE("hermitian embedding is symmetric") {
    ConicProgram p;
    const HermitianExpr X = HermitianExpr::variable(p, 2, "X");
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(p.num_variables(), 0.3, 1.7);
    const auto rows = hermitian_psd_embed(X);
    REQUIRE(rows.size() == 16u);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) CHECK(rows[i * 4 + j].evaluate(x) == doctest::Approx(rows[j * 4 + i].evaluate(x)));
    }
    const CMat v = X.evaluate(x);
    CHECK((v - v.adjoint()).norm() < 1e-15);
}

TEST_CASE("solver is deterministic") {
    ConicProgram p;
    const Var x = p.add_variable("x"), z = p.add_variable("z", -3.0, 3.0);
    exp_epigraph(p, x, z, "exp");
    p.set_objective(LinExpr(x) - 0.5 * LinExpr(z));
    const ConicSolution a = solve(p), b = solve(p);
    CHECK(a.x == b.x);
    CHECK(a.objective == doctest::Approx(0.5 - 0.5 * std::log(0.5)).epsilon(1e-7));
}
