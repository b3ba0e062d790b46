// SPDX-License-Identifier: Apache-2.0
//
// Primal log-barrier path-following method. Each cone carries a standard
// logarithmically homogeneous self-concordant barrier; Newton steps are
// taken in the null space of the equality rows. A feasibility phase minimises a shift of
// the cone identity elements until a strictly feasible point is found.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "covmec/conic.hpp"
#include "covmec/errors.hpp"

namespace covmec {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::inaccurate: return "inaccurate";
        case SolveStatus::iteration_limit: return "iteration-limit";
    }
    return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Compiled {
    ConeKind kind;
    double alpha = 0.5;
    int dim = 0;
    std::vector<int> vars;     // global indices of the local columns
    Eigen::MatrixXd A;         // rows x vars (dense; unused for psd)
    Eigen::VectorXd b;         // constants
    // psd: entries per local column as (row, coef)
    std::vector<std::vector<std::pair<int, double>>> psd_cols;
    double nu = 1.0;           // barrier parameter
};

struct Problem {
    int n = 0;
    Eigen::VectorXd c;
    std::vector<Compiled> cones;
    Eigen::MatrixXd E;  // equality rows: E x + e0 = 0
    Eigen::VectorXd e0;
    Eigen::MatrixXd Z;  // orthonormal basis of null(E)
    double nu = 0.0;
};

Compiled compile_block(const ConeBlock& blk, int extra_var, const Eigen::VectorXd* shift) {
    Compiled c;
    c.kind = blk.kind;
    c.alpha = blk.alpha;
    c.dim = blk.dim;
    std::map<int, int> local;
    for (const auto& r : blk.rows) {
        for (const auto& [v, coef] : r.terms) local.emplace(v, 0);
    }
    if (extra_var >= 0) local.emplace(extra_var, 0);
    for (auto& [v, idx] : local) {
        idx = static_cast<int>(c.vars.size());
        c.vars.push_back(v);
    }
    const int rows = static_cast<int>(blk.rows.size());
    c.b.resize(rows);
    for (int i = 0; i < rows; ++i) c.b[i] = blk.rows[i].constant;
    if (blk.kind == ConeKind::psd) {
        c.psd_cols.assign(c.vars.size(), {});
        for (int i = 0; i < rows; ++i) {
            for (const auto& [v, coef] : blk.rows[i].terms) c.psd_cols[local[v]].emplace_back(i, coef);
        }
        if (extra_var >= 0) {
            for (int d = 0; d < blk.dim; ++d) c.psd_cols[local[extra_var]].emplace_back(d * blk.dim + d, 1.0);
        }
        c.nu = blk.dim;
    } else {
        c.A = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(c.vars.size()));
        for (int i = 0; i < rows; ++i) {
            for (const auto& [v, coef] : blk.rows[i].terms) c.A(i, local[v]) += coef;
        }
        if (extra_var >= 0) {
            for (int i = 0; i < rows; ++i) c.A(i, local[extra_var]) += (*shift)[i];
        }
        switch (blk.kind) {
            case ConeKind::nonneg: c.nu = rows; break;
            case ConeKind::soc: c.nu = 2; break;
            case ConeKind::rsoc: c.nu = 2; break;
            case ConeKind::exp: c.nu = 3; break;
            case ConeKind::power: c.nu = 3; break;
            default: break;
        }
    }
    return c;
}

// Identity-like interior direction of each cone, used by the feasibility phase.
Eigen::VectorXd cone_unit(const ConeBlock& b) {
    const int rows = static_cast<int>(b.rows.size());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(rows);
    switch (b.kind) {
        case ConeKind::nonneg: e.setOnes(); break;
        case ConeKind::soc: e[0] = 1.0; break;
        case ConeKind::rsoc: e[0] = 1.0; e[1] = 1.0; break;
        case ConeKind::exp: e[0] = 1.0; e[1] = 0.5; break;
        case ConeKind::power: e[0] = 1.0; e[1] = 1.0; break;
        case ConeKind::psd:
            for (int d = 0; d < b.dim; ++d) e[d * b.dim + d] = 1.0;
            break;
        default: break;
    }
    return e;
}

Eigen::VectorXd slack(const Compiled& c, const Eigen::VectorXd& x) {
    if (c.kind == ConeKind::psd) {
        Eigen::VectorXd s = c.b;
        for (std::size_t j = 0; j < c.vars.size(); ++j) {
            const double xj = x[c.vars[j]];
            if (xj == 0.0) continue;
            for (const auto& [row, coef] : c.psd_cols[j]) s[row] += coef * xj;
        }
        return s;
    }
    Eigen::VectorXd xl(c.vars.size());
    for (std::size_t j = 0; j < c.vars.size(); ++j) xl[j] = x[c.vars[j]];
    return c.A * xl + c.b;
}

// Barrier value at slack s, +inf outside the interior. When grad / hess are
// non-null they receive derivatives with respect to s (psd handled apart).
double barrier(const Compiled& c, const Eigen::VectorXd& s, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const int m = static_cast<int>(s.size());
    switch (c.kind) {
        case ConeKind::nonneg: {
            if ((s.array() <= 0.0).any()) return kInf;
            if (grad) *grad = -s.cwiseInverse();
            if (hess) *hess = s.cwiseInverse().cwiseAbs2().asDiagonal();
            return -s.array().log().sum();
        }
        case ConeKind::soc: {
            const double t = s[0];
            const double D = t * t - s.tail(m - 1).squaredNorm();
            if (t <= 0.0 || D <= 0.0) return kInf;
            if (grad || hess) {
                Eigen::VectorXd g(m);
                g[0] = -2.0 * t / D;
                g.tail(m - 1) = 2.0 * s.tail(m - 1) / D;
                if (hess) {
                    Eigen::VectorXd j = Eigen::VectorXd::Constant(m, 2.0 / D);
                    j[0] = -2.0 / D;
                    *hess = g * g.transpose();
                    hess->diagonal() += j;
                }
                if (grad) *grad = g;
            }
            return -std::log(D);
        }
        case ConeKind::rsoc: {
            const double u = s[0], v = s[1];
            const double D = 2.0 * u * v - s.tail(m - 2).squaredNorm();
            if (u <= 0.0 || v <= 0.0 || D <= 0.0) return kInf;
            if (grad || hess) {
                Eigen::VectorXd dD(m);
                dD[0] = 2.0 * v;
                dD[1] = 2.0 * u;
                dD.tail(m - 2) = -2.0 * s.tail(m - 2);
                const Eigen::VectorXd g = -dD / D;
                if (hess) {
                    *hess = g * g.transpose();
                    (*hess)(0, 1) -= 2.0 / D;
                    (*hess)(1, 0) -= 2.0 / D;
                    for (int i = 2; i < m; ++i) (*hess)(i, i) += 2.0 / D;
                }
                if (grad) *grad = g;
            }
            return -std::log(D);
        }
        case ConeKind::exp: {
            const double X = s[0], Y = s[1], Z = s[2];
            if (X <= 0.0 || Y <= 0.0) return kInf;
            const double lxy = std::log(X / Y);
            const double psi = Y * lxy - Z;
            if (!(psi > 0.0)) return kInf;
            if (grad || hess) {
                const Eigen::Vector3d dpsi(Y / X, lxy - 1.0, -1.0);
                if (grad) *grad = -dpsi / psi - Eigen::Vector3d(1.0 / X, 1.0 / Y, 0.0);
                if (hess) {
                    Eigen::Matrix3d d2 = Eigen::Matrix3d::Zero();
                    d2(0, 0) = -Y / (X * X);
                    d2(0, 1) = d2(1, 0) = 1.0 / X;
                    d2(1, 1) = -1.0 / Y;
                    Eigen::Matrix3d h = -d2 / psi + dpsi * dpsi.transpose() / (psi * psi);
                    h(0, 0) += 1.0 / (X * X);
                    h(1, 1) += 1.0 / (Y * Y);
                    *hess = h;
                }
            }
            return -std::log(psi) - std::log(X) - std::log(Y);
        }
        case ConeKind::power: {
            const double X = s[0], Y = s[1], Z = s[2], a = c.alpha;
            if (X <= 0.0 || Y <= 0.0) return kInf;
            const double phi = std::exp(2.0 * a * std::log(X) + (2.0 - 2.0 * a) * std::log(Y));
            const double psi = phi - Z * Z;
            if (!(psi > 0.0)) return kInf;
            if (grad || hess) {
                const Eigen::Vector3d dpsi(2.0 * a * phi / X, (2.0 - 2.0 * a) * phi / Y, -2.0 * Z);
                if (grad) *grad = -dpsi / psi - Eigen::Vector3d((1.0 - a) / X, a / Y, 0.0);
                if (hess) {
                    Eigen::Matrix3d d2 = Eigen::Matrix3d::Zero();
                    d2(0, 0) = 2.0 * a * (2.0 * a - 1.0) * phi / (X * X);
                    d2(1, 1) = (2.0 - 2.0 * a) * (1.0 - 2.0 * a) * phi / (Y * Y);
                    d2(0, 1) = d2(1, 0) = 2.0 * a * (2.0 - 2.0 * a) * phi / (X * Y);
                    d2(2, 2) = -2.0;
                    Eigen::Matrix3d h = -d2 / psi + dpsi * dpsi.transpose() / (psi * psi);
                    h(0, 0) += (1.0 - a) / (X * X);
                    h(1, 1) += a / (Y * Y);
                    *hess = h;
                }
            }
            return -std::log(psi) - (1.0 - a) * std::log(X) - a * std::log(Y);
        }
        default: break;
    }
    return kInf;
}

// Barrier of a psd block with its gradient / Hessian already mapped to the
// block's local variables.
double psd_barrier(const Compiled& c, const Eigen::VectorXd& s, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const int n = c.dim;
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) S(i, j) = 0.5 * (s[i * n + j] + s[j * n + i]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) return kInf;
    const Eigen::MatrixXd& L = llt.matrixLLT();
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(L(i, i) > 0.0)) return kInf;
        logdet += 2.0 * std::log(L(i, i));
    }
    if (!std::isfinite(logdet)) return kInf;
    if (grad || hess) {
        const Eigen::MatrixXd Si = llt.solve(Eigen::MatrixXd::Identity(n, n));
        const int nv = static_cast<int>(c.vars.size());
        if (grad) {
            grad->resize(nv);
            for (int j = 0; j < nv; ++j) {
                double acc = 0.0;
                for (const auto& [row, coef] : c.psd_cols[j]) acc += coef * Si(row / n, row % n);
                (*grad)[j] = -acc;
            }
        }
        if (hess) {
            hess->resize(nv, nv);
            Eigen::MatrixXd Mj(n, n);
            for (int j = 0; j < nv; ++j) {
                // Mj = Si Aj Si
                Mj.setZero();
                for (const auto& [row, coef] : c.psd_cols[j]) {
                    Mj.noalias() += coef * Si.col(row / n) * Si.row(row % n);
                }
                for (int k = j; k < nv; ++k) {
                    double acc = 0.0;
                    for (const auto& [row, coef] : c.psd_cols[k]) acc += coef * Mj(row % n, row / n);
                    (*hess)(j, k) = acc;
                    (*hess)(k, j) = acc;
                }
            }
        }
    }
    return -logdet;
}

double total_barrier(const Problem& P, const Eigen::VectorXd& x) {
    double f = 0.0;
    for (const auto& c : P.cones) {
        const Eigen::VectorXd s = slack(c, x);
        const double v = c.kind == ConeKind::psd ? psd_barrier(c, s, nullptr, nullptr) : barrier(c, s, nullptr, nullptr);
        if (!std::isfinite(v)) return kInf;
        f += v;
    }
    return f;
}

void barrier_derivatives(const Problem& P, const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd& H) {
    g.setZero(P.n);
    H.setZero(P.n, P.n);
    Eigen::VectorXd gl;
    Eigen::MatrixXd hl;
    for (const auto& c : P.cones) {
        const Eigen::VectorXd s = slack(c, x);
        Eigen::VectorXd gv;
        Eigen::MatrixXd hv;
        if (c.kind == ConeKind::psd) {
            psd_barrier(c, s, &gv, &hv);
        } else {
            barrier(c, s, &gl, &hl);
            gv = c.A.transpose() * gl;
            hv = c.A.transpose() * hl * c.A;
        }
        const int nv = static_cast<int>(c.vars.size());
        for (int i = 0; i < nv; ++i) {
            g[c.vars[i]] += gv[i];
            for (int j = 0; j < nv; ++j) H(c.vars[i], c.vars[j]) += hv(i, j);
        }
    }
}

// Solves H d = -g with Jacobi scaling, which keeps the factorisation
// accurate when slacks differ by many orders of magnitude.
Eigen::VectorXd scaled_newton(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
    const Eigen::VectorXd d = H.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd Hs = d.asDiagonal() * H * d.asDiagonal();
    Hs.diagonal().array() += 1e-13;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hs);
    return d.asDiagonal() * ldlt.solve(-(d.asDiagonal() * g));
}

struct NewtonResult {
    int steps = 0;
    bool converged = false;
    bool diverged = false;
    double decrement2 = kInf;
};

// Minimises t c^T x + F(x) subject to E x + e0 = 0 by damped Newton from a
// strictly feasible x. `stop` is polled after every step.
template <typename Stop>
NewtonResult center(const Problem& P, double t, Eigen::VectorXd& x, int budget, double tol, Stop stop) {
    NewtonResult r;
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    const int me = static_cast<int>(P.E.rows());
    double fb = total_barrier(P, x);
    while (r.steps < budget) {
        barrier_derivatives(P, x, g, H);
        g += t * P.c;
        Eigen::VectorXd dx;
        if (me > 0) {
            // Newton step restricted to the null space of the equality rows.
            const Eigen::MatrixXd Hz = P.Z.transpose() * H * P.Z;
            const Eigen::VectorXd gz = P.Z.transpose() * g;
            dx = P.Z * scaled_newton(Hz, gz);
        } else {
            dx = scaled_newton(H, g);
        }
        if (!dx.allFinite()) {
            r.diverged = true;
            return r;
        }
        const double lam2 = -g.dot(dx);
        r.decrement2 = lam2;
        if (lam2 / 2.0 <= tol) {
            r.converged = true;
            return r;
        }
        // Compare increments, not totals: t c^T x dwarfs the barrier late in the path.
        const double cdx = t * P.c.dot(dx);
        double alpha = 1.0;
        double fbn = kInf;
        for (int ls = 0; ls < 60; ++ls) {
            fbn = total_barrier(P, x + alpha * dx);
            if (std::isfinite(fbn) && alpha * cdx + (fbn - fb) <= -0.25 * alpha * lam2) break;
            alpha *= 0.5;
            fbn = kInf;
        }
        ++r.steps;
        if (!std::isfinite(fbn) || (alpha < 1.0 && lam2 < 1e-5)) {
            // No progress possible at this precision.
            r.converged = lam2 < 1e-5;
            return r;
        }
        x += alpha * dx;
        fb = fbn;
        if (x.cwiseAbs().maxCoeff() > 1e15) {
            r.diverged = true;
            return r;
        }
        if (stop(x)) return r;
    }
    return r;
}

Problem compile(const ConicProgram& prog, int n_total, int extra_var,
                const std::vector<Eigen::VectorXd>* shifts) {
    Problem P;
    P.n = n_total;
    P.c = Eigen::VectorXd::Zero(n_total);
    std::vector<std::pair<Eigen::VectorXd, double>> eq;
    const auto& blocks = prog.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        if (b.kind == ConeKind::zero) {
            for (const auto& r : b.rows) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(n_total);
                for (const auto& [v, coef] : r.terms) row[v] += coef;
                eq.emplace_back(row, r.constant);
            }
            continue;
        }
        if (b.kind == ConeKind::nonneg && b.rows.size() > 1) {
            for (const auto& r : b.rows) {
                ConeBlock single;
                single.kind = ConeKind::nonneg;
                single.rows = {r};
                Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
                P.cones.push_back(compile_block(single, extra_var, &one));
            }
            continue;
        }
        P.cones.push_back(compile_block(b, extra_var, shifts ? &(*shifts)[i] : nullptr));
    }
    P.E.resize(static_cast<Eigen::Index>(eq.size()), n_total);
    P.e0.resize(static_cast<Eigen::Index>(eq.size()));
    for (std::size_t i = 0; i < eq.size(); ++i) {
        P.E.row(static_cast<Eigen::Index>(i)) = eq[i].first.transpose();
        P.e0[static_cast<Eigen::Index>(i)] = eq[i].second;
    }
    if (P.E.rows() > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P.E.transpose());
        qr.setThreshold(1e-12);
        const Eigen::Index rank = qr.rank();
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n_total, n_total);
        P.Z = Q.rightCols(n_total - rank);
    }
    for (const auto& c : P.cones) P.nu += c.nu;
    return P;
}

double equality_residual(const Problem& P, const Eigen::VectorXd& x) {
    if (P.E.rows() == 0) return 0.0;
    return (P.E * x + P.e0).cwiseAbs().maxCoeff();
}

// Smallest sigma (doubling search) with s + sigma e strictly inside the cone.
double shift_needed(const Compiled& c, const Eigen::VectorXd& s, const Eigen::VectorXd& e) {
    auto inside = [&](double sig) {
        const Eigen::VectorXd v = s + sig * e;
        if (c.kind == ConeKind::psd) {
            Compiled tmp;
            tmp.kind = ConeKind::psd;
            tmp.dim = c.dim;
            return std::isfinite(psd_barrier(tmp, v, nullptr, nullptr));
        }
        return std::isfinite(barrier(c, v, nullptr, nullptr));
    };
    if (inside(0.0)) return 0.0;
    double sig = 1e-6;
    while (!inside(sig)) {
        sig *= 2.0;
        if (sig > 1e30) throw SolverError("feasibility phase: cannot shift cone into its interior");
    }
    return sig;
}

}  // namespace

ConicSolution solve(const ConicProgram& program, const ConicSettings& st, const Eigen::VectorXd* start) {
    const auto t_begin = std::chrono::steady_clock::now();
    ConicSolution sol;
    const int n = program.num_variables();
    auto finish = [&](ConicSolution& s) -> ConicSolution {
        s.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
        return s;
    };

    Problem P = compile(program, n, -1, nullptr);
    for (const auto& [v, coef] : program.objective().terms) P.c[v] += coef;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (start) {
        if (start->size() != n) throw InputError("solve: start point has wrong dimension");
        x = *start;
    }
    // Project onto the affine equality set.
    if (P.E.rows() > 0) {
        const Eigen::VectorXd r = P.E * x + P.e0;
        x -= P.E.completeOrthogonalDecomposition().solve(r);
        if (equality_residual(P, x) > st.feasibility_tol * std::max(1.0, x.cwiseAbs().maxCoeff())) {
            sol.status = SolveStatus::infeasible;
            sol.x = x;
            return finish(sol);
        }
    }

    // ---- Feasibility phase ----
    if (!std::isfinite(total_barrier(P, x))) {
        const auto& blocks = program.blocks();
        std::vector<Eigen::VectorXd> shifts(blocks.size());
        double sigma0 = 0.0;
        {
            std::size_t ci = 0;
            for (std::size_t i = 0; i < blocks.size(); ++i) {
                shifts[i] = cone_unit(blocks[i]);
                if (blocks[i].kind == ConeKind::zero) continue;
                if (blocks[i].kind == ConeKind::nonneg && blocks[i].rows.size() > 1) {
                    for (std::size_t r = 0; r < blocks[i].rows.size(); ++r, ++ci) {
                        sigma0 = std::max(sigma0, shift_needed(P.cones[ci], slack(P.cones[ci], x), shifts[i].segment(r, 1)));
                    }
                    continue;
                }
                sigma0 = std::max(sigma0, shift_needed(P.cones[ci], slack(P.cones[ci], x), shifts[i]));
                ++ci;
            }
        }
        sigma0 = 2.0 * sigma0 + 1e-3;

        // Variables (x, sigma); cones shifted by sigma * e; ball around x.
        Problem F = compile(program, n + 1, n, &shifts);
        {
            ConeBlock ball;
            ball.kind = ConeKind::soc;
            const double R = st.bound_radius * (1.0 + x.cwiseAbs().maxCoeff());
            ball.rows.emplace_back(R);
            for (int i = 0; i < n; ++i) {
                LinExpr e(-x[i]);
                e.terms.emplace_back(i, 1.0);
                ball.rows.push_back(e);
            }
            F.cones.push_back(compile_block(ball, -1, nullptr));
            F.nu += 2.0;
        }
        if (P.E.rows() > 0) {
            F.E = Eigen::MatrixXd::Zero(P.E.rows(), n + 1);
            F.E.leftCols(n) = P.E;
            F.e0 = P.e0;
        }
        // A light objective weight keeps variables that only appear in
        // epigraphs from drifting to the ball while sigma is driven down.
        F.c = Eigen::VectorXd::Zero(n + 1);
        F.c.head(n) = P.c * (1e-2 * sigma0 / (1.0 + std::abs(P.c.dot(x))));
        F.c[n] = 1.0;
        Eigen::VectorXd xf(n + 1);
        xf << x, sigma0;
        if (!std::isfinite(total_barrier(F, xf))) throw InternalError("feasibility phase start is not interior");

        double t = F.nu / sigma0;
        bool found = false;
        int used = 0;
        auto stop = [&](const Eigen::VectorXd& z) { return z[n] < 0.0 && std::isfinite(total_barrier(P, z.head(n))); };
        while (used < st.max_iterations) {
            auto r = center(F, t, xf, st.max_iterations - used, 1e-9, stop);
            used += r.steps;
            if (st.verbose) std::cerr << "  phase1 t " << t << " steps " << r.steps << " sigma " << xf[n] << '\n';
            if (xf[n] < 0.0 && std::isfinite(total_barrier(P, xf.head(n)))) {
                found = true;
                break;
            }
            if (r.diverged) break;
            if (r.converged) {
                const double gap = F.nu / t;
                if (xf[n] - gap > 0.0 || gap < 1e-10) break;  // certified or no interior
            }
            t *= st.barrier_growth;
        }
        sol.iterations += used;
        if (st.verbose) std::cerr << "conic: feasibility phase " << used << " steps, sigma " << xf[n] << '\n';
        if (!found) {
            sol.x = xf.head(n);
            sol.status = used >= st.max_iterations ? SolveStatus::iteration_limit : SolveStatus::infeasible;
            return finish(sol);
        }
        x = xf.head(n);
    }

    // ---- Optimisation phase ----
    double t = P.nu / (1.0 + std::abs(P.c.dot(x)));
    int used = 0;
    bool ok = false;
    bool diverged = false;
    double last_decrement = 0.0;
    auto never = [](const Eigen::VectorXd&) { return false; };
    while (used < st.max_iterations) {
        auto r = center(P, t, x, st.max_iterations - used, 1e-8, never);
        last_decrement = r.decrement2;
        used += r.steps;
        if (st.verbose) std::cerr << "  t " << t << " steps " << r.steps << " obj " << P.c.dot(x) << '\n';
        if (r.diverged) {
            diverged = true;
            break;
        }
        const double obj = P.c.dot(x);
        if (obj < -1e15) {
            diverged = true;
            break;
        }
        if (r.converged && (P.nu + std::sqrt(P.nu * r.decrement2)) / t <= st.gap_tol * std::max(1.0, std::abs(obj))) {
            ok = true;
            break;
        }
        if (!r.converged && used >= st.max_iterations) break;
        t *= st.barrier_growth;
    }
    sol.iterations += used;
    sol.x = x;
    sol.objective = program.objective().evaluate(x);
    // Approximate centrality inflates the ideal nu / t bound.
    sol.gap_bound = (P.nu + std::sqrt(P.nu * std::max(0.0, last_decrement))) / t;
    sol.max_primal_residual = std::max(equality_residual(P, x), program.max_violation(x));
    if (diverged) {
        sol.status = SolveStatus::unbounded;
    } else if (ok && sol.max_primal_residual <= st.feasibility_tol) {
        sol.status = SolveStatus::optimal;
    } else if (used >= st.max_iterations) {
        sol.status = SolveStatus::iteration_limit;
    } else {
        sol.status = SolveStatus::inaccurate;
    }
    if (st.verbose) {
        std::cerr << "conic: " << to_string(sol.status) << " obj " << sol.objective << " steps " << sol.iterations
                  << " gap " << sol.gap_bound << '\n';
    }
    return finish(sol);
}

}  // namespace covmec
