// SPDX-License-Identifier: Apache-2.0
#include "covmec/ra_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "covmec/errors.hpp"

namespace covmec {

namespace {

constexpr double kGiga = 1e9;
constexpr double kEnergyScale = 1e27;  // capacitance * GHz^3 * s -> J
constexpr double kAuxBound = 60.0;
constexpr double kFeasibleTol = 1e-10;
constexpr double kTimeFloor = 1e-6;  // fraction of the slot
constexpr double kCpuFloor = 1e-6;   // fraction of the server budget

struct Bounds {
    double lo, hi;
};

Bounds aux_bounds(double value) {
    return {std::min(-kAuxBound, value - 5.0), std::max(kAuxBound, value + 5.0)};
}

double safe_log(double v) { return std::log(std::max(v, 1e-300)); }

LinExpr kappa_expr(const LinExpr& x, double xt) {
    const double e = std::exp(xt);
    return e * (1.0 - xt) + e * x;
}

CVec principal_direction(const CMat& A) {
    Eigen::SelfAdjointEigenSolver<CMat> es(A);
    CVec d = es.eigenvectors().col(A.cols() - 1);
    if (d.norm() == 0.0) {
        d = CVec::Zero(A.cols());
        d[0] = 1.0;
    }
    return d / d.norm();
}

void assign(std::vector<double>& x, const LinExpr& e, double value) {
    if (e.terms.size() != 1 || e.terms[0].second == 0.0) return;
    const auto [idx, c] = e.terms[0];
    if (idx >= static_cast<int>(x.size())) x.resize(idx + 1, 0.0);
    x[idx] = (value - e.constant) / c;
}

std::vector<LinExpr> concat(const std::vector<std::vector<LinExpr>>& parts) {
    std::vector<LinExpr> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::string idx(int a) { return "[" + std::to_string(a) + "]"; }
std::string idx(int a, int b) { return "[" + std::to_string(a) + "," + std::to_string(b) + "]"; }

// Relative violation of the three requirement families at an allocation.
double requirement_violation(const SlotAllocation& a, const SlotView& v) {
    ResidualReport r;
    check_slot(a, v, r);
    double m = 0.0;
    for (Family f : {Family::sensing, Family::comm_offload, Family::comm_edge}) m = std::max(m, r.max_residual(f));
    return m;
}

}  // namespace

double kappa(double x, double xt) { return std::exp(xt) * (1.0 + x - xt); }

ResidualReport slot_residuals(const SlotAllocation& a, const SlotView& v) {
    ResidualReport r;
    check_slot(a, v, r);
    return r;
}

// ---- SlotModel ----------------------------------------------------------------

SlotModel::SlotModel(const SlotView& view, const RaVariant& variant) : view_(view), variant_(variant) {
    const ScenarioConfig& s = view.scenario;
    K_ = s.num_uavs();
    Q_ = static_cast<int>(view.G.size());
    L_ = s.num_wardens();
    if (variant.fixed_directions && static_cast<int>(variant.directions.size()) != K_) {
        throw InputError("fixed-direction variant needs one direction per UAV");
    }
    const double sr = std::sqrt(s.server_noise_power);
    const double sl = std::sqrt(s.warden_noise_power);
    const int mt = s.num_aps() * s.tx_antennas;

    for (int k = 0; k < K_; ++k) {
        Hn.push_back(view.channels.H[k] / sr);
        An.push_back(Hn.back().adjoint() * Hn.back());
    }
    hn.assign(L_, {});
    for (int l = 0; l < L_; ++l) {
        for (int k = 0; k < K_; ++k) hn[l].push_back(view.channels.h[l][k] / sl);
    }

    if (variant.isotropic_sensing) {
        basis_ = CMat::Identity(mt, mt);
    } else {
        // Sensing and warden powers only see R through these directions, and
        // every other term depends on R through its trace.
        CMat D(mt, 0);
        for (const auto& G : view.G) {
            CMat Gh = G.adjoint() / sr;
            D.conservativeResize(mt, D.cols() + Gh.cols());
            D.rightCols(Gh.cols()) = Gh;
        }
        for (const auto& g : view.g) {
            D.conservativeResize(mt, D.cols() + 1);
            D.col(D.cols() - 1) = g / sl;
        }
        Eigen::JacobiSVD<CMat> svd(D, Eigen::ComputeThinU);
        const auto& sv = svd.singularValues();
        const double top = sv.size() > 0 ? sv[0] : 0.0;
        int rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            if (sv[i] > 1e-10 * top) ++rank;
        }
        rank = std::max(rank, 1);
        basis_ = svd.matrixU().leftCols(rank);
    }

    for (const auto& G : view.G) {
        Gb.push_back((G / sr) * basis_);
        G_norm2.push_back(G.squaredNorm() / (sr * sr));
    }
    for (const auto& g : view.g) {
        gb.push_back(basis_.adjoint() * (g / sl));
        g_norm2.push_back(g.squaredNorm() / (sl * sl));
    }

    noise = s.num_aps() * s.rx_antennas;
    dt = s.slot_length();
    for (int k = 0; k < K_; ++k) {
        need.push_back(view.task_bits(k) * s.cycles_per_bit[k] / kGiga);
        bd.push_back(s.bandwidth * s.cycles_per_bit[k] / kGiga);
    }
    fl_max = s.uav_cpu_max / kGiga;
    fu_max = s.server_cpu_max / kGiga;
    vl = s.uav_capacitance * kEnergyScale;
    vu = s.server_capacitance * kEnergyScale;
    mu_max = s.covert_mu_max();
}

double SlotModel::tau_min() const { return std::log(kTimeFloor * dt); }
double SlotModel::z_min() const { return std::log(kCpuFloor * fu_max); }

RaIterate SlotModel::lift(const SlotAllocation& a_in) const {
    RaIterate it;
    it.alloc = a_in;
    SlotAllocation& a = it.alloc;
    if (static_cast<int>(a.w.size()) != K_) throw InputError("allocation has the wrong number of UAVs");

    // Keep the point inside the variable boxes of the restriction.
    a.t0 = std::max(a.t0, kTimeFloor * dt);
    a.t1 = std::max(a.t1, kTimeFloor * dt);
    for (int k = 0; k < K_; ++k) a.f_edge[k] = std::max(a.f_edge[k], kCpuFloor * fu_max * kGiga);
    if (variant_.full_offload) std::fill(a.f_local.begin(), a.f_local.end(), 0.0);

    it.tau0 = std::log(a.t0);
    it.tau1 = std::log(a.t1);
    for (int k = 0; k < K_; ++k) it.z.push_back(std::log(a.f_edge[k] / kGiga));

    std::vector<double> psi(K_);
    double psi_sum = 0.0, wsum = 0.0;
    for (int k = 0; k < K_; ++k) {
        psi[k] = (Hn[k] * a.w[k]).squaredNorm();
        psi_sum += psi[k];
        wsum += a.w[k].squaredNorm();
    }
    const CMat X0 = basis_.adjoint() * a.R0 * basis_;
    const CMat X1 = basis_.adjoint() * a.R1 * basis_;
    it.b = std::log(psi_sum + noise);
    it.r.assign(K_, std::vector<double>(Q_));
    it.gamma = it.r;
    it.zeta = it.r;
    for (int q = 0; q < Q_; ++q) {
        const double s0 = (Gb[q] * X0 * Gb[q].adjoint()).trace().real();
        const double s1 = (Gb[q] * X1 * Gb[q].adjoint()).trace().real();
        it.a0.push_back(safe_log(s0));
        it.a1.push_back(safe_log(s1));
        for (int k = 0; k < K_; ++k) {
            const double interf = psi_sum - psi[k] + std::max(s1, 0.0) + noise;
            const double sinr = psi[k] / interf;
            it.zeta[k][q] = std::log(interf);
            it.gamma[k][q] = safe_log(sinr);
            it.r[k][q] = safe_log(std::log2(1.0 + sinr));
        }
    }
    it.p0 = safe_log(a.R0.trace().real());
    it.p1 = safe_log(a.R1.trace().real());
    it.p2 = safe_log(wsum);
    it.energy = slot_energy(a, view_.scenario).total();
    return it;
}

// ---- Program ------------------------------------------------------------------

SlotAllocation P12::extract(const Eigen::VectorXd& x) const {
    const SlotModel& m = *model;
    const ScenarioConfig& s = m.view().scenario;
    SlotAllocation a = SlotAllocation::zeros(s);
    for (int k = 0; k < m.K(); ++k) {
        a.w[k] = w[k].evaluate(x);
        a.f_local[k] = std::max(0.0, f_local[k].evaluate(x)) * kGiga;
        a.f_edge[k] = std::exp(x[z[k].index]) * kGiga;
    }
    const CMat& B = m.sensing_basis();
    CMat R0 = B * X0.evaluate(x) * B.adjoint();
    CMat R1 = B * X1.evaluate(x) * B.adjoint();
    a.R0 = 0.5 * (R0 + R0.adjoint());
    a.R1 = 0.5 * (R1 + R1.adjoint());
    a.t0 = std::exp(tau0.evaluate(x));
    a.t1 = std::exp(tau1.evaluate(x));
    return a;
}

P12 build_p12(const SlotModel& m, const RaIterate& it, bool restoration) {
    P12 out;
    out.model = &m;
    ConicProgram& p = out.program;
    std::vector<double> x0;
    const ScenarioConfig& s = m.view().scenario;
    const RaVariant& var = m.variant();
    const int K = m.K(), Q = m.Q(), L = m.L();
    const CMat& B = m.sensing_basis();
    const int r = static_cast<int>(B.cols());
    const double dt = m.dt;
    const double n0 = m.noise;

    auto scalar = [&](const std::string& name, double lo, double hi, double value) {
        const Var v = p.add_variable(name, lo, hi);
        x0.resize(p.num_variables(), 0.0);
        x0[v.index] = value;
        return v;
    };
    auto aux = [&](const std::string& name, double value) {
        const Bounds b = aux_bounds(value);
        return scalar(name, b.lo, b.hi, value);
    };

    // Beamformers.
    for (int k = 0; k < K; ++k) {
        const CVec& wt = it.alloc.w[k];
        if (var.fixed_directions) {
            const CVec& d = var.directions[k];
            const double alpha = d.dot(wt).real();
            const double amax = std::sqrt(s.uav_power_max) * 1.5;
            const Var av = scalar("alpha" + idx(k), -amax, amax, alpha);
            out.w.push_back(ComplexVecExpr::scaled(LinExpr(av), d));
        } else {
            ComplexVecExpr w = ComplexVecExpr::variable(p, s.uav_antennas, "w" + idx(k));
            x0.resize(p.num_variables(), 0.0);
            for (int i = 0; i < w.size(); ++i) {
                assign(x0, w.re[i], wt[i].real());
                assign(x0, w.im[i], wt[i].imag());
            }
            out.w.push_back(std::move(w));
        }
        p.add_soc(std::sqrt(s.uav_power_max), out.w[k].stacked(), "uav_power" + idx(k));
    }

    // Sensing covariances, R = B X B^H.
    const CMat Xt[2] = {B.adjoint() * it.alloc.R0 * B, B.adjoint() * it.alloc.R1 * B};
    HermitianExpr* X[2] = {&out.X0, &out.X1};
    for (int j = 0; j < 2; ++j) {
        if (var.isotropic_sensing) {
            const double beta = Xt[j].trace().real() / r;
            const Var bv = scalar("beta" + idx(j), 0.0, s.ap_power_max / r * 1.5, beta);
            *X[j] = HermitianExpr::scaled_identity(LinExpr(bv), r);
        } else {
            *X[j] = HermitianExpr::variable(p, r, "X" + idx(j));
            x0.resize(p.num_variables(), 0.0);
            for (int a = 0; a < r; ++a) {
                for (int b = a; b < r; ++b) {
                    assign(x0, X[j]->re[a * r + b], Xt[j](a, b).real());
                    if (b > a) assign(x0, X[j]->im[a * r + b], Xt[j](a, b).imag());
                }
            }
            add_hermitian_psd(p, *X[j], "sensing_cov_psd" + idx(j));
        }
        p.add_nonneg(s.ap_power_max - X[j]->trace(), "ap_power" + idx(j));
    }

    // CPU, time.
    for (int k = 0; k < K; ++k) {
        if (var.full_offload) {
            out.f_local.emplace_back(0.0);
        } else {
            out.f_local.emplace_back(scalar("f_local" + idx(k), 0.0, m.fl_max, it.alloc.f_local[k] / kGiga));
        }
    }
    out.tau1 = scalar("tau1", m.tau_min(), std::log(dt), it.tau1);
    if (var.fixed_time_ratio) {
        out.tau0 = out.tau1 + std::log(var.time_ratio);
    } else {
        out.tau0 = scalar("tau0", m.tau_min(), std::log(dt), it.tau0);
    }
    for (int k = 0; k < K; ++k) out.z.push_back(scalar("z" + idx(k), m.z_min(), std::log(m.fu_max), it.z[k]));

    const Var s0 = scalar("s0", 0.0, dt, std::exp(it.tau0));
    const Var s1 = scalar("s1", 0.0, dt, std::exp(it.tau1));
    exp_epigraph(p, s0, out.tau0, "time_exp[0]");
    exp_epigraph(p, s1, out.tau1, "time_exp[1]");
    p.add_nonneg(dt - LinExpr(s0) - LinExpr(s1), "time_total");

    LinExpr ysum;
    for (int k = 0; k < K; ++k) {
        const Var y = scalar("y" + idx(k), 0.0, m.fu_max, std::exp(it.z[k]));
        exp_epigraph(p, y, out.z[k], "edge_cpu_exp" + idx(k));
        ysum += y;
    }
    p.add_nonneg(m.fu_max - ysum, "edge_cpu_total");

    // Auxiliary log-domain variables.
    std::vector<Var> a0, a1;
    for (int q = 0; q < Q; ++q) {
        a0.push_back(aux("a0" + idx(q), it.a0[q]));
        a1.push_back(aux("a1" + idx(q), it.a1[q]));
    }
    const Var bvar = aux("b", it.b);
    std::vector<std::vector<Var>> rv(K), gv(K), zv(K);
    for (int k = 0; k < K; ++k) {
        for (int q = 0; q < Q; ++q) {
            rv[k].push_back(aux("r" + idx(k, q), it.r[k][q]));
            gv[k].push_back(aux("gamma" + idx(k, q), it.gamma[k][q]));
            zv[k].push_back(aux("zeta" + idx(k, q), it.zeta[k][q]));
        }
    }
    const Var p0 = aux("p0", it.p0);
    const Var p1 = aux("p1", it.p1);
    const Var p2 = aux("p2", it.p2);

    LinExpr relax;  // 1 - slack in restoration mode
    relax = LinExpr(1.0);
    if (restoration) {
        const double s_start = std::min(1.9, requirement_violation(it.alloc, m.view()) + 1e-3);
        out.slack = scalar("slack", -0.05, 2.0, s_start);
        relax = 1.0 - LinExpr(*out.slack);
    }

    // Received-signal expressions.
    std::vector<std::vector<LinExpr>> hw(K);
    for (int k = 0; k < K; ++k) hw[k] = out.w[k].multiply(m.Hn[k]).stacked();
    std::vector<LinExpr> sense0, sense1;
    for (int q = 0; q < Q; ++q) {
        const CMat Aq = m.Gb[q].adjoint() * m.Gb[q];
        sense0.push_back(out.X0.trace_product(Aq));
        sense1.push_back(out.X1.trace_product(Aq));
        p.add_exp(sense0[q], 1.0, a0[q], "sensing_power" + idx(0, q));
        p.add_exp(sense1[q], 1.0, a1[q], "sensing_power" + idx(1, q));
    }

    // Covertness: sum_k |h^H w_k|^2 <= mu (lambda0) - (lambda1 - lambda0 without UAVs).
    for (int l = 0; l < L; ++l) {
        const LinExpr jam0 = out.X0.quadratic_form(m.gb[l]);
        const LinExpr jam1 = out.X1.quadratic_form(m.gb[l]);
        std::vector<LinExpr> leak;
        for (int k = 0; k < K; ++k) {
            const CVec& h = m.hn[l][k];
            leak.push_back(real_inner(h, out.w[k]));
            leak.push_back(real_inner(cplx(0.0, 1.0) * h, out.w[k]));
        }
        p.add_rsoc(m.mu_max * jam0 + m.mu_max + jam0 - jam1, 0.5, leak, "covert" + idx(l));
    }

    // Edge-computed cycles.
    for (int k = 0; k < K; ++k) {
        p.add_nonneg(dt * out.f_local[k] + kappa_expr(out.tau0 + LinExpr(out.z[k]), it.tau0 + it.z[k]) -
                         m.need[k] * relax,
                     "edge_cycles" + idx(k));
    }

    // Total received communication power at the APs.
    quadratic_upper(p, concat(hw), kappa_expr(bvar, it.b) - n0, "rx_power_cap");

    // Expected radar SINR, multiplied by N0 dT.
    for (int q = 0; q < Q; ++q) {
        const LinExpr lhs = n0 * kappa_expr(out.tau1 + LinExpr(a1[q]) - LinExpr(bvar), it.tau1 + it.a1[q] - it.b) +
                            kappa_expr(out.tau0 + LinExpr(a0[q]), it.tau0 + it.a0[q]);
        p.add_nonneg(lhs - n0 * s.radar_sinr_min * dt * relax, "sensing_sinr" + idx(q));
    }

    for (int k = 0; k < K; ++k) {
        const CVec& wt = it.alloc.w[k];
        const double psi_t = wt.dot(m.An[k] * wt).real();
        const CVec grad = 2.0 * (m.An[k] * wt);
        for (int q = 0; q < Q; ++q) {
            const double gt = it.gamma[k][q];
            const double eg = std::exp(gt);
            const double slope = eg / (std::log(2.0) * (1.0 + eg));
            const double base = std::log1p(eg) / std::log(2.0);
            p.add_exp(base + slope * (LinExpr(gv[k][q]) - gt), 1.0, rv[k][q], "rate" + idx(k, q));
            p.add_exp(real_inner(grad, out.w[k]) - psi_t, 1.0, LinExpr(gv[k][q]) + LinExpr(zv[k][q]),
                      "signal" + idx(k, q));
            std::vector<std::vector<LinExpr>> others;
            for (int i = 0; i < K; ++i) {
                if (i != k) others.push_back(hw[i]);
            }
            quadratic_upper(p, concat(others), kappa_expr(zv[k][q], it.zeta[k][q]) - sense1[q] - n0,
                            "interference" + idx(k, q));
            p.add_nonneg(dt * out.f_local[k] +
                             m.bd[k] * kappa_expr(out.tau1 + LinExpr(rv[k][q]), it.tau1 + it.r[k][q]) -
                             m.need[k] * relax,
                         "offload_cycles" + idx(k, q));
        }
    }

    // Power epigraphs feeding the energy terms.
    p.add_nonneg(kappa_expr(p0, it.p0) - out.X0.trace(), "sensing_power_cap[0]");
    p.add_nonneg(kappa_expr(p1, it.p1) - out.X1.trace(), "sensing_power_cap[1]");
    std::vector<std::vector<LinExpr>> allw;
    for (int k = 0; k < K; ++k) allw.push_back(out.w[k].stacked());
    quadratic_upper(p, concat(allw), kappa_expr(p2, it.p2), "comm_power_cap");

    if (restoration) {
        p.set_objective(LinExpr(*out.slack));
    } else {
        LinExpr obj;
        const Var ec = scalar("e_comm", 0.0, std::numeric_limits<double>::infinity(), std::exp(it.tau1 + it.p2));
        exp_epigraph(p, ec, out.tau1 + LinExpr(p2), "energy_comm");
        obj += ec;
        const Var es0 = scalar("e_sense0", 0.0, std::numeric_limits<double>::infinity(), std::exp(it.tau0 + it.p0));
        exp_epigraph(p, es0, out.tau0 + LinExpr(p0), "energy_sense[0]");
        obj += es0;
        const Var es1 = scalar("e_sense1", 0.0, std::numeric_limits<double>::infinity(), std::exp(it.tau1 + it.p1));
        exp_epigraph(p, es1, out.tau1 + LinExpr(p1), "energy_sense[1]");
        obj += es1;
        for (int k = 0; k < K; ++k) {
            if (!var.full_offload) {
                const double f = it.alloc.f_local[k] / kGiga;
                const Var c = scalar("f_local_cubed" + idx(k), 0.0, std::numeric_limits<double>::infinity(), f * f * f);
                cubic_epigraph(p, out.f_local[k], c, "energy_local" + idx(k));
                obj += m.vl * dt * LinExpr(c);
            }
            const Var eu = scalar("e_edge" + idx(k), 0.0, std::numeric_limits<double>::infinity(),
                                  std::exp(it.tau0 + 3.0 * it.z[k]));
            exp_epigraph(p, eu, out.tau0 + 3.0 * LinExpr(out.z[k]), "energy_edge" + idx(k));
            obj += m.vu * LinExpr(eu);
        }
        p.set_objective(obj);
    }

    x0.resize(p.num_variables(), 0.0);
    out.start = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    return out;
}

// ---- Initial point --------------------------------------------------------------

RaIterate initialize_feasible(const SlotModel& m, const RaSettings& st, bool* restored) {
    const SlotView& v = m.view();
    const ScenarioConfig& s = v.scenario;
    const RaVariant& var = m.variant();
    const int K = m.K();
    if (restored) *restored = false;

    const double local_cap = var.full_offload ? 0.0 : m.fl_max * m.dt;
    double edge_need = 0.0;
    for (int k = 0; k < K; ++k) edge_need += std::max(0.0, m.need[k] - local_cap);
    if (edge_need > m.fu_max * m.dt) {
        throw InfeasibleError("comm-edge", v.slot,
                              "task cycles exceed the combined UAV and server CPU capacity of the slot");
    }

    SlotAllocation a = SlotAllocation::zeros(s);
    if (var.fixed_time_ratio) {
        a.t1 = m.dt / (1.0 + var.time_ratio);
        a.t0 = var.time_ratio * a.t1;
    } else {
        a.t0 = a.t1 = 0.5 * m.dt;
    }
    const CMat& B = m.sensing_basis();
    const double level = 0.9 * s.ap_power_max / static_cast<double>(B.cols());
    a.R0 = level * B * B.adjoint();
    a.R1 = a.R0;

    std::vector<CVec> dir(K);
    for (int k = 0; k < K; ++k) dir[k] = var.fixed_directions ? var.directions[k] : principal_direction(m.An[k]);
    double alpha2 = s.uav_power_max;
    for (int l = 0; l < m.L(); ++l) {
        const double lam0 = v.g[l].dot(a.R0 * v.g[l]).real() / s.warden_noise_power + 1.0;
        double leak = 0.0;
        for (int k = 0; k < K; ++k) leak += std::norm(m.hn[l][k].dot(dir[k]));
        if (leak > 0.0) alpha2 = std::min(alpha2, m.mu_max * lam0 / leak);
    }
    for (int k = 0; k < K; ++k) a.w[k] = std::sqrt(0.9 * alpha2) * dir[k];

    double fsum = 0.0;
    for (int k = 0; k < K; ++k) {
        a.f_local[k] = var.full_offload ? 0.0 : s.uav_cpu_max;
        const double rest = std::max(0.0, m.need[k] - local_cap) / a.t0;  // GHz
        a.f_edge[k] = std::max(rest, 1e-3 * m.fu_max / K) * kGiga;
        fsum += a.f_edge[k];
    }
    if (fsum > s.server_cpu_max) {
        for (auto& f : a.f_edge) f *= s.server_cpu_max / fsum;
    }

    RaIterate it = m.lift(a);
    ResidualReport rep = slot_residuals(it.alloc, v);
    if (rep.max_residual() <= kFeasibleTol) return it;

    if (restored) *restored = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < std::max(st.max_iterations, 50); ++iter) {
        P12 prog = build_p12(m, it, true);
        const ConicSolution sol = solve(prog.program, st.conic, &prog.start);
        if (sol.x.size() == 0 || sol.status == SolveStatus::infeasible || sol.status == SolveStatus::unbounded) break;
        const double sigma = sol.x[prog.slack->index];
        RaIterate next = m.lift(prog.extract(sol.x));
        rep = slot_residuals(next.alloc, v);
        if (rep.max_residual() <= kFeasibleTol) return next;
        if (!(sigma < prev - 1e-7)) break;
        prev = sigma;
        it = std::move(next);
    }
    rep = slot_residuals(it.alloc, v);
    const Residual* worst = rep.worst(kFeasibleTol);
    const std::string fam = worst ? to_string(worst->family) : "unknown";
    std::ostringstream msg;
    msg << "no feasible allocation found; largest remaining violation " << (worst ? worst->value : 0.0) << " in "
        << fam;
    throw InfeasibleError(fam, v.slot, msg.str());
}

// ---- SCA ----------------------------------------------------------------------

RaResult sca_solve(const SlotView& view, const RaSettings& st, const SlotAllocation* warm) {
    const SlotModel model(view, st.variant);
    RaResult res;
    RaIterate it;
    bool have = false;
    if (warm != nullptr) {
        SlotAllocation w0 = *warm;
        if (st.variant.fixed_directions) {
            // Only |d^H w| enters the gains, so a warm beam can be swung onto d.
            for (std::size_t k = 0; k < w0.w.size() && k < st.variant.directions.size(); ++k) {
                const CVec& d = st.variant.directions[k];
                w0.w[k] = std::abs(d.dot(w0.w[k])) * d;
            }
        }
        it = model.lift(w0);
        have = slot_residuals(it.alloc, view).max_residual() <= kFeasibleTol;
    }
    if (!have) it = initialize_feasible(model, st, &res.restored);

    res.trace.push_back({0, it.energy, it.energy, 0.0, slot_residuals(it.alloc, view).max_residual(), 0, "start"});
    for (int iter = 1; iter <= st.max_iterations; ++iter) {
        P12 prog = build_p12(model, it);
        const ConicSolution sol = solve(prog.program, st.conic, &prog.start);
        if (sol.x.size() == 0 || sol.status == SolveStatus::infeasible || sol.status == SolveStatus::unbounded) {
            std::ostringstream msg;
            msg << "slot " << view.slot << " SCA iteration " << iter << ": conic solver returned "
                << to_string(sol.status);
            throw SolverError(msg.str());
        }
        RaIterate next = model.lift(prog.extract(sol.x));
        const double resid = slot_residuals(next.alloc, view).max_residual();
        if (resid > st.residual_tol) break;
        if (next.energy > it.energy) {
            const double allowed = sol.gap_bound + 1e-9 * std::abs(it.energy);
            if (sol.status == SolveStatus::optimal && next.energy - it.energy > allowed) {
                std::ostringstream msg;
                msg << "slot " << view.slot << " SCA iteration " << iter << " increased the energy from "
                    << it.energy << " to " << next.energy;
                throw InternalError(msg.str());
            }
            break;
        }
        const double rel = (it.energy - next.energy) / std::max(std::abs(it.energy), 1e-300);
        res.trace.push_back(
            {iter, next.energy, sol.objective, sol.gap_bound, resid, sol.iterations, to_string(sol.status)});
        it = std::move(next);
        if (rel <= st.tolerance) break;
    }
    res.alloc = it.alloc;
    res.energy = it.energy;
    res.max_residual = slot_residuals(it.alloc, view).max_residual();
    return res;
}

std::vector<RaResult> solve_all_slots(const ScenarioConfig& s, const ChannelSet& ch, const RaSettings& st,
                                      const ResourceAllocation* warm, int jobs) {
    const int N = static_cast<int>(ch.slots.size());
    std::vector<RaResult> out(N);
    std::vector<std::exception_ptr> errors(N);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int n = next++; n < N; n = next++) {
            try {
                const SlotView v{s, ch.slots[n], ch.g, ch.G, n};
                const SlotAllocation* w = warm != nullptr ? &warm->slots[n] : nullptr;
                if (st.slot_directions.empty()) {
                    out[n] = sca_solve(v, st, w);
                } else {
                    RaSettings local = st;
                    local.variant.directions = st.slot_directions.at(n);
                    out[n] = sca_solve(v, local, w);
                }
            } catch (...) {
                errors[n] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(jobs, 1, std::max(N, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace covmec
