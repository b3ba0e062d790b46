// SPDX-License-Identifier: Apache-2.0
#include "covmec/traj_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covmec/errors.hpp"

namespace covmec {

namespace {

constexpr double kRepairMargin = 1e-3;  // m beyond the separation limit

Vec3 lift3(const Vec2& u, double h) { return {u.x(), u.y(), h}; }

std::string idx(int a, int b) { return "[" + std::to_string(a) + "," + std::to_string(b) + "]"; }
std::string idx(int a, int b, int c) {
    return "[" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + "]";
}

// Induced-power speed factor sqrt(sqrt(1 + x^2) - x), x = v^2 / (2 v0^2).
double induced_factor(double v, double v0) {
    const double x = v * v / (2.0 * v0 * v0);
    return std::sqrt(1.0 / (std::sqrt(1.0 + x * x) + x));
}

// Horizontal clearance needed between two nodes with vertical offset dz.
double horizontal_clearance(double dmin, double dz) {
    const double r2 = dmin * dmin - dz * dz;
    return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

void push_away(Vec2& p, const Vec2& from, double radius) {
    Vec2 d = p - from;
    const double n = d.norm();
    if (n >= radius) return;
    d = n > 0.0 ? Vec2(d / n) : Vec2(1.0, 0.0);
    p = from + d * (radius + kRepairMargin);
}

}  // namespace

ValueGradient psi(const ScenarioConfig& s, const Vec3& uav, const CVec& w) {
    const ArrayConfig arr = array_config(s);
    const CMat H = aggregate_offload(s.ap_positions, uav, s.reference_gain, arr);
    const auto dH = aggregate_offload_gradient(s.ap_positions, uav, s.reference_gain, arr);
    const CVec hw = H * w;
    ValueGradient out;
    out.value = hw.squaredNorm();
    out.grad.x() = 2.0 * hw.dot(dH.dx * w).real();
    out.grad.y() = 2.0 * hw.dot(dH.dy * w).real();
    return out;
}

ValueGradient omega(const ScenarioConfig& s, const Vec3& uav, const Vec3& warden, const CVec& w) {
    const ArrayConfig arr = array_config(s);
    const CVec h = warden_channel(uav, warden, s.reference_gain, arr);
    const auto dh = warden_channel_gradient(uav, warden, s.reference_gain, arr);
    const cplx c = h.dot(w);
    ValueGradient out;
    out.value = std::norm(c);
    out.grad.x() = 2.0 * (std::conj(c) * dh.dx.dot(w)).real();
    out.grad.y() = 2.0 * (std::conj(c) * dh.dy.dot(w)).real();
    return out;
}

Trajectory repair_spacing(const Trajectory& t, const ScenarioConfig& s, const std::vector<Vec3>& targets) {
    Trajectory out = t;
    const int K = out.num_uavs();
    const int N = out.num_slots();
    for (int pass = 0; pass < 50; ++pass) {
        bool moved = false;
        for (int j = 1; j < N; ++j) {
            for (int k = 0; k < K; ++k) {
                Vec2& p = out.waypoints[k][j];
                const double hk = s.uav_altitudes[k];
                for (const auto& w : s.warden_positions) {
                    const double r = horizontal_clearance(s.min_separation, hk - w.z());
                    if ((p - w.head<2>()).norm() < r) {
                        push_away(p, w.head<2>(), r);
                        moved = true;
                    }
                }
                for (const auto& q : targets) {
                    const double r = horizontal_clearance(s.min_separation, hk - q.z());
                    if ((p - q.head<2>()).norm() < r) {
                        push_away(p, q.head<2>(), r);
                        moved = true;
                    }
                }
                for (int i = k + 1; i < K; ++i) {
                    Vec2& o = out.waypoints[i][j];
                    const double r = horizontal_clearance(s.min_separation, hk - s.uav_altitudes[i]);
                    Vec2 d = p - o;
                    const double n = d.norm();
                    if (n < r) {
                        d = n > 0.0 ? Vec2(d / n) : Vec2(0.0, 1.0);
                        const Vec2 mid = 0.5 * (p + o);
                        p = mid + d * (0.5 * r + kRepairMargin);
                        o = mid - d * (0.5 * r + kRepairMargin);
                        moved = true;
                    }
                }
            }
        }
        if (!moved) break;
    }
    return out;
}

ResidualReport p2_residuals(const Trajectory& t, const ResourceAllocation& a, const ScenarioConfig& s,
                            const std::vector<Vec3>& targets) {
    const ChannelSet ch = build_channels(s, t, targets);
    ResidualReport out;
    for (int n = 0; n < s.slots; ++n) {
        const SlotView v{s, ch.slots[n], ch.g, ch.G, n};
        ResidualReport r;
        check_slot(a.slots[n], v, r);
        for (const auto& e : r.entries) {
            if (e.family == Family::sensing || e.family == Family::comm_offload || e.family == Family::covert) {
                out.entries.push_back(e);
            }
        }
    }
    check_mobility(t, s, targets, out);
    return out;
}

Trajectory P22::extract(const Eigen::VectorXd& x, double slot_length) const {
    Trajectory t;
    t.slot_length = slot_length;
    for (const auto& row : u) {
        std::vector<Vec2> pts;
        for (const auto& p : row) pts.emplace_back(p[0].evaluate(x), p[1].evaluate(x));
        t.waypoints.push_back(std::move(pts));
    }
    return t;
}

P22 build_p22(const Trajectory& t, double radius, const ResourceAllocation& a, const ScenarioConfig& s,
              const std::vector<Vec3>& targets, double curvature) {
    const int K = s.num_uavs();
    const int N = s.slots;
    const int L = s.num_wardens();
    const int Q = static_cast<int>(targets.size());
    if (t.num_uavs() != K || t.num_slots() != N) throw InputError("trajectory shape does not match scenario");
    if (static_cast<int>(a.slots.size()) != N) throw InputError("allocation slot count does not match scenario");
    if (!(radius > 0.0)) throw InputError("trust radius must be positive");
    if (!(curvature >= 0.0)) throw InputError("curvature margin must be nonnegative");

    P22 out;
    ConicProgram& p = out.program;
    std::vector<double> x0;
    auto scalar = [&](const std::string& name, double lo, double hi, double value) {
        const Var v = p.add_variable(name, lo, hi);
        x0.resize(p.num_variables(), 0.0);
        x0[v.index] = value;
        return v;
    };
    constexpr double inf = std::numeric_limits<double>::infinity();

    const double dt = s.slot_length();
    const PropulsionParams& pp = s.propulsion;
    const double v0 = pp.induced_velocity;

    // Waypoints.
    out.u.assign(K, {});
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j <= N; ++j) {
            const Vec2& w = t.waypoints[k][j];
            if (j == 0 || j == N) {
                const Vec2& fixed = j == 0 ? s.uav_start[k] : s.uav_end[k];
                out.u[k].push_back({LinExpr(fixed.x()), LinExpr(fixed.y())});
            } else {
                const Var vx = scalar("u" + idx(k, j, 0), -inf, inf, w.x());
                const Var vy = scalar("u" + idx(k, j, 1), -inf, inf, w.y());
                out.u[k].push_back({LinExpr(vx), LinExpr(vy)});
            }
        }
    }
    auto free_point = [&](int j) { return j > 0 && j < N; };

    // Propulsion epigraphs per segment.
    LinExpr obj;
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            const Vec2 dtil = t.waypoints[k][n + 1] - t.waypoints[k][n];
            const std::vector<LinExpr> d = {out.u[k][n + 1][0] - out.u[k][n][0],
                                            out.u[k][n + 1][1] - out.u[k][n][1]};
            const double v1t = dtil.norm() / dt;
            const double v2t = induced_factor(v1t, v0);
            const Var v1 = scalar("v1" + idx(k, n), 0.0, inf, v1t);
            const Var v2 = scalar("v2" + idx(k, n), 0.0, inf, v2t);
            const Var sq = scalar("v1_sq" + idx(k, n), 0.0, inf, v1t * v1t);
            const Var cu = scalar("v1_cu" + idx(k, n), 0.0, inf, v1t * v1t * v1t);
            p.add_soc(dt * LinExpr(v1), d, "segment_speed" + idx(k, n));
            p.add_soc(s.speed_max * dt, d, "speed_limit" + idx(k, n));
            p.add_rsoc(sq, 0.5, {LinExpr(v1)}, "speed_square" + idx(k, n));
            cubic_epigraph(p, v1, cu, "speed_cube" + idx(k, n));
            const double c = 1.0 / (v0 * v0 * dt * dt);
            LinExpr lhs = 2.0 * v2t * LinExpr(v2) - v2t * v2t - c * dtil.squaredNorm();
            lhs += 2.0 * c * (dtil.x() * d[0] + dtil.y() * d[1]);
            const Var eta = inverse_square_epigraph(p, lhs, v2, "induced" + idx(k, n));
            x0.resize(p.num_variables(), 0.0);
            x0[eta.index] = 1.0 / v2t;
            obj += dt * (pp.blade_profile_power + 3.0 * pp.blade_profile_power / (pp.tip_speed * pp.tip_speed) * LinExpr(sq) +
                         0.5 * pp.fuselage_drag_ratio * pp.air_density * pp.rotor_solidity * pp.rotor_disc_area *
                             LinExpr(cu) +
                         pp.induced_power * LinExpr(v2));
        }
    }
    p.set_objective(obj);

    // Trust region and linearised separation constraints on free waypoints.
    for (int j = 1; j < N; ++j) {
        for (int k = 0; k < K; ++k) {
            const Vec2& ut = t.waypoints[k][j];
            p.add_soc(radius, {out.u[k][j][0] - ut.x(), out.u[k][j][1] - ut.y()}, "trust" + idx(k, j));
            const double hk = s.uav_altitudes[k];
            auto separation = [&](const Vec2& c, double dz, const std::string& tag) {
                // ||u - c||^2 >= ||ut - c||^2 + 2 (ut - c)^T (u - ut) is a global under-estimator.
                const Vec2 e = ut - c;
                LinExpr lhs = 2.0 * (e.x() * (out.u[k][j][0] - c.x()) + e.y() * (out.u[k][j][1] - c.y()));
                lhs += -e.squaredNorm() + dz * dz - s.min_separation * s.min_separation;
                p.add_nonneg((1.0 / (s.min_separation * s.min_separation)) * lhs, tag);
            };
            for (int l = 0; l < L; ++l) {
                separation(s.warden_positions[l].head<2>(), hk - s.warden_positions[l].z(), "warden_gap" + idx(k, j, l));
            }
            for (int q = 0; q < Q; ++q) {
                separation(targets[q].head<2>(), hk - targets[q].z(), "target_gap" + idx(k, j, q));
            }
            for (int i = k + 1; i < K; ++i) {
                const Vec2 e = ut - t.waypoints[i][j];
                const double dz = hk - s.uav_altitudes[i];
                LinExpr lhs = 2.0 * (e.x() * (out.u[k][j][0] - out.u[i][j][0]) + e.y() * (out.u[k][j][1] - out.u[i][j][1]));
                lhs += -e.squaredNorm() + dz * dz - s.min_separation * s.min_separation;
                p.add_nonneg((1.0 / (s.min_separation * s.min_separation)) * lhs, "uav_gap" + idx(k, i, j));
            }
        }
    }

    // First-order models of the sensing, offloading and covertness constraints.
    const double sr2 = s.server_noise_power;
    const double sl2 = s.warden_noise_power;
    const double n0 = s.num_aps() * s.rx_antennas;
    std::vector<CMat> G;
    for (const auto& q : targets) G.push_back(aggregate_sensing(s.ap_positions, q, s.reference_gain, array_config(s)));
    std::vector<CVec> g;
    for (const auto& w : s.warden_positions) g.push_back(aggregate_jamming(s.ap_positions, w, s.reference_gain, array_config(s)));

    for (int n = 0; n < N; ++n) {
        const int j = n + 1;
        if (!free_point(j)) continue;  // fixed position: constraints are constants the allocation already meets
        const SlotAllocation& sa = a.slots[n];
        LinExpr margin;
        if (curvature > 0.0) {
            for (int k = 0; k < K; ++k) {
                const Vec2& ut = t.waypoints[k][j];
                const Var dsq = scalar("disp_sq" + idx(k, j), 0.0, inf, 0.0);
                p.add_rsoc(LinExpr(dsq), LinExpr(0.5), {out.u[k][j][0] - ut.x(), out.u[k][j][1] - ut.y()},
                           "displacement" + idx(k, j));
                margin += curvature * LinExpr(dsq);
            }
        }
        std::vector<LinExpr> psi_lin(K);
        std::vector<std::vector<LinExpr>> omega_lin(L, std::vector<LinExpr>(K));
        for (int k = 0; k < K; ++k) {
            const Vec2& ut = t.waypoints[k][j];
            const Vec3 pos = lift3(ut, s.uav_altitudes[k]);
            const ValueGradient ps = psi(s, pos, sa.w[k]);
            psi_lin[k] = (ps.value - ps.grad.dot(ut)) / sr2 +
                         (ps.grad.x() / sr2) * out.u[k][j][0] + (ps.grad.y() / sr2) * out.u[k][j][1];
            for (int l = 0; l < L; ++l) {
                const ValueGradient om = omega(s, pos, s.warden_positions[l], sa.w[k]);
                omega_lin[l][k] = (om.value - om.grad.dot(ut)) / sl2 +
                                  (om.grad.x() / sl2) * out.u[k][j][0] + (om.grad.y() / sl2) * out.u[k][j][1];
            }
        }
        LinExpr psi_sum;
        for (const auto& e : psi_lin) psi_sum += e;

        for (int q = 0; q < Q; ++q) {
            const double s0 = (G[q] * sa.R0 * G[q].adjoint()).trace().real() / sr2;
            const double s1 = (G[q] * sa.R1 * G[q].adjoint()).trace().real() / sr2;
            const double need = n0 * s.radar_sinr_min * dt;
            const double g1 = sa.t0 * s0 + sa.t1 * s1;
            const double g2 = s.radar_sinr_min * dt - sa.t0 * s0 / n0;
            p.add_nonneg((1.0 / need) * (g1 - need - g2 * psi_sum) - margin, "sensing" + idx(n, q));

            for (int k = 0; k < K; ++k) {
                const double bits = s.task_bits(k, n) - sa.f_local[k] * dt / s.cycles_per_bit[k];
                if (bits <= 0.0) continue;  // local computing alone meets the task
                const double expo = bits / (std::max(sa.t1, 0.0) * s.bandwidth);
                const double rk = std::exp2(expo) - 1.0;
                if (!std::isfinite(rk)) {
                    std::ostringstream msg;
                    msg << "slot " << n << ": offloading-phase length is zero while UAV " << k
                        << " still has bits to offload";
                    throw InputError(msg.str());
                }
                LinExpr others = s1 + n0;
                for (int i = 0; i < K; ++i) {
                    if (i != k) others += psi_lin[i];
                }
                p.add_nonneg((1.0 / (rk * (s1 + n0))) * (psi_lin[k] - rk * others) - margin, "offload" + idx(n, k, q));
            }
        }
        const double mu = s.covert_mu_max();
        for (int l = 0; l < L; ++l) {
            const double j0 = g[l].dot(sa.R0 * g[l]).real() / sl2;
            const double j1 = g[l].dot(sa.R1 * g[l]).real() / sl2;
            LinExpr leak;
            for (int k = 0; k < K; ++k) leak += omega_lin[l][k];
            const double cap = mu * (j0 + 1.0);
            p.add_nonneg((1.0 / cap) * (cap - (j1 - j0) - leak) - margin, "covert" + idx(n, l));
        }
    }

    x0.resize(p.num_variables(), 0.0);
    out.start = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    return out;
}

TrResult trust_region_solve(const Trajectory& init, const ResourceAllocation& a, const ScenarioConfig& s,
                            const std::vector<Vec3>& targets, const TrSettings& st) {
    TrResult res;
    res.trajectory = init;
    const ResidualReport r0 = p2_residuals(init, a, s, targets);
    if (const Residual* w = r0.worst(1e-6); w != nullptr && w->value > 1e-6) {
        throw InfeasibleError(to_string(w->family), w->slot, "initial trajectory violates a trajectory constraint");
    }
    double energy = propulsion_energy(init, s.propulsion);
    res.propulsion = energy;
    double radius = st.initial_radius;
    double curvature = 0.0;
    for (int iter = 1; iter <= st.max_iterations && radius >= st.min_radius; ++iter) {
        const P22 prog = build_p22(res.trajectory, radius, a, s, targets, curvature);
        const ConicSolution sol = solve(prog.program, st.conic, &prog.start);
        if (sol.x.size() == 0 || sol.status == SolveStatus::infeasible || sol.status == SolveStatus::unbounded) {
            std::ostringstream msg;
            msg << "trajectory iteration " << iter << " (radius " << radius << " m): conic solver returned "
                << to_string(sol.status);
            throw SolverError(msg.str());
        }
        Trajectory cand = prog.extract(sol.x, res.trajectory.slot_length);
        const double e = propulsion_energy(cand, s.propulsion);
        const double resid = p2_residuals(cand, a, s, targets).max_residual();
        const bool accepted = e < energy - 1e-12 * std::abs(energy) && resid <= st.feasibility_tol;
        res.trace.push_back({iter, radius, e, sol.objective, resid, accepted, to_string(sol.status)});
        if (accepted) {
            res.trajectory = std::move(cand);
            energy = e;
        } else if (resid > st.feasibility_tol) {
            // The first-order models overshot: raise the curvature margin to
            // match the observed violation over the step taken.
            double step = 0.0;
            for (int k = 0; k < cand.num_uavs(); ++k) {
                for (std::size_t j = 0; j < cand.waypoints[k].size(); ++j) {
                    step = std::max(step, (cand.waypoints[k][j] - res.trajectory.waypoints[k][j]).squaredNorm());
                }
            }
            curvature = std::max(2.0 * curvature, step > 0.0 ? 2.0 * resid / step : 0.0);
            if (step == 0.0) radius *= 0.5;
        } else {
            radius *= 0.5;
        }
    }
    res.propulsion = energy;
    return res;
}

}  // namespace covmec
