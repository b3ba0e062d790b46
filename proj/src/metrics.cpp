// SPDX-License-Identifier: Apache-2.0
#include "covmec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "covmec/errors.hpp"

namespace covmec {

namespace {

double safe_scale(double rhs) { return std::abs(rhs) > 0.0 ? std::abs(rhs) : 1.0; }

double min_eigenvalue(const CMat& R) {
    if (R.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(R, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// tr(G R G^H) as a real number.
double sensing_power(const CMat& G, const CMat& R) { return (G * R * G.adjoint()).trace().real(); }

double interference_free_noise(const ScenarioConfig& s) {
    return s.num_aps() * s.rx_antennas * s.server_noise_power;
}

}  // namespace

SlotAllocation SlotAllocation::zeros(const ScenarioConfig& s) {
    SlotAllocation a;
    const int K = s.num_uavs();
    const int mt = s.num_aps() * s.tx_antennas;
    a.w.assign(K, CVec::Zero(s.uav_antennas));
    a.R0 = CMat::Zero(mt, mt);
    a.R1 = CMat::Zero(mt, mt);
    a.f_local.assign(K, 0.0);
    a.f_edge.assign(K, 0.0);
    return a;
}

double SlotView::task_bits(int k) const { return scenario.task_bits(k, slot); }

double received_power(const CMat& H, const CVec& w) { return (H * w).squaredNorm(); }

double comm_sinr(int k, const SlotAllocation& a, const SlotView& v, int q) {
    const auto& H = v.channels.H;
    double interference = sensing_power(v.G[q], a.R1);
    for (int i = 0; i < static_cast<int>(H.size()); ++i) {
        if (i != k) interference += received_power(H[i], a.w[i]);
    }
    return received_power(H[k], a.w[k]) / (interference + interference_free_noise(v.scenario));
}

double offloaded_bits(int k, const SlotAllocation& a, const SlotView& v, int q) {
    if (a.t1 <= 0.0) return 0.0;
    return a.t1 * v.scenario.bandwidth * std::log2(1.0 + comm_sinr(k, a, v, q));
}

double radar_sinr_expected(const SlotAllocation& a, const SlotView& v, int q) {
    const double dt = v.scenario.slot_length();
    const double n0 = interference_free_noise(v.scenario);
    double comm = 0.0;
    for (std::size_t i = 0; i < v.channels.H.size(); ++i) comm += received_power(v.channels.H[i], a.w[i]);
    return (a.t0 / dt) * sensing_power(v.G[q], a.R0) / n0 + (a.t1 / dt) * sensing_power(v.G[q], a.R1) / (comm + n0);
}

double local_bits(int k, const SlotAllocation& a, const ScenarioConfig& s) {
    return a.f_local[k] * s.slot_length() / s.cycles_per_bit[k];
}

double edge_bits(int k, const SlotAllocation& a, const ScenarioConfig& s) {
    return a.f_edge[k] * a.t0 / s.cycles_per_bit[k];
}

double local_energy(int k, const SlotAllocation& a, const ScenarioConfig& s) {
    const double f = a.f_local[k];
    return s.uav_capacitance * f * f * f * s.slot_length();
}

double edge_energy(int k, const SlotAllocation& a, const ScenarioConfig& s) {
    const double f = a.f_edge[k];
    return s.server_capacitance * f * f * f * a.t0;
}

double comm_energy(const SlotAllocation& a) {
    double p = 0.0;
    for (const auto& w : a.w) p += w.squaredNorm();
    return a.t1 * p;
}

double sensing_energy(const SlotAllocation& a) { return a.t0 * a.R0.trace().real() + a.t1 * a.R1.trace().real(); }

DetectionStats lambda_pair(int l, const SlotAllocation& a, const SlotView& v) {
    const CVec& g = v.g[l];
    const double noise = v.scenario.warden_noise_power;
    DetectionStats st;
    st.lambda0 = g.dot(a.R0 * g).real() + noise;
    double uav = 0.0;
    for (std::size_t k = 0; k < a.w.size(); ++k) uav += std::norm(v.channels.h[l][k].dot(a.w[k]));
    st.lambda1 = uav + g.dot(a.R1 * g).real() + noise;
    return st;
}

SlotEnergy slot_energy(const SlotAllocation& a, const ScenarioConfig& s) {
    SlotEnergy e;
    e.comm = comm_energy(a);
    e.sensing = sensing_energy(a);
    for (int k = 0; k < s.num_uavs(); ++k) {
        e.local += local_energy(k, a, s);
        e.edge += edge_energy(k, a, s);
    }
    return e;
}

EnergyBreakdown energy_breakdown(const ResourceAllocation& a, const Trajectory& t, const ScenarioConfig& s) {
    EnergyBreakdown b;
    for (const auto& sa : a.slots) {
        const SlotEnergy e = slot_energy(sa, s);
        b.slots.push_back(e);
        b.comm += e.comm;
        b.sensing += e.sensing;
        b.local += e.local;
        b.edge += e.edge;
    }
    const auto sp = speeds(t);
    for (const auto& row : sp) {
        double uav = 0.0;
        for (double v : row) uav += propulsion_power(v, s.propulsion) * t.slot_length;
        b.propulsion_per_uav.push_back(uav);
        b.propulsion += uav;
    }
    b.total = (((b.comm + b.sensing) + b.local) + b.edge) + b.propulsion;
    return b;
}

std::string to_string(Family f) {
    switch (f) {
        case Family::sensing: return "sensing";
        case Family::comm_offload: return "comm-offload";
        case Family::comm_edge: return "comm-edge";
        case Family::covert: return "covert";
        case Family::cpu_local: return "cpu-local";
        case Family::cpu_edge: return "cpu-edge";
        case Family::uav_power: return "uav-power";
        case Family::ap_power: return "ap-power";
        case Family::time: return "time";
        case Family::psd: return "psd";
        case Family::speed: return "speed";
        case Family::endpoint: return "endpoint";
        case Family::uav_uav: return "uav-uav";
        case Family::uav_warden: return "uav-warden";
        case Family::uav_target: return "uav-target";
    }
    return "unknown";
}

double ResidualReport::max_residual() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& e : entries) {
        if (e.family != Family::psd) m = std::max(m, e.value);
    }
    return m;
}

double ResidualReport::max_residual(Family f) const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& e : entries) {
        if (e.family == f) m = std::max(m, e.value);
    }
    return m;
}

bool ResidualReport::satisfied(double tol) const {
    for (const auto& e : entries) {
        if (e.value > (e.family == Family::psd ? kPsdTolerance : tol)) return false;
    }
    return true;
}

const Residual* ResidualReport::worst(double tol) const {
    const Residual* w = nullptr;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : entries) {
        const double excess = e.value - (e.family == Family::psd ? kPsdTolerance : tol);
        if (excess > best) {
            best = excess;
            w = &e;
        }
    }
    return w;
}

void check_slot(const SlotAllocation& a, const SlotView& v, ResidualReport& out) {
    const ScenarioConfig& s = v.scenario;
    const int n = v.slot;
    const int K = s.num_uavs();
    const double dt = s.slot_length();
    auto add = [&](Family f, int k, int other, double value) { out.entries.push_back({f, n, k, other, value}); };

    for (std::size_t q = 0; q < v.G.size(); ++q) {
        const int qi = static_cast<int>(q);
        const double gm = s.radar_sinr_min;
        add(Family::sensing, -1, qi, (gm - radar_sinr_expected(a, v, qi)) / safe_scale(gm));
        for (int k = 0; k < K; ++k) {
            const double need = v.task_bits(k);
            add(Family::comm_offload, k, qi,
                (need - local_bits(k, a, s) - offloaded_bits(k, a, v, qi)) / safe_scale(need));
        }
    }
    double fu_sum = 0.0;
    for (int k = 0; k < K; ++k) {
        const double need = v.task_bits(k);
        add(Family::comm_edge, k, -1, (need - local_bits(k, a, s) - edge_bits(k, a, s)) / safe_scale(need));
        add(Family::cpu_local, k, -1, -a.f_local[k] / s.uav_cpu_max);
        add(Family::cpu_local, k, -1, (a.f_local[k] - s.uav_cpu_max) / s.uav_cpu_max);
        add(Family::cpu_edge, k, -1, -a.f_edge[k] / s.server_cpu_max);
        fu_sum += a.f_edge[k];
        const double p = a.w[k].squaredNorm();
        add(Family::uav_power, k, -1, (p - s.uav_power_max) / s.uav_power_max);
    }
    add(Family::cpu_edge, -1, -1, (fu_sum - s.server_cpu_max) / s.server_cpu_max);

    const double mu_max = s.covert_mu_max();
    for (int l = 0; l < s.num_wardens(); ++l) {
        add(Family::covert, -1, l, (lambda_pair(l, a, v).mu() - mu_max) / mu_max);
    }
    for (const CMat* R : {&a.R0, &a.R1}) {
        const double tr = R->trace().real();
        add(Family::ap_power, -1, -1, (tr - s.ap_power_max) / s.ap_power_max);
        add(Family::psd, -1, -1, tr > 0.0 ? -min_eigenvalue(*R) / tr : -min_eigenvalue(*R));
    }
    add(Family::time, -1, -1, -a.t0 / dt);
    add(Family::time, -1, -1, -a.t1 / dt);
    add(Family::time, -1, -1, (a.t0 + a.t1 - dt) / dt);
}

void check_mobility(const Trajectory& t, const ScenarioConfig& s, const std::vector<Vec3>& targets,
                    ResidualReport& out) {
    const int K = s.num_uavs();
    const int N = s.slots;
    if (t.num_uavs() != K || t.num_slots() != N) throw InputError("trajectory shape does not match scenario");
    const double step = s.speed_max * s.slot_length();
    const double dmin = safe_scale(s.min_separation);
    auto add = [&](Family f, int n, int k, int other, double value) { out.entries.push_back({f, n, k, other, value}); };
    for (int k = 0; k < K; ++k) {
        const auto& u = t.waypoints[k];
        add(Family::endpoint, -1, k, 0, (u.front() - s.uav_start[k]).norm() / step);
        add(Family::endpoint, -1, k, 1, (u.back() - s.uav_end[k]).norm() / step);
        for (int n = 0; n < N; ++n) add(Family::speed, n, k, -1, ((u[n + 1] - u[n]).norm() - step) / step);
    }
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            const Vec3 qk = uav_position(s, t, k, n);
            for (int i = 0; i < K; ++i) {
                if (i != k) {
                    add(Family::uav_uav, n, k, i,
                        (s.min_separation - (qk - uav_position(s, t, i, n)).norm()) / dmin);
                }
            }
            for (int l = 0; l < s.num_wardens(); ++l) {
                add(Family::uav_warden, n, k, l, (s.min_separation - (qk - s.warden_positions[l]).norm()) / dmin);
            }
            for (std::size_t q = 0; q < targets.size(); ++q) {
                add(Family::uav_target, n, k, static_cast<int>(q),
                    (s.min_separation - (qk - targets[q]).norm()) / dmin);
            }
        }
    }
}

ResidualReport check_p0(const ResourceAllocation& a, const Trajectory& t, const ChannelSet& ch,
                        const ScenarioConfig& s, const std::vector<Vec3>& targets) {
    if (static_cast<int>(a.slots.size()) != s.slots || static_cast<int>(ch.slots.size()) != s.slots) {
        throw InputError("allocation / channel slot count does not match scenario");
    }
    ResidualReport r;
    for (int n = 0; n < s.slots; ++n) {
        SlotView v{s, ch.slots[n], ch.g, ch.G, n};
        check_slot(a.slots[n], v, r);
    }
    check_mobility(t, s, targets, r);
    return r;
}

double offloading_ratio(const ResourceAllocation& a, const ScenarioConfig& s) {
    double offloaded = 0.0;
    for (const auto& sa : a.slots) {
        for (int k = 0; k < s.num_uavs(); ++k) offloaded += edge_bits(k, sa, s);
    }
    const double total = s.task_bits.sum();
    return total > 0.0 ? offloaded / total : 0.0;
}

}  // namespace covmec
