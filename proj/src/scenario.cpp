// SPDX-License-Identifier: Apache-2.0
#include "covmec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covmec/covert.hpp"
#include "covmec/errors.hpp"

namespace covmec {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw InputError(msg); }

void require(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

bool Box::contains(const Vec3& p, double tol) const {
    for (int i = 0; i < 3; ++i) {
        if (p[i] < lower[i] - tol || p[i] > upper[i] + tol) return false;
    }
    return true;
}

double ScenarioConfig::covert_mu_max() const {
    if (dep_min) return F_inverse(1.0 - *dep_min);
    return mu_max;
}

void ScenarioConfig::validate() const {
    const int M = num_aps();
    const int K = num_uavs();
    require(M >= 1, "at least one AP is required");
    require(K >= 1, "at least one UAV is required");
    require(slots >= 1, "slot count N must be >= 1");
    require(finite_positive(duration), "service duration T must be positive");
    require(tx_antennas >= 1 && rx_antennas >= 1 && uav_antennas >= 1, "antenna counts must be >= 1");
    require(finite_positive(antenna_spacing), "antenna spacing must be positive");
    require(target_samples >= 1, "target sample count Q must be >= 1");

    for (int m = 0; m < M; ++m) {
        require(ap_positions[m].allFinite(), "AP position is not finite");
        require(ap_positions[m].z() == 0.0, "AP heights must be zero");
    }
    for (const auto& w : warden_positions) {
        require(w.allFinite(), "warden position is not finite");
        require(w.z() >= 0.0, "warden height must be >= 0");
    }
    require(static_cast<int>(uav_start.size()) == K && static_cast<int>(uav_end.size()) == K,
            "uav_start and uav_end must have one entry per UAV");
    for (int k = 0; k < K; ++k) {
        require(finite_positive(uav_altitudes[k]), "UAV altitudes must be positive");
        require(uav_start[k].allFinite() && uav_end[k].allFinite(), "UAV endpoints must be finite");
        const double need = (uav_end[k] - uav_start[k]).norm();
        if (need > speed_max * duration * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "UAV " << k << " cannot reach its final location: needs " << need << " m, can fly "
               << speed_max * duration << " m";
            fail(os.str());
        }
    }
    const Vec3 ext = sensing_box.extent();
    require(ext.allFinite() && (ext.array() > 0.0).all(), "sensing box must have positive extent on every axis");

    require(finite_positive(reference_gain), "C0 must be positive");
    require(finite_positive(server_noise_power) && finite_positive(warden_noise_power),
            "noise powers must be positive");
    require(finite_positive(bandwidth), "bandwidth must be positive");
    require(finite_positive(uav_power_max) && finite_positive(ap_power_max), "power budgets must be positive");
    require(finite_positive(uav_cpu_max) && finite_positive(server_cpu_max), "CPU caps must be positive");
    require(finite_positive(uav_capacitance) && finite_positive(server_capacitance),
            "capacitance coefficients must be positive");
    require(task_bits.rows() == K && task_bits.cols() == slots, "task_bits must be K x N");
    require(task_bits.allFinite() && (task_bits.array() >= 0.0).all(), "task sizes must be finite and >= 0");
    require(static_cast<int>(cycles_per_bit.size()) == K, "cycles_per_bit must have one entry per UAV");
    for (double d : cycles_per_bit) require(finite_positive(d), "cycles per bit must be positive");

    require(std::isfinite(radar_sinr_min) && radar_sinr_min >= 0.0, "Gamma_min must be >= 0");
    if (dep_min) {
        require(*dep_min > 0.0 && *dep_min < 1.0, "xi_min must lie in (0, 1)");
    } else {
        require(finite_positive(mu_max), "mu_max must be positive");
    }
    require(finite_positive(speed_max), "V_max must be positive");
    require(std::isfinite(min_separation) && min_separation >= 0.0, "D_min must be >= 0");

    const auto& p = propulsion;
    require(p.blade_profile_power >= 0.0 && p.induced_power >= 0.0, "propulsion powers must be >= 0");
    require(finite_positive(p.tip_speed) && finite_positive(p.induced_velocity), "U_tip and v0 must be positive");
    require(p.fuselage_drag_ratio >= 0.0 && p.air_density >= 0.0 && p.rotor_solidity >= 0.0 &&
                p.rotor_disc_area >= 0.0,
            "drag parameters must be >= 0");
}

ScenarioConfig ScenarioConfig::table1() {
    ScenarioConfig s;
    s.name = "table1";
    s.ap_positions = {Vec3(100, 100, 0), Vec3(200, 100, 0), Vec3(150, 220, 0)};
    s.warden_positions = {Vec3(220, 30, 105), Vec3(220, 270, 105)};
    s.uav_altitudes = {100.0, 100.0};
    s.uav_start = {Vec2(0, 120), Vec2(0, 180)};
    s.uav_end = {Vec2(300, 120), Vec2(300, 180)};
    s.sensing_box = Box{Vec3(140, 140, 10), Vec3(160, 160, 20)};
    s.target_samples = 18;
    s.task_bits = Eigen::MatrixXd::Constant(2, s.slots, 7e6);
    s.cycles_per_bit = {1e3, 1e3};
    return s;
}

ScenarioConfig ScenarioConfig::desk() {
    ScenarioConfig s;
    s.name = "desk";
    s.duration = 6.0;
    s.slots = 6;
    s.tx_antennas = 4;
    s.rx_antennas = 2;
    s.uav_antennas = 2;
    s.ap_positions = {Vec3(40, 40, 0), Vec3(80, 40, 0)};
    s.warden_positions = {Vec3(60, 150, 105)};
    s.uav_altitudes = {100.0};
    s.uav_start = {Vec2(10, 70)};
    s.uav_end = {Vec2(100, 70)};
    s.sensing_box = Box{Vec3(50, 30, 10), Vec3(70, 50, 20)};
    s.target_samples = 4;
    s.task_bits = Eigen::MatrixXd::Constant(1, s.slots, 7e6);
    s.cycles_per_bit = {1e3};
    return s;
}

double propulsion_power(double speed, const PropulsionParams& p) {
    if (!(speed >= 0.0)) throw InputError("propulsion_power: speed must be >= 0");
    const double v2 = speed * speed;
    const double v04 = std::pow(p.induced_velocity, 4);
    const double blade = p.blade_profile_power * (1.0 + 3.0 * v2 / (p.tip_speed * p.tip_speed));
    const double parasite = 0.5 * p.fuselage_drag_ratio * p.air_density * p.rotor_solidity * p.rotor_disc_area *
                            v2 * speed;
    // sqrt(1+x^2) - x evaluated as 1/(sqrt(1+x^2)+x) to avoid cancellation at high speed.
    const double x = v2 / (2.0 * p.induced_velocity * p.induced_velocity);
    const double induced_ratio = 1.0 / (std::sqrt(1.0 + v2 * v2 / (4.0 * v04)) + x);
    return blade + parasite + p.induced_power * std::sqrt(induced_ratio);
}

std::vector<std::vector<Vec2>> velocities(const Trajectory& t) {
    std::vector<std::vector<Vec2>> out(t.waypoints.size());
    for (std::size_t k = 0; k < t.waypoints.size(); ++k) {
        const auto& u = t.waypoints[k];
        if (u.size() < 2) throw InputError("trajectory needs at least two waypoints per UAV");
        for (std::size_t n = 0; n + 1 < u.size(); ++n) out[k].push_back((u[n + 1] - u[n]) / t.slot_length);
    }
    return out;
}

std::vector<std::vector<double>> speeds(const Trajectory& t) {
    auto v = velocities(t);
    std::vector<std::vector<double>> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        for (const auto& vk : v[k]) out[k].push_back(vk.norm());
    }
    return out;
}

double propulsion_energy(const Trajectory& t, const PropulsionParams& params) {
    double total = 0.0;
    for (const auto& row : speeds(t)) {
        for (double v : row) total += propulsion_power(v, params) * t.slot_length;
    }
    return total;
}

std::array<int, 3> sensing_grid_shape(const Box& box, int count) {
    if (count < 1) throw InputError("sample count must be >= 1");
    const Vec3 ext = box.extent();
    if (!ext.allFinite() || (ext.array() <= 0.0).any()) throw InputError("degenerate sensing box");

    const double ll[3] = {std::log(ext[0]), std::log(ext[1]), std::log(ext[2])};
    // Axis indices by decreasing length, for tie-breaking.
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ext[a] > ext[b]; });

    std::array<int, 3> best = {count, 1, 1};
    double best_score = std::numeric_limits<double>::infinity();
    for (int nx = 1; nx <= count; ++nx) {
        if (count % nx) continue;
        for (int ny = 1; ny <= count / nx; ++ny) {
            if ((count / nx) % ny) continue;
            const int nz = count / nx / ny;
            const std::array<int, 3> n = {nx, ny, nz};
            double d[3], mean = 0.0;
            for (int i = 0; i < 3; ++i) {
                d[i] = std::log(static_cast<double>(n[i])) - ll[i];
                mean += d[i] / 3.0;
            }
            double score = 0.0;
            for (double di : d) score += (di - mean) * (di - mean);
            bool take = score < best_score - 1e-12;
            if (!take && std::abs(score - best_score) <= 1e-12) {
                for (int a : order) {
                    if (n[a] != best[a]) {
                        take = n[a] > best[a];
                        break;
                    }
                }
            }
            if (take) {
                best = n;
                best_score = score;
            }
        }
    }
    return best;
}

std::vector<Vec3> sample_sensing_area(const Box& box, int count) {
    const auto n = sensing_grid_shape(box, count);
    const Vec3 ext = box.extent();
    std::vector<Vec3> pts;
    pts.reserve(count);
    for (int i = 0; i < n[0]; ++i) {
        for (int j = 0; j < n[1]; ++j) {
            for (int l = 0; l < n[2]; ++l) {
                pts.emplace_back(box.lower.x() + (i + 0.5) * ext.x() / n[0],
                                 box.lower.y() + (j + 0.5) * ext.y() / n[1],
                                 box.lower.z() + (l + 0.5) * ext.z() / n[2]);
            }
        }
    }
    return pts;
}

Trajectory straight_trajectory(const ScenarioConfig& s) {
    Trajectory t;
    t.slot_length = s.slot_length();
    t.waypoints.resize(s.num_uavs());
    for (int k = 0; k < s.num_uavs(); ++k) {
        for (int n = 0; n <= s.slots; ++n) {
            const double a = static_cast<double>(n) / s.slots;
            t.waypoints[k].push_back((1.0 - a) * s.uav_start[k] + a * s.uav_end[k]);
        }
        t.waypoints[k].back() = s.uav_end[k];
    }
    return t;
}

Vec3 uav_position(const ScenarioConfig& s, const Trajectory& t, int k, int n) {
    const Vec2 u = t.slot_position(k, n);
    return Vec3(u.x(), u.y(), s.uav_altitudes[k]);
}

std::string to_string(TrajectoryCheck c) {
    switch (c) {
        case TrajectoryCheck::speed: return "speed";
        case TrajectoryCheck::endpoint: return "endpoint";
        case TrajectoryCheck::uav_uav: return "uav-uav separation";
        case TrajectoryCheck::uav_warden: return "uav-warden separation";
        case TrajectoryCheck::uav_target: return "uav-target separation";
    }
    return "unknown";
}

FeasibilityReport validate_trajectory(const Trajectory& t, const ScenarioConfig& s,
                                      const std::vector<Vec3>& targets) {
    FeasibilityReport rep;
    auto note = [&](TrajectoryCheck c, int k, int other, int index, double margin) {
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -kDistanceTolerance) rep.violations.push_back({c, k, other, index, margin});
    };

    const int K = s.num_uavs();
    if (t.num_uavs() != K) throw InputError("trajectory UAV count does not match scenario");
    for (int k = 0; k < K; ++k) {
        if (static_cast<int>(t.waypoints[k].size()) != s.slots + 1) {
            throw InputError("trajectory must have N+1 waypoints per UAV");
        }
    }
    const int N = s.slots;
    const double step = s.speed_max * s.slot_length();
    for (int k = 0; k < K; ++k) {
        const auto& u = t.waypoints[k];
        note(TrajectoryCheck::endpoint, k, -1, 0, -(u.front() - s.uav_start[k]).norm());
        note(TrajectoryCheck::endpoint, k, -1, 1, -(u.back() - s.uav_end[k]).norm());
        for (int n = 0; n < N; ++n) note(TrajectoryCheck::speed, k, -1, n, step - (u[n + 1] - u[n]).norm());
    }
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            const Vec3 qk = uav_position(s, t, k, n);
            for (int i = k + 1; i < K; ++i) {
                note(TrajectoryCheck::uav_uav, k, i, n, (qk - uav_position(s, t, i, n)).norm() - s.min_separation);
            }
            for (int l = 0; l < s.num_wardens(); ++l) {
                note(TrajectoryCheck::uav_warden, k, l, n, (qk - s.warden_positions[l]).norm() - s.min_separation);
            }
            for (std::size_t q = 0; q < targets.size(); ++q) {
                note(TrajectoryCheck::uav_target, k, static_cast<int>(q), n,
                     (qk - targets[q]).norm() - s.min_separation);
            }
        }
    }
    return rep;
}

}  // namespace covmec
