// SPDX-License-Identifier: Apache-2.0
//
// Scenario geometry, time grid, physical parameters and UAV kinematics.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace covmec {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Rotary-wing propulsion model parameters (defaults: simulation table values).
struct PropulsionParams {
    double blade_profile_power = 79.86;  // P0 (W)
    double induced_power = 88.63;        // P_H (W)
    double tip_speed = 120.0;            // U_tip (m/s)
    double induced_velocity = 4.03;      // v0, mean rotor induced velocity in hover (m/s)
    double fuselage_drag_ratio = 0.6;    // d0
    double air_density = 1.225;          // rho0 (kg/m^3)
    double rotor_solidity = 0.05;        // s
    double rotor_disc_area = 0.503;      // A (m^2)
};

/// Axis-aligned box in metres.
struct Box {
    Vec3 lower = Vec3::Zero();
    Vec3 upper = Vec3::Zero();

    Vec3 extent() const { return upper - lower; }
    bool contains(const Vec3& p, double tol = 0.0) const;
};

/// Complete description of one system instance. Units are SI throughout
/// (m, s, W, Hz, bits, cycles/s).
struct ScenarioConfig {
    std::string name = "unnamed";

    // Geometry. AP heights are zero by construction.
    std::vector<Vec3> ap_positions;
    std::vector<Vec3> warden_positions;
    std::vector<double> uav_altitudes;
    std::vector<Vec2> uav_start;
    std::vector<Vec2> uav_end;
    Box sensing_box;
    int target_samples = 18;

    // Time grid.
    double duration = 30.0;  // T
    int slots = 30;          // N

    // Arrays.
    int tx_antennas = 16;  // N_T per AP
    int rx_antennas = 2;   // N_R per AP
    int uav_antennas = 2;  // N_U per UAV
    double antenna_spacing = 0.5;  // d / lambda

    // Radio.
    double reference_gain = 1e-3;      // C0
    double server_noise_power = 1e-10;  // sigma_R^2 (-100 dBW)
    double warden_noise_power = 1e-10;  // sigma_l^2 (-100 dBW)
    double bandwidth = 30e6;            // B
    double uav_power_max = 10e-3;       // P_U,max
    double ap_power_max = 30.0;         // P_AP,max (aggregate over APs)

    // Computation.
    double uav_cpu_max = 5e9;            // f_l,max
    double server_cpu_max = 50e9;        // f_u,max
    double uav_capacitance = 1e-26;      // v_l
    double server_capacitance = 1e-28;   // v_u
    Eigen::MatrixXd task_bits;           // I_k[n], K x N
    std::vector<double> cycles_per_bit;  // D_k

    // Requirements.
    double radar_sinr_min = 0.1;  // Gamma_min
    double mu_max = 0.0276;
    std::optional<double> dep_min;  // xi_min; when set, mu_max = F^{-1}(1 - xi_min)

    // Mobility.
    double speed_max = 20.0;     // V_max
    double min_separation = 20.0;  // D_min
    PropulsionParams propulsion;

    int num_aps() const { return static_cast<int>(ap_positions.size()); }
    int num_uavs() const { return static_cast<int>(uav_altitudes.size()); }
    int num_wardens() const { return static_cast<int>(warden_positions.size()); }
    double slot_length() const { return duration / slots; }

    /// mu_max, derived from dep_min when that is given.
    double covert_mu_max() const;

    /// Throws InputError describing the first inconsistency found.
    void validate() const;

    /// Simulation-table defaults with the packaged three-AP geometry.
    static ScenarioConfig table1();
    /// Small instance (M=2, K=1, L=1, N=6, N_T=4, N_R=N_U=2, Q=4) for fast runs.
    static ScenarioConfig desk();
};

/// Horizontal UAV waypoints u_k[n], n = 0..N. Slot n (0-based) is served at
/// waypoint n + 1; segment n runs from waypoint n to waypoint n + 1.
struct Trajectory {
    double slot_length = 1.0;
    std::vector<std::vector<Vec2>> waypoints;  // [uav][0..N]

    int num_uavs() const { return static_cast<int>(waypoints.size()); }
    int num_slots() const { return waypoints.empty() ? 0 : static_cast<int>(waypoints.front().size()) - 1; }

    /// Position of UAV k during slot n.
    Vec2 slot_position(int k, int n) const { return waypoints[k][n + 1]; }
};

/// Propulsion power at horizontal speed v (W). Throws InputError for v < 0.
double propulsion_power(double speed, const PropulsionParams& params);

/// Per-segment velocity vectors, [uav][segment].
std::vector<std::vector<Vec2>> velocities(const Trajectory& trajectory);
/// Per-segment speeds, [uav][segment].
std::vector<std::vector<double>> speeds(const Trajectory& trajectory);

/// Total propulsion energy sum_k sum_n P(|v_k[n]|) * dt.
double propulsion_energy(const Trajectory& trajectory, const PropulsionParams& params);

/// Uniform cell-centred grid of `count` points inside the box. Per-axis counts
/// follow the factorisation of `count` closest to the box's aspect ratio.
std::vector<Vec3> sample_sensing_area(const Box& box, int count);

/// Per-axis counts used by sample_sensing_area.
std::array<int, 3> sensing_grid_shape(const Box& box, int count);

/// Constant-velocity straight line from start to end for every UAV.
Trajectory straight_trajectory(const ScenarioConfig& scenario);

/// UAV position in 3D during slot n.
Vec3 uav_position(const ScenarioConfig& scenario, const Trajectory& trajectory, int k, int n);

enum class TrajectoryCheck { speed, endpoint, uav_uav, uav_warden, uav_target };

std::string to_string(TrajectoryCheck check);

struct TrajectoryViolation {
    TrajectoryCheck check;
    int uav = 0;
    int other = -1;  // second UAV, warden or target sample index
    int index = 0;   // slot, segment or endpoint (0 start, 1 end)
    double margin = 0.0;  // negative when violated (m)
};

struct FeasibilityReport {
    std::vector<TrajectoryViolation> violations;
    double worst_margin = 0.0;  // most negative margin seen (m), 0 when none
    bool feasible() const { return violations.empty(); }
};

/// Distance tolerance on trajectory feasibility checks (m).
inline constexpr double kDistanceTolerance = 1e-9;

FeasibilityReport validate_trajectory(const Trajectory& trajectory, const ScenarioConfig& scenario,
                                      const std::vector<Vec3>& targets);

}  // namespace covmec
