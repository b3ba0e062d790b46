// SPDX-License-Identifier: Apache-2.0
//
// Trust-region trajectory optimisation with the resource allocation held fixed.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "covmec/conic.hpp"
#include "covmec/metrics.hpp"

namespace covmec {

struct ValueGradient {
    double value = 0.0;
    Vec2 grad = Vec2::Zero();  // d value / d (x, y) of the UAV
};

/// Received communication power ||H(u) w||^2 summed over every AP, and its
/// gradient in the UAV's horizontal position.
ValueGradient psi(const ScenarioConfig& s, const Vec3& uav, const CVec& w);
/// Power |h(u)^H w|^2 leaked to one warden, and its gradient.
ValueGradient omega(const ScenarioConfig& s, const Vec3& uav, const Vec3& warden, const CVec& w);

/// Pushes waypoints that sit closer than the separation limit apart along the
/// separating direction. Endpoints are never moved.
Trajectory repair_spacing(const Trajectory& t, const ScenarioConfig& s, const std::vector<Vec3>& targets);

struct TrSettings {
    double initial_radius = 5.0;  // m
    double min_radius = 1e-2;     // m
    int max_iterations = 100;
    /// Exact constraint residual an accepted step may have. Kept well below
    /// the reporting tolerance so the next allocation round can start from
    /// the previous allocation.
    double feasibility_tol = 1e-10;
    ConicSettings conic;
};

struct TrTraceEntry {
    int iteration = 0;
    double radius = 0.0;
    double objective = 0.0;  // exact propulsion energy of the candidate (J)
    double model_objective = 0.0;
    double max_residual = 0.0;
    bool accepted = false;
    std::string solver_status;
};

struct TrResult {
    Trajectory trajectory;
    double propulsion = 0.0;  // J
    std::vector<TrTraceEntry> trace;
};

/// Residuals of the trajectory-dependent constraints (sensing, offloaded
/// bits, covertness, mobility) of `t` under a fixed allocation.
ResidualReport p2_residuals(const Trajectory& t, const ResourceAllocation& a, const ScenarioConfig& s,
                            const std::vector<Vec3>& targets);

struct P22 {
    ConicProgram program;
    Eigen::VectorXd start;
    /// Waypoint coordinates, [k][j] for j = 0..N; fixed endpoints are constants.
    std::vector<std::vector<std::array<LinExpr, 2>>> u;
    Trajectory extract(const Eigen::VectorXd& x, double slot_length) const;
};

/// Convex model around `t` with trust radius `radius`. The first-order models
/// of the sensing, offloading and covertness rows are tightened by
/// `curvature` times the squared waypoint displacement (rows are normalised
/// to unit scale), which makes them inner approximations once `curvature`
/// bounds the true curvature.
P22 build_p22(const Trajectory& t, double radius, const ResourceAllocation& a, const ScenarioConfig& s,
              const std::vector<Vec3>& targets, double curvature = 0.0);

TrResult trust_region_solve(const Trajectory& init, const ResourceAllocation& a, const ScenarioConfig& s,
                            const std::vector<Vec3>& targets, const TrSettings& settings = {});

}  // namespace covmec
