// SPDX-License-Identifier: Apache-2.0
//
// Alternating optimisation of resources and trajectories, the benchmark
// designs, and parameter sweeps.
#pragma once

#include <string>
#include <vector>

#include "covmec/ra_solver.hpp"
#include "covmec/traj_solver.hpp"

namespace covmec {

enum class Design { proposed, straight, power, fixed_time, full_offload };

std::string to_string(Design d);
/// Parses "proposed", "straight", "power", "fixed-time", "full-offload".
Design parse_design(const std::string& name);

struct AoSettings {
    RaSettings ra;
    TrSettings tr;
    double tolerance = 1e-3;  // relative energy change that ends the loop
    int max_rounds = 10;
    int jobs = 1;
    /// Power-allocation design: retry with this AP budget (W) when the
    /// scenario's own budget is infeasible.
    double fallback_ap_power = 90.0;
};

struct AoRound {
    int round = 0;
    double energy = 0.0;      // J, total
    double propulsion = 0.0;  // J
    int ra_iterations = 0;    // SCA iterations summed over slots
    int tr_iterations = 0;
    bool accepted = true;     // false for a final round that raised the energy and was discarded
    double seconds = 0.0;
};

struct SolveReport {
    Design design = Design::proposed;
    ScenarioConfig scenario;  // as solved (the AP budget may have been raised)
    bool ap_budget_raised = false;
    std::vector<Vec3> targets;
    Trajectory trajectory;
    ResourceAllocation allocation;
    EnergyBreakdown energy;
    std::vector<AoRound> rounds;
    std::vector<std::vector<RaTraceEntry>> ra_traces;  // [slot], last accepted round
    std::vector<TrTraceEntry> tr_trace;                 // every round, in order
    ResidualReport residuals;
    double offloading_ratio = 0.0;
    double seconds = 0.0;
};

/// Runs the design on the scenario. Straight flight skips the trajectory step;
/// the other benchmarks fix their degree of freedom and alternate as usual.
SolveReport run_design(const ScenarioConfig& s, Design d, const AoSettings& settings = {});

SolveReport alternate(const ScenarioConfig& s, const AoSettings& settings = {});
SolveReport benchmark_straight_flight(const ScenarioConfig& s, const AoSettings& settings = {});
SolveReport benchmark_power_allocation(const ScenarioConfig& s, const AoSettings& settings = {});
SolveReport benchmark_fixed_time(const ScenarioConfig& s, const AoSettings& settings = {});
SolveReport benchmark_full_offloading(const ScenarioConfig& s, const AoSettings& settings = {});

enum class SweepParam { uav_power, radar_sinr, task_bits, server_capacitance };

std::string to_string(SweepParam p);
/// Parses "uav-power", "radar-sinr", "task-bits", "server-capacitance".
SweepParam parse_sweep_param(const std::string& name);
/// Copy of `s` with the parameter set to `value` (task bits: every entry).
ScenarioConfig with_parameter(const ScenarioConfig& s, SweepParam p, double value);

struct SweepPoint {
    double value = 0.0;
    SolveReport report;
};

/// One run per value. Points are spread over `settings.jobs` workers, each
/// solving its slots sequentially.
std::vector<SweepPoint> sweep(const ScenarioConfig& s, SweepParam p, const std::vector<double>& values,
                              Design d = Design::proposed, const AoSettings& settings = {});

}  // namespace covmec
