// SPDX-License-Identifier: Apache-2.0
//
// Performance expressions (SINRs, bits, energies) and constraint residuals of
// the joint energy-minimisation problem.
#pragma once

#include <string>
#include <vector>

#include "covmec/channel.hpp"
#include "covmec/covert.hpp"
#include "covmec/scenario.hpp"

namespace covmec {

/// Decision variables of one slot.
struct SlotAllocation {
    std::vector<CVec> w;  // [k], N_U beamformer of UAV k (amplitude, sqrt(W))
    CMat R0;              // sensing covariance during the computing phase, (M N_T)^2
    CMat R1;              // sensing covariance during the offloading phase
    std::vector<double> f_local;  // [k] cycles/s
    std::vector<double> f_edge;   // [k] cycles/s
    double t0 = 0.0;  // computing-sensing phase (s)
    double t1 = 0.0;  // offloading-sensing phase (s)

    /// All-zero allocation with the right shapes.
    static SlotAllocation zeros(const ScenarioConfig& s);
};

struct ResourceAllocation {
    std::vector<SlotAllocation> slots;
};

/// Everything metrics need about one slot.
struct SlotView {
    const ScenarioConfig& scenario;
    const SlotChannels& channels;
    const std::vector<CVec>& g;  // [l]
    const std::vector<CMat>& G;  // [q]
    double task_bits(int k) const;
    int slot;
};

/// tr(H_k w_k w_k^H H_k^H) = ||H_k w_k||^2.
double received_power(const CMat& H, const CVec& w);

/// Communication SINR of UAV k, treating other UAVs and the offloading-phase
/// sensing echo from target sample q as interference.
double comm_sinr(int k, const SlotAllocation& a, const SlotView& v, int q);
/// Bits offloaded by UAV k: t1 B log2(1 + SINR).
double offloaded_bits(int k, const SlotAllocation& a, const SlotView& v, int q);
/// Expected radar SINR at target sample q (weights t0/dT and t1/dT, not renormalised).
double radar_sinr_expected(const SlotAllocation& a, const SlotView& v, int q);

double local_bits(int k, const SlotAllocation& a, const ScenarioConfig& s);
double edge_bits(int k, const SlotAllocation& a, const ScenarioConfig& s);
double local_energy(int k, const SlotAllocation& a, const ScenarioConfig& s);
double edge_energy(int k, const SlotAllocation& a, const ScenarioConfig& s);
/// t1 sum_k ||w_k||^2.
double comm_energy(const SlotAllocation& a);
/// t0 tr(R0) + t1 tr(R1).
double sensing_energy(const SlotAllocation& a);

/// Expected warden-l received powers without / with UAV transmission.
DetectionStats lambda_pair(int l, const SlotAllocation& a, const SlotView& v);

struct SlotEnergy {
    double comm = 0.0;
    double sensing = 0.0;
    double local = 0.0;  // summed over UAVs
    double edge = 0.0;   // summed over UAVs
    /// comm + sensing + local + edge, summed in that order.
    double total() const { return ((comm + sensing) + local) + edge; }
};

struct EnergyBreakdown {
    std::vector<SlotEnergy> slots;
    std::vector<double> propulsion_per_uav;  // [k] J
    double comm = 0.0, sensing = 0.0, local = 0.0, edge = 0.0, propulsion = 0.0;
    /// comm + sensing + local + edge + propulsion, summed in that order.
    double total = 0.0;
};

SlotEnergy slot_energy(const SlotAllocation& a, const ScenarioConfig& s);
/// Totals are accumulated slot by slot in slot order, then over UAVs for propulsion.
EnergyBreakdown energy_breakdown(const ResourceAllocation& a, const Trajectory& t, const ScenarioConfig& s);

/// Constraint families of the full problem.
enum class Family {
    sensing,       // expected radar SINR >= Gamma_min
    comm_offload,  // local + offloaded bits >= I
    comm_edge,     // local + edge-computed bits >= I
    covert,        // mu <= mu_max
    cpu_local,     // 0 <= f_l <= f_l,max
    cpu_edge,      // f_u >= 0, sum f_u <= f_u,max
    uav_power,     // ||w||^2 <= P_U,max
    ap_power,      // tr(R) <= P_AP,max
    time,          // t0, t1 >= 0, t0 + t1 <= dT
    psd,           // R0, R1 PSD
    speed,
    endpoint,
    uav_uav,
    uav_warden,
    uav_target,
};

std::string to_string(Family f);

/// Normalised residual: > 0 means violated by that fraction of the
/// constraint's natural scale (its right-hand side when nonzero).
struct Residual {
    Family family;
    int slot = -1;
    int uav = -1;
    int other = -1;  // warden, target sample or second UAV
    double value = 0.0;
};

/// Tolerance on PSD residuals: min eigenvalue >= -1e-8 tr(R).
inline constexpr double kPsdTolerance = 1e-8;

struct ResidualReport {
    std::vector<Residual> entries;

    /// Largest residual over all entries except PSD ones.
    double max_residual() const;
    /// Largest residual of one family (-inf when absent).
    double max_residual(Family f) const;
    /// Every entry within tolerance (PSD entries use kPsdTolerance).
    bool satisfied(double tol = 1e-6) const;
    /// Worst entry relative to its tolerance; nullptr when empty.
    const Residual* worst(double tol = 1e-6) const;
};

/// Residuals of the per-slot constraint subset (everything except mobility).
void check_slot(const SlotAllocation& a, const SlotView& v, ResidualReport& out);
/// Residuals of trajectory-dependent constraints that do not involve resources.
void check_mobility(const Trajectory& t, const ScenarioConfig& s, const std::vector<Vec3>& targets,
                    ResidualReport& out);
/// Full residual report over every slot, sample, UAV and warden.
ResidualReport check_p0(const ResourceAllocation& a, const Trajectory& t, const ChannelSet& ch,
                        const ScenarioConfig& s, const std::vector<Vec3>& targets);

/// Sum of UAV-edge bits over all slots divided by the sum of task bits.
double offloading_ratio(const ResourceAllocation& a, const ScenarioConfig& s);

}  // namespace covmec
