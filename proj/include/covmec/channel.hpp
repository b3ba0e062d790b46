// SPDX-License-Identifier: Apache-2.0
//
// Line-of-sight ULA channels between APs, UAVs, wardens and sensing targets,
// and their derivatives with respect to the UAV's horizontal position.
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "covmec/scenario.hpp"

namespace covmec {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Nodes closer than this are treated as coincident (m).
inline constexpr double kMinNodeDistance = 1e-6;

/// ULA steering vector, entry i = exp(j 2 pi spacing cos(theta) i).
CVec steering(double theta, int n, double spacing);
/// Same as steering() but parameterised directly by cos(theta).
CVec steering_from_cos(double cos_theta, int n, double spacing);

struct ArrayConfig {
    int tx = 1;   // N_T
    int rx = 1;   // N_R
    int uav = 1;  // N_U
    double spacing = 0.5;
};

ArrayConfig array_config(const ScenarioConfig& s);

/// AP m <- UAV k link, N_R x N_U.
CMat offload_channel(const Vec3& uav, const Vec3& ap, double c0, const ArrayConfig& arr);
/// UAV k -> warden l link, N_U entries (conjugated on use: h^H w).
CVec warden_channel(const Vec3& uav, const Vec3& warden, double c0, const ArrayConfig& arr);
/// AP m -> warden l link, N_T entries.
CVec jamming_channel(const Vec3& ap, const Vec3& warden, double c0, const ArrayConfig& arr);
/// AP m -> target -> AP j cascaded link, N_R x N_T.
CMat sensing_channel(const Vec3& ap_tx, const Vec3& ap_rx, const Vec3& target, double c0, const ArrayConfig& arr);

/// Aggregate offloading channel of one UAV, (M N_R) x N_U, AP blocks stacked by row.
CMat aggregate_offload(const std::vector<Vec3>& aps, const Vec3& uav, double c0, const ArrayConfig& arr);
/// Aggregate jamming channel of one warden, M N_T entries.
CVec aggregate_jamming(const std::vector<Vec3>& aps, const Vec3& warden, double c0, const ArrayConfig& arr);
/// Aggregate sensing channel, (M N_R) x (M N_T); block (j, m) is the m -> target -> j link.
CMat aggregate_sensing(const std::vector<Vec3>& aps, const Vec3& target, double c0, const ArrayConfig& arr);

template <typename T>
struct Gradient2 {
    T dx;
    T dy;
};

/// Derivatives of offload_channel with respect to the UAV's x and y.
Gradient2<CMat> offload_channel_gradient(const Vec3& uav, const Vec3& ap, double c0, const ArrayConfig& arr);
/// Derivatives of warden_channel with respect to the UAV's x and y.
Gradient2<CVec> warden_channel_gradient(const Vec3& uav, const Vec3& warden, double c0, const ArrayConfig& arr);
/// Derivatives of aggregate_offload with respect to the UAV's x and y.
Gradient2<CMat> aggregate_offload_gradient(const std::vector<Vec3>& aps, const Vec3& uav, double c0,
                                           const ArrayConfig& arr);

/// Channels that depend on UAV positions during one slot.
struct SlotChannels {
    std::vector<CMat> H;               // [k], (M N_R) x N_U
    std::vector<std::vector<CVec>> h;  // [l][k], N_U
};

/// Every channel of an instance. g and G do not depend on the slot.
struct ChannelSet {
    std::vector<SlotChannels> slots;  // [n]
    std::vector<CVec> g;              // [l], M N_T
    std::vector<CMat> G;              // [q], (M N_R) x (M N_T)
};

SlotChannels slot_channels(const ScenarioConfig& s, const std::vector<Vec3>& uav_positions);
ChannelSet build_channels(const ScenarioConfig& s, const Trajectory& t, const std::vector<Vec3>& targets);

}  // namespace covmec
