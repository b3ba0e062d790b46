// SPDX-License-Identifier: Apache-2.0
#include "covmec/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "covmec/errors.hpp"

namespace covmec {

namespace {

double checked_distance(const Vec3& a, const Vec3& b, const char* what) {
    const double d = (a - b).norm();
    if (!(d >= kMinNodeDistance)) {
        std::ostringstream os;
        os << what << ": nodes coincide (distance " << d << " m)";
        throw SingularityError(os.str());
    }
    return d;
}

double clamp_cos(double c) { return std::clamp(c, -1.0, 1.0); }

// d/dc of steering_from_cos: entry i times j 2 pi s i.
CVec steering_dcos(const CVec& a, double spacing) {
    CVec out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out[i] = cplx(0.0, 2.0 * std::numbers::pi * spacing * static_cast<double>(i)) * a[i];
    }
    return out;
}

// Link from a moving UAV to a fixed node with vertical offset dz (fixed), where
// the steering cosine is dz / d. Returns d(1/d)/dx, d(cos)/dx (and y).
struct LinkGeometry {
    double d;
    double cos;
    double dinv_dx, dinv_dy;
    double dcos_dx, dcos_dy;
};

LinkGeometry link_geometry(const Vec3& uav, const Vec3& fixed, double dz, const char* what) {
    LinkGeometry g;
    g.d = checked_distance(uav, fixed, what);
    g.cos = clamp_cos(dz / g.d);
    const double d3 = g.d * g.d * g.d;
    const double ex = fixed.x() - uav.x();
    const double ey = fixed.y() - uav.y();
    g.dinv_dx = ex / d3;
    g.dinv_dy = ey / d3;
    g.dcos_dx = dz * ex / d3;
    g.dcos_dy = dz * ey / d3;
    return g;
}

}  // namespace

CVec steering_from_cos(double cos_theta, int n, double spacing) {
    CVec a(n);
    for (int i = 0; i < n; ++i) a[i] = std::polar(1.0, 2.0 * std::numbers::pi * spacing * cos_theta * i);
    return a;
}

CVec steering(double theta, int n, double spacing) { return steering_from_cos(std::cos(theta), n, spacing); }

ArrayConfig array_config(const ScenarioConfig& s) {
    return ArrayConfig{s.tx_antennas, s.rx_antennas, s.uav_antennas, s.antenna_spacing};
}

CMat offload_channel(const Vec3& uav, const Vec3& ap, double c0, const ArrayConfig& arr) {
    const double d = checked_distance(uav, ap, "offload channel");
    const double c = clamp_cos((uav.z() - ap.z()) / d);
    const CVec a = steering_from_cos(c, arr.rx, arr.spacing);
    const CVec u = steering_from_cos(c, arr.uav, arr.spacing);
    return (std::sqrt(c0) / d) * a * u.transpose();
}

CVec warden_channel(const Vec3& uav, const Vec3& warden, double c0, const ArrayConfig& arr) {
    const double d = checked_distance(uav, warden, "warden channel");
    const double c = clamp_cos((warden.z() - uav.z()) / d);
    return (std::sqrt(c0) / d) * steering_from_cos(c, arr.uav, arr.spacing);
}

CVec jamming_channel(const Vec3& ap, const Vec3& warden, double c0, const ArrayConfig& arr) {
    const double d = checked_distance(ap, warden, "jamming channel");
    const double c = clamp_cos((warden.z() - ap.z()) / d);
    return (std::sqrt(c0) / d) * steering_from_cos(c, arr.tx, arr.spacing);
}

CMat sensing_channel(const Vec3& ap_tx, const Vec3& ap_rx, const Vec3& target, double c0, const ArrayConfig& arr) {
    const double dm = checked_distance(ap_tx, target, "sensing channel");
    const double dj = checked_distance(ap_rx, target, "sensing channel");
    const CVec at = steering_from_cos(clamp_cos((target.z() - ap_tx.z()) / dm), arr.tx, arr.spacing);
    const CVec ar = steering_from_cos(clamp_cos((target.z() - ap_rx.z()) / dj), arr.rx, arr.spacing);
    return (c0 / (dm * dj)) * ar * at.transpose();
}

CMat aggregate_offload(const std::vector<Vec3>& aps, const Vec3& uav, double c0, const ArrayConfig& arr) {
    const int M = static_cast<int>(aps.size());
    CMat H(M * arr.rx, arr.uav);
    for (int m = 0; m < M; ++m) H.middleRows(m * arr.rx, arr.rx) = offload_channel(uav, aps[m], c0, arr);
    return H;
}

CVec aggregate_jamming(const std::vector<Vec3>& aps, const Vec3& warden, double c0, const ArrayConfig& arr) {
    const int M = static_cast<int>(aps.size());
    CVec g(M * arr.tx);
    for (int m = 0; m < M; ++m) g.segment(m * arr.tx, arr.tx) = jamming_channel(aps[m], warden, c0, arr);
    return g;
}

CMat aggregate_sensing(const std::vector<Vec3>& aps, const Vec3& target, double c0, const ArrayConfig& arr) {
    const int M = static_cast<int>(aps.size());
    CMat G(M * arr.rx, M * arr.tx);
    for (int j = 0; j < M; ++j) {
        for (int m = 0; m < M; ++m) {
            G.block(j * arr.rx, m * arr.tx, arr.rx, arr.tx) = sensing_channel(aps[m], aps[j], target, c0, arr);
        }
    }
    return G;
}

Gradient2<CMat> offload_channel_gradient(const Vec3& uav, const Vec3& ap, double c0, const ArrayConfig& arr) {
    const auto g = link_geometry(uav, ap, uav.z() - ap.z(), "offload channel");
    const CVec a = steering_from_cos(g.cos, arr.rx, arr.spacing);
    const CVec u = steering_from_cos(g.cos, arr.uav, arr.spacing);
    const CVec da = steering_dcos(a, arr.spacing);
    const CVec du = steering_dcos(u, arr.spacing);
    const double sc = std::sqrt(c0);
    const CMat outer = a * u.transpose();
    const CMat douter = da * u.transpose() + a * du.transpose();
    return {sc * (g.dinv_dx * outer + (g.dcos_dx / g.d) * douter),
            sc * (g.dinv_dy * outer + (g.dcos_dy / g.d) * douter)};
}

Gradient2<CVec> warden_channel_gradient(const Vec3& uav, const Vec3& warden, double c0, const ArrayConfig& arr) {
    const auto g = link_geometry(uav, warden, warden.z() - uav.z(), "warden channel");
    const CVec u = steering_from_cos(g.cos, arr.uav, arr.spacing);
    const CVec du = steering_dcos(u, arr.spacing);
    const double sc = std::sqrt(c0);
    return {sc * (g.dinv_dx * u + (g.dcos_dx / g.d) * du), sc * (g.dinv_dy * u + (g.dcos_dy / g.d) * du)};
}

Gradient2<CMat> aggregate_offload_gradient(const std::vector<Vec3>& aps, const Vec3& uav, double c0,
                                           const ArrayConfig& arr) {
    const int M = static_cast<int>(aps.size());
    Gradient2<CMat> out{CMat(M * arr.rx, arr.uav), CMat(M * arr.rx, arr.uav)};
    for (int m = 0; m < M; ++m) {
        auto gm = offload_channel_gradient(uav, aps[m], c0, arr);
        out.dx.middleRows(m * arr.rx, arr.rx) = gm.dx;
        out.dy.middleRows(m * arr.rx, arr.rx) = gm.dy;
    }
    return out;
}

SlotChannels slot_channels(const ScenarioConfig& s, const std::vector<Vec3>& uav_positions) {
    const ArrayConfig arr = array_config(s);
    SlotChannels sc;
    for (const auto& q : uav_positions) sc.H.push_back(aggregate_offload(s.ap_positions, q, s.reference_gain, arr));
    sc.h.resize(s.num_wardens());
    for (int l = 0; l < s.num_wardens(); ++l) {
        for (const auto& q : uav_positions) {
            sc.h[l].push_back(warden_channel(q, s.warden_positions[l], s.reference_gain, arr));
        }
    }
    return sc;
}

ChannelSet build_channels(const ScenarioConfig& s, const Trajectory& t, const std::vector<Vec3>& targets) {
    const ArrayConfig arr = array_config(s);
    ChannelSet cs;
    for (int n = 0; n < t.num_slots(); ++n) {
        std::vector<Vec3> pos;
        for (int k = 0; k < s.num_uavs(); ++k) pos.push_back(uav_position(s, t, k, n));
        cs.slots.push_back(slot_channels(s, pos));
    }
    for (const auto& w : s.warden_positions) cs.g.push_back(aggregate_jamming(s.ap_positions, w, s.reference_gain, arr));
    for (const auto& q : targets) cs.G.push_back(aggregate_sensing(s.ap_positions, q, s.reference_gain, arr));
    return cs;
}

}  // namespace covmec
