// SPDX-License-Identifier: Apache-2.0
#include "covmec/ao_driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include <Eigen/SVD>

#include "covmec/errors.hpp"

namespace covmec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Unit right singular vector of the strongest single-AP link, phase-fixed so
// that its first non-negligible entry is real and positive.
CVec matched_direction(const ScenarioConfig& s, const Vec3& uav) {
    const ArrayConfig arr = array_config(s);
    CMat best;
    double best_norm = -1.0;
    for (const Vec3& ap : s.ap_positions) {
        CMat H = offload_channel(uav, ap, s.reference_gain, arr);
        const double n = H.squaredNorm();
        if (n > best_norm) {
            best_norm = n;
            best = std::move(H);
        }
    }
    Eigen::JacobiSVD<CMat> svd(best, Eigen::ComputeThinV);
    CVec d = svd.matrixV().col(0);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (std::abs(d[i]) > 1e-12) {
            d *= std::conj(d[i]) / std::abs(d[i]);
            break;
        }
    }
    return d / d.norm();
}

std::vector<std::vector<CVec>> matched_directions(const ScenarioConfig& s, const Trajectory& t) {
    std::vector<std::vector<CVec>> out(t.num_slots());
    for (int n = 0; n < t.num_slots(); ++n) {
        for (int k = 0; k < s.num_uavs(); ++k) out[n].push_back(matched_direction(s, uav_position(s, t, k, n)));
    }
    return out;
}

RaSettings variant_settings(Design d, const RaSettings& base) {
    RaSettings st = base;
    switch (d) {
        case Design::power:
            st.variant.fixed_directions = true;
            st.variant.isotropic_sensing = true;
            break;
        case Design::fixed_time:
            st.variant.fixed_time_ratio = true;
            st.variant.time_ratio = 4.0;
            break;
        case Design::full_offload:
            st.variant.full_offload = true;
            break;
        case Design::proposed:
        case Design::straight:
            break;
    }
    return st;
}

struct RaRound {
    ResourceAllocation alloc;
    std::vector<std::vector<RaTraceEntry>> traces;
    int iterations = 0;
};

RaRound allocate(const ScenarioConfig& s, const Trajectory& t, const ChannelSet& ch, const RaSettings& st,
                 const ResourceAllocation* warm, int jobs) {
    RaSettings local = st;
    if (local.variant.fixed_directions) {
        local.slot_directions = matched_directions(s, t);
        local.variant.directions = local.slot_directions.front();
    }
    const std::vector<RaResult> res = solve_all_slots(s, ch, local, warm, jobs);
    RaRound out;
    for (const RaResult& r : res) {
        out.alloc.slots.push_back(r.alloc);
        out.traces.push_back(r.trace);
        out.iterations += static_cast<int>(r.trace.size()) - 1;
    }
    return out;
}

SolveReport run_once(const ScenarioConfig& s, Design d, const AoSettings& settings) {
    const auto start = Clock::now();
    s.validate();
    SolveReport rep;
    rep.design = d;
    rep.scenario = s;
    rep.targets = sample_sensing_area(s.sensing_box, s.target_samples);

    const bool move = d != Design::straight;
    Trajectory traj = straight_trajectory(s);
    if (move) traj = repair_spacing(traj, s, rep.targets);
    const RaSettings ra = variant_settings(d, settings.ra);
    const int jobs = std::max(settings.jobs, 1);

    auto t0 = Clock::now();
    ChannelSet ch = build_channels(s, traj, rep.targets);
    RaRound cur = allocate(s, traj, ch, ra, nullptr, jobs);
    double energy = energy_breakdown(cur.alloc, traj, s).total;
    rep.rounds.push_back({1, energy, propulsion_energy(traj, s.propulsion), cur.iterations, 0, true, seconds_since(t0)});

    for (int round = 2; move && round <= settings.max_rounds; ++round) {
        t0 = Clock::now();
        TrResult tr = trust_region_solve(traj, cur.alloc, s, rep.targets, settings.tr);
        rep.tr_trace.insert(rep.tr_trace.end(), tr.trace.begin(), tr.trace.end());
        ChannelSet ch_next = build_channels(s, tr.trajectory, rep.targets);
        RaRound next = allocate(s, tr.trajectory, ch_next, ra, &cur.alloc, jobs);
        const double e_next = energy_breakdown(next.alloc, tr.trajectory, s).total;
        const int tr_iters = static_cast<int>(tr.trace.size());
        if (e_next > energy) {
            rep.rounds.push_back(
                {round, e_next, tr.propulsion, next.iterations, tr_iters, false, seconds_since(t0)});
            break;
        }
        rep.rounds.push_back({round, e_next, tr.propulsion, next.iterations, tr_iters, true, seconds_since(t0)});
        const double rel = (energy - e_next) / std::max(std::abs(energy), 1e-300);
        traj = std::move(tr.trajectory);
        ch = std::move(ch_next);
        cur = std::move(next);
        energy = e_next;
        if (rel < settings.tolerance) break;
    }

    rep.trajectory = traj;
    rep.allocation = cur.alloc;
    rep.ra_traces = cur.traces;
    rep.energy = energy_breakdown(rep.allocation, rep.trajectory, s);
    rep.residuals = check_p0(rep.allocation, rep.trajectory, ch, s, rep.targets);
    rep.offloading_ratio = offloading_ratio(rep.allocation, s);
    rep.seconds = seconds_since(start);
    return rep;
}

}  // namespace

std::string to_string(Design d) {
    switch (d) {
        case Design::proposed: return "proposed";
        case Design::straight: return "straight";
        case Design::power: return "power";
        case Design::fixed_time: return "fixed-time";
        case Design::full_offload: return "full-offload";
    }
    return "unknown";
}

Design parse_design(const std::string& name) {
    for (Design d : {Design::proposed, Design::straight, Design::power, Design::fixed_time, Design::full_offload}) {
        if (to_string(d) == name) return d;
    }
    throw InputError("unknown design '" + name + "' (expected proposed, straight, power, fixed-time or full-offload)");
}

SolveReport run_design(const ScenarioConfig& s, Design d, const AoSettings& settings) {
    if (d != Design::power) return run_once(s, d, settings);
    try {
        return run_once(s, d, settings);
    } catch (const InfeasibleError&) {
        if (settings.fallback_ap_power <= s.ap_power_max) throw;
    }
    ScenarioConfig raised = s;
    raised.ap_power_max = settings.fallback_ap_power;
    SolveReport rep = run_once(raised, d, settings);
    rep.ap_budget_raised = true;
    return rep;
}

SolveReport alternate(const ScenarioConfig& s, const AoSettings& settings) {
    return run_design(s, Design::proposed, settings);
}
SolveReport benchmark_straight_flight(const ScenarioConfig& s, const AoSettings& settings) {
    return run_design(s, Design::straight, settings);
}
SolveReport benchmark_power_allocation(const ScenarioConfig& s, const AoSettings& settings) {
    return run_design(s, Design::power, settings);
}
SolveReport benchmark_fixed_time(const ScenarioConfig& s, const AoSettings& settings) {
    return run_design(s, Design::fixed_time, settings);
}
SolveReport benchmark_full_offloading(const ScenarioConfig& s, const AoSettings& settings) {
    return run_design(s, Design::full_offload, settings);
}

std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::uav_power: return "uav-power";
        case SweepParam::radar_sinr: return "radar-sinr";
        case SweepParam::task_bits: return "task-bits";
        case SweepParam::server_capacitance: return "server-capacitance";
    }
    return "unknown";
}

SweepParam parse_sweep_param(const std::string& name) {
    for (SweepParam p :
         {SweepParam::uav_power, SweepParam::radar_sinr, SweepParam::task_bits, SweepParam::server_capacitance}) {
        if (to_string(p) == name) return p;
    }
    throw InputError("unknown sweep parameter '" + name +
                     "' (expected uav-power, radar-sinr, task-bits or server-capacitance)");
}

ScenarioConfig with_parameter(const ScenarioConfig& s, SweepParam p, double value) {
    if (!std::isfinite(value)) throw InputError("sweep value must be finite");
    ScenarioConfig out = s;
    switch (p) {
        case SweepParam::uav_power: out.uav_power_max = value; break;
        case SweepParam::radar_sinr: out.radar_sinr_min = value; break;
        case SweepParam::task_bits: out.task_bits.setConstant(value); break;
        case SweepParam::server_capacitance: out.server_capacitance = value; break;
    }
    out.validate();
    return out;
}

std::vector<SweepPoint> sweep(const ScenarioConfig& s, SweepParam p, const std::vector<double>& values, Design d,
                              const AoSettings& settings) {
    const int n = static_cast<int>(values.size());
    std::vector<SweepPoint> out(n);
    std::vector<std::exception_ptr> errors(n);
    AoSettings inner = settings;
    inner.jobs = 1;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                out[i].value = values[i];
                out[i].report = run_design(with_parameter(s, p, values[i]), d, inner);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(settings.jobs, 1, std::max(n, 1));
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
