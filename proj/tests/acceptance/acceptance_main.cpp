// SPDX-License-Identifier: Apache-2.0
//
// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria (capped at 100).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "covmec/ao_driver.hpp"
#include "covmec/cli.hpp"
#include "covmec/covert.hpp"
#include "covmec/io.hpp"
#include "covmec/ra_solver.hpp"
#include "covmec/traj_solver.hpp"

using namespace covmec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int hardware_workers() { return std::max(1, std::min(8, static_cast<int>(std::thread::hardware_concurrency()))); }

// ---- 1: DEP closed form vs Monte Carlo -------------------------------------------

Outcome dep_monte_carlo() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::ostringstream os;
    for (double mu : {0.01, 0.0276, 0.1, 1.0, 10.0}) {
        const DetectionStats s{1.0, 1.0 + mu};
        const McDepResult mc = mc_dep_oracle(s, 1000000, 2024, 200, hardware_workers());
        const double analytic = dep_min(s);
        const double tol = 3.0 * mc.stderr_dep + 5e-3;
        const bool row = std::abs(analytic - mc.dep) <= tol;
        ok &= row;
        os << "mu=" << mu << " analytic=" << num(analytic) << " mc=" << num(mc.dep) << (row ? "" : " (off)") << "; ";
    }
    const bool exact = dep_min_mu(1.0) == 0.75 || std::abs(dep_min_mu(1.0) - 0.75) <= 1e-15;
    const double secs = seconds_since(t0);
    os << "mu=1 closed form " << num(dep_min_mu(1.0), 17) << "; " << num(secs, 3) << " s";
    return {ok && exact && secs < 10.0, os.str()};
}

// ---- 2: covert cap pairing ---------------------------------------------------------

Outcome table_consistency() {
    const double mu = F_inverse(0.01);
    return {std::abs(mu - 0.0276) <= 5e-4, "F_inverse(0.01) = " + num(mu, 8)};
}

// ---- 3: threshold optimality by brute force ----------------------------------------

Outcome threshold_optimality() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> l0(1e-3, 10.0), lmu(std::log(1e-3), std::log(100.0));
    double worst = -1.0;
    for (int i = 0; i < 20; ++i) {
        const double a = l0(rng);
        const DetectionStats s{a, a * (1.0 + std::exp(lmu(rng)))};
        const double best = dep_min(s);
        const double hi = 10.0 * s.lambda1;
        double grid = 2.0;
        for (int j = 0; j < 10000; ++j) {
            const double d = hi * j / 9999.0;
            grid = std::min(grid, dep_at_threshold(s, d));
        }
        worst = std::max(worst, best - grid);
    }
    return {worst <= 1e-4, "largest grid improvement over the closed form " + num(worst)};
}

// ---- 4: gradients vs central differences -----------------------------------------

Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> xy(-50.0, 350.0), h(50.0, 150.0);
    std::normal_distribution<double> g;
    const double step = 1e-2;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        ScenarioConfig s = ScenarioConfig::table1();
        const Vec3 u(xy(rng), xy(rng), h(rng));
        CVec w(s.uav_antennas);
        for (int i = 0; i < w.size(); ++i) w[i] = cplx(g(rng), g(rng));
        w *= 0.05;
        const Vec3 ex(step, 0, 0), ey(0, step, 0);
        const ValueGradient p = psi(s, u, w);
        const Vec2 fp((psi(s, u + ex, w).value - psi(s, u - ex, w).value) / (2 * step),
                      (psi(s, u + ey, w).value - psi(s, u - ey, w).value) / (2 * step));
        worst = std::max(worst, (p.grad - fp).norm() / fp.norm());
        const Vec3 wd(xy(rng), xy(rng), 105.0);
        const ValueGradient o = omega(s, u, wd, w);
        const Vec2 fo((omega(s, u + ex, wd, w).value - omega(s, u - ex, wd, w).value) / (2 * step),
                      (omega(s, u + ey, wd, w).value - omega(s, u - ey, wd, w).value) / (2 * step));
        worst = std::max(worst, (o.grad - fo).norm() / fo.norm());
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-4 && secs < 5.0, "worst relative error " + num(worst) + "; " + num(secs, 3) + " s"};
}

// ---- 5: hover power -------------------------------------------------------------

Outcome hover_power() {
    const double p = propulsion_power(0.0, PropulsionParams{});
    return {std::abs(p - 168.49) <= 1e-10 * 168.49, "P(0) = " + num(p, 17) + " W"};
}

// ---- 6: tangent under-estimator -------------------------------------------------

Outcome tangent_bound() {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    double worst_excess = -1.0, worst_tangent = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double x = u(rng), xt = u(rng);
        worst_excess = std::max(worst_excess, (kappa(x, xt) - std::exp(x)) / std::exp(x));
        worst_tangent = std::max(worst_tangent, std::abs(kappa(xt, xt) - std::exp(xt)) / std::exp(xt));
    }
    return {worst_excess <= 0.0 && worst_tangent <= 1e-12,
            "max relative excess " + num(worst_excess) + ", tangent mismatch " + num(worst_tangent)};
}

// ---- 7: SCA contract on random desk instances ----------------------------------

ScenarioConfig random_desk(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScenarioConfig s = ScenarioConfig::desk();
    const int K = 1 + static_cast<int>(u(rng) * 2.0);
    s.name = "random-desk";
    s.ap_positions = {Vec3(20 + 30 * u(rng), 20 + 30 * u(rng), 0), Vec3(70 + 30 * u(rng), 20 + 30 * u(rng), 0)};
    s.warden_positions = {Vec3(20 + 80 * u(rng), 140 + 40 * u(rng), 105)};
    s.uav_altitudes.assign(K, 100.0);
    s.uav_start.clear();
    s.uav_end.clear();
    for (int k = 0; k < K; ++k) {
        const double y = 60 + 40 * k + 10 * u(rng);
        s.uav_start.emplace_back(10 * u(rng), y);
        s.uav_end.emplace_back(90 + 10 * u(rng), y + 10 * (u(rng) - 0.5));
    }
    s.task_bits = Eigen::MatrixXd::Constant(K, s.slots, 3e6 + 5e6 * u(rng));
    s.cycles_per_bit.assign(K, 1e3);
    s.target_samples = 4;
    return s;
}

Outcome sca_contract() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(707);
    int instances = 0, slots = 0, bad_trace = 0, bad_resid = 0;
    double worst_resid = 0.0;
    for (int i = 0; i < 20; ++i) {
        const ScenarioConfig s = random_desk(rng);
        const auto targets = sample_sensing_area(s.sensing_box, s.target_samples);
        const ChannelSet ch = build_channels(s, straight_trajectory(s), targets);
        const auto res = solve_all_slots(s, ch, RaSettings{}, nullptr, hardware_workers());
        ++instances;
        for (int n = 0; n < s.slots; ++n) {
            const RaResult& r = res[n];
            ++slots;
            for (std::size_t j = 1; j < r.trace.size(); ++j) {
                if (r.trace[j].energy > r.trace[j - 1].energy + 1e-9) ++bad_trace;
            }
            const SlotView v{s, ch.slots[n], ch.g, ch.G, n};
            const double resid = slot_residuals(r.alloc, v).max_residual();
            worst_resid = std::max(worst_resid, resid);
            if (resid > 1e-6) ++bad_resid;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << instances << " instances, " << slots << " slots; non-monotone steps " << bad_trace << ", worst residual "
       << num(worst_resid) << "; " << num(secs, 3) << " s";
    return {bad_trace == 0 && bad_resid == 0 && secs < 120.0, os.str()};
}

// ---- 8: collapsed-instance grid oracle ----------------------------------------

// Cheapest local/edge split once the offloaded bits `off` are fixed; infinity
// when no split meets the task.
double compute_energy(const ScenarioConfig& s, double t0, double off) {
    const double I = s.task_bits(0, 0), D = s.cycles_per_bit[0], dt = s.slot_length();
    const double lo = std::max({0.0, I - off, I - s.server_cpu_max * t0 / D});
    const double hi = std::min(I, s.uav_cpu_max * dt / D);
    if (lo > hi) return std::numeric_limits<double>::infinity();
    auto energy = [&](double ll) {
        const double fl = ll * D / dt;
        const double fu = (I - ll) * D / t0;
        return s.uav_capacitance * fl * fl * fl * dt + s.server_capacitance * fu * fu * fu * t0;
    };
    double a = lo, b = hi;
    for (int i = 0; i < 200; ++i) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (energy(m1) <= energy(m2)) {
            b = m2;
        } else {
            a = m1;
        }
    }
    return energy(0.5 * (a + b));
}

Outcome collapsed_oracle() {
    ScenarioConfig s = ScenarioConfig::desk();
    s.mu_max = 1e6;
    s.radar_sinr_min = 1e-9;
    const auto targets = sample_sensing_area(s.sensing_box, s.target_samples);
    const ChannelSet ch = build_channels(s, straight_trajectory(s), targets);
    const SlotView v{s, ch.slots[0], ch.g, ch.G, 0};
    const RaResult r = sca_solve(v, RaSettings{});

    const CMat& H = ch.slots[0].H[0];
    Eigen::SelfAdjointEigenSolver<CMat> es(H.adjoint() * H);
    const double gain = es.eigenvalues().maxCoeff();
    const double n0 = s.num_aps() * s.rx_antennas * s.server_noise_power;
    const double dt = s.slot_length();

    auto total = [&](double t1, double p) {
        const double off = t1 * s.bandwidth * std::log2(1.0 + gain * p / n0);
        return t1 * p + compute_energy(s, dt - t1, off);
    };
    // Coarse grid, then two zooms around the best cell.
    double bt = 0.5 * dt, bp = 0.5 * s.uav_power_max, best = total(bt, bp);
    double t_lo = 1e-6 * dt, t_hi = dt * (1 - 1e-6), p_lo = 1e-9, p_hi = s.uav_power_max;
    for (int level = 0; level < 3; ++level) {
        const int n = 200;
        for (int i = 0; i <= n; ++i) {
            const double t1 = t_lo + (t_hi - t_lo) * i / n;
            for (int j = 0; j <= n; ++j) {
                const double p = p_lo + (p_hi - p_lo) * j / n;
                const double e = total(t1, p);
                if (e < best) {
                    best = e;
                    bt = t1;
                    bp = p;
                }
            }
        }
        const double wt = 4.0 * (t_hi - t_lo) / n, wp = 4.0 * (p_hi - p_lo) / n;
        t_lo = std::max(1e-6 * dt, bt - wt);
        t_hi = std::min(dt * (1 - 1e-6), bt + wt);
        p_lo = std::max(1e-12, bp - wp);
        p_hi = std::min(s.uav_power_max, bp + wp);
    }
    const double rel = std::abs(r.energy - best) / best;
    return {rel <= 0.02, "SCA " + num(r.energy, 8) + " J vs grid " + num(best, 8) + " J (relative gap " + num(rel) +
                             ")"};
}

// ---- 9: trust-region contract ---------------------------------------------------

Outcome trust_region_contract() {
    bool ok = true;
    std::ostringstream os;
    auto run = [&](const std::string& label, ScenarioConfig s, bool loop) {
        const auto targets = sample_sensing_area(s.sensing_box, s.target_samples);
        Trajectory t = straight_trajectory(s);
        if (loop) {
            for (int j = 1; j < s.slots; ++j) {
                const double a = 2.0 * std::numbers::pi * j / s.slots;
                t.waypoints[0][j] = s.uav_start[0] + Vec2(4.0 * std::sin(a), 4.0 * (1.0 - std::cos(a)));
            }
        }
        const ChannelSet ch = build_channels(s, t, targets);
        ResourceAllocation a;
        for (const RaResult& r : solve_all_slots(s, ch, RaSettings{})) a.slots.push_back(r.alloc);
        TrSettings st;
        st.min_radius = 1e-2;
        const TrResult r = trust_region_solve(t, a, s, targets, st);
        double last = propulsion_energy(t, s.propulsion);
        bool mono = true;
        for (const auto& e : r.trace) {
            if (!e.accepted) continue;
            mono &= e.objective < last;
            last = e.objective;
        }
        const double resid = p2_residuals(r.trajectory, a, s, targets).max_residual();
        const bool pass = mono && resid <= 1e-6 && r.trace.size() <= 100;
        ok &= pass;
        os << label << ": " << r.trace.size() << " iterations, propulsion " << num(propulsion_energy(t, s.propulsion), 8)
           << " -> " << num(r.propulsion, 8) << " J, residual " << num(resid) << (mono ? "" : ", non-monotone")
           << "; ";
    };
    run("desk", ScenarioConfig::desk(), false);
    ScenarioConfig loop = ScenarioConfig::desk();
    loop.uav_start = {Vec2(60, 70)};
    loop.uav_end = {Vec2(60, 70)};
    run("closed loop", loop, true);
    return {ok, os.str()};
}

// ---- 10: design ordering -------------------------------------------------------

Outcome design_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioConfig s = ScenarioConfig::desk();
    AoSettings st;
    st.jobs = hardware_workers();
    const SolveReport prop = alternate(s, st);
    ScenarioConfig raised = s;
    raised.ap_power_max = 90.0;
    const double e = prop.energy.total;
    std::ostringstream os;
    os << "proposed " << num(e, 10) << " J";
    bool ok = prop.residuals.satisfied();
    auto compare = [&](const std::string& name, const SolveReport& r) {
        ok &= e <= r.energy.total && r.residuals.satisfied();
        os << ", " << name << " " << num(r.energy.total, 10) << " J";
    };
    compare("straight", benchmark_straight_flight(s, st));
    compare("fixed-time", benchmark_fixed_time(s, st));
    compare("full-offload", benchmark_full_offloading(s, st));
    compare("power (90 W)", benchmark_power_allocation(raised, st));
    const double secs = seconds_since(t0);
    os << "; " << num(secs, 3) << " s";
    return {ok && secs < 600.0, os.str()};
}

// ---- 11: trends ----------------------------------------------------------------

Outcome trends() {
    const ScenarioConfig s = ScenarioConfig::desk();
    AoSettings st;
    st.jobs = hardware_workers();
    std::ostringstream os;
    bool ok = true;

    const auto pu = sweep(s, SweepParam::uav_power, {4e-3, 6e-3, 8e-3, 10e-3}, Design::proposed, st);
    os << "P_U:";
    for (std::size_t i = 0; i < pu.size(); ++i) {
        os << ' ' << num(pu[i].report.energy.total, 10);
        if (i > 0) ok &= pu[i].report.energy.total <= pu[i - 1].report.energy.total * 1.01;
    }
    const auto gm = sweep(s, SweepParam::radar_sinr, {0.1, 0.3, 0.5}, Design::proposed, st);
    os << "; Gamma_min:";
    for (std::size_t i = 0; i < gm.size(); ++i) {
        os << ' ' << num(gm[i].report.energy.total, 10);
        if (i > 0) ok &= gm[i].report.energy.total >= gm[i - 1].report.energy.total * 0.99;
    }
    const auto vu = sweep(s, SweepParam::server_capacitance, {1e-28, 1e-27}, Design::proposed, st);
    const double r0 = vu[0].report.offloading_ratio, r1 = vu[1].report.offloading_ratio;
    ok &= r1 < r0;
    os << "; offloading ratio " << num(r0) << " -> " << num(r1);
    return {ok, os.str()};
}

// ---- 12: determinism -----------------------------------------------------------

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "covmec_acceptance_determinism";
    fs::remove_all(dir);
    const std::string scen = std::string(COVMEC_SOURCE_DIR) + "/scenarios/desk.json";
    const std::vector<std::string> args = {"covmec", "solve", scen, "-o", dir.string(), "--jobs", "2"};
    std::ostringstream out, err;
    auto snapshot = [&]() {
        std::vector<std::pair<std::string, std::string>> files;
        for (const auto& e : fs::directory_iterator(dir)) files.emplace_back(e.path().filename().string(), read_file(e.path()));
        std::sort(files.begin(), files.end());
        return files;
    };
    if (run_cli(args, out, err) != kExitOk) return {false, "first run failed: " + err.str()};
    const auto first = snapshot();
    if (run_cli(args, out, err) != kExitOk) return {false, "second run failed: " + err.str()};
    const auto second = snapshot();
    const bool same = first == second && !first.empty();
    return {same, std::to_string(first.size()) + " files compared, " + (same ? "identical" : "different")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"DEP closed form vs Monte Carlo", dep_monte_carlo},
        {"covert cap pairing", table_consistency},
        {"optimal threshold vs brute force", threshold_optimality},
        {"channel-power gradients vs finite differences", gradients},
        {"hover power", hover_power},
        {"tangent under-estimator", tangent_bound},
        {"SCA monotonicity and exact feasibility", sca_contract},
        {"collapsed-instance grid oracle", collapsed_oracle},
        {"trust-region contract", trust_region_contract},
        {"design ordering", design_ordering},
        {"parameter trends", trends},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("criterion %2zu %s: %s | %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return std::min(failed, 100);
}
