// SPDX-License-Identifier: Apache-2.0
#include "covmec/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace covmec {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string located(const std::string& origin, int line, const std::string& msg) {
    std::ostringstream os;
    os << origin;
    if (line > 0) os << ':' << line;
    os << ": " << msg;
    return os.str();
}

int line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Walks a parsed document while remembering the source text so that
// semantic errors can point at the line of the offending key.
class Reader {
public:
    Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        int line = 0;
        if (!key.empty()) {
            const auto pos = text_.find('"' + key + '"');
            if (pos != std::string::npos) line = line_of_offset(text_, pos);
        }
        throw ParseError(origin_, line, key.empty() ? msg : "'" + key + "': " + msg);
    }

    void only(const json& obj, const std::string& where, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) fail(where, "expected an object");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!allowed.count(it.key())) fail(it.key(), "unknown key in '" + where + "'");
        }
    }

    double number(const json& v, const std::string& key) const {
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }

    int integer(const json& v, const std::string& key) const {
        if (!v.is_number_integer()) fail(key, "expected an integer");
        return v.get<int>();
    }

    std::vector<double> numbers(const json& v, const std::string& key) const {
        if (!v.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) out.push_back(number(e, key));
        return out;
    }

    Vec3 vec3(const json& v, const std::string& key) const {
        const auto n = numbers(v, key);
        if (n.size() != 3) fail(key, "expected [x, y, z]");
        return {n[0], n[1], n[2]};
    }

    Vec2 vec2(const json& v, const std::string& key) const {
        const auto n = numbers(v, key);
        if (n.size() != 2) fail(key, "expected [x, y]");
        return {n[0], n[1]};
    }

    std::vector<Vec3> vec3s(const json& v, const std::string& key) const {
        if (!v.is_array()) fail(key, "expected an array of [x, y, z]");
        std::vector<Vec3> out;
        for (const auto& e : v) out.push_back(vec3(e, key));
        return out;
    }

    std::vector<Vec2> vec2s(const json& v, const std::string& key) const {
        if (!v.is_array()) fail(key, "expected an array of [x, y]");
        std::vector<Vec2> out;
        for (const auto& e : v) out.push_back(vec2(e, key));
        return out;
    }

    template <typename F>
    void opt(const json& obj, const char* key, F&& f) const {
        if (obj.contains(key)) f(obj.at(key), std::string(key));
    }

    const std::string& origin() const { return origin_; }

private:
    const std::string& text_;
    std::string origin_;
};

ScenarioConfig scenario_from_json(const json& doc, const Reader& rd) {
    rd.only(doc, "scenario",
            {"schema", "name", "geometry", "time", "arrays", "radio", "compute", "requirements", "mobility"});
    if (!doc.contains("schema")) rd.fail("", "missing 'schema' (expected \"" + std::string(kScenarioSchema) + "\")");
    if (!doc.at("schema").is_string() || doc.at("schema").get<std::string>() != kScenarioSchema) {
        rd.fail("schema", "unsupported schema (expected \"" + std::string(kScenarioSchema) + "\")");
    }

    ScenarioConfig s = ScenarioConfig::table1();
    rd.opt(doc, "name", [&](const json& v, const std::string& k) {
        if (!v.is_string()) rd.fail(k, "expected a string");
        s.name = v.get<std::string>();
    });

    // Per-UAV data may be given as a scalar (broadcast) or explicitly; resolved
    // after the geometry fixes K and N.
    json task_bits = 7e6;
    json cycles = 1e3;

    rd.opt(doc, "geometry", [&](const json& g, const std::string& where) {
        rd.only(g, where,
                {"aps", "wardens", "uav_altitudes_m", "uav_start", "uav_end", "sensing_box", "target_samples"});
        rd.opt(g, "aps", [&](const json& v, const std::string& k) { s.ap_positions = rd.vec3s(v, k); });
        rd.opt(g, "wardens", [&](const json& v, const std::string& k) { s.warden_positions = rd.vec3s(v, k); });
        rd.opt(g, "uav_altitudes_m", [&](const json& v, const std::string& k) { s.uav_altitudes = rd.numbers(v, k); });
        rd.opt(g, "uav_start", [&](const json& v, const std::string& k) { s.uav_start = rd.vec2s(v, k); });
        rd.opt(g, "uav_end", [&](const json& v, const std::string& k) { s.uav_end = rd.vec2s(v, k); });
        rd.opt(g, "sensing_box", [&](const json& b, const std::string& k) {
            rd.only(b, k, {"lower", "upper"});
            rd.opt(b, "lower", [&](const json& v, const std::string& kk) { s.sensing_box.lower = rd.vec3(v, kk); });
            rd.opt(b, "upper", [&](const json& v, const std::string& kk) { s.sensing_box.upper = rd.vec3(v, kk); });
        });
        rd.opt(g, "target_samples", [&](const json& v, const std::string& k) { s.target_samples = rd.integer(v, k); });
    });
    rd.opt(doc, "time", [&](const json& t, const std::string& where) {
        rd.only(t, where, {"duration_s", "slots"});
        rd.opt(t, "duration_s", [&](const json& v, const std::string& k) { s.duration = rd.number(v, k); });
        rd.opt(t, "slots", [&](const json& v, const std::string& k) { s.slots = rd.integer(v, k); });
    });
    rd.opt(doc, "arrays", [&](const json& a, const std::string& where) {
        rd.only(a, where, {"ap_tx", "ap_rx", "uav", "spacing_wavelengths"});
        rd.opt(a, "ap_tx", [&](const json& v, const std::string& k) { s.tx_antennas = rd.integer(v, k); });
        rd.opt(a, "ap_rx", [&](const json& v, const std::string& k) { s.rx_antennas = rd.integer(v, k); });
        rd.opt(a, "uav", [&](const json& v, const std::string& k) { s.uav_antennas = rd.integer(v, k); });
        rd.opt(a, "spacing_wavelengths",
               [&](const json& v, const std::string& k) { s.antenna_spacing = rd.number(v, k); });
    });
    rd.opt(doc, "radio", [&](const json& r, const std::string& where) {
        rd.only(r, where,
                {"reference_gain", "server_noise_power_w", "warden_noise_power_w", "bandwidth_hz", "uav_power_max_w",
                 "ap_power_max_w"});
        rd.opt(r, "reference_gain", [&](const json& v, const std::string& k) { s.reference_gain = rd.number(v, k); });
        rd.opt(r, "server_noise_power_w",
               [&](const json& v, const std::string& k) { s.server_noise_power = rd.number(v, k); });
        rd.opt(r, "warden_noise_power_w",
               [&](const json& v, const std::string& k) { s.warden_noise_power = rd.number(v, k); });
        rd.opt(r, "bandwidth_hz", [&](const json& v, const std::string& k) { s.bandwidth = rd.number(v, k); });
        rd.opt(r, "uav_power_max_w", [&](const json& v, const std::string& k) { s.uav_power_max = rd.number(v, k); });
        rd.opt(r, "ap_power_max_w", [&](const json& v, const std::string& k) { s.ap_power_max = rd.number(v, k); });
    });
    rd.opt(doc, "compute", [&](const json& c, const std::string& where) {
        rd.only(c, where,
                {"uav_cpu_max_hz", "server_cpu_max_hz", "uav_capacitance", "server_capacitance", "task_bits",
                 "cycles_per_bit"});
        rd.opt(c, "uav_cpu_max_hz", [&](const json& v, const std::string& k) { s.uav_cpu_max = rd.number(v, k); });
        rd.opt(c, "server_cpu_max_hz",
               [&](const json& v, const std::string& k) { s.server_cpu_max = rd.number(v, k); });
        rd.opt(c, "uav_capacitance", [&](const json& v, const std::string& k) { s.uav_capacitance = rd.number(v, k); });
        rd.opt(c, "server_capacitance",
               [&](const json& v, const std::string& k) { s.server_capacitance = rd.number(v, k); });
        rd.opt(c, "task_bits", [&](const json& v, const std::string&) { task_bits = v; });
        rd.opt(c, "cycles_per_bit", [&](const json& v, const std::string&) { cycles = v; });
    });
    rd.opt(doc, "requirements", [&](const json& r, const std::string& where) {
        rd.only(r, where, {"radar_sinr_min", "mu_max", "dep_min"});
        rd.opt(r, "radar_sinr_min", [&](const json& v, const std::string& k) { s.radar_sinr_min = rd.number(v, k); });
        rd.opt(r, "mu_max", [&](const json& v, const std::string& k) { s.mu_max = rd.number(v, k); });
        rd.opt(r, "dep_min", [&](const json& v, const std::string& k) {
            if (v.is_null()) {
                s.dep_min.reset();
            } else {
                s.dep_min = rd.number(v, k);
            }
        });
    });
    rd.opt(doc, "mobility", [&](const json& m, const std::string& where) {
        rd.only(m, where, {"speed_max_mps", "min_separation_m", "propulsion"});
        rd.opt(m, "speed_max_mps", [&](const json& v, const std::string& k) { s.speed_max = rd.number(v, k); });
        rd.opt(m, "min_separation_m", [&](const json& v, const std::string& k) { s.min_separation = rd.number(v, k); });
        rd.opt(m, "propulsion", [&](const json& p, const std::string& pw) {
            auto& pp = s.propulsion;
            rd.only(p, pw,
                    {"blade_profile_power_w", "induced_power_w", "tip_speed_mps", "induced_velocity_mps",
                     "fuselage_drag_ratio", "air_density_kgm3", "rotor_solidity", "rotor_disc_area_m2"});
            rd.opt(p, "blade_profile_power_w",
                   [&](const json& v, const std::string& k) { pp.blade_profile_power = rd.number(v, k); });
            rd.opt(p, "induced_power_w", [&](const json& v, const std::string& k) { pp.induced_power = rd.number(v, k); });
            rd.opt(p, "tip_speed_mps", [&](const json& v, const std::string& k) { pp.tip_speed = rd.number(v, k); });
            rd.opt(p, "induced_velocity_mps",
                   [&](const json& v, const std::string& k) { pp.induced_velocity = rd.number(v, k); });
            rd.opt(p, "fuselage_drag_ratio",
                   [&](const json& v, const std::string& k) { pp.fuselage_drag_ratio = rd.number(v, k); });
            rd.opt(p, "air_density_kgm3", [&](const json& v, const std::string& k) { pp.air_density = rd.number(v, k); });
            rd.opt(p, "rotor_solidity", [&](const json& v, const std::string& k) { pp.rotor_solidity = rd.number(v, k); });
            rd.opt(p, "rotor_disc_area_m2",
                   [&](const json& v, const std::string& k) { pp.rotor_disc_area = rd.number(v, k); });
        });
    });

    const int K = s.num_uavs();
    const int N = s.slots;
    if (N < 1) rd.fail("slots", "must be >= 1");
    if (task_bits.is_number()) {
        s.task_bits = Eigen::MatrixXd::Constant(K, N, task_bits.get<double>());
    } else if (task_bits.is_array() && !task_bits.empty() && task_bits.front().is_number()) {
        const auto per_uav = rd.numbers(task_bits, "task_bits");
        if (static_cast<int>(per_uav.size()) != K) rd.fail("task_bits", "expected one entry per UAV");
        s.task_bits.resize(K, N);
        for (int k = 0; k < K; ++k) s.task_bits.row(k).setConstant(per_uav[k]);
    } else if (task_bits.is_array()) {
        if (static_cast<int>(task_bits.size()) != K) rd.fail("task_bits", "expected K rows of N entries");
        s.task_bits.resize(K, N);
        for (int k = 0; k < K; ++k) {
            const auto row = rd.numbers(task_bits[k], "task_bits");
            if (static_cast<int>(row.size()) != N) rd.fail("task_bits", "expected K rows of N entries");
            for (int n = 0; n < N; ++n) s.task_bits(k, n) = row[n];
        }
    } else {
        rd.fail("task_bits", "expected a number, a per-UAV array or a K x N array");
    }
    if (cycles.is_number()) {
        s.cycles_per_bit.assign(K, cycles.get<double>());
    } else {
        s.cycles_per_bit = rd.numbers(cycles, "cycles_per_bit");
    }
    return s;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

json cvec_json(const CVec& v) {
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(v[i].real());
        im.push_back(v[i].imag());
    }
    return json{{"re", re}, {"im", im}};
}

json cmat_json(const CMat& m) {
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json rr = json::array(), ir = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ir.push_back(m(i, j).imag());
        }
        re.push_back(rr);
        im.push_back(ir);
    }
    return json{{"re", re}, {"im", im}};
}

// JSON has no representation for non-finite numbers.
json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

json scenario_json(const ScenarioConfig& s) {
    json geometry;
    json aps = json::array(), wardens = json::array(), start = json::array(), end = json::array();
    for (const auto& p : s.ap_positions) aps.push_back(vec_json(p));
    for (const auto& p : s.warden_positions) wardens.push_back(vec_json(p));
    for (const auto& p : s.uav_start) start.push_back(vec_json(p));
    for (const auto& p : s.uav_end) end.push_back(vec_json(p));
    geometry["aps"] = aps;
    geometry["wardens"] = wardens;
    geometry["uav_altitudes_m"] = s.uav_altitudes;
    geometry["uav_start"] = start;
    geometry["uav_end"] = end;
    geometry["sensing_box"] = {{"lower", vec_json(s.sensing_box.lower)}, {"upper", vec_json(s.sensing_box.upper)}};
    geometry["target_samples"] = s.target_samples;

    json bits = json::array();
    for (Eigen::Index k = 0; k < s.task_bits.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index n = 0; n < s.task_bits.cols(); ++n) row.push_back(s.task_bits(k, n));
        bits.push_back(row);
    }
    const auto& p = s.propulsion;
    json doc;
    doc["schema"] = kScenarioSchema;
    doc["name"] = s.name;
    doc["geometry"] = geometry;
    doc["time"] = {{"duration_s", s.duration}, {"slots", s.slots}};
    doc["arrays"] = {{"ap_tx", s.tx_antennas},
                     {"ap_rx", s.rx_antennas},
                     {"uav", s.uav_antennas},
                     {"spacing_wavelengths", s.antenna_spacing}};
    doc["radio"] = {{"reference_gain", s.reference_gain},     {"server_noise_power_w", s.server_noise_power},
                    {"warden_noise_power_w", s.warden_noise_power}, {"bandwidth_hz", s.bandwidth},
                    {"uav_power_max_w", s.uav_power_max},     {"ap_power_max_w", s.ap_power_max}};
    doc["compute"] = {{"uav_cpu_max_hz", s.uav_cpu_max},
                      {"server_cpu_max_hz", s.server_cpu_max},
                      {"uav_capacitance", s.uav_capacitance},
                      {"server_capacitance", s.server_capacitance},
                      {"task_bits", bits},
                      {"cycles_per_bit", s.cycles_per_bit}};
    json req = {{"radar_sinr_min", s.radar_sinr_min}, {"mu_max", s.mu_max}};
    req["dep_min"] = s.dep_min ? json(*s.dep_min) : json(nullptr);
    doc["requirements"] = req;
    doc["mobility"] = {{"speed_max_mps", s.speed_max},
                       {"min_separation_m", s.min_separation},
                       {"propulsion",
                        {{"blade_profile_power_w", p.blade_profile_power},
                         {"induced_power_w", p.induced_power},
                         {"tip_speed_mps", p.tip_speed},
                         {"induced_velocity_mps", p.induced_velocity},
                         {"fuselage_drag_ratio", p.fuselage_drag_ratio},
                         {"air_density_kgm3", p.air_density},
                         {"rotor_solidity", p.rotor_solidity},
                         {"rotor_disc_area_m2", p.rotor_disc_area}}}};
    return doc;
}

json trajectory_json(const Trajectory& t) {
    json uavs = json::array();
    for (const auto& u : t.waypoints) {
        json pts = json::array();
        for (const auto& p : u) pts.push_back(vec_json(p));
        uavs.push_back(pts);
    }
    return json{{"slot_length_s", t.slot_length}, {"waypoints", uavs}};
}

double time_ratio(const ResourceAllocation& a) {
    double t0 = 0.0, t1 = 0.0;
    for (const auto& s : a.slots) {
        t0 += s.t0;
        t1 += s.t1;
    }
    return t1 > 0.0 ? t0 / t1 : std::numeric_limits<double>::infinity();
}

double offloaded_bits_total(const SolveReport& r) {
    double sum = 0.0;
    for (const auto& sa : r.allocation.slots) {
        for (int k = 0; k < r.scenario.num_uavs(); ++k) sum += edge_bits(k, sa, r.scenario);
    }
    return sum;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string svg_num(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

}  // namespace

ParseError::ParseError(const std::string& origin, int line, const std::string& msg)
    : InputError(located(origin, line, msg)), line_(line) {}

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const int line = e.byte > 0 ? line_of_offset(text, e.byte - 1) : 1;
        std::string what = e.what();
        const auto pos = what.find("parse error");
        throw ParseError(origin, line, pos == std::string::npos ? what : what.substr(pos));
    }
    const Reader rd(text, origin);
    ScenarioConfig s = scenario_from_json(doc, rd);
    try {
        s.validate();
    } catch (const InputError& e) {
        throw ParseError(origin, 0, e.what());
    }
    return s;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string() + ": cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ScenarioConfig load_scenario(const fs::path& path) { return parse_scenario(read_file(path), path.string()); }

std::string scenario_to_json(const ScenarioConfig& s) { return scenario_json(s).dump(2) + "\n"; }

std::string report_to_json(const SolveReport& r) {
    const ScenarioConfig& s = r.scenario;
    json doc;
    doc["schema"] = kResultSchema;
    doc["design"] = to_string(r.design);
    doc["ap_budget_raised"] = r.ap_budget_raised;
    doc["scenario"] = scenario_json(s);

    json targets = json::array();
    for (const auto& t : r.targets) targets.push_back(vec_json(t));
    doc["targets"] = targets;
    doc["trajectory"] = trajectory_json(r.trajectory);

    json slots = json::array();
    for (std::size_t n = 0; n < r.allocation.slots.size(); ++n) {
        const SlotAllocation& a = r.allocation.slots[n];
        json w = json::array();
        for (const auto& wk : a.w) w.push_back(cvec_json(wk));
        json e;
        if (n < r.energy.slots.size()) {
            const SlotEnergy& se = r.energy.slots[n];
            e = {{"comm_j", se.comm}, {"sensing_j", se.sensing}, {"local_j", se.local}, {"edge_j", se.edge}};
        }
        slots.push_back({{"slot", n},
                         {"t0_s", a.t0},
                         {"t1_s", a.t1},
                         {"f_local_hz", a.f_local},
                         {"f_edge_hz", a.f_edge},
                         {"w", w},
                         {"R0", cmat_json(a.R0)},
                         {"R1", cmat_json(a.R1)},
                         {"energy", e}});
    }
    doc["allocation"] = slots;

    const EnergyBreakdown& eb = r.energy;
    doc["energy"] = {{"total_j", eb.total},       {"propulsion_j", eb.propulsion}, {"comm_j", eb.comm},
                     {"sensing_j", eb.sensing},   {"local_j", eb.local},           {"edge_j", eb.edge},
                     {"propulsion_per_uav_j", eb.propulsion_per_uav}};
    doc["offloading_ratio"] = r.offloading_ratio;
    doc["offloaded_bits"] = offloaded_bits_total(r);
    doc["time_ratio"] = num(time_ratio(r.allocation));

    json rounds = json::array();
    for (const auto& ro : r.rounds) {
        rounds.push_back({{"round", ro.round},
                          {"energy_j", ro.energy},
                          {"propulsion_j", ro.propulsion},
                          {"ra_iterations", ro.ra_iterations},
                          {"tr_iterations", ro.tr_iterations},
                          {"accepted", ro.accepted}});
    }
    doc["rounds"] = rounds;

    json ra = json::array();
    for (const auto& trace : r.ra_traces) {
        json steps = json::array();
        for (const auto& e : trace) {
            steps.push_back({{"iteration", e.iteration},
                             {"energy_j", e.energy},
                             {"program_objective", num(e.program_objective)},
                             {"gap_bound", num(e.gap_bound)},
                             {"max_residual", num(e.max_residual)},
                             {"newton_steps", e.newton_steps},
                             {"status", e.solver_status}});
        }
        ra.push_back(steps);
    }
    doc["ra_traces"] = ra;

    json tr = json::array();
    for (const auto& e : r.tr_trace) {
        tr.push_back({{"iteration", e.iteration},
                      {"radius_m", e.radius},
                      {"objective_j", num(e.objective)},
                      {"model_objective", num(e.model_objective)},
                      {"max_residual", num(e.max_residual)},
                      {"accepted", e.accepted},
                      {"status", e.solver_status}});
    }
    doc["tr_trace"] = tr;

    json fam = json::object();
    for (Family f : {Family::sensing, Family::comm_offload, Family::comm_edge, Family::covert, Family::cpu_local,
                     Family::cpu_edge, Family::uav_power, Family::ap_power, Family::time, Family::psd, Family::speed,
                     Family::endpoint, Family::uav_uav, Family::uav_warden, Family::uav_target}) {
        const double v = r.residuals.max_residual(f);
        if (std::isfinite(v)) fam[to_string(f)] = v;
    }
    doc["residuals"] = {{"max", num(r.residuals.max_residual())},
                        {"satisfied", r.residuals.satisfied()},
                        {"by_family", fam}};
    return doc.dump(2) + "\n";
}

ResultSummary load_result(const fs::path& path) {
    const std::string text = read_file(path);
    const std::string origin = path.string();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin, e.byte > 0 ? line_of_offset(text, e.byte - 1) : 1, "malformed result file");
    }
    const Reader rd(text, origin);
    if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != kResultSchema) {
        rd.fail("schema", "not a result file (expected schema \"" + std::string(kResultSchema) + "\")");
    }
    ResultSummary out;
    try {
        out.design = doc.at("design").get<std::string>();
        out.scenario = scenario_from_json(doc.at("scenario"), rd);
        out.scenario_name = out.scenario.name;
        for (const auto& t : doc.at("targets")) out.targets.push_back(rd.vec3(t, "targets"));
        const json& tj = doc.at("trajectory");
        out.trajectory.slot_length = rd.number(tj.at("slot_length_s"), "slot_length_s");
        for (const auto& u : tj.at("waypoints")) out.trajectory.waypoints.push_back(rd.vec2s(u, "waypoints"));
        out.total_energy = rd.number(doc.at("energy").at("total_j"), "total_j");
        out.propulsion_energy = rd.number(doc.at("energy").at("propulsion_j"), "propulsion_j");
        out.offloading_ratio = rd.number(doc.at("offloading_ratio"), "offloading_ratio");
    } catch (const json::exception& e) {
        throw ParseError(origin, 0, std::string("incomplete result file: ") + e.what());
    }
    return out;
}

// ---- Tables ---------------------------------------------------------------------

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string Table::to_csv() const {
    std::ostringstream os;
    os << "# " << kTableSchema << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << '\n';
    }
    return os.str();
}

Table slot_table(const SolveReport& r) {
    Table t;
    const ScenarioConfig& s = r.scenario;
    t.columns = {"slot [-]", "uav [-]", "x [m]", "y [m]", "t0 [s]", "t1 [s]", "f_local [Hz]", "f_edge [Hz]",
                 "uav_power [W]", "sensing_power_0 [W]", "sensing_power_1 [W]", "edge_bits [bit]",
                 "slot_energy [J]"};
    for (std::size_t n = 0; n < r.allocation.slots.size(); ++n) {
        const SlotAllocation& a = r.allocation.slots[n];
        const double e = n < r.energy.slots.size() ? r.energy.slots[n].total() : 0.0;
        for (int k = 0; k < s.num_uavs(); ++k) {
            const Vec2 p = r.trajectory.slot_position(k, static_cast<int>(n));
            t.rows.push_back({std::to_string(n), std::to_string(k), fmt(p.x()), fmt(p.y()), fmt(a.t0), fmt(a.t1),
                              fmt(a.f_local[k]), fmt(a.f_edge[k]), fmt(a.w[k].squaredNorm()),
                              fmt(a.R0.trace().real()), fmt(a.R1.trace().real()), fmt(edge_bits(k, a, s)), fmt(e)});
        }
    }
    return t;
}

Table round_table(const SolveReport& r) {
    Table t;
    t.columns = {"round [-]", "energy [J]", "propulsion [J]", "ra_iterations [-]", "tr_iterations [-]",
                 "accepted [-]"};
    for (const auto& ro : r.rounds) {
        t.rows.push_back({std::to_string(ro.round), fmt(ro.energy), fmt(ro.propulsion),
                          std::to_string(ro.ra_iterations), std::to_string(ro.tr_iterations),
                          ro.accepted ? "1" : "0"});
    }
    return t;
}

Table trajectory_table(const Trajectory& tr) {
    Table t;
    t.columns = {"uav [-]", "waypoint [-]", "x [m]", "y [m]", "speed_to_next [m/s]"};
    for (int k = 0; k < tr.num_uavs(); ++k) {
        const auto& u = tr.waypoints[k];
        for (std::size_t j = 0; j < u.size(); ++j) {
            const std::string v = j + 1 < u.size() ? fmt((u[j + 1] - u[j]).norm() / tr.slot_length) : "";
            t.rows.push_back({std::to_string(k), std::to_string(j), fmt(u[j].x()), fmt(u[j].y()), v});
        }
    }
    return t;
}

Table sweep_table(SweepParam p, const std::vector<SweepPoint>& points) {
    std::string unit = "-";
    switch (p) {
        case SweepParam::uav_power: unit = "W"; break;
        case SweepParam::radar_sinr: unit = "-"; break;
        case SweepParam::task_bits: unit = "bit"; break;
        case SweepParam::server_capacitance: unit = "J s^2/cycle^3"; break;
    }
    Table t;
    t.columns = {to_string(p) + " [" + unit + "]", "design [-]", "total_energy [J]", "propulsion [J]", "comm [J]",
                 "sensing [J]", "local [J]", "edge [J]", "offloaded_bits [bit]", "offloading_ratio [-]",
                 "time_ratio [-]", "ap_budget_raised [-]"};
    for (const auto& pt : points) {
        const SolveReport& r = pt.report;
        const EnergyBreakdown& e = r.energy;
        t.rows.push_back({fmt(pt.value), to_string(r.design), fmt(e.total), fmt(e.propulsion), fmt(e.comm),
                          fmt(e.sensing), fmt(e.local), fmt(e.edge), fmt(offloaded_bits_total(r)),
                          fmt(r.offloading_ratio), fmt(time_ratio(r.allocation)), r.ap_budget_raised ? "1" : "0"});
    }
    return t;
}

// ---- SVG --------------------------------------------------------------------------

std::string trajectory_svg(const ScenarioConfig& s, const Trajectory& t, const std::vector<Vec3>& targets) {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    auto grow = [&](double x, double y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    };
    for (const auto& p : s.ap_positions) grow(p.x(), p.y());
    for (const auto& p : s.warden_positions) grow(p.x(), p.y());
    for (const auto& p : targets) grow(p.x(), p.y());
    grow(s.sensing_box.lower.x(), s.sensing_box.lower.y());
    grow(s.sensing_box.upper.x(), s.sensing_box.upper.y());
    for (const auto& u : t.waypoints) {
        for (const auto& p : u) grow(p.x(), p.y());
    }
    const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1.0});
    x0 -= pad;
    y0 -= pad;
    x1 += pad;
    y1 += pad;
    const double size = 600.0;
    const double scale = size / std::max(x1 - x0, y1 - y0);
    auto X = [&](double x) { return svg_num((x - x0) * scale); };
    auto Y = [&](double y) { return svg_num(size - (y - y0) * scale); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size + 30
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<title>" << xml_escape(s.name) << " trajectories</title>\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const auto& lo = s.sensing_box.lower;
    const auto& hi = s.sensing_box.upper;
    os << "<rect x=\"" << X(lo.x()) << "\" y=\"" << Y(hi.y()) << "\" width=\"" << svg_num((hi.x() - lo.x()) * scale)
       << "\" height=\"" << svg_num((hi.y() - lo.y()) * scale)
       << "\" fill=\"#ffe9a8\" stroke=\"#c9a227\"/>\n";
    for (const auto& p : targets) {
        os << "<circle cx=\"" << X(p.x()) << "\" cy=\"" << Y(p.y()) << "\" r=\"2\" fill=\"#c9a227\"/>\n";
    }
    for (const auto& p : s.ap_positions) {
        os << "<rect x=\"" << svg_num((p.x() - x0) * scale - 5) << "\" y=\"" << svg_num(size - (p.y() - y0) * scale - 5)
           << "\" width=\"10\" height=\"10\" fill=\"black\"/>\n";
    }
    for (const auto& p : s.warden_positions) {
        os << "<path d=\"M" << X(p.x()) << ' ' << svg_num(size - (p.y() - y0) * scale - 7) << " l6 12 l-12 0 z\""
           << " fill=\"#444\"/>\n";
    }
    for (int k = 0; k < t.num_uavs(); ++k) {
        const char* c = colors[k % 6];
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : t.waypoints[k]) os << X(p.x()) << ',' << Y(p.y()) << ' ';
        os << "\"/>\n";
        for (const auto& p : t.waypoints[k]) {
            os << "<circle cx=\"" << X(p.x()) << "\" cy=\"" << Y(p.y()) << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
        }
    }
    os << "<text x=\"8\" y=\"" << size + 20 << "\">squares: APs, triangles: wardens, shaded: sensing area, "
       << "lines: UAV trajectories</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string curve_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<double>& x, const std::vector<double>& y) {
    const double W = 640, H = 420, L = 80, R = 20, T = 40, B = 60;
    double xa = std::numeric_limits<double>::infinity(), xb = -xa, ya = xa, yb = -xa;
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) {
        xa = std::min(xa, x[i]);
        xb = std::max(xb, x[i]);
        ya = std::min(ya, y[i]);
        yb = std::max(yb, y[i]);
    }
    if (n == 0) xa = ya = 0.0, xb = yb = 1.0;
    if (xb - xa <= 0) xb = xa + 1.0;
    if (yb - ya <= 0) yb = ya + std::max(1.0, std::abs(ya) * 0.01);
    auto X = [&](double v) { return svg_num(L + (v - xa) / (xb - xa) * (W - L - R)); };
    auto Y = [&](double v) { return svg_num(H - B - (v - ya) / (yb - ya) * (H - T - B)); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
       << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xa + (xb - xa) * i / 4.0, yv = ya + (yb - ya) * i / 4.0;
        char bx[32], by[32];
        std::snprintf(bx, sizeof bx, "%.4g", xv);
        std::snprintf(by, sizeof by, "%.6g", yv);
        os << "<text x=\"" << X(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << bx << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << Y(yv) << "\" text-anchor=\"end\">" << by << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
       << "</text>\n";
    os << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << xml_escape(y_label) << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < n; ++i) os << X(x[i]) << ',' << Y(y[i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < n; ++i) {
        os << "<circle cx=\"" << X(x[i]) << "\" cy=\"" << Y(y[i]) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// ---- Files --------------------------------------------------------------------------

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError(tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw InputError(tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw InputError(path.string() + ": rename failed: " + ec.message());
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw SolverError("SHA-256 digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string RunManifest::to_json() const {
    json doc;
    doc["schema"] = kManifestSchema;
    doc["command"] = command;
    doc["scenario_file"] = scenario_file;
    doc["scenario_sha256"] = scenario_sha256;
    json st = json::object();
    for (const auto& [k, v] : settings) st[k] = v;
    doc["settings"] = st;
    doc["seed"] = seed;
    doc["output_dir"] = output_dir;
    json files_json = json::array();
    for (const auto& f : files) files_json.push_back({{"file", f.file}, {"sha256", f.sha256}});
    doc["files"] = files_json;
    return doc.dump(2) + "\n";
}

void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files,
                   RunManifest manifest) {
    manifest.files.clear();
    for (const auto& [name, content] : files) {
        write_atomic(dir / name, content);
        manifest.files.push_back({name, sha256_hex(content)});
    }
    write_atomic(dir / "manifest.json", manifest.to_json());
}

}  // namespace covmec
