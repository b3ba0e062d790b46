// SPDX-License-Identifier: Apache-2.0
#include "covmec/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "covmec/ao_driver.hpp"
#include "covmec/covert.hpp"
#include "covmec/io.hpp"

namespace covmec {

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
    return "covmec-out";
}

std::vector<double> parse_values(const std::string& list, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError(what, "'" + item + "' is not a number");
        }
    }
    if (out.empty()) throw CLI::ValidationError(what, "needs at least one value");
    return out;
}

struct Common {
    std::string scenario;
    std::string out;
    int jobs = 1;
    int max_rounds = 10;
    double tolerance = 1e-3;
};

AoSettings ao_settings(const Common& c) {
    AoSettings st;
    st.jobs = c.jobs;
    st.max_rounds = c.max_rounds;
    st.tolerance = c.tolerance;
    return st;
}

RunManifest manifest_for(const std::string& command, const Common& c, const fs::path& dir,
                         std::vector<std::pair<std::string, std::string>> extra) {
    RunManifest m;
    m.command = command;
    m.scenario_file = c.scenario;
    if (!c.scenario.empty()) m.scenario_sha256 = sha256_hex(read_file(c.scenario));
    m.settings = {{"max-rounds", std::to_string(c.max_rounds)}, {"tolerance", fmt(c.tolerance)}};
    m.settings.insert(m.settings.end(), extra.begin(), extra.end());
    m.output_dir = dir.string();
    return m;
}

void print_summary(std::ostream& out, const SolveReport& r) {
    out << "design " << to_string(r.design) << ": total energy " << fmt(r.energy.total) << " J (propulsion "
        << fmt(r.energy.propulsion) << " J), offloading ratio " << fmt(r.offloading_ratio) << ", "
        << r.rounds.size() << " round(s), max residual " << fmt(r.residuals.max_residual());
    if (r.ap_budget_raised) out << ", AP budget raised to " << fmt(r.scenario.ap_power_max) << " W";
    out << '\n';
}

int cmd_validate(const Common& c, std::ostream& out) {
    const ScenarioConfig s = load_scenario(c.scenario);
    out << scenario_to_json(s);
    out << "scenario '" << s.name << "' is valid: M=" << s.num_aps() << " K=" << s.num_uavs()
        << " L=" << s.num_wardens() << " N=" << s.slots << " Q=" << s.target_samples
        << " mu_max=" << s.covert_mu_max() << '\n';
    return kExitOk;
}

int cmd_solve(const Common& c, const std::string& design, std::ostream& out) {
    const ScenarioConfig s = load_scenario(c.scenario);
    const Design d = parse_design(design);
    const SolveReport r = run_design(s, d, ao_settings(c));
    const fs::path dir = output_dir(c.out);
    std::vector<std::pair<std::string, std::string>> files = {
        {"result.json", report_to_json(r)},
        {"slots.csv", slot_table(r).to_csv()},
        {"rounds.csv", round_table(r).to_csv()},
        {"trajectory.csv", trajectory_table(r.trajectory).to_csv()},
        {"trajectory.svg", trajectory_svg(r.scenario, r.trajectory, r.targets)},
    };
    write_outputs(dir, files, manifest_for("solve", c, dir, {{"design", to_string(d)}}));
    print_summary(out, r);
    out << "wrote " << files.size() + 1 << " files to " << dir.string() << " in " << r.seconds << " s\n";
    return kExitOk;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values, const std::string& design,
              std::ostream& out) {
    const ScenarioConfig s = load_scenario(c.scenario);
    const SweepParam p = parse_sweep_param(param);
    const Design d = parse_design(design);
    const std::vector<double> v = parse_values(values, "--values");
    const auto points = sweep(s, p, v, d, ao_settings(c));
    const fs::path dir = output_dir(c.out);
    std::vector<std::pair<std::string, std::string>> files = {{"sweep.csv", sweep_table(p, points).to_csv()}};
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < points.size(); ++i) {
        files.emplace_back("point_" + std::to_string(i) + ".json", report_to_json(points[i].report));
        xs.push_back(points[i].value);
        ys.push_back(points[i].report.energy.total);
        out << to_string(p) << " = " << fmt(points[i].value) << ": ";
        print_summary(out, points[i].report);
    }
    files.emplace_back("sweep.svg", curve_svg("total energy vs " + to_string(p), to_string(p), "energy [J]", xs, ys));
    write_outputs(dir, files,
                  manifest_for("sweep", c, dir, {{"param", to_string(p)}, {"values", values}, {"design", to_string(d)}}));
    out << "wrote " << files.size() + 1 << " files to " << dir.string() << '\n';
    return kExitOk;
}

int cmd_mc_dep(const std::string& mu_list, double xi_min, std::int64_t samples, std::uint64_t seed, int jobs,
               const std::string& out_flag, bool write_files, std::ostream& out) {
    std::vector<double> mus;
    if (!mu_list.empty()) {
        mus = parse_values(mu_list, "--mu");
    } else {
        mus.push_back(F_inverse(1.0 - xi_min));
    }
    Table t;
    t.columns = {"mu [-]", "dep_analytic [-]", "dep_mc [-]", "stderr [-]", "best_grid_dep [-]",
                 "best_grid_threshold [W]", "samples [-]"};
    for (double mu : mus) {
        if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("--mu values must be positive and finite");
        const DetectionStats st{1.0, 1.0 + mu};
        const McDepResult r = mc_dep_oracle(st, samples, seed, 200, jobs);
        t.rows.push_back({fmt(mu), fmt(dep_min(st)), fmt(r.dep), fmt(r.stderr_dep), fmt(r.best_grid_dep),
                          fmt(r.best_grid_delta), std::to_string(r.samples)});
    }
    const std::string csv = t.to_csv();
    out << csv;
    if (write_files) {
        const fs::path dir = output_dir(out_flag);
        RunManifest m;
        m.command = "mc-dep";
        m.seed = seed;
        m.output_dir = dir.string();
        m.settings = {{"samples", std::to_string(samples)}};
        if (!mu_list.empty()) {
            m.settings.emplace_back("mu", mu_list);
        } else {
            m.settings.emplace_back("xi-min", fmt(xi_min));
        }
        write_outputs(dir, {{"dep.csv", csv}}, m);
    }
    return kExitOk;
}

// Reads a sweep table written by cmd_sweep: first column and total energy column.
bool read_sweep_curve(const fs::path& path, std::string& x_label, std::vector<double>& xs, std::vector<double>& ys) {
    std::ifstream in(path);
    if (!in) return false;
    std::string line;
    int energy_col = -1;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header) {
            header = true;
            x_label = cells.empty() ? "value" : cells[0];
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (cells[i].rfind("total_energy", 0) == 0) energy_col = static_cast<int>(i);
            }
            if (energy_col < 0) throw ParseError(path.string(), 1, "no total_energy column");
            continue;
        }
        if (static_cast<int>(cells.size()) <= energy_col) throw ParseError(path.string(), 0, "short row");
        xs.push_back(std::stod(cells[0]));
        ys.push_back(std::stod(cells[energy_col]));
    }
    return header;
}

int cmd_report(const std::string& result_dir, const std::string& out_flag, std::ostream& out) {
    const fs::path src(result_dir);
    if (!fs::is_directory(src)) throw InputError(result_dir + ": not a directory");
    const fs::path dir = out_flag.empty() ? src / "report" : fs::path(out_flag);

    std::vector<fs::path> results;
    for (const auto& e : fs::directory_iterator(src)) {
        const fs::path& p = e.path();
        if (p.extension() == ".json" && p.filename() != "manifest.json") results.push_back(p);
    }
    std::sort(results.begin(), results.end());

    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& p : results) {
        const ResultSummary r = load_result(p);
        const std::string stem = p.stem().string();
        files.emplace_back(stem + "_trajectory.csv", trajectory_table(r.trajectory).to_csv());
        files.emplace_back(stem + "_trajectory.svg", trajectory_svg(r.scenario, r.trajectory, r.targets));
    }
    std::string x_label;
    std::vector<double> xs, ys;
    if (read_sweep_curve(src / "sweep.csv", x_label, xs, ys)) {
        Table t;
        t.columns = {x_label, "total_energy [J]"};
        for (std::size_t i = 0; i < xs.size(); ++i) t.rows.push_back({fmt(xs[i]), fmt(ys[i])});
        files.emplace_back("energy_curve.csv", t.to_csv());
        files.emplace_back("energy_curve.svg", curve_svg("total energy", x_label, "total_energy [J]", xs, ys));
    }
    if (files.empty()) throw InputError(result_dir + ": no result files found");
    RunManifest m;
    m.command = "report";
    m.output_dir = dir.string();
    m.settings = {{"input", result_dir}};
    write_outputs(dir, files, m);
    out << "wrote " << files.size() + 1 << " files to " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Energy-efficient covert ISAC-MEC planning for multi-UAV systems"};
    app.require_subcommand(1);

    Common c;
    std::string design = "proposed";
    std::string param, values;
    std::string mu_list;
    double xi_min = 0.99;
    std::int64_t samples = 1000000;
    std::uint64_t seed = 1;
    std::string result_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("scenario", c.scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", c.out, std::string("Output directory (default: $") + kOutputDirEnv +
                                               " or ./covmec-out)");
        sub->add_option("-j,--jobs", c.jobs, "Worker threads")->check(CLI::Range(1, 1024));
        sub->add_option("--max-rounds", c.max_rounds, "Alternating-optimisation round cap")->check(CLI::Range(1, 1000));
        sub->add_option("--tolerance", c.tolerance, "Relative energy change ending the alternation")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* validate = app.add_subcommand("validate", "Parse a scenario and echo the resolved parameters");
    validate->add_option("scenario", c.scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);

    CLI::App* solve = app.add_subcommand("solve", "Solve one design on a scenario");
    add_common(solve);
    solve->add_option("--design", design, "proposed | straight | power | fixed-time | full-offload");

    CLI::App* sw = app.add_subcommand("sweep", "Solve a design for each value of one parameter");
    add_common(sw);
    sw->add_option("--param", param, "uav-power | radar-sinr | task-bits | server-capacitance")->required();
    sw->add_option("--values", values, "Comma-separated values in SI units")->required();
    sw->add_option("--design", design, "Design to run at every point");

    CLI::App* mc = app.add_subcommand("mc-dep", "Monte Carlo detection error probability vs closed form");
    auto* mu_opt = mc->add_option("--mu", mu_list, "Comma-separated relative power excesses");
    mc->add_option("--xi-min", xi_min, "Use mu_max for this DEP floor")->excludes(mu_opt)->check(CLI::Range(0.0, 1.0));
    mc->add_option("--samples", samples, "Samples per hypothesis")->check(CLI::Range(std::int64_t{1}, std::int64_t{1} << 40));
    mc->add_option("--seed", seed, "Random stream seed");
    mc->add_option("-j,--jobs", c.jobs, "Worker threads")->check(CLI::Range(1, 1024));
    std::string mc_out;
    auto* mc_out_opt = mc->add_option("-o,--out", mc_out, "Also write dep.csv and a manifest here");

    CLI::App* rep = app.add_subcommand("report", "Emit plot-ready series from a result directory");
    rep->add_option("results", result_dir, "Directory written by solve or sweep")->required();
    std::string rep_out;
    rep->add_option("-o,--out", rep_out, "Output directory (default: <results>/report)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(c, out);
        if (solve->parsed()) return cmd_solve(c, design, out);
        if (sw->parsed()) return cmd_sweep(c, param, values, design, out);
        if (mc->parsed()) return cmd_mc_dep(mu_list, xi_min, samples, seed, c.jobs, mc_out, mc_out_opt->count() > 0, out);
        if (rep->parsed()) return cmd_report(result_dir, rep_out, out);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << " (family " << e.family();
        if (e.slot() >= 0) err << ", slot " << e.slot();
        err << ")\n";
        return kExitInfeasible;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const SingularityError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const InternalError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitUsage;
}

}  // namespace covmec
