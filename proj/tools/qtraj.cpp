// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qtraj command line: solve-ame, run-trajectories, compare, bench.
//
// Exit status: 0 on success, 1 on a configuration error, 2 when a run is
// aborted because a numerical validity check failed.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qtraj/ame.hpp"
#include "qtraj/config.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Args {
    std::string config;
    std::vector<std::string> overrides;
    std::string output_dir;
};

qtraj::RunConfig load(const Args& args) {
    qtraj::RunConfig c = qtraj::parse_config_file(args.config);
    for (const auto& o : args.overrides) {
        qtraj::apply_override(c, o);
    }
    if (const char* env = std::getenv("QTRAJ_OUTPUT_DIR"); env && *env) {
        c.output_dir = env;
    }
    if (!args.output_dir.empty()) {
        c.output_dir = args.output_dir;
    }
    qtraj::validate_config(c);
    return c;
}

std::ofstream open_output(const qtraj::RunConfig& c, const std::string& name) {
    fs::create_directories(c.output_dir);
    const fs::path path = fs::path(c.output_dir) / name;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    return out;
}

void check_levels(const qtraj::RunConfig& c, const qtraj::IsingSpec& spec) {
    const long long dim = 1LL << spec.n;
    if (c.levels > dim || (c.m_levels > 0 && c.levels > c.m_levels)) {
        throw qtraj::ConfigError("config key 'levels' must be in [1, " +
                                 std::to_string(c.m_levels > 0 ? std::min<long long>(dim, c.m_levels) : dim) +
                                 "] for this problem (got " + std::to_string(c.levels) + ")");
    }
}

qtraj::PopulationTrace run_ame(const qtraj::RunConfig& c) {
    const auto spec = qtraj::make_spec(c);
    check_levels(c, spec);
    qtraj::AmeOptions opts;
    opts.integrator = qtraj::make_integrator(c);
    opts.sample_grid = qtraj::uniform_grid(c.grid_points);
    opts.levels = c.levels;
    auto trace = qtraj::solve_ame(spec, qtraj::make_bath(c), opts);
    auto out = open_output(c, "ame_populations.csv");
    qtraj::write_population_csv(out, trace);
    std::cout << "solve-ame: " << trace.steps << " steps, max trace error "
              << qtraj::format_double(trace.max_trace_error) << ", wrote "
              << (fs::path(c.output_dir) / "ame_populations.csv").string() << "\n";
    return trace;
}

qtraj::EnsembleResult run_trajectories(const qtraj::RunConfig& c) {
    const auto spec = qtraj::make_spec(c);
    check_levels(c, spec);
    qtraj::EnsembleOptions opts;
    opts.trajectory.integrator = qtraj::make_integrator(c);
    opts.trajectory.sample_grid = qtraj::uniform_grid(c.grid_points);
    opts.trajectory.levels = c.levels;
    opts.trajectories = c.n_trajectories;
    opts.workers = c.workers;
    opts.master_seed = c.master_seed;
    opts.batch_size = c.batch_size;
    opts.bootstrap = c.n_trajectories >= 2 ? c.bootstrap : 0;
    auto result = qtraj::run_ensemble(spec, qtraj::make_bath(c), opts);

    double s_star = 0.5;
    if (c.s_star) {
        s_star = *c.s_star;
    } else {
        s_star = qtraj::adiabatic_diagnostic(spec, 201, opts.trajectory.integrator.binning).s_min_gap;
    }
    const auto stats = qtraj::jump_statistics(result.jumps, s_star);

    {
        auto out = open_output(c, "ensemble.csv");
        qtraj::write_ensemble_csv(out, result);
    }
    if (opts.bootstrap > 0) {
        auto out = open_output(c, "bootstrap.csv");
        qtraj::write_bootstrap_csv(out, result);
    }
    {
        auto out = open_output(c, "jump_log.csv");
        qtraj::write_jump_log_csv(out, result.jumps);
    }
    {
        auto out = open_output(c, "jump_histogram.csv");
        qtraj::write_jump_histogram_csv(out, stats);
    }
    {
        auto out = open_output(c, "jump_intervals.csv");
        qtraj::write_jump_intervals_csv(out, stats);
    }
    std::size_t jumps = 0;
    for (const auto& log : result.jumps) jumps += log.size();
    std::cout << "run-trajectories: " << result.trajectories << " trajectories, " << jumps << " jumps (toward GS "
              << stats.toward << ", out of GS " << stats.out << ", split at s = " << qtraj::format_double(s_star)
              << "), wrote " << c.output_dir << "\n";
    return result;
}

int compare(const qtraj::RunConfig& c) {
    const auto trace = run_ame(c);
    const auto ens = run_trajectories(c);
    auto out = open_output(c, "deviation.csv");
    out << "s,ame_pop_0,traj_mean_pop_0,stderr_pop_0,deviation,within_3sigma\n";
    std::size_t failing = 0;
    for (std::size_t g = 0; g < trace.grid.size(); ++g) {
        const auto r = static_cast<qtraj::Index>(g);
        const double ame = trace.populations(r, 0);
        const double mean = ens.mean(r, 0);
        const double se = ens.stderror(r, 0);
        const double dev = std::abs(mean - ame);
        // Rounding slack: at s = 0 every trajectory sits in the ground state and se ~ 1e-17.
        const bool ok = std::isfinite(se) && dev <= 3.0 * se + 1e-12;
        failing += ok ? 0 : 1;
        out << qtraj::format_double(trace.grid[g]) << ',' << qtraj::format_double(ame) << ','
            << qtraj::format_double(mean) << ',' << qtraj::format_double(se) << ',' << qtraj::format_double(dev) << ','
            << (ok ? 1 : 0) << '\n';
    }
    std::cout << "compare: " << trace.grid.size() - failing << "/" << trace.grid.size()
              << " grid points within 3 sigma\n";
    return 0;
}

int bench(const qtraj::RunConfig& c) {
    if (c.coupling != "z") {
        throw qtraj::ConfigError("config key 'coupling' must be \"z\" for bench (got \"" + c.coupling + "\")");
    }
    qtraj::BenchmarkOptions opts;
    opts.qubits = c.bench_qubits;
    opts.bath = qtraj::BathSpec::from_ghz(c.g2, c.temperature_GHz, c.omega_c_GHz);
    opts.schedule = qtraj::make_spec(c).schedule;
    opts.t_f = c.t_f_ns;
    opts.variance_trajectories = c.bench_variance_trajectories;
    opts.integrator = qtraj::make_integrator(c);
    opts.integrator.binning.m_levels = 0;
    opts.target_sigma = c.bench_target_sigma;
    opts.master_seed = c.master_seed;
    const auto report = qtraj::benchmark_scaling(opts);
    auto out = open_output(c, "cost_report.txt");
    qtraj::write_cost_report(out, report);
    qtraj::write_cost_report(std::cout, report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum trajectories for the adiabatic master equation"};
    app.require_subcommand(1);
    Args args;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", args.config, "JSON run configuration")->required();
        sub->add_option("--set", args.overrides, "Override a config key (key=value), repeatable");
        sub->add_option("-o,--output-dir", args.output_dir,
                        "Output directory (overrides QTRAJ_OUTPUT_DIR and the config)");
    };
    auto* ame = app.add_subcommand("solve-ame", "Integrate the master equation, write ame_populations.csv");
    auto* traj = app.add_subcommand("run-trajectories", "Run the trajectory ensemble, write ensemble CSVs and jump log");
    auto* cmp = app.add_subcommand("compare", "Run both and write deviation.csv");
    auto* bch = app.add_subcommand("bench", "Per-step cost scaling, write cost_report.txt");
    for (auto* sub : {ame, traj, cmp, bch}) {
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto config = load(args);
        {
            auto out = open_output(config, "config_used.json");
            out << qtraj::emit_config(config);
        }
        if (ame->parsed()) {
            run_ame(config);
        } else if (traj->parsed()) {
            run_trajectories(config);
        } else if (cmp->parsed()) {
            return compare(config);
        } else {
            return bench(config);
        }
        return 0;
    } catch (const qtraj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const qtraj::NumericalError& e) {
        std::cerr << "numerical validity check failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
