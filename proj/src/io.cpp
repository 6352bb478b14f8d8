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

#include "qtraj/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qtraj {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& value) {
    const std::string t = trim(text);
    if (t.empty()) {
        return false;
    }
    char* end = nullptr;
    value = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

AnnealSchedule read_schedule_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("schedule file '" + path + "' cannot be opened");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("schedule file '" + path + "' is empty");
    }
    const auto header = split(trim(line), ',');
    if (header.size() != 3 || trim(header[0]) != "s" || trim(header[1]) != "A_GHz" || trim(header[2]) != "B_GHz") {
        throw ConfigError("schedule file '" + path + "' must start with the header s,A_GHz,B_GHz");
    }
    std::vector<ScheduleKnot> knots;
    int row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        ++row;
        const auto cells = split(trim(line), ',');
        double s, a, b;
        if (cells.size() != 3 || !parse_double(cells[0], s) || !parse_double(cells[1], a) ||
            !parse_double(cells[2], b)) {
            std::ostringstream msg;
            msg << "schedule file '" << path << "' row " << row << ": expected three numbers s,A_GHz,B_GHz";
            throw ConfigError(msg.str());
        }
        if (!knots.empty() && !(s > knots.back().s)) {
            std::ostringstream msg;
            msg << "schedule file '" << path << "' row " << row << ": s = " << s
                << " is not greater than the previous row (s must be strictly increasing)";
            throw ConfigError(msg.str());
        }
        knots.push_back({s, ghz_to_angular(a), ghz_to_angular(b)});
    }
    try {
        return AnnealSchedule(std::move(knots));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("schedule file '" + path + "': " + e.what());
    }
}

IsingSpec read_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("problem file '" + path + "' cannot be opened");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("problem file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("problem file '" + path + "' must hold a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "n" && key != "h" && key != "J") {
            throw ConfigError("problem file '" + path + "': unknown key '" + key + "' (expected n, h, J)");
        }
    }
    IsingSpec spec;
    try {
        spec.n = j.at("n").get<int>();
        spec.h = j.at("h").get<std::vector<double>>();
        if (j.contains("J")) {
            for (const auto& c : j.at("J")) {
                if (!c.is_array() || c.size() != 3) {
                    throw ConfigError("problem file '" + path + "': each J entry must be [i, j, J_ij]");
                }
                spec.J.push_back({c[0].get<int>(), c[1].get<int>(), c[2].get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("problem file '" + path + "': " + e.what());
    }
    spec.schedule = default_schedule();
    spec.t_f = 1.0;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("problem file '" + path + "': " + e.what());
    }
    return spec;
}

void write_population_csv(std::ostream& out, const PopulationTrace& trace) {
    out << "s";
    for (Index a = 0; a < trace.populations.cols(); ++a) {
        out << ",pop_" << a;
    }
    out << ",trace_err\n";
    for (std::size_t g = 0; g < trace.grid.size(); ++g) {
        out << format_double(trace.grid[g]);
        for (Index a = 0; a < trace.populations.cols(); ++a) {
            out << ',' << format_double(trace.populations(static_cast<Index>(g), a));
        }
        out << ',' << format_double(trace.trace_error[g]) << '\n';
    }
}

void write_ensemble_csv(std::ostream& out, const EnsembleResult& result) {
    out << "s";
    for (Index a = 0; a < result.mean.cols(); ++a) {
        out << ",mean_pop_" << a << ",stderr_pop_" << a;
    }
    out << '\n';
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
        out << format_double(result.grid[g]);
        for (Index a = 0; a < result.mean.cols(); ++a) {
            out << ',' << format_double(result.mean(static_cast<Index>(g), a)) << ','
                << format_double(result.stderror(static_cast<Index>(g), a));
        }
        out << '\n';
    }
}

void write_bootstrap_csv(std::ostream& out, const EnsembleResult& result) {
    out << "s";
    for (Index a = 0; a < result.boot_sigma.cols(); ++a) {
        out << ",boot_sigma_" << a << ",ci_low_" << a << ",ci_high_" << a;
    }
    out << '\n';
    for (std::size_t g = 0; g < result.grid.size() && result.boot_sigma.rows() > 0; ++g) {
        const Index r = static_cast<Index>(g);
        out << format_double(result.grid[g]);
        for (Index a = 0; a < result.boot_sigma.cols(); ++a) {
            out << ',' << format_double(result.boot_sigma(r, a)) << ',' << format_double(result.ci_low(r, a)) << ','
                << format_double(result.ci_high(r, a));
        }
        out << '\n';
    }
}

void write_jump_log_csv(std::ostream& out, const std::vector<std::vector<JumpEvent>>& logs) {
    out << "trajectory_id,s_jump,channel_alpha,omega,pre_gs_overlap,post_gs_overlap\n";
    for (std::size_t k = 0; k < logs.size(); ++k) {
        for (const auto& ev : logs[k]) {
            out << k << ',' << format_double(ev.s_jump) << ',' << ev.channel << ',' << format_double(ev.omega) << ','
                << format_double(ev.pre_gs_overlap) << ',' << format_double(ev.post_gs_overlap) << '\n';
        }
    }
}

void write_jump_histogram_csv(std::ostream& out, const JumpStatistics& stats) {
    out << "net_jumps,trajectories\n";
    for (const auto& [net, count] : stats.net_histogram) {
        out << net << ',' << count << '\n';
    }
}

void write_jump_intervals_csv(std::ostream& out, const JumpStatistics& stats) {
    out << "s_low,s_high,toward_gs,out_of_gs\n";
    for (const auto& iv : stats.intervals) {
        out << format_double(iv.s_low) << ',' << format_double(iv.s_high) << ',' << iv.toward << ',' << iv.out
            << '\n';
    }
}

void write_cost_report(std::ostream& out, const CostReport& r) {
    auto list = [&](const char* name, const auto& v) {
        out << name << ":";
        for (const auto& x : v) {
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(x)>>) {
                out << ' ' << format_double(x);
            } else {
                out << ' ' << x;
            }
        }
        out << '\n';
    };
    list("qubits", r.qubits);
    list("dimension", r.dimension);
    list("ame_step_seconds", r.ame_step_seconds);
    list("trajectory_step_seconds", r.trajectory_step_seconds);
    list("ratio", r.ratio);
    list("repetitions", r.repetitions);
    out << "ratio_monotone: " << (r.ratio_monotone ? "true" : "false") << '\n';
    out << "ratio_slope: " << format_double(r.ratio_slope) << '\n';
    out << "beta: " << format_double(r.beta) << '\n';
    out << "alpha: " << format_double(r.alpha) << '\n';
    out << "k1: " << format_double(r.k1) << '\n';
    out << "k2: " << format_double(r.k2) << '\n';
    list("lambda_B", r.lambda_b);
    out << "Lambda_B: " << format_double(r.Lambda_B) << '\n';
    out << "x: " << format_double(r.x) << '\n';
    out << "target_sigma: " << format_double(r.target_sigma) << '\n';
    out << "N_star: " << format_double(r.n_star) << '\n';
    list("R_of_N", r.trajectories_needed);
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::vector<std::string>* header) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::string line;
    std::getline(in, line);
    if (header) {
        *header = split(trim(line), ',');
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        std::vector<double> row;
        for (const auto& cell : split(trim(line), ',')) {
            double v;
            if (!parse_double(cell, v)) {
                throw std::runtime_error("non-numeric cell '" + cell + "' in '" + path + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace qtraj
