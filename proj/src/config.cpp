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

#include "qtraj/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qtraj/io.hpp"

namespace qtraj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_builtin(const std::string& name) {
    const auto names = builtin_problem_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

[[noreturn]] void range_error(const std::string& key, const std::string& expected, const std::string& got) {
    throw ConfigError("config key '" + key + "' must be " + expected + " (got " + got + ")");
}

template <class T>
T read_key(const json& j, const std::string& key, const char* type_name) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' must be " + type_name + " (got " + j.dump() + ")");
    }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    if (base_dir.empty() || path.empty() || fs::path(path).is_absolute()) {
        return path;
    }
    return (fs::path(base_dir) / path).lexically_normal().string();
}

json to_json(const RunConfig& c) {
    json j = json::object();
    j["problem"] = c.problem;
    j["temperature_GHz"] = c.temperature_GHz;
    j["t_f_ns"] = c.t_f_ns;
    j["g2"] = c.g2;
    j["omega_c_GHz"] = c.omega_c_GHz;
    j["coupling"] = c.coupling;
    j["schedule"] = c.schedule;
    j["schedule_scale"] = c.schedule_scale;
    j["n_trajectories"] = c.n_trajectories;
    j["master_seed"] = c.master_seed;
    j["workers"] = c.workers;
    j["batch_size"] = c.batch_size;
    j["grid_points"] = c.grid_points;
    j["levels"] = c.levels;
    j["bootstrap"] = c.bootstrap;
    j["tol_deg"] = c.tol_deg;
    j["tol_bohr"] = c.tol_bohr;
    j["dt_safety"] = c.dt_safety;
    j["m_levels"] = c.m_levels;
    j["rebuild_every"] = c.rebuild_every;
    j["s_star"] = c.s_star ? json(*c.s_star) : json(nullptr);
    j["output_dir"] = c.output_dir;
    j["bench_qubits"] = c.bench_qubits;
    j["bench_variance_trajectories"] = c.bench_variance_trajectories;
    j["bench_target_sigma"] = c.bench_target_sigma;
    return j;
}

void set_key(RunConfig& c, const std::string& key, const json& v) {
    if (key == "problem") c.problem = read_key<std::string>(v, key, "a string");
    else if (key == "temperature_GHz") c.temperature_GHz = read_key<double>(v, key, "a number");
    else if (key == "t_f_ns") c.t_f_ns = read_key<double>(v, key, "a number");
    else if (key == "g2") c.g2 = read_key<double>(v, key, "a number");
    else if (key == "omega_c_GHz") c.omega_c_GHz = read_key<double>(v, key, "a number");
    else if (key == "coupling") c.coupling = read_key<std::string>(v, key, "a string");
    else if (key == "schedule") c.schedule = read_key<std::string>(v, key, "a string");
    else if (key == "schedule_scale") c.schedule_scale = read_key<double>(v, key, "a number");
    else if (key == "n_trajectories") {
        if (!v.is_number_integer() || v.get<long long>() < 1) range_error(key, "an integer >= 1", v.dump());
        c.n_trajectories = v.get<std::size_t>();
    } else if (key == "master_seed") {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            range_error(key, "an integer in [0, 2^64)", v.dump());
        }
        c.master_seed = v.get<std::uint64_t>();
    } else if (key == "workers") c.workers = read_key<int>(v, key, "an integer");
    else if (key == "batch_size") {
        if (!v.is_number_integer() || v.get<long long>() < 1) range_error(key, "an integer >= 1", v.dump());
        c.batch_size = v.get<std::size_t>();
    } else if (key == "grid_points") c.grid_points = read_key<int>(v, key, "an integer");
    else if (key == "levels") c.levels = read_key<int>(v, key, "an integer");
    else if (key == "bootstrap") c.bootstrap = read_key<int>(v, key, "an integer");
    else if (key == "tol_deg") c.tol_deg = read_key<double>(v, key, "a number");
    else if (key == "tol_bohr") c.tol_bohr = read_key<double>(v, key, "a number");
    else if (key == "dt_safety") c.dt_safety = read_key<double>(v, key, "a number");
    else if (key == "m_levels") c.m_levels = read_key<int>(v, key, "an integer");
    else if (key == "rebuild_every") c.rebuild_every = read_key<int>(v, key, "an integer");
    else if (key == "s_star") {
        if (v.is_null()) c.s_star.reset();
        else c.s_star = read_key<double>(v, key, "a number or null");
    } else if (key == "output_dir") c.output_dir = read_key<std::string>(v, key, "a string");
    else if (key == "bench_qubits") c.bench_qubits = read_key<std::vector<int>>(v, key, "a list of integers");
    else if (key == "bench_variance_trajectories") {
        if (!v.is_number_integer() || v.get<long long>() < 0) range_error(key, "an integer >= 0", v.dump());
        c.bench_variance_trajectories = v.get<std::size_t>();
    } else if (key == "bench_target_sigma") c.bench_target_sigma = read_key<double>(v, key, "a number");
    else {
        throw ConfigError("unknown config key '" + key + "'");
    }
    if (v.is_number_integer() && (key == "workers" || key == "grid_points" || key == "levels" || key == "bootstrap" ||
                                  key == "m_levels" || key == "rebuild_every")) {
        // get<int> silently narrows; reject values that do not fit.
        const long long raw = v.get<long long>();
        if (raw < -2147483647LL || raw > 2147483647LL) range_error(key, "a 32-bit integer", v.dump());
    } else if (!v.is_number_integer() && v.is_number() &&
               (key == "workers" || key == "grid_points" || key == "levels" || key == "bootstrap" ||
                key == "m_levels" || key == "rebuild_every")) {
        range_error(key, "an integer", v.dump());
    }
}

RunConfig from_json(const json& j, const std::string& base_dir) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig c;
    for (const char* required : {"problem", "temperature_GHz", "t_f_ns"}) {
        if (!j.contains(required)) {
            throw ConfigError(std::string("config key '") + required + "' is required");
        }
    }
    for (const auto& [key, value] : j.items()) {
        set_key(c, key, value);
    }
    if (!is_builtin(c.problem)) {
        c.problem = resolve(c.problem, base_dir);
    }
    if (c.schedule != "linear") {
        c.schedule = resolve(c.schedule, base_dir);
    }
    validate_config(c);
    return c;
}

std::string num(double v) { return format_double(v); }

}  // namespace

void validate_config(const RunConfig& c) {
    auto positive = [](const std::string& key, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) range_error(key, "a finite number > 0", num(v));
    };
    if (c.problem.empty()) {
        throw ConfigError("config key 'problem' must name a builtin problem or a problem file");
    }
    if (!is_builtin(c.problem)) {
        if (!fs::exists(c.problem)) {
            std::string msg = "config key 'problem': '" + c.problem + "' is neither a builtin (";
            for (const auto& n : builtin_problem_names()) msg += n + " ";
            msg.back() = ')';
            throw ConfigError(msg + " nor an existing file");
        }
        read_problem_file(c.problem);
    }
    positive("temperature_GHz", c.temperature_GHz);
    positive("t_f_ns", c.t_f_ns);
    if (!(c.g2 >= 0.0) || !std::isfinite(c.g2)) range_error("g2", "a finite number >= 0", num(c.g2));
    positive("omega_c_GHz", c.omega_c_GHz);
    if (c.coupling != "x" && c.coupling != "y" && c.coupling != "z") {
        range_error("coupling", "one of \"x\", \"y\", \"z\"", "\"" + c.coupling + "\"");
    }
    if (c.schedule != "linear") {
        if (!fs::exists(c.schedule)) {
            throw ConfigError("config key 'schedule': file '" + c.schedule + "' does not exist");
        }
        read_schedule_csv(c.schedule);
    }
    positive("schedule_scale", c.schedule_scale);
    if (c.n_trajectories < 1) range_error("n_trajectories", "an integer >= 1", std::to_string(c.n_trajectories));
    if (c.workers < 1 || c.workers > 1024) range_error("workers", "an integer in [1, 1024]", std::to_string(c.workers));
    if (c.batch_size < 1) range_error("batch_size", "an integer >= 1", std::to_string(c.batch_size));
    if (c.grid_points < 2 || c.grid_points > 1000000) {
        range_error("grid_points", "an integer in [2, 1000000]", std::to_string(c.grid_points));
    }
    if (c.levels < 1) range_error("levels", "an integer >= 1", std::to_string(c.levels));
    if (c.bootstrap != 0 && c.bootstrap < 100) {
        range_error("bootstrap", "0 (off) or an integer >= 100", std::to_string(c.bootstrap));
    }
    if (!(c.tol_deg > 0.0 && c.tol_deg <= 1e-2)) range_error("tol_deg", "in (0, 1e-2]", num(c.tol_deg));
    if (!(c.tol_bohr > 0.0 && c.tol_bohr <= 1e-2)) range_error("tol_bohr", "in (0, 1e-2]", num(c.tol_bohr));
    if (!(c.dt_safety > 0.0 && c.dt_safety <= 1.0)) range_error("dt_safety", "in (0, 1]", num(c.dt_safety));
    if (c.m_levels < 0) range_error("m_levels", "an integer >= 0 (0 keeps every level)", std::to_string(c.m_levels));
    if (c.rebuild_every < 1) range_error("rebuild_every", "an integer >= 1", std::to_string(c.rebuild_every));
    if (c.s_star && !(*c.s_star >= 0.0 && *c.s_star <= 1.0)) range_error("s_star", "in [0, 1] or null", num(*c.s_star));
    if (c.output_dir.empty()) range_error("output_dir", "a non-empty path", "\"\"");
    if (c.bench_qubits.empty()) range_error("bench_qubits", "a non-empty list", "[]");
    for (std::size_t k = 0; k < c.bench_qubits.size(); ++k) {
        const int n = c.bench_qubits[k];
        if (n < 1 || n > 12) range_error("bench_qubits", "integers in [1, 12]", std::to_string(n));
        if (k > 0 && n <= c.bench_qubits[k - 1]) range_error("bench_qubits", "strictly increasing", std::to_string(n));
    }
    positive("bench_target_sigma", c.bench_target_sigma);
}

RunConfig parse_config_text(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j, base_dir);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config file '" + path + "' cannot be opened");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), fs::path(path).parent_path().string());
}

std::string emit_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

void apply_override(RunConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' must look like key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    set_key(config, key, value);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        const json j = to_json(RunConfig{});
        for (const auto& [key, value] : j.items()) {
            k.push_back(key);
        }
        return k;
    }();
    return keys;
}

IsingSpec make_spec(const RunConfig& c) {
    IsingSpec spec = is_builtin(c.problem) ? builtin_problem(c.problem) : read_problem_file(c.problem);
    AnnealSchedule schedule = c.schedule == "linear" ? default_schedule() : read_schedule_csv(c.schedule);
    if (c.schedule_scale != 1.0) {
        auto knots = schedule.knots();
        for (auto& k : knots) {
            k.A *= c.schedule_scale;
            k.B *= c.schedule_scale;
        }
        schedule = AnnealSchedule(std::move(knots));
    }
    spec.schedule = std::move(schedule);
    spec.t_f = c.t_f_ns;
    spec.validate();
    return spec;
}

BathSpec make_bath(const RunConfig& c) {
    BathSpec bath = BathSpec::from_ghz(c.g2, c.temperature_GHz, c.omega_c_GHz);
    if (c.coupling != "z") {
        const PauliAxis axis = c.coupling == "x" ? PauliAxis::X : PauliAxis::Y;
        const int n = make_spec(c).n;
        for (int q = 0; q < n; ++q) {
            bath.coupling_ops.push_back({q, axis});
        }
    }
    return bath;
}

IntegratorOptions make_integrator(const RunConfig& c) {
    IntegratorOptions o;
    o.dt_safety = c.dt_safety;
    o.rebuild_every = c.rebuild_every;
    o.binning.tol_deg = c.tol_deg;
    o.binning.tol_bohr = c.tol_bohr;
    o.binning.m_levels = c.m_levels;
    return o;
}

}  // namespace qtraj
