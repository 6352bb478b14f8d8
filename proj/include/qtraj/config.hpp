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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtraj/ame.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/model.hpp"
#include "qtraj/spectral.hpp"

namespace qtraj {

/// Everything a CLI run needs. Units follow the key names (GHz, ns).
struct RunConfig {
    std::string problem;                  // builtin name or problem JSON path
    double temperature_GHz = 0.0;
    double t_f_ns = 0.0;
    double g2 = 1e-4;
    double omega_c_GHz = 4.0;
    std::string coupling = "z";           // Pauli axis coupled to the bath on every qubit
    std::string schedule = "linear";      // "linear" or a CSV path
    double schedule_scale = 1.0;          // multiplies A and B (1 GHz endpoints for "linear")
    std::size_t n_trajectories = 1000;
    std::uint64_t master_seed = 1;
    int workers = 1;
    std::size_t batch_size = 256;
    int grid_points = 101;
    int levels = 2;
    int bootstrap = 1000;
    double tol_deg = 1e-8;
    double tol_bohr = 1e-8;
    double dt_safety = 0.05;
    int m_levels = 0;
    int rebuild_every = 1;
    std::optional<double> s_star;         // jump-statistics split; minimum-gap point when absent
    std::string output_dir = "qtraj-out";
    std::vector<int> bench_qubits{2, 3, 4, 5, 6, 7, 8};
    std::size_t bench_variance_trajectories = 0;
    double bench_target_sigma = 0.01;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and validates a JSON config (text). Unknown keys are errors.
/// Relative file paths are resolved against `base_dir` when it is non-empty.
RunConfig parse_config_text(const std::string& text, const std::string& base_dir = "");
/// Reads a JSON config file; relative paths resolve against its directory.
RunConfig parse_config_file(const std::string& path);
/// Same checks on a config whose fields were set directly.
void validate_config(const RunConfig& config);
/// JSON text that parses back to the same config.
std::string emit_config(const RunConfig& config);
/// Applies a `key=value` override; the value is read as JSON, or as a string if that fails.
void apply_override(RunConfig& config, const std::string& assignment);

IsingSpec make_spec(const RunConfig& config);
BathSpec make_bath(const RunConfig& config);
IntegratorOptions make_integrator(const RunConfig& config);

/// Config keys in emission order.
const std::vector<std::string>& config_keys();

}  // namespace qtraj
