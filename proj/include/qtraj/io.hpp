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

#include <ostream>
#include <string>
#include <vector>

#include "qtraj/ame.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/model.hpp"

namespace qtraj {

/// Shortest-safe round-trip text for a double (17 significant digits).
std::string format_double(double value);

/// Schedule CSV with header `s,A_GHz,B_GHz`. Throws ConfigError naming the
/// offending row (1-based, header excluded).
AnnealSchedule read_schedule_csv(const std::string& path);

/// Problem JSON: {"n": int, "h": [..], "J": [[i, j, J_ij], ...]}; t_f is set by the run config.
IsingSpec read_problem_file(const std::string& path);

/// `s,pop_0,...,trace_err`
void write_population_csv(std::ostream& out, const PopulationTrace& trace);
/// `s,mean_pop_0,stderr_pop_0,...`
void write_ensemble_csv(std::ostream& out, const EnsembleResult& result);
/// `s,boot_sigma_0,ci_low_0,ci_high_0,...`
void write_bootstrap_csv(std::ostream& out, const EnsembleResult& result);
/// `trajectory_id,s_jump,channel_alpha,omega,pre_gs_overlap,post_gs_overlap`
void write_jump_log_csv(std::ostream& out, const std::vector<std::vector<JumpEvent>>& logs);
/// `net_jumps,trajectories`
void write_jump_histogram_csv(std::ostream& out, const JumpStatistics& stats);
/// `s_low,s_high,toward_gs,out_of_gs`
void write_jump_intervals_csv(std::ostream& out, const JumpStatistics& stats);
void write_cost_report(std::ostream& out, const CostReport& report);

/// Reads a numeric CSV (one header line) back into rows of doubles.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::vector<std::string>* header = nullptr);

}  // namespace qtraj
