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
#include <limits>
#include <map>
#include <vector>

#include "qtraj/common.hpp"
#include "qtraj/model.hpp"
#include "qtraj/spectral.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

struct EnsembleOptions {
    TrajectoryOptions trajectory;
    std::size_t trajectories = 1;  // R
    int workers = 1;               // C
    std::uint64_t master_seed = 1;
    /// Trajectories advance in lockstep in fixed index blocks of this size.
    /// Results depend on it (floating-point blocking) but never on `workers`.
    std::size_t batch_size = 256;
    /// Bootstrap resamples per grid point; 0 disables the bootstrap.
    int bootstrap = 0;
};

struct EnsembleResult {
    std::vector<double> grid;
    std::size_t trajectories = 0;
    MatrixXd mean;      // grid x levels
    MatrixXd stderror;  // grid x levels, NaN when R = 1
    MatrixXd boot_sigma;  // grid x levels when bootstrapped
    MatrixXd ci_low;      // mean - 2 sigma_boot
    MatrixXd ci_high;     // mean + 2 sigma_boot
    std::vector<MatrixXd> samples;  // one R x grid matrix per level
    std::vector<std::vector<JumpEvent>> jumps;  // per trajectory
    std::vector<int> net_jumps;  // toward-GS minus out-of-GS jumps per trajectory
    /// captured[c][k]: normalized state of trajectory k at capture index c.
    std::vector<std::vector<VectorXcd>> captured;
};

/// Runs R trajectories on C worker threads and reduces in trajectory order,
/// so the result is bit-identical for any C.
EnsembleResult run_ensemble(const IsingSpec& spec, const BathSpec& bath, const EnsembleOptions& options);

/// Sample mean and its standard error sqrt(sum (x - mean)^2 / (R (R - 1))); NaN for R = 1.
std::pair<double, double> mean_and_stderr(const std::vector<double>& samples);

struct BootstrapResult {
    double mean = 0.0;
    double sigma = 0.0;  // bootstrap standard deviation of the mean
    double low = 0.0;    // mean - 2 sigma
    double high = 0.0;   // mean + 2 sigma
};

/// Resample-with-replacement bootstrap of the mean. Needs >= 2 samples and B >= 100.
BootstrapResult bootstrap_ci(const std::vector<double>& samples, int resamples, std::uint64_t seed);

/// Bootstrap sigma for every column of an R x G sample matrix, reusing the same
/// resample indices for all columns.
VectorXd bootstrap_sigma(const MatrixXd& samples, int resamples, std::uint64_t seed);

/// Seed of the statistics stream derived from the master seed. It never
/// coincides with a trajectory stream.
std::uint64_t statistics_seed(std::uint64_t master_seed);

/// (1/n) sum |psi_k><psi_k| for normalized states (renormalized defensively).
MatrixXcd reconstruct_density(const std::vector<VectorXcd>& states);

enum class JumpKind { TowardGround, OutOfGround, Unclassified };

/// post - pre > 0.5 is toward the ground state, < -0.5 out of it.
JumpKind classify_jump(const JumpEvent& event);

struct JumpInterval {
    double s_low = 0.0;
    double s_high = 0.0;
    std::size_t toward = 0;
    std::size_t out = 0;
};

struct JumpStatistics {
    std::size_t toward = 0;
    std::size_t out = 0;
    std::size_t unclassified = 0;
    std::map<int, std::size_t> net_histogram;  // net jumps per trajectory -> trajectory count
    JumpInterval before;  // s < s_star
    JumpInterval after;   // s >= s_star
    std::vector<JumpInterval> intervals;
};

JumpStatistics jump_statistics(const std::vector<std::vector<JumpEvent>>& logs, double s_star, int intervals = 20);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against Exp(rate).
KsResult ks_test_exponential(std::vector<double> samples, double rate);
/// Asymptotic Kolmogorov distribution survival function with the small-sample correction.
double kolmogorov_pvalue(double statistic, std::size_t n);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 0.0;
};

/// Pearson chi-square goodness of fit. A count in a zero-probability category gives
/// p = 0 and an infinite statistic.
ChiSquareResult chi_square_test(const std::vector<std::size_t>& counts, const std::vector<double>& probabilities);

struct BenchmarkOptions {
    std::vector<int> qubits{2, 3, 4, 5, 6, 7, 8};
    BathSpec bath;
    AnnealSchedule schedule = default_schedule();
    double t_f = 100.0;
    double s_eval = 0.5;       // where the per-step costs are measured
    double min_seconds = 0.05;  // per timing sample; repetitions grow until reached
    int samples = 5;           // timing samples per dimension (minimum is kept)
    /// Trajectories per dimension for the variance estimate of the final
    /// ground-state population; 0 skips the variance fit.
    std::size_t variance_trajectories = 0;
    IntegratorOptions integrator;
    double target_sigma = 0.01;
    std::uint64_t master_seed = 1;
};

struct CostReport {
    std::vector<int> qubits;
    std::vector<double> dimension;
    std::vector<double> ame_step_seconds;         // one RK4 step of the density matrix
    std::vector<double> trajectory_step_seconds;  // one RK4 step of one state vector
    std::vector<double> ratio;
    std::vector<int> repetitions;
    double ratio_slope = 0.0;  // d log(ratio) / d log N
    bool ratio_monotone = false;
    double beta = 0.0;   // fitted AME exponent, t = k1 N^beta
    double alpha = 0.0;  // fitted trajectory exponent, t = k2 N^alpha
    double k1 = 0.0;
    double k2 = 0.0;
    std::vector<double> lambda_b;  // trajectory variance per dimension (empty when skipped)
    double Lambda_B = std::numeric_limits<double>::quiet_NaN();
    double x = std::numeric_limits<double>::quiet_NaN();
    double target_sigma = 0.0;
    double n_star = std::numeric_limits<double>::quiet_NaN();
    std::vector<long long> trajectories_needed;  // R(N)
};

/// Least-squares slope and intercept of y against x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// R(N) = ceil(Lambda_B N^-x / sigma^2), at least 1.
long long trajectories_needed(double Lambda_B, double x, double N, double sigma);
/// N* = ceil((Lambda_B / sigma^2)^(1/x)); NaN unless x > 0.
double crossover_dimension(double Lambda_B, double x, double sigma);

CostReport benchmark_scaling(const BenchmarkOptions& options);

}  // namespace qtraj
