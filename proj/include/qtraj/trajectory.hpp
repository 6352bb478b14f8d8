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
#include <memory>
#include <random>
#include <vector>

#include "qtraj/common.hpp"
#include "qtraj/lindblad.hpp"
#include "qtraj/model.hpp"
#include "qtraj/spectral.hpp"

namespace qtraj {

struct IntegratorOptions {
    double dt_safety = 0.05;  // eta
    int rebuild_every = 1;    // rebuild the dissipative part every k steps
    double fd_step = 1e-6;    // delta s for finite-difference derivatives
    BinningOptions binning;

    void validate() const;
    friend bool operator==(const IntegratorOptions&, const IntegratorOptions&) = default;
};

/// The three local time scales bounding the step, in ns, and the chosen step.
struct StepBound {
    double hamiltonian_term = 0.0;  // ||H_eff|| / ||dH_eff/dt||
    double norm_term = 0.0;         // 1 / ||H_eff||
    double rate_term = 0.0;         // |lambda / (lambda^2 - dlambda/dt)|
    double eta = 0.05;
    double dt = 0.0;                // eta * min of the three
};

/// Terms with a zero denominator (or lambda <= 0 in the rate term) are +inf.
StepBound max_timestep(double heff_norm, double heff_dot_norm, double lambda, double lambda_dot, double eta);

/// Finite-difference estimate of the bound at s: builds the sets at s +- fd_step
/// (one-sided at the ends) and differentiates ||H_eff|| inputs and lambda.
/// lambda is the largest jump rate over states, max eig(sum A^dagger A).
StepBound estimate_step_bound(const IsingSpec& spec, const BathSpec& bath, const IntegratorOptions& options,
                              const LindbladSet& at_s);

struct JumpRates {
    double total = 0.0;
    std::vector<double> channel;  // <psi|A_i^dagger A_i|psi> per operator of the set
};

/// Requires a normalized psi (1e-10); throws std::invalid_argument otherwise.
JumpRates compute_jump_rate(const VectorXcd& psi, const LindbladSet& set);

/// 64-bit finalizer used to derive trajectory streams: stream_k = mix(master_seed, k).
std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t index);

/// Uniform in [0, 1) from the top 53 bits of one 64-bit draw.
double uniform01(std::mt19937_64& rng);

struct JumpEvent {
    double s_jump = 0.0;
    std::size_t op = 0;       // operator index within the set at s_jump
    int channel = 0;          // coupling channel alpha (decorrelated index)
    double omega = 0.0;       // Bohr frequency, rad/ns
    double pre_gs_overlap = 0.0;
    double post_gs_overlap = 0.0;
};

struct TrajectoryState {
    VectorXcd psi;       // unnormalized between jumps
    double s = 0.0;
    double r = 1.0;      // waiting-time threshold
    std::mt19937_64 rng;
    std::vector<JumpEvent> jumps;

    double norm2() const { return psi.squaredNorm(); }
    /// Ground state of H_S(s0) with a fresh stream for (master_seed, index).
    static TrajectoryState initial(const LindbladSet& set_at_s0, std::uint64_t master_seed, std::uint64_t index);
    void redraw_threshold();
};

/// One RK4 step of the shared lattice. Stage generators pair the exact H_S at
/// the stage time with the current dissipative part.
struct LatticeStep {
    std::size_t index = 0;
    double s0 = 0.0;
    double s1 = 0.0;
    double dt = 0.0;  // ns
    EffectiveGenerator g0, gmid, g1;
    /// Set rebuilt at s1 (always present at sample points and at the end).
    std::shared_ptr<const LindbladSet> end_set;
    /// Dissipative part that sub-steps after a mid-step jump must use.
    std::shared_ptr<const LindbladSet> frozen;
    StepBound bound;
    bool bound_updated = false;
    int sample = -1;  // sample grid index at s1, or -1
};

/// Time lattice shared by every trajectory of a run and by the AME solver.
///
/// The lattice depends only on the problem, bath and options, never on a
/// trajectory's state, so trajectories advance in lockstep over identical
/// steps. Steps are clamped to land on every sample point.
class StepLattice {
public:
    StepLattice(const IsingSpec& spec, const BathSpec& bath, const IntegratorOptions& options,
                std::vector<double> sample_grid, double s_start = 0.0);

    /// Set at the starting point.
    std::shared_ptr<const LindbladSet> start_set() const { return start_set_; }
    /// Sample index at the starting point, or -1.
    int start_sample() const { return start_sample_; }
    double s() const { return s_; }
    bool done() const { return s_ >= 1.0; }
    /// Advances to the next step; false once s = 1 has been reached.
    bool next(LatticeStep& step);
    std::size_t steps_taken() const { return steps_; }
    std::size_t rebuilds() const { return rebuilds_; }

    /// A fresh set at arbitrary s (jump times).
    std::shared_ptr<const LindbladSet> build_set(double s) const;
    EffectiveGenerator generator(double s, std::shared_ptr<const LindbladSet> dissipation) const;

    const IsingSpec& spec() const { return spec_; }
    const BathSpec& bath() const { return bath_; }
    const IntegratorOptions& options() const { return options_; }
    const std::vector<double>& grid() const { return grid_; }

private:
    IsingSpec spec_;
    BathSpec bath_;
    IntegratorOptions options_;
    std::vector<double> grid_;
    double s_ = 0.0;
    std::size_t next_sample_ = 0;
    int start_sample_ = -1;
    std::shared_ptr<const LindbladSet> start_set_;
    std::shared_ptr<const LindbladSet> current_;  // dissipative part in use, built at s_built_
    StepBound bound_;
    int since_rebuild_ = 0;
    std::size_t steps_ = 0;
    std::size_t rebuilds_ = 0;
};

/// RK4 step of d psi/dt = -i H_eff psi over dt with stage generators.
VectorXcd rk4_step(const VectorXcd& psi, double dt, const EffectiveGenerator& g0, const EffectiveGenerator& gmid,
                   const EffectiveGenerator& g1);
MatrixXcd rk4_step(const MatrixXcd& psi, double dt, const EffectiveGenerator& g0, const EffectiveGenerator& gmid,
                   const EffectiveGenerator& g1);

/// Result of evolving without a jump.
struct NoJumpResult {
    bool jumped = false;  // norm^2 reached r before s_end
    std::shared_ptr<const LindbladSet> set;  // set at the stopping point
};

/// Integrates d psi/dt = -i H_eff psi from state.s until norm^2 <= r (the
/// crossing time is bisected within the step) or s_end. Throws NumericalError
/// if the norm grows by more than 1e-10 relative in a step.
NoJumpResult evolve_no_jump(TrajectoryState& state, const IsingSpec& spec, const BathSpec& bath,
                            const IntegratorOptions& options, double s_end = 1.0);

/// Samples a channel with probability <A_i^dagger A_i>/lambda, applies it,
/// renormalizes, and redraws r. Throws NumericalError when lambda = 0.
JumpEvent select_and_apply_jump(TrajectoryState& state, const LindbladSet& set);

struct TrajectoryOptions {
    IntegratorOptions integrator;
    std::vector<double> sample_grid;   // s values, sorted, in [0, 1]
    int levels = 1;                    // populations of the lowest `levels` eigenstates are recorded
    std::vector<int> capture;          // grid indices at which full normalized states are kept
};

struct TrajectoryResult {
    std::uint64_t index = 0;
    MatrixXd populations;            // grid x levels, |<eps_a(s)|psi(s)>|^2
    std::vector<JumpEvent> jumps;
    std::vector<VectorXcd> captured;  // one per capture index
};

/// Runs trajectories first..first+count-1 in lockstep over one lattice.
std::vector<TrajectoryResult> run_trajectory_batch(const IsingSpec& spec, const BathSpec& bath,
                                                   const TrajectoryOptions& options, std::uint64_t master_seed,
                                                   std::uint64_t first, std::size_t count);

/// The waiting-time algorithm for one trajectory; identical to its column in a batch.
TrajectoryResult run_trajectory(const IsingSpec& spec, const BathSpec& bath, const TrajectoryOptions& options,
                                std::uint64_t master_seed, std::uint64_t index);

/// Drift term D psi = (1/2) sum_i (<A_i^dagger A_i> - A_i^dagger A_i) psi for a
/// normalized psi. Only used to check that eigenstates are left alone.
VectorXcd drift_term(const VectorXcd& psi, const LindbladSet& set);

/// Evenly spaced grid of `points` values from 0 to 1.
std::vector<double> uniform_grid(int points);

}  // namespace qtraj
