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

#include <vector>

#include "qtraj/common.hpp"
#include "qtraj/lindblad.hpp"
#include "qtraj/model.hpp"
#include "qtraj/spectral.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

/// d rho/dt = -i (H_eff rho - rho H_eff^dagger) + sum_i A_i rho A_i^dagger,
/// with H_eff from `g` (its H_S and dissipative part).
MatrixXcd apply_generator(const MatrixXcd& rho, const EffectiveGenerator& g);
MatrixXcd apply_generator(const MatrixXcd& rho, const LindbladSet& set);

/// Same as apply_generator for Hermitian rho, at roughly half the cost.
MatrixXcd apply_generator_hermitian(const MatrixXcd& rho, const EffectiveGenerator& g);

struct PopulationTrace {
    std::vector<double> grid;
    MatrixXd populations;            // grid x levels, <eps_a(s)|rho(s)|eps_a(s)>
    std::vector<double> trace_error;  // |Tr rho - 1| at each grid point
    std::vector<MatrixXcd> snapshots;  // full rho at each grid point when requested
    double max_trace_error = 0.0;
    double min_eigenvalue = 0.0;      // smallest eigenvalue seen at grid points
    std::size_t steps = 0;
};

struct AmeOptions {
    IntegratorOptions integrator;
    std::vector<double> sample_grid;
    int levels = 1;
    bool snapshots = false;
};

/// Fixed-step RK4 on the shared lattice, starting from the ground state of
/// H_S(0). rho is symmetrized after every step. Throws NumericalError if the
/// trace drifts or an eigenvalue drops below -1e-6.
PopulationTrace solve_ame(const IsingSpec& spec, const BathSpec& bath, const AmeOptions& options);

/// max_s max_{a,b} |<eps_a|dH_S/ds|eps_b>| / (min gap^2 * t_f) over `points`
/// values of s. Warns when the ratio is >= 1.
struct AdiabaticReport {
    double ratio = 0.0;
    double min_gap = 0.0;    // rad/ns
    double s_min_gap = 0.0;
    double max_element = 0.0;  // rad/ns
};
AdiabaticReport adiabatic_diagnostic(const IsingSpec& spec, int points = 201, const BinningOptions& binning = {});

}  // namespace qtraj
