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

#include <functional>
#include <optional>
#include <vector>

#include "qtraj/common.hpp"

namespace qtraj {

enum class PauliAxis { X, Y, Z };

/// System side A_alpha of the system-bath coupling: a Pauli on one qubit.
struct CouplingOperator {
    int qubit = 0;
    PauliAxis axis = PauliAxis::Z;

    friend bool operator==(const CouplingOperator&, const CouplingOperator&) = default;
};

/// Piecewise-linear S(omega) used for the Lamb shift; zero outside the table.
struct LambShiftTable {
    std::vector<double> omega;  // strictly increasing, rad/ns
    std::vector<double> shift;  // rad/ns

    double eval(double w) const;
};

using RateFunction = std::function<double(double)>;

struct BathSpec {
    double g2 = 1e-4;
    double beta = 1.0;     // ns/rad
    double omega_c = 8.0 * std::numbers::pi;  // rad/ns
    /// Empty means sigma^z on every qubit, each with its own bath.
    std::vector<CouplingOperator> coupling_ops;
    /// Bath correlation C: gamma_ab(w) = rate(w) C_ab. Identity when absent.
    std::optional<MatrixXd> correlation;
    /// Replaces the Ohmic rate when set. Must obey KMS for a thermal bath.
    RateFunction rate;
    std::optional<LambShiftTable> lamb_shift;

    void validate() const;
    /// Bath from the units used in configuration files.
    static BathSpec from_ghz(double g2, double temperature_ghz, double omega_c_ghz);
};

/// Ohmic rate 2 pi g^2 w exp(-|w|/w_c) / (1 - exp(-beta w)); 2 pi g^2 / beta at w = 0.
double gamma_ohmic(double omega, const BathSpec& bath);

/// bath.rate if set, Ohmic otherwise.
double bath_rate(double omega, const BathSpec& bath);

/// Coupling operators with the sigma^z default expanded for n qubits.
std::vector<CouplingOperator> resolve_couplings(const BathSpec& bath, int n);

/// gamma_ab(w) over the coupling channels.
MatrixXcd gamma_matrix(double omega, const BathSpec& bath, int channels);

/// Eigen-decomposition of a rate matrix: u gamma u^dagger = diag(rates).
struct DiagonalizedGamma {
    VectorXd rates;
    MatrixXcd u;
};

/// Throws std::invalid_argument for a non-Hermitian input and NumericalError
/// for an eigenrate below -1e-12 (the unraveling needs CP-divisible rates).
/// Rates in [-1e-12, 0) are clamped to zero.
DiagonalizedGamma diagonalize_gamma(const MatrixXcd& gamma);

}  // namespace qtraj
