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

#include <string>
#include <string_view>
#include <vector>

#include "qtraj/common.hpp"

namespace qtraj {

struct ScheduleKnot {
    double s = 0.0;
    double A = 0.0;  // rad/ns
    double B = 0.0;  // rad/ns
};

struct ScheduleValue {
    double A = 0.0;
    double B = 0.0;
    double dA_ds = 0.0;
    double dB_ds = 0.0;
};

/// Piecewise-linear annealing schedule A(s), B(s) on s in [0, 1].
///
/// Knots must start at s = 0, end at s = 1 and be strictly increasing. The
/// derivative is the slope of the segment to the right of s, except at s = 1
/// where the last segment's slope is used.
class AnnealSchedule {
public:
    AnnealSchedule();  // linear ramp A = 1 - s, B = s
    explicit AnnealSchedule(std::vector<ScheduleKnot> knots);

    static AnnealSchedule linear(double A0, double B0);
    /// Constant A, B for all s.
    static AnnealSchedule constant(double A, double B);

    ScheduleValue eval(double s) const;
    const std::vector<ScheduleKnot>& knots() const { return knots_; }

    friend bool operator==(const AnnealSchedule&, const AnnealSchedule&) = default;

private:
    std::vector<ScheduleKnot> knots_;
};

inline ScheduleValue eval_schedule(const AnnealSchedule& schedule, double s) {
    return schedule.eval(s);
}

struct Coupling {
    int i = 0;
    int j = 0;
    double J = 0.0;

    friend bool operator==(const Coupling&, const Coupling&) = default;
};

/// Transverse-field Ising problem
///   H_S(s) = A(s) (-sum_i X_i) + B(s) (-sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j).
/// Qubit i is bit i of the computational basis index; bit value 0 is Z = +1.
struct IsingSpec {
    int n = 1;
    std::vector<double> h;
    std::vector<Coupling> J;
    AnnealSchedule schedule;
    double t_f = 1.0;  // ns

    /// Throws std::invalid_argument on a malformed spec.
    void validate() const;
    Index dimension() const { return Index{1} << n; }

    friend bool operator==(const IsingSpec&, const IsingSpec&) = default;
};

/// Real symmetric operator  transverse * (-sum_i X_i) + diag(diagonal).
///
/// This is the storage for every system Hamiltonian (and its s-derivative):
/// the Z-part is a diagonal vector and the X-sum is applied by bit flips.
class IsingOperator {
public:
    IsingOperator() = default;
    IsingOperator(int n, double transverse, VectorXd diagonal);

    int qubits() const { return n_; }
    Index dimension() const { return diagonal_.size(); }
    double transverse() const { return transverse_; }
    const VectorXd& diagonal() const { return diagonal_; }

    /// out = H * in
    void apply(const Eigen::Ref<const VectorXcd>& in, Eigen::Ref<VectorXcd> out) const;
    VectorXcd operator*(const VectorXcd& v) const;
    /// out = H * in, column by column.
    void apply(const MatrixXcd& in, MatrixXcd& out) const;

    MatrixXd dense() const;
    /// Upper bound on the operator norm: n |transverse| + max |diagonal|.
    double norm_bound() const;

    IsingOperator& operator*=(double c);
    friend IsingOperator operator-(const IsingOperator& a, const IsingOperator& b);

private:
    int n_ = 0;
    double transverse_ = 0.0;
    VectorXd diagonal_;
};

/// Diagonal of the problem part -sum h_i Z_i + sum J_ij Z_i Z_j.
VectorXd problem_diagonal(const IsingSpec& spec);

/// H_S at normalized time s. Throws std::domain_error if s is outside [0, 1].
IsingOperator build_hamiltonian(const IsingSpec& spec, double s);

/// dH_S/ds from the schedule slopes.
IsingOperator hamiltonian_s_derivative(const IsingSpec& spec, double s);

/// The three problems shipped with the toolkit: "chain8", "gadget8", "probe16".
/// They come with the default linear schedule (1 GHz endpoints) and t_f = 10 us.
IsingSpec builtin_problem(std::string_view name);
std::vector<std::string> builtin_problem_names();

/// Ferromagnetic chain of n qubits with the chain8 fields (h_0 = 1/4).
IsingSpec chain_problem(int n);

/// Linear schedule with 1 GHz endpoints, A(0) = B(1) = 2 pi rad/ns.
AnnealSchedule default_schedule();

}  // namespace qtraj
