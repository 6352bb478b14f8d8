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

#include <memory>
#include <utility>
#include <vector>

#include "qtraj/common.hpp"
#include "qtraj/model.hpp"
#include "qtraj/spectral.hpp"

namespace qtraj {

/// Tolerances are relative to max |eps|; m_levels = 0 keeps the full spectrum.
struct BinningOptions {
    double tol_deg = 1e-8;
    double tol_bohr = 1e-8;
    int m_levels = 0;

    friend bool operator==(const BinningOptions&, const BinningOptions&) = default;
};

/// Instantaneous spectrum of H_S. Columns of `vectors` are real and orthonormal.
struct EigenSystem {
    double s = 0.0;
    VectorXd energies;  // ascending
    MatrixXd vectors;   // N x m
    std::vector<int> group;                     // degeneracy group of each level
    std::vector<std::pair<Index, Index>> groups;  // [begin, end) level ranges
    double tol_deg = 0.0;   // absolute
    double tol_bohr = 0.0;  // absolute

    Index dimension() const { return vectors.rows(); }
    Index levels() const { return vectors.cols(); }
    bool truncated() const { return levels() < dimension(); }
    VectorXcd state(Index a) const { return vectors.col(a).cast<cplx>(); }
};

struct LevelPair {
    Index a = 0;  // bra level
    Index b = 0;  // ket level; the pair carries omega = eps_b - eps_a
};

struct BohrBin {
    double omega = 0.0;
    std::vector<LevelPair> pairs;
};

/// Dense eigendecomposition of a real symmetric matrix.
EigenSystem eigendecompose(const MatrixXd& H, double s, const BinningOptions& options);

/// Eigendecomposition of an Ising Hamiltonian. Uses a dense solver unless a
/// level truncation is requested on a large space, in which case Chebyshev
/// filtered block subspace iteration computes the lowest m levels (warm-started
/// when `guess` is given). Throws NumericalError if the iterative solver does not converge.
EigenSystem eigendecompose(const IsingOperator& H, double s, const BinningOptions& options,
                           const EigenSystem* guess = nullptr);

/// Groups all level pairs by Bohr frequency. The omega = 0 bin holds every
/// (a, a) pair plus degenerate off-diagonal pairs; bin -omega mirrors bin omega.
std::vector<BohrBin> bin_bohr_frequencies(const EigenSystem& eig);

std::pair<EigenSystem, std::vector<BohrBin>> eigendecompose_and_bin(const MatrixXd& H, double s,
                                                                    const BinningOptions& options);
std::pair<EigenSystem, std::vector<BohrBin>> eigendecompose_and_bin(const IsingOperator& H, double s,
                                                                    const BinningOptions& options);

/// <eps_a| A_alpha |eps_b> for every coupling channel, as m x m matrices.
std::vector<MatrixXcd> coupling_matrix_elements(const EigenSystem& eig,
                                                const std::vector<CouplingOperator>& couplings);

/// A jump operator A = sum c |eps_a><eps_b| with the rate sqrt(gamma') absorbed.
struct JumpOperator {
    struct Entry {
        Index a = 0;
        Index b = 0;
        cplx value;
    };

    int channel = 0;   // index of the decorrelated channel (the coupling index for independent baths)
    double omega = 0.0;
    double rate = 0.0;  // gamma'_i(omega)
    std::vector<Entry> entries;

    double frobenius_norm() const;
    /// out += A phi in eigen coordinates.
    void apply_eigen(const VectorXcd& phi, VectorXcd& out) const;
};

/// Jump operators and effective non-Hermitian Hamiltonian at one instant.
///
/// Everything dissipative is stored in the instantaneous eigenbasis:
/// K = H_LS - (i/2) sum_i A_i^dagger A_i is an m x m matrix there, and
/// H_eff = H_S + V K V^T with V the (possibly truncated) eigenvectors.
class LindbladSet {
public:
    LindbladSet(IsingOperator hamiltonian, std::shared_ptr<const EigenSystem> eig, std::vector<JumpOperator> ops,
                MatrixXcd decay, MatrixXcd lamb_shift);

    double s() const { return eig_->s; }
    const IsingOperator& hamiltonian() const { return hamiltonian_; }
    const EigenSystem& eigensystem() const { return *eig_; }
    std::shared_ptr<const EigenSystem> eigensystem_ptr() const { return eig_; }
    const std::vector<JumpOperator>& operators() const { return ops_; }
    /// sum_i A_i^dagger A_i in eigen coordinates.
    const MatrixXcd& decay() const { return decay_; }
    const MatrixXcd& lamb_shift() const { return lamb_shift_; }
    bool empty() const { return ops_.empty(); }

    VectorXcd to_eigen(const VectorXcd& psi) const;
    VectorXcd from_eigen(const VectorXcd& phi) const;

    /// out = (H_LS - (i/2) sum A^dagger A) psi.
    void apply_dissipative(const VectorXcd& psi, VectorXcd& out) const;
    /// out += (H_LS - (i/2) sum A^dagger A) psi, for one state or a block of columns.
    void apply_dissipative_add(const VectorXcd& psi, VectorXcd& out) const;
    void apply_dissipative_add(const MatrixXcd& psi, MatrixXcd& out) const;
    /// out = H_eff psi with this set's own H_S.
    void apply_effective(const VectorXcd& psi, VectorXcd& out) const;
    /// A_i psi.
    VectorXcd apply_jump(std::size_t i, const VectorXcd& psi) const;

    /// Largest eigenvalue of sum A^dagger A: the highest jump rate over all states.
    double max_jump_rate() const;
    /// Operator norm of H_eff (exact for full spectra, bounded above when truncated).
    double effective_norm() const;

    MatrixXcd jump_operator_dense(std::size_t i) const;
    MatrixXcd decay_dense() const;
    MatrixXcd effective_hamiltonian_dense() const;

private:
    IsingOperator hamiltonian_;
    std::shared_ptr<const EigenSystem> eig_;
    std::vector<JumpOperator> ops_;
    MatrixXcd decay_;
    MatrixXcd lamb_shift_;
    MatrixXcd dissipative_;  // H_LS - (i/2) decay
    bool diagonal_ = true;
    VectorXcd dissipative_diag_;
};

/// Builds A_{i,omega} = sqrt(gamma'_i(omega)) sum_alpha u_{i alpha}(omega) L_{alpha,omega}
/// for every channel and Bohr bin; operators with Frobenius norm < 1e-14 are dropped.
LindbladSet build_lindblad_set(const IsingOperator& hamiltonian, std::shared_ptr<const EigenSystem> eig,
                               const std::vector<BohrBin>& bins, const BathSpec& bath);

/// Dense H_eff = H_S + H_LS - (i/2) sum A^dagger A.
MatrixXcd build_effective_hamiltonian(const LindbladSet& set);

/// Eigendecompose H_S(s), bin, and build the set.
std::shared_ptr<const LindbladSet> lindblad_set_at(const IsingSpec& spec, const BathSpec& bath, double s,
                                                   const BinningOptions& options,
                                                   const EigenSystem* guess = nullptr);

/// H_S at some time paired with a dissipative part that may have been built
/// at an earlier time (the stride-k rebuild).
struct EffectiveGenerator {
    IsingOperator hamiltonian;
    std::shared_ptr<const LindbladSet> dissipation;

    double s = 0.0;
    /// out = H_eff psi
    void apply(const VectorXcd& psi, VectorXcd& out) const;
    void apply(const MatrixXcd& psi, MatrixXcd& out) const;
    MatrixXcd dense() const;
};

}  // namespace qtraj
