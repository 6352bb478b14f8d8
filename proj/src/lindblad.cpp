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

#include "qtraj/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

namespace qtraj {

namespace {

// Matrix elements below this are treated as exact zeros when building jump operators.
constexpr double kEntryCutoff = 1e-13;
constexpr double kDropNorm = 1e-14;
// Above this dimension a truncated spectrum is computed iteratively.
constexpr Index kDenseLimit = 512;

void apply_real(const IsingOperator& H, const MatrixXd& in, MatrixXd& out) {
    const Index dim = H.dimension();
    const int n = H.qubits();
    const double a = H.transverse();
    const VectorXd& d = H.diagonal();
    out.resize(in.rows(), in.cols());
    for (Index c = 0; c < in.cols(); ++c) {
        const double* x = in.col(c).data();
        double* y = out.col(c).data();
        for (Index k = 0; k < dim; ++k) {
            double flips = 0.0;
            for (int q = 0; q < n; ++q) {
                flips += x[k ^ (Index{1} << q)];
            }
            y[k] = d[k] * x[k] - a * flips;
        }
    }
}

// Fills group / groups / tolerances of an eigensystem whose energies are set.
void finish_eigensystem(EigenSystem& eig, const BinningOptions& options) {
    const Index m = eig.energies.size();
    const double scale = std::max(eig.energies.cwiseAbs().maxCoeff(), 1e-300);
    eig.tol_deg = options.tol_deg * scale;
    eig.tol_bohr = options.tol_bohr * scale;
    eig.group.assign(static_cast<std::size_t>(m), 0);
    eig.groups.clear();
    Index begin = 0;
    for (Index a = 1; a <= m; ++a) {
        if (a == m || eig.energies[a] - eig.energies[begin] > eig.tol_deg) {
            for (Index k = begin; k < a; ++k) {
                eig.group[static_cast<std::size_t>(k)] = static_cast<int>(eig.groups.size());
            }
            eig.groups.emplace_back(begin, a);
            begin = a;
        }
    }
}

// Number of levels to keep: m_levels rounded up to the end of its degenerate group.
Index kept_levels(const VectorXd& energies, const BinningOptions& options) {
    const Index total = energies.size();
    if (options.m_levels <= 0 || options.m_levels >= total) {
        return total;
    }
    const double scale = std::max(energies.cwiseAbs().maxCoeff(), 1e-300);
    const double tol = options.tol_deg * scale;
    Index m = options.m_levels;
    while (m < total && energies[m] - energies[m - 1] <= tol) {
        ++m;
    }
    return m;
}

void orthonormalize(MatrixXd& X) {
    Eigen::HouseholderQR<MatrixXd> qr(X);
    X = qr.householderQ() * MatrixXd::Identity(X.rows(), X.cols());
}

// Lowest levels of H by block Chebyshev-filtered subspace iteration, sized for
// `want`. Empty when the kept levels (m_levels widened to a whole degenerate
// group) do not fit inside the block.
std::optional<EigenSystem> lowest_levels_attempt(const IsingOperator& H, double s, const BinningOptions& options,
                                                 Index want, const EigenSystem* guess) {
    const Index dim = H.dimension();
    const Index block = std::min<Index>(dim, want + std::max<Index>(8, want / 4));
    const double hnorm = std::max(H.norm_bound(), 1e-300);

    MatrixXd X(dim, block);
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> normal;
    for (Index c = 0; c < block; ++c) {
        for (Index k = 0; k < dim; ++k) {
            X(k, c) = normal(rng);
        }
    }
    if (guess != nullptr && guess->dimension() == dim) {
        const Index g = std::min(block, guess->levels());
        X.leftCols(g) = guess->vectors.leftCols(g);
    }
    orthonormalize(X);

    // Chebyshev-filtered subspace iteration: damp [theta_max, hnorm] with a
    // scaled degree-`degree` filter, then Rayleigh-Ritz on the block.
    const int degree = 24;
    MatrixXd HX, Y, Ynext, HY;
    VectorXd theta;
    auto rayleigh_ritz = [&]() {
        apply_real(H, X, HX);
        MatrixXd T = X.transpose() * HX;
        T = 0.5 * (T + T.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> small(T);
        theta = small.eigenvalues();
        X = X * small.eigenvectors();
        HX = HX * small.eigenvectors();
    };
    rayleigh_ritz();
    Index keep = 0;
    for (int iter = 0;; ++iter) {
        // Kept levels must converge and the block must reach past their group.
        keep = kept_levels(theta, options);
        if (keep >= block - 1 && block < dim) {
            return std::nullopt;
        }
        double worst = 0.0;
        for (Index c = 0; c < keep; ++c) {
            worst = std::max(worst, (HX.col(c) - theta[c] * X.col(c)).norm());
        }
        if (worst <= 1e-10 * hnorm) {
            break;
        }
        if (iter == 500) {
            std::ostringstream msg;
            msg << "iterative eigensolver did not converge at s = " << s << " (residual " << worst << ")";
            throw NumericalError(msg.str());
        }
        const double lo = theta[block - 1];
        const double e = 0.5 * (hnorm - lo);
        const double c = 0.5 * (hnorm + lo);
        double sigma = e / (theta[0] - c);
        const double sigma1 = sigma;
        Y = (HX - c * X) * (sigma1 / e);
        for (int k = 1; k < degree; ++k) {
            const double sigma2 = 1.0 / (2.0 / sigma1 - sigma);
            apply_real(H, Y, HY);
            Ynext = (HY - c * Y) * (2.0 * sigma2 / e) - (sigma * sigma2) * X;
            X.swap(Y);
            Y.swap(Ynext);
            sigma = sigma2;
        }
        X = Y;
        orthonormalize(X);
        rayleigh_ritz();
    }

    EigenSystem eig;
    eig.s = s;
    eig.energies = theta.head(keep);
    eig.vectors = X.leftCols(keep);
    finish_eigensystem(eig, options);
    return eig;
}

EigenSystem lowest_levels(const IsingOperator& H, double s, const BinningOptions& options,
                          const EigenSystem* guess) {
    const Index dim = H.dimension();
    const Index m = std::min<Index>(options.m_levels, dim);
    Index want = std::min<Index>(dim, m + std::max<Index>(8, m / 4));
    while (want <= kDenseLimit || want < dim / 2) {
        if (auto eig = lowest_levels_attempt(H, s, options, want, guess)) {
            return *std::move(eig);
        }
        want = std::min<Index>(dim, 2 * want);
    }
    if (dim > 4096) {
        std::ostringstream msg;
        msg << "degenerate group at s = " << s << " needs more than " << want / 2
            << " levels; the iterative eigensolver gave up";
        throw NumericalError(msg.str());
    }
    return eigendecompose(H.dense(), s, options);
}

template <class Mat>
void dissipative_apply(const LindbladSet& set, bool diagonal, const VectorXcd& diag, const MatrixXcd& full,
                       const Mat& psi, Mat& out, bool accumulate) {
    const MatrixXd& V = set.eigensystem().vectors;
    Mat phi(V.cols(), psi.cols());
    phi.real() = V.transpose() * psi.real();
    phi.imag() = V.transpose() * psi.imag();
    Mat chi = diagonal ? Mat(diag.asDiagonal() * phi) : Mat(full * phi);
    if (!accumulate) {
        out.resize(psi.rows(), psi.cols());
        out.real() = V * chi.real();
        out.imag() = V * chi.imag();
    } else {
        out.real() += V * chi.real();
        out.imag() += V * chi.imag();
    }
}

}  // namespace

EigenSystem eigendecompose(const MatrixXd& H, double s, const BinningOptions& options) {
    if (H.rows() != H.cols()) {
        throw std::invalid_argument("Hamiltonian must be square");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(H);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition failed");
    }
    const Index keep = kept_levels(solver.eigenvalues(), options);
    EigenSystem eig;
    eig.s = s;
    eig.energies = solver.eigenvalues().head(keep);
    eig.vectors = solver.eigenvectors().leftCols(keep);
    finish_eigensystem(eig, options);
    return eig;
}

EigenSystem eigendecompose(const IsingOperator& H, double s, const BinningOptions& options,
                           const EigenSystem* guess) {
    if (options.m_levels > 0 && options.m_levels < H.dimension() && H.dimension() > kDenseLimit) {
        return lowest_levels(H, s, options, guess);
    }
    return eigendecompose(H.dense(), s, options);
}

std::vector<BohrBin> bin_bohr_frequencies(const EigenSystem& eig) {
    const Index m = eig.levels();
    const VectorXd& e = eig.energies;
    const double tol = eig.tol_bohr;

    BohrBin zero;
    zero.omega = 0.0;
    struct Gap {
        double omega;
        Index a, b;
    };
    std::vector<Gap> positive;
    for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b < m; ++b) {
            const double w = e[b] - e[a];
            if (std::abs(w) <= tol) {
                zero.pairs.push_back({a, b});
            } else if (w > 0.0) {
                positive.push_back({w, a, b});
            }
        }
    }
    std::stable_sort(positive.begin(), positive.end(), [](const Gap& x, const Gap& y) { return x.omega < y.omega; });

    std::vector<BohrBin> up;
    std::size_t k = 0;
    while (k < positive.size()) {
        const double anchor = positive[k].omega;
        BohrBin bin;
        double sum = 0.0;
        while (k < positive.size() && positive[k].omega - anchor <= tol) {
            bin.pairs.push_back({positive[k].a, positive[k].b});
            sum += positive[k].omega;
            ++k;
        }
        bin.omega = sum / static_cast<double>(bin.pairs.size());
        up.push_back(std::move(bin));
    }

    auto by_level = [](const LevelPair& x, const LevelPair& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; };
    std::vector<BohrBin> bins;
    bins.reserve(2 * up.size() + 1);
    for (auto it = up.rbegin(); it != up.rend(); ++it) {
        BohrBin down;
        down.omega = -it->omega;
        for (const auto& p : it->pairs) {
            down.pairs.push_back({p.b, p.a});
        }
        std::sort(down.pairs.begin(), down.pairs.end(), by_level);
        bins.push_back(std::move(down));
    }
    bins.push_back(std::move(zero));
    for (auto& bin : up) {
        std::sort(bin.pairs.begin(), bin.pairs.end(), by_level);
        bins.push_back(std::move(bin));
    }
    return bins;
}

std::pair<EigenSystem, std::vector<BohrBin>> eigendecompose_and_bin(const MatrixXd& H, double s,
                                                                    const BinningOptions& options) {
    auto eig = eigendecompose(H, s, options);
    auto bins = bin_bohr_frequencies(eig);
    return {std::move(eig), std::move(bins)};
}

std::pair<EigenSystem, std::vector<BohrBin>> eigendecompose_and_bin(const IsingOperator& H, double s,
                                                                    const BinningOptions& options) {
    auto eig = eigendecompose(H, s, options);
    auto bins = bin_bohr_frequencies(eig);
    return {std::move(eig), std::move(bins)};
}

std::vector<MatrixXcd> coupling_matrix_elements(const EigenSystem& eig,
                                                const std::vector<CouplingOperator>& couplings) {
    const MatrixXd& V = eig.vectors;
    const Index dim = V.rows();
    std::vector<MatrixXcd> out;
    out.reserve(couplings.size());
    MatrixXd W(dim, V.cols());
    for (const auto& op : couplings) {
        const Index bit = Index{1} << op.qubit;
        if (bit >= dim) {
            throw std::invalid_argument("coupling operator acts on a qubit outside the system");
        }
        for (Index k = 0; k < dim; ++k) {
            const double z = (k & bit) ? -1.0 : 1.0;
            switch (op.axis) {
                case PauliAxis::Z: W.row(k) = z * V.row(k); break;
                case PauliAxis::X: W.row(k) = V.row(k ^ bit); break;
                // (Y v)[k] = i z(k) v[k ^ bit] up to the overall sign handled below.
                case PauliAxis::Y: W.row(k) = -z * V.row(k ^ bit); break;
            }
        }
        MatrixXd M = V.transpose() * W;
        if (op.axis == PauliAxis::Y) {
            out.push_back(cplx{0.0, 1.0} * M.cast<cplx>());
        } else {
            out.push_back(M.cast<cplx>());
        }
    }
    return out;
}

double JumpOperator::frobenius_norm() const {
    double sum = 0.0;
    for (const auto& e : entries) {
        sum += std::norm(e.value);
    }
    return std::sqrt(sum);
}

void JumpOperator::apply_eigen(const VectorXcd& phi, VectorXcd& out) const {
    for (const auto& e : entries) {
        out[e.a] += e.value * phi[e.b];
    }
}

LindbladSet::LindbladSet(IsingOperator hamiltonian, std::shared_ptr<const EigenSystem> eig,
                         std::vector<JumpOperator> ops, MatrixXcd decay, MatrixXcd lamb_shift)
    : hamiltonian_(std::move(hamiltonian)),
      eig_(std::move(eig)),
      ops_(std::move(ops)),
      decay_(std::move(decay)),
      lamb_shift_(std::move(lamb_shift)) {
    dissipative_ = lamb_shift_ - cplx{0.0, 0.5} * decay_;
    const Index m = dissipative_.rows();
    diagonal_ = true;
    for (Index c = 0; c < m && diagonal_; ++c) {
        for (Index r = 0; r < m; ++r) {
            if (r != c && dissipative_(r, c) != cplx{0.0, 0.0}) {
                diagonal_ = false;
                break;
            }
        }
    }
    dissipative_diag_ = dissipative_.diagonal();
}

VectorXcd LindbladSet::to_eigen(const VectorXcd& psi) const {
    const MatrixXd& V = eig_->vectors;
    VectorXcd phi(V.cols());
    phi.real() = V.transpose() * psi.real();
    phi.imag() = V.transpose() * psi.imag();
    return phi;
}

VectorXcd LindbladSet::from_eigen(const VectorXcd& phi) const {
    const MatrixXd& V = eig_->vectors;
    VectorXcd psi(V.rows());
    psi.real() = V * phi.real();
    psi.imag() = V * phi.imag();
    return psi;
}

void LindbladSet::apply_dissipative(const VectorXcd& psi, VectorXcd& out) const {
    dissipative_apply(*this, diagonal_, dissipative_diag_, dissipative_, psi, out, false);
}

void LindbladSet::apply_effective(const VectorXcd& psi, VectorXcd& out) const {
    out.resize(psi.size());
    hamiltonian_.apply(psi, out);
    dissipative_apply(*this, diagonal_, dissipative_diag_, dissipative_, psi, out, true);
}

void LindbladSet::apply_dissipative_add(const VectorXcd& psi, VectorXcd& out) const {
    dissipative_apply(*this, diagonal_, dissipative_diag_, dissipative_, psi, out, true);
}

void LindbladSet::apply_dissipative_add(const MatrixXcd& psi, MatrixXcd& out) const {
    dissipative_apply(*this, diagonal_, dissipative_diag_, dissipative_, psi, out, true);
}

VectorXcd LindbladSet::apply_jump(std::size_t i, const VectorXcd& psi) const {
    const VectorXcd phi = to_eigen(psi);
    VectorXcd chi = VectorXcd::Zero(phi.size());
    ops_.at(i).apply_eigen(phi, chi);
    return from_eigen(chi);
}

double LindbladSet::max_jump_rate() const {
    if (decay_.size() == 0) {
        return 0.0;
    }
    if (diagonal_) {
        return decay_.diagonal().real().maxCoeff();
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(decay_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
}

double LindbladSet::effective_norm() const {
    const EigenSystem& eig = *eig_;
    if (!eig.truncated() && diagonal_) {
        double best = 0.0;
        for (Index a = 0; a < eig.levels(); ++a) {
            best = std::max(best, std::abs(eig.energies[a] + dissipative_diag_[a]));
        }
        return best;
    }
    const double hs = eig.truncated() ? hamiltonian_.norm_bound() : eig.energies.cwiseAbs().maxCoeff();
    double k = 0.0;
    if (dissipative_.size() > 0) {
        k = diagonal_ ? dissipative_diag_.cwiseAbs().maxCoeff()
                      : Eigen::JacobiSVD<MatrixXcd>(dissipative_).singularValues()[0];
    }
    return hs + k;
}

MatrixXcd LindbladSet::jump_operator_dense(std::size_t i) const {
    const Index m = eig_->levels();
    MatrixXcd a = MatrixXcd::Zero(m, m);
    for (const auto& e : ops_.at(i).entries) {
        a(e.a, e.b) += e.value;
    }
    const MatrixXcd V = eig_->vectors.cast<cplx>();
    return V * a * V.adjoint();
}

MatrixXcd LindbladSet::decay_dense() const {
    const MatrixXcd V = eig_->vectors.cast<cplx>();
    return V * decay_ * V.adjoint();
}

MatrixXcd LindbladSet::effective_hamiltonian_dense() const {
    const MatrixXcd V = eig_->vectors.cast<cplx>();
    return hamiltonian_.dense().cast<cplx>() + V * dissipative_ * V.adjoint();
}

namespace {

// (e^dagger e)(b', b) += w * sum_a conj(e_{a b'}) e_{a b} for entries sorted by a.
void accumulate_gram(const std::vector<JumpOperator::Entry>& entries, double weight, MatrixXcd& target) {
    std::size_t begin = 0;
    while (begin < entries.size()) {
        std::size_t end = begin;
        while (end < entries.size() && entries[end].a == entries[begin].a) {
            ++end;
        }
        for (std::size_t x = begin; x < end; ++x) {
            for (std::size_t y = begin; y < end; ++y) {
                target(entries[x].b, entries[y].b) += weight * std::conj(entries[x].value) * entries[y].value;
            }
        }
        begin = end;
    }
}

}  // namespace

LindbladSet build_lindblad_set(const IsingOperator& hamiltonian, std::shared_ptr<const EigenSystem> eig,
                               const std::vector<BohrBin>& bins, const BathSpec& bath) {
    const auto couplings = resolve_couplings(bath, hamiltonian.qubits());
    const auto M = coupling_matrix_elements(*eig, couplings);
    const int channels = static_cast<int>(couplings.size());
    const Index m = eig->levels();

    MatrixXcd decay = MatrixXcd::Zero(m, m);
    MatrixXcd shift = MatrixXcd::Zero(m, m);
    std::vector<JumpOperator> ops;

    for (const auto& bin : bins) {
        DiagonalizedGamma diag;
        VectorXd shift_weight = VectorXd::Ones(channels);
        if (bath.correlation) {
            diag = diagonalize_gamma(gamma_matrix(bin.omega, bath, channels));
            const MatrixXcd c = diag.u * bath.correlation->cast<cplx>() * diag.u.adjoint();
            shift_weight = c.diagonal().real();
        } else {
            diag.rates = VectorXd::Constant(channels, bath_rate(bin.omega, bath));
        }
        const double S = bath.lamb_shift ? bath.lamb_shift->eval(bin.omega) : 0.0;

        for (int i = 0; i < channels; ++i) {
            std::vector<JumpOperator::Entry> entries;
            entries.reserve(bin.pairs.size());
            for (const auto& p : bin.pairs) {
                cplx v;
                if (bath.correlation) {
                    v = cplx{0.0, 0.0};
                    for (int alpha = 0; alpha < channels; ++alpha) {
                        v += diag.u(i, alpha) * M[static_cast<std::size_t>(alpha)](p.a, p.b);
                    }
                } else {
                    v = M[static_cast<std::size_t>(i)](p.a, p.b);
                }
                if (std::abs(v) > kEntryCutoff) {
                    entries.push_back({p.a, p.b, v});
                }
            }
            if (entries.empty()) {
                continue;
            }
            if (S != 0.0 && shift_weight[i] != 0.0) {
                accumulate_gram(entries, S * shift_weight[i], shift);
            }
            const double rate = diag.rates[i];
            if (!(rate > 0.0)) {
                continue;
            }
            const double root = std::sqrt(rate);
            JumpOperator op;
            op.channel = i;
            op.omega = bin.omega;
            op.rate = rate;
            op.entries = std::move(entries);
            for (auto& e : op.entries) {
                e.value *= root;
            }
            if (op.frobenius_norm() < kDropNorm) {
                continue;
            }
            accumulate_gram(op.entries, 1.0, decay);
            ops.push_back(std::move(op));
        }
    }
    return LindbladSet(hamiltonian, std::move(eig), std::move(ops), std::move(decay), std::move(shift));
}

MatrixXcd build_effective_hamiltonian(const LindbladSet& set) { return set.effective_hamiltonian_dense(); }

std::shared_ptr<const LindbladSet> lindblad_set_at(const IsingSpec& spec, const BathSpec& bath, double s,
                                                   const BinningOptions& options, const EigenSystem* guess) {
    IsingOperator H = build_hamiltonian(spec, s);
    auto eig = std::make_shared<EigenSystem>(eigendecompose(H, s, options, guess));
    const auto bins = bin_bohr_frequencies(*eig);
    return std::make_shared<const LindbladSet>(build_lindblad_set(H, std::move(eig), bins, bath));
}

void EffectiveGenerator::apply(const VectorXcd& psi, VectorXcd& out) const {
    out.resize(psi.size());
    hamiltonian.apply(psi, out);
    if (dissipation) {
        dissipation->apply_dissipative_add(psi, out);
    }
}

void EffectiveGenerator::apply(const MatrixXcd& psi, MatrixXcd& out) const {
    hamiltonian.apply(psi, out);
    if (dissipation) {
        dissipation->apply_dissipative_add(psi, out);
    }
}

MatrixXcd EffectiveGenerator::dense() const {
    MatrixXcd h = hamiltonian.dense().cast<cplx>();
    if (dissipation) {
        const MatrixXcd V = dissipation->eigensystem().vectors.cast<cplx>();
        h += V * (dissipation->lamb_shift() - cplx{0.0, 0.5} * dissipation->decay()) * V.adjoint();
    }
    return h;
}

}  // namespace qtraj
