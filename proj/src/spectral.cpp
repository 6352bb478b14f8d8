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

#include "qtraj/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qtraj {

double LambShiftTable::eval(double w) const {
    if (omega.empty() || w < omega.front() || w > omega.back()) {
        return 0.0;
    }
    auto hi = std::upper_bound(omega.begin(), omega.end(), w);
    if (hi == omega.end()) {
        return shift.back();
    }
    const auto k = static_cast<std::size_t>(std::distance(omega.begin(), hi));
    const double t = (w - omega[k - 1]) / (omega[k] - omega[k - 1]);
    return shift[k - 1] + t * (shift[k] - shift[k - 1]);
}

void BathSpec::validate() const {
    if (!(g2 >= 0.0) || !std::isfinite(g2)) {
        throw std::invalid_argument("g2 must be non-negative");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("beta must be positive");
    }
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) {
        throw std::invalid_argument("omega_c must be positive");
    }
    if (correlation) {
        const auto& c = *correlation;
        if (c.rows() != c.cols()) {
            throw std::invalid_argument("bath correlation must be square");
        }
        if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw std::invalid_argument("bath correlation must be symmetric");
        }
    }
    if (lamb_shift) {
        const auto& t = *lamb_shift;
        if (t.omega.size() != t.shift.size()) {
            throw std::invalid_argument("Lamb shift table columns differ in length");
        }
        for (std::size_t k = 1; k < t.omega.size(); ++k) {
            if (!(t.omega[k] > t.omega[k - 1])) {
                throw std::invalid_argument("Lamb shift table omega must be strictly increasing");
            }
        }
    }
}

BathSpec BathSpec::from_ghz(double g2, double temperature_ghz, double omega_c_ghz) {
    BathSpec bath;
    bath.g2 = g2;
    bath.beta = 1.0 / ghz_to_angular(temperature_ghz);
    bath.omega_c = ghz_to_angular(omega_c_ghz);
    return bath;
}

double gamma_ohmic(double omega, const BathSpec& bath) {
    const double prefactor = kTwoPi * bath.g2;
    if (omega == 0.0) {
        return prefactor / bath.beta;
    }
    const double w = std::abs(omega);
    const double x = bath.beta * w;
    // w / (1 - e^{-beta w}) for the emission side; the absorption side picks up e^{-beta w}.
    double value = prefactor * w * std::exp(-w / bath.omega_c) / (-std::expm1(-x));
    if (omega < 0.0) {
        value *= std::exp(-x);
    }
    return value;
}

double bath_rate(double omega, const BathSpec& bath) {
    return bath.rate ? bath.rate(omega) : gamma_ohmic(omega, bath);
}

std::vector<CouplingOperator> resolve_couplings(const BathSpec& bath, int n) {
    if (!bath.coupling_ops.empty()) {
        for (const auto& op : bath.coupling_ops) {
            if (op.qubit < 0 || op.qubit >= n) {
                throw std::invalid_argument("coupling operator acts on a qubit outside the system");
            }
        }
        return bath.coupling_ops;
    }
    std::vector<CouplingOperator> ops;
    for (int q = 0; q < n; ++q) {
        ops.push_back({q, PauliAxis::Z});
    }
    return ops;
}

MatrixXcd gamma_matrix(double omega, const BathSpec& bath, int channels) {
    const double rate = bath_rate(omega, bath);
    if (bath.correlation) {
        if (bath.correlation->rows() != channels) {
            throw std::invalid_argument("bath correlation size does not match the coupling channels");
        }
        return (rate * *bath.correlation).cast<cplx>();
    }
    return MatrixXcd::Identity(channels, channels) * rate;
}

DiagonalizedGamma diagonalize_gamma(const MatrixXcd& gamma) {
    if (gamma.rows() != gamma.cols()) {
        throw std::invalid_argument("rate matrix must be square");
    }
    const double scale = std::max(1.0, gamma.cwiseAbs().maxCoeff());
    if ((gamma - gamma.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("rate matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(gamma);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("rate matrix diagonalization failed");
    }
    DiagonalizedGamma out;
    out.rates = solver.eigenvalues();
    for (Index k = 0; k < out.rates.size(); ++k) {
        if (out.rates[k] < -1e-12) {
            std::ostringstream msg;
            msg << "rate matrix has a negative eigenrate " << out.rates[k]
                << "; only CP-divisible dynamics can be unraveled into jumps";
            throw NumericalError(msg.str());
        }
        out.rates[k] = std::max(out.rates[k], 0.0);
    }
    // gamma = W diag W^dagger, so u = W^dagger gives u gamma u^dagger = diag.
    out.u = solver.eigenvectors().adjoint();
    return out;
}

}  // namespace qtraj
