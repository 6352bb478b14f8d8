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

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "oracle.hpp"
#include "qtraj/ame.hpp"

using namespace qtraj;

namespace {

BathSpec test_bath(double g2 = 1e-2, double beta = 1.0) {
    BathSpec b;
    b.g2 = g2;
    b.beta = beta;
    b.omega_c = 8 * std::numbers::pi;
    return b;
}

MatrixXcd random_density(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXcd x(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) x(i, j) = cplx(g(rng), g(rng));
    MatrixXcd rho = x * x.adjoint();
    return rho / rho.trace();
}

// Dissipator with the full rate matrix:
// sum_{alpha beta w} gamma_ab(w) (L_b rho L_a^dag - 1/2 {L_a^dag L_b, rho}).
MatrixXcd dissipator_oracle(const IsingSpec& spec, const BathSpec& bath, double s, const MatrixXcd& rho) {
    const MatrixXcd H = oracle::hamiltonian(spec, s);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(H);
    const VectorXd e = es.eigenvalues();
    const MatrixXcd V = es.eigenvectors();
    const Index N = e.size();
    const int n = spec.n;
    std::vector<double> omegas;
    for (Index a = 0; a < N; ++a)
        for (Index b = 0; b < N; ++b) {
            const double w = e(b) - e(a);
            if (std::none_of(omegas.begin(), omegas.end(), [&](double x) { return std::abs(x - w) < 1e-9; }))
                omegas.push_back(w);
        }
    MatrixXcd out = MatrixXcd::Zero(N, N);
    for (double w : omegas) {
        std::vector<MatrixXcd> L;
        for (int alpha = 0; alpha < n; ++alpha) {
            MatrixXcd l = MatrixXcd::Zero(N, N);
            const MatrixXcd Z = oracle::single('z', alpha, n);
            for (Index a = 0; a < N; ++a)
                for (Index b = 0; b < N; ++b)
                    if (std::abs(e(b) - e(a) - w) < 1e-9) {
                        const cplx m = V.col(a).dot(Z * V.col(b));
                        l += m * V.col(a) * V.col(b).adjoint();
                    }
            L.push_back(l);
        }
        const double g = gamma_ohmic(w, bath);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const cplx gab = g * (*bath.correlation)(a, b);
                out += gab * (L[b] * rho * L[a].adjoint() -
                              0.5 * (L[a].adjoint() * L[b] * rho + rho * L[a].adjoint() * L[b]));
            }
    }
    return out;
}

IsingSpec static_z(double B0) {
    IsingSpec spec;
    spec.n = 1;
    spec.h = {1.0};
    spec.schedule = AnnealSchedule::constant(0.0, B0);
    spec.t_f = 1.0;
    return spec;
}

}  // namespace

TEST_SUITE("ame") {

TEST_CASE("closed-system limit is the commutator") {
    std::mt19937_64 rng(1);
    const auto spec = oracle::random_spec(3, rng);
    const auto set = lindblad_set_at(spec, test_bath(0.0), 0.3, {});
    const MatrixXcd rho = random_density(8, rng);
    const MatrixXcd H = oracle::hamiltonian(spec, 0.3);
    CHECK(oracle::max_abs(apply_generator(rho, *set) - cplx(0, -1) * (H * rho - rho * H)) < 1e-12);
}

TEST_CASE("single-qubit decay rates from the excited state") {
    IsingSpec spec;
    spec.n = 1;
    spec.h = {0.0};
    spec.schedule = AnnealSchedule::constant(1.0, 0.0);
    const auto b = test_bath();
    const auto set = lindblad_set_at(spec, b, 0.0, {});
    const VectorXcd e0 = set->eigensystem().state(0), e1 = set->eigensystem().state(1);
    const MatrixXcd rho = e1 * e1.adjoint();
    const MatrixXcd d = apply_generator(rho, *set);
    CHECK(e0.dot(d * e0).real() == doctest::Approx(gamma_ohmic(2.0, b)).epsilon(1e-12));
    CHECK(e1.dot(d * e1).real() == doctest::Approx(-gamma_ohmic(2.0, b)).epsilon(1e-12));
}

TEST_CASE("Gibbs state is a fixed point of the generator") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 6; ++trial) {
        const auto spec = oracle::random_spec(1 + trial % 3, rng);
        const auto b = test_bath(1e-2, 0.3 + 0.4 * trial);
        const double s = 0.15 * (trial + 1);
        const auto set = lindblad_set_at(spec, b, s, {});
        const MatrixXcd H = oracle::hamiltonian(spec, s);
        MatrixXcd gibbs = (-b.beta * H).exp();
        gibbs /= gibbs.trace();
        CHECK(oracle::max_abs(apply_generator(gibbs, *set)) < 1e-10);
    }
}

TEST_CASE("generator is traceless, Hermiticity-preserving and linear") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto spec = oracle::random_spec(2 + trial % 2, rng);
        const auto set = lindblad_set_at(spec, test_bath(), 0.5, {});
        const Index N = spec.dimension();
        const MatrixXcd r1 = random_density(N, rng), r2 = random_density(N, rng);
        const MatrixXcd d1 = apply_generator(r1, *set), d2 = apply_generator(r2, *set);
        CHECK(std::abs(d1.trace()) < 1e-12);
        CHECK(oracle::max_abs(d1 - d1.adjoint()) < 1e-12);
        const cplx a(0.3, -1.2), c(-2.0, 0.5);
        CHECK(oracle::max_abs(apply_generator(a * r1 + c * r2, *set) - (a * d1 + c * d2)) < 1e-12);
        EffectiveGenerator g{set->hamiltonian(), set, set->s()};
        CHECK(oracle::max_abs(apply_generator_hermitian(r1, g) - d1) < 1e-12);
    }
}

TEST_CASE("dissipator against the correlated-bath oracle") {
    std::mt19937_64 rng(4);
    const auto spec = oracle::random_spec(2, rng);
    auto b = test_bath();
    MatrixXd C(2, 2);
    C << 1.0, 0.4, 0.4, 0.8;
    b.correlation = C;
    const double s = 0.45;
    const auto set = lindblad_set_at(spec, b, s, {});
    const MatrixXcd rho = random_density(4, rng);
    const MatrixXcd H = oracle::hamiltonian(spec, s);
    const MatrixXcd diss = apply_generator(rho, *set) - cplx(0, -1) * (H * rho - rho * H);
    CHECK(oracle::max_abs(diss - dissipator_oracle(spec, b, s, rho)) < 1e-12);

    b.correlation = MatrixXd::Identity(2, 2);
    const auto plain = lindblad_set_at(spec, b, s, {});
    const MatrixXcd diss0 = apply_generator(rho, *plain) - cplx(0, -1) * (H * rho - rho * H);
    CHECK(oracle::max_abs(diss0 - dissipator_oracle(spec, b, s, rho)) < 1e-12);
}

TEST_CASE("slow closed anneal stays in the ground state") {
    IsingSpec spec;
    spec.n = 1;
    spec.h = {0.5};
    spec.schedule = AnnealSchedule::linear(1.0, 1.0);
    spec.t_f = 2000.0;
    AmeOptions opts;
    opts.sample_grid = uniform_grid(11);
    opts.levels = 2;
    const auto trace = solve_ame(spec, test_bath(0.0), opts);
    for (Index g = 0; g < 11; ++g) CHECK(trace.populations(g, 0) >= 0.999);
    CHECK(trace.max_trace_error < 1e-8);
}

TEST_CASE("static relaxation reaches the Gibbs ratio") {
    const double B0 = 1.0;
    auto spec = static_z(B0);
    spec.t_f = 200.0;
    auto b = test_bath();
    b.coupling_ops = {{0, PauliAxis::X}};
    AmeOptions opts;
    opts.sample_grid = uniform_grid(5);
    opts.levels = 2;
    opts.snapshots = true;
    const auto trace = solve_ame(spec, b, opts);
    const double p0 = trace.populations(4, 0), p1 = trace.populations(4, 1);
    const double want1 = std::exp(-2 * b.beta * B0) / (1 + std::exp(-2 * b.beta * B0));
    CHECK(std::abs(p1 - want1) < 1e-6);
    CHECK(std::abs(p0 - (1 - want1)) < 1e-6);
    CHECK(trace.max_trace_error < 1e-8);
    for (const auto& rho : trace.snapshots) CHECK(oracle::max_abs(rho - rho.adjoint()) < 1e-10);
    CHECK(trace.min_eigenvalue > -1e-8);
}

TEST_CASE("adiabatic diagnostic") {
    IsingSpec one;
    one.n = 1;
    one.h = {1.0};
    one.schedule = default_schedule();
    one.t_f = 1e9;
    CHECK(adiabatic_diagnostic(one).ratio < 1e-6);

    auto gadget = builtin_problem("gadget8");
    gadget.t_f = 10000.0;
    const auto rep = adiabatic_diagnostic(gadget);
    CHECK(rep.ratio > 1.0);
    CHECK(rep.min_gap > 0.0);
}

}
