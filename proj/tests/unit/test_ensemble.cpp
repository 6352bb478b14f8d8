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

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "qtraj/ame.hpp"
#include "qtraj/ensemble.hpp"

using namespace qtraj;

namespace {

BathSpec test_bath(double g2 = 1e-2, double beta = 1.0) {
    BathSpec b;
    b.g2 = g2;
    b.beta = beta;
    b.omega_c = 8 * std::numbers::pi;
    return b;
}

std::vector<double> bernoulli(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::bernoulli_distribution d(0.5);
    std::vector<double> x(n);
    for (auto& v : x) v = d(g) ? 1.0 : 0.0;
    return x;
}

// The field flips sign right after s = 0, so the initial ground state becomes
// the excited state and relaxes with a single jump.
IsingSpec flipped_field(double t_f) {
    IsingSpec spec;
    spec.n = 1;
    spec.h = {1.0};
    spec.schedule = AnnealSchedule({{0.0, 0.0, 1.0}, {1e-4, 0.0, -1.0}, {1.0, 0.0, -1.0}});
    spec.t_f = t_f;
    return spec;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("sample mean and standard error") {
    auto [m, se] = mean_and_stderr({0.3});
    CHECK(m == 0.3);
    CHECK(std::isnan(se));
    std::tie(m, se) = mean_and_stderr({0.4, 0.4, 0.4});
    CHECK(se == 0.0);
    std::tie(m, se) = mean_and_stderr({0.0, 1.0});
    CHECK(m == 0.5);
    CHECK(se * se == doctest::Approx(0.25));

    // se ~ 1/sqrt(R): four times the samples halves it.
    const auto small = mean_and_stderr(bernoulli(2500, 1)).second;
    const auto large = mean_and_stderr(bernoulli(10000, 2)).second;
    CHECK(large / small == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("bootstrap") {
    const auto flat = bootstrap_ci(std::vector<double>(50, 0.7), 200, 1);
    CHECK(flat.sigma == 0.0);
    CHECK(flat.low == doctest::Approx(0.7));
    CHECK(flat.high == doctest::Approx(0.7));

    const auto x = bernoulli(10000, 3);
    const auto r = bootstrap_ci(x, 1000, 9);
    CHECK(r.sigma == doctest::Approx(0.5 / 100.0).epsilon(0.2));
    CHECK(r.high - r.low == doctest::Approx(4 * r.sigma));
    const auto again = bootstrap_ci(x, 1000, 9);
    CHECK(again.sigma == r.sigma);

    CHECK_THROWS_AS(bootstrap_ci({1.0}, 1000, 1), std::invalid_argument);
    CHECK_THROWS_AS(bootstrap_ci({1.0, 2.0}, 50, 1), std::invalid_argument);

    // Column-wise sigma agrees with the scalar routine on the same seed.
    MatrixXd cols(x.size(), 1);
    for (std::size_t k = 0; k < x.size(); ++k) cols(static_cast<Index>(k), 0) = x[k];
    CHECK(bootstrap_sigma(cols, 1000, 9)(0) == doctest::Approx(r.sigma).epsilon(1e-12));

    CHECK(statistics_seed(1) != mix_seed(1, 0));
}

TEST_CASE("density reconstruction") {
    std::mt19937_64 rng(4);
    VectorXcd a = VectorXcd::Zero(4), b = VectorXcd::Zero(4);
    a(0) = 1.0;
    b(2) = cplx(0, 1);
    const MatrixXcd pure = reconstruct_density({a});
    CHECK(oracle::max_abs(pure - a * a.adjoint()) < 1e-15);
    const MatrixXcd mixed = reconstruct_density({a, b});
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(mixed);
    CHECK(es.eigenvalues()(3) == doctest::Approx(0.5));
    CHECK(es.eigenvalues()(2) == doctest::Approx(0.5));
    CHECK(std::abs(es.eigenvalues()(1)) < 1e-15);

    std::normal_distribution<double> g;
    std::vector<VectorXcd> states;
    for (int k = 0; k < 30; ++k) {
        VectorXcd v(8);
        for (Index i = 0; i < 8; ++i) v(i) = cplx(g(rng), g(rng));
        states.push_back(v.normalized());
    }
    const MatrixXcd rho = reconstruct_density(states);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXcd>(rho).eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("jump classification and statistics") {
    JumpEvent ev;
    ev.pre_gs_overlap = 0.1;
    ev.post_gs_overlap = 0.9;
    CHECK(classify_jump(ev) == JumpKind::TowardGround);
    std::swap(ev.pre_gs_overlap, ev.post_gs_overlap);
    CHECK(classify_jump(ev) == JumpKind::OutOfGround);
    ev.post_gs_overlap = 0.6;
    CHECK(classify_jump(ev) == JumpKind::Unclassified);

    const auto empty = jump_statistics({{}, {}}, 0.5);
    CHECK(empty.net_histogram.empty());

    JumpEvent out{0.2, 0, 0, -1.0, 1.0, 0.0}, in{0.7, 0, 0, 1.0, 0.0, 1.0};
    const auto st = jump_statistics({{out, in, out}, {in}}, 0.5, 10);
    CHECK(st.toward == 2);
    CHECK(st.out == 2);
    CHECK(st.before.out == 2);
    CHECK(st.after.toward == 2);
    CHECK(st.net_histogram.at(-1) == 1);
    CHECK(st.net_histogram.at(1) == 1);
    CHECK(st.intervals[2].out == 2);
    CHECK(st.intervals[7].toward == 2);
}

TEST_CASE("closed ensemble has no jumps") {
    auto spec = chain_problem(2);
    spec.t_f = 10.0;
    EnsembleOptions opts;
    opts.trajectories = 20;
    opts.trajectory.sample_grid = uniform_grid(5);
    const auto r = run_ensemble(spec, test_bath(0.0), opts);
    for (const auto& log : r.jumps) CHECK(log.empty());
    CHECK(jump_statistics(r.jumps, 0.5).net_histogram.empty());
    for (Index g = 0; g < 5; ++g) CHECK(r.stderror(g, 0) < 1e-15);
}

TEST_CASE("two-level relaxation: one jump toward the ground state per trajectory") {
    const auto spec = flipped_field(200.0);
    auto b = test_bath(1e-2, 20.0);
    b.coupling_ops = {{0, PauliAxis::X}};
    EnsembleOptions opts;
    opts.trajectories = 200;
    opts.trajectory.sample_grid = uniform_grid(3);
    const auto r = run_ensemble(spec, b, opts);
    const auto st = jump_statistics(r.jumps, 0.5);
    REQUIRE(st.net_histogram.size() == 1);
    CHECK(st.net_histogram.at(1) == 200);
    for (const auto& log : r.jumps) {
        REQUIRE(log.size() == 1);
        CHECK(classify_jump(log[0]) == JumpKind::TowardGround);
    }
}

TEST_CASE("ensemble statistics are sane and independent of the worker count") {
    auto spec = chain_problem(2);
    spec.t_f = 30.0;
    EnsembleOptions opts;
    opts.trajectories = 300;
    opts.batch_size = 64;
    opts.master_seed = 77;
    opts.bootstrap = 100;
    opts.trajectory.sample_grid = uniform_grid(11);
    opts.trajectory.levels = 4;
    const auto b = test_bath(2e-2, 0.5);
    const auto r1 = run_ensemble(spec, b, opts);
    for (Index g = 0; g < 11; ++g) {
        CHECK(r1.mean.row(g).minCoeff() >= 0.0);
        CHECK(r1.mean.row(g).maxCoeff() <= 1.0);
        CHECK(r1.mean.row(g).sum() <= 1.0 + 1e-8);
        CHECK(r1.stderror.row(g).minCoeff() >= 0.0);
    }
    for (int workers : {2, 8}) {
        opts.workers = workers;
        const auto rc = run_ensemble(spec, b, opts);
        CHECK(rc.mean == r1.mean);
        CHECK(rc.stderror == r1.stderror);
        CHECK(rc.boot_sigma == r1.boot_sigma);
        REQUIRE(rc.jumps.size() == r1.jumps.size());
        for (std::size_t k = 0; k < rc.jumps.size(); ++k) {
            REQUIRE(rc.jumps[k].size() == r1.jumps[k].size());
            for (std::size_t j = 0; j < rc.jumps[k].size(); ++j) CHECK(rc.jumps[k][j].s_jump == r1.jumps[k][j].s_jump);
        }
    }
}

TEST_CASE("reconstructed density agrees with the master equation") {
    // A hot bath spreads every trajectory over all four levels. In a cold bath
    // the top level holds O(1) of the 2000 trajectories, and a bootstrap sigma
    // says nothing about an element that no trajectory happened to visit.
    auto spec = chain_problem(2);
    spec.t_f = 15.0;
    const auto b = test_bath(2e-2, 0.1);
    EnsembleOptions opts;
    opts.trajectories = 2000;
    opts.master_seed = 1;
    opts.trajectory.sample_grid = uniform_grid(3);
    opts.trajectory.capture = {2};
    const auto r = run_ensemble(spec, b, opts);
    const MatrixXcd rho_traj = reconstruct_density(r.captured[0]);

    AmeOptions ao;
    ao.sample_grid = opts.trajectory.sample_grid;
    ao.snapshots = true;
    const MatrixXcd rho_ame = solve_ame(spec, b, ao).snapshots[2];

    // Elementwise bootstrap sigma of the outer-product average.
    const Index N = 4;
    MatrixXd samples(static_cast<Index>(opts.trajectories), 2 * N * N);
    for (std::size_t k = 0; k < opts.trajectories; ++k) {
        const MatrixXcd p = r.captured[0][k] * r.captured[0][k].adjoint();
        for (Index i = 0; i < N * N; ++i) {
            samples(static_cast<Index>(k), i) = p(i / N, i % N).real();
            samples(static_cast<Index>(k), N * N + i) = p(i / N, i % N).imag();
        }
    }
    const VectorXd sigma = bootstrap_sigma(samples, 500, 11);
    for (Index i = 0; i < N * N; ++i) {
        const cplx d = rho_traj(i / N, i % N) - rho_ame(i / N, i % N);
        CHECK(std::abs(d.real()) <= 3 * sigma(i) + 1e-12);
        CHECK(std::abs(d.imag()) <= 3 * sigma(N * N + i) + 1e-12);
    }
}

TEST_CASE("Kolmogorov-Smirnov against an exponential") {
    std::mt19937_64 g(1);
    std::exponential_distribution<double> e(2.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = e(g);
    CHECK(ks_test_exponential(x, 2.0).p_value > 0.01);
    CHECK(ks_test_exponential(x, 2.3).p_value < 1e-6);
    // Asymptotic tail: Q(1.358) = 0.05.
    CHECK(kolmogorov_pvalue(1.358 / std::sqrt(1e8), 100000000) == doctest::Approx(0.05).epsilon(1e-2));
    // D = 0 gives p = 1; one sample at the median gives D = 1/2.
    CHECK(kolmogorov_pvalue(0.0, 10) == 1.0);
    CHECK(ks_test_exponential({std::log(2.0)}, 1.0).statistic == doctest::Approx(0.5));
}

TEST_CASE("chi-square goodness of fit") {
    // chi2 = (60-50)^2/50 + (40-50)^2/50 = 4 with one degree of freedom: p = 0.0455.
    const auto r = chi_square_test({60, 40}, {0.5, 0.5});
    CHECK(r.statistic == doctest::Approx(4.0));
    CHECK(r.dof == 1);
    CHECK(r.p_value == doctest::Approx(0.0455003).epsilon(1e-5));
    const auto impossible = chi_square_test({1, 2}, {1.0, 0.0});
    CHECK(impossible.p_value == 0.0);
    CHECK(std::isinf(impossible.statistic));
}

TEST_CASE("cost-model helpers") {
    const auto [slope, intercept] = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(slope == doctest::Approx(2.0));
    CHECK(intercept == doctest::Approx(1.0));
    CHECK(trajectories_needed(0.5, 1.0, 100.0, 0.1) == 1);  // clamps at 1
    CHECK(trajectories_needed(4.0, 0.5, 4.0, 0.1) == 200);
    CHECK(crossover_dimension(4.0, 0.5, 0.1) == doctest::Approx(160000.0));
    CHECK(std::isnan(crossover_dimension(4.0, 0.0, 0.1)));
}

TEST_CASE("benchmark on a constant observable") {
    BenchmarkOptions o;
    o.qubits = {2, 3};
    o.bath = test_bath(0.0);
    o.min_seconds = 0.005;
    o.samples = 2;
    o.t_f = 5.0;
    o.variance_trajectories = 4;
    const auto r = benchmark_scaling(o);
    REQUIRE(r.ratio.size() == 2);
    CHECK(r.ame_step_seconds[0] > 0.0);
    CHECK(r.trajectory_step_seconds[0] > 0.0);
    REQUIRE(r.lambda_b.size() == 2);
    CHECK(r.Lambda_B == 0.0);
    CHECK(std::isnan(r.x));
    CHECK(r.trajectories_needed == std::vector<long long>{1, 1});
}

}
