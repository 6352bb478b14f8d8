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

#include <limits>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "oracle.hpp"
#include "qtraj/ame.hpp"
#include "qtraj/trajectory.hpp"

using namespace qtraj;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BathSpec test_bath(double g2 = 1e-2, double beta = 1.0) {
    BathSpec b;
    b.g2 = g2;
    b.beta = beta;
    b.omega_c = 8 * std::numbers::pi;
    return b;
}

IsingSpec one_qubit_x(double t_f = 1.0) {
    IsingSpec spec;
    spec.n = 1;
    spec.h = {0.0};
    spec.schedule = AnnealSchedule::constant(1.0, 0.0);
    spec.t_f = t_f;
    return spec;
}

VectorXcd random_state(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    VectorXcd v(n);
    for (Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v.normalized();
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("jump rates") {
    std::mt19937_64 rng(1);
    const auto spec = oracle::random_spec(2, rng);
    const auto closed = lindblad_set_at(spec, test_bath(0.0), 0.5, {});
    CHECK(compute_jump_rate(random_state(4, rng), *closed).total == 0.0);

    const auto b = test_bath();
    const auto one = lindblad_set_at(one_qubit_x(), b, 0.0, {});
    const auto r = compute_jump_rate(one->eigensystem().state(1), *one);
    CHECK(r.total == doctest::Approx(gamma_ohmic(2.0, b)).epsilon(1e-12));
    CHECK_THROWS_AS(compute_jump_rate(2.0 * one->eigensystem().state(1), *one), std::invalid_argument);

    const auto set = lindblad_set_at(spec, b, 0.5, {});
    for (int k = 0; k < 20; ++k) {
        const VectorXcd psi = random_state(4, rng);
        const auto rates = compute_jump_rate(psi, *set);
        double sum = 0.0;
        for (std::size_t i = 0; i < rates.channel.size(); ++i) {
            CHECK(rates.channel[i] >= 0.0);
            CHECK(rates.channel[i] == doctest::Approx(set->apply_jump(i, psi).squaredNorm()).epsilon(1e-12));
            sum += rates.channel[i] / rates.total;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("step bound formula") {
    auto b = max_timestep(1.0, 0.0, 0.1, 0.0, 0.05);
    CHECK(b.hamiltonian_term == kInf);
    CHECK(b.norm_term == 1.0);
    CHECK(b.rate_term == doctest::Approx(10.0));
    CHECK(b.dt == doctest::Approx(0.05));

    b = max_timestep(4.0, 0.0, 0.0, 0.0, 0.05);
    CHECK(b.rate_term == kInf);
    CHECK(b.dt == doctest::Approx(0.05 / 4.0));

    // Static problems reduce to eta min(1/||H||, 1/lambda).
    b = max_timestep(0.5, 0.0, 3.0, 0.0, 0.1);
    CHECK(b.dt == doctest::Approx(0.1 / 3.0));

    b = max_timestep(2.0, 8.0, 1.0, 0.5, 0.05);
    CHECK(b.hamiltonian_term == doctest::Approx(0.25));
    CHECK(b.rate_term == doctest::Approx(2.0));
    CHECK(b.dt == doctest::Approx(0.05 * 0.25));
}

TEST_CASE("estimated bound on a static problem") {
    const auto spec = one_qubit_x(10.0);
    const auto b = test_bath();
    const auto set = lindblad_set_at(spec, b, 0.5, {});
    const auto bound = estimate_step_bound(spec, b, {}, *set);
    CHECK(bound.hamiltonian_term == kInf);
    CHECK(bound.norm_term == doctest::Approx(1.0 / set->effective_norm()));
    CHECK(bound.rate_term == doctest::Approx(1.0 / gamma_ohmic(2.0, b)));
}

TEST_CASE("closed evolution is unitary and never jumps") {
    std::mt19937_64 rng(2);
    auto spec = oracle::random_spec(2, rng);
    spec.t_f = 5.0;
    const auto bath = test_bath(0.0);
    const auto start = lindblad_set_at(spec, bath, 0.0, {});
    auto st = TrajectoryState::initial(*start, 1, 0);
    const auto res = evolve_no_jump(st, spec, bath, {}, 1.0);
    CHECK_FALSE(res.jumped);
    CHECK(st.s == 1.0);
    // RK4 is slightly dissipative on a Hermitian generator; the loss is O(dt^4).
    CHECK(st.norm2() <= 1.0);
    CHECK(st.norm2() > 1.0 - 1e-6);
}

TEST_CASE("no-jump norm decays as exp(-gamma t) from the excited state") {
    const auto spec = one_qubit_x(50.0);
    const auto b = test_bath();
    const auto start = lindblad_set_at(spec, b, 0.0, {});
    auto st = TrajectoryState::initial(*start, 1, 0);
    st.psi = start->eigensystem().state(1);
    st.r = 0.0;
    double previous = 1.0;
    for (double s_end : {0.25, 0.5, 0.75, 1.0}) {
        evolve_no_jump(st, spec, b, {}, s_end);
        CHECK(st.norm2() == doctest::Approx(std::exp(-gamma_ohmic(2.0, b) * s_end * spec.t_f)).epsilon(1e-6));
        CHECK(st.norm2() <= previous);
        previous = st.norm2();
    }
}

TEST_CASE("crossing time of a constant rate") {
    const auto spec = one_qubit_x(100.0);
    const auto b = test_bath();
    const double gamma = gamma_ohmic(2.0, b);
    const auto start = lindblad_set_at(spec, b, 0.0, {});
    for (double r : {0.9, 0.5, 0.2}) {
        auto st = TrajectoryState::initial(*start, 1, 0);
        st.psi = start->eigensystem().state(1);
        st.r = r;
        const auto res = evolve_no_jump(st, spec, b, {}, 1.0);
        REQUIRE(res.jumped);
        CHECK(std::abs(st.norm2() - r) <= 1e-10 * r);
        CHECK(st.s * spec.t_f == doctest::Approx(-std::log(r) / gamma).epsilon(1e-6));
    }
}

TEST_CASE("jump selection") {
    const auto b = test_bath();
    const auto one = lindblad_set_at(one_qubit_x(), b, 0.0, {});
    auto st = TrajectoryState::initial(*one, 3, 0);
    const VectorXcd e0 = one->eigensystem().state(0), e1 = one->eigensystem().state(1);
    st.psi = 0.7 * e1;
    const auto ev = select_and_apply_jump(st, *one);
    CHECK(one->operators()[ev.op].omega > 0);
    CHECK(std::abs(std::abs(e0.dot(st.psi)) - 1.0) < 1e-12);
    CHECK(std::abs(st.norm2() - 1.0) < 1e-12);
    CHECK(ev.pre_gs_overlap == doctest::Approx(0.0));
    CHECK(ev.post_gs_overlap == doctest::Approx(1.0));

    const auto closed = lindblad_set_at(one_qubit_x(), test_bath(0.0), 0.0, {});
    st.psi = e1;
    CHECK_THROWS_AS(select_and_apply_jump(st, *closed), NumericalError);
}

TEST_CASE("jump frequencies follow the channel probabilities (chi-square)") {
    std::mt19937_64 rng(5);
    const auto spec = oracle::random_spec(3, rng);
    const auto set = lindblad_set_at(spec, test_bath(), 0.4, {});
    const VectorXcd psi = random_state(8, rng);
    const auto rates = compute_jump_rate(psi, *set);
    std::vector<std::size_t> counts(rates.channel.size(), 0);
    auto st = TrajectoryState::initial(*set, 17, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        st.psi = psi;
        ++counts[select_and_apply_jump(st, *set).op];
    }
    double chi2 = 0.0;
    int dof = -1;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double expect = draws * rates.channel[i] / rates.total;
        if (expect == 0.0) {
            CHECK(counts[i] == 0);
            continue;
        }
        chi2 += (counts[i] - expect) * (counts[i] - expect) / expect;
        ++dof;
    }
    REQUIRE(dof >= 1);
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
    CHECK(p > 0.01);
}

TEST_CASE("drift vanishes on eigenstates") {
    std::mt19937_64 rng(6);
    const auto spec = oracle::random_spec(3, rng);
    const auto set = lindblad_set_at(spec, test_bath(), 0.6, {});
    for (Index a = 0; a < 8; ++a) CHECK(drift_term(set->eigensystem().state(a), *set).norm() < 1e-10);

    // A degenerate manifold: chain at s = 0 has an 8-fold first excited level.
    auto chain = chain_problem(8);
    chain.schedule = AnnealSchedule();
    const auto cs = lindblad_set_at(chain, test_bath(), 0.0, {});
    const auto& eig = cs.get()->eigensystem();
    const auto [lo, hi] = eig.groups[1];
    REQUIRE(hi - lo == 8);
    const MatrixXcd P = eig.vectors.middleCols(lo, hi - lo).cast<cplx>();
    VectorXcd c = random_state(hi - lo, rng);
    const VectorXcd psi = P * c;
    const VectorXcd d = drift_term(psi, *cs);
    CHECK((d - P * (P.adjoint() * d)).norm() < 1e-10);
}

TEST_CASE("streams and uniforms") {
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    CHECK(mix_seed(5, 7) == mix_seed(5, 7));
    std::mt19937_64 g(1);
    for (int k = 0; k < 1000; ++k) {
        const double u = uniform01(g);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("trajectories are deterministic and batch-invariant") {
    auto spec = chain_problem(2);
    spec.t_f = 20.0;
    const auto b = test_bath(1e-2, 0.5);
    TrajectoryOptions opts;
    opts.sample_grid = uniform_grid(21);
    opts.levels = 2;
    const auto a = run_trajectory(spec, b, opts, 42, 3);
    const auto c = run_trajectory(spec, b, opts, 42, 3);
    CHECK(a.populations == c.populations);
    REQUIRE(a.jumps.size() == c.jumps.size());
    for (std::size_t k = 0; k < a.jumps.size(); ++k) {
        CHECK(a.jumps[k].s_jump == c.jumps[k].s_jump);
        CHECK(a.jumps[k].op == c.jumps[k].op);
    }
    const auto batch = run_trajectory_batch(spec, b, opts, 42, 0, 8);
    REQUIRE(batch.size() == 8);
    CHECK(batch[3].index == 3);
    CHECK((batch[3].populations - a.populations).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(batch[3].jumps.size() == a.jumps.size());
}

TEST_CASE("closed trajectory matches the closed master equation") {
    auto spec = chain_problem(2);
    spec.t_f = 3.0;  // fast enough to leave the ground state
    const auto b = test_bath(0.0);
    TrajectoryOptions opts;
    opts.sample_grid = uniform_grid(11);
    opts.levels = 4;
    const auto t = run_trajectory(spec, b, opts, 1, 0);
    CHECK(t.jumps.empty());
    AmeOptions ao;
    ao.sample_grid = opts.sample_grid;
    ao.levels = 4;
    const auto ame = solve_ame(spec, b, ao);
    CHECK((t.populations - ame.populations).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(t.populations(10, 0) < 0.99);
}

TEST_CASE("integrator option validation") {
    IntegratorOptions o;
    o.dt_safety = 0.0;
    CHECK_THROWS(o.validate());
    o = {};
    o.rebuild_every = 0;
    CHECK_THROWS(o.validate());
    o = {};
    o.fd_step = 0.1;
    CHECK_THROWS(o.validate());
}

}
