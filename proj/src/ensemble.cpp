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

#include "qtraj/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "qtraj/ame.hpp"

namespace qtraj {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

}  // namespace

std::pair<double, double> mean_and_stderr(const std::vector<double>& samples) {
    if (samples.empty()) {
        throw std::invalid_argument("mean of an empty sample");
    }
    const double r = static_cast<double>(samples.size());
    // Summing offsets from the first sample keeps constant data exact.
    const double x0 = samples.front();
    double sum = 0.0;
    for (double x : samples) {
        sum += x - x0;
    }
    const double mean = x0 + sum / r;
    if (samples.size() < 2) {
        return {mean, kNaN};
    }
    double ss = 0.0;
    for (double x : samples) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / (r * (r - 1.0)))};
}

std::uint64_t statistics_seed(std::uint64_t master_seed) {
    return mix_seed(master_seed, std::numeric_limits<std::uint64_t>::max());
}

EnsembleResult run_ensemble(const IsingSpec& spec, const BathSpec& bath, const EnsembleOptions& options) {
    if (options.trajectories < 1) {
        throw std::invalid_argument("the ensemble needs at least one trajectory");
    }
    if (options.workers < 1) {
        throw std::invalid_argument("workers must be >= 1");
    }
    if (options.batch_size < 1) {
        throw std::invalid_argument("batch_size must be >= 1");
    }
    if (options.bootstrap != 0 && options.bootstrap < 100) {
        throw std::invalid_argument("bootstrap needs at least 100 resamples");
    }
    const std::size_t R = options.trajectories;
    const std::size_t batches = (R + options.batch_size - 1) / options.batch_size;
    std::vector<std::vector<TrajectoryResult>> parts(batches);
    std::vector<std::exception_ptr> errors(batches);
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= batches) {
                return;
            }
            const std::size_t first = b * options.batch_size;
            const std::size_t count = std::min(options.batch_size, R - first);
            try {
                parts[b] = run_trajectory_batch(spec, bath, options.trajectory, options.master_seed, first, count);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.workers), batches));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    EnsembleResult result;
    result.grid = options.trajectory.sample_grid;
    result.trajectories = R;
    const Index G = static_cast<Index>(result.grid.size());
    const int L = options.trajectory.levels;
    result.samples.assign(static_cast<std::size_t>(L), MatrixXd(static_cast<Index>(R), G));
    result.captured.assign(options.trajectory.capture.size(), {});
    std::size_t k = 0;
    for (auto& part : parts) {
        for (auto& tr : part) {
            for (int a = 0; a < L; ++a) {
                result.samples[static_cast<std::size_t>(a)].row(static_cast<Index>(k)) = tr.populations.col(a).transpose();
            }
            int net = 0;
            for (const auto& ev : tr.jumps) {
                const auto kind = classify_jump(ev);
                net += kind == JumpKind::TowardGround ? 1 : kind == JumpKind::OutOfGround ? -1 : 0;
            }
            result.net_jumps.push_back(net);
            result.jumps.push_back(std::move(tr.jumps));
            for (std::size_t c = 0; c < tr.captured.size(); ++c) {
                result.captured[c].push_back(std::move(tr.captured[c]));
            }
            ++k;
        }
        part.clear();
    }

    // Serial reduction in trajectory order.
    result.mean = MatrixXd::Zero(G, L);
    result.stderror = MatrixXd::Constant(G, L, kNaN);
    const double r = static_cast<double>(R);
    for (int a = 0; a < L; ++a) {
        const MatrixXd& S = result.samples[static_cast<std::size_t>(a)];
        for (Index g = 0; g < G; ++g) {
            const double x0 = S(0, g);
            double sum = 0.0;
            for (Index i = 0; i < static_cast<Index>(R); ++i) {
                sum += S(i, g) - x0;
            }
            const double mean = x0 + sum / r;
            result.mean(g, a) = mean;
            if (R >= 2) {
                double ss = 0.0;
                for (Index i = 0; i < static_cast<Index>(R); ++i) {
                    ss += (S(i, g) - mean) * (S(i, g) - mean);
                }
                result.stderror(g, a) = std::sqrt(ss / (r * (r - 1.0)));
            }
        }
    }
    if (options.bootstrap > 0 && R >= 2) {
        result.boot_sigma.resize(G, L);
        for (int a = 0; a < L; ++a) {
            result.boot_sigma.col(a) = bootstrap_sigma(result.samples[static_cast<std::size_t>(a)], options.bootstrap,
                                                       statistics_seed(options.master_seed));
        }
        result.ci_low = result.mean - 2.0 * result.boot_sigma;
        result.ci_high = result.mean + 2.0 * result.boot_sigma;
    }
    return result;
}

BootstrapResult bootstrap_ci(const std::vector<double>& samples, int resamples, std::uint64_t seed) {
    if (samples.size() < 2) {
        throw std::invalid_argument("bootstrap needs at least 2 samples");
    }
    if (resamples < 100) {
        throw std::invalid_argument("bootstrap needs at least 100 resamples");
    }
    MatrixXd m(static_cast<Index>(samples.size()), 1);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        m(static_cast<Index>(i), 0) = samples[i];
    }
    BootstrapResult out;
    out.mean = mean_and_stderr(samples).first;
    out.sigma = bootstrap_sigma(m, resamples, seed)[0];
    out.low = out.mean - 2.0 * out.sigma;
    out.high = out.mean + 2.0 * out.sigma;
    return out;
}

VectorXd bootstrap_sigma(const MatrixXd& samples, int resamples, std::uint64_t seed) {
    const std::size_t R = static_cast<std::size_t>(samples.rows());
    if (R < 2) {
        throw std::invalid_argument("bootstrap needs at least 2 samples");
    }
    if (resamples < 100) {
        throw std::invalid_argument("bootstrap needs at least 100 resamples");
    }
    std::mt19937_64 rng(seed);
    const Index G = samples.cols();
    MatrixXd means(resamples, G);
    std::vector<std::size_t> idx(R);
    for (int b = 0; b < resamples; ++b) {
        for (auto& i : idx) {
            i = draw_index(rng, R);
        }
        for (Index g = 0; g < G; ++g) {
            const double x0 = samples(0, g);
            double sum = 0.0;
            for (std::size_t i : idx) {
                sum += samples(static_cast<Index>(i), g) - x0;
            }
            means(b, g) = x0 + sum / static_cast<double>(R);
        }
    }
    VectorXd sigma(G);
    for (Index g = 0; g < G; ++g) {
        const double mu = means.col(g).mean();
        const double var = (means.col(g).array() - mu).square().sum() / (resamples - 1);
        sigma[g] = std::sqrt(var);
    }
    return sigma;
}

MatrixXcd reconstruct_density(const std::vector<VectorXcd>& states) {
    if (states.empty()) {
        throw std::invalid_argument("reconstruct_density needs at least one state");
    }
    const Index n = states.front().size();
    MatrixXcd rho = MatrixXcd::Zero(n, n);
    for (const auto& psi : states) {
        if (psi.size() != n) {
            throw std::invalid_argument("states have different dimensions");
        }
        const double norm = psi.norm();
        if (!(norm > 0.0)) {
            throw std::invalid_argument("zero state passed to reconstruct_density");
        }
        const VectorXcd unit = psi / norm;
        rho.noalias() += unit * unit.adjoint();
    }
    rho /= static_cast<double>(states.size());
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return rho;
}

JumpKind classify_jump(const JumpEvent& event) {
    const double change = event.post_gs_overlap - event.pre_gs_overlap;
    if (change > 0.5) {
        return JumpKind::TowardGround;
    }
    if (change < -0.5) {
        return JumpKind::OutOfGround;
    }
    return JumpKind::Unclassified;
}

JumpStatistics jump_statistics(const std::vector<std::vector<JumpEvent>>& logs, double s_star, int intervals) {
    if (intervals < 1) {
        throw std::invalid_argument("intervals must be >= 1");
    }
    JumpStatistics st;
    st.before = {0.0, s_star, 0, 0};
    st.after = {s_star, 1.0, 0, 0};
    for (int k = 0; k < intervals; ++k) {
        st.intervals.push_back({static_cast<double>(k) / intervals, static_cast<double>(k + 1) / intervals, 0, 0});
    }
    for (const auto& log : logs) {
        int net = 0;
        for (const auto& ev : log) {
            const auto kind = classify_jump(ev);
            if (kind == JumpKind::Unclassified) {
                ++st.unclassified;
                continue;
            }
            const bool toward = kind == JumpKind::TowardGround;
            net += toward ? 1 : -1;
            (toward ? st.toward : st.out) += 1;
            JumpInterval& half = ev.s_jump < s_star ? st.before : st.after;
            (toward ? half.toward : half.out) += 1;
            const int bin = std::clamp(static_cast<int>(ev.s_jump * intervals), 0, intervals - 1);
            (toward ? st.intervals[static_cast<std::size_t>(bin)].toward
                    : st.intervals[static_cast<std::size_t>(bin)].out) += 1;
        }
        if (!log.empty()) {
            st.net_histogram[net] += 1;
        }
    }
    return st;
}

double kolmogorov_pvalue(double statistic, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    if (lambda < 1e-3) {
        return 1.0;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) {
            break;
        }
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) {
        throw std::invalid_argument("KS test needs samples");
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = -std::expm1(-rate * samples[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_pvalue(d, samples.size())};
}

ChiSquareResult chi_square_test(const std::vector<std::size_t>& counts, const std::vector<double>& probabilities) {
    if (counts.size() != probabilities.size() || counts.empty()) {
        throw std::invalid_argument("counts and probabilities must have the same nonzero length");
    }
    double total = 0.0;
    for (auto c : counts) {
        total += static_cast<double>(c);
    }
    ChiSquareResult out;
    int used = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double expected = probabilities[i] * total;
        if (expected <= 0.0) {
            if (counts[i] != 0) {
                out.p_value = 0.0;
                out.statistic = std::numeric_limits<double>::infinity();
                return out;
            }
            continue;
        }
        const double diff = static_cast<double>(counts[i]) - expected;
        out.statistic += diff * diff / expected;
        ++used;
    }
    out.dof = std::max(used - 1, 1);
    out.p_value = boost::math::gamma_q(0.5 * out.dof, 0.5 * out.statistic);
    return out;
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("linear_fit needs at least two points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

long long trajectories_needed(double Lambda_B, double x, double N, double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("target sigma must be positive");
    }
    const double value = Lambda_B * std::pow(N, -x) / (sigma * sigma);
    if (!std::isfinite(value)) {
        return 1;
    }
    return std::max<long long>(1, static_cast<long long>(std::ceil(value)));
}

double crossover_dimension(double Lambda_B, double x, double sigma) {
    if (!(x > 0.0) || !(Lambda_B > 0.0)) {
        return kNaN;
    }
    return std::ceil(std::pow(Lambda_B / (sigma * sigma), 1.0 / x));
}

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
std::pair<double, int> time_per_call(F&& f, double min_seconds, int samples) {
    int reps = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        for (;;) {
            const auto t0 = Clock::now();
            for (int r = 0; r < reps; ++r) {
                f();
            }
            const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
            if (elapsed < min_seconds) {
                reps *= 2;  // too short to resolve
                continue;
            }
            best = std::min(best, elapsed / reps);
            break;
        }
    }
    return {best, reps};
}

}  // namespace

CostReport benchmark_scaling(const BenchmarkOptions& options) {
    CostReport report;
    report.target_sigma = options.target_sigma;
    std::vector<double> logn, logr, loga, logt;
    for (int n : options.qubits) {
        IsingSpec spec = chain_problem(n);
        spec.schedule = options.schedule;
        spec.t_f = options.t_f;
        const auto set = lindblad_set_at(spec, options.bath, options.s_eval, options.integrator.binning);
        EffectiveGenerator g;
        g.hamiltonian = build_hamiltonian(spec, options.s_eval);
        g.dissipation = set;
        g.s = options.s_eval;

        const Index dim = spec.dimension();
        const VectorXcd psi = set->eigensystem().state(std::min<Index>(1, dim - 1));
        const VectorXcd gs = set->eigensystem().state(0);
        const MatrixXcd rho0 = 0.5 * (psi * psi.adjoint() + gs * gs.adjoint());
        const double dt = 1e-4;

        MatrixXcd rho = rho0;
        auto ame_step = [&]() {
            const MatrixXcd k1 = apply_generator_hermitian(rho, g);
            const MatrixXcd k2 = apply_generator_hermitian(rho + (0.5 * dt) * k1, g);
            const MatrixXcd k3 = apply_generator_hermitian(rho + (0.5 * dt) * k2, g);
            const MatrixXcd k4 = apply_generator_hermitian(rho + dt * k3, g);
            rho = rho0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        };
        VectorXcd state = psi;
        auto traj_step = [&]() { state = rk4_step(psi, dt, g, g, g); };

        const auto [t_ame, reps_ame] = time_per_call(ame_step, options.min_seconds, options.samples);
        const auto [t_traj, reps_traj] = time_per_call(traj_step, options.min_seconds, options.samples);
        report.qubits.push_back(n);
        report.dimension.push_back(static_cast<double>(dim));
        report.ame_step_seconds.push_back(t_ame);
        report.trajectory_step_seconds.push_back(t_traj);
        report.ratio.push_back(t_ame / t_traj);
        report.repetitions.push_back(std::min(reps_ame, reps_traj));
        logn.push_back(std::log(static_cast<double>(dim)));
        logr.push_back(std::log(t_ame / t_traj));
        loga.push_back(std::log(t_ame));
        logt.push_back(std::log(t_traj));

        if (options.variance_trajectories >= 2) {
            EnsembleOptions eo;
            eo.trajectories = options.variance_trajectories;
            eo.master_seed = options.master_seed;
            eo.trajectory.integrator = options.integrator;
            eo.trajectory.sample_grid = {0.0, 1.0};
            eo.trajectory.levels = 1;
            const auto result = run_ensemble(spec, options.bath, eo);
            const double se = result.stderror(1, 0);
            const double r = static_cast<double>(result.trajectories);
            report.lambda_b.push_back(se * se * r);  // sample variance of one trajectory
        }
    }
    report.ratio_monotone = true;
    for (std::size_t k = 1; k < report.ratio.size(); ++k) {
        if (!(report.ratio[k] > report.ratio[k - 1])) {
            report.ratio_monotone = false;
        }
    }
    if (logn.size() >= 2) {
        report.ratio_slope = linear_fit(logn, logr).first;
        const auto [beta, c1] = linear_fit(logn, loga);
        const auto [alpha, c2] = linear_fit(logn, logt);
        report.beta = beta;
        report.alpha = alpha;
        report.k1 = std::exp(c1);
        report.k2 = std::exp(c2);
    }
    if (!report.lambda_b.empty()) {
        std::vector<double> lx, ly;
        for (std::size_t k = 0; k < report.lambda_b.size(); ++k) {
            if (report.lambda_b[k] > 0.0) {
                lx.push_back(logn[k]);
                ly.push_back(std::log(report.lambda_b[k]));
            }
        }
        if (lx.size() >= 2) {
            const auto [slope, intercept] = linear_fit(lx, ly);
            report.x = -slope;
            report.Lambda_B = std::exp(intercept);
            report.n_star = crossover_dimension(report.Lambda_B, report.x, options.target_sigma);
            for (double N : report.dimension) {
                report.trajectories_needed.push_back(
                    trajectories_needed(report.Lambda_B, report.x, N, options.target_sigma));
            }
        } else {
            bool all_zero = true;
            for (double v : report.lambda_b) {
                all_zero = all_zero && v == 0.0;
            }
            if (all_zero) {
                report.Lambda_B = 0.0;  // constant observable; x stays undefined
                for (std::size_t k = 0; k < report.dimension.size(); ++k) {
                    report.trajectories_needed.push_back(1);
                }
            }
        }
    }
    return report;
}

}  // namespace qtraj
