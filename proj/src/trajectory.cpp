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

#include "qtraj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qtraj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this dimension a whole RK4 step is applied as one dense matrix.
constexpr Index kDenseMapLimit = 16;
constexpr double kNormGrowth = 1e-10;
constexpr double kBisectTol = 1e-10;

VectorXcd times_minus_i(VectorXcd v) {
    v *= cplx{0.0, -1.0};
    return v;
}

// Cubic Hermite dense output on one step, used to locate norm^2 = r.
struct Hermite {
    const VectorXcd& pa;
    const VectorXcd& fa;
    const VectorXcd& pb;
    const VectorXcd& fb;
    double h;

    VectorXcd operator()(double t) const {
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * pa + (h10 * h) * fa + h01 * pb + (h11 * h) * fb;
    }
};

std::pair<double, VectorXcd> bisect_crossing(const Hermite& path, double r) {
    double lo = 0.0;
    double hi = 1.0;
    VectorXcd psi = path.pb;
    double theta = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        VectorXcd trial = path(mid);
        const double n = trial.squaredNorm();
        theta = mid;
        psi = std::move(trial);
        if (std::abs(n - r) <= kBisectTol * r) {
            break;
        }
        if (n > r) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-16) {
            break;
        }
    }
    return {theta, psi};
}

double ground_overlap(const LindbladSet& set, const VectorXcd& psi) {
    const auto& V = set.eigensystem().vectors;
    const cplx a = V.col(0).cast<cplx>().dot(psi);
    return std::norm(a) / psi.squaredNorm();
}

std::string where(std::uint64_t index, double s) {
    std::ostringstream msg;
    msg << "trajectory " << index << " at s = " << s;
    return msg.str();
}

}  // namespace

void IntegratorOptions::validate() const {
    if (!(dt_safety > 0.0 && dt_safety <= 1.0)) {
        throw std::invalid_argument("dt_safety must be in (0, 1]");
    }
    if (rebuild_every < 1) {
        throw std::invalid_argument("rebuild_every must be >= 1");
    }
    if (!(fd_step > 0.0 && fd_step <= 1e-2)) {
        throw std::invalid_argument("fd_step must be in (0, 1e-2]");
    }
    if (!(binning.tol_deg > 0.0) || !(binning.tol_bohr > 0.0)) {
        throw std::invalid_argument("tol_deg and tol_bohr must be positive");
    }
    if (binning.m_levels < 0) {
        throw std::invalid_argument("m_levels must be >= 0");
    }
}

StepBound max_timestep(double heff_norm, double heff_dot_norm, double lambda, double lambda_dot, double eta) {
    StepBound b;
    b.eta = eta;
    b.hamiltonian_term = heff_dot_norm > 0.0 ? heff_norm / heff_dot_norm : kInf;
    b.norm_term = heff_norm > 0.0 ? 1.0 / heff_norm : kInf;
    b.rate_term = kInf;
    if (lambda > 0.0) {
        const double den = lambda * lambda - lambda_dot;
        if (den != 0.0) {
            b.rate_term = std::abs(lambda / den);
        }
    }
    b.dt = eta * std::min({b.hamiltonian_term, b.norm_term, b.rate_term});
    return b;
}

StepBound estimate_step_bound(const IsingSpec& spec, const BathSpec& bath, const IntegratorOptions& options,
                              const LindbladSet& at_s) {
    const double s = at_s.s();
    const double sp = std::min(1.0, s + options.fd_step);
    const double sm = std::max(0.0, s - options.fd_step);
    const double span = (sp - sm) * spec.t_f;

    const IsingOperator dh = build_hamiltonian(spec, sp) - build_hamiltonian(spec, sm);
    double heff_dot = dh.norm_bound();
    double lambda_dot = 0.0;
    const bool dissipative = bath.g2 != 0.0 || bath.rate || bath.lamb_shift;
    if (dissipative) {
        const EigenSystem* guess = &at_s.eigensystem();
        auto plus = sp == s ? nullptr : lindblad_set_at(spec, bath, sp, options.binning, guess);
        auto minus = sm == s ? nullptr : lindblad_set_at(spec, bath, sm, options.binning, guess);
        const LindbladSet& p = plus ? *plus : at_s;
        const LindbladSet& m = minus ? *minus : at_s;
        const Index k = std::min(p.decay().rows(), m.decay().rows());
        const MatrixXcd kp = p.lamb_shift().topLeftCorner(k, k) - cplx{0.0, 0.5} * p.decay().topLeftCorner(k, k);
        const MatrixXcd km = m.lamb_shift().topLeftCorner(k, k) - cplx{0.0, 0.5} * m.decay().topLeftCorner(k, k);
        heff_dot += (kp - km).norm();
        lambda_dot = (p.max_jump_rate() - m.max_jump_rate()) / span;
    }
    heff_dot /= span;
    return max_timestep(at_s.effective_norm(), heff_dot, at_s.max_jump_rate(), lambda_dot, options.dt_safety);
}

JumpRates compute_jump_rate(const VectorXcd& psi, const LindbladSet& set) {
    const double n = psi.squaredNorm();
    if (std::abs(n - 1.0) > 1e-10) {
        std::ostringstream msg;
        msg << "compute_jump_rate needs a normalized state (norm^2 = " << n << ")";
        throw std::invalid_argument(msg.str());
    }
    JumpRates out;
    out.channel.resize(set.operators().size(), 0.0);
    const VectorXcd phi = set.to_eigen(psi);
    VectorXcd chi = VectorXcd::Zero(phi.size());
    for (std::size_t i = 0; i < set.operators().size(); ++i) {
        const auto& op = set.operators()[i];
        for (const auto& e : op.entries) {
            chi[e.a] += e.value * phi[e.b];
        }
        double rate = 0.0;
        for (const auto& e : op.entries) {
            rate += std::norm(chi[e.a]);
            chi[e.a] = cplx{0.0, 0.0};  // count each row once
        }
        out.channel[i] = rate;
        out.total += rate;
    }
    return out;
}

std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

TrajectoryState TrajectoryState::initial(const LindbladSet& set_at_s0, std::uint64_t master_seed,
                                         std::uint64_t index) {
    TrajectoryState st;
    st.psi = set_at_s0.eigensystem().state(0);
    st.s = set_at_s0.s();
    st.rng.seed(mix_seed(master_seed, index));
    st.redraw_threshold();
    return st;
}

void TrajectoryState::redraw_threshold() { r = 1.0 - uniform01(rng); }

StepLattice::StepLattice(const IsingSpec& spec, const BathSpec& bath, const IntegratorOptions& options,
                         std::vector<double> sample_grid, double s_start)
    : spec_(spec), bath_(bath), options_(options), grid_(std::move(sample_grid)), s_(s_start) {
    spec_.validate();
    bath_.validate();
    options_.validate();
    if (!(s_start >= 0.0 && s_start <= 1.0)) {
        throw std::domain_error("lattice start must lie in [0, 1]");
    }
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        if (!(grid_[k] >= 0.0 && grid_[k] <= 1.0)) {
            throw std::invalid_argument("sample grid values must lie in [0, 1]");
        }
        if (k > 0 && !(grid_[k] > grid_[k - 1])) {
            throw std::invalid_argument("sample grid must be strictly increasing");
        }
    }
    while (next_sample_ < grid_.size() && grid_[next_sample_] <= s_start) {
        if (grid_[next_sample_] == s_start) {
            start_sample_ = static_cast<int>(next_sample_);
        }
        ++next_sample_;
    }
    start_set_ = build_set(s_start);
    current_ = start_set_;
}

std::shared_ptr<const LindbladSet> StepLattice::build_set(double s) const {
    const EigenSystem* guess = current_ ? &current_->eigensystem() : nullptr;
    return lindblad_set_at(spec_, bath_, s, options_.binning, guess);
}

EffectiveGenerator StepLattice::generator(double s, std::shared_ptr<const LindbladSet> dissipation) const {
    EffectiveGenerator g;
    g.hamiltonian = build_hamiltonian(spec_, s);
    g.dissipation = std::move(dissipation);
    g.s = s;
    return g;
}

bool StepLattice::next(LatticeStep& step) {
    if (s_ >= 1.0) {
        return false;
    }
    const int k = options_.rebuild_every;
    step.bound_updated = false;
    if (since_rebuild_ == 0) {
        bound_ = estimate_step_bound(spec_, bath_, options_, *current_);
        step.bound_updated = true;
    }
    double ds = bound_.dt / spec_.t_f;
    const double floor =
        1e-3 * options_.dt_safety * std::min(bound_.hamiltonian_term, bound_.norm_term) / spec_.t_f;
    if (std::isfinite(floor)) {
        ds = std::max(ds, floor);
    }

    double target = 1.0;
    bool at_sample = false;
    if (next_sample_ < grid_.size()) {
        target = grid_[next_sample_];
        at_sample = true;
    }
    double s1;
    int sample = -1;
    if (!std::isfinite(ds) || s_ + ds * (1.0 + 1e-3) >= target) {
        s1 = target;
        if (at_sample) {
            sample = static_cast<int>(next_sample_++);
        }
    } else {
        s1 = s_ + ds;
    }
    s1 = std::min(s1, 1.0);

    ++since_rebuild_;
    const bool rebuild_end = since_rebuild_ >= k || sample >= 0 || s1 >= 1.0;
    const double smid = 0.5 * (s_ + s1);

    step.index = steps_;
    step.s0 = s_;
    step.s1 = s1;
    step.dt = (s1 - s_) * spec_.t_f;
    step.bound = bound_;
    step.sample = sample;
    step.frozen = current_;
    step.g0 = generator(s_, current_);
    step.gmid = generator(smid, k == 1 ? build_set(smid) : current_);
    step.end_set = rebuild_end ? build_set(s1) : nullptr;
    step.g1 = generator(s1, k == 1 ? step.end_set : current_);

    if (rebuild_end) {
        current_ = step.end_set;
        since_rebuild_ = 0;
        ++rebuilds_;
    }
    s_ = s1;
    ++steps_;
    return true;
}

VectorXcd rk4_step(const VectorXcd& psi, double dt, const EffectiveGenerator& g0, const EffectiveGenerator& gmid,
                   const EffectiveGenerator& g1) {
    const cplx mi{0.0, -1.0};
    VectorXcd k1, k2, k3, k4;
    g0.apply(psi, k1);
    k1 *= mi;
    gmid.apply(psi + (0.5 * dt) * k1, k2);
    k2 *= mi;
    gmid.apply(psi + (0.5 * dt) * k2, k3);
    k3 *= mi;
    g1.apply(psi + dt * k3, k4);
    k4 *= mi;
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

MatrixXcd rk4_step(const MatrixXcd& psi, double dt, const EffectiveGenerator& g0, const EffectiveGenerator& gmid,
                   const EffectiveGenerator& g1) {
    const cplx mi{0.0, -1.0};
    MatrixXcd k1, k2, k3, k4;
    g0.apply(psi, k1);
    k1 *= mi;
    gmid.apply(MatrixXcd(psi + (0.5 * dt) * k1), k2);
    k2 *= mi;
    gmid.apply(MatrixXcd(psi + (0.5 * dt) * k2), k3);
    k3 *= mi;
    g1.apply(MatrixXcd(psi + dt * k3), k4);
    k4 *= mi;
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

// The RK4 step as one matrix: psi(t + dt) = P psi(t).
MatrixXcd rk4_map(double dt, const EffectiveGenerator& g0, const EffectiveGenerator& gmid,
                  const EffectiveGenerator& g1) {
    const cplx c{0.0, -dt};
    const MatrixXcd m0 = c * g0.dense();
    const MatrixXcd mm = c * gmid.dense();
    const MatrixXcd m1 = c * g1.dense();
    const Index n = m0.rows();
    const MatrixXcd id = MatrixXcd::Identity(n, n);
    const MatrixXcd k1 = m0;
    const MatrixXcd k2 = mm * (id + 0.5 * k1);
    const MatrixXcd k3 = mm * (id + 0.5 * k2);
    const MatrixXcd k4 = m1 * (id + k3);
    return id + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

void check_growth(double before, double after, std::uint64_t index, double s) {
    if (after > before * (1.0 + kNormGrowth)) {
        std::ostringstream msg;
        msg << where(index, s) << ": norm grew from " << before << " to " << after
            << " in one step (non-contractive evolution; reduce dt_safety)";
        throw NumericalError(msg.str());
    }
}

// Locates the crossing inside the step, jumps, and finishes the step.
// psi1 holds the end-of-step state on entry and on exit.
void handle_crossing(const StepLattice& lattice, const LatticeStep& step, TrajectoryState& st,
                     const VectorXcd& psi0, VectorXcd& psi1, std::uint64_t index) {
    const double t_f = lattice.spec().t_f;
    const bool fresh = lattice.options().rebuild_every == 1;
    double sa = step.s0;
    VectorXcd pa = psi0;
    EffectiveGenerator ga = step.g0;
    VectorXcd pb = psi1;
    for (;;) {
        VectorXcd fa, fb;
        ga.apply(pa, fa);
        step.g1.apply(pb, fb);
        fa = times_minus_i(std::move(fa));
        fb = times_minus_i(std::move(fb));
        const Hermite path{pa, fa, pb, fb, (step.s1 - sa) * t_f};
        auto [theta, pj] = bisect_crossing(path, st.r);
        const double sj = sa + theta * (step.s1 - sa);
        if (!(sj < 1.0)) {
            psi1 = pb;  // a crossing exactly at s = 1 is not processed
            return;
        }
        const auto setj = lattice.build_set(sj);
        st.psi = std::move(pj);
        st.s = sj;
        select_and_apply_jump(st, *setj);

        const EffectiveGenerator gj = lattice.generator(sj, fresh ? setj : step.frozen);
        const double smid = 0.5 * (sj + step.s1);
        const EffectiveGenerator gm = lattice.generator(smid, fresh ? lattice.build_set(smid) : step.frozen);
        pb = rk4_step(st.psi, (step.s1 - sj) * t_f, gj, gm, step.g1);
        const double nb = pb.squaredNorm();
        check_growth(1.0, nb, index, sj);
        if (nb > st.r) {
            psi1 = pb;
            st.s = step.s1;
            return;
        }
        sa = sj;
        pa = st.psi;
        ga = gj;
    }
}

void record_samples(const LindbladSet& set, const MatrixXcd& psi, int sample, int levels,
                    std::vector<TrajectoryResult>& out) {
    const auto& V = set.eigensystem().vectors;
    const MatrixXcd overlaps = V.leftCols(levels).transpose().cast<cplx>() * psi;
    for (Index j = 0; j < psi.cols(); ++j) {
        const double n = psi.col(j).squaredNorm();
        for (int a = 0; a < levels; ++a) {
            out[static_cast<std::size_t>(j)].populations(sample, a) = std::norm(overlaps(a, j)) / n;
        }
    }
}

}  // namespace

NoJumpResult evolve_no_jump(TrajectoryState& state, const IsingSpec& spec, const BathSpec& bath,
                            const IntegratorOptions& options, double s_end) {
    if (!(s_end > state.s && s_end <= 1.0)) {
        throw std::domain_error("evolve_no_jump: s_end must lie in (s, 1]");
    }
    StepLattice lattice(spec, bath, options, {s_end}, state.s);
    LatticeStep step;
    while (lattice.next(step)) {
        const double n0 = state.norm2();
        VectorXcd psi1 = rk4_step(state.psi, step.dt, step.g0, step.gmid, step.g1);
        const double n1 = psi1.squaredNorm();
        check_growth(n0, n1, 0, step.s0);
        if (n1 <= state.r) {
            VectorXcd fa, fb;
            step.g0.apply(state.psi, fa);
            step.g1.apply(psi1, fb);
            fa = times_minus_i(std::move(fa));
            fb = times_minus_i(std::move(fb));
            const Hermite path{state.psi, fa, psi1, fb, step.dt};
            auto [theta, pj] = bisect_crossing(path, state.r);
            const double sj = step.s0 + theta * (step.s1 - step.s0);
            if (sj < 1.0) {
                state.psi = std::move(pj);
                state.s = sj;
                return {true, lattice.build_set(sj)};
            }
        }
        state.psi = std::move(psi1);
        state.s = step.s1;
        if (step.sample == 0) {
            break;
        }
    }
    return {false, step.end_set ? step.end_set : lattice.build_set(state.s)};
}

JumpEvent select_and_apply_jump(TrajectoryState& state, const LindbladSet& set) {
    const double norm = state.psi.norm();
    if (!(norm > 0.0)) {
        throw NumericalError("jump requested on a zero state");
    }
    const VectorXcd phi = state.psi / norm;
    const JumpRates rates = compute_jump_rate(phi, set);
    if (!(rates.total > 0.0)) {
        std::ostringstream msg;
        msg << "jump condition reached at s = " << state.s << " but the total jump rate is zero";
        throw NumericalError(msg.str());
    }
    const double u = uniform01(state.rng) * rates.total;
    std::size_t chosen = rates.channel.size();
    double cum = 0.0;
    for (std::size_t i = 0; i < rates.channel.size(); ++i) {
        cum += rates.channel[i];
        if (u < cum) {
            chosen = i;
            break;
        }
    }
    if (chosen == rates.channel.size()) {  // rounding at the top of the CDF
        for (std::size_t i = rates.channel.size(); i-- > 0;) {
            if (rates.channel[i] > 0.0) {
                chosen = i;
                break;
            }
        }
    }
    JumpEvent ev;
    ev.s_jump = state.s;
    ev.op = chosen;
    ev.channel = set.operators()[chosen].channel;
    ev.omega = set.operators()[chosen].omega;
    ev.pre_gs_overlap = ground_overlap(set, phi);
    VectorXcd next = set.apply_jump(chosen, phi);
    next /= next.norm();
    ev.post_gs_overlap = ground_overlap(set, next);
    state.psi = std::move(next);
    state.redraw_threshold();
    state.jumps.push_back(ev);
    return ev;
}

std::vector<TrajectoryResult> run_trajectory_batch(const IsingSpec& spec, const BathSpec& bath,
                                                   const TrajectoryOptions& options, std::uint64_t master_seed,
                                                   std::uint64_t first, std::size_t count) {
    StepLattice lattice(spec, bath, options.integrator, options.sample_grid);
    const auto start = lattice.start_set();
    const Index m = start->eigensystem().levels();
    if (options.levels < 1 || options.levels > m) {
        throw std::invalid_argument("levels must be between 1 and the number of kept eigenstates");
    }
    const std::size_t grid_points = options.sample_grid.size();
    for (int c : options.capture) {
        if (c < 0 || static_cast<std::size_t>(c) >= grid_points) {
            throw std::invalid_argument("capture index outside the sample grid");
        }
    }

    std::vector<TrajectoryState> states;
    std::vector<TrajectoryResult> out(count);
    const Index dim = spec.dimension();
    MatrixXcd psi(dim, static_cast<Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
        states.push_back(TrajectoryState::initial(*start, master_seed, first + j));
        psi.col(static_cast<Index>(j)) = states.back().psi;
        out[j].index = first + j;
        out[j].populations = MatrixXd::Constant(static_cast<Index>(grid_points), options.levels,
                                                std::numeric_limits<double>::quiet_NaN());
        out[j].captured.resize(options.capture.size());
    }
    auto capture = [&](int sample, const MatrixXcd& p) {
        for (std::size_t c = 0; c < options.capture.size(); ++c) {
            if (options.capture[c] == sample) {
                for (std::size_t j = 0; j < count; ++j) {
                    const VectorXcd col = p.col(static_cast<Index>(j));
                    out[j].captured[c] = col / col.norm();
                }
            }
        }
    };
    if (lattice.start_sample() >= 0) {
        record_samples(*start, psi, lattice.start_sample(), options.levels, out);
        capture(lattice.start_sample(), psi);
    }

    const bool dense_map = dim <= kDenseMapLimit;
    LatticeStep step;
    VectorXd n0(static_cast<Index>(count));
    while (lattice.next(step)) {
        for (std::size_t j = 0; j < count; ++j) {
            n0[static_cast<Index>(j)] = psi.col(static_cast<Index>(j)).squaredNorm();
        }
        MatrixXcd next = dense_map ? MatrixXcd(rk4_map(step.dt, step.g0, step.gmid, step.g1) * psi)
                                   : rk4_step(psi, step.dt, step.g0, step.gmid, step.g1);
        for (std::size_t j = 0; j < count; ++j) {
            const Index c = static_cast<Index>(j);
            const double n1 = next.col(c).squaredNorm();
            check_growth(n0[c], n1, first + j, step.s0);
            if (n1 <= states[j].r) {
                VectorXcd p1 = next.col(c);
                try {
                    handle_crossing(lattice, step, states[j], psi.col(c), p1, first + j);
                } catch (const NumericalError& e) {
                    throw NumericalError(where(first + j, step.s0) + ": " + e.what());
                }
                next.col(c) = p1;
            }
        }
        psi = std::move(next);
        if (step.sample >= 0) {
            record_samples(*step.end_set, psi, step.sample, options.levels, out);
            capture(step.sample, psi);
        }
    }
    for (std::size_t j = 0; j < count; ++j) {
        out[j].jumps = std::move(states[j].jumps);
    }
    return out;
}

TrajectoryResult run_trajectory(const IsingSpec& spec, const BathSpec& bath, const TrajectoryOptions& options,
                                std::uint64_t master_seed, std::uint64_t index) {
    return std::move(run_trajectory_batch(spec, bath, options, master_seed, index, 1).front());
}

VectorXcd drift_term(const VectorXcd& psi, const LindbladSet& set) {
    const VectorXcd phi = set.to_eigen(psi);
    const VectorXcd gphi = set.decay() * phi;
    const cplx mean = phi.dot(gphi);
    return 0.5 * (mean * psi - set.from_eigen(gphi));
}

std::vector<double> uniform_grid(int points) {
    if (points < 2) {
        throw std::invalid_argument("a sample grid needs at least 2 points");
    }
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        grid[static_cast<std::size_t>(k)] = static_cast<double>(k) / (points - 1);
    }
    grid.back() = 1.0;
    return grid;
}

}  // namespace qtraj
