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

#include "qtraj/ame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qtraj {

namespace {

// Jump operators with more entries than this use a gathered dense block.
constexpr std::size_t kPairwiseLimit = 64;

// V^T X for real V and complex X.
MatrixXcd project_left(const MatrixXd& V, const MatrixXcd& X) {
    MatrixXcd out(V.cols(), X.cols());
    out.real() = V.transpose() * X.real();
    out.imag() = V.transpose() * X.imag();
    return out;
}

// X V for complex X and real V.
MatrixXcd project_right(const MatrixXcd& X, const MatrixXd& V) {
    MatrixXcd out(X.rows(), V.cols());
    out.real() = X.real() * V;
    out.imag() = X.imag() * V;
    return out;
}

// out += A rho A^dagger in eigen coordinates.
void add_sandwich(const JumpOperator& op, const MatrixXcd& rho, MatrixXcd& out) {
    const auto& e = op.entries;
    if (e.size() <= kPairwiseLimit) {
        for (const auto& x : e) {
            for (const auto& y : e) {
                out(x.a, y.a) += x.value * rho(x.b, y.b) * std::conj(y.value);
            }
        }
        return;
    }
    std::vector<Index> rows, cols;
    for (const auto& x : e) {
        rows.push_back(x.a);
        cols.push_back(x.b);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    auto pos = [](const std::vector<Index>& v, Index k) {
        return static_cast<Index>(std::lower_bound(v.begin(), v.end(), k) - v.begin());
    };
    const Index nr = static_cast<Index>(rows.size());
    const Index nc = static_cast<Index>(cols.size());
    MatrixXcd a = MatrixXcd::Zero(nr, nc);
    for (const auto& x : e) {
        a(pos(rows, x.a), pos(cols, x.b)) += x.value;
    }
    MatrixXcd sub(nc, nc);
    for (Index i = 0; i < nc; ++i) {
        for (Index j = 0; j < nc; ++j) {
            sub(i, j) = rho(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
        }
    }
    const MatrixXcd block = a * sub * a.adjoint();
    for (Index i = 0; i < nr; ++i) {
        for (Index j = 0; j < nr; ++j) {
            out(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]) += block(i, j);
        }
    }
}

// H_eff X given W = V^T X (already projected).
MatrixXcd effective_times(const EffectiveGenerator& g, const MatrixXcd& X, const MatrixXcd& W) {
    MatrixXcd out;
    g.hamiltonian.apply(X, out);
    if (g.dissipation) {
        const auto& set = *g.dissipation;
        const MatrixXd& V = set.eigensystem().vectors;
        const MatrixXcd k = set.lamb_shift() - cplx{0.0, 0.5} * set.decay();
        MatrixXcd kw = k * W;
        out.real() += V * kw.real();
        out.imag() += V * kw.imag();
    }
    return out;
}

MatrixXcd jump_term(const LindbladSet& set, const MatrixXcd& W) {
    const MatrixXd& V = set.eigensystem().vectors;
    const MatrixXcd rho_e = project_right(W, V);
    MatrixXcd acc = MatrixXcd::Zero(rho_e.rows(), rho_e.cols());
    for (const auto& op : set.operators()) {
        add_sandwich(op, rho_e, acc);
    }
    MatrixXcd tmp = project_right(acc, V.transpose());
    return project_left(V.transpose(), tmp);
}

void check_dims(const MatrixXcd& rho, const EffectiveGenerator& g) {
    const Index n = g.hamiltonian.dimension();
    if (rho.rows() != n || rho.cols() != n) {
        std::ostringstream msg;
        msg << "density matrix is " << rho.rows() << "x" << rho.cols() << " but the system dimension is " << n;
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

MatrixXcd apply_generator(const MatrixXcd& rho, const EffectiveGenerator& g) {
    check_dims(rho, g);
    const cplx mi{0.0, -1.0};
    if (!g.dissipation) {
        MatrixXcd x, y;
        g.hamiltonian.apply(rho, x);
        g.hamiltonian.apply(MatrixXcd(rho.adjoint()), y);
        return mi * (x - y.adjoint());
    }
    const MatrixXd& V = g.dissipation->eigensystem().vectors;
    const MatrixXcd rho_dag = rho.adjoint();
    const MatrixXcd w = project_left(V, rho);
    const MatrixXcd x = effective_times(g, rho, w);
    const MatrixXcd y = effective_times(g, rho_dag, project_left(V, rho_dag));
    return mi * (x - y.adjoint()) + jump_term(*g.dissipation, w);
}

MatrixXcd apply_generator(const MatrixXcd& rho, const LindbladSet& set) {
    EffectiveGenerator g;
    g.hamiltonian = set.hamiltonian();
    g.dissipation = std::shared_ptr<const LindbladSet>(std::shared_ptr<const LindbladSet>{}, &set);
    g.s = set.s();
    return apply_generator(rho, g);
}

MatrixXcd apply_generator_hermitian(const MatrixXcd& rho, const EffectiveGenerator& g) {
    check_dims(rho, g);
    const cplx mi{0.0, -1.0};
    MatrixXcd x;
    MatrixXcd out;
    if (!g.dissipation) {
        g.hamiltonian.apply(rho, x);
        out = mi * x;
    } else {
        const MatrixXd& V = g.dissipation->eigensystem().vectors;
        const MatrixXcd w = project_left(V, rho);
        x = effective_times(g, rho, w);
        out = mi * x;
        MatrixXcd j = jump_term(*g.dissipation, w);
        out += 0.5 * j;
        out += 0.5 * j.adjoint();
    }
    // -i (X - X^dagger) assembled so the result is exactly Hermitian.
    MatrixXcd xd = (mi * x).adjoint();
    out += xd;
    return out;
}

PopulationTrace solve_ame(const IsingSpec& spec, const BathSpec& bath, const AmeOptions& options) {
    StepLattice lattice(spec, bath, options.integrator, options.sample_grid);
    const auto start = lattice.start_set();
    if (options.levels < 1 || options.levels > start->eigensystem().levels()) {
        throw std::invalid_argument("levels must be between 1 and the number of kept eigenstates");
    }
    PopulationTrace trace;
    trace.grid = options.sample_grid;
    const Index points = static_cast<Index>(options.sample_grid.size());
    trace.populations = MatrixXd::Constant(points, options.levels, std::numeric_limits<double>::quiet_NaN());
    trace.trace_error.assign(options.sample_grid.size(), std::numeric_limits<double>::quiet_NaN());
    if (options.snapshots) {
        trace.snapshots.resize(options.sample_grid.size());
    }
    trace.min_eigenvalue = std::numeric_limits<double>::infinity();

    const VectorXcd gs = start->eigensystem().state(0);
    MatrixXcd rho = gs * gs.adjoint();

    auto record = [&](const LindbladSet& set, int sample, double s) {
        const auto& V = set.eigensystem().vectors;
        for (int a = 0; a < options.levels; ++a) {
            const VectorXcd v = V.col(a).cast<cplx>();
            trace.populations(sample, a) = std::real(v.dot(rho * v));
        }
        const double err = std::abs(rho.trace() - cplx{1.0, 0.0});
        trace.trace_error[static_cast<std::size_t>(sample)] = err;
        trace.max_trace_error = std::max(trace.max_trace_error, err);
        Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
        const double lo = solver.eigenvalues().minCoeff();
        trace.min_eigenvalue = std::min(trace.min_eigenvalue, lo);
        if (lo < -1e-6) {
            std::ostringstream msg;
            msg << "density matrix lost positivity at s = " << s << " (eigenvalue " << lo << ")";
            throw NumericalError(msg.str());
        }
        if (options.snapshots) {
            trace.snapshots[static_cast<std::size_t>(sample)] = rho;
        }
    };
    if (lattice.start_sample() >= 0) {
        record(*start, lattice.start_sample(), 0.0);
    }

    LatticeStep step;
    while (lattice.next(step)) {
        const double h = step.dt;
        const MatrixXcd k1 = apply_generator_hermitian(rho, step.g0);
        const MatrixXcd k2 = apply_generator_hermitian(rho + (0.5 * h) * k1, step.gmid);
        const MatrixXcd k3 = apply_generator_hermitian(rho + (0.5 * h) * k2, step.gmid);
        const MatrixXcd k4 = apply_generator_hermitian(rho + h * k3, step.g1);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint()).eval();
        const double err = std::abs(rho.trace() - cplx{1.0, 0.0});
        trace.max_trace_error = std::max(trace.max_trace_error, err);
        if (err > 1e-6) {
            std::ostringstream msg;
            msg << "trace drifted by " << err << " at s = " << step.s1;
            throw NumericalError(msg.str());
        }
        if (step.sample >= 0) {
            record(*step.end_set, step.sample, step.s1);
        }
    }
    trace.steps = lattice.steps_taken();
    return trace;
}

AdiabaticReport adiabatic_diagnostic(const IsingSpec& spec, int points, const BinningOptions& binning) {
    spec.validate();
    if (points < 2) {
        throw std::invalid_argument("adiabatic_diagnostic needs at least 2 scan points");
    }
    AdiabaticReport report;
    report.min_gap = std::numeric_limits<double>::infinity();
    const EigenSystem* guess = nullptr;
    EigenSystem eig;
    for (int k = 0; k < points; ++k) {
        const double s = static_cast<double>(k) / (points - 1);
        eig = eigendecompose(build_hamiltonian(spec, s), s, binning, guess);
        guess = &eig;
        if (eig.levels() >= 2) {
            const double gap = eig.energies[1] - eig.energies[0];
            if (gap < report.min_gap) {
                report.min_gap = gap;
                report.s_min_gap = s;
            }
        }
        const IsingOperator dh = hamiltonian_s_derivative(spec, s);
        MatrixXcd dv;
        dh.apply(MatrixXcd(eig.vectors.cast<cplx>()), dv);
        const MatrixXd elements = eig.vectors.transpose() * dv.real();
        report.max_element = std::max(report.max_element, elements.cwiseAbs().maxCoeff());
    }
    report.ratio = report.max_element / (report.min_gap * report.min_gap * spec.t_f);
    if (report.ratio >= 1.0) {
        std::ostringstream msg;
        msg << "adiabatic condition h/(gap^2 t_f) = " << report.ratio
            << " is not small; the master equation is outside its validity regime";
        warn(msg.str());
    }
    return report;
}

}  // namespace qtraj
