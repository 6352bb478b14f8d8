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

#include "qtraj/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qtraj {

AnnealSchedule::AnnealSchedule() : AnnealSchedule(linear(1.0, 1.0)) {}

AnnealSchedule::AnnealSchedule(std::vector<ScheduleKnot> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 2) {
        throw std::invalid_argument("schedule needs at least two knots");
    }
    if (knots_.front().s != 0.0 || knots_.back().s != 1.0) {
        throw std::invalid_argument("schedule must start at s = 0 and end at s = 1");
    }
    for (std::size_t k = 0; k < knots_.size(); ++k) {
        const auto& knot = knots_[k];
        if (!std::isfinite(knot.A) || !std::isfinite(knot.B)) {
            std::ostringstream msg;
            msg << "schedule knot " << k << " has a non-finite energy";
            throw std::invalid_argument(msg.str());
        }
        if (k > 0 && !(knot.s > knots_[k - 1].s)) {
            std::ostringstream msg;
            msg << "schedule s values must be strictly increasing (knot " << k << ", s = " << knot.s << ")";
            throw std::invalid_argument(msg.str());
        }
    }
}

AnnealSchedule AnnealSchedule::linear(double A0, double B0) {
    return AnnealSchedule({{0.0, A0, 0.0}, {1.0, 0.0, B0}});
}

AnnealSchedule AnnealSchedule::constant(double A, double B) {
    return AnnealSchedule({{0.0, A, B}, {1.0, A, B}});
}

ScheduleValue AnnealSchedule::eval(double s) const {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw std::domain_error("schedule evaluated outside s in [0, 1]");
    }
    // Segment [k, k+1] with knots_[k].s <= s < knots_[k+1].s; s = 1 uses the last one.
    auto upper = std::upper_bound(knots_.begin(), knots_.end(), s,
                                  [](double v, const ScheduleKnot& knot) { return v < knot.s; });
    std::size_t k = static_cast<std::size_t>(std::distance(knots_.begin(), upper));
    k = std::clamp<std::size_t>(k, 1, knots_.size() - 1) - 1;
    const auto& lo = knots_[k];
    const auto& hi = knots_[k + 1];
    const double width = hi.s - lo.s;
    const double dA = (hi.A - lo.A) / width;
    const double dB = (hi.B - lo.B) / width;
    const double x = s - lo.s;
    return {lo.A + dA * x, lo.B + dB * x, dA, dB};
}

void IsingSpec::validate() const {
    if (n < 1 || n > 24) {
        throw std::invalid_argument("qubit count n must be in [1, 24]");
    }
    if (static_cast<int>(h.size()) != n) {
        throw std::invalid_argument("h must have exactly n entries");
    }
    for (const auto& c : J) {
        if (!(0 <= c.i && c.i < c.j && c.j < n)) {
            std::ostringstream msg;
            msg << "coupling (" << c.i << ", " << c.j << ") must satisfy 0 <= i < j < n";
            throw std::invalid_argument(msg.str());
        }
    }
    if (!(t_f > 0.0) || !std::isfinite(t_f)) {
        throw std::invalid_argument("t_f must be positive");
    }
}

IsingOperator::IsingOperator(int n, double transverse, VectorXd diagonal)
    : n_(n), transverse_(transverse), diagonal_(std::move(diagonal)) {
    if (diagonal_.size() != (Index{1} << n_)) {
        throw std::invalid_argument("diagonal length must be 2^n");
    }
}

void IsingOperator::apply(const Eigen::Ref<const VectorXcd>& in, Eigen::Ref<VectorXcd> out) const {
    const Index dim = dimension();
    const double a = transverse_;
    for (Index k = 0; k < dim; ++k) {
        cplx flips{0.0, 0.0};
        for (int q = 0; q < n_; ++q) {
            flips += in[k ^ (Index{1} << q)];
        }
        out[k] = diagonal_[k] * in[k] - a * flips;
    }
}

VectorXcd IsingOperator::operator*(const VectorXcd& v) const {
    VectorXcd out(v.size());
    apply(v, out);
    return out;
}

void IsingOperator::apply(const MatrixXcd& in, MatrixXcd& out) const {
    out.resize(in.rows(), in.cols());
    for (Index c = 0; c < in.cols(); ++c) {
        apply(in.col(c), out.col(c));
    }
}

MatrixXd IsingOperator::dense() const {
    const Index dim = dimension();
    MatrixXd m = diagonal_.asDiagonal();
    for (Index k = 0; k < dim; ++k) {
        for (int q = 0; q < n_; ++q) {
            m(k ^ (Index{1} << q), k) -= transverse_;
        }
    }
    return m;
}

double IsingOperator::norm_bound() const {
    return n_ * std::abs(transverse_) + diagonal_.cwiseAbs().maxCoeff();
}

IsingOperator& IsingOperator::operator*=(double c) {
    transverse_ *= c;
    diagonal_ *= c;
    return *this;
}

IsingOperator operator-(const IsingOperator& a, const IsingOperator& b) {
    if (a.n_ != b.n_) {
        throw std::invalid_argument("operator dimensions differ");
    }
    return IsingOperator(a.n_, a.transverse_ - b.transverse_, a.diagonal_ - b.diagonal_);
}

VectorXd problem_diagonal(const IsingSpec& spec) {
    const Index dim = spec.dimension();
    VectorXd diag = VectorXd::Zero(dim);
    auto z = [](Index k, int q) { return ((k >> q) & 1) ? -1.0 : 1.0; };
    for (Index k = 0; k < dim; ++k) {
        double e = 0.0;
        for (int q = 0; q < spec.n; ++q) {
            e -= spec.h[q] * z(k, q);
        }
        for (const auto& c : spec.J) {
            e += c.J * z(k, c.i) * z(k, c.j);
        }
        diag[k] = e;
    }
    return diag;
}

IsingOperator build_hamiltonian(const IsingSpec& spec, double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw std::domain_error("build_hamiltonian: s must lie in [0, 1]");
    }
    const auto v = spec.schedule.eval(s);
    return IsingOperator(spec.n, v.A, v.B * problem_diagonal(spec));
}

IsingOperator hamiltonian_s_derivative(const IsingSpec& spec, double s) {
    const auto v = spec.schedule.eval(s);
    return IsingOperator(spec.n, v.dA_ds, v.dB_ds * problem_diagonal(spec));
}

AnnealSchedule default_schedule() {
    return AnnealSchedule::linear(ghz_to_angular(1.0), ghz_to_angular(1.0));
}

IsingSpec chain_problem(int n) {
    if (n < 1) {
        throw std::invalid_argument("chain needs at least one qubit");
    }
    IsingSpec spec;
    spec.n = n;
    spec.h.assign(n, 0.0);
    spec.h[0] = 0.25;
    for (int i = 0; i + 1 < n; ++i) {
        spec.J.push_back({i, i + 1, -1.0});
    }
    spec.schedule = default_schedule();
    spec.t_f = 10000.0;
    return spec;
}

namespace {

IsingSpec gadget8() {
    IsingSpec spec;
    spec.n = 8;
    const double h3[8] = {-2, -2, 2, -3, 1, 3, -3, 3};
    for (double v : h3) {
        spec.h.push_back(v / 3.0);
    }
    // 3 J_{i,j} for i in 0..3 (rows) and j in 4..7 (columns).
    const double j3[4][4] = {
        {1, -3, -1, -1},
        {-1, -2, 2, -3},
        {-2, -1, -3, -2},
        {-3, -3, -1, -3},
    };
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            spec.J.push_back({i, 4 + j, j3[i][j] / 3.0});
        }
    }
    spec.schedule = default_schedule();
    spec.t_f = 10000.0;
    return spec;
}

// Two K_{4,4} cells (qubits 0-7 and 8-15) joined by four inter-cell couplers
// between the second halves of each cell.
IsingSpec probe16() {
    IsingSpec spec;
    spec.n = 16;
    spec.h.assign(16, 0.0);
    for (int i = 0; i < 8; ++i) {
        spec.h[i] = 0.44;
        spec.h[8 + i] = -1.0;
    }
    for (int cell = 0; cell < 2; ++cell) {
        const int base = 8 * cell;
        for (int a = 0; a < 4; ++a) {
            for (int b = 4; b < 8; ++b) {
                spec.J.push_back({base + a, base + b, -1.0});
            }
        }
    }
    for (int k = 4; k < 8; ++k) {
        spec.J.push_back({k, 8 + k, -1.0});
    }
    spec.schedule = default_schedule();
    spec.t_f = 10000.0;
    return spec;
}

}  // namespace

std::vector<std::string> builtin_problem_names() { return {"chain8", "gadget8", "probe16"}; }

IsingSpec builtin_problem(std::string_view name) {
    if (name == "chain8") return chain_problem(8);
    if (name == "gadget8") return gadget8();
    if (name == "probe16") return probe16();
    std::string msg = "unknown builtin problem '" + std::string(name) + "'; valid names:";
    for (const auto& valid : builtin_problem_names()) {
        msg += " " + valid;
    }
    throw std::invalid_argument(msg);
}

}  // namespace qtraj
