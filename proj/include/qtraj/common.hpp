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

#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qtraj {

using cplx = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Energies and rates are angular frequencies (rad/ns); times are ns.
inline double ghz_to_angular(double f_ghz) { return kTwoPi * f_ghz; }
inline double angular_to_ghz(double w) { return w / kTwoPi; }

/// Invalid user input (config files, problem files, CLI flags).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A run produced numbers that violate a physical invariant (trace drift,
/// negativity, norm growth, non-CP rates). The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Warnings go to stderr unless a sink is installed (tests silence them).
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace qtraj
