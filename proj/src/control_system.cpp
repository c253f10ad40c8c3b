// Copyright 2026 The qsmooth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qsmooth/control_system.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsmooth {

double envelope(double t, double kappa, double total_time) {
  // Written as a single quotient so A(0) and A(T) evaluate to exactly zero
  // in floating point (tanh is odd, x/x == 1).
  const double num = std::tanh(kappa * t) - std::tanh(kappa * (t - total_time));
  return num / std::tanh(kappa * total_time) - 1.0;
}

double envelope_derivative(double t, double kappa, double total_time) {
  auto sech2 = [](double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
  };
  return kappa * (sech2(kappa * t) - sech2(kappa * (t - total_time))) /
         std::tanh(kappa * total_time);
}

namespace {

class ConstantField final : public FieldFunction {
 public:
  explicit ConstantField(double c) : c_(c) {}
  double value(double, const Eigen::VectorXd&) const override { return c_; }
  void accumulate_dp(double, const Eigen::VectorXd&, double, Eigen::VectorXd&) const override {}
  bool constant_in_p() const override { return true; }

 private:
  double c_;
};

class EnvelopeProductField final : public FieldFunction {
 public:
  EnvelopeProductField(double scale, double kappa, double total_time, int i, int j)
      : scale_(scale), kappa_(kappa), total_time_(total_time), i_(i), j_(j) {}

  double value(double t, const Eigen::VectorXd& p) const override {
    return scale_ * envelope(t, kappa_, total_time_) * p[i_] * std::sin(p[j_]);
  }

  void accumulate_dp(double t, const Eigen::VectorXd& p, double weight,
                     Eigen::VectorXd& grad_p) const override {
    const double a = scale_ * envelope(t, kappa_, total_time_);
    grad_p[i_] += weight * a * std::sin(p[j_]);
    grad_p[j_] += weight * a * p[i_] * std::cos(p[j_]);
  }

 private:
  double scale_, kappa_, total_time_;
  int i_, j_;
};

class EnvelopeArctanField final : public FieldFunction {
 public:
  EnvelopeArctanField(double scale, double kappa, double total_time, int i, int j)
      : scale_(scale), kappa_(kappa), total_time_(total_time), i_(i), j_(j) {}

  double value(double t, const Eigen::VectorXd& p) const override {
    const double a = scale_ * envelope(t, kappa_, total_time_) * 2.0 / std::numbers::pi;
    return a * std::atan(p[i_]) * std::sin(p[j_]);
  }

  void accumulate_dp(double t, const Eigen::VectorXd& p, double weight,
                     Eigen::VectorXd& grad_p) const override {
    const double a =
        weight * scale_ * envelope(t, kappa_, total_time_) * 2.0 / std::numbers::pi;
    grad_p[i_] += a * std::sin(p[j_]) / (1.0 + p[i_] * p[i_]);
    grad_p[j_] += a * std::atan(p[i_]) * std::cos(p[j_]);
  }

 private:
  double scale_, kappa_, total_time_;
  int i_, j_;
};

class DirectField final : public FieldFunction {
 public:
  DirectField(double scale, int i) : scale_(scale), i_(i) {}
  double value(double, const Eigen::VectorXd& p) const override { return scale_ * p[i_]; }
  void accumulate_dp(double, const Eigen::VectorXd&, double weight,
                     Eigen::VectorXd& grad_p) const override {
    grad_p[i_] += weight * scale_;
  }

 private:
  double scale_;
  int i_;
};

}  // namespace

FieldPtr make_constant_field(double c) { return std::make_shared<ConstantField>(c); }

FieldPtr make_envelope_product_field(double scale, double kappa, double total_time,
                                     int i, int j) {
  return std::make_shared<EnvelopeProductField>(scale, kappa, total_time, i, j);
}

FieldPtr make_envelope_arctan_field(double scale, double kappa, double total_time,
                                    int i, int j) {
  return std::make_shared<EnvelopeArctanField>(scale, kappa, total_time, i, j);
}

FieldPtr make_direct_field(double scale, int i) {
  return std::make_shared<DirectField>(scale, i);
}

TargetGate::TargetGate(Matrix u, double tol) : u0(std::move(u)) {
  if (u0.rows() != u0.cols()) throw std::invalid_argument("TargetGate: not square");
  if (unitarity_error(u0) > tol) throw std::invalid_argument("TargetGate: not unitary");
}

Matrix ControlSystem::hamiltonian(double t, const Eigen::VectorXd& p) const {
  Matrix h = drift;
  for (const auto& c : controls) h += c.field->value(t, p) * c.generator;
  return h;
}

double quoted_duration_to_internal(double quoted) {
  return 2.0 * std::numbers::pi * quoted;
}

namespace {

constexpr double kJ = 1.0;       // exchange coupling, internal angular units
constexpr double kDelta = -1.0;  // transmon anharmonicity (negative), |Delta| = 1

ControlSystem spin_base(double quoted_duration, double kappa_total) {
  ControlSystem sys;
  sys.n = 4;
  sys.projection = SubspaceProjection::identity(4);
  sys.drift = (kJ / 4.0) * pauli_string("ZZ");
  sys.duration = quoted_duration_to_internal(quoted_duration);
  NoiseChannel exchange;
  exchange.generator = pauli_string("ZZ");
  exchange.coupling = make_constant_field(kJ / 4.0);
  exchange.eps_max = 0.24;
  exchange.weight = 1.0;
  exchange.label = "exchange";
  sys.noise.push_back(std::move(exchange));
  (void)kappa_total;
  return sys;
}

}  // namespace

ControlSystem preset_spin_cz() {
  const double quoted_t = 4.8;
  const double kappa_total = 30.0;
  ControlSystem sys = spin_base(quoted_t, kappa_total);
  const double kappa = kappa_total / sys.duration;
  sys.controls.push_back({pauli_string("XI"),
                          make_envelope_product_field(kJ / 4.0, kappa, sys.duration, 0, 1),
                          "Bx"});
  sys.pulse_dim = 2;
  const Complex i(0.0, 1.0);
  sys.target = TargetGate(matrix_exp(-i * (std::numbers::pi / 4.0) * pauli_string("ZZ")));
  sys.cost_defaults = {2, 2, 2};
  sys.name = "spin-cz";
  return sys;
}

ControlSystem preset_spin_x90() {
  const double quoted_t = 3.2;
  const double kappa_total = 20.0;
  ControlSystem sys = spin_base(quoted_t, kappa_total);
  const double kappa = kappa_total / sys.duration;
  sys.controls.push_back({pauli_string("XI"),
                          make_envelope_product_field(kJ / 4.0, kappa, sys.duration, 0, 1),
                          "Bx"});
  sys.pulse_dim = 2;
  const Complex i(0.0, 1.0);
  sys.target = TargetGate(matrix_exp(-i * (std::numbers::pi / 4.0) * pauli_string("XI")));
  sys.cost_defaults = {2, 2, 1};
  sys.name = "spin-x90";
  return sys;
}

ControlSystem preset_spin_two_tone() {
  const double quoted_t = 3.2;
  const double kappa_total = 20.0;
  ControlSystem sys = spin_base(quoted_t, kappa_total);
  const double kappa = kappa_total / sys.duration;
  const char* gens[4] = {"XI", "YI", "IX", "IY"};
  const char* labels[4] = {"Bx1", "By1", "Bx2", "By2"};
  for (int f = 0; f < 4; ++f) {
    sys.controls.push_back(
        {pauli_string(gens[f]),
         make_envelope_product_field(kJ / 4.0, kappa, sys.duration, 2 * f, 2 * f + 1),
         labels[f]});
  }
  sys.pulse_dim = 8;
  const Complex i(0.0, 1.0);
  sys.target = TargetGate(matrix_exp(
      -i * (std::numbers::pi / 8.0) * (pauli_string("YY") + pauli_string("ZZ"))));
  sys.cost_defaults = {2, 2, 1};
  sys.name = "spin-two-tone";
  return sys;
}

ControlSystem preset_transmon(int levels) {
  if (levels < 3) throw std::invalid_argument("preset_transmon: needs >= 3 levels");
  ControlSystem sys;
  sys.n = levels;
  sys.projection = SubspaceProjection::levels(levels, {0, 1});

  Matrix a = Matrix::Zero(levels, levels);  // truncated lowering operator
  for (int m = 1; m < levels; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));
  const Matrix adag = a.adjoint();
  const Matrix number = adag * a;
  const Complex i(0.0, 1.0);
  const Matrix gx = (a + adag) / 2.0;       // couples to Omega_x
  const Matrix gy = i * (a - adag) / 2.0;   // couples to Omega_y
  sys.drift = (kDelta / 2.0) * number * (number - Matrix::Identity(levels, levels));

  sys.duration = quoted_duration_to_internal(2.0);
  const double kappa = (50.0 / 4.0) / sys.duration;
  sys.controls.push_back(
      {gx, make_envelope_arctan_field(4.0 * kDelta, kappa, sys.duration, 0, 1), "Omega_x"});
  sys.controls.push_back(
      {gy, make_envelope_arctan_field(4.0 * kDelta, kappa, sys.duration, 2, 3), "Omega_y"});
  sys.controls.push_back(
      {number, make_envelope_arctan_field(2.0 * kDelta, kappa, sys.duration, 4, 5), "delta"});
  sys.pulse_dim = 6;

  NoiseChannel detuning;
  detuning.generator = number;
  detuning.coupling = make_constant_field(1.0);
  detuning.eps_max = 0.035;  // in units of |Delta|
  detuning.weight = 1.0;
  detuning.label = "detuning";
  sys.noise.push_back(std::move(detuning));

  Matrix x90(2, 2);
  const double c = std::cos(std::numbers::pi / 4.0), s = std::sin(std::numbers::pi / 4.0);
  x90 << c, -i * s, -i * s, c;  // exp(-i pi sigma_x / 4)
  sys.target = TargetGate(x90);
  sys.cost_defaults = {1, 2, 1};
  sys.name = "transmon";
  return sys;
}

ControlSystem preset_by_name(const std::string& name, int transmon_levels) {
  if (name == "spin-cz") return preset_spin_cz();
  if (name == "spin-x90") return preset_spin_x90();
  if (name == "spin-two-tone") return preset_spin_two_tone();
  if (name == "transmon") return preset_transmon(transmon_levels);
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace qsmooth
