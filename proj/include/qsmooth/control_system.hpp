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

#ifndef QSMOOTH_CONTROL_SYSTEM_HPP
#define QSMOOTH_CONTROL_SYSTEM_HPP

#include <memory>
#include <string>
#include <vector>

#include "qsmooth/su_algebra.hpp"

namespace qsmooth {

/// Smoothed unit square window built from tanh ramps:
///   A(t) = coth(kappa T) [tanh(kappa t) - tanh(kappa (t - T))] - 1.
/// Vanishes exactly at t = 0 and t = T; ~1 in the interior for kappa T >> 1.
double envelope(double t, double kappa, double total_time);

/// d A(t) / d t, used by bandwidth estimates and sanity checks.
double envelope_derivative(double t, double kappa, double total_time);

/// A real scalar field of (t, p): either a control amplitude h_i(t, p) or a
/// noise coupling chi_i(t, p). Implementations must be pure and provide the
/// partial derivatives with respect to the pulse parameters p.
class FieldFunction {
 public:
  virtual ~FieldFunction() = default;
  virtual double value(double t, const Eigen::VectorXd& p) const = 0;
  /// grad_p += weight * d value / d p, evaluated at (t, p).
  virtual void accumulate_dp(double t, const Eigen::VectorXd& p, double weight,
                             Eigen::VectorXd& grad_p) const = 0;
  /// True when the field does not depend on p (skips backprop work).
  virtual bool constant_in_p() const { return false; }
};

using FieldPtr = std::shared_ptr<const FieldFunction>;

/// Constant field, value c for all (t, p).
FieldPtr make_constant_field(double c);
/// scale * A(t) * p[i] * sin(p[j])
FieldPtr make_envelope_product_field(double scale, double kappa, double total_time,
                                     int i, int j);
/// scale * A(t) * (2/pi) * arctan(p[i]) * sin(p[j]); |value| <= |scale| * A(t).
FieldPtr make_envelope_arctan_field(double scale, double kappa, double total_time,
                                    int i, int j);
/// scale * p[i] (no envelope; used by toy systems and tests).
FieldPtr make_direct_field(double scale, int i);

struct Control {
  Matrix generator;  // Hermitian, n x n
  FieldPtr field;    // coefficient of the generator, units of angular frequency
  std::string label;
};

/// One quasistatic noise channel eps * chi(t, p) * generator.
struct NoiseChannel {
  Matrix generator;       // Hermitian, n x n
  FieldPtr coupling;      // chi(t, p)
  double eps_max = 0.0;   // largest tolerable dimensionless noise strength
  double weight = 1.0;    // cost hyperparameter w_i, (0, 1]
  std::string label;
};

/// Target unitary on the logical subspace (D x D), checked unitary on
/// construction.
struct TargetGate {
  Matrix u0;
  explicit TargetGate(Matrix u, double tol = 1e-12);
  TargetGate() = default;
};

/// Per-system defaults for the cost exponents and Magnus order, taken from
/// the preset definitions.
struct CostDefaults {
  int k = 2;
  int l = 2;
  int order = 1;  // Magnus order; 2 adds the pairwise second-order integrals
};

/// A physical system declaration: drift/control/noise structure, pulse
/// parameterization, duration and target. Immutable value object; field
/// closures are pure and shareable.
struct ControlSystem {
  int n = 0;                         // Hilbert space dimension
  SubspaceProjection projection;     // logical subspace (D <= n)
  Matrix drift;                      // time-independent part of H_c
  std::vector<Control> controls;
  std::vector<NoiseChannel> noise;
  double duration = 0.0;             // T, internal units (hbar = 1)
  std::vector<double> decay_rates;   // Gamma_i, inverse internal time; optional
  TargetGate target;
  int pulse_dim = 0;                 // number of p-components the fields read
  CostDefaults cost_defaults;
  std::string name;

  /// Assembles H_c(t, p) = drift + sum_i h_i(t, p) Lambda_i.
  Matrix hamiltonian(double t, const Eigen::VectorXd& p) const;

  Eigen::Index logical_dim() const { return projection.logical_dim; }
};

/// Internal units: hbar = 1, J = 1 (resp. |Delta| = 1) as the angular
/// frequency scale, so a duration quoted as x h/J converts to 2 pi x.
double quoted_duration_to_internal(double quoted);

/// Two exchange-coupled spin qubits, CZ-equivalent target, single B_x drive,
/// exchange-noise channel. Second-order correction enabled by default.
ControlSystem preset_spin_cz();

/// Same system targeting X_{pi/2} on the first qubit; first-order correction.
ControlSystem preset_spin_x90();

/// Two-tone drive on both qubits (four field components) targeting a gate
/// locally equivalent to sqrt(iSWAP); first-order correction.
ControlSystem preset_spin_two_tone();

/// Transmon ladder truncated to `levels` (>= 3), logical levels {0,1},
/// arctan-clamped drive and detuning fields, detuning-noise channel.
ControlSystem preset_transmon(int levels = 4);

/// Preset lookup by name ("spin-cz", "spin-x90", "spin-two-tone",
/// "transmon"); throws std::invalid_argument for unknown names.
ControlSystem preset_by_name(const std::string& name, int transmon_levels = 4);

}  // namespace qsmooth

#endif  // QSMOOTH_CONTROL_SYSTEM_HPP
