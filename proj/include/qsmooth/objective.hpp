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

#ifndef QSMOOTH_OBJECTIVE_HPP
#define QSMOOTH_OBJECTIVE_HPP

#include <vector>

#include "qsmooth/propagation.hpp"

namespace qsmooth {

/// Cost shaping: integer exponents on the fidelity (k) and sensitivity (l)
/// terms, per-channel weights, optional second-order pair terms and the
/// decay penalty on the trace-fidelity term.
struct CostConfig {
  int k = 2;
  int l = 2;
  std::vector<double> weights;               // w_i; empty = all 1.0
  std::vector<double> second_order_weights;  // w_ij flattened i*K+j; empty = all 1.0
  bool second_order = false;
  bool decay_enabled = false;

  /// k, l and the Magnus order taken from the system's preset defaults.
  static CostConfig defaults_for(const ControlSystem& system);
};

struct CostReport {
  double total = 0.0;
  double fidelity_term = 0.0;
  double decay_factor = 1.0;
  std::vector<double> sensitivity_terms;
  std::vector<double> second_order_terms;
};

/// |tr([P U P†] U0†) / D|^2 in [0, 1]; invariant under a global phase of
/// either argument. U is the full n x n propagator, u0 the D x D target.
double gate_fidelity(const Matrix& u, const Matrix& u0, const SubspaceProjection& proj);

/// Noise sensitivity of the logical subspace:
///   N_P(E) = ‖P E - (tr[P E P†]/D) P‖.
/// The single-sided projection drops noise acting purely on the leakage
/// subspace; removing the logical-block trace drops the global-phase
/// component, which cannot affect any gate.
double sensitivity_norm(const Matrix& e, const SubspaceProjection& proj);

/// Composes the full cost from a propagated state:
///   C = (1 - F_tr^k e^{-sum_i Gamma_i T / alpha})
///     + sum_i (w_i eps_i^max alpha N_P(E_i) / D)^l
///     + sum_ij (w_ij (eps_i^max alpha)(eps_j^max alpha) N_P(E2_ij) / D)^l,
/// with F_tr = |tr([P U P†] U0†)| / D. The alpha factors keep the targeted
/// robustness fixed in physical time while the dynamics are rescaled.
CostReport cost(const MagnusState& state, const ControlSystem& system,
                const TrainableParameters& params, const CostConfig& cfg);

struct GradientResult {
  CostReport report;
  Eigen::VectorXd gradient;  // d total / d [mlp params..., log_alpha]
  OdeTrace trace;            // the frozen grid the gradient differentiates
  long rhs_evaluations = 0;
};

/// Cost and its exact gradient with respect to every MLP weight/bias and
/// log(alpha), by reverse-mode differentiation through the recorded
/// integrator steps (discrete adjoint). The returned gradient is the exact
/// derivative of cost_on_trace at the adaptive grid recorded in `trace`.
GradientResult cost_gradient(const ControlSystem& system, const TrainableParameters& params,
                             const CostConfig& cfg, const SolverConfig& solver);

/// Cost evaluated on a frozen step sequence (finite-difference companion of
/// cost_gradient; order must match the solver order used to record it).
CostReport cost_on_trace(const ControlSystem& system, const TrainableParameters& params,
                         const CostConfig& cfg, const OdeTrace& trace, int order);

}  // namespace qsmooth

#endif  // QSMOOTH_OBJECTIVE_HPP
