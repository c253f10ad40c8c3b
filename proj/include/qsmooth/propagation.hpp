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

#ifndef QSMOOTH_PROPAGATION_HPP
#define QSMOOTH_PROPAGATION_HPP

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qsmooth/control_system.hpp"
#include "qsmooth/neural_pulse.hpp"

namespace qsmooth {

struct SolverConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  long max_steps = 2000000;
  int order = 1;  // highest error integral accumulated by propagate (1..3)
};

class SolverError : public std::runtime_error {
 public:
  enum class Kind { divergence, numeric };
  SolverError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Co-integrated state of the coupled system: the ideal propagator U_c plus
/// the first-order error integrals E_i (Hermitian up to solver tolerance),
/// optionally the pairwise second-order integrals E2_{ij} (index i*K + j)
/// and the third-order integrals E3_{ijk} (index (i*K + j)*K + k).
struct MagnusState {
  Matrix u;
  std::vector<Matrix> e1;
  std::vector<Matrix> e2;
  std::vector<Matrix> e3;

  static MagnusState initial(int n, int channels, int order);
};

/// Accepted-step record of an adaptive integration: times[i] and states[i]
/// bracket each step of size steps[i]. Used for trajectory inspection, for
/// frozen-grid cost evaluation, and by the discrete-adjoint backward pass.
struct OdeTrace {
  std::vector<double> times;        // size = steps.size() + 1
  std::vector<double> steps;
  std::vector<MagnusState> states;  // states[i] at times[i]; empty unless recorded
};

struct PropagationResult {
  MagnusState state;
  OdeTrace trace;
  long rhs_evaluations = 0;
};

/// Right-hand side of the coupled ODE system for a neural pulse,
///   dU/dt    = -i a H_c(t, p(t)) U,
///   dE_i/dt  =  a U† [chi_i(t, p) L_i] U,
///   dE2_ij/dt = [dE_i/dt E_j - E_j dE_i/dt] / 2,
///   dE3_ijk/dt = [E2_jk dE_i - E_j dE_i E_k - E_k dE_i E_j + dE_i E2_kj] / 3,
/// with a = alpha the trainable time-scale. Also provides the vector-Jacobian
/// product used by the discrete adjoint (gradients flow into the MLP
/// parameters and alpha; E3 rows are forward-only).
struct CoupledRhs {
  const ControlSystem* system = nullptr;
  const TrainableParameters* params = nullptr;
  int order = 1;

  void operator()(double t, const MagnusState& y, MagnusState& dy) const;

  /// Accumulates the adjoint of one RHS evaluation: given kbar = dC/d(dy),
  /// adds dC/dy into ybar, dC/d(mlp params) into mlp_grad (flat layout) and
  /// dC/d(alpha) into alpha_bar.
  void vjp(double t, const MagnusState& y, const MagnusState& kbar, MagnusState& ybar,
           Eigen::VectorXd& mlp_grad, double& alpha_bar) const;
};

/// Integrates the coupled system from t = 0 to t = system.duration with the
/// embedded Dormand-Prince 5(4) pair and proportional step control. Local
/// error is kept within cfg tolerances; unitarity of U is monitored by the
/// caller, never re-imposed. Throws SolverError on step exhaustion or
/// non-finite state.
PropagationResult propagate(const ControlSystem& system, const TrainableParameters& params,
                            const SolverConfig& cfg, bool record_trace = false);

/// Replays the integration on a frozen step sequence (no error control).
/// Together with the discrete adjoint this makes cost gradients exact
/// derivatives of a deterministic map.
MagnusState propagate_on_trace(const ControlSystem& system, const TrainableParameters& params,
                               const OdeTrace& trace, int order);

/// Evaluation view of a pulse: per-control field amplitudes and per-channel
/// noise couplings as plain functions of time, plus the time-scale folded
/// into the dynamics.
struct PulseView {
  double duration = 0.0;
  double alpha = 1.0;
  std::vector<std::function<double(double)>> control_fields;
  std::vector<std::function<double(double)>> noise_couplings;
};

/// Binds a neural pulse to its system (fields evaluate the MLP).
PulseView make_pulse_view(const ControlSystem& system, const TrainableParameters& params);
/// Wraps externally supplied field samples/functions; noise couplings are
/// evaluated at p = 0 (all shipped systems have p-independent couplings).
PulseView make_pulse_view(const ControlSystem& system,
                          std::vector<std::function<double(double)>> fields);

/// Exact noisy propagator: integrates H_c + sum_i eps_i chi_i L_i directly
/// (the evaluation oracle for robustness sweeps).
Matrix full_noisy_propagate(const ControlSystem& system, const PulseView& pulse,
                            const std::vector<double>& eps, const SolverConfig& cfg);
Matrix full_noisy_propagate(const ControlSystem& system, const TrainableParameters& params,
                            const std::vector<double>& eps, const SolverConfig& cfg);

/// Noisy propagation factorized as U(T) = U_c(T) W(T), where W solves
/// i dW/dt = [U_c† H_eps U_c] W in the toggling frame. The small-magnitude W
/// resolves tiny noise-induced infidelities far below the direct route's
/// error floor. Returns {U_c(T), W(T)}.
std::pair<Matrix, Matrix> toggled_noisy_propagate(const ControlSystem& system,
                                                  const PulseView& pulse,
                                                  const std::vector<double>& eps,
                                                  const SolverConfig& cfg);

/// Generic adaptive Dormand-Prince 5(4) driver on flat complex vectors
/// (shared by the density-matrix propagation in the evaluation module).
using OdeRhs = std::function<void(double, const Vector&, Vector&)>;
Vector integrate_adaptive(const OdeRhs& rhs, Vector y0, double t0, double t1,
                          const SolverConfig& cfg);

}  // namespace qsmooth

#endif  // QSMOOTH_PROPAGATION_HPP
