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

#include "qsmooth/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "ode_detail.hpp"

namespace qsmooth {

CostConfig CostConfig::defaults_for(const ControlSystem& system) {
  CostConfig cfg;
  cfg.k = system.cost_defaults.k;
  cfg.l = system.cost_defaults.l;
  cfg.second_order = system.cost_defaults.order >= 2;
  cfg.decay_enabled = !system.decay_rates.empty();
  return cfg;
}

double gate_fidelity(const Matrix& u, const Matrix& u0, const SubspaceProjection& proj) {
  if (u.rows() != proj.p.cols() || u0.rows() != proj.logical_dim) {
    throw std::invalid_argument("gate_fidelity: shape mismatch");
  }
  const Matrix logical = proj.p * u * proj.p.adjoint();
  const Complex z = (logical * u0.adjoint()).trace() / static_cast<double>(proj.logical_dim);
  return std::norm(z);
}

double sensitivity_norm(const Matrix& e, const SubspaceProjection& proj) {
  const Matrix pe = proj.p * e;
  const Complex block_trace = (pe * proj.p.adjoint()).trace();
  const Matrix b = pe - (block_trace / static_cast<double>(proj.logical_dim)) * proj.p;
  return b.norm();
}

namespace {

struct CostTerms {
  CostReport report;
  // Intermediates reused by the terminal adjoints.
  Complex z = 0.0;        // tr([P U P†] U0†)
  double f_trace = 0.0;   // |z| / D
  double gamma_sum = 0.0; // sum_i Gamma_i
};

double channel_weight(const std::vector<double>& weights, int i) {
  return weights.empty() ? 1.0 : weights.at(i);
}

CostTerms evaluate_cost(const MagnusState& state, const ControlSystem& system,
                        const TrainableParameters& params, const CostConfig& cfg) {
  if (cfg.k < 1 || cfg.l < 1) throw std::invalid_argument("cost: k, l must be >= 1");
  CostTerms terms;
  const auto& proj = system.projection;
  const double dim = static_cast<double>(proj.logical_dim);
  const double alpha = params.alpha();

  const Matrix logical = proj.p * state.u * proj.p.adjoint();
  terms.z = (logical * system.target.u0.adjoint()).trace();
  terms.f_trace = std::abs(terms.z) / dim;

  double decay = 1.0;
  if (cfg.decay_enabled && !system.decay_rates.empty()) {
    for (double g : system.decay_rates) terms.gamma_sum += g;
    decay = std::exp(-terms.gamma_sum * system.duration / alpha);
  }
  terms.report.decay_factor = decay;
  terms.report.fidelity_term = 1.0 - std::pow(terms.f_trace, cfg.k) * decay;

  const int channels = static_cast<int>(system.noise.size());
  for (int i = 0; i < channels; ++i) {
    const double beta = channel_weight(cfg.weights, i) * system.noise[i].eps_max * alpha / dim;
    const double norm = sensitivity_norm(state.e1[i], proj);
    terms.report.sensitivity_terms.push_back(std::pow(beta * norm, cfg.l));
  }
  if (cfg.second_order) {
    if (state.e2.empty()) {
      throw std::invalid_argument("cost: second-order terms need a propagation with order >= 2");
    }
    for (int i = 0; i < channels; ++i) {
      for (int j = 0; j < channels; ++j) {
        const double beta = channel_weight(cfg.second_order_weights, i * channels + j) *
                            (system.noise[i].eps_max * alpha) *
                            (system.noise[j].eps_max * alpha) / dim;
        const double norm = sensitivity_norm(state.e2[i * channels + j], proj);
        terms.report.second_order_terms.push_back(std::pow(beta * norm, cfg.l));
      }
    }
  }
  terms.report.total = terms.report.fidelity_term;
  for (double s : terms.report.sensitivity_terms) terms.report.total += s;
  for (double s : terms.report.second_order_terms) terms.report.total += s;
  return terms;
}

// Coefficient (1/N) d(beta N)^l / dN = l beta^l N^(l-2); the norm is not
// differentiable at N = 0 for l = 1, where the contribution is dropped.
double power_chain(double beta, double norm, int l) {
  if (l == 1) return norm > 1e-300 ? beta / norm : 0.0;
  return l * std::pow(beta, l) * std::pow(norm, l - 2);
}

// Terminal adjoint of a sensitivity term: dC/dE for term (beta N_P(E))^l.
Matrix sensitivity_adjoint(const Matrix& e, const SubspaceProjection& proj, double beta,
                           int l) {
  const double dim = static_cast<double>(proj.logical_dim);
  const Matrix pe = proj.p * e;
  const Complex block_trace = (pe * proj.p.adjoint()).trace();
  const Matrix b = pe - (block_trace / dim) * proj.p;
  const double norm = b.norm();
  const double coeff = power_chain(beta, norm, l);
  if (coeff == 0.0) return Matrix::Zero(e.rows(), e.cols());
  // dN = [Re tr(B† P dE) - Re(tr(B† P) tr(P† P dE)) / D] / N
  const Complex s_tilde = (b.adjoint() * proj.p).trace();
  const Matrix ptp = proj.p.adjoint() * proj.p;
  return coeff * (proj.p.adjoint() * b - (std::conj(s_tilde) / dim) * ptp);
}

}  // namespace

CostReport cost(const MagnusState& state, const ControlSystem& system,
                const TrainableParameters& params, const CostConfig& cfg) {
  return evaluate_cost(state, system, params, cfg).report;
}

CostReport cost_on_trace(const ControlSystem& system, const TrainableParameters& params,
                         const CostConfig& cfg, const OdeTrace& trace, int order) {
  const MagnusState state = propagate_on_trace(system, params, trace, order);
  return cost(state, system, params, cfg);
}

GradientResult cost_gradient(const ControlSystem& system, const TrainableParameters& params,
                             const CostConfig& cfg, const SolverConfig& solver) {
  SolverConfig solver_cfg = solver;
  if (cfg.second_order && solver_cfg.order < 2) solver_cfg.order = 2;

  PropagationResult forward = propagate(system, params, solver_cfg, /*record_trace=*/true);
  const MagnusState& final_state = forward.state;
  CostTerms terms = evaluate_cost(final_state, system, params, cfg);

  const auto& proj = system.projection;
  const double dim = static_cast<double>(proj.logical_dim);
  const double alpha = params.alpha();
  const int channels = static_cast<int>(system.noise.size());
  const int mlp_params = params.mlp.parameter_count();

  Eigen::VectorXd mlp_grad = Eigen::VectorXd::Zero(mlp_params);
  double alpha_bar = 0.0;

  // Direct alpha dependence of the cost prefactors.
  if (cfg.decay_enabled && terms.gamma_sum > 0.0) {
    alpha_bar += -std::pow(terms.f_trace, cfg.k) * terms.report.decay_factor *
                 terms.gamma_sum * system.duration / (alpha * alpha);
  }
  for (double s : terms.report.sensitivity_terms) alpha_bar += cfg.l * s / alpha;
  for (double s : terms.report.second_order_terms) alpha_bar += 2.0 * cfg.l * s / alpha;

  // Terminal adjoints.
  MagnusState ybar;
  detail::state_set_zero_like(ybar, final_state);
  const double abs_z = std::abs(terms.z);
  if (abs_z > 1e-300) {
    const Complex gamma = -terms.report.decay_factor * cfg.k *
                          std::pow(terms.f_trace, cfg.k - 1) * std::conj(terms.z) /
                          (dim * abs_z);
    ybar.u = std::conj(gamma) * (proj.p.adjoint() * system.target.u0 * proj.p);
  }
  for (int i = 0; i < channels; ++i) {
    const double beta = channel_weight(cfg.weights, i) * system.noise[i].eps_max * alpha / dim;
    ybar.e1[i] = sensitivity_adjoint(final_state.e1[i], proj, beta, cfg.l);
  }
  if (cfg.second_order) {
    for (int i = 0; i < channels; ++i) {
      for (int j = 0; j < channels; ++j) {
        const double beta = channel_weight(cfg.second_order_weights, i * channels + j) *
                            (system.noise[i].eps_max * alpha) *
                            (system.noise[j].eps_max * alpha) / dim;
        ybar.e2[i * channels + j] =
            sensitivity_adjoint(final_state.e2[i * channels + j], proj, beta, cfg.l);
      }
    }
  }

  // Reverse sweep through the recorded steps.
  CoupledRhs rhs{&system, &params, solver_cfg.order};
  const auto& trace = forward.trace;
  const std::size_t steps = trace.steps.size();
  MagnusState stage_states[6], ks[6], stage_bar, kbar[6];
  for (int s = 0; s < 6; ++s) {
    detail::state_set_zero_like(stage_states[s], final_state);
    detail::state_set_zero_like(ks[s], final_state);
    detail::state_set_zero_like(kbar[s], final_state);
  }
  detail::state_set_zero_like(stage_bar, final_state);

  for (std::size_t step = steps; step-- > 0;) {
    const double t = trace.times[step];
    const double h = trace.steps[step];
    const MagnusState& y0 = trace.states[step];

    // Recompute the six solution stages of this step.
    detail::state_assign(stage_states[0], y0);
    rhs(t, stage_states[0], ks[0]);
    for (int s = 1; s < 6; ++s) {
      detail::state_assign(stage_states[s], y0);
      for (int j = 0; j < s; ++j) {
        detail::state_add_scaled(stage_states[s], ks[j], h * detail::kStageCoeffs[s][j]);
      }
      rhs(t + detail::kC[s] * h, stage_states[s], ks[s]);
    }

    for (int s = 0; s < 6; ++s) {
      detail::state_set_zero_like(kbar[s], final_state);
      if (detail::kB[s] != 0.0) detail::state_add_scaled(kbar[s], ybar, h * detail::kB[s]);
    }
    for (int s = 5; s >= 0; --s) {
      detail::state_set_zero_like(stage_bar, final_state);
      rhs.vjp(t + detail::kC[s] * h, stage_states[s], kbar[s], stage_bar, mlp_grad,
              alpha_bar);
      detail::state_add_scaled(ybar, stage_bar, 1.0);
      for (int j = 0; j < s; ++j) {
        detail::state_add_scaled(kbar[j], stage_bar, h * detail::kStageCoeffs[s][j]);
      }
    }
  }

  GradientResult result;
  result.report = terms.report;
  result.trace = forward.trace;
  result.rhs_evaluations = forward.rhs_evaluations;
  result.gradient.resize(mlp_params + 1);
  result.gradient.head(mlp_params) = mlp_grad;
  result.gradient[mlp_params] = alpha * alpha_bar;  // chain through alpha = exp(log_alpha)
  return result;
}

}  // namespace qsmooth
