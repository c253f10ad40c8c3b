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

#include "qsmooth/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qsmooth {

AmsgradState AmsgradState::zero(Eigen::Index dim) {
  AmsgradState s;
  s.m = Eigen::VectorXd::Zero(dim);
  s.v = Eigen::VectorXd::Zero(dim);
  s.vhat = Eigen::VectorXd::Zero(dim);
  return s;
}

void amsgrad_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AmsgradState& state,
                  double lr, double beta1, double beta2, double eps) {
  if (theta.size() != grad.size() || theta.size() != state.m.size()) {
    throw std::invalid_argument("amsgrad_step: shape mismatch");
  }
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  state.vhat = state.vhat.cwiseMax(state.v);
  theta -= lr * state.m.cwiseQuotient(state.vhat.cwiseSqrt().array().matrix() +
                                      Eigen::VectorXd::Constant(theta.size(), eps));
}

namespace {

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd grad;
  bool ok = false;
};

// Strong-Wolfe line search (bracket + zoom with bisection fallback).
LineSearchResult wolfe_search(const std::function<double(const Eigen::VectorXd&)>& value_fn,
                              const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& value_grad_fn,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& dir,
                              double f0, double slope0, long& evals,
                              double& best_value, Eigen::VectorXd& best_point) {
  constexpr double c1 = 1e-4;
  constexpr double c2 = 0.9;
  constexpr int max_trials = 40;

  auto probe_value = [&](double a) {
    const Eigen::VectorXd xt = x + a * dir;
    const double f = value_fn(xt);
    ++evals;
    if (f < best_value) {
      best_value = f;
      best_point = xt;
    }
    return f;
  };
  auto probe_grad = [&](double a, Eigen::VectorXd& g) {
    const Eigen::VectorXd xt = x + a * dir;
    const double f = value_grad_fn(xt, g);
    ++evals;
    if (f < best_value) {
      best_value = f;
      best_point = xt;
    }
    return f;
  };

  LineSearchResult out;
  auto zoom = [&](double lo, double f_lo, double hi) -> bool {
    for (int i = 0; i < max_trials; ++i) {
      const double a = 0.5 * (lo + hi);
      const double f = probe_value(a);
      if (f > f0 + c1 * a * slope0 || f >= f_lo) {
        hi = a;
        continue;
      }
      Eigen::VectorXd g;
      probe_grad(a, g);
      const double slope = g.dot(dir);
      if (std::abs(slope) <= -c2 * slope0) {
        out.step = a;
        out.value = f;
        out.grad = std::move(g);
        out.ok = true;
        return true;
      }
      if (slope * (hi - lo) >= 0.0) hi = lo;
      lo = a;
      f_lo = f;
    }
    return false;
  };

  double a_prev = 0.0, f_prev = f0;
  double a = 1.0;
  for (int i = 0; i < max_trials; ++i) {
    const double f = probe_value(a);
    if (f > f0 + c1 * a * slope0 || (i > 0 && f >= f_prev)) {
      if (zoom(a_prev, f_prev, a)) return out;
      return out;  // failed
    }
    Eigen::VectorXd g;
    probe_grad(a, g);
    const double slope = g.dot(dir);
    if (std::abs(slope) <= -c2 * slope0) {
      out.step = a;
      out.value = f;
      out.grad = std::move(g);
      out.ok = true;
      return out;
    }
    if (slope >= 0.0) {
      if (zoom(a, f, a_prev)) return out;
      return out;
    }
    a_prev = a;
    f_prev = f;
    a *= 2.0;
  }
  return out;
}

}  // namespace

BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& value_fn,
                         const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& value_grad_fn,
                         Eigen::VectorXd x0, int max_iters, double initial_step_norm) {
  const Eigen::Index dim = x0.size();
  BfgsResult result;
  Eigen::VectorXd g(dim);
  double f = value_grad_fn(x0, g);
  ++result.evaluations;
  result.best_point = x0;
  result.best_value = f;
  result.accepted_values.push_back(f);

  const double g0_norm = g.norm();
  if (g0_norm == 0.0 || max_iters == 0) return result;

  Eigen::MatrixXd h_inv =
      (initial_step_norm / g0_norm) * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd x = std::move(x0);
  bool first_update = true;

  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::VectorXd dir = -(h_inv * g);
    double slope = dir.dot(g);
    if (slope >= 0.0) {
      // Reset a non-descent direction to scaled steepest descent.
      dir = -(initial_step_norm / std::max(g.norm(), 1e-300)) * g;
      slope = dir.dot(g);
      if (slope >= 0.0) break;
    }
    LineSearchResult ls = wolfe_search(value_fn, value_grad_fn, x, dir, f, slope,
                                       result.evaluations, result.best_value,
                                       result.best_point);
    if (!ls.ok) {
      result.line_search_failed = true;
      break;
    }
    const Eigen::VectorXd step = ls.step * dir;
    const Eigen::VectorXd yvec = ls.grad - g;
    x += step;
    f = ls.value;
    g = std::move(ls.grad);
    ++result.iterations;
    result.accepted_values.push_back(f);
    if (f < result.best_value) {
      result.best_value = f;
      result.best_point = x;
    }

    const double sy = step.dot(yvec);
    if (sy > 1e-12 * step.norm() * yvec.norm()) {
      if (first_update) {
        h_inv = (sy / yvec.squaredNorm()) * Eigen::MatrixXd::Identity(dim, dim);
        first_update = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * yvec;
      // H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      h_inv.noalias() -= rho * (step * hy.transpose() + hy * step.transpose());
      h_inv.noalias() += (rho * rho * yvec.dot(hy) + rho) * (step * step.transpose());
    }
    if (g.norm() < 1e-14) break;
  }
  return result;
}

SynthesisResult synthesize(const ControlSystem& system, const CostConfig& cost_cfg,
                           const TrainSchedule& schedule, const SolverConfig& solver) {
  SynthesisResult best;
  best.final_cost = std::numeric_limits<double>::infinity();

  for (int attempt = 0; attempt < std::max(1, schedule.restarts); ++attempt) {
    const std::uint64_t seed = schedule.seed + static_cast<std::uint64_t>(attempt);
    TrainableParameters params;
    params.mlp = mlp_new(schedule.hidden_sizes, system.pulse_dim, seed);
    params.log_alpha = 0.0;
    params.seed = seed;

    Eigen::VectorXd theta;
    params.copy_to_flat(theta);
    AmsgradState opt_state = AmsgradState::zero(theta.size());
    std::vector<CostReport> history;
    double current = std::numeric_limits<double>::infinity();

    for (int it = 0; it < schedule.amsgrad_iters; ++it) {
      GradientResult gr = cost_gradient(system, params, cost_cfg, solver);
      history.push_back(gr.report);
      current = gr.report.total;
      if (current <= schedule.cost_target) break;
      amsgrad_step(theta, gr.gradient, opt_state, schedule.amsgrad_lr, schedule.beta1,
                   schedule.beta2, schedule.epsilon_hat);
      params.copy_from_flat(theta);
    }

    if (current > schedule.cost_target && schedule.bfgs_iters > 0) {
      TrainableParameters scratch = params;
      auto value_fn = [&](const Eigen::VectorXd& x) {
        scratch.copy_from_flat(x);
        PropagationResult prop = propagate(system, scratch, solver_for(cost_cfg, solver));
        return cost(prop.state, system, scratch, cost_cfg).total;
      };
      auto value_grad_fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        scratch.copy_from_flat(x);
        GradientResult gr = cost_gradient(system, scratch, cost_cfg, solver);
        g = gr.gradient;
        history.push_back(gr.report);
        return gr.report.total;
      };
      BfgsResult bfgs = bfgs_minimize(value_fn, value_grad_fn, theta, schedule.bfgs_iters,
                                      schedule.bfgs_initial_step_norm);
      theta = bfgs.best_point;
      params.copy_from_flat(theta);
      current = bfgs.best_value;
    }

    best.restarts_used = attempt + 1;
    best.cost_history.insert(best.cost_history.end(), history.begin(), history.end());
    if (current < best.final_cost) {
      best.final_cost = current;
      best.params = params;
    }
    if (best.final_cost <= schedule.cost_target) {
      best.converged = true;
      break;
    }
  }
  return best;
}

}  // namespace qsmooth
