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

#ifndef QSMOOTH_OPTIMIZER_HPP
#define QSMOOTH_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "qsmooth/objective.hpp"

namespace qsmooth {

/// Training schedule: a seeded random start, an AMSGrad phase, then BFGS
/// refinement. Re-seeded restarts run until cost_target is reached or the
/// restart budget is spent.
struct TrainSchedule {
  int amsgrad_iters = 200;
  double amsgrad_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;
  int bfgs_iters = 350;
  double bfgs_initial_step_norm = 1e-3;
  std::uint64_t seed = 0;
  int restarts = 1;
  double cost_target = 1e-8;
  std::vector<int> hidden_sizes = {32, 32};
};

struct AmsgradState {
  Eigen::VectorXd m, v, vhat;
  static AmsgradState zero(Eigen::Index dim);
};

/// One AMSGrad update, in place:
///   m' = b1 m + (1-b1) g;  v' = b2 v + (1-b2) g^2;  vhat' = max(vhat, v');
///   theta' = theta - lr m' / (sqrt(vhat') + eps).
/// A zero gradient with fresh state leaves theta unchanged; vhat never
/// decreases.
void amsgrad_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AmsgradState& state,
                  double lr, double beta1, double beta2, double eps);

struct BfgsResult {
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  std::vector<double> accepted_values;  // non-increasing
  int iterations = 0;
  bool line_search_failed = false;
  long evaluations = 0;
};

/// BFGS with a strong-Wolfe line search. The initial inverse Hessian is the
/// identity scaled so the first full step has norm initial_step_norm. The
/// accepted-value sequence is non-increasing; on line-search failure the
/// best-seen point is returned with the failure flag set.
BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& value_fn,
                         const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& value_grad_fn,
                         Eigen::VectorXd x0, int max_iters, double initial_step_norm);

struct SynthesisResult {
  TrainableParameters params;
  std::vector<CostReport> cost_history;  // all attempts, in order
  double final_cost = 0.0;
  bool converged = false;
  int restarts_used = 0;
};

/// Runs the full schedule against a system: seeded MLP, AMSGrad, BFGS, with
/// re-seeded restarts until the cost target is met. Deterministic for fixed
/// (system, cfg, schedule) — the restart seeds are schedule.seed + attempt.
SynthesisResult synthesize(const ControlSystem& system, const CostConfig& cost_cfg,
                           const TrainSchedule& schedule, const SolverConfig& solver);

}  // namespace qsmooth

#endif  // QSMOOTH_OPTIMIZER_HPP
