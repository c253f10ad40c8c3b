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

#include "qsmooth/propagation.hpp"

#include <cmath>

#include "ode_detail.hpp"

namespace qsmooth {

MagnusState MagnusState::initial(int n, int channels, int order) {
  MagnusState s;
  s.u = Matrix::Identity(n, n);
  s.e1.assign(channels, Matrix::Zero(n, n));
  if (order >= 2) s.e2.assign(channels * channels, Matrix::Zero(n, n));
  if (order >= 3) s.e3.assign(channels * channels * channels, Matrix::Zero(n, n));
  return s;
}

void CoupledRhs::operator()(double t, const MagnusState& y, MagnusState& dy) const {
  const ControlSystem& sys = *system;
  const double a = params->alpha();
  const Eigen::VectorXd p = params->pulse(t, sys.duration);
  const Matrix h = sys.hamiltonian(t, p);
  dy.u.noalias() = Complex(0.0, -a) * (h * y.u);

  const int channels = static_cast<int>(sys.noise.size());
  for (int i = 0; i < channels; ++i) {
    const double chi = sys.noise[i].coupling->value(t, p);
    // dE_i = a chi U† L_i U
    dy.e1[i].noalias() = (a * chi) * (y.u.adjoint() * (sys.noise[i].generator * y.u));
  }
  if (order >= 2) {
    for (int i = 0; i < channels; ++i) {
      for (int j = 0; j < channels; ++j) {
        dy.e2[i * channels + j].noalias() =
            0.5 * (dy.e1[i] * y.e1[j] - y.e1[j] * dy.e1[i]);
      }
    }
  }
  if (order >= 3) {
    for (int i = 0; i < channels; ++i) {
      const Matrix& dei = dy.e1[i];
      for (int j = 0; j < channels; ++j) {
        for (int k = 0; k < channels; ++k) {
          dy.e3[(i * channels + j) * channels + k].noalias() =
              (y.e2[j * channels + k] * dei - y.e1[j] * dei * y.e1[k] -
               y.e1[k] * dei * y.e1[j] + dei * y.e2[k * channels + j]) /
              3.0;
        }
      }
    }
  }
}

void CoupledRhs::vjp(double t, const MagnusState& y, const MagnusState& kbar,
                     MagnusState& ybar, Eigen::VectorXd& mlp_grad,
                     double& alpha_bar) const {
  const ControlSystem& sys = *system;
  const double a = params->alpha();
  const int n = sys.n;
  const int channels = static_cast<int>(sys.noise.size());

  std::vector<Eigen::VectorXd> activations;
  const Eigen::VectorXd p =
      params->mlp.forward_cached(2.0 * t / sys.duration - 1.0, activations);
  Eigen::VectorXd p_bar = Eigen::VectorXd::Zero(p.size());

  const Matrix h = sys.hamiltonian(t, p);

  // Recompute the toggled channel operators M_i = chi_i U† L_i U.
  std::vector<Matrix> m(channels);
  std::vector<double> chi(channels);
  for (int i = 0; i < channels; ++i) {
    chi[i] = sys.noise[i].coupling->value(t, p);
    m[i].noalias() = chi[i] * (y.u.adjoint() * (sys.noise[i].generator * y.u));
  }
  std::vector<Matrix> mbar(channels, Matrix::Zero(n, n));

  // Second-order rows first: they read M_i and E_j.
  if (order >= 2 && !kbar.e2.empty()) {
    for (int i = 0; i < channels; ++i) {
      for (int j = 0; j < channels; ++j) {
        const Matrix& kb = kbar.e2[i * channels + j];
        const Matrix comm = m[i] * y.e1[j] - y.e1[j] * m[i];
        alpha_bar += 0.5 * real_inner(kb, comm);
        const Matrix madj = m[i].adjoint();
        ybar.e1[j] += (0.5 * a) * (madj * kb - kb * madj);
        const Matrix eadj = y.e1[j].adjoint();
        mbar[i] += (0.5 * a) * (kb * eadj - eadj * kb);
      }
    }
  }

  // First-order rows: dE_i = a M_i.
  for (int i = 0; i < channels; ++i) {
    alpha_bar += real_inner(kbar.e1[i], m[i]);
    mbar[i] += a * kbar.e1[i];
  }

  // Propagator row: dU = -i a H U.
  alpha_bar += real_inner(kbar.u, Complex(0.0, -1.0) * (h * y.u));
  ybar.u.noalias() += Complex(0.0, a) * (h.adjoint() * kbar.u);
  const Matrix hbar = Complex(0.0, a) * (kbar.u * y.u.adjoint());
  for (const auto& control : sys.controls) {
    if (control.field->constant_in_p()) continue;
    const double w = real_inner(hbar, control.generator);
    control.field->accumulate_dp(t, p, w, p_bar);
  }

  // Resolve the M_i adjoints into U and chi contributions.
  for (int i = 0; i < channels; ++i) {
    const Matrix& nb = mbar[i];
    if (!sys.noise[i].coupling->constant_in_p()) {
      const Matrix toggled = y.u.adjoint() * (sys.noise[i].generator * y.u);
      sys.noise[i].coupling->accumulate_dp(t, p, real_inner(nb, toggled), p_bar);
    }
    ybar.u.noalias() += chi[i] * (sys.noise[i].generator * (y.u * (nb + nb.adjoint())));
  }

  if (!p_bar.isZero(0.0)) params->mlp.backward(activations, p_bar, mlp_grad.data());
}

PropagationResult propagate(const ControlSystem& system, const TrainableParameters& params,
                            const SolverConfig& cfg, bool record_trace) {
  if (cfg.abs_tol <= 0 || cfg.rel_tol <= 0) {
    throw std::invalid_argument("propagate: tolerances must be positive");
  }
  if (static_cast<int>(params.mlp.output_dim()) < system.pulse_dim) {
    throw std::invalid_argument("propagate: MLP output narrower than the system's p");
  }
  PropagationResult result;
  CoupledRhs rhs{&system, &params, cfg.order};
  MagnusState y =
      MagnusState::initial(system.n, static_cast<int>(system.noise.size()), cfg.order);
  auto observe = [&](double t, double h, const MagnusState& state) {
    result.trace.times.push_back(t);
    result.trace.steps.push_back(h);
    if (record_trace) result.trace.states.push_back(state);
  };
  detail::dopri5_integrate(rhs, y, 0.0, system.duration, cfg, observe,
                           result.rhs_evaluations);
  result.trace.times.push_back(system.duration);
  if (record_trace) result.trace.states.push_back(y);
  result.state = std::move(y);
  return result;
}

MagnusState propagate_on_trace(const ControlSystem& system,
                               const TrainableParameters& params, const OdeTrace& trace,
                               int order) {
  CoupledRhs rhs{&system, &params, order};
  MagnusState y =
      MagnusState::initial(system.n, static_cast<int>(system.noise.size()), order);
  detail::dopri5_replay(rhs, y, trace.times, trace.steps,
                        [](double, double, const MagnusState&) {});
  return y;
}

PulseView make_pulse_view(const ControlSystem& system, const TrainableParameters& params) {
  PulseView view;
  view.duration = system.duration;
  view.alpha = params.alpha();
  const double total = system.duration;
  for (const auto& control : system.controls) {
    auto field = control.field;
    auto mlp = params.mlp;  // by-value copy keeps the view self-contained
    view.control_fields.push_back([field, mlp, total](double t) {
      return field->value(t, mlp.forward(2.0 * t / total - 1.0));
    });
  }
  for (const auto& channel : system.noise) {
    auto coupling = channel.coupling;
    auto mlp = params.mlp;
    view.noise_couplings.push_back([coupling, mlp, total](double t) {
      return coupling->value(t, mlp.forward(2.0 * t / total - 1.0));
    });
  }
  return view;
}

PulseView make_pulse_view(const ControlSystem& system,
                          std::vector<std::function<double(double)>> fields) {
  if (fields.size() != system.controls.size()) {
    throw std::invalid_argument("make_pulse_view: one field function per control required");
  }
  PulseView view;
  view.duration = system.duration;
  view.alpha = 1.0;
  view.control_fields = std::move(fields);
  const Eigen::VectorXd p_zero = Eigen::VectorXd::Zero(std::max(system.pulse_dim, 1));
  for (const auto& channel : system.noise) {
    auto coupling = channel.coupling;
    view.noise_couplings.push_back(
        [coupling, p_zero](double t) { return coupling->value(t, p_zero); });
  }
  return view;
}

namespace {

Matrix assemble_hamiltonian(const ControlSystem& system, const PulseView& pulse,
                            const std::vector<double>& eps, double t) {
  Matrix h = system.drift;
  for (std::size_t c = 0; c < system.controls.size(); ++c) {
    h += pulse.control_fields[c](t) * system.controls[c].generator;
  }
  for (std::size_t i = 0; i < system.noise.size(); ++i) {
    if (eps[i] != 0.0) {
      h += eps[i] * pulse.noise_couplings[i](t) * system.noise[i].generator;
    }
  }
  return h;
}

}  // namespace

Matrix full_noisy_propagate(const ControlSystem& system, const PulseView& pulse,
                            const std::vector<double>& eps, const SolverConfig& cfg) {
  if (eps.size() != system.noise.size()) {
    throw std::invalid_argument("full_noisy_propagate: eps size mismatch");
  }
  const int n = system.n;
  const double a = pulse.alpha;
  OdeRhs rhs = [&](double t, const Vector& y, Vector& dy) {
    const Eigen::Map<const Matrix> u(y.data(), n, n);
    Eigen::Map<Matrix> du(dy.data(), n, n);
    const Matrix h = assemble_hamiltonian(system, pulse, eps, t);
    du.noalias() = Complex(0.0, -a) * (h * u);
  };
  Vector y0(n * n);
  Eigen::Map<Matrix>(y0.data(), n, n) = Matrix::Identity(n, n);
  Vector yT = integrate_adaptive(rhs, std::move(y0), 0.0, system.duration, cfg);
  return Eigen::Map<const Matrix>(yT.data(), n, n);
}

Matrix full_noisy_propagate(const ControlSystem& system, const TrainableParameters& params,
                            const std::vector<double>& eps, const SolverConfig& cfg) {
  return full_noisy_propagate(system, make_pulse_view(system, params), eps, cfg);
}

std::pair<Matrix, Matrix> toggled_noisy_propagate(const ControlSystem& system,
                                                  const PulseView& pulse,
                                                  const std::vector<double>& eps,
                                                  const SolverConfig& cfg) {
  if (eps.size() != system.noise.size()) {
    throw std::invalid_argument("toggled_noisy_propagate: eps size mismatch");
  }
  const int n = system.n;
  const double a = pulse.alpha;
  // State = [U_c | W]; i dW/dt = a U_c† H_eps U_c W keeps ‖W - 1‖ of order eps
  // so tiny noise-induced deviations are resolved to relative precision.
  OdeRhs rhs = [&](double t, const Vector& y, Vector& dy) {
    const Eigen::Map<const Matrix> u(y.data(), n, n);
    const Eigen::Map<const Matrix> w(y.data() + n * n, n, n);
    Eigen::Map<Matrix> du(dy.data(), n, n);
    Eigen::Map<Matrix> dw(dy.data() + n * n, n, n);
    Matrix hc = system.drift;
    for (std::size_t c = 0; c < system.controls.size(); ++c) {
      hc += pulse.control_fields[c](t) * system.controls[c].generator;
    }
    Matrix heps = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < system.noise.size(); ++i) {
      if (eps[i] != 0.0) {
        heps += eps[i] * pulse.noise_couplings[i](t) * system.noise[i].generator;
      }
    }
    du.noalias() = Complex(0.0, -a) * (hc * u);
    dw.noalias() = Complex(0.0, -a) * (u.adjoint() * (heps * (u * w)));
  };
  Vector y0(2 * n * n);
  Eigen::Map<Matrix>(y0.data(), n, n) = Matrix::Identity(n, n);
  Eigen::Map<Matrix>(y0.data() + n * n, n, n) = Matrix::Identity(n, n);
  Vector yT = integrate_adaptive(rhs, std::move(y0), 0.0, system.duration, cfg);
  return {Eigen::Map<const Matrix>(yT.data(), n, n),
          Eigen::Map<const Matrix>(yT.data() + n * n, n, n)};
}

Vector integrate_adaptive(const OdeRhs& rhs, Vector y0, double t0, double t1,
                          const SolverConfig& cfg) {
  long evals = 0;
  auto wrapped = [&rhs](double t, const Vector& y, Vector& dy) {
    if (dy.size() != y.size()) dy.resize(y.size());
    rhs(t, y, dy);
  };
  detail::dopri5_integrate(wrapped, y0, t0, t1, cfg, [](double, double, const Vector&) {},
                           evals);
  return y0;
}

}  // namespace qsmooth
