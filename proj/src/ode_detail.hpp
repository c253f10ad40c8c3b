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

#ifndef QSMOOTH_ODE_DETAIL_HPP
#define QSMOOTH_ODE_DETAIL_HPP

#include <algorithm>
#include <cmath>

#include "qsmooth/propagation.hpp"

namespace qsmooth::detail {

// Dormand-Prince 5(4) tableau. The propagated solution uses the b row
// (stages 1..6); stage 7 (FSAL) only feeds the embedded error estimate.
inline constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double kA2[1] = {1.0 / 5};
inline constexpr double kA3[2] = {3.0 / 40, 9.0 / 40};
inline constexpr double kA4[3] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
inline constexpr double kA5[4] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                                  -212.0 / 729};
inline constexpr double kA6[5] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                  -5103.0 / 18656};
inline constexpr const double* kStageCoeffs[6] = {nullptr, kA2, kA3, kA4, kA5, kA6};
inline constexpr double kB[6] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                                 -2187.0 / 6784, 11.0 / 84};
inline constexpr double kErr[7] = {71.0 / 57600,      0.0,        -71.0 / 16695,
                                   71.0 / 1920,       -17253.0 / 339200,
                                   22.0 / 525,        -1.0 / 40};

// --- state operations on flat complex vectors -------------------------------

inline void state_set_zero_like(Vector& x, const Vector& shape) {
  x = Vector::Zero(shape.size());
}

inline void state_assign(Vector& x, const Vector& src) { x = src; }

inline void state_add_scaled(Vector& y, const Vector& k, double c) { y += c * k; }

inline bool state_all_finite(const Vector& y) { return y.allFinite(); }

inline void state_error_accumulate(const Vector& err, const Vector& y0, const Vector& y1,
                                   double atol, double rtol, double& sum, long& count) {
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = std::abs(err[i]) / sc;
    sum += r * r;
    ++count;
  }
}

inline void state_scaled_rms_accumulate(const Vector& y, const Vector& ref, double atol,
                                        double rtol, double& sum, long& count) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = atol + rtol * std::abs(ref[i]);
    const double r = std::abs(y[i]) / sc;
    sum += r * r;
    ++count;
  }
}

// --- state operations on MagnusState ----------------------------------------

template <class F>
void magnus_for_each(MagnusState& s, F&& f) {
  f(s.u);
  for (auto& m : s.e1) f(m);
  for (auto& m : s.e2) f(m);
  for (auto& m : s.e3) f(m);
}

template <class F>
void magnus_zip(MagnusState& a, const MagnusState& b, F&& f) {
  f(a.u, b.u);
  for (std::size_t i = 0; i < a.e1.size(); ++i) f(a.e1[i], b.e1[i]);
  for (std::size_t i = 0; i < a.e2.size(); ++i) f(a.e2[i], b.e2[i]);
  for (std::size_t i = 0; i < a.e3.size(); ++i) f(a.e3[i], b.e3[i]);
}

template <class F>
void magnus_zip3(const MagnusState& a, const MagnusState& b, const MagnusState& c, F&& f) {
  f(a.u, b.u, c.u);
  for (std::size_t i = 0; i < a.e1.size(); ++i) f(a.e1[i], b.e1[i], c.e1[i]);
  for (std::size_t i = 0; i < a.e2.size(); ++i) f(a.e2[i], b.e2[i], c.e2[i]);
  for (std::size_t i = 0; i < a.e3.size(); ++i) f(a.e3[i], b.e3[i], c.e3[i]);
}

inline void state_set_zero_like(MagnusState& x, const MagnusState& shape) {
  x.u = Matrix::Zero(shape.u.rows(), shape.u.cols());
  auto zero_like = [](std::vector<Matrix>& dst, const std::vector<Matrix>& src) {
    dst.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
      dst[i] = Matrix::Zero(src[i].rows(), src[i].cols());
  };
  zero_like(x.e1, shape.e1);
  zero_like(x.e2, shape.e2);
  zero_like(x.e3, shape.e3);
}

inline void state_assign(MagnusState& x, const MagnusState& src) { x = src; }

inline void state_add_scaled(MagnusState& y, const MagnusState& k, double c) {
  magnus_zip(y, k, [c](Matrix& a, const Matrix& b) { a += c * b; });
}

inline bool state_all_finite(const MagnusState& y) {
  bool ok = y.u.allFinite();
  for (const auto& m : y.e1) ok = ok && m.allFinite();
  for (const auto& m : y.e2) ok = ok && m.allFinite();
  for (const auto& m : y.e3) ok = ok && m.allFinite();
  return ok;
}

inline void matrix_error_accumulate(const Matrix& err, const Matrix& y0, const Matrix& y1,
                                    double atol, double rtol, double& sum, long& count) {
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc =
        atol + rtol * std::max(std::abs(*(y0.data() + i)), std::abs(*(y1.data() + i)));
    const double r = std::abs(*(err.data() + i)) / sc;
    sum += r * r;
    ++count;
  }
}

inline void state_error_accumulate(const MagnusState& err, const MagnusState& y0,
                                   const MagnusState& y1, double atol, double rtol,
                                   double& sum, long& count) {
  magnus_zip3(err, y0, y1, [&](const Matrix& e, const Matrix& a, const Matrix& b) {
    matrix_error_accumulate(e, a, b, atol, rtol, sum, count);
  });
}

inline void state_scaled_rms_accumulate(const MagnusState& y, const MagnusState& ref,
                                        double atol, double rtol, double& sum,
                                        long& count) {
  magnus_zip3(y, ref, ref, [&](const Matrix& a, const Matrix& r, const Matrix&) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double sc = atol + rtol * std::abs(*(r.data() + i));
      const double v = std::abs(*(a.data() + i)) / sc;
      sum += v * v;
      ++count;
    }
  });
}

// --- adaptive driver ---------------------------------------------------------

template <class State>
double scaled_rms(const State& y, const State& ref, double atol, double rtol) {
  double sum = 0;
  long count = 0;
  state_scaled_rms_accumulate(y, ref, atol, rtol, sum, count);
  return count > 0 ? std::sqrt(sum / count) : 0.0;
}

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, double atol,
                  double rtol) {
  double sum = 0;
  long count = 0;
  state_error_accumulate(err, y0, y1, atol, rtol, sum, count);
  return count > 0 ? std::sqrt(sum / count) : 0.0;
}

// Classic starting-step heuristic from the derivative magnitudes at t0.
template <class State, class Rhs>
double initial_step(const Rhs& rhs, double t0, double span, const State& y0,
                    const State& f0, const SolverConfig& cfg, long& evals) {
  const double d0 = scaled_rms(y0, y0, cfg.abs_tol, cfg.rel_tol);
  const double d1 = scaled_rms(f0, y0, cfg.abs_tol, cfg.rel_tol);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * (d0 / d1);
  h0 = std::min(h0, span);
  State y1, f1;
  state_set_zero_like(y1, y0);
  state_assign(y1, y0);
  state_add_scaled(y1, f0, h0);
  state_set_zero_like(f1, y0);
  rhs(t0 + h0, y1, f1);
  ++evals;
  state_add_scaled(f1, f0, -1.0);
  const double d2 = scaled_rms(f1, y0, cfg.abs_tol, cfg.rel_tol) / h0;
  double h1;
  if (std::max(d1, d2) <= 1e-15) {
    h1 = std::max(1e-6 * span, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  }
  return std::min({100.0 * h0, h1, span});
}

// One accepted/rejected step of the embedded pair. On entry k[0] must hold
// f(t, y). Fills k[1..6], ynew and the error estimate.
template <class State, class Rhs>
void dopri5_stages(const Rhs& rhs, double t, double h, const State& y, State* k,
                   State& ytmp, State& ynew, State& yerr, long& evals) {
  for (int s = 1; s < 6; ++s) {
    state_assign(ytmp, y);
    for (int j = 0; j < s; ++j) state_add_scaled(ytmp, k[j], h * kStageCoeffs[s][j]);
    rhs(t + kC[s] * h, ytmp, k[s]);
    ++evals;
  }
  state_assign(ynew, y);
  for (int j = 0; j < 6; ++j) {
    if (kB[j] != 0.0) state_add_scaled(ynew, k[j], h * kB[j]);
  }
  rhs(t + h, ynew, k[6]);  // FSAL stage
  ++evals;
  state_set_zero_like(yerr, y);
  for (int j = 0; j < 7; ++j) {
    if (kErr[j] != 0.0) state_add_scaled(yerr, k[j], h * kErr[j]);
  }
}

// Integrates y from t0 to t1. observe(t, h, y_at_t) fires once per accepted
// step before the state advances. Deterministic for fixed inputs.
template <class State, class Rhs, class Observer>
void dopri5_integrate(const Rhs& rhs, State& y, double t0, double t1,
                      const SolverConfig& cfg, Observer&& observe, long& evals) {
  const double span = t1 - t0;
  State k[7], ytmp, ynew, yerr;
  for (auto& s : k) state_set_zero_like(s, y);
  state_set_zero_like(ytmp, y);
  state_set_zero_like(ynew, y);
  state_set_zero_like(yerr, y);

  rhs(t0, y, k[0]);
  ++evals;
  double t = t0;
  double h = initial_step(rhs, t0, span, y, k[0], cfg, evals);
  long attempts = 0;
  bool last_rejected = false;
  while (t < t1) {
    if (++attempts > cfg.max_steps) {
      throw SolverError(SolverError::Kind::divergence,
                        "dopri5: step budget exhausted before reaching final time");
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      throw SolverError(SolverError::Kind::numeric, "dopri5: step size underflow");
    }
    const bool final_step = (t + h >= t1 - 1e-14 * span);
    if (final_step) h = t1 - t;

    dopri5_stages(rhs, t, h, y, k, ytmp, ynew, yerr, evals);
    const double err = error_norm(yerr, y, ynew, cfg.abs_tol, cfg.rel_tol);
    if (!std::isfinite(err) || !state_all_finite(ynew)) {
      h *= 0.25;
      last_rejected = true;
      continue;
    }
    if (err <= 1.0) {
      observe(t, h, y);
      t = final_step ? t1 : t + h;
      std::swap(y, ynew);
      std::swap(k[0], k[6]);
      double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h *= fac;
      last_rejected = false;
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
      last_rejected = true;
    }
  }
}

// Replays a recorded step sequence without error control (frozen grid).
template <class State, class Rhs, class Observer>
void dopri5_replay(const Rhs& rhs, State& y, const std::vector<double>& times,
                   const std::vector<double>& hs, Observer&& observe) {
  State k[7], ytmp, ynew, yerr;
  for (auto& s : k) state_set_zero_like(s, y);
  state_set_zero_like(ytmp, y);
  state_set_zero_like(ynew, y);
  state_set_zero_like(yerr, y);
  long evals = 0;
  for (std::size_t n = 0; n < hs.size(); ++n) {
    rhs(times[n], y, k[0]);
    observe(times[n], hs[n], y);
    dopri5_stages(rhs, times[n], hs[n], y, k, ytmp, ynew, yerr, evals);
    std::swap(y, ynew);
  }
  if (!state_all_finite(y)) {
    throw SolverError(SolverError::Kind::numeric, "dopri5: non-finite state in replay");
  }
}

}  // namespace qsmooth::detail

#endif  // QSMOOTH_ODE_DETAIL_HPP
