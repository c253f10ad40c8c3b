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

#ifndef QSMOOTH_NEURAL_PULSE_HPP
#define QSMOOTH_NEURAL_PULSE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qsmooth {

/// Fully connected network t -> p(t), tanh activations on all layers except
/// the last (linear output). The input is the scalar normalized time
/// 2 t / T - 1, kept in [-1, 1] so the first tanh layer stays out of
/// saturation. Forward evaluation is pure.
struct Mlp {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int output_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  int parameter_count() const;

  Eigen::VectorXd forward(double x) const;

  /// Forward pass capturing per-layer activations (a[0] = input), for use by
  /// backward(). activations must outlive the backward call.
  Eigen::VectorXd forward_cached(double x, std::vector<Eigen::VectorXd>& activations) const;

  /// Backpropagates grad_out (dC/dp) through activations from forward_cached,
  /// accumulating dC/d(theta) into flat_grad (layout: W1 row-major, b1, W2,
  /// b2, ...). flat_grad must have at least parameter_count() entries.
  void backward(const std::vector<Eigen::VectorXd>& activations,
                const Eigen::VectorXd& grad_out, double* flat_grad) const;

  void copy_to_flat(double* dst) const;
  void copy_from_flat(const double* src);
};

/// Seeded Glorot-uniform initialization; identical seeds give identical
/// parameters (the uniform variates are generated from raw mt19937_64 words,
/// not std::uniform_real_distribution, so the stream is platform-stable).
Mlp mlp_new(const std::vector<int>& hidden_sizes, int out_dim, std::uint64_t seed);

/// MLP plus the trainable time-scale alpha = exp(log_alpha); the exponential
/// keeps alpha positive for any unconstrained log_alpha.
struct TrainableParameters {
  Mlp mlp;
  double log_alpha = 0.0;
  std::uint64_t seed = 0;

  double alpha() const;
  /// Total number of trainable scalars (MLP parameters + log_alpha).
  int parameter_count() const { return mlp.parameter_count() + 1; }

  /// p(t) with the time input normalized by the system duration T.
  Eigen::VectorXd pulse(double t, double total_time) const;

  void copy_to_flat(Eigen::VectorXd& dst) const;
  void copy_from_flat(const Eigen::VectorXd& src);
};

/// Text serialization with hexfloat values; round-trips bit-exactly.
void save_parameters(const TrainableParameters& params, const std::string& path);
TrainableParameters load_parameters(const std::string& path);
void write_parameters(const TrainableParameters& params, std::ostream& out);
TrainableParameters read_parameters(std::istream& in);

}  // namespace qsmooth

#endif  // QSMOOTH_NEURAL_PULSE_HPP
