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

#include "qsmooth/neural_pulse.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qsmooth {

int Mlp::parameter_count() const {
  int count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += static_cast<int>(weights[l].size() + biases[l].size());
  }
  return count;
}

Eigen::VectorXd Mlp::forward(double x) const {
  Eigen::VectorXd a(1);
  a[0] = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::VectorXd z = weights[l] * a + biases[l];
    if (l + 1 < weights.size()) z = z.array().tanh();
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd Mlp::forward_cached(double x,
                                    std::vector<Eigen::VectorXd>& activations) const {
  activations.resize(weights.size() + 1);
  activations[0].resize(1);
  activations[0][0] = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::VectorXd z = weights[l] * activations[l] + biases[l];
    if (l + 1 < weights.size()) z = z.array().tanh();
    activations[l + 1] = std::move(z);
  }
  return activations.back();
}

void Mlp::backward(const std::vector<Eigen::VectorXd>& activations,
                   const Eigen::VectorXd& grad_out, double* flat_grad) const {
  const int layers = layer_count();
  // Offsets of each layer's block in the flat layout.
  std::vector<int> offset(layers);
  int pos = 0;
  for (int l = 0; l < layers; ++l) {
    offset[l] = pos;
    pos += static_cast<int>(weights[l].size() + biases[l].size());
  }
  Eigen::VectorXd delta = grad_out;  // dC/dz for the current layer
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::VectorXd& a_in = activations[l];
    double* wg = flat_grad + offset[l];
    double* bg = wg + weights[l].size();
    const int rows = static_cast<int>(weights[l].rows());
    const int cols = static_cast<int>(weights[l].cols());
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) wg[r * cols + c] += delta[r] * a_in[c];
      bg[r] += delta[r];
    }
    if (l > 0) {
      // a_in = tanh(z_{l-1}); d tanh = 1 - a^2.
      Eigen::VectorXd prev = weights[l].transpose() * delta;
      delta = prev.cwiseProduct((1.0 - a_in.array().square()).matrix());
    }
  }
}

void Mlp::copy_to_flat(double* dst) const {
  int pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const int rows = static_cast<int>(weights[l].rows());
    const int cols = static_cast<int>(weights[l].cols());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) dst[pos++] = weights[l](r, c);
    for (int r = 0; r < rows; ++r) dst[pos++] = biases[l][r];
  }
}

void Mlp::copy_from_flat(const double* src) {
  int pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const int rows = static_cast<int>(weights[l].rows());
    const int cols = static_cast<int>(weights[l].cols());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) weights[l](r, c) = src[pos++];
    for (int r = 0; r < rows; ++r) biases[l][r] = src[pos++];
  }
}

namespace {

// Uniform in [-1, 1) from raw generator words; avoids the
// implementation-defined std::uniform_real_distribution stream.
double symmetric_uniform(std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  return 2.0 * u - 1.0;
}

}  // namespace

Mlp mlp_new(const std::vector<int>& hidden_sizes, int out_dim, std::uint64_t seed) {
  if (out_dim < 1) throw std::invalid_argument("mlp_new: out_dim must be >= 1");
  for (int h : hidden_sizes) {
    if (h < 1) throw std::invalid_argument("mlp_new: hidden sizes must be >= 1");
  }
  std::vector<int> dims;
  dims.push_back(1);
  dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
  dims.push_back(out_dim);

  std::mt19937_64 rng(seed);
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = limit * symmetric_uniform(rng);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return mlp;
}

double TrainableParameters::alpha() const { return std::exp(log_alpha); }

Eigen::VectorXd TrainableParameters::pulse(double t, double total_time) const {
  return mlp.forward(2.0 * t / total_time - 1.0);
}

void TrainableParameters::copy_to_flat(Eigen::VectorXd& dst) const {
  dst.resize(parameter_count());
  mlp.copy_to_flat(dst.data());
  dst[dst.size() - 1] = log_alpha;
}

void TrainableParameters::copy_from_flat(const Eigen::VectorXd& src) {
  if (src.size() != parameter_count()) {
    throw std::invalid_argument("copy_from_flat: size mismatch");
  }
  mlp.copy_from_flat(src.data());
  log_alpha = src[src.size() - 1];
}

void write_parameters(const TrainableParameters& params, std::ostream& out) {
  out << "qsmooth-params v1\n";
  out << "layers";
  out << " " << params.mlp.input_dim();
  for (const auto& w : params.mlp.weights) out << " " << w.rows();
  out << "\n";
  out << "seed " << params.seed << "\n";
  out << std::hexfloat;
  out << "log_alpha " << params.log_alpha << "\n";
  Eigen::VectorXd flat(params.mlp.parameter_count());
  params.mlp.copy_to_flat(flat.data());
  out << "values " << flat.size() << "\n";
  for (Eigen::Index i = 0; i < flat.size(); ++i) out << flat[i] << "\n";
  out << std::defaultfloat;
}

TrainableParameters read_parameters(std::istream& in) {
  std::string line, word;
  if (!std::getline(in, line) || line != "qsmooth-params v1") {
    throw std::runtime_error("parameter file: bad magic");
  }
  if (!std::getline(in, line)) throw std::runtime_error("parameter file: truncated");
  std::istringstream sizes(line);
  sizes >> word;
  if (word != "layers") throw std::runtime_error("parameter file: expected layer sizes");
  std::vector<int> dims;
  int d;
  while (sizes >> d) dims.push_back(d);
  if (dims.size() < 2) throw std::runtime_error("parameter file: too few layers");

  TrainableParameters params;
  in >> word >> params.seed;
  if (word != "seed") throw std::runtime_error("parameter file: expected seed");
  std::string hex;
  in >> word >> hex;
  if (word != "log_alpha") throw std::runtime_error("parameter file: expected log_alpha");
  params.log_alpha = std::strtod(hex.c_str(), nullptr);

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    params.mlp.weights.emplace_back(Eigen::MatrixXd::Zero(dims[l + 1], dims[l]));
    params.mlp.biases.emplace_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  Eigen::Index count;
  in >> word >> count;
  if (word != "values" || count != params.mlp.parameter_count()) {
    throw std::runtime_error("parameter file: bad value count");
  }
  Eigen::VectorXd flat(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    in >> hex;
    if (!in) throw std::runtime_error("parameter file: truncated values");
    flat[i] = std::strtod(hex.c_str(), nullptr);
  }
  params.mlp.copy_from_flat(flat.data());
  return params;
}

void save_parameters(const TrainableParameters& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_parameters(params, out);
}

TrainableParameters load_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_parameters(in);
}

}  // namespace qsmooth
