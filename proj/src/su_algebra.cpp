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

#include "qsmooth/su_algebra.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace qsmooth {

double frobenius_norm(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("frobenius_norm: matrix must be square");
  }
  return a.norm();
}

double hermiticity_error(const Matrix& a) {
  return (a - a.adjoint()).norm();
}

double real_inner(const Matrix& a, const Matrix& b) {
  return a.conjugate().cwiseProduct(b).sum().real();
}

double unitarity_error(const Matrix& a) {
  return (a.adjoint() * a - Matrix::Identity(a.cols(), a.cols())).norm();
}

Matrix matrix_exp(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("matrix_exp: matrix must be square");
  }
  return a.exp();
}

Matrix pauli(int index) {
  Matrix m(2, 2);
  const Complex i(0.0, 1.0);
  switch (index) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -i, i, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli: index must be in 0..3");
  }
  return m;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix pauli_string(const std::string& labels) {
  if (labels.empty()) throw std::invalid_argument("pauli_string: empty label");
  auto index_of = [](char c) {
    switch (c) {
      case 'I': case 'i': return 0;
      case 'X': case 'x': return 1;
      case 'Y': case 'y': return 2;
      case 'Z': case 'z': return 3;
      default: throw std::invalid_argument("pauli_string: labels must be in {I,X,Y,Z}");
    }
  };
  Matrix out = pauli(index_of(labels[0]));
  for (std::size_t k = 1; k < labels.size(); ++k) {
    out = kron(out, pauli(index_of(labels[k])));
  }
  return out;
}

namespace {

// Generalized Gell-Mann matrices rescaled so tr(L_i L_j) = n delta_ij.
// Standard construction: symmetric and antisymmetric off-diagonal pairs plus
// diagonal matrices, conventionally normalized to tr(L^2) = 2.
std::vector<Matrix> gell_mann_basis(int n) {
  std::vector<Matrix> out;
  const double rescale = std::sqrt(n / 2.0);
  const Complex i(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      Matrix sym = Matrix::Zero(n, n);
      sym(j, k) = 1.0;
      sym(k, j) = 1.0;
      out.push_back(rescale * sym);
      Matrix asym = Matrix::Zero(n, n);
      asym(j, k) = -i;
      asym(k, j) = i;
      out.push_back(rescale * asym);
    }
  }
  for (int l = 1; l < n; ++l) {
    Matrix diag = Matrix::Zero(n, n);
    const double norm = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int j = 0; j < l; ++j) diag(j, j) = norm;
    diag(l, l) = -l * norm;
    out.push_back(rescale * diag);
  }
  return out;
}

}  // namespace

GeneratorBasis generator_basis(int n) {
  if (n < 2) throw std::invalid_argument("generator_basis: dimension must be >= 2");
  GeneratorBasis basis;
  basis.n = n;
  int qubits = 0;
  for (int m = n; m > 1; m /= 2) {
    if (m % 2 != 0) { qubits = -1; break; }
    ++qubits;
  }
  if (qubits > 0) {
    // Pauli strings already satisfy tr(L_i L_j) = n delta_ij.
    const int count = n * n;
    for (int code = 1; code < count; ++code) {
      std::string labels(qubits, 'I');
      int c = code;
      for (int q = qubits - 1; q >= 0; --q) {
        labels[q] = "IXYZ"[c % 4];
        c /= 4;
      }
      basis.generators.push_back(pauli_string(labels));
    }
  } else {
    basis.generators = gell_mann_basis(n);
  }
  return basis;
}

SubspaceProjection SubspaceProjection::identity(Eigen::Index n) {
  SubspaceProjection proj;
  proj.logical_dim = n;
  proj.p = Matrix::Identity(n, n);
  return proj;
}

SubspaceProjection SubspaceProjection::levels(Eigen::Index n,
                                              const std::vector<Eigen::Index>& kept) {
  if (kept.empty() || static_cast<Eigen::Index>(kept.size()) > n) {
    throw std::invalid_argument("SubspaceProjection: bad level list");
  }
  SubspaceProjection proj;
  proj.logical_dim = static_cast<Eigen::Index>(kept.size());
  proj.p = Matrix::Zero(proj.logical_dim, n);
  for (Eigen::Index r = 0; r < proj.logical_dim; ++r) {
    if (kept[r] < 0 || kept[r] >= n) {
      throw std::invalid_argument("SubspaceProjection: level index out of range");
    }
    proj.p(r, kept[r]) = 1.0;
  }
  return proj;
}

Matrix project(const SubspaceProjection& proj, const Matrix& a, bool two_sided) {
  if (a.rows() != proj.p.cols() || a.cols() != proj.p.cols()) {
    throw std::invalid_argument("project: operator dimension does not match projection");
  }
  if (two_sided) return proj.p * a * proj.p.adjoint();
  return proj.p * a;
}

}  // namespace qsmooth
