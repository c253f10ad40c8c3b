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

#ifndef QSMOOTH_SU_ALGEBRA_HPP
#define QSMOOTH_SU_ALGEBRA_HPP

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qsmooth {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Dense complex kernel for small Hilbert spaces (n <= ~10). Everything here
/// is a pure function on immutable values and safe to share across threads.

/// ‖A‖ = sqrt(tr(A A†)), i.e. the Frobenius norm. Throws on non-square input.
double frobenius_norm(const Matrix& a);

/// ‖A − A†‖; zero for Hermitian matrices.
double hermiticity_error(const Matrix& a);

/// Re tr(a† b), the real inner product on complex matrices.
double real_inner(const Matrix& a, const Matrix& b);

/// ‖A†A − I‖; zero for unitary matrices.
double unitarity_error(const Matrix& a);

/// Matrix exponential exp(A) for square A, accurate to ~1e-12 relative for
/// ‖A‖ up to ~100 (scaling-and-squaring with Pade approximants).
Matrix matrix_exp(const Matrix& a);

/// The 2x2 Pauli matrices; index 0..3 = I, X, Y, Z.
Matrix pauli(int index);

/// Tensor product of Pauli matrices named by a string over {I,X,Y,Z},
/// e.g. "ZZ" -> sigma_z (x) sigma_z. Leftmost letter acts on the first qubit.
Matrix pauli_string(const std::string& labels);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Ordered basis of traceless Hermitian generators of su(n) normalized so
/// that tr(L_i L_j) = n * delta_ij.
///
/// For n = 2^k the basis is the set of Pauli strings (identity excluded),
/// so tensor-product Hamiltonians map onto single basis elements. For other
/// n a generalized Gell-Mann basis is used, rescaled to the same trace
/// normalization. Throws std::invalid_argument for n < 2.
struct GeneratorBasis {
  int n = 0;
  std::vector<Matrix> generators;  // n^2 - 1 entries
};
GeneratorBasis generator_basis(int n);

/// Row-selection map P from an n-dimensional space onto a D-dimensional
/// logical subspace, with P P† = I_D.
struct SubspaceProjection {
  Eigen::Index logical_dim = 0;  // D
  Matrix p;                      // D x n

  static SubspaceProjection identity(Eigen::Index n);
  static SubspaceProjection levels(Eigen::Index n, const std::vector<Eigen::Index>& kept);

  Eigen::Index full_dim() const { return p.cols(); }
};

/// P A P† (two-sided, D x D) or P A (single-sided, D x n).
Matrix project(const SubspaceProjection& proj, const Matrix& a, bool two_sided = true);

}  // namespace qsmooth

#endif  // QSMOOTH_SU_ALGEBRA_HPP
