// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_NUMKIT_HPP
#define MOR_NUMKIT_HPP

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mor
{

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Error hierarchy shared by every module.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error
{
public:
  using Error::Error;
};

class SingularMatrixError : public Error
{
public:
  using Error::Error;
};

class ConvergenceError : public Error
{
public:
  ConvergenceError(const std::string &what, double last_residual)
    : Error(what), last_residual_(last_residual)
  {
  }
  double last_residual() const { return last_residual_; }

private:
  double last_residual_;
};

struct SvdResult
{
  Matrix left_vectors;      // orthonormal columns
  Vector singular_values;   // descending, non-negative
  Matrix right_vectors;     // orthonormal columns
};

struct SymEigResult
{
  Vector eigenvalues;  // descending
  Matrix eigenvectors; // columns, orthonormal
};

// Throws DomainError if any entry is NaN or Inf.
void require_finite(const Matrix &a, const char *what);
void require_finite(const Vector &v, const char *what);

// Thin SVD a = U diag(s) Z^T. The reconstruction is checked before returning.
SvdResult svd(const Matrix &a);

// Symmetric eigendecomposition with eigenvalues sorted descending. Equal
// eigenvalues keep the order in which the underlying solver produced them.
SymEigResult sym_eig(const Matrix &c);

// Dense LU solve with partial pivoting. Throws SingularMatrixError when a
// pivot falls below 1e-13 times the largest pivot.
Vector solve(const Matrix &a, const Vector &b);

// Gram-Schmidt of v against the gram-orthonormal columns of basis (two
// passes). Returns the normalized remainder, or nullopt when the remainder
// has gram norm below 1e-10 times the input's gram norm.
std::optional<Vector> orthonormalize(const Vector &v, const Matrix &basis,
                                     const Matrix &gram);
std::optional<Vector> orthonormalize(const Vector &v, const Matrix &basis,
                                     const SparseMatrix &gram);

inline constexpr double kDeflationThreshold = 1e-10;

}  // namespace mor

#endif  // MOR_NUMKIT_HPP
