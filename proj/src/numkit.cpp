// SPDX-License-Identifier: Apache-2.0

#include "mor/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace mor
{

void require_finite(const Matrix &a, const char *what)
{
  if (!a.allFinite())
  {
    throw DomainError(std::string(what) + ": non-finite entry");
  }
}

void require_finite(const Vector &v, const char *what)
{
  if (!v.allFinite())
  {
    throw DomainError(std::string(what) + ": non-finite entry");
  }
}

SvdResult svd(const Matrix &a)
{
  if (a.size() == 0)
  {
    throw DomainError("svd: empty matrix");
  }
  require_finite(a, "svd");
  Eigen::JacobiSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success)
  {
    throw ConvergenceError("svd: Jacobi sweeps did not converge", 0.0);
  }
  SvdResult out{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  const double err =
      (a - out.left_vectors * out.singular_values.asDiagonal() *
               out.right_vectors.transpose())
          .norm();
  if (err > 1e-10 * a.norm())
  {
    throw ConvergenceError("svd: reconstruction check failed", err);
  }
  return out;
}

SymEigResult sym_eig(const Matrix &c)
{
  if (c.rows() != c.cols() || c.rows() == 0)
  {
    throw DomainError("sym_eig: matrix must be square and nonempty");
  }
  require_finite(c, "sym_eig");
  const double scale = c.cwiseAbs().maxCoeff();
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
  {
    throw DomainError("sym_eig: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> dec(c);
  if (dec.info() != Eigen::Success)
  {
    throw ConvergenceError("sym_eig: eigensolver did not converge", 0.0);
  }
  const Index n = c.rows();
  // Eigen returns ascending order; walk it backwards, then stable-sort so
  // that exact ties keep that order.
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::reverse(order.begin(), order.end());
  const Vector &vals = dec.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return vals(i) > vals(j); });
  SymEigResult out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k)
  {
    out.eigenvalues(k) = vals(order[k]);
    out.eigenvectors.col(k) = dec.eigenvectors().col(order[k]);
  }
  return out;
}

Vector solve(const Matrix &a, const Vector &b)
{
  if (a.rows() != a.cols() || a.rows() != b.size())
  {
    throw DomainError("solve: dimension mismatch");
  }
  require_finite(a, "solve");
  require_finite(b, "solve");
  Eigen::PartialPivLU<Matrix> lu(a);
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double largest = pivots.maxCoeff();
  if (largest == 0.0 || pivots.minCoeff() < 1e-13 * largest)
  {
    throw SingularMatrixError("solve: matrix is numerically singular");
  }
  return lu.solve(b);
}

namespace
{

template <typename Gram>
std::optional<Vector> orthonormalize_impl(const Vector &v, const Matrix &basis,
                                          const Gram &gram)
{
  if (gram.rows() != v.size() || gram.cols() != v.size() ||
      (basis.cols() > 0 && basis.rows() != v.size()))
  {
    throw DomainError("orthonormalize: dimension mismatch");
  }
  const double input_norm = std::sqrt(std::max(0.0, v.dot(gram * v)));
  if (input_norm == 0.0)
  {
    return std::nullopt;
  }
  Vector w = v;
  for (int pass = 0; pass < 2; ++pass)
  {
    for (Index j = 0; j < basis.cols(); ++j)
    {
      const Vector gcol = gram * basis.col(j);
      w -= w.dot(gcol) * basis.col(j);
    }
  }
  const double norm = std::sqrt(std::max(0.0, w.dot(gram * w)));
  if (norm < kDeflationThreshold * input_norm)
  {
    return std::nullopt;
  }
  return Vector(w / norm);
}

}  // namespace

std::optional<Vector> orthonormalize(const Vector &v, const Matrix &basis,
                                     const Matrix &gram)
{
  return orthonormalize_impl(v, basis, gram);
}

std::optional<Vector> orthonormalize(const Vector &v, const Matrix &basis,
                                     const SparseMatrix &gram)
{
  return orthonormalize_impl(v, basis, gram);
}

}  // namespace mor
