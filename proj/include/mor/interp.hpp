// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_INTERP_HPP
#define MOR_INTERP_HPP

#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "mor/fom.hpp"

namespace mor
{

// F(i, j) = f(x_i; mu_j).
struct FunctionSamples
{
  Matrix values;
  Matrix points;                      // M x d, may be empty
  std::vector<Parameter> parameters;  // may be empty

  void validate() const;
};

enum class SelectionNorm
{
  two,
  infinity
};

struct EimBasis
{
  Matrix basis;                      // H_Q, M x Q
  std::vector<Index> magic_indices;  // i_Q
  Matrix interp_matrix;              // T(k, q) = H_Q(i_k, q)
  std::vector<double> error_history; // max column error after each append
  std::vector<Index> selected_parameter_indices;
  bool saturated = false;

  Index size() const { return basis.cols(); }
};

// Greedy EIM on a sample matrix. Stops when the error drops to tol or Q
// reaches n_max.
EimBasis eim_build(const FunctionSamples &samples, double tol, Index n_max,
                   SelectionNorm norm = SelectionNorm::infinity);

// Solves T a = values by forward substitution.
Vector eim_coefficients(const EimBasis &basis, const Vector &values_at_magic_points);
Vector eim_interpolate(const EimBasis &basis, const Vector &values_at_magic_points);

// max_i sum_k |(H_q T_q^-1)(i, k)| using the first q basis functions
// (q = 0 means all of them).
double lebesgue_constant(const EimBasis &basis, Index q = 0);

struct DeimBasis
{
  Matrix basis;                      // H_Q, orthonormal columns
  std::vector<Index> magic_indices;  // i_Q
  std::vector<double> error_history; // relative Frobenius error after each index
  Vector singular_values;            // of the snapshot matrix

  Index size() const { return basis.cols(); }
  // P^T H_Q
  Matrix sampled_basis() const;
};

DeimBasis deim_build(const Matrix &snapshots, double tol,
                     Index n_max = std::numeric_limits<Index>::max());
Vector deim_coefficients(const DeimBasis &basis, const Vector &sampled_values);
Vector deim_eval(const DeimBasis &basis, const Vector &sampled_values);

// DEIM over vectorized sparse operators. Vector entries follow the union
// sparsity pattern of the snapshots in column-major order.
struct MdeimBasis
{
  DeimBasis deim;
  Index rows = 0, cols = 0;
  std::vector<std::pair<Index, Index>> entries;      // vector index -> (row, col)
  std::vector<std::pair<Index, Index>> magic_entries; // (row, col) of each magic index
  std::vector<SparseMatrix> basis_matrices;

  Index size() const { return deim.size(); }
};

MdeimBasis mdeim_build(const std::vector<SparseMatrix> &operator_snapshots, double tol,
                       Index n_max = std::numeric_limits<Index>::max());
Vector mdeim_coefficients(const MdeimBasis &basis, const Vector &sampled_entries);
SparseMatrix mdeim_eval(const MdeimBasis &basis, const Vector &sampled_entries);

// Least-squares fit of basis rows at sample_indices to the sampled values.
Vector gappy_fit(const Matrix &basis, const std::vector<Index> &sample_indices,
                 const Vector &sampled_values);

void save_eim(const EimBasis &basis, const std::filesystem::path &dir);
void save_deim(const DeimBasis &basis, const std::filesystem::path &dir);

// ---------------------------------------------------------------------------
// Reduced nonlinear diffusion model with A(mu) and C(u) replaced by M-DEIM
// expansions. Online work touches only sampled entries and the basis rows of
// the dofs they depend on.

class MdeimRom
{
public:
  MdeimRom(const NonlinearDiffusion &fom, Matrix solution_basis, MdeimBasis a_basis,
           MdeimBasis c_basis);

  Index size() const { return reduced_load_.size(); }
  Vector residual(const Vector &u_n, const Parameter &mu) const;
  // Newton with a finite-difference reduced Jacobian.
  Vector solve(const Parameter &mu, const Vector &guess) const;
  Vector lift(const Vector &u_n) const { return basis_ * u_n; }

private:
  const NonlinearDiffusion *fom_;
  Matrix basis_;
  MdeimBasis a_basis_, c_basis_;
  std::vector<Matrix> reduced_a_, reduced_c_;
  Vector reduced_load_;
  std::vector<Index> support_;  // sorted dofs entering the C samples
  Matrix support_rows_;         // basis rows of support_
};

}  // namespace mor

#endif  // MOR_INTERP_HPP
