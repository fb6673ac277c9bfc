// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_ASUB_HPP
#define MOR_ASUB_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <variant>
#include <vector>

#include "mor/fom.hpp"

namespace mor
{

using ScalarMap = std::function<double(const Parameter &)>;
using GradientMap = std::function<Vector(const Parameter &)>;

// Samples drawn uniformly from a box. Inputs and gradients are stored in
// the normalized coordinates z in [-1,1]^p, mu = center + half_width .* z.
struct SampledGradients
{
  std::vector<Parameter> physical;  // mu^(i)
  std::vector<Vector> normalized;   // z^(i)
  std::vector<double> values;       // f(mu^(i))
  std::vector<Vector> gradients;    // grad_z f
  Vector lower, upper;

  std::size_t size() const { return values.size(); }
};

Vector normalize_parameter(const ParamDomain &domain, const Parameter &mu);
Parameter denormalize_parameter(const ParamDomain &domain, const Vector &z);

// Central finite differences with step 1e-5 times the box edge when `grad`
// is empty. Sample i uses its own generator seeded from (seed, i).
SampledGradients sample_gradients(const ScalarMap &f, const GradientMap &grad,
                                  const ParamDomain &domain, std::size_t n, std::uint64_t seed);

struct FixedSplit
{
  Index dim;
};
struct LargestGap
{
};
using SplitRule = std::variant<FixedSplit, LargestGap>;

struct ActiveSubspace
{
  Matrix covariance;
  Vector eigenvalues;   // descending
  Matrix eigenvectors;
  Index dim = 0;        // M
  Matrix active;        // W1
  Matrix inactive;      // W2
  double gap_ratio = 0.0;  // lambda_M / lambda_{M+1}, infinite past the floor
};

ActiveSubspace estimate_subspace(const SampledGradients &grads, const SplitRule &split);
ActiveSubspace estimate_subspace(const std::vector<Vector> &gradients, const SplitRule &split);

struct ActiveProjection
{
  Vector active;    // W1^T mu
  Vector inactive;  // W2^T mu
};

ActiveProjection project_active(const ActiveSubspace &subspace, const Vector &mu);

// ceil(alpha k ln p), at least 1.
std::size_t n_train_heuristic(int k, double p, double alpha);

// One row per sample: W1^T z followed by f.
Matrix summary_data(const ActiveSubspace &subspace, const std::vector<Vector> &inputs,
                    const std::vector<double> &values);

// || W_a W_a^T - W_b W_b^T ||_2
double subspace_distance(const Matrix &w_a, const Matrix &w_b);

// 4 lambda_1 delta / (lambda_n - lambda_{n+1}); reported, never asserted.
double subspace_error_bound(const Vector &eigenvalues, Index n, double delta);

// Equispaced points along the first active direction that stay inside the
// box, in physical coordinates.
std::vector<Parameter> active_line_samples(const ActiveSubspace &subspace,
                                           const ParamDomain &domain, std::size_t count);

void write_summary_csv(const std::filesystem::path &path, const Matrix &summary);
void write_eigenvalue_csv(const std::filesystem::path &path, const Vector &eigenvalues);

}  // namespace mor

#endif  // MOR_ASUB_HPP
