// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_ERREST_HPP
#define MOR_ERREST_HPP

#include <atomic>
#include <filesystem>
#include <memory>
#include <vector>

#include "mor/rb.hpp"

namespace mor
{

// Riesz representers of the residual terms and their gram cross products.
// Term order: the Q_f load terms, then for each basis vector n the Q_a
// operator terms A_i zeta^n.
struct ResidualOffline
{
  struct Term
  {
    bool load = true;
    std::size_t q = 0;  // affine index
    Index n = 0;        // basis index (operator terms only)
  };

  Index basis_size = 0;
  std::size_t q_a = 0;
  std::size_t q_f = 0;
  std::vector<Term> terms;
  std::vector<Vector> riesz_vectors;  // offline only
  Matrix cross_gram;
  // Triangular R with R^T R = cross_gram. The dual norm is evaluated as
  // |R c|, which keeps accuracy when the residual cancels to round-off.
  Matrix cross_factor;

  // Number of dual-norm evaluations whose quadratic form came out negative
  // and was clamped to zero.
  std::size_t clamped_evaluations() const { return clamp_counter ? clamp_counter->load() : 0; }
  std::shared_ptr<std::atomic<std::size_t>> clamp_counter =
      std::make_shared<std::atomic<std::size_t>>(0);
};

ResidualOffline riesz_offline(const AffineSystem &system, const ReducedBasis &basis);

// sqrt(c^T cross_gram c); reads only reduced data.
double residual_dual_norm(const ResidualOffline &offline, const AffineSystem &system,
                          const Parameter &mu, const Vector &u_n);

// Min-theta lower bound alpha_h(mu_ref) * min_q theta_q(mu) / theta_q(mu_ref).
struct CoercivityModel
{
  Parameter reference;
  Vector reference_theta;
  double reference_alpha = 0.0;
  std::vector<bool> positive_semidefinite;  // per A_q, all true after construction
};

CoercivityModel make_coercivity_model(const AffineSystem &system, const Parameter &reference);
double coercivity_lb(const CoercivityModel &model, const AffineSystem &system,
                     const Parameter &mu);

// Smallest lambda with a x = lambda b x, both SPD. Inverse iteration with a
// Rayleigh quotient.
double smallest_generalized_eigenvalue(const SparseMatrix &a, const SparseMatrix &b);

struct ErrorBounds
{
  double energy = 0.0;
  double output = 0.0;
};

ErrorBounds error_bounds(const ResidualOffline &offline, const CoercivityModel &model,
                         const AffineSystem &system, const RomSystem &rom, const Parameter &mu);
ErrorBounds error_bounds(const ResidualOffline &offline, const CoercivityModel &model,
                         const AffineSystem &system, const Parameter &mu, const Vector &u_n);

// Energy-norm bound for the greedy loop.
class ResidualEstimator : public ErrorEstimator
{
public:
  explicit ResidualEstimator(CoercivityModel model) : model_(std::move(model)) {}

  void rebuild(const AffineSystem &system, const ReducedBasis &basis) override;
  double bound(const RomSystem &rom, const Parameter &mu, const Vector &u_n) const override;

  const ResidualOffline &offline() const { return offline_; }
  const CoercivityModel &model() const { return model_; }

private:
  CoercivityModel model_;
  ResidualOffline offline_;
  const AffineSystem *system_ = nullptr;
};

struct BoundSweepRow
{
  Parameter mu;
  double delta_en = 0.0;
  double true_error = 0.0;  // energy norm, from a full solve
  double effectivity = 0.0;
  double delta_s = 0.0;
  double output_error = 0.0;  // s_h - s_N
};

// Compares the bounds with full-order truth at every point of `mus`.
std::vector<BoundSweepRow> bound_sweep(const AffineSystem &system, const ReducedBasis &basis,
                                       const RomSystem &rom, const ResidualOffline &offline,
                                       const CoercivityModel &model,
                                       const std::vector<Parameter> &mus);

// Columns mu,delta_en,true_error,effectivity,delta_s (first parameter
// component in the mu column).
void write_bound_sweep(const std::filesystem::path &path, const std::vector<BoundSweepRow> &rows);

}  // namespace mor

#endif  // MOR_ERREST_HPP
