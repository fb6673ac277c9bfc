// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_RB_HPP
#define MOR_RB_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mor/fom.hpp"

namespace mor
{

struct SnapshotSet
{
  Matrix matrix;                     // N_h x N_max, one solution per column
  std::vector<Parameter> parameters; // aligned with the columns

  // Throws DomainError on misalignment or duplicate parameter points.
  void validate() const;
};

// Columns orthonormal in the gram inner product.
class ReducedBasis
{
public:
  explicit ReducedBasis(SparseMatrix gram);
  ReducedBasis(Matrix vectors, SparseMatrix gram);

  Index size() const { return vectors_.cols(); }
  Index dof_count() const { return gram_.rows(); }

  // Both accessors count as full-order reads.
  const Matrix &vectors() const;
  const SparseMatrix &gram() const;

  // Appends a column that is already gram-orthonormal to the current ones.
  void append(const Vector &zeta);

  // Largest |V^T G V - I| entry.
  double orthonormality_defect() const;

  Vector singular_values;                    // POD path: retained and neglected
  std::vector<Parameter> selected_parameters; // greedy path

private:
  Matrix vectors_;
  SparseMatrix gram_;
};

struct RankCriterion
{
  Index rank;
};

// Smallest N with sum_{i<=N} sigma_i >= fraction * sum_i sigma_i.
struct EnergyCriterion
{
  double fraction;
};

using PodCriterion = std::variant<RankCriterion, EnergyCriterion>;

// Snapshot POD. Uses the method of snapshots (eigenproblem of S^T G S) when
// N_h > N_max or the gram is not the identity, a direct SVD otherwise.
ReducedBasis pod(const SnapshotSet &snapshots, const SparseMatrix &gram,
                 const PodCriterion &criterion);

// Dense reduced operators. Holds no N_h-sized data and no basis reference.
struct RomSystem
{
  std::string name;
  Index dof_count = 0;  // N_h of the parent, metadata only
  std::vector<Matrix> matrix_terms;
  std::vector<Vector> rhs_terms;
  std::vector<Vector> output_terms;
  AffineSystem::ThetaMap theta_a, theta_f, theta_l;
  ParamDomain domain{Vector::Zero(1), Vector::Ones(1)};
  std::vector<Parameter> selected_parameters;
  Vector singular_values;

  Index size() const { return matrix_terms.empty() ? 0 : matrix_terms.front().rows(); }
};

RomSystem project(const AffineSystem &system, const ReducedBasis &basis);

struct RomSolution
{
  Vector coefficients;
  double output = 0.0;
};

RomSolution rom_solve(const RomSystem &rom, const Parameter &mu);

Vector lift(const ReducedBasis &basis, const Vector &u_n);

// Estimator interface consumed by the greedy loop.
class ErrorEstimator
{
public:
  virtual ~ErrorEstimator() = default;
  // Called once per basis enrichment, before any bound() call.
  virtual void rebuild(const AffineSystem &system, const ReducedBasis &basis) = 0;
  virtual double bound(const RomSystem &rom, const Parameter &mu, const Vector &u_n) const = 0;
};

struct GreedyStep
{
  Index basis_size = 0;
  double max_bound = 0.0;
  std::size_t argmax = 0;
};

struct GreedyResult
{
  ReducedBasis basis;
  RomSystem rom;
  std::vector<GreedyStep> history;
  bool converged = false;  // max bound <= tol
  bool saturated = false;  // selected snapshot was already in the span
};

GreedyResult greedy(const AffineSystem &system, const std::vector<Parameter> &training_set,
                    double tol, const Parameter &mu1, Index n_max, ErrorEstimator &estimator);

// JSON manifest plus CSV payloads. Theta maps are reattached on load from
// the problem name.
struct ThetaMaps
{
  AffineSystem::ThetaMap theta_a, theta_f, theta_l;
};

inline constexpr int kRomFormatVersion = 1;

void save_rom(const RomSystem &rom, const std::filesystem::path &dir);
RomSystem load_rom(const std::filesystem::path &dir,
                   const std::function<ThetaMaps(const std::string &name)> &resolve);

}  // namespace mor

#endif  // MOR_RB_HPP
