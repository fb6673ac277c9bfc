// SPDX-License-Identifier: Apache-2.0

#include "mor/errest.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "mor/io.hpp"
#include "mor/parallel.hpp"

namespace mor
{

ResidualOffline riesz_offline(const AffineSystem &system, const ReducedBasis &basis)
{
  if (basis.dof_count() != system.dof_count())
  {
    throw DomainError("riesz_offline: basis and system dimensions differ");
  }
  Eigen::SimplicialLLT<SparseMatrix> llt(system.gram());
  if (llt.info() != Eigen::Success)
  {
    throw SingularMatrixError("riesz_offline: gram factorization failed");
  }

  ResidualOffline out;
  out.basis_size = basis.size();
  out.q_a = system.q_a();
  out.q_f = system.q_f();
  std::vector<Vector> functionals;
  for (std::size_t q = 0; q < out.q_f; ++q)
  {
    out.terms.push_back({true, q, 0});
    functionals.push_back(system.rhs_term(q));
  }
  if (out.basis_size > 0)
  {
    const Matrix &v = basis.vectors();
    for (Index n = 0; n < out.basis_size; ++n)
    {
      for (std::size_t q = 0; q < out.q_a; ++q)
      {
        out.terms.push_back({false, q, n});
        functionals.push_back(system.matrix_term(q) * v.col(n));
      }
    }
  }

  const std::size_t k = functionals.size();
  out.riesz_vectors.resize(k);
  parallel_for(k, [&](std::size_t j) { out.riesz_vectors[j] = llt.solve(functionals[j]); });
  out.cross_gram = Matrix::Zero(static_cast<Index>(k), static_cast<Index>(k));
  // r_j^T G r_k = r_j^T functional_k
  for (std::size_t i = 0; i < k; ++i)
  {
    for (std::size_t j = i; j < k; ++j)
    {
      const double g = 0.5 * (out.riesz_vectors[i].dot(functionals[j]) +
                              out.riesz_vectors[j].dot(functionals[i]));
      out.cross_gram(i, j) = g;
      out.cross_gram(j, i) = g;
    }
  }
  // R with R^T R = cross_gram, from a QR of L^T P [r_1 ... r_k].
  if (k > 0)
  {
    Matrix x(system.dof_count(), static_cast<Index>(k));
    for (std::size_t j = 0; j < k; ++j)
    {
      const Vector pr = llt.permutationP() * out.riesz_vectors[j];
      x.col(static_cast<Index>(j)) = llt.matrixU() * pr;
    }
    Eigen::HouseholderQR<Matrix> qr(x);
    const Index rows = std::min(x.rows(), x.cols());
    out.cross_factor = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
  }
  return out;
}

double residual_dual_norm(const ResidualOffline &offline, const AffineSystem &system,
                          const Parameter &mu, const Vector &u_n)
{
  if (u_n.size() != offline.basis_size)
  {
    throw DomainError("residual_dual_norm: coefficient length differs from basis size");
  }
  Vector c(static_cast<Index>(offline.terms.size()));
  const Vector tf = system.theta_f(mu);
  const Vector ta = system.theta_a(mu);
  for (std::size_t k = 0; k < offline.terms.size(); ++k)
  {
    const auto &t = offline.terms[k];
    c(static_cast<Index>(k)) = t.load ? tf(static_cast<Index>(t.q))
                                      : -u_n(t.n) * ta(static_cast<Index>(t.q));
  }
  if (offline.cross_factor.size() != 0)
  {
    return (offline.cross_factor * c).norm();
  }
  const double quad = c.dot(offline.cross_gram * c);
  if (quad <= 0.0)
  {
    if (quad < 0.0 && offline.clamp_counter)
    {
      ++*offline.clamp_counter;
    }
    return 0.0;
  }
  return std::sqrt(quad);
}

// ---------------------------------------------------------------------------

double smallest_generalized_eigenvalue(const SparseMatrix &a, const SparseMatrix &b)
{
  if (a.rows() != a.cols() || b.rows() != a.rows() || b.cols() != a.cols() || a.rows() == 0)
  {
    throw DomainError("smallest_generalized_eigenvalue: dimension mismatch");
  }
  Eigen::SimplicialLLT<SparseMatrix> llt(a);
  if (llt.info() != Eigen::Success)
  {
    throw SingularMatrixError("smallest_generalized_eigenvalue: matrix is not SPD");
  }
  const Index n = a.rows();
  Vector x(n);
  for (Index i = 0; i < n; ++i)
  {
    x(i) = 1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0);
  }
  x /= std::sqrt(x.dot(b * x));
  double lambda = x.dot(a * x);
  constexpr int kMaxIterations = 20000;
  int quiet = 0;
  for (int it = 0; it < kMaxIterations; ++it)
  {
    Vector y = llt.solve(b * x);
    y /= std::sqrt(y.dot(b * y));
    const double next = y.dot(a * y);
    x = std::move(y);
    const double change = std::abs(lambda - next);
    lambda = next;
    quiet = change <= 1e-15 * std::abs(lambda) ? quiet + 1 : 0;
    if (quiet >= 3)
    {
      return lambda;
    }
  }
  const Vector r = a * x - lambda * (b * x);
  throw ConvergenceError("smallest_generalized_eigenvalue: inverse iteration stalled",
                         r.norm());
}

CoercivityModel make_coercivity_model(const AffineSystem &system, const Parameter &reference)
{
  CoercivityModel model;
  model.reference = reference;
  model.reference_theta = system.theta_a(reference);
  if ((model.reference_theta.array() <= 0.0).any())
  {
    throw DomainError("coercivity model: reference thetas must be positive");
  }
  const SparseMatrix &g = system.gram();
  const double gscale = g.coeffs().cwiseAbs().maxCoeff();
  for (std::size_t q = 0; q < system.q_a(); ++q)
  {
    const SparseMatrix &aq = system.matrix_term(q);
    const double ascale = aq.nonZeros() ? aq.coeffs().cwiseAbs().maxCoeff() : 0.0;
    const SparseMatrix shifted = aq + (1e-10 * std::max(ascale, 1e-300) / gscale) * g;
    Eigen::SimplicialLLT<SparseMatrix> llt(shifted);
    const bool psd = llt.info() == Eigen::Success &&
                     (aq - SparseMatrix(aq.transpose())).norm() <= 1e-12 * aq.norm();
    model.positive_semidefinite.push_back(psd);
    if (!psd)
    {
      throw DomainError("coercivity model: affine term " + std::to_string(q) +
                        " is not symmetric positive semidefinite");
    }
  }
  model.reference_alpha = smallest_generalized_eigenvalue(system.assemble_matrix(reference), g);
  return model;
}

double coercivity_lb(const CoercivityModel &model, const AffineSystem &system,
                     const Parameter &mu)
{
  const Vector theta = system.theta_a(mu);
  if (theta.size() != model.reference_theta.size())
  {
    throw DomainError("coercivity_lb: theta length differs from the model");
  }
  if ((theta.array() <= 0.0).any())
  {
    throw DomainError("coercivity_lb: min-theta bound inapplicable, a theta is not positive");
  }
  return model.reference_alpha * (theta.array() / model.reference_theta.array()).minCoeff();
}

ErrorBounds error_bounds(const ResidualOffline &offline, const CoercivityModel &model,
                         const AffineSystem &system, const Parameter &mu, const Vector &u_n)
{
  if (!system.compliant())
  {
    throw DomainError("error_bounds: output bound requires a compliant system");
  }
  const double r = residual_dual_norm(offline, system, mu, u_n);
  const double alpha = coercivity_lb(model, system, mu);
  return {r / std::sqrt(alpha), r * r / alpha};
}

ErrorBounds error_bounds(const ResidualOffline &offline, const CoercivityModel &model,
                         const AffineSystem &system, const RomSystem &rom, const Parameter &mu)
{
  return error_bounds(offline, model, system, mu, rom_solve(rom, mu).coefficients);
}

void ResidualEstimator::rebuild(const AffineSystem &system, const ReducedBasis &basis)
{
  offline_ = riesz_offline(system, basis);
  system_ = &system;
}

double ResidualEstimator::bound(const RomSystem &, const Parameter &mu, const Vector &u_n) const
{
  if (!system_)
  {
    throw DomainError("ResidualEstimator: bound() before rebuild()");
  }
  const double r = residual_dual_norm(offline_, *system_, mu, u_n);
  return r / std::sqrt(coercivity_lb(model_, *system_, mu));
}

std::vector<BoundSweepRow> bound_sweep(const AffineSystem &system, const ReducedBasis &basis,
                                       const RomSystem &rom, const ResidualOffline &offline,
                                       const CoercivityModel &model,
                                       const std::vector<Parameter> &mus)
{
  std::vector<BoundSweepRow> rows(mus.size());
  parallel_for(mus.size(), [&](std::size_t k) {
    const Parameter &mu = mus[k];
    const RomSolution red = rom_solve(rom, mu);
    const ErrorBounds b = error_bounds(offline, model, system, mu, red.coefficients);
    const FomSolution full = fom_solve(system, mu);
    const Vector e = full.coefficients - lift(basis, red.coefficients);
    const double en = std::sqrt(std::max(0.0, e.dot(system.assemble_matrix(mu) * e)));
    rows[k] = {mu, b.energy, en, en > 0.0 ? b.energy / en : std::numeric_limits<double>::infinity(), b.output,
               full.output - red.output};
  });
  return rows;
}

void write_bound_sweep(const std::filesystem::path &path, const std::vector<BoundSweepRow> &rows)
{
  std::vector<std::vector<double>> table;
  for (const auto &r : rows)
  {
    table.push_back({r.mu(0), r.delta_en, r.true_error, r.effectivity, r.delta_s});
  }
  write_csv(path, {"mu", "delta_en", "true_error", "effectivity", "delta_s"}, table);
}

}  // namespace mor
