// SPDX-License-Identifier: Apache-2.0

#include "mor/asub.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mor/io.hpp"
#include "mor/parallel.hpp"

namespace mor
{

Vector normalize_parameter(const ParamDomain &domain, const Parameter &mu)
{
  const Vector center = 0.5 * (domain.lower() + domain.upper());
  const Vector half = 0.5 * (domain.upper() - domain.lower());
  return (mu - center).cwiseQuotient(half);
}

Parameter denormalize_parameter(const ParamDomain &domain, const Vector &z)
{
  const Vector center = 0.5 * (domain.lower() + domain.upper());
  const Vector half = 0.5 * (domain.upper() - domain.lower());
  return center + half.cwiseProduct(z);
}

SampledGradients sample_gradients(const ScalarMap &f, const GradientMap &grad,
                                  const ParamDomain &domain, std::size_t n, std::uint64_t seed)
{
  if (n < 1)
  {
    throw DomainError("sample_gradients: need at least one sample");
  }
  if (!f)
  {
    throw DomainError("sample_gradients: no function given");
  }
  const Index p = domain.dim();
  const Vector half = 0.5 * (domain.upper() - domain.lower());
  SampledGradients out;
  out.lower = domain.lower();
  out.upper = domain.upper();
  out.physical.resize(n);
  out.normalized.resize(n);
  out.values.resize(n);
  out.gradients.resize(n);
  parallel_for(n, [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector z(p);
    for (Index k = 0; k < p; ++k)
    {
      z(k) = unit(rng);
    }
    const Parameter mu = denormalize_parameter(domain, z);
    const double value = f(mu);
    Vector g;
    if (grad)
    {
      g = grad(mu);
    }
    else
    {
      g.resize(p);
      for (Index k = 0; k < p; ++k)
      {
        const double h = 1e-5 * (domain.upper()(k) - domain.lower()(k));
        Parameter a = mu, b = mu;
        a(k) += h;
        b(k) -= h;
        g(k) = (f(a) - f(b)) / (2.0 * h);
      }
    }
    if (!std::isfinite(value) || g.size() != p || !g.allFinite())
    {
      throw DomainError("sample_gradients: non-finite value or gradient at sample " +
                        std::to_string(i));
    }
    out.physical[i] = mu;
    out.normalized[i] = z;
    out.values[i] = value;
    out.gradients[i] = g.cwiseProduct(half);
  });
  return out;
}

ActiveSubspace estimate_subspace(const SampledGradients &grads, const SplitRule &split)
{
  return estimate_subspace(grads.gradients, split);
}

ActiveSubspace estimate_subspace(const std::vector<Vector> &gradients, const SplitRule &split)
{
  if (gradients.empty())
  {
    throw DomainError("estimate_subspace: no gradients");
  }
  const Index p = gradients.front().size();
  Matrix c = Matrix::Zero(p, p);
  for (const auto &g : gradients)
  {
    if (g.size() != p)
    {
      throw DomainError("estimate_subspace: gradient length mismatch");
    }
    c.noalias() += g * g.transpose();
  }
  c /= static_cast<double>(gradients.size());
  c = 0.5 * (c + c.transpose());
  if (c.cwiseAbs().maxCoeff() == 0.0)
  {
    throw DomainError("estimate_subspace: all gradients vanish");
  }

  const SymEigResult dec = sym_eig(c);
  ActiveSubspace out;
  out.covariance = c;
  out.eigenvalues = dec.eigenvalues;
  out.eigenvectors = dec.eigenvectors;
  const double floor = 1e-14 * dec.eigenvalues(0);
  auto ratio = [&](Index i) {
    const double next = dec.eigenvalues(i + 1);
    return next <= floor ? std::numeric_limits<double>::infinity() : dec.eigenvalues(i) / next;
  };

  if (const auto *fixed = std::get_if<FixedSplit>(&split))
  {
    if (fixed->dim < 1 || fixed->dim > p)
    {
      throw DomainError("estimate_subspace: split dimension out of range");
    }
    out.dim = fixed->dim;
  }
  else
  {
    if (p == 1)
    {
      out.dim = 1;
    }
    else
    {
      // lambda_{i+1} floored at 1e-14 lambda_1 for the comparison.
      Index best = 0;
      double best_ratio = -1.0;
      for (Index i = 0; i + 1 < p; ++i)
      {
        const double r = dec.eigenvalues(i) / std::max(dec.eigenvalues(i + 1), floor);
        if (r > best_ratio)
        {
          best_ratio = r;
          best = i;
        }
      }
      out.dim = best + 1;
    }
  }
  out.gap_ratio = out.dim < p ? ratio(out.dim - 1) : std::numeric_limits<double>::infinity();
  out.active = out.eigenvectors.leftCols(out.dim);
  out.inactive = out.eigenvectors.rightCols(p - out.dim);
  return out;
}

ActiveProjection project_active(const ActiveSubspace &subspace, const Vector &mu)
{
  if (mu.size() != subspace.eigenvectors.rows())
  {
    throw DomainError("project_active: parameter length mismatch");
  }
  return {subspace.active.transpose() * mu, subspace.inactive.transpose() * mu};
}

std::size_t n_train_heuristic(int k, double p, double alpha)
{
  if (k < 1 || !(p >= 2.0) || !(alpha >= 2.0 && alpha <= 10.0))
  {
    throw DomainError("n_train_heuristic: need k >= 1, p >= 2 and alpha in [2, 10]");
  }
  const double n = std::ceil(alpha * k * std::log(p));
  return static_cast<std::size_t>(std::max(1.0, n));
}

Matrix summary_data(const ActiveSubspace &subspace, const std::vector<Vector> &inputs,
                    const std::vector<double> &values)
{
  if (subspace.dim < 1)
  {
    throw DomainError("summary_data: empty active subspace");
  }
  if (inputs.size() != values.size())
  {
    throw DomainError("summary_data: input and value counts differ");
  }
  Matrix out(static_cast<Index>(inputs.size()), subspace.dim + 1);
  for (std::size_t i = 0; i < inputs.size(); ++i)
  {
    const Index row = static_cast<Index>(i);
    out.row(row).head(subspace.dim) = project_active(subspace, inputs[i]).active.transpose();
    out(row, subspace.dim) = values[i];
  }
  return out;
}

double subspace_distance(const Matrix &w_a, const Matrix &w_b)
{
  if (w_a.rows() != w_b.rows() || w_a.cols() != w_b.cols() || w_a.cols() == 0)
  {
    throw DomainError("subspace_distance: bases must share shape");
  }
  const Matrix diff = w_a * w_a.transpose() - w_b * w_b.transpose();
  const Vector ev = sym_eig(0.5 * (diff + diff.transpose())).eigenvalues;
  return std::min(1.0, ev.cwiseAbs().maxCoeff());
}

double subspace_error_bound(const Vector &eigenvalues, Index n, double delta)
{
  if (n < 1 || n >= eigenvalues.size())
  {
    throw DomainError("subspace_error_bound: n out of range");
  }
  const double gap = eigenvalues(n - 1) - eigenvalues(n);
  if (gap <= 0.0)
  {
    return std::numeric_limits<double>::infinity();
  }
  return 4.0 * eigenvalues(0) * delta / gap;
}

std::vector<Parameter> active_line_samples(const ActiveSubspace &subspace,
                                           const ParamDomain &domain, std::size_t count)
{
  if (subspace.dim < 1 || count < 1)
  {
    throw DomainError("active_line_samples: need a nonempty subspace and count");
  }
  const Vector w = subspace.active.col(0);
  const double reach = 1.0 / w.cwiseAbs().maxCoeff();
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < count; ++i)
  {
    const double t = count == 1 ? 0.0 : -reach + 2.0 * reach * i / (count - 1);
    out.push_back(denormalize_parameter(domain, t * w));
  }
  return out;
}

void write_summary_csv(const std::filesystem::path &path, const Matrix &summary)
{
  std::vector<std::string> header;
  for (Index k = 0; k + 1 < summary.cols(); ++k)
  {
    header.push_back("mu_M_" + std::to_string(k + 1));
  }
  header.push_back("f");
  std::vector<std::vector<double>> rows;
  for (Index i = 0; i < summary.rows(); ++i)
  {
    rows.emplace_back();
    for (Index k = 0; k < summary.cols(); ++k)
    {
      rows.back().push_back(summary(i, k));
    }
  }
  write_csv(path, header, rows);
}

void write_eigenvalue_csv(const std::filesystem::path &path, const Vector &eigenvalues)
{
  std::vector<std::vector<double>> rows;
  for (Index i = 0; i < eigenvalues.size(); ++i)
  {
    rows.push_back({static_cast<double>(i + 1), eigenvalues(i)});
  }
  write_csv(path, {"index", "lambda"}, rows);
}

}  // namespace mor
