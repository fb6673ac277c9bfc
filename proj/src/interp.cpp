// SPDX-License-Identifier: Apache-2.0

#include "mor/interp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/LU>
#include <Eigen/QR>

#include "json.hpp"
#include "mor/io.hpp"

namespace mor
{

void FunctionSamples::validate() const
{
  if (values.size() == 0)
  {
    throw DomainError("FunctionSamples: empty value matrix");
  }
  require_finite(values, "FunctionSamples");
  if (points.size() != 0 && points.rows() != values.rows())
  {
    throw DomainError("FunctionSamples: point count differs from row count");
  }
  if (!parameters.empty() && static_cast<Index>(parameters.size()) != values.cols())
  {
    throw DomainError("FunctionSamples: parameter count differs from column count");
  }
}

namespace
{

// Lowest index wins ties.
Index argmax_abs(const Eigen::Ref<const Vector> &v)
{
  Index best = 0;
  double val = -1.0;
  for (Index i = 0; i < v.size(); ++i)
  {
    const double a = std::abs(v(i));
    if (a > val)
    {
      val = a;
      best = i;
    }
  }
  return best;
}

Vector column_norms(const Matrix &r, SelectionNorm norm)
{
  Vector out(r.cols());
  for (Index j = 0; j < r.cols(); ++j)
  {
    out(j) = norm == SelectionNorm::infinity ? r.col(j).cwiseAbs().maxCoeff() : r.col(j).norm();
  }
  return out;
}

}  // namespace

EimBasis eim_build(const FunctionSamples &samples, double tol, Index n_max, SelectionNorm norm)
{
  samples.validate();
  if (!(tol > 0.0))
  {
    throw DomainError("eim_build: tol must be positive");
  }
  if (n_max < 1)
  {
    throw DomainError("eim_build: n_max must be at least 1");
  }
  const Matrix &f = samples.values;
  const double scale = f.cwiseAbs().maxCoeff();
  if (scale == 0.0)
  {
    throw DomainError("eim_build: sample matrix is zero");
  }
  const Index m = f.rows();
  Matrix r = f;
  EimBasis out;
  out.basis.resize(m, 0);
  while (out.size() < n_max)
  {
    const Vector norms = column_norms(r, norm);
    const Index j = argmax_abs(norms);
    const Index i = argmax_abs(r.col(j));
    const double denom = r(i, j);
    if (std::abs(denom) < 1e-14 * scale)
    {
      out.saturated = true;
      break;
    }
    const Vector h = r.col(j) / denom;
    const Vector row = r.row(i).transpose();
    r.noalias() -= h * row.transpose();
    r.row(i).setZero();
    r.col(j).setZero();
    out.basis.conservativeResize(Eigen::NoChange, out.size() + 1);
    out.basis.col(out.size() - 1) = h;
    out.magic_indices.push_back(i);
    out.selected_parameter_indices.push_back(j);
    const double eps = column_norms(r, norm).maxCoeff();
    out.error_history.push_back(eps);
    if (eps <= tol)
    {
      break;
    }
  }
  const Index q = out.size();
  out.interp_matrix.resize(q, q);
  for (Index k = 0; k < q; ++k)
  {
    out.interp_matrix.row(k) = out.basis.row(out.magic_indices[k]);
  }
  return out;
}

Vector eim_coefficients(const EimBasis &basis, const Vector &values_at_magic_points)
{
  const Index q = basis.size();
  if (values_at_magic_points.size() != q)
  {
    throw DomainError("eim_coefficients: expected one value per magic point");
  }
  Vector a(q);
  for (Index k = 0; k < q; ++k)
  {
    double s = values_at_magic_points(k);
    for (Index p = 0; p < k; ++p)
    {
      s -= basis.interp_matrix(k, p) * a(p);
    }
    a(k) = s / basis.interp_matrix(k, k);
  }
  return a;
}

Vector eim_interpolate(const EimBasis &basis, const Vector &values_at_magic_points)
{
  return basis.basis * eim_coefficients(basis, values_at_magic_points);
}

double lebesgue_constant(const EimBasis &basis, Index q)
{
  if (q == 0)
  {
    q = basis.size();
  }
  if (q < 1 || q > basis.size())
  {
    throw DomainError("lebesgue_constant: q out of range");
  }
  const Matrix t = basis.interp_matrix.topLeftCorner(q, q);
  const Matrix h = basis.basis.leftCols(q);
  // L^T = T^-T H^T
  const Matrix lt = t.transpose().triangularView<Eigen::Upper>().solve(h.transpose());
  return lt.cwiseAbs().colwise().sum().maxCoeff();
}

// ---------------------------------------------------------------------------

Matrix DeimBasis::sampled_basis() const
{
  Matrix p(size(), size());
  for (Index k = 0; k < size(); ++k)
  {
    p.row(k) = basis.row(magic_indices[k]);
  }
  return p;
}

namespace
{

double deim_reconstruction_error(const Matrix &s, const Matrix &h, const std::vector<Index> &idx)
{
  const Index q = h.cols();
  Matrix ph(q, q), ps(q, s.cols());
  for (Index k = 0; k < q; ++k)
  {
    ph.row(k) = h.row(idx[k]);
    ps.row(k) = s.row(idx[k]);
  }
  const Matrix c = ph.partialPivLu().solve(ps);
  return (s - h * c).norm() / s.norm();
}

}  // namespace

DeimBasis deim_build(const Matrix &snapshots, double tol, Index n_max)
{
  if (snapshots.size() == 0)
  {
    throw DomainError("deim_build: empty snapshot matrix");
  }
  require_finite(snapshots, "deim_build");
  if (snapshots.cwiseAbs().maxCoeff() == 0.0)
  {
    throw DomainError("deim_build: snapshot matrix is zero");
  }
  if (n_max < 1)
  {
    throw DomainError("deim_build: n_max must be at least 1");
  }
  const SvdResult dec = svd(snapshots);
  Index modes = 0;
  while (modes < dec.singular_values.size() &&
         dec.singular_values(modes) > 1e-12 * dec.singular_values(0))
  {
    ++modes;
  }
  const Matrix &u = dec.left_vectors;

  DeimBasis out;
  out.singular_values = dec.singular_values;
  out.basis = u.leftCols(1);
  out.magic_indices.push_back(argmax_abs(u.col(0)));
  out.error_history.push_back(deim_reconstruction_error(snapshots, out.basis, out.magic_indices));
  while (out.error_history.back() > tol && out.size() < modes && out.size() < n_max)
  {
    const Index k = out.size();
    const Vector hk = u.col(k);
    Vector phk(k);
    for (Index p = 0; p < k; ++p)
    {
      phk(p) = hk(out.magic_indices[p]);
    }
    const Vector c = solve(out.sampled_basis(), phk);
    const Vector r = hk - out.basis * c;
    const Index next = argmax_abs(r);
    if (std::find(out.magic_indices.begin(), out.magic_indices.end(), next) !=
        out.magic_indices.end())
    {
      throw SingularMatrixError("deim_build: repeated interpolation index");
    }
    out.basis.conservativeResize(Eigen::NoChange, k + 1);
    out.basis.col(k) = hk;
    out.magic_indices.push_back(next);
    out.error_history.push_back(
        deim_reconstruction_error(snapshots, out.basis, out.magic_indices));
  }
  return out;
}

Vector deim_coefficients(const DeimBasis &basis, const Vector &sampled_values)
{
  if (sampled_values.size() != basis.size())
  {
    throw DomainError("deim: expected one sample per magic index");
  }
  return solve(basis.sampled_basis(), sampled_values);
}

Vector deim_eval(const DeimBasis &basis, const Vector &sampled_values)
{
  return basis.basis * deim_coefficients(basis, sampled_values);
}

// ---------------------------------------------------------------------------

MdeimBasis mdeim_build(const std::vector<SparseMatrix> &operator_snapshots, double tol,
                       Index n_max)
{
  if (operator_snapshots.empty())
  {
    throw DomainError("mdeim_build: no operator snapshots");
  }
  MdeimBasis out;
  out.rows = operator_snapshots.front().rows();
  out.cols = operator_snapshots.front().cols();
  for (const auto &a : operator_snapshots)
  {
    if (a.rows() != out.rows || a.cols() != out.cols)
    {
      throw DomainError("mdeim_build: operator snapshots differ in shape");
    }
    for (Index k = 0; k < a.outerSize(); ++k)
    {
      for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      {
        out.entries.emplace_back(it.col(), it.row());
      }
    }
  }
  std::sort(out.entries.begin(), out.entries.end());
  out.entries.erase(std::unique(out.entries.begin(), out.entries.end()), out.entries.end());
  for (auto &e : out.entries)
  {
    std::swap(e.first, e.second);  // stored as (row, col)
  }
  auto slot = [&](Index row, Index col) {
    auto it = std::lower_bound(out.entries.begin(), out.entries.end(), std::make_pair(row, col),
                               [](const auto &x, const auto &y) {
                                 return x.second != y.second ? x.second < y.second
                                                             : x.first < y.first;
                               });
    return static_cast<Index>(it - out.entries.begin());
  };

  const Index len = static_cast<Index>(out.entries.size());
  Matrix s = Matrix::Zero(len, static_cast<Index>(operator_snapshots.size()));
  for (std::size_t j = 0; j < operator_snapshots.size(); ++j)
  {
    const auto &a = operator_snapshots[j];
    for (Index k = 0; k < a.outerSize(); ++k)
    {
      for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      {
        s(slot(it.row(), it.col()), static_cast<Index>(j)) = it.value();
      }
    }
  }
  out.deim = deim_build(s, tol, n_max);
  for (Index idx : out.deim.magic_indices)
  {
    out.magic_entries.push_back(out.entries[idx]);
  }
  for (Index q = 0; q < out.size(); ++q)
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (Index k = 0; k < len; ++k)
    {
      const double v = out.deim.basis(k, q);
      if (v != 0.0)
      {
        trip.emplace_back(out.entries[k].first, out.entries[k].second, v);
      }
    }
    SparseMatrix h(out.rows, out.cols);
    h.setFromTriplets(trip.begin(), trip.end());
    out.basis_matrices.push_back(std::move(h));
  }
  return out;
}

Vector mdeim_coefficients(const MdeimBasis &basis, const Vector &sampled_entries)
{
  return deim_coefficients(basis.deim, sampled_entries);
}

SparseMatrix mdeim_eval(const MdeimBasis &basis, const Vector &sampled_entries)
{
  const Vector c = mdeim_coefficients(basis, sampled_entries);
  SparseMatrix out(basis.rows, basis.cols);
  for (Index q = 0; q < basis.size(); ++q)
  {
    out += c(q) * basis.basis_matrices[q];
  }
  return out;
}

Vector gappy_fit(const Matrix &basis, const std::vector<Index> &sample_indices,
                 const Vector &sampled_values)
{
  const Index q = basis.cols();
  const Index m = static_cast<Index>(sample_indices.size());
  if (m < q || sampled_values.size() != m)
  {
    throw DomainError("gappy_fit: need at least as many samples as basis vectors");
  }
  Matrix rows(m, q);
  for (Index k = 0; k < m; ++k)
  {
    const Index i = sample_indices[k];
    if (i < 0 || i >= basis.rows())
    {
      throw DomainError("gappy_fit: sample index out of range");
    }
    rows.row(k) = basis.row(i);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(rows);
  qr.setThreshold(1e-12);
  if (qr.rank() < q)
  {
    throw SingularMatrixError("gappy_fit: sampled rows are rank deficient");
  }
  return qr.solve(sampled_values);
}

// ---------------------------------------------------------------------------

namespace
{

void write_manifest(const std::filesystem::path &dir, const nlohmann::json &m)
{
  std::ofstream out(dir / "manifest.json");
  if (!out)
  {
    throw Error("cannot write manifest in " + dir.string());
  }
  out << m.dump(2) << '\n';
}

}  // namespace

void save_eim(const EimBasis &basis, const std::filesystem::path &dir)
{
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "basis.csv", basis.basis);
  nlohmann::json m;
  m["Q"] = basis.size();
  m["magic_indices"] = basis.magic_indices;
  m["selected_parameter_indices"] = basis.selected_parameter_indices;
  m["error_history"] = basis.error_history;
  m["saturated"] = basis.saturated;
  m["basis"] = "basis.csv";
  write_manifest(dir, m);
}

void save_deim(const DeimBasis &basis, const std::filesystem::path &dir)
{
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "basis.csv", basis.basis);
  nlohmann::json m;
  m["Q"] = basis.size();
  m["magic_indices"] = basis.magic_indices;
  m["error_history"] = basis.error_history;
  m["basis"] = "basis.csv";
  write_manifest(dir, m);
}

// ---------------------------------------------------------------------------

MdeimRom::MdeimRom(const NonlinearDiffusion &fom, Matrix solution_basis, MdeimBasis a_basis,
                   MdeimBasis c_basis)
  : fom_(&fom), basis_(std::move(solution_basis)), a_basis_(std::move(a_basis)),
    c_basis_(std::move(c_basis))
{
  const Index n_h = fom.dof_count();
  if (basis_.rows() != n_h || basis_.cols() == 0 || a_basis_.rows != n_h ||
      c_basis_.rows != n_h)
  {
    throw DomainError("MdeimRom: dimension mismatch");
  }
  for (const auto &h : a_basis_.basis_matrices)
  {
    reduced_a_.push_back(basis_.transpose() * (h * basis_));
  }
  for (const auto &h : c_basis_.basis_matrices)
  {
    reduced_c_.push_back(basis_.transpose() * (h * basis_));
  }
  reduced_load_ = basis_.transpose() * fom.load();
  for (const auto &[row, col] : c_basis_.magic_entries)
  {
    for (Index d : fom.entry_support(row, col))
    {
      support_.push_back(d);
    }
  }
  std::sort(support_.begin(), support_.end());
  support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  support_rows_.resize(static_cast<Index>(support_.size()), basis_.cols());
  for (std::size_t k = 0; k < support_.size(); ++k)
  {
    support_rows_.row(static_cast<Index>(k)) = basis_.row(support_[k]);
  }
}

Vector MdeimRom::residual(const Vector &u_n, const Parameter &mu) const
{
  Vector sa(a_basis_.size());
  for (Index k = 0; k < a_basis_.size(); ++k)
  {
    const auto &[row, col] = a_basis_.magic_entries[k];
    sa(k) = fom_->diffusion_entry(mu, row, col);
  }
  const Vector ca = mdeim_coefficients(a_basis_, sa);

  Vector local = support_rows_ * u_n;
  auto nodal = [&](Index d) {
    auto it = std::lower_bound(support_.begin(), support_.end(), d);
    return local(static_cast<Index>(it - support_.begin()));
  };
  Vector sc(c_basis_.size());
  for (Index k = 0; k < c_basis_.size(); ++k)
  {
    const auto &[row, col] = c_basis_.magic_entries[k];
    sc(k) = fom_->nonlinear_entry(nodal, row, col);
  }
  const Vector cc = mdeim_coefficients(c_basis_, sc);

  Matrix op = Matrix::Zero(size(), size());
  for (Index q = 0; q < ca.size(); ++q)
  {
    op += ca(q) * reduced_a_[q];
  }
  for (Index q = 0; q < cc.size(); ++q)
  {
    op += cc(q) * reduced_c_[q];
  }
  return op * u_n - reduced_load_;
}

Vector MdeimRom::solve(const Parameter &mu, const Vector &guess) const
{
  if (guess.size() != size())
  {
    throw DomainError("MdeimRom::solve: guess length mismatch");
  }
  const double target = 1e-12 * std::max(1.0, reduced_load_.norm());
  Vector u = guess;
  double rnorm = 0.0;
  for (int it = 0; it <= kNewtonMaxIterations; ++it)
  {
    const Vector r = residual(u, mu);
    rnorm = r.norm();
    if (!std::isfinite(rnorm))
    {
      break;
    }
    if (rnorm <= target)
    {
      return u;
    }
    if (it == kNewtonMaxIterations)
    {
      break;
    }
    Matrix jac(size(), size());
    for (Index j = 0; j < size(); ++j)
    {
      const double h = 1e-7 * std::max(1.0, std::abs(u(j)));
      Vector up = u, um = u;
      up(j) += h;
      um(j) -= h;
      jac.col(j) = (residual(up, mu) - residual(um, mu)) / (2.0 * h);
    }
    const Vector step = mor::solve(jac, r);
    u -= step;
    if (step.norm() <= 1e-14 * std::max(1.0, u.norm()))
    {
      return u;
    }
  }
  throw ConvergenceError("MdeimRom::solve: reduced Newton did not converge", rnorm);
}

}  // namespace mor
