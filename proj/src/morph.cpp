// SPDX-License-Identifier: Apache-2.0

#include "mor/morph.hpp"

#include <cmath>

#include <Eigen/LU>

#include "mor/parallel.hpp"

namespace mor
{

FfdLattice::FfdLattice(Vector origin, Matrix axes, std::vector<int> degrees)
  : origin_(std::move(origin)), axes_(std::move(axes)), degrees_(std::move(degrees))
{
  const Index d = origin_.size();
  if (d < 1 || d > 3 || axes_.rows() != d || axes_.cols() != d ||
      static_cast<Index>(degrees_.size()) != d)
  {
    throw DomainError("FfdLattice: origin, axes and degrees must agree in dimension (1 to 3)");
  }
  require_finite(origin_, "FfdLattice");
  require_finite(axes_, "FfdLattice");
  Eigen::FullPivLU<Matrix> lu(axes_);
  const double scale = axes_.cwiseAbs().maxCoeff();
  if (scale == 0.0 || !lu.isInvertible() ||
      std::abs(axes_.determinant()) < 1e-12 * std::pow(scale, static_cast<double>(d)))
  {
    throw DomainError("FfdLattice: lattice axes are not invertible");
  }
  axes_inverse_ = lu.inverse();
  control_count_ = 1;
  for (int deg : degrees_)
  {
    if (deg < 1)
    {
      throw DomainError("FfdLattice: degrees must be at least 1");
    }
    control_count_ *= deg + 1;
  }
  displacements = Matrix::Zero(control_count_, d);
}

Index FfdLattice::control_index(const std::vector<int> &multi) const
{
  if (multi.size() != degrees_.size())
  {
    throw DomainError("FfdLattice: index dimension mismatch");
  }
  Index flat = 0, stride = 1;
  for (std::size_t k = 0; k < multi.size(); ++k)
  {
    if (multi[k] < 0 || multi[k] > degrees_[k])
    {
      throw DomainError("FfdLattice: control index out of range");
    }
    flat += multi[k] * stride;
    stride *= degrees_[k] + 1;
  }
  return flat;
}

std::vector<int> FfdLattice::control_multi_index(Index flat) const
{
  std::vector<int> multi(degrees_.size());
  for (std::size_t k = 0; k < degrees_.size(); ++k)
  {
    multi[k] = static_cast<int>(flat % (degrees_[k] + 1));
    flat /= degrees_[k] + 1;
  }
  return multi;
}

Matrix FfdLattice::control_points() const
{
  Matrix p(control_count_, dim());
  for (Index c = 0; c < control_count_; ++c)
  {
    const auto multi = control_multi_index(c);
    Vector s(dim());
    for (int k = 0; k < dim(); ++k)
    {
      s(k) = static_cast<double>(multi[k]) / degrees_[k];
    }
    p.row(c) = from_lattice(s).transpose();
  }
  return p;
}

Vector FfdLattice::to_lattice(const Vector &x) const
{
  return axes_inverse_ * (x - origin_);
}

Vector FfdLattice::from_lattice(const Vector &s) const
{
  return origin_ + axes_ * s;
}

double bernstein(int k, int n, double t)
{
  if (k < 0 || k > n)
  {
    return 0.0;
  }
  double binom = 1.0;
  for (int i = 1; i <= k; ++i)
  {
    binom = binom * (n - k + i) / i;
  }
  return binom * std::pow(t, k) * std::pow(1.0 - t, n - k);
}

FfdWeights ffd_weights(const FfdLattice &lattice, const Matrix &points)
{
  const int d = lattice.dim();
  if (points.cols() != d)
  {
    throw DomainError("ffd: point dimension differs from the lattice");
  }
  constexpr double kSlack = 1e-14;
  FfdWeights out{Matrix::Zero(points.rows(), lattice.control_count()),
                 std::vector<bool>(static_cast<std::size_t>(points.rows()), false)};
  std::vector<char> inside(static_cast<std::size_t>(points.rows()), 0);
  parallel_for(static_cast<std::size_t>(points.rows()), [&](std::size_t p) {
    const Index row = static_cast<Index>(p);
    Vector s = lattice.to_lattice(points.row(row).transpose());
    for (int k = 0; k < d; ++k)
    {
      if (s(k) < -kSlack || s(k) > 1.0 + kSlack)
      {
        return;
      }
      s(k) = std::min(1.0, std::max(0.0, s(k)));
    }
    inside[p] = 1;
    std::vector<std::vector<double>> b(d);
    for (int k = 0; k < d; ++k)
    {
      const int n = lattice.degrees()[k];
      for (int i = 0; i <= n; ++i)
      {
        b[k].push_back(bernstein(i, n, s(k)));
      }
    }
    for (Index c = 0; c < lattice.control_count(); ++c)
    {
      const auto multi = lattice.control_multi_index(c);
      double w = 1.0;
      for (int k = 0; k < d; ++k)
      {
        w *= b[k][multi[k]];
      }
      out.weights(row, c) = w;
    }
  });
  for (std::size_t p = 0; p < inside.size(); ++p)
  {
    out.inside[p] = inside[p] != 0;
  }
  return out;
}

Matrix ffd_deform(const FfdLattice &lattice, const FfdWeights &weights, const Matrix &points)
{
  if (weights.weights.rows() != points.rows() ||
      weights.weights.cols() != lattice.control_count() || points.cols() != lattice.dim())
  {
    throw DomainError("ffd_deform: cached weights do not match the point set");
  }
  if (lattice.displacements.rows() != lattice.control_count() ||
      lattice.displacements.cols() != lattice.dim())
  {
    throw DomainError("ffd_deform: displacement array has the wrong shape");
  }
  // Bernstein polynomials reproduce linear functions, so the blend of the
  // undisplaced lattice is the identity and only displacements remain.
  const Matrix shift = weights.weights * lattice.displacements;
  Matrix out = points;
  for (Index p = 0; p < points.rows(); ++p)
  {
    if (weights.inside[static_cast<std::size_t>(p)])
    {
      out.row(p) += (lattice.axes() * shift.row(p).transpose()).transpose();
    }
  }
  return out;
}

Matrix ffd_deform(const FfdLattice &lattice, const Matrix &points)
{
  return ffd_deform(lattice, ffd_weights(lattice, points), points);
}

// ---------------------------------------------------------------------------

RbfKernel parse_rbf_kernel(const std::string &name)
{
  if (name == "gaussian")
  {
    return RbfKernel::gaussian;
  }
  if (name == "thin-plate" || name == "thin_plate")
  {
    return RbfKernel::thin_plate;
  }
  if (name == "wendland-c2" || name == "wendland_c2")
  {
    return RbfKernel::wendland_c2;
  }
  if (name == "multiquadric")
  {
    return RbfKernel::multiquadric;
  }
  if (name == "inverse-multiquadric" || name == "inverse_multiquadric")
  {
    return RbfKernel::inverse_multiquadric;
  }
  throw DomainError("unknown RBF kernel '" + name + "'");
}

std::string rbf_kernel_name(RbfKernel kernel)
{
  switch (kernel)
  {
    case RbfKernel::gaussian:
      return "gaussian";
    case RbfKernel::thin_plate:
      return "thin-plate";
    case RbfKernel::wendland_c2:
      return "wendland-c2";
    case RbfKernel::multiquadric:
      return "multiquadric";
    case RbfKernel::inverse_multiquadric:
      return "inverse-multiquadric";
  }
  return "";
}

double rbf_kernel(RbfKernel kernel, double r, double radius)
{
  switch (kernel)
  {
    case RbfKernel::gaussian:
      return std::exp(-r * r / radius);
    case RbfKernel::thin_plate:
    {
      const double t = r / radius;
      return t > 0.0 ? t * t * std::log(t) : 0.0;
    }
    case RbfKernel::wendland_c2:
    {
      const double t = r / radius;
      if (t >= 1.0)
      {
        return 0.0;
      }
      const double a = 1.0 - t;
      return a * a * a * a * (4.0 * t + 1.0);
    }
    case RbfKernel::multiquadric:
      return std::sqrt(r * r + radius * radius);
    case RbfKernel::inverse_multiquadric:
      return 1.0 / std::sqrt(r * r + radius * radius);
  }
  return 0.0;
}

double bounding_box_diagonal(const Matrix &points)
{
  if (points.rows() == 0)
  {
    return 0.0;
  }
  return (points.colwise().maxCoeff() - points.colwise().minCoeff()).norm();
}

namespace
{

void check_control_sets(const Matrix &control, const Matrix &deformed, const char *who)
{
  if (control.rows() == 0 || control.cols() == 0)
  {
    throw DomainError(std::string(who) + ": no control points");
  }
  if (deformed.rows() != control.rows() || deformed.cols() != control.cols())
  {
    throw DomainError(std::string(who) + ": control and deformed point sets differ in shape");
  }
  require_finite(control, who);
  require_finite(deformed, who);
}

void check_distinct(const Matrix &control, double tol, const char *who)
{
  for (Index i = 0; i < control.rows(); ++i)
  {
    for (Index j = i + 1; j < control.rows(); ++j)
    {
      if ((control.row(i) - control.row(j)).norm() <= tol)
      {
        throw DomainError(std::string(who) + ": duplicate control points " + std::to_string(i) +
                          " and " + std::to_string(j));
      }
    }
  }
}

}  // namespace

RbfMorph rbf_build(const Matrix &control, const Matrix &deformed, RbfKernel kernel, double radius)
{
  check_control_sets(control, deformed, "rbf_build");
  const Index n = control.rows();
  const Index d = control.cols();
  if (n < d + 1)
  {
    throw DomainError("rbf_build: need at least d + 1 control points");
  }
  const double diag = bounding_box_diagonal(control);
  check_distinct(control, 1e-14 * diag, "rbf_build");
  if (radius <= 0.0)
  {
    radius = diag;
  }
  if (!(radius > 0.0) || !std::isfinite(radius))
  {
    throw DomainError("rbf_build: radius must be positive");
  }

  Matrix p(n, d + 1);
  p.col(0).setOnes();
  p.rightCols(d) = control;
  if (Eigen::FullPivLU<Matrix>(p).rank() < d + 1)
  {
    throw DomainError("rbf_build: control points are affinely degenerate");
  }

  const Index size = n + 1 + d;
  Matrix sys = Matrix::Zero(size, size);
  for (Index i = 0; i < n; ++i)
  {
    for (Index j = 0; j < n; ++j)
    {
      sys(i, j) = rbf_kernel(kernel, (control.row(i) - control.row(j)).norm(), radius);
    }
  }
  sys.topRightCorner(n, d + 1) = p;
  sys.bottomLeftCorner(d + 1, n) = p.transpose();
  // Fit the displacement. Zero displacement then gives exactly zero weights.
  Matrix rhs = Matrix::Zero(size, d);
  rhs.topRows(n) = deformed - control;

  Eigen::FullPivLU<Matrix> lu(sys);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
  {
    throw SingularMatrixError("rbf_build: interpolation system is singular for kernel " +
                              rbf_kernel_name(kernel));
  }
  Matrix sol = lu.solve(rhs);
  sol += lu.solve(rhs - sys * sol);
  RbfMorph out;
  out.kernel = kernel;
  out.radius = radius;
  out.control = control;
  out.deformed = deformed;
  out.weights = sol.topRows(n);
  out.constant = sol.row(n).transpose();
  out.linear = sol.bottomRows(d).transpose() + Matrix::Identity(d, d);
  return out;
}

Matrix rbf_kernel_columns(const RbfMorph &morph, const Matrix &points)
{
  if (points.cols() != morph.control.cols())
  {
    throw DomainError("rbf: point dimension differs from the control points");
  }
  Matrix k(points.rows(), morph.control.rows());
  parallel_for(static_cast<std::size_t>(points.rows()), [&](std::size_t p) {
    const Index row = static_cast<Index>(p);
    for (Index i = 0; i < morph.control.rows(); ++i)
    {
      k(row, i) = rbf_kernel(morph.kernel, (points.row(row) - morph.control.row(i)).norm(),
                             morph.radius);
    }
  });
  return k;
}

Matrix rbf_deform(const RbfMorph &morph, const Matrix &kernel_columns, const Matrix &points)
{
  if (kernel_columns.rows() != points.rows() || kernel_columns.cols() != morph.control.rows())
  {
    throw DomainError("rbf_deform: cached kernel columns do not match the point set");
  }
  Matrix out = kernel_columns * morph.weights + points * morph.linear.transpose();
  out.rowwise() += morph.constant.transpose();
  return out;
}

Matrix rbf_deform(const RbfMorph &morph, const Matrix &points)
{
  return rbf_deform(morph, rbf_kernel_columns(morph, points), points);
}

// ---------------------------------------------------------------------------

IdwMorph idw_build(const Matrix &control, const Matrix &deformed, int power)
{
  check_control_sets(control, deformed, "idw_build");
  if (power < 1)
  {
    throw DomainError("idw_build: power must be a positive integer");
  }
  const double diag = bounding_box_diagonal(control);
  IdwMorph out{control, deformed, power, 1e-14 * diag};
  check_distinct(control, out.hit_tolerance, "idw_build");
  return out;
}

Matrix idw_weights(const IdwMorph &morph, const Matrix &points)
{
  if (points.cols() != morph.control.cols())
  {
    throw DomainError("idw: point dimension differs from the control points");
  }
  const Index n = morph.control.rows();
  Matrix w = Matrix::Zero(points.rows(), n);
  parallel_for(static_cast<std::size_t>(points.rows()), [&](std::size_t p) {
    const Index row = static_cast<Index>(p);
    Vector dist(n);
    for (Index k = 0; k < n; ++k)
    {
      dist(k) = (points.row(row) - morph.control.row(k)).norm();
      if (dist(k) <= morph.hit_tolerance)
      {
        w(row, k) = 1.0;
        return;
      }
    }
    // Scale by the nearest distance so large powers do not underflow.
    const double nearest = dist.minCoeff();
    double total = 0.0;
    for (Index k = 0; k < n; ++k)
    {
      w(row, k) = std::pow(nearest / dist(k), morph.power);
      total += w(row, k);
    }
    w.row(row) /= total;
  });
  return w;
}

Matrix idw_deform(const IdwMorph &morph, const Matrix &weights, const Matrix &points)
{
  if (weights.rows() != points.rows() || weights.cols() != morph.control.rows())
  {
    throw DomainError("idw_deform: cached weights do not match the point set");
  }
  Matrix out = points + weights * (morph.deformed - morph.control);
  for (Index p = 0; p < points.rows(); ++p)
  {
    Index k = 0;
    if (weights.row(p).maxCoeff(&k) == 1.0 && weights.row(p).sum() == 1.0)
    {
      out.row(p) = morph.deformed.row(k) + (points.row(p) - morph.control.row(k));
    }
  }
  return out;
}

Matrix idw_deform(const IdwMorph &morph, const Matrix &points)
{
  return idw_deform(morph, idw_weights(morph, points), points);
}

}  // namespace mor
