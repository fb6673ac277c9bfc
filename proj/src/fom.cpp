// SPDX-License-Identifier: Apache-2.0

#include "mor/fom.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace mor
{

namespace instrument
{
namespace
{
std::atomic<std::size_t> reads{0};
}
std::size_t full_order_reads() { return reads.load(); }
void reset_full_order_reads() { reads = 0; }
void note_full_order_read() { ++reads; }
}  // namespace instrument

// ---------------------------------------------------------------------------

ParamDomain::ParamDomain(Vector lower, Vector upper)
  : lower_(std::move(lower)), upper_(std::move(upper))
{
  if (lower_.size() == 0 || lower_.size() != upper_.size())
  {
    throw DomainError("ParamDomain: bounds must be nonempty and of equal length");
  }
  for (Index i = 0; i < lower_.size(); ++i)
  {
    if (!(lower_(i) < upper_(i)))
    {
      throw DomainError("ParamDomain: lower bound must be below upper bound");
    }
  }
}

bool ParamDomain::contains(const Parameter &mu) const
{
  if (mu.size() != dim())
  {
    return false;
  }
  return (mu.array() >= lower_.array()).all() && (mu.array() <= upper_.array()).all();
}

std::vector<Parameter> ParamDomain::uniform_grid(int count) const
{
  if (count < 1)
  {
    throw DomainError("uniform_grid: count must be positive");
  }
  const Index p = dim();
  std::size_t total = 1;
  for (Index i = 0; i < p; ++i)
  {
    total *= static_cast<std::size_t>(count);
  }
  std::vector<Parameter> out;
  out.reserve(total);
  for (std::size_t k = 0; k < total; ++k)
  {
    Parameter mu(p);
    std::size_t rem = k;
    for (Index i = 0; i < p; ++i)
    {
      const auto idx = static_cast<double>(rem % static_cast<std::size_t>(count));
      rem /= static_cast<std::size_t>(count);
      if (count == 1)
      {
        mu(i) = 0.5 * (lower_(i) + upper_(i));
      }
      else if (idx == count - 1)
      {
        mu(i) = upper_(i);
      }
      else
      {
        mu(i) = std::min(upper_(i), lower_(i) + (upper_(i) - lower_(i)) * idx / (count - 1));
      }
    }
    out.push_back(std::move(mu));
  }
  return out;
}

// ---------------------------------------------------------------------------

AffineSystem::AffineSystem(std::string name, std::vector<SparseMatrix> matrix_terms,
                           ThetaMap theta_a, std::vector<Vector> rhs_terms,
                           ThetaMap theta_f, SparseMatrix gram, ParamDomain domain,
                           std::vector<Vector> output_terms, ThetaMap theta_l)
  : name_(std::move(name)), matrix_terms_(std::move(matrix_terms)),
    theta_a_(std::move(theta_a)), rhs_terms_(std::move(rhs_terms)),
    theta_f_(std::move(theta_f)), gram_(std::move(gram)), domain_(std::move(domain)),
    output_terms_(std::move(output_terms)), theta_l_(std::move(theta_l))
{
  validate();
}

void AffineSystem::validate()
{
  if (matrix_terms_.empty() || !theta_a_)
  {
    throw DomainError("AffineSystem: at least one matrix term and theta_a required");
  }
  const Index n = matrix_terms_.front().rows();
  for (const auto &a : matrix_terms_)
  {
    if (a.rows() != n || a.cols() != n)
    {
      throw DomainError("AffineSystem: matrix terms must share one square shape");
    }
  }
  if (!rhs_terms_.empty() && !theta_f_)
  {
    throw DomainError("AffineSystem: theta_f required with rhs terms");
  }
  for (const auto &f : rhs_terms_)
  {
    if (f.size() != n)
    {
      throw DomainError("AffineSystem: rhs term length mismatch");
    }
  }
  if (!output_terms_.empty() && !theta_l_)
  {
    throw DomainError("AffineSystem: theta_l required with output terms");
  }
  for (const auto &l : output_terms_)
  {
    if (l.size() != n)
    {
      throw DomainError("AffineSystem: output term length mismatch");
    }
  }
  if (gram_.rows() != n || gram_.cols() != n)
  {
    throw DomainError("AffineSystem: gram shape mismatch");
  }
  Eigen::SimplicialLLT<SparseMatrix> llt(gram_);
  if (llt.info() != Eigen::Success)
  {
    throw DomainError("AffineSystem: gram matrix is not SPD");
  }
  dofs_ = n;
}

Vector AffineSystem::theta_a(const Parameter &mu) const
{
  Vector t = theta_a_(mu);
  if (static_cast<std::size_t>(t.size()) != q_a())
  {
    throw DomainError("AffineSystem: theta_a returned wrong length");
  }
  return t;
}

Vector AffineSystem::theta_f(const Parameter &mu) const
{
  if (q_f() == 0)
  {
    return Vector();
  }
  Vector t = theta_f_(mu);
  if (static_cast<std::size_t>(t.size()) != q_f())
  {
    throw DomainError("AffineSystem: theta_f returned wrong length");
  }
  return t;
}

Vector AffineSystem::theta_l(const Parameter &mu) const
{
  if (compliant())
  {
    return theta_f(mu);
  }
  Vector t = theta_l_(mu);
  if (static_cast<std::size_t>(t.size()) != q_l())
  {
    throw DomainError("AffineSystem: theta_l returned wrong length");
  }
  return t;
}

const SparseMatrix &AffineSystem::matrix_term(std::size_t q) const
{
  instrument::note_full_order_read();
  return matrix_terms_.at(q);
}

const Vector &AffineSystem::rhs_term(std::size_t q) const
{
  instrument::note_full_order_read();
  return rhs_terms_.at(q);
}

const Vector &AffineSystem::output_term(std::size_t q) const
{
  instrument::note_full_order_read();
  return compliant() ? rhs_terms_.at(q) : output_terms_.at(q);
}

const SparseMatrix &AffineSystem::gram() const
{
  instrument::note_full_order_read();
  return gram_;
}

SparseMatrix AffineSystem::assemble_matrix(const Parameter &mu) const
{
  const Vector t = theta_a(mu);
  SparseMatrix a = t(0) * matrix_term(0);
  for (std::size_t q = 1; q < q_a(); ++q)
  {
    a += t(static_cast<Index>(q)) * matrix_term(q);
  }
  return a;
}

Vector AffineSystem::assemble_rhs(const Parameter &mu) const
{
  Vector f = Vector::Zero(dofs_);
  if (q_f() == 0)
  {
    return f;
  }
  const Vector t = theta_f(mu);
  for (std::size_t q = 0; q < q_f(); ++q)
  {
    f += t(static_cast<Index>(q)) * rhs_term(q);
  }
  return f;
}

double AffineSystem::output(const Vector &u, const Parameter &mu) const
{
  if (q_l() == 0)
  {
    return 0.0;
  }
  const Vector t = theta_l(mu);
  double s = 0.0;
  for (std::size_t q = 0; q < q_l(); ++q)
  {
    s += t(static_cast<Index>(q)) * output_term(q).dot(u);
  }
  return s;
}

AffineSystem AffineSystem::with_rhs(std::vector<Vector> rhs_terms, ThetaMap theta_f) const
{
  AffineSystem out(name_, matrix_terms_, theta_a_, std::move(rhs_terms), std::move(theta_f),
                   gram_, domain_, output_terms_, theta_l_);
  out.coordinates = coordinates;
  return out;
}

Vector solve_with_load(const AffineSystem &system, const Parameter &mu, const Vector &load)
{
  if (load.size() != system.dof_count())
  {
    throw DomainError("solve_with_load: load length mismatch");
  }
  const SparseMatrix a = system.assemble_matrix(mu);
  Vector u;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() == Eigen::Success)
  {
    u = ldlt.solve(load);
  }
  else
  {
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
    {
      throw SingularMatrixError("fom_solve: assembled matrix is singular");
    }
    u = lu.solve(load);
  }
  const double fnorm = load.norm();
  Vector r = load - a * u;
  if (r.norm() > 1e-10 * fnorm)
  {
    // One step of iterative refinement.
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(a);
    if (lu.info() == Eigen::Success)
    {
      u += lu.solve(r);
      r = load - a * u;
    }
  }
  if (!u.allFinite() || r.norm() > 1e-10 * fnorm)
  {
    throw SingularMatrixError("fom_solve: residual check failed");
  }
  return u;
}

FomSolution fom_solve(const AffineSystem &system, const Parameter &mu)
{
  if (!system.domain().contains(mu))
  {
    throw DomainError("fom_solve: parameter outside domain");
  }
  FomSolution out;
  out.mu = mu;
  out.coefficients = solve_with_load(system, mu, system.assemble_rhs(mu));
  out.output = system.output(out.coefficients, mu);
  return out;
}

// ---------------------------------------------------------------------------
// Bilinear elements on tensor grids with per-element constant coefficients.

namespace
{

struct ElementCoefficients
{
  double kxx = 0.0;   // weight of int dx u dx v
  double kyy = 0.0;   // weight of int dy u dy v
  double mass = 0.0;  // weight of int u v
};

// 1D P1 stiffness (times h) and mass (divided by h) on an interval.
constexpr std::array<std::array<double, 2>, 2> kStiff1d{{{1.0, -1.0}, {-1.0, 1.0}}};
constexpr std::array<std::array<double, 2>, 2> kMass1d{{{2.0 / 6.0, 1.0 / 6.0},
                                                        {1.0 / 6.0, 2.0 / 6.0}}};

template <typename CoefFn>
SparseMatrix assemble_tensor_q1(const std::vector<double> &xs, const std::vector<double> &ys,
                                const CoefFn &coef, const std::vector<Index> &node_dof,
                                Index dofs)
{
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nx) * ny * 16);
  for (int ej = 0; ej < ny; ++ej)
  {
    for (int ei = 0; ei < nx; ++ei)
    {
      const ElementCoefficients c = coef(ei, ej);
      const double hx = xs[ei + 1] - xs[ei];
      const double hy = ys[ej + 1] - ys[ej];
      for (int a = 0; a < 4; ++a)
      {
        const int ax = a % 2, ay = a / 2;
        const Index ra = node_dof[(ej + ay) * (nx + 1) + ei + ax];
        if (ra < 0)
        {
          continue;
        }
        for (int b = 0; b < 4; ++b)
        {
          const int bx = b % 2, by = b / 2;
          const Index cb = node_dof[(ej + by) * (nx + 1) + ei + bx];
          if (cb < 0)
          {
            continue;
          }
          const double v =
              c.kxx * (hy / hx) * kStiff1d[ax][bx] * kMass1d[ay][by] +
              c.kyy * (hx / hy) * kMass1d[ax][bx] * kStiff1d[ay][by] +
              c.mass * hx * hy * kMass1d[ax][bx] * kMass1d[ay][by];
          trip.emplace_back(ra, cb, v);
        }
      }
    }
  }
  SparseMatrix m(dofs, dofs);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

std::vector<double> linspace(double a, double b, int n)
{
  std::vector<double> v(n + 1);
  for (int i = 0; i <= n; ++i)
  {
    v[i] = a + (b - a) * i / n;
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

Vector theta_thermal(double mu)
{
  if (!(mu > 0.0 && mu < 1.0))
  {
    throw DomainError("theta_thermal: mu must lie in (0, 1)");
  }
  Vector t(4);
  t << 1.0 / (2.0 * mu), 2.0 * mu, 1.0 / (2.0 - 2.0 * mu), 2.0 - 2.0 * mu;
  return t;
}

AffineSystem assemble_thermal_block(const ThermalBlockOptions &opts)
{
  const int n = opts.n;
  if (n < 4 || n % 2 != 0)
  {
    throw DomainError("assemble_thermal_block: n must be even and at least 4");
  }
  if (!(opts.sigma1 > 0.0 && opts.sigma2 > 0.0))
  {
    throw DomainError("assemble_thermal_block: conductivities must be positive");
  }
  if (!(opts.mu_min > 0.0 && opts.mu_max < 1.0))
  {
    throw DomainError("assemble_thermal_block: parameter range must lie in (0, 1)");
  }
  const auto xs = linspace(0.0, 1.0, n);
  const auto ys = xs;
  // Nodes on x = 1 carry the Dirichlet condition and are eliminated.
  std::vector<Index> node_dof((n + 1) * (n + 1), -1);
  Matrix coords(static_cast<Index>(n) * (n + 1), 2);
  for (int j = 0; j <= n; ++j)
  {
    for (int i = 0; i < n; ++i)
    {
      const Index d = static_cast<Index>(j) * n + i;
      node_dof[j * (n + 1) + i] = d;
      coords(d, 0) = xs[i];
      coords(d, 1) = ys[j];
    }
  }
  const Index dofs = static_cast<Index>(n) * (n + 1);
  const int half = n / 2;
  const double s1 = opts.sigma1, s2 = opts.sigma2;

  std::vector<SparseMatrix> terms;
  terms.push_back(assemble_tensor_q1(
      xs, ys, [&](int ei, int) { return ElementCoefficients{ei < half ? s1 : 0.0, 0.0, 0.0}; },
      node_dof, dofs));
  terms.push_back(assemble_tensor_q1(
      xs, ys, [&](int ei, int) { return ElementCoefficients{0.0, ei < half ? s1 : 0.0, 0.0}; },
      node_dof, dofs));
  terms.push_back(assemble_tensor_q1(
      xs, ys, [&](int ei, int) { return ElementCoefficients{ei >= half ? s2 : 0.0, 0.0, 0.0}; },
      node_dof, dofs));
  terms.push_back(assemble_tensor_q1(
      xs, ys, [&](int ei, int) { return ElementCoefficients{0.0, ei >= half ? s2 : 0.0, 0.0}; },
      node_dof, dofs));
  for (auto &t : terms)
  {
    t.prune(0.0);
  }

  // Heat flux through x = 0; the boundary is not stretched by the maps.
  Vector flux = Vector::Zero(dofs);
  const double h = 1.0 / n;
  for (int j = 0; j < n; ++j)
  {
    flux(node_dof[j * (n + 1)]) += 0.5 * h * opts.flux;
    flux(node_dof[(j + 1) * (n + 1)]) += 0.5 * h * opts.flux;
  }

  SparseMatrix gram = assemble_tensor_q1(
      xs, ys, [](int, int) { return ElementCoefficients{1.0, 1.0, 1.0}; }, node_dof, dofs);

  Vector lo(1), hi(1);
  lo << opts.mu_min;
  hi << opts.mu_max;
  AffineSystem sys(
      "thermal-block", std::move(terms),
      [](const Parameter &mu) { return theta_thermal(mu(0)); }, {std::move(flux)},
      [](const Parameter &) { return Vector::Ones(1); }, std::move(gram),
      ParamDomain(lo, hi));
  sys.coordinates = std::move(coords);
  return sys;
}

AffineSystem assemble_thermal_block(int n, double sigma1, double sigma2)
{
  ThermalBlockOptions opts;
  opts.n = n;
  opts.sigma1 = sigma1;
  opts.sigma2 = sigma2;
  return assemble_thermal_block(opts);
}

// ---------------------------------------------------------------------------

double gaussian_forcing(double x1, double x2, const Parameter &mu)
{
  const double d1 = x1 - mu(0), d2 = x2 - mu(1);
  return std::exp(-2.0 * d1 * d1 - 2.0 * d2 * d2);
}

Vector GaussianPoisson::sample_forcing(const Parameter &mu) const
{
  Vector g(node_coordinates.rows());
  for (Index k = 0; k < g.size(); ++k)
  {
    g(k) = gaussian_forcing(node_coordinates(k, 0), node_coordinates(k, 1), mu);
  }
  return g;
}

Vector GaussianPoisson::load_from_nodal(const Vector &nodal) const
{
  return load_operator * nodal;
}

FomSolution GaussianPoisson::solve(const Parameter &mu) const
{
  FomSolution out;
  out.mu = mu;
  const Vector f = load_from_nodal(sample_forcing(mu));
  out.coefficients = solve_with_load(system, mu, f);
  out.output = f.dot(out.coefficients);
  return out;
}

GaussianPoisson assemble_gaussian_poisson(int n, double alpha_t)
{
  if (n < 3)
  {
    throw DomainError("assemble_gaussian_poisson: n must be at least 3");
  }
  if (!(alpha_t > 0.0))
  {
    throw DomainError("assemble_gaussian_poisson: alpha_t must be positive");
  }
  const auto xs = linspace(-1.0, 1.0, n);
  const auto ys = xs;
  const Index nodes = static_cast<Index>(n + 1) * (n + 1);
  std::vector<Index> node_dof(nodes, -1);
  std::vector<Index> all_nodes(nodes);
  std::vector<Index> dof_nodes;
  Matrix node_coords(nodes, 2);
  for (int j = 0; j <= n; ++j)
  {
    for (int i = 0; i <= n; ++i)
    {
      const Index k = static_cast<Index>(j) * (n + 1) + i;
      all_nodes[k] = k;
      node_coords(k, 0) = xs[i];
      node_coords(k, 1) = ys[j];
      if (i > 0 && i < n && j > 0 && j < n)
      {
        node_dof[k] = static_cast<Index>(dof_nodes.size());
        dof_nodes.push_back(k);
      }
    }
  }
  const Index dofs = static_cast<Index>(dof_nodes.size());
  SparseMatrix stiff = assemble_tensor_q1(
      xs, ys, [](int, int) { return ElementCoefficients{1.0, 1.0, 0.0}; }, node_dof, dofs);
  SparseMatrix mass = assemble_tensor_q1(
      xs, ys, [](int, int) { return ElementCoefficients{0.0, 0.0, 1.0}; }, node_dof, dofs);
  SparseMatrix full_mass = assemble_tensor_q1(
      xs, ys, [](int, int) { return ElementCoefficients{0.0, 0.0, 1.0}; }, all_nodes, nodes);

  // Rows of interior dofs, columns of every node.
  std::vector<Eigen::Triplet<double>> trip;
  for (Index c = 0; c < full_mass.outerSize(); ++c)
  {
    for (SparseMatrix::InnerIterator it(full_mass, c); it; ++it)
    {
      const Index d = node_dof[it.row()];
      if (d >= 0)
      {
        trip.emplace_back(d, it.col(), it.value());
      }
    }
  }
  SparseMatrix load_op(dofs, nodes);
  load_op.setFromTriplets(trip.begin(), trip.end());

  Matrix coords(dofs, 2);
  for (Index d = 0; d < dofs; ++d)
  {
    coords.row(d) = node_coords.row(dof_nodes[d]);
  }
  SparseMatrix gram = stiff + mass;
  Vector lo = Vector::Constant(2, -1.0), hi = Vector::Constant(2, 1.0);
  AffineSystem sys(
      "gaussian-poisson", {std::move(stiff)},
      [alpha_t](const Parameter &) { return Vector::Constant(1, alpha_t); }, {}, {},
      std::move(gram), ParamDomain(lo, hi));
  sys.coordinates = std::move(coords);
  return GaussianPoisson{std::move(sys), std::move(node_coords), std::move(dof_nodes),
                         std::move(load_op)};
}

// ---------------------------------------------------------------------------

double nonlinear_viscosity(double x1, double x2, const Parameter &mu)
{
  const double d1 = x1 - mu(0) - 0.5, d2 = x2 - mu(1) - 0.5;
  return std::exp(2.0 * (-2.0 * d1 * d1 - 2.0 * d2 * d2)) / 100.0 + 0.01;
}

namespace
{

// 2x2 Gauss rule on the unit square.
constexpr double kGaussLo = 0.5 - 0.28867513459481288225;
constexpr double kGaussHi = 0.5 + 0.28867513459481288225;
constexpr std::array<double, 2> kGauss{kGaussLo, kGaussHi};

inline double shape1d(int a, double t) { return a == 0 ? 1.0 - t : t; }
inline double dshape1d(int a) { return a == 0 ? -1.0 : 1.0; }

struct QuadPoint
{
  double xi, eta;
  std::array<double, 4> phi;
  std::array<std::array<double, 2>, 4> grad;  // physical gradient
};

std::array<QuadPoint, 4> make_quadrature(double h)
{
  std::array<QuadPoint, 4> qps{};
  for (int q = 0; q < 4; ++q)
  {
    QuadPoint &qp = qps[q];
    qp.xi = kGauss[q % 2];
    qp.eta = kGauss[q / 2];
    for (int a = 0; a < 4; ++a)
    {
      const int ax = a % 2, ay = a / 2;
      qp.phi[a] = shape1d(ax, qp.xi) * shape1d(ay, qp.eta);
      qp.grad[a] = {dshape1d(ax) * shape1d(ay, qp.eta) / h,
                    shape1d(ax, qp.xi) * dshape1d(ay) / h};
    }
  }
  return qps;
}

}  // namespace

NonlinearDiffusion::NonlinearDiffusion(int n, double nonlinearity, double source)
  : n_(n), gamma_(nonlinearity)
{
  if (n < 3)
  {
    throw DomainError("NonlinearDiffusion: n must be at least 3");
  }
  if (nonlinearity < 0.0)
  {
    throw DomainError("NonlinearDiffusion: nonlinearity must be non-negative");
  }
  h_ = 1.0 / n;
  dofs_ = static_cast<Index>(n - 1) * (n - 1);
  coords_.resize(dofs_, 2);
  for (int j = 1; j < n; ++j)
  {
    for (int i = 1; i < n; ++i)
    {
      coords_(dof_of(i, j), 0) = i * h_;
      coords_(dof_of(i, j), 1) = j * h_;
    }
  }
  // A Q1 hat function integrates to h^2.
  load_ = Vector::Constant(dofs_, source * h_ * h_);
  pattern_ = assemble([](double, double, const auto &, const auto &) { return 1.0; }, true);
}

void NonlinearDiffusion::set_load(Vector load)
{
  if (load.size() != dofs_)
  {
    throw DomainError("NonlinearDiffusion: load length mismatch");
  }
  load_ = std::move(load);
}

Index NonlinearDiffusion::dof_of(int i, int j) const
{
  if (i <= 0 || i >= n_ || j <= 0 || j >= n_)
  {
    return -1;
  }
  return static_cast<Index>(j - 1) * (n_ - 1) + (i - 1);
}

// coef(x1, x2, u_h) gives the diffusion coefficient at a quadrature point.
template <typename Coef>
SparseMatrix NonlinearDiffusion::assemble(const Coef &coef, bool with_mass) const
{
  const auto qps = make_quadrature(h_);
  const double w = 0.25 * h_ * h_;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_) * n_ * 16);
  for (int ej = 0; ej < n_; ++ej)
  {
    for (int ei = 0; ei < n_; ++ei)
    {
      std::array<Index, 4> dof{};
      for (int a = 0; a < 4; ++a)
      {
        dof[a] = dof_of(ei + a % 2, ej + a / 2);
      }
      std::array<std::array<double, 4>, 4> local{};
      for (const auto &qp : qps)
      {
        const double x1 = (ei + qp.xi) * h_, x2 = (ej + qp.eta) * h_;
        const double k = coef(x1, x2, qp, dof);
        for (int a = 0; a < 4; ++a)
        {
          for (int b = 0; b < 4; ++b)
          {
            double v = k * (qp.grad[a][0] * qp.grad[b][0] + qp.grad[a][1] * qp.grad[b][1]);
            if (with_mass)
            {
              v += qp.phi[a] * qp.phi[b];
            }
            local[a][b] += w * v;
          }
        }
      }
      for (int a = 0; a < 4; ++a)
      {
        for (int b = 0; b < 4; ++b)
        {
          if (dof[a] >= 0 && dof[b] >= 0)
          {
            trip.emplace_back(dof[a], dof[b], local[a][b]);
          }
        }
      }
    }
  }
  SparseMatrix m(dofs_, dofs_);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix NonlinearDiffusion::diffusion_matrix(const Parameter &mu) const
{
  return assemble([&](double x1, double x2, const auto &, const auto &)
                  { return nonlinear_viscosity(x1, x2, mu); },
                  true);
}

SparseMatrix NonlinearDiffusion::nonlinear_matrix(const Vector &u) const
{
  if (u.size() != dofs_)
  {
    throw DomainError("NonlinearDiffusion: state length mismatch");
  }
  return assemble(
      [&](double, double, const QuadPoint &qp, const std::array<Index, 4> &dof)
      {
        double uh = 0.0;
        for (int a = 0; a < 4; ++a)
        {
          if (dof[a] >= 0)
          {
            uh += u(dof[a]) * qp.phi[a];
          }
        }
        return gamma_ * uh * uh;
      },
      false);
}

Vector NonlinearDiffusion::residual(const Vector &u, const Parameter &mu) const
{
  return diffusion_matrix(mu) * u + nonlinear_matrix(u) * u - load_;
}

SparseMatrix NonlinearDiffusion::jacobian(const Vector &u, const Parameter &mu) const
{
  // d/du_k of C(u)u adds int 2 gamma u_h phi_k grad(u_h) . grad(phi_i).
  const auto qps = make_quadrature(h_);
  const double w = 0.25 * h_ * h_;
  std::vector<Eigen::Triplet<double>> trip;
  for (int ej = 0; ej < n_; ++ej)
  {
    for (int ei = 0; ei < n_; ++ei)
    {
      std::array<Index, 4> dof{};
      for (int a = 0; a < 4; ++a)
      {
        dof[a] = dof_of(ei + a % 2, ej + a / 2);
      }
      for (const auto &qp : qps)
      {
        double uh = 0.0, gx = 0.0, gy = 0.0;
        for (int a = 0; a < 4; ++a)
        {
          if (dof[a] >= 0)
          {
            uh += u(dof[a]) * qp.phi[a];
            gx += u(dof[a]) * qp.grad[a][0];
            gy += u(dof[a]) * qp.grad[a][1];
          }
        }
        for (int i = 0; i < 4; ++i)
        {
          if (dof[i] < 0)
          {
            continue;
          }
          const double gdot = gx * qp.grad[i][0] + gy * qp.grad[i][1];
          for (int k = 0; k < 4; ++k)
          {
            if (dof[k] >= 0)
            {
              trip.emplace_back(dof[i], dof[k], w * 2.0 * gamma_ * uh * qp.phi[k] * gdot);
            }
          }
        }
      }
    }
  }
  SparseMatrix d(dofs_, dofs_);
  d.setFromTriplets(trip.begin(), trip.end());
  return SparseMatrix(diffusion_matrix(mu) + nonlinear_matrix(u) + d);
}

std::vector<Index> NonlinearDiffusion::entry_support(Index row, Index col) const
{
  const int ir = static_cast<int>(row % (n_ - 1)) + 1, jr = static_cast<int>(row / (n_ - 1)) + 1;
  const int ic = static_cast<int>(col % (n_ - 1)) + 1, jc = static_cast<int>(col / (n_ - 1)) + 1;
  std::vector<Index> out;
  for (int ej = jr - 1; ej <= jr; ++ej)
  {
    for (int ei = ir - 1; ei <= ir; ++ei)
    {
      if (ic < ei || ic > ei + 1 || jc < ej || jc > ej + 1)
      {
        continue;
      }
      for (int a = 0; a < 4; ++a)
      {
        const Index d = dof_of(ei + a % 2, ej + a / 2);
        if (d >= 0 && std::find(out.begin(), out.end(), d) == out.end())
        {
          out.push_back(d);
        }
      }
    }
  }
  return out;
}

namespace
{

template <typename Coef>
double element_entry(int n, double h, Index row, Index col, const Coef &coef, bool with_mass)
{
  const auto qps = make_quadrature(h);
  const double w = 0.25 * h * h;
  const int ir = static_cast<int>(row % (n - 1)) + 1, jr = static_cast<int>(row / (n - 1)) + 1;
  const int ic = static_cast<int>(col % (n - 1)) + 1, jc = static_cast<int>(col / (n - 1)) + 1;
  double total = 0.0;
  for (int ej = jr - 1; ej <= jr; ++ej)
  {
    for (int ei = ir - 1; ei <= ir; ++ei)
    {
      if (ic < ei || ic > ei + 1 || jc < ej || jc > ej + 1)
      {
        continue;
      }
      const int a = (ir - ei) + 2 * (jr - ej);
      const int b = (ic - ei) + 2 * (jc - ej);
      for (const auto &qp : qps)
      {
        const double x1 = (ei + qp.xi) * h, x2 = (ej + qp.eta) * h;
        const double k = coef(ei, ej, x1, x2, qp);
        double v = k * (qp.grad[a][0] * qp.grad[b][0] + qp.grad[a][1] * qp.grad[b][1]);
        if (with_mass)
        {
          v += qp.phi[a] * qp.phi[b];
        }
        total += w * v;
      }
    }
  }
  return total;
}

}  // namespace

double NonlinearDiffusion::diffusion_entry(const Parameter &mu, Index row, Index col) const
{
  return element_entry(
      n_, h_, row, col,
      [&](int, int, double x1, double x2, const QuadPoint &)
      { return nonlinear_viscosity(x1, x2, mu); },
      true);
}

double NonlinearDiffusion::nonlinear_entry(const std::function<double(Index)> &nodal,
                                           Index row, Index col) const
{
  return element_entry(
      n_, h_, row, col,
      [&](int ei, int ej, double, double, const QuadPoint &qp)
      {
        double uh = 0.0;
        for (int a = 0; a < 4; ++a)
        {
          const Index d = dof_of(ei + a % 2, ej + a / 2);
          if (d >= 0)
          {
            uh += nodal(d) * qp.phi[a];
          }
        }
        return gamma_ * uh * uh;
      },
      false);
}

Vector nonlinear_solve(const NonlinearDiffusion &fom, const Parameter &mu, const Vector &guess)
{
  if (guess.size() != fom.dof_count())
  {
    throw DomainError("nonlinear_solve: guess length mismatch");
  }
  Vector u = guess;
  double rnorm = 0.0;
  for (int it = 0; it <= kNewtonMaxIterations; ++it)
  {
    const Vector r = fom.residual(u, mu);
    rnorm = r.norm();
    if (!std::isfinite(rnorm))
    {
      break;
    }
    if (rnorm <= kNewtonTolerance)
    {
      return u;
    }
    if (it == kNewtonMaxIterations)
    {
      break;
    }
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(fom.jacobian(u, mu));
    if (lu.info() != Eigen::Success)
    {
      throw ConvergenceError("nonlinear_solve: singular Jacobian", rnorm);
    }
    u -= lu.solve(r);
  }
  throw ConvergenceError("nonlinear_solve: Newton did not converge", rnorm);
}

}  // namespace mor
