// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "doctest.h"
#include "mor/morph.hpp"
#include "oracles.hpp"

using namespace mor;

namespace
{

FfdLattice unit_lattice(int dim, std::vector<int> degrees)
{
  return FfdLattice(Vector::Zero(dim), Matrix::Identity(dim, dim), std::move(degrees));
}

Matrix cloud(oracle::Gen &gen, Index n, Index d, double lo = 0.0, double hi = 1.0)
{
  return gen.matrix(n, d, lo, hi);
}

// n x n lattice on the unit square with each point moved by up to 10% of
// the spacing.
Matrix jittered_lattice(oracle::Gen &gen, int n)
{
  Matrix x(n * n, 2);
  const double h = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i)
  {
    for (int j = 0; j < n; ++j)
    {
      x(i * n + j, 0) = i * h + gen.uniform(-0.1, 0.1) * h;
      x(i * n + j, 1) = j * h + gen.uniform(-0.1, 0.1) * h;
    }
  }
  return x;
}

const RbfKernel kAllKernels[] = {RbfKernel::gaussian, RbfKernel::thin_plate,
                                 RbfKernel::wendland_c2, RbfKernel::multiquadric,
                                 RbfKernel::inverse_multiquadric};

}  // namespace

TEST_CASE("Bernstein polynomials")
{
  CHECK(bernstein(0, 3, 0.0) == 1.0);
  CHECK(bernstein(3, 3, 1.0) == 1.0);
  CHECK(bernstein(1, 2, 0.5) == doctest::Approx(0.5));
  oracle::Gen gen(51);
  for (int trial = 0; trial < 50; ++trial)
  {
    const int n = gen.integer(1, 8);
    const double t = gen.uniform(0, 1);
    double sum = 0.0, mean = 0.0;
    for (int k = 0; k <= n; ++k)
    {
      const double b = bernstein(k, n, t);
      CHECK(b == doctest::Approx(oracle::binomial(n, k) * std::pow(t, k) * std::pow(1 - t, n - k)));
      sum += b;
      mean += b * k / n;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mean == doctest::Approx(t).epsilon(1e-13));
  }
}

TEST_CASE("FFD lattice indexing and maps")
{
  Matrix axes(2, 2);
  axes << 2.0, 0.5, 0.0, 1.0;
  Vector origin(2);
  origin << -1.0, 3.0;
  FfdLattice lat(origin, axes, {2, 3});
  CHECK(lat.control_count() == 12);
  for (Index c = 0; c < lat.control_count(); ++c)
  {
    CHECK(lat.control_index(lat.control_multi_index(c)) == c);
  }
  CHECK(lat.control_index({1, 0}) == 1);
  oracle::Gen gen(52);
  for (int trial = 0; trial < 20; ++trial)
  {
    const Vector x = gen.vector(2, -5, 5);
    CHECK((lat.from_lattice(lat.to_lattice(x)) - x).norm() < 1e-13);
  }
  CHECK_THROWS_AS(FfdLattice(origin, Matrix::Zero(2, 2), {1, 1}), DomainError);
  CHECK_THROWS_AS(FfdLattice(origin, axes, {0, 1}), DomainError);
}

TEST_CASE("FFD deformation")
{
  oracle::Gen gen(53);
  SUBCASE("zero displacement is the identity")
  {
    FfdLattice lat = unit_lattice(3, {2, 3, 1});
    const Matrix x = cloud(gen, 200, 3, -0.2, 1.2);
    CHECK((ffd_deform(lat, x) - x).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("displaced corner moves the corner point")
  {
    Matrix axes(2, 2);
    axes << 2.0, 0.0, 0.0, 3.0;
    FfdLattice lat(Vector::Zero(2), axes, {2, 2});
    lat.displacements(lat.control_index({0, 0}), 0) = 0.1;
    lat.displacements(lat.control_index({0, 0}), 1) = -0.2;
    Matrix x = Matrix::Zero(1, 2);
    const Matrix y = ffd_deform(lat, x);
    CHECK(y(0, 0) == doctest::Approx(0.2));
    CHECK(y(0, 1) == doctest::Approx(-0.6));
  }
  SUBCASE("bilinear midpoint sees a quarter of the corner displacement")
  {
    FfdLattice lat = unit_lattice(2, {1, 1});
    lat.displacements(lat.control_index({1, 1}), 0) = 0.4;
    Matrix x(1, 2);
    x << 0.5, 0.5;
    CHECK(ffd_deform(lat, x)(0, 0) == doctest::Approx(0.6));
  }
  SUBCASE("points outside the lattice do not move")
  {
    FfdLattice lat = unit_lattice(2, {2, 2});
    lat.displacements.setConstant(0.3);
    Matrix x(2, 2);
    x << 1.5, 0.5, -0.1, 0.2;
    CHECK((ffd_deform(lat, x) - x).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("uniform displacement translates the interior")
  {
    FfdLattice lat = unit_lattice(2, {3, 2});
    lat.displacements.col(0).setConstant(0.05);
    const Matrix x = cloud(gen, 100, 2);
    const Matrix y = ffd_deform(lat, x);
    CHECK(((y - x).col(0).array() - 0.05).abs().maxCoeff() <= 1e-12);
    CHECK((y - x).col(1).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("FFD weights are a partition of unity and cache bitwise")
{
  oracle::Gen gen(54);
  for (int trial = 0; trial < 10; ++trial)
  {
    const int d = gen.integer(1, 3);
    std::vector<int> deg;
    for (int k = 0; k < d; ++k)
    {
      deg.push_back(gen.integer(1, 4));
    }
    FfdLattice lat = unit_lattice(d, deg);
    lat.displacements = gen.matrix(lat.control_count(), d, -0.1, 0.1);
    const Matrix x = cloud(gen, 50, d);
    const FfdWeights w = ffd_weights(lat, x);
    CHECK((w.weights.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    const Matrix a = ffd_deform(lat, w, x);
    const Matrix b = ffd_deform(lat, x);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("RBF kernels")
{
  CHECK(rbf_kernel(RbfKernel::gaussian, 0.0, 2.0) == 1.0);
  CHECK(rbf_kernel(RbfKernel::thin_plate, 0.0, 1.0) == 0.0);
  CHECK(rbf_kernel(RbfKernel::wendland_c2, 0.0, 1.0) == 1.0);
  CHECK(rbf_kernel(RbfKernel::wendland_c2, 1.0, 1.0) == 0.0);
  CHECK(rbf_kernel(RbfKernel::wendland_c2, 2.0, 1.0) == 0.0);
  CHECK(rbf_kernel(RbfKernel::multiquadric, 0.0, 3.0) == 3.0);
  CHECK(rbf_kernel(RbfKernel::inverse_multiquadric, 0.0, 4.0) == 0.25);
  for (RbfKernel k : kAllKernels)
  {
    CHECK(parse_rbf_kernel(rbf_kernel_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_rbf_kernel("cubic"), DomainError);
}

TEST_CASE("RBF identity and interpolation")
{
  oracle::Gen gen(55);
  for (RbfKernel kernel : kAllKernels)
  {
    CAPTURE(rbf_kernel_name(kernel));
    const Matrix xc = jittered_lattice(gen, 5);

    // Undeformed controls give the identity.
    const RbfMorph same = rbf_build(xc, xc, kernel);
    CHECK(same.weights.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((same.linear - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(same.constant.cwiseAbs().maxCoeff() <= 1e-12);
    const Matrix x0 = cloud(gen, 100, 2);
    CHECK((rbf_deform(same, x0) - x0).cwiseAbs().maxCoeff() <= 1e-12);

    // Interpolation and side conditions.
    const Matrix yc = xc + gen.matrix(xc.rows(), 2, -0.05, 0.05);
    const RbfMorph m = rbf_build(xc, yc, kernel);
    CHECK((rbf_deform(m, xc) - yc).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(m.weights.colwise().sum().cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((xc.transpose() * m.weights).cwiseAbs().maxCoeff() <= 1e-9);

    // Naive double loop. Summation order alone moves the result by a few
    // ulps of sum |gamma_i phi_i|, which is large for ill-conditioned kernels.
    const Matrix x = cloud(gen, 30, 2);
    auto phi = [&](double r) { return rbf_kernel(kernel, r, m.radius); };
    const Matrix ref = oracle::rbf_naive(m.control, m.weights, m.constant, m.linear, x, phi);
    const Matrix abs_ref = oracle::rbf_naive(m.control, m.weights.cwiseAbs(),
                                             m.constant.cwiseAbs(), m.linear.cwiseAbs(),
                                             x.cwiseAbs(), [&](double r) { return std::abs(phi(r)); });
    const double scale = std::max(1.0, abs_ref.cwiseAbs().maxCoeff());
    CHECK((rbf_deform(m, x) - ref).cwiseAbs().maxCoeff() <= 1e-14 * scale);
    const Matrix cols = rbf_kernel_columns(m, x);
    CHECK((rbf_deform(m, cols, x) - rbf_deform(m, x)).cwiseAbs().maxCoeff() == 0.0);

    // Affine deformations are reproduced exactly.
    Matrix q(2, 2);
    q << 1.1, 0.2, -0.1, 0.9;
    Vector c(2);
    c << 0.3, -0.4;
    const Matrix ya = (xc * q.transpose()).rowwise() + c.transpose();
    const RbfMorph affine = rbf_build(xc, ya, kernel);
    const Matrix expect = (x * q.transpose()).rowwise() + c.transpose();
    CHECK((rbf_deform(affine, x) - expect).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("RBF interpolation residual stays at round-off of the weighted sum")
{
  // Clustered random controls make flat kernels ill-conditioned; the
  // interpolation residual is then bounded by eps times sum |gamma_i phi_i|.
  oracle::Gen gen(57);
  for (int trial = 0; trial < 5; ++trial)
  {
    for (RbfKernel kernel : kAllKernels)
    {
      CAPTURE(rbf_kernel_name(kernel));
      const Matrix xc = cloud(gen, 20, 2);
      const Matrix yc = xc + gen.matrix(20, 2, -0.05, 0.05);
      const RbfMorph m = rbf_build(xc, yc, kernel);
      const Matrix cols = rbf_kernel_columns(m, xc);
      const double sum = (cols.cwiseAbs() * m.weights.cwiseAbs()).maxCoeff() + 2.0;
      const double eps = std::numeric_limits<double>::epsilon();
      CHECK((rbf_deform(m, xc) - yc).cwiseAbs().maxCoeff() <= 10.0 * eps * sum);
      const RbfMorph same = rbf_build(xc, xc, kernel);
      CHECK(same.weights.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("RBF input checks")
{
  Matrix xc(4, 2);
  xc << 0, 0, 1, 0, 0, 1, 0, 0;
  CHECK_THROWS_AS(rbf_build(xc, xc, RbfKernel::gaussian), DomainError);
  Matrix line(3, 2);
  line << 0, 0, 1, 1, 2, 2;
  CHECK_THROWS_AS(rbf_build(line, line, RbfKernel::gaussian), DomainError);
  CHECK_THROWS_AS(rbf_build(Matrix::Identity(2, 2), Matrix::Identity(2, 2), RbfKernel::gaussian),
                  DomainError);
}

TEST_CASE("IDW")
{
  oracle::Gen gen(56);
  const Matrix xc = cloud(gen, 15, 3);
  const Matrix yc = xc + gen.matrix(15, 3, -0.1, 0.1);
  SUBCASE("controls map to their targets")
  {
    const IdwMorph m = idw_build(xc, yc);
    CHECK((idw_deform(m, xc) - yc).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("undeformed controls give the identity")
  {
    const IdwMorph m = idw_build(xc, xc, 3);
    const Matrix x = cloud(gen, 100, 3);
    CHECK((idw_deform(m, x) - x).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("equidistant point averages the displacements")
  {
    Matrix c(2, 1), d(2, 1), x(1, 1);
    c << 0.0, 1.0;
    d << 0.2, 1.4;
    x << 0.5;
    const IdwMorph m = idw_build(c, d);
    CHECK(idw_deform(m, x)(0, 0) == doctest::Approx(0.8));
  }
  SUBCASE("weights sum to one and match the Shepard formula")
  {
    for (int power : {1, 2, 3, 5})
    {
      const IdwMorph m = idw_build(xc, yc, power);
      const Matrix x = cloud(gen, 60, 3, -0.5, 1.5);
      const Matrix w = idw_weights(m, x);
      CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
      CHECK(w.minCoeff() >= 0.0);
      CHECK((idw_deform(m, x) - oracle::shepard(xc, yc, x, power)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((idw_deform(m, w, x) - idw_deform(m, x)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK_THROWS_AS(idw_build(xc, yc, 0), DomainError);
  CHECK_THROWS_AS(idw_build(xc, yc.leftCols(2)), DomainError);
}
