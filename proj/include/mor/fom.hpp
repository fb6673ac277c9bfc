// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_FOM_HPP
#define MOR_FOM_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mor/numkit.hpp"

namespace mor
{

using Parameter = Vector;

// Counts reads of full-order (N_h-sized) data through the accessors of
// AffineSystem and ReducedBasis. Online routines must leave it untouched.
namespace instrument
{
std::size_t full_order_reads();
void reset_full_order_reads();
void note_full_order_read();
}  // namespace instrument

class ParamDomain
{
public:
  ParamDomain(Vector lower, Vector upper);

  Index dim() const { return lower_.size(); }
  const Vector &lower() const { return lower_; }
  const Vector &upper() const { return upper_; }
  bool contains(const Parameter &mu) const;

  // Tensor grid with `count` equispaced points per direction, first
  // coordinate fastest.
  std::vector<Parameter> uniform_grid(int count) const;

private:
  Vector lower_, upper_;
};

// Parametrized linear system sum_q theta_a^q(mu) A_q u = sum_q theta_f^q(mu) f_q
// with optional output terms (compliant l = f when none are given).
class AffineSystem
{
public:
  using ThetaMap = std::function<Vector(const Parameter &)>;

  AffineSystem(std::string name, std::vector<SparseMatrix> matrix_terms, ThetaMap theta_a,
               std::vector<Vector> rhs_terms, ThetaMap theta_f, SparseMatrix gram,
               ParamDomain domain, std::vector<Vector> output_terms = {},
               ThetaMap theta_l = {});

  const std::string &name() const { return name_; }
  Index dof_count() const { return dofs_; }
  std::size_t q_a() const { return matrix_terms_.size(); }
  std::size_t q_f() const { return rhs_terms_.size(); }
  std::size_t q_l() const { return compliant() ? q_f() : output_terms_.size(); }
  bool compliant() const { return output_terms_.empty(); }
  const ParamDomain &domain() const { return domain_; }

  // Theta evaluations never touch N_h-sized data.
  Vector theta_a(const Parameter &mu) const;
  Vector theta_f(const Parameter &mu) const;
  Vector theta_l(const Parameter &mu) const;
  // Raw maps (theta_l falls back to theta_f when compliant).
  const ThetaMap &theta_a_map() const { return theta_a_; }
  const ThetaMap &theta_f_map() const { return theta_f_; }
  const ThetaMap &theta_l_map() const { return compliant() ? theta_f_ : theta_l_; }

  const SparseMatrix &matrix_term(std::size_t q) const;
  const Vector &rhs_term(std::size_t q) const;
  const Vector &output_term(std::size_t q) const;
  const SparseMatrix &gram() const;

  SparseMatrix assemble_matrix(const Parameter &mu) const;
  Vector assemble_rhs(const Parameter &mu) const;
  double output(const Vector &u, const Parameter &mu) const;

  // Same operator and gram with a different right-hand side expansion.
  AffineSystem with_rhs(std::vector<Vector> rhs_terms, ThetaMap theta_f) const;

  // Physical coordinates of each dof (N_h x 2); empty when not attached.
  Matrix coordinates;

private:
  void validate();

  std::string name_;
  std::vector<SparseMatrix> matrix_terms_;
  ThetaMap theta_a_;
  std::vector<Vector> rhs_terms_;
  ThetaMap theta_f_;
  SparseMatrix gram_;
  ParamDomain domain_;
  std::vector<Vector> output_terms_;
  ThetaMap theta_l_;
  Index dofs_ = 0;
};

struct FomSolution
{
  Parameter mu;
  Vector coefficients;
  double output = 0.0;
};

FomSolution fom_solve(const AffineSystem &system, const Parameter &mu);

// Solves sum theta_a A_q u = load for an explicitly given load vector.
Vector solve_with_load(const AffineSystem &system, const Parameter &mu, const Vector &load);

// ---------------------------------------------------------------------------
// Thermal block: [0,1]^2 split at x = mu into conductivities sigma1 | sigma2,
// unit heat flux on x = 0, zero temperature on x = 1, insulated top and bottom.
// Affine terms live on the reference split mu = 0.5.

// ((2mu)^-1, 2mu, (2-2mu)^-1, 2-2mu); requires 0 < mu < 1.
Vector theta_thermal(double mu);

struct ThermalBlockOptions
{
  int n = 32;  // elements per direction, must be even
  double sigma1 = 1.0;
  double sigma2 = 10.0;
  double flux = 1.0;
  double mu_min = 0.1;
  double mu_max = 0.9;
};

inline constexpr double kThermalReferenceMu = 0.5;

AffineSystem assemble_thermal_block(const ThermalBlockOptions &opts);
AffineSystem assemble_thermal_block(int n, double sigma1, double sigma2);

// ---------------------------------------------------------------------------
// Poisson problem on [-1,1]^2 with homogeneous Dirichlet data and a Gaussian
// forcing centred at mu.

double gaussian_forcing(double x1, double x2, const Parameter &mu);

struct GaussianPoisson
{
  AffineSystem system;            // stiffness only (q_f = 0)
  Matrix node_coordinates;        // all (n+1)^2 grid nodes, x fastest
  std::vector<Index> dof_nodes;   // grid node of each interior dof
  SparseMatrix load_operator;     // mass matrix rows of interior dofs, all node columns

  // Forcing sampled at every grid node.
  Vector sample_forcing(const Parameter &mu) const;
  // Load vector of the nodal interpolant of an arbitrary nodal field.
  Vector load_from_nodal(const Vector &nodal) const;
  FomSolution solve(const Parameter &mu) const;
};

GaussianPoisson assemble_gaussian_poisson(int n, double alpha_t);

// ---------------------------------------------------------------------------
// Nonlinear diffusion on [0,1]^2 with zero Dirichlet data:
//   u - div(nu(x;mu) grad u) - gamma div(u^2 grad u) = f.
// Split as A(mu) u + C(u) u = f with A(mu) = M + K_nu(mu) and C(u) = gamma K_{u^2}.

double nonlinear_viscosity(double x1, double x2, const Parameter &mu);

class NonlinearDiffusion
{
public:
  NonlinearDiffusion(int n, double nonlinearity, double source);

  Index dof_count() const { return dofs_; }
  int n() const { return n_; }
  double nonlinearity() const { return gamma_; }
  const Vector &load() const { return load_; }
  void set_load(Vector load);
  const Matrix &coordinates() const { return coords_; }

  SparseMatrix diffusion_matrix(const Parameter &mu) const;
  SparseMatrix nonlinear_matrix(const Vector &u) const;
  Vector residual(const Vector &u, const Parameter &mu) const;
  SparseMatrix jacobian(const Vector &u, const Parameter &mu) const;

  // Single entries (row/col are dof indices), computed from the elements
  // shared by the two dofs only. `nodal` returns u at a dof index.
  double diffusion_entry(const Parameter &mu, Index row, Index col) const;
  double nonlinear_entry(const std::function<double(Index)> &nodal, Index row,
                         Index col) const;
  // Dofs whose values enter nonlinear_entry(row, col).
  std::vector<Index> entry_support(Index row, Index col) const;

  // Sparsity pattern shared by A(mu) and C(u).
  const SparseMatrix &pattern() const { return pattern_; }

private:
  template <typename Coef>
  SparseMatrix assemble(const Coef &coef, bool with_mass) const;
  Index dof_of(int i, int j) const;

  int n_;
  double gamma_;
  Index dofs_;
  double h_;
  Vector load_;
  Matrix coords_;
  SparseMatrix pattern_;
};

Vector nonlinear_solve(const NonlinearDiffusion &fom, const Parameter &mu, const Vector &guess);

inline constexpr double kNewtonTolerance = 1e-9;
inline constexpr int kNewtonMaxIterations = 50;

}  // namespace mor

#endif  // MOR_FOM_HPP
