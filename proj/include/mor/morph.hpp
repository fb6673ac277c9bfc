// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_MORPH_HPP
#define MOR_MORPH_HPP

#include <string>
#include <vector>

#include "mor/numkit.hpp"

namespace mor
{

// Point sets are stored one point per row.

// ---------------------------------------------------------------------------
// Free-form deformation. The lattice map is psi^-1(s) = origin + axes * s
// for s in [0,1]^d; displacements are given in lattice coordinates.

class FfdLattice
{
public:
  FfdLattice(Vector origin, Matrix axes, std::vector<int> degrees);

  int dim() const { return static_cast<int>(origin_.size()); }
  const Vector &origin() const { return origin_; }
  const Matrix &axes() const { return axes_; }
  const std::vector<int> &degrees() const { return degrees_; }
  Index control_count() const { return control_count_; }

  // Flat index of a control point, first direction fastest.
  Index control_index(const std::vector<int> &multi) const;
  std::vector<int> control_multi_index(Index flat) const;
  // Undisplaced control points in physical coordinates.
  Matrix control_points() const;

  Vector to_lattice(const Vector &x) const;
  Vector from_lattice(const Vector &s) const;

  // control_count x d, lattice coordinates.
  Matrix displacements;

private:
  Vector origin_;
  Matrix axes_;
  Matrix axes_inverse_;
  std::vector<int> degrees_;
  Index control_count_ = 0;
};

double bernstein(int k, int n, double t);

// Per-point Bernstein products. Rows of points outside the lattice are zero
// and flagged.
struct FfdWeights
{
  Matrix weights;           // points x control_count
  std::vector<bool> inside;
};

FfdWeights ffd_weights(const FfdLattice &lattice, const Matrix &points);
Matrix ffd_deform(const FfdLattice &lattice, const FfdWeights &weights, const Matrix &points);
Matrix ffd_deform(const FfdLattice &lattice, const Matrix &points);

// ---------------------------------------------------------------------------
// RBF interpolation with a linear polynomial term.

enum class RbfKernel
{
  gaussian,
  thin_plate,
  wendland_c2,
  multiquadric,
  inverse_multiquadric
};

RbfKernel parse_rbf_kernel(const std::string &name);
std::string rbf_kernel_name(RbfKernel kernel);
double rbf_kernel(RbfKernel kernel, double r, double radius);

struct RbfMorph
{
  RbfKernel kernel = RbfKernel::gaussian;
  double radius = 1.0;
  Matrix control;   // x_C
  Matrix deformed;  // y_C
  Matrix weights;   // gamma, N_C x d
  Vector constant;  // c
  Matrix linear;    // Q, map is c + Q x + sum gamma_i phi(|x - x_Ci|)
};

double bounding_box_diagonal(const Matrix &points);

// radius <= 0 selects the bounding-box diagonal of the control points.
RbfMorph rbf_build(const Matrix &control, const Matrix &deformed, RbfKernel kernel,
                   double radius = 0.0);
// points x N_C kernel values, reusable across deformed control sets.
Matrix rbf_kernel_columns(const RbfMorph &morph, const Matrix &points);
Matrix rbf_deform(const RbfMorph &morph, const Matrix &kernel_columns, const Matrix &points);
Matrix rbf_deform(const RbfMorph &morph, const Matrix &points);

// ---------------------------------------------------------------------------
// Inverse distance weighting of control-point displacements.

struct IdwMorph
{
  Matrix control;
  Matrix deformed;
  int power = 2;
  double hit_tolerance = 0.0;  // absolute
};

IdwMorph idw_build(const Matrix &control, const Matrix &deformed, int power = 2);
Matrix idw_weights(const IdwMorph &morph, const Matrix &points);
Matrix idw_deform(const IdwMorph &morph, const Matrix &weights, const Matrix &points);
Matrix idw_deform(const IdwMorph &morph, const Matrix &points);

}  // namespace mor

#endif  // MOR_MORPH_HPP
