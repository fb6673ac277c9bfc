// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_DEMOS_HPP
#define MOR_DEMOS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mor/asub.hpp"
#include "mor/errest.hpp"
#include "mor/interp.hpp"
#include "mor/morph.hpp"
#include "mor/rb.hpp"

namespace mor
{

// End-to-end drivers behind the command-line tool. Each writes its files
// into `out` and returns what it computed so callers can check invariants.

// Theta maps of the problems that can be reloaded from a saved ROM.
ThetaMaps resolve_theta_maps(const std::string &name);

struct ThermalBlockDemo
{
  int grid = 32;
  int train_size = 50;
  double tol = 1e-6;
  Index n_max = 20;
  int sweep_size = 20;
  std::filesystem::path out = "out/thermal-block";
};

struct ThermalBlockHistoryRow
{
  Index basis_size = 0;
  double max_bound = 0.0;
  double max_true_error = 0.0;  // energy norm over the training set
};

struct ThermalBlockReport
{
  GreedyResult greedy;
  std::vector<ThermalBlockHistoryRow> history;
  std::vector<BoundSweepRow> sweep;
  double min_effectivity = 0.0;
  bool invariants_ok = false;
};

// greedy_history.csv, bound_sweep.csv, rom/manifest.json
ThermalBlockReport run_thermal_block(const ThermalBlockDemo &cfg);

// Builds the thermal-block ROM by greedy and saves it to `dir`.
RomSystem build_thermal_rom(const ThermalBlockDemo &cfg);

struct EimDemo
{
  int grid = 32;
  int train_size = 100;
  double tol = 1e-10;
  Index n_max = 25;
  Index eim_terms = 11;
  Index rb_max = 20;
  int test_size = 20;
  std::uint64_t seed = 42;
  std::filesystem::path out = "out/eim-demo";
};

struct EimDemoReport
{
  EimBasis eim;
  std::vector<double> lebesgue;      // Lambda_q for q = 1..Q
  std::vector<double> rom_error;     // max relative error per RB size
  bool invariants_ok = false;
};

// eim_error.csv, magic_points.csv, rom_error.csv, eim/manifest.json
EimDemoReport run_eim_demo(const EimDemo &cfg);

// Uniform samples of a box from a fixed seed.
std::vector<Parameter> random_parameters(const ParamDomain &domain, std::size_t n,
                                         std::uint64_t seed);

struct DeimDemo
{
  int grid = 20;
  int train_size = 100;
  double nonlinearity = 1.0;
  double source = 10.0;
  Index solution_modes = 14;
  std::vector<Index> deim_sizes{2, 4, 6, 8, 10};
  int test_size = 100;
  std::uint64_t seed = 42;
  std::filesystem::path out = "out/deim-demo";
};

struct DeimDemoRow
{
  Index terms = 0;  // N_A = N_C
  double max_error = 0.0;
  double mean_error = 0.0;  // nodal relative error averaged over the test set
};

struct DeimDemoReport
{
  std::vector<DeimDemoRow> rows;
  double projection_error = 0.0;  // without hyper-reduction, max over tests
  bool invariants_ok = false;
};

// deim_error.csv
DeimDemoReport run_deim_demo(const DeimDemo &cfg);

struct AsubDemo
{
  int train_size = 2000;
  std::uint64_t seed = 42;
  std::filesystem::path out = "out/asub-demo";
};

struct AsubDemoReport
{
  ActiveSubspace paraboloid;
  ActiveSubspace quadratic;
  Matrix quadratic_matrix;
  bool invariants_ok = false;
};

// paraboloid_eigenvalues.csv, paraboloid_summary.csv,
// quadratic_eigenvalues.csv, quadratic_summary.csv
AsubDemoReport run_asub_demo(const AsubDemo &cfg);

// f = 1/2 mu^T A mu on [-1,1]^p.
ScalarMap quadratic_form(const Matrix &a);
GradientMap quadratic_form_gradient(const Matrix &a);

enum class MorphKind
{
  ffd,
  rbf,
  idw
};

// Descriptor parsing. Malformed input raises ParseError with the line.
FfdLattice parse_ffd_descriptor(const nlohmann::json &j);
RbfMorph parse_rbf_descriptor(const nlohmann::json &j);
IdwMorph parse_idw_descriptor(const nlohmann::json &j);
nlohmann::json read_json_file(const std::filesystem::path &path);

// Deforms the point file and writes the result. Returns the summary echoed
// by the tool: {"points": n, "max_displacement": d}.
nlohmann::json run_morph(MorphKind kind, const std::filesystem::path &points,
                         const std::filesystem::path &descriptor,
                         const std::filesystem::path &output);

}  // namespace mor

#endif  // MOR_DEMOS_HPP
