// SPDX-License-Identifier: Apache-2.0

#include "mor/demos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "mor/io.hpp"
#include "mor/parallel.hpp"

namespace mor
{

namespace fs = std::filesystem;
using nlohmann::json;

ThetaMaps resolve_theta_maps(const std::string &name)
{
  if (name == "thermal-block")
  {
    ThetaMaps maps;
    maps.theta_a = [](const Parameter &mu) { return theta_thermal(mu(0)); };
    maps.theta_f = [](const Parameter &) { return Vector::Ones(1); };
    maps.theta_l = maps.theta_f;
    return maps;
  }
  throw DomainError("no theta maps known for problem '" + name + "'");
}

std::vector<Parameter> random_parameters(const ParamDomain &domain, std::size_t n,
                                         std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Parameter> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    Parameter mu(domain.dim());
    for (Index k = 0; k < domain.dim(); ++k)
    {
      mu(k) = domain.lower()(k) + (domain.upper()(k) - domain.lower()(k)) * unit(rng);
    }
    out.push_back(std::move(mu));
  }
  return out;
}

namespace
{

double energy_norm(const SparseMatrix &a, const Vector &e)
{
  return std::sqrt(std::max(0.0, e.dot(a * e)));
}

double gram_norm(const SparseMatrix &g, const Vector &e)
{
  return std::sqrt(std::max(0.0, e.dot(g * e)));
}

// First k columns of a hierarchical basis.
ReducedBasis leading_basis(const ReducedBasis &basis, Index k)
{
  ReducedBasis out(basis.vectors().leftCols(k), basis.gram());
  out.selected_parameters.assign(basis.selected_parameters.begin(),
                                 basis.selected_parameters.begin() +
                                     std::min<std::size_t>(k, basis.selected_parameters.size()));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

namespace
{

struct ThermalSetup
{
  AffineSystem system;
  std::vector<Parameter> training;
};

ThermalSetup thermal_setup(const ThermalBlockDemo &cfg)
{
  ThermalBlockOptions opts;
  opts.n = cfg.grid;
  AffineSystem sys = assemble_thermal_block(opts);
  if (cfg.train_size < 1)
  {
    throw DomainError("thermal-block: training set must be nonempty");
  }
  auto training = sys.domain().uniform_grid(cfg.train_size);
  return {std::move(sys), std::move(training)};
}

GreedyResult thermal_greedy(const ThermalSetup &setup, const ThermalBlockDemo &cfg,
                            CoercivityModel &model_out)
{
  model_out = make_coercivity_model(setup.system, Vector::Constant(1, kThermalReferenceMu));
  ResidualEstimator estimator(model_out);
  return greedy(setup.system, setup.training, cfg.tol, setup.training.front(), cfg.n_max,
                estimator);
}

}  // namespace

RomSystem build_thermal_rom(const ThermalBlockDemo &cfg)
{
  const ThermalSetup setup = thermal_setup(cfg);
  CoercivityModel model;
  return thermal_greedy(setup, cfg, model).rom;
}

ThermalBlockReport run_thermal_block(const ThermalBlockDemo &cfg)
{
  const ThermalSetup setup = thermal_setup(cfg);
  const AffineSystem &sys = setup.system;
  CoercivityModel model;
  ThermalBlockReport report{thermal_greedy(setup, cfg, model), {}, {}, 0.0, false};
  const GreedyResult &g = report.greedy;

  // Full-order truth over the training set.
  const std::size_t nt = setup.training.size();
  std::vector<Vector> truth(nt);
  std::vector<SparseMatrix> ops(nt);
  parallel_for(nt, [&](std::size_t k) {
    truth[k] = fom_solve(sys, setup.training[k]).coefficients;
    ops[k] = sys.assemble_matrix(setup.training[k]);
  });
  for (const GreedyStep &step : g.history)
  {
    const ReducedBasis basis = leading_basis(g.basis, step.basis_size);
    const RomSystem rom = project(sys, basis);
    std::vector<double> err(nt);
    parallel_for(nt, [&](std::size_t k) {
      const Vector u = lift(basis, rom_solve(rom, setup.training[k]).coefficients);
      err[k] = energy_norm(ops[k], truth[k] - u);
    });
    report.history.push_back(
        {step.basis_size, step.max_bound, *std::max_element(err.begin(), err.end())});
  }

  const ResidualOffline offline = riesz_offline(sys, g.basis);
  const auto sweep_mus = sys.domain().uniform_grid(cfg.sweep_size);
  report.sweep = bound_sweep(sys, g.basis, g.rom, offline, model, sweep_mus);
  report.min_effectivity = std::numeric_limits<double>::infinity();
  for (const auto &row : report.sweep)
  {
    report.min_effectivity = std::min(report.min_effectivity, row.effectivity);
  }

  fs::create_directories(cfg.out);
  std::vector<std::vector<double>> rows;
  for (const auto &h : report.history)
  {
    rows.push_back({static_cast<double>(h.basis_size), h.max_bound, h.max_true_error});
  }
  write_csv(cfg.out / "greedy_history.csv", {"N", "max_delta", "max_true_error"}, rows);
  write_bound_sweep(cfg.out / "bound_sweep.csv", report.sweep);
  save_rom(g.rom, cfg.out / "rom");

  bool ok = !report.history.empty();
  for (std::size_t i = 1; i < report.history.size(); ++i)
  {
    ok = ok && report.history[i].basis_size > report.history[i - 1].basis_size;
  }
  if (g.converged)
  {
    ok = ok && report.history.back().max_bound <= cfg.tol;
  }
  for (const auto &row : report.sweep)
  {
    ok = ok && row.effectivity >= 1.0 - 1e-10;
  }
  report.invariants_ok = ok;
  return report;
}

// ---------------------------------------------------------------------------

namespace
{

EimBasis truncate_eim(const EimBasis &eim, Index q)
{
  EimBasis out;
  out.basis = eim.basis.leftCols(q);
  out.magic_indices.assign(eim.magic_indices.begin(), eim.magic_indices.begin() + q);
  out.interp_matrix = eim.interp_matrix.topLeftCorner(q, q);
  out.error_history.assign(eim.error_history.begin(), eim.error_history.begin() + q);
  out.selected_parameter_indices.assign(eim.selected_parameter_indices.begin(),
                                        eim.selected_parameter_indices.begin() + q);
  return out;
}

}  // namespace

EimDemoReport run_eim_demo(const EimDemo &cfg)
{
  if (cfg.train_size < 1 || cfg.test_size < 1 || cfg.rb_max < 1 || cfg.eim_terms < 1)
  {
    throw DomainError("eim-demo: sizes must be positive");
  }
  const GaussianPoisson gp = assemble_gaussian_poisson(cfg.grid, 1.0);
  const ParamDomain &domain = gp.system.domain();
  const auto training = random_parameters(domain, static_cast<std::size_t>(cfg.train_size),
                                          cfg.seed);

  FunctionSamples samples;
  samples.points = gp.node_coordinates;
  samples.parameters = training;
  samples.values.resize(gp.node_coordinates.rows(), static_cast<Index>(training.size()));
  for (std::size_t j = 0; j < training.size(); ++j)
  {
    samples.values.col(static_cast<Index>(j)) = gp.sample_forcing(training[j]);
  }

  EimDemoReport report;
  report.eim = eim_build(samples, cfg.tol, cfg.n_max);
  const EimBasis &eim = report.eim;
  for (Index q = 1; q <= eim.size(); ++q)
  {
    report.lebesgue.push_back(lebesgue_constant(eim, q));
  }

  // ROM with the forcing replaced by a fixed number of EIM terms.
  const Index q_rom = std::min(cfg.eim_terms, eim.size());
  const EimBasis rom_eim = truncate_eim(eim, q_rom);
  Matrix magic_xy(q_rom, 2);
  for (Index k = 0; k < q_rom; ++k)
  {
    magic_xy.row(k) = gp.node_coordinates.row(rom_eim.magic_indices[k]);
  }
  std::vector<Vector> loads;
  for (Index k = 0; k < q_rom; ++k)
  {
    loads.push_back(gp.load_from_nodal(rom_eim.basis.col(k)));
  }
  const AffineSystem eim_system = gp.system.with_rhs(
      std::move(loads), [rom_eim, magic_xy](const Parameter &mu) {
        Vector g(magic_xy.rows());
        for (Index k = 0; k < g.size(); ++k)
        {
          g(k) = gaussian_forcing(magic_xy(k, 0), magic_xy(k, 1), mu);
        }
        return eim_coefficients(rom_eim, g);
      });

  SnapshotSet snaps;
  snaps.parameters = training;
  snaps.matrix.resize(eim_system.dof_count(), static_cast<Index>(training.size()));
  parallel_for(training.size(), [&](std::size_t j) {
    snaps.matrix.col(static_cast<Index>(j)) = fom_solve(eim_system, training[j]).coefficients;
  });
  const ReducedBasis pod_basis = pod(snaps, eim_system.gram(), RankCriterion{cfg.rb_max});

  const auto tests = random_parameters(domain, static_cast<std::size_t>(cfg.test_size),
                                       cfg.seed + 1);
  std::vector<Vector> truth(tests.size());
  parallel_for(tests.size(), [&](std::size_t k) { truth[k] = gp.solve(tests[k]).coefficients; });
  const SparseMatrix &gram = eim_system.gram();
  for (Index n = 1; n <= pod_basis.size(); ++n)
  {
    const ReducedBasis basis = leading_basis(pod_basis, n);
    const RomSystem rom = project(eim_system, basis);
    std::vector<double> err(tests.size());
    parallel_for(tests.size(), [&](std::size_t k) {
      const Vector u = lift(basis, rom_solve(rom, tests[k]).coefficients);
      err[k] = gram_norm(gram, truth[k] - u) / gram_norm(gram, truth[k]);
    });
    report.rom_error.push_back(*std::max_element(err.begin(), err.end()));
  }

  fs::create_directories(cfg.out);
  std::vector<std::vector<double>> rows;
  for (Index q = 0; q < eim.size(); ++q)
  {
    rows.push_back({static_cast<double>(q + 1), eim.error_history[q],
                    report.lebesgue[static_cast<std::size_t>(q)]});
  }
  write_csv(cfg.out / "eim_error.csv", {"Q", "epsilon", "lebesgue"}, rows);
  rows.clear();
  for (Index q = 0; q < eim.size(); ++q)
  {
    const Index node = eim.magic_indices[q];
    rows.push_back({static_cast<double>(q + 1), static_cast<double>(node),
                    gp.node_coordinates(node, 0), gp.node_coordinates(node, 1)});
  }
  write_csv(cfg.out / "magic_points.csv", {"q", "node", "x", "y"}, rows);
  rows.clear();
  for (std::size_t n = 0; n < report.rom_error.size(); ++n)
  {
    rows.push_back({static_cast<double>(n + 1), static_cast<double>(q_rom), report.rom_error[n]});
  }
  write_csv(cfg.out / "rom_error.csv", {"N", "N_eim", "max_relative_error"}, rows);
  save_eim(eim, cfg.out / "eim");

  bool ok = eim.size() > 0;
  for (std::size_t q = 1; q < eim.error_history.size(); ++q)
  {
    ok = ok && eim.error_history[q] <= eim.error_history[q - 1];
  }
  for (std::size_t q = 0; q < report.lebesgue.size(); ++q)
  {
    ok = ok && report.lebesgue[q] <= std::ldexp(1.0, static_cast<int>(q) + 1) - 1.0 + 1e-9;
  }
  report.invariants_ok = ok;
  return report;
}

// ---------------------------------------------------------------------------

DeimDemoReport run_deim_demo(const DeimDemo &cfg)
{
  if (cfg.train_size < 1 || cfg.test_size < 1 || cfg.deim_sizes.empty())
  {
    throw DomainError("deim-demo: sizes must be positive");
  }
  const NonlinearDiffusion fom(cfg.grid, cfg.nonlinearity, cfg.source);
  const ParamDomain domain(Vector::Constant(2, -0.5), Vector::Constant(2, 0.5));
  const auto training = random_parameters(domain, static_cast<std::size_t>(cfg.train_size),
                                          cfg.seed);
  const Index n_h = fom.dof_count();
  const Vector zero = Vector::Zero(n_h);

  SnapshotSet snaps;
  snaps.parameters = training;
  snaps.matrix.resize(n_h, static_cast<Index>(training.size()));
  std::vector<SparseMatrix> a_snaps(training.size()), c_snaps(training.size());
  parallel_for(training.size(), [&](std::size_t j) {
    const Vector u = nonlinear_solve(fom, training[j], zero);
    snaps.matrix.col(static_cast<Index>(j)) = u;
    a_snaps[j] = fom.diffusion_matrix(training[j]);
    c_snaps[j] = fom.nonlinear_matrix(u);
  });
  SparseMatrix identity(n_h, n_h);
  identity.setIdentity();
  const ReducedBasis sol_basis = pod(snaps, identity, RankCriterion{cfg.solution_modes});
  const Matrix v = sol_basis.vectors();

  const auto tests = random_parameters(domain, static_cast<std::size_t>(cfg.test_size),
                                       cfg.seed + 1);
  std::vector<Vector> truth(tests.size());
  parallel_for(tests.size(),
               [&](std::size_t k) { truth[k] = nonlinear_solve(fom, tests[k], zero); });

  DeimDemoReport report;
  for (const Vector &u : truth)
  {
    report.projection_error =
        std::max(report.projection_error, (u - v * (v.transpose() * u)).norm() / u.norm());
  }
  for (Index terms : cfg.deim_sizes)
  {
    MdeimRom rom(fom, v, mdeim_build(a_snaps, 0.0, terms), mdeim_build(c_snaps, 0.0, terms));
    std::vector<double> err(tests.size());
    parallel_for(tests.size(), [&](std::size_t k) {
      const Vector u = rom.lift(rom.solve(tests[k], Vector::Zero(rom.size())));
      err[k] = (u - truth[k]).norm() / truth[k].norm();
    });
    DeimDemoRow row;
    row.terms = terms;
    row.max_error = *std::max_element(err.begin(), err.end());
    for (double e : err)
    {
      row.mean_error += e / static_cast<double>(err.size());
    }
    report.rows.push_back(row);
  }

  fs::create_directories(cfg.out);
  std::vector<std::vector<double>> rows;
  for (const auto &r : report.rows)
  {
    rows.push_back({static_cast<double>(r.terms), r.max_error, r.mean_error,
                    report.projection_error});
  }
  write_csv(cfg.out / "deim_error.csv",
            {"N_deim", "max_relative_error", "mean_relative_error", "projection_error"}, rows);

  bool ok = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i)
  {
    ok = ok && report.rows[i].mean_error < report.rows[i - 1].mean_error;
  }
  report.invariants_ok = ok;
  return report;
}

// ---------------------------------------------------------------------------

ScalarMap quadratic_form(const Matrix &a)
{
  return [a](const Parameter &mu) { return 0.5 * mu.dot(a * mu); };
}

GradientMap quadratic_form_gradient(const Matrix &a)
{
  // Symmetric part, so non-symmetric input still gives the true gradient.
  const Matrix s = 0.5 * (a + a.transpose());
  return [s](const Parameter &mu) -> Vector { return s * mu; };
}

AsubDemoReport run_asub_demo(const AsubDemo &cfg)
{
  if (cfg.train_size < 1)
  {
    throw DomainError("asub-demo: training size must be positive");
  }
  const ParamDomain domain(Vector::Constant(3, -1.0), Vector::Constant(3, 1.0));
  const auto n = static_cast<std::size_t>(cfg.train_size);
  AsubDemoReport report;
  report.quadratic_matrix = Vector{{10.0, 1.0, 0.1}}.asDiagonal();
  const Matrix paraboloid_matrix = Matrix::Identity(3, 3);

  fs::create_directories(cfg.out);
  auto run = [&](const Matrix &a, const std::string &stem) {
    const SampledGradients grads =
        sample_gradients(quadratic_form(a), quadratic_form_gradient(a), domain, n, cfg.seed);
    ActiveSubspace sub = estimate_subspace(grads, LargestGap{});
    const ActiveSubspace line = estimate_subspace(grads, FixedSplit{1});
    write_eigenvalue_csv(cfg.out / (stem + "_eigenvalues.csv"), sub.eigenvalues);
    write_summary_csv(cfg.out / (stem + "_summary.csv"),
                      summary_data(line, grads.normalized, grads.values));
    return sub;
  };
  report.paraboloid = run(paraboloid_matrix, "paraboloid");
  report.quadratic = run(report.quadratic_matrix, "quadratic");

  bool ok = true;
  for (Index i = 0; i < 3; ++i)
  {
    ok = ok && std::abs(report.paraboloid.eigenvalues(i) - 1.0 / 3.0) <= 0.15 / 3.0;
  }
  ok = ok && report.quadratic.eigenvalues(0) >= 10.0 * report.quadratic.eigenvalues(1);
  report.invariants_ok = ok;
  return report;
}

// ---------------------------------------------------------------------------

namespace
{

// Raised by the descriptor readers with the offending key; turned into a
// ParseError carrying the key's line once the text is known.
class DescriptorError : public DomainError
{
public:
  DescriptorError(std::string key, const std::string &what)
    : DomainError(what), key_(std::move(key))
  {
  }
  const std::string &key() const { return key_; }

private:
  std::string key_;
};

const json &field(const json &j, const std::string &key)
{
  if (!j.is_object())
  {
    throw DescriptorError("", "descriptor must be a JSON object");
  }
  auto it = j.find(key);
  if (it == j.end())
  {
    throw DescriptorError("", "missing key '" + key + "'");
  }
  return *it;
}

double number(const json &j, const std::string &key)
{
  if (!j.is_number())
  {
    throw DescriptorError(key, "'" + key + "' must be a number");
  }
  return j.get<double>();
}

Vector real_array(const json &j, const std::string &key)
{
  if (!j.is_array())
  {
    throw DescriptorError(key, "'" + key + "' must be an array of numbers");
  }
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
  {
    v(static_cast<Index>(i)) = number(j[i], key);
  }
  return v;
}

Matrix point_array(const json &j, const std::string &key)
{
  if (!j.is_array() || j.empty())
  {
    throw DescriptorError(key, "'" + key + "' must be a nonempty array of points");
  }
  Matrix m;
  for (std::size_t i = 0; i < j.size(); ++i)
  {
    const Vector p = real_array(j[i], key);
    if (i == 0)
    {
      m.resize(static_cast<Index>(j.size()), p.size());
    }
    if (p.size() != m.cols() || p.size() == 0)
    {
      throw DescriptorError(key, "'" + key + "' rows must share one nonzero dimension");
    }
    m.row(static_cast<Index>(i)) = p.transpose();
  }
  return m;
}

template <typename Fn>
auto with_key(const std::string &key, Fn &&fn)
{
  try
  {
    return fn();
  }
  catch (const DescriptorError &)
  {
    throw;
  }
  catch (const DomainError &e)
  {
    throw DescriptorError(key, e.what());
  }
}

std::size_t line_of_offset(const std::string &text, std::size_t offset)
{
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::size_t line_of_key(const std::string &text, const std::string &key)
{
  if (key.empty())
  {
    return 1;
  }
  const auto pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 1 : line_of_offset(text, pos);
}

std::string read_text(const fs::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

FfdLattice parse_ffd_descriptor(const json &j)
{
  const Vector origin = real_array(field(j, "origin"), "origin");
  const Index d = origin.size();
  if (d < 1 || d > 3)
  {
    throw DescriptorError("origin", "'origin' must have 1 to 3 components");
  }
  const Vector axes_flat = real_array(field(j, "axes"), "axes");
  if (axes_flat.size() != d * d)
  {
    throw DescriptorError("axes", "'axes' must hold d*d reals in row-major order");
  }
  Matrix axes(d, d);
  for (Index r = 0; r < d; ++r)
  {
    for (Index c = 0; c < d; ++c)
    {
      axes(r, c) = axes_flat(r * d + c);
    }
  }
  const json &deg = field(j, "degrees");
  if (!deg.is_array() || static_cast<Index>(deg.size()) != d)
  {
    throw DescriptorError("degrees", "'degrees' must hold one integer per direction");
  }
  std::vector<int> degrees;
  for (const auto &x : deg)
  {
    if (!x.is_number_integer())
    {
      throw DescriptorError("degrees", "'degrees' entries must be integers");
    }
    degrees.push_back(x.get<int>());
  }
  FfdLattice lattice = with_key("axes", [&] { return FfdLattice(origin, axes, degrees); });
  if (j.contains("displacements"))
  {
    const Matrix disp = point_array(j["displacements"], "displacements");
    if (disp.rows() != lattice.control_count() || disp.cols() != d)
    {
      throw DescriptorError("displacements",
                            "'displacements' must hold one d-vector per control point");
    }
    lattice.displacements = disp;
  }
  return lattice;
}

RbfMorph parse_rbf_descriptor(const json &j)
{
  const Matrix control = point_array(field(j, "control"), "control");
  const Matrix deformed = point_array(field(j, "deformed"), "deformed");
  if (deformed.rows() != control.rows() || deformed.cols() != control.cols())
  {
    throw DescriptorError("deformed", "'deformed' must match the shape of 'control'");
  }
  RbfKernel kernel = RbfKernel::gaussian;
  if (j.contains("kernel"))
  {
    if (!j["kernel"].is_string())
    {
      throw DescriptorError("kernel", "'kernel' must be a string");
    }
    kernel = with_key("kernel", [&] { return parse_rbf_kernel(j["kernel"].get<std::string>()); });
  }
  double radius = 0.0;
  if (j.contains("radius"))
  {
    radius = number(j["radius"], "radius");
    if (!(radius > 0.0))
    {
      throw DescriptorError("radius", "'radius' must be positive");
    }
  }
  return with_key("control", [&] { return rbf_build(control, deformed, kernel, radius); });
}

IdwMorph parse_idw_descriptor(const json &j)
{
  const Matrix control = point_array(field(j, "control"), "control");
  const Matrix deformed = point_array(field(j, "deformed"), "deformed");
  if (deformed.rows() != control.rows() || deformed.cols() != control.cols())
  {
    throw DescriptorError("deformed", "'deformed' must match the shape of 'control'");
  }
  int power = 2;
  if (j.contains("power"))
  {
    if (!j["power"].is_number_integer() || j["power"].get<int>() < 1)
    {
      throw DescriptorError("power", "'power' must be a positive integer");
    }
    power = j["power"].get<int>();
  }
  return with_key("control", [&] { return idw_build(control, deformed, power); });
}

json read_json_file(const fs::path &path)
{
  const std::string text = read_text(path);
  try
  {
    return json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    throw ParseError(path.string(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1),
                     e.what());
  }
}

json run_morph(MorphKind kind, const fs::path &points_path, const fs::path &descriptor_path,
               const fs::path &output)
{
  const Matrix points = read_points(points_path);
  const std::string text = read_text(descriptor_path);
  const json desc = read_json_file(descriptor_path);
  Matrix deformed;
  try
  {
    switch (kind)
    {
    case MorphKind::ffd:
    {
      const FfdLattice lattice = parse_ffd_descriptor(desc);
      if (points.cols() != lattice.dim())
      {
        throw DescriptorError("origin", "point dimension differs from the lattice dimension");
      }
      deformed = ffd_deform(lattice, points);
      break;
    }
    case MorphKind::rbf:
    {
      const RbfMorph morph = parse_rbf_descriptor(desc);
      if (points.cols() != morph.control.cols())
      {
        throw DescriptorError("control", "point dimension differs from the control points");
      }
      deformed = rbf_deform(morph, points);
      break;
    }
    case MorphKind::idw:
    {
      const IdwMorph morph = parse_idw_descriptor(desc);
      if (points.cols() != morph.control.cols())
      {
        throw DescriptorError("control", "point dimension differs from the control points");
      }
      deformed = idw_deform(morph, points);
      break;
    }
    }
  }
  catch (const DescriptorError &e)
  {
    throw ParseError(descriptor_path.string(), line_of_key(text, e.key()), e.what());
  }
  if (output.has_parent_path())
  {
    fs::create_directories(output.parent_path());
  }
  write_points(output, deformed);
  const Matrix disp = deformed - points;
  double max_disp = 0.0;
  for (Index i = 0; i < disp.rows(); ++i)
  {
    max_disp = std::max(max_disp, disp.row(i).norm());
  }
  return json{{"points", points.rows()}, {"max_displacement", max_disp}};
}

}  // namespace mor
