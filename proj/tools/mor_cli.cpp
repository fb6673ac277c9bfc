// SPDX-License-Identifier: Apache-2.0
//
// mor: drives the reduced-order modelling demos from the command line.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mor/demos.hpp"
#include "mor/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

// Values from --config, then overridden by any flag given explicitly.
struct RunConfig
{
  std::optional<int> grid;
  std::optional<int> train_size;
  std::optional<double> tol;
  std::optional<long> n_max;
  std::uint64_t seed = 42;
  std::optional<std::string> out;
};

struct Flags
{
  int grid = 0;
  int train_size = 0;
  double tol = 0.0;
  long n_max = 0;
  std::uint64_t seed = 42;
  std::string out;
  std::string config;
};

void add_common(CLI::App *cmd, Flags &f)
{
  cmd->add_option("--grid", f.grid, "Elements per direction")->check(CLI::PositiveNumber);
  cmd->add_option("--train-size", f.train_size, "Training set size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", f.tol, "Tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--n-max", f.n_max, "Maximum basis size")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
}

RunConfig resolve(const CLI::App *cmd, const Flags &f)
{
  RunConfig rc;
  if (!f.config.empty())
  {
    const json j = mor::read_json_file(f.config);
    if (!j.is_object())
    {
      throw mor::ParseError(f.config, 1, "config must be a JSON object");
    }
    try
    {
      if (j.contains("grid")) rc.grid = j["grid"].get<int>();
      if (j.contains("train_size")) rc.train_size = j["train_size"].get<int>();
      if (j.contains("tol")) rc.tol = j["tol"].get<double>();
      if (j.contains("n_max")) rc.n_max = j["n_max"].get<long>();
      if (j.contains("seed")) rc.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("out")) rc.out = j["out"].get<std::string>();
    }
    catch (const json::exception &e)
    {
      throw mor::ParseError(f.config, 1, e.what());
    }
  }
  if (cmd->count("--grid")) rc.grid = f.grid;
  if (cmd->count("--train-size")) rc.train_size = f.train_size;
  if (cmd->count("--tol")) rc.tol = f.tol;
  if (cmd->count("--n-max")) rc.n_max = f.n_max;
  if (cmd->count("--seed")) rc.seed = f.seed;
  if (cmd->count("--out")) rc.out = f.out;
  return rc;
}

template <typename T, typename U>
void apply(const std::optional<T> &from, U &to)
{
  if (from)
  {
    to = static_cast<U>(*from);
  }
}

mor::ThermalBlockDemo thermal_config(const RunConfig &rc)
{
  mor::ThermalBlockDemo d;
  apply(rc.grid, d.grid);
  apply(rc.train_size, d.train_size);
  apply(rc.tol, d.tol);
  apply(rc.n_max, d.n_max);
  apply(rc.out, d.out);
  return d;
}

int report(bool ok, const json &summary)
{
  std::cout << summary.dump(2) << '\n';
  if (!ok)
  {
    std::cerr << "mor: invariant check failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Projection-based model order reduction demos"};
  app.require_subcommand(1);

  Flags tb_flags, eim_flags, deim_flags, as_flags, rom_flags;
  auto *tb = app.add_subcommand("thermal-block", "Greedy RB with certified bounds");
  add_common(tb, tb_flags);
  auto *eim = app.add_subcommand("eim-demo", "EIM on the Gaussian-forcing Poisson problem");
  add_common(eim, eim_flags);
  auto *deim = app.add_subcommand("deim-demo", "M-DEIM on the nonlinear diffusion problem");
  add_common(deim, deim_flags);
  auto *as = app.add_subcommand("asub-demo", "Active subspaces of two quadratic forms");
  add_common(as, as_flags);

  auto *morph = app.add_subcommand("morph", "Deform a point cloud");
  morph->require_subcommand(1);
  std::string points, descriptor, morph_out = "deformed.txt";
  for (const char *mode : {"ffd", "rbf", "idw"})
  {
    auto *sub = morph->add_subcommand(mode, std::string(mode) + " morphing");
    sub->add_option("points", points, "Point file")->required()->check(CLI::ExistingFile);
    sub->add_option("descriptor", descriptor, "JSON descriptor")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", morph_out, "Output point file");
  }

  auto *rom = app.add_subcommand("rom", "Save, load or solve a thermal-block ROM");
  rom->require_subcommand(1);
  auto *rom_save = rom->add_subcommand("save", "Build by greedy and save");
  add_common(rom_save, rom_flags);
  std::string rom_dir;
  double rom_mu = 0.5;
  auto *rom_load = rom->add_subcommand("load", "Print a saved ROM's manifest summary");
  rom_load->add_option("dir", rom_dir, "ROM directory")->required()->check(CLI::ExistingDirectory);
  auto *rom_solve = rom->add_subcommand("solve", "Solve a saved ROM at one parameter");
  rom_solve->add_option("dir", rom_dir, "ROM directory")->required()->check(CLI::ExistingDirectory);
  rom_solve->add_option("--mu", rom_mu, "Parameter value");

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (tb->parsed())
    {
      const auto cfg = thermal_config(resolve(tb, tb_flags));
      const auto r = mor::run_thermal_block(cfg);
      return report(r.invariants_ok,
                    {{"basis_size", r.greedy.basis.size()},
                     {"max_delta", r.history.back().max_bound},
                     {"converged", r.greedy.converged},
                     {"min_effectivity", r.min_effectivity},
                     {"out", cfg.out.string()}});
    }
    if (eim->parsed())
    {
      const RunConfig rc = resolve(eim, eim_flags);
      mor::EimDemo cfg;
      apply(rc.grid, cfg.grid);
      apply(rc.train_size, cfg.train_size);
      apply(rc.tol, cfg.tol);
      apply(rc.n_max, cfg.n_max);
      apply(rc.out, cfg.out);
      cfg.seed = rc.seed;
      const auto r = mor::run_eim_demo(cfg);
      return report(r.invariants_ok, {{"Q", r.eim.size()},
                                      {"final_epsilon", r.eim.error_history.back()},
                                      {"final_rom_error", r.rom_error.back()},
                                      {"out", cfg.out.string()}});
    }
    if (deim->parsed())
    {
      const RunConfig rc = resolve(deim, deim_flags);
      mor::DeimDemo cfg;
      apply(rc.grid, cfg.grid);
      apply(rc.train_size, cfg.train_size);
      apply(rc.n_max, cfg.solution_modes);
      apply(rc.out, cfg.out);
      cfg.seed = rc.seed;
      const auto r = mor::run_deim_demo(cfg);
      json rows = json::array();
      for (const auto &row : r.rows)
      {
        rows.push_back({{"N_deim", row.terms},
                        {"mean_relative_error", row.mean_error},
                        {"max_relative_error", row.max_error}});
      }
      return report(r.invariants_ok, {{"errors", rows},
                                      {"projection_error", r.projection_error},
                                      {"out", cfg.out.string()}});
    }
    if (as->parsed())
    {
      const RunConfig rc = resolve(as, as_flags);
      mor::AsubDemo cfg;
      apply(rc.train_size, cfg.train_size);
      apply(rc.out, cfg.out);
      cfg.seed = rc.seed;
      const auto r = mor::run_asub_demo(cfg);
      auto eig = [](const mor::Vector &v) {
        return std::vector<double>(v.data(), v.data() + v.size());
      };
      return report(r.invariants_ok, {{"paraboloid_eigenvalues", eig(r.paraboloid.eigenvalues)},
                                      {"quadratic_eigenvalues", eig(r.quadratic.eigenvalues)},
                                      {"out", cfg.out.string()}});
    }
    if (morph->parsed())
    {
      mor::MorphKind kind = mor::MorphKind::ffd;
      if (morph->got_subcommand("rbf"))
      {
        kind = mor::MorphKind::rbf;
      }
      else if (morph->got_subcommand("idw"))
      {
        kind = mor::MorphKind::idw;
      }
      const json summary = mor::run_morph(kind, points, descriptor, morph_out);
      std::cout << summary.dump() << '\n';
      return 0;
    }
    if (rom_save->parsed())
    {
      auto cfg = thermal_config(resolve(rom_save, rom_flags));
      if (!rom_save->count("--out"))
      {
        cfg.out = "out/rom";
      }
      const mor::RomSystem r = mor::build_thermal_rom(cfg);
      mor::save_rom(r, cfg.out);
      std::cout << json{{"N", r.size()}, {"out", cfg.out.string()}}.dump() << '\n';
      return 0;
    }
    if (rom_load->parsed() || rom_solve->parsed())
    {
      const mor::RomSystem r = mor::load_rom(rom_dir, mor::resolve_theta_maps);
      if (rom_load->parsed())
      {
        std::cout << json{{"name", r.name},
                          {"N", r.size()},
                          {"Q_a", r.matrix_terms.size()},
                          {"Q_f", r.rhs_terms.size()},
                          {"dof_count", r.dof_count}}
                         .dump()
                  << '\n';
        return 0;
      }
      const auto sol = mor::rom_solve(r, mor::Vector::Constant(1, rom_mu));
      std::vector<double> u(sol.coefficients.data(),
                            sol.coefficients.data() + sol.coefficients.size());
      std::cout << json{{"mu", rom_mu}, {"s_N", sol.output}, {"u_N", u}}.dump() << '\n';
      return 0;
    }
  }
  catch (const mor::ParseError &e)
  {
    std::cerr << "mor: " << e.what() << '\n';
    return 2;
  }
  catch (const std::exception &e)
  {
    std::cerr << "mor: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
