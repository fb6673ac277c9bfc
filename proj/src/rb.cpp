// SPDX-License-Identifier: Apache-2.0

#include "mor/rb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "mor/io.hpp"
#include "mor/parallel.hpp"

namespace mor
{

void SnapshotSet::validate() const
{
  if (matrix.cols() != static_cast<Index>(parameters.size()))
  {
    throw DomainError("SnapshotSet: column count differs from parameter count");
  }
  for (std::size_t i = 0; i < parameters.size(); ++i)
  {
    for (std::size_t j = i + 1; j < parameters.size(); ++j)
    {
      if (parameters[i].size() == parameters[j].size() && parameters[i] == parameters[j])
      {
        throw DomainError("SnapshotSet: duplicate parameter point");
      }
    }
  }
}

ReducedBasis::ReducedBasis(SparseMatrix gram) : vectors_(gram.rows(), 0), gram_(std::move(gram))
{
}

ReducedBasis::ReducedBasis(Matrix vectors, SparseMatrix gram)
  : vectors_(std::move(vectors)), gram_(std::move(gram))
{
  if (vectors_.rows() != gram_.rows() || gram_.rows() != gram_.cols())
  {
    throw DomainError("ReducedBasis: dimension mismatch");
  }
}

const Matrix &ReducedBasis::vectors() const
{
  instrument::note_full_order_read();
  return vectors_;
}

const SparseMatrix &ReducedBasis::gram() const
{
  instrument::note_full_order_read();
  return gram_;
}

void ReducedBasis::append(const Vector &zeta)
{
  if (zeta.size() != vectors_.rows())
  {
    throw DomainError("ReducedBasis::append: length mismatch");
  }
  vectors_.conservativeResize(Eigen::NoChange, vectors_.cols() + 1);
  vectors_.col(vectors_.cols() - 1) = zeta;
}

double ReducedBasis::orthonormality_defect() const
{
  if (vectors_.cols() == 0)
  {
    return 0.0;
  }
  const Matrix gv = gram_ * vectors_;
  const Matrix m = vectors_.transpose() * gv;
  return (m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

namespace
{

bool is_identity(const SparseMatrix &g)
{
  if (g.rows() != g.cols() || g.nonZeros() != g.rows())
  {
    return false;
  }
  for (Index k = 0; k < g.outerSize(); ++k)
  {
    for (SparseMatrix::InnerIterator it(g, k); it; ++it)
    {
      if (it.row() != it.col() || it.value() != 1.0)
      {
        return false;
      }
    }
  }
  return true;
}

Index retained_count(const Vector &sigma, const PodCriterion &criterion)
{
  Index nonzero = 0;
  while (nonzero < sigma.size() && sigma(nonzero) > 0.0)
  {
    ++nonzero;
  }
  if (const auto *rank = std::get_if<RankCriterion>(&criterion))
  {
    if (rank->rank < 1 || rank->rank > sigma.size())
    {
      throw DomainError("pod: rank must lie in [1, N_max]");
    }
    return std::min(rank->rank, nonzero);
  }
  const double fraction = std::get<EnergyCriterion>(criterion).fraction;
  if (!(fraction > 0.0 && fraction <= 1.0))
  {
    throw DomainError("pod: energy fraction must lie in (0, 1]");
  }
  std::vector<double> partial(static_cast<std::size_t>(sigma.size()));
  double running = 0.0;
  for (Index i = 0; i < sigma.size(); ++i)
  {
    running += sigma(i);
    partial[i] = running;
  }
  const double total = running;
  for (Index i = 0; i < nonzero; ++i)
  {
    if (partial[i] >= fraction * total)
    {
      return i + 1;
    }
  }
  return nonzero;
}

}  // namespace

ReducedBasis pod(const SnapshotSet &snapshots, const SparseMatrix &gram,
                 const PodCriterion &criterion)
{
  snapshots.validate();
  const Matrix &s = snapshots.matrix;
  if (s.cols() == 0 || s.rows() == 0)
  {
    throw DomainError("pod: empty snapshot set");
  }
  if (gram.rows() != s.rows() || gram.cols() != s.rows())
  {
    throw DomainError("pod: gram dimension mismatch");
  }
  require_finite(s, "pod");
  if (s.cwiseAbs().maxCoeff() == 0.0)
  {
    throw DomainError("pod: zero snapshot matrix");
  }

  const Index n_h = s.rows();
  const Index n_max = s.cols();
  const double eps = std::numeric_limits<double>::epsilon();
  Vector sigma;
  Matrix modes;

  if (n_h <= n_max && is_identity(gram))
  {
    SvdResult dec = svd(s);
    sigma = Vector::Zero(n_max);
    const Index k = dec.singular_values.size();
    const double floor = 10.0 * static_cast<double>(std::max(n_h, n_max)) * eps *
                         dec.singular_values(0);
    for (Index i = 0; i < k; ++i)
    {
      sigma(i) = dec.singular_values(i) > floor ? dec.singular_values(i) : 0.0;
    }
    modes = dec.left_vectors;
  }
  else
  {
    const Matrix gs = gram * s;
    Matrix c = s.transpose() * gs;
    c = 0.5 * (c + c.transpose());
    SymEigResult dec = sym_eig(c);
    const double floor = 10.0 * static_cast<double>(n_max) * eps * dec.eigenvalues(0);
    sigma = Vector::Zero(n_max);
    modes = Matrix::Zero(n_h, n_max);
    for (Index i = 0; i < n_max; ++i)
    {
      const double lambda = dec.eigenvalues(i);
      if (lambda > floor)
      {
        sigma(i) = std::sqrt(lambda);
        modes.col(i) = s * dec.eigenvectors.col(i) / sigma(i);
      }
    }
  }

  const Index n = retained_count(sigma, criterion);
  ReducedBasis basis(gram);
  for (Index i = 0; i < n; ++i)
  {
    Matrix current = basis.size() ? basis.vectors() : Matrix(n_h, 0);
    auto zeta = orthonormalize(modes.col(i), current, gram);
    if (!zeta)
    {
      break;
    }
    basis.append(*zeta);
  }
  basis.singular_values = sigma;
  return basis;
}

// ---------------------------------------------------------------------------

RomSystem project(const AffineSystem &system, const ReducedBasis &basis)
{
  if (basis.dof_count() != system.dof_count())
  {
    throw DomainError("project: basis and system dimensions differ");
  }
  const Matrix &v = basis.vectors();
  RomSystem rom{system.name(),
                system.dof_count(),
                {},
                {},
                {},
                system.theta_a_map(),
                system.theta_f_map(),
                system.theta_l_map(),
                system.domain(),
                basis.selected_parameters,
                basis.singular_values};
  for (std::size_t q = 0; q < system.q_a(); ++q)
  {
    const Matrix av = system.matrix_term(q) * v;
    rom.matrix_terms.push_back(v.transpose() * av);
  }
  for (std::size_t q = 0; q < system.q_f(); ++q)
  {
    rom.rhs_terms.push_back(v.transpose() * system.rhs_term(q));
  }
  for (std::size_t q = 0; q < system.q_l(); ++q)
  {
    rom.output_terms.push_back(v.transpose() * system.output_term(q));
  }
  return rom;
}

RomSolution rom_solve(const RomSystem &rom, const Parameter &mu)
{
  if (!rom.domain.contains(mu))
  {
    throw DomainError("rom_solve: parameter outside the domain");
  }
  const Index n = rom.size();
  if (n == 0)
  {
    throw DomainError("rom_solve: empty reduced basis");
  }
  const Vector ta = rom.theta_a(mu);
  if (static_cast<std::size_t>(ta.size()) != rom.matrix_terms.size())
  {
    throw DomainError("rom_solve: theta_a length mismatch");
  }
  Matrix a = Matrix::Zero(n, n);
  for (std::size_t q = 0; q < rom.matrix_terms.size(); ++q)
  {
    a += ta(static_cast<Index>(q)) * rom.matrix_terms[q];
  }
  Vector f = Vector::Zero(n);
  if (!rom.rhs_terms.empty())
  {
    const Vector tf = rom.theta_f(mu);
    if (static_cast<std::size_t>(tf.size()) != rom.rhs_terms.size())
    {
      throw DomainError("rom_solve: theta_f length mismatch");
    }
    for (std::size_t q = 0; q < rom.rhs_terms.size(); ++q)
    {
      f += tf(static_cast<Index>(q)) * rom.rhs_terms[q];
    }
  }
  RomSolution out{solve(a, f), 0.0};
  if (!rom.output_terms.empty())
  {
    const Vector tl = rom.theta_l(mu);
    if (static_cast<std::size_t>(tl.size()) != rom.output_terms.size())
    {
      throw DomainError("rom_solve: theta_l length mismatch");
    }
    for (std::size_t q = 0; q < rom.output_terms.size(); ++q)
    {
      out.output += tl(static_cast<Index>(q)) * rom.output_terms[q].dot(out.coefficients);
    }
  }
  return out;
}

Vector lift(const ReducedBasis &basis, const Vector &u_n)
{
  if (u_n.size() != basis.size())
  {
    throw DomainError("lift: coefficient length differs from basis size");
  }
  return basis.vectors() * u_n;
}

// ---------------------------------------------------------------------------

GreedyResult greedy(const AffineSystem &system, const std::vector<Parameter> &training_set,
                    double tol, const Parameter &mu1, Index n_max, ErrorEstimator &estimator)
{
  if (training_set.empty())
  {
    throw DomainError("greedy: empty training set");
  }
  if (n_max < 1)
  {
    throw DomainError("greedy: n_max must be at least 1");
  }
  if (std::none_of(training_set.begin(), training_set.end(), [&](const Parameter &p) {
        return p.size() == mu1.size() && p == mu1;
      }))
  {
    throw DomainError("greedy: mu1 is not in the training set");
  }

  GreedyResult result{ReducedBasis(system.gram()), RomSystem{}, {}, false, false};
  ReducedBasis &basis = result.basis;
  const Index n_h = system.dof_count();

  auto enrich = [&](const Parameter &mu) {
    const FomSolution sol = fom_solve(system, mu);
    Matrix current = basis.size() ? basis.vectors() : Matrix(n_h, 0);
    auto zeta = orthonormalize(sol.coefficients, current, system.gram());
    if (!zeta)
    {
      return false;
    }
    basis.append(*zeta);
    basis.selected_parameters.push_back(mu);
    return true;
  };

  if (!enrich(mu1))
  {
    throw DomainError("greedy: snapshot at mu1 is zero");
  }

  std::vector<double> bounds(training_set.size());
  while (true)
  {
    result.rom = project(system, basis);
    estimator.rebuild(system, basis);
    const RomSystem &rom = result.rom;
    parallel_for(training_set.size(), [&](std::size_t k) {
      const RomSolution sol = rom_solve(rom, training_set[k]);
      bounds[k] = estimator.bound(rom, training_set[k], sol.coefficients);
    });
    std::size_t arg = 0;
    for (std::size_t k = 1; k < bounds.size(); ++k)
    {
      if (bounds[k] > bounds[arg])
      {
        arg = k;
      }
    }
    result.history.push_back({basis.size(), bounds[arg], arg});
    if (bounds[arg] <= tol)
    {
      result.converged = true;
      break;
    }
    if (basis.size() >= n_max)
    {
      break;
    }
    if (!enrich(training_set[arg]))
    {
      result.saturated = true;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace
{

using nlohmann::json;

json vector_json(const Vector &v)
{
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i)
  {
    arr.push_back(v(i));
  }
  return arr;
}

Vector json_vector(const json &arr)
{
  Vector v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
  {
    v(static_cast<Index>(i)) = arr.at(i).get<double>();
  }
  return v;
}

std::vector<std::string> write_terms(const std::filesystem::path &dir, const std::string &prefix,
                                     const std::vector<Matrix> &terms)
{
  std::vector<std::string> names;
  for (std::size_t q = 0; q < terms.size(); ++q)
  {
    names.push_back(prefix + "_" + std::to_string(q) + ".csv");
    write_matrix_csv(dir / names.back(), terms[q]);
  }
  return names;
}

std::vector<Matrix> as_matrices(const std::vector<Vector> &vs)
{
  return std::vector<Matrix>(vs.begin(), vs.end());
}

}  // namespace

void save_rom(const RomSystem &rom, const std::filesystem::path &dir)
{
  std::filesystem::create_directories(dir);
  json m;
  m["format_version"] = kRomFormatVersion;
  m["problem"] = rom.name;
  m["N"] = rom.size();
  m["N_h"] = rom.dof_count;
  m["Q_a"] = rom.matrix_terms.size();
  m["Q_f"] = rom.rhs_terms.size();
  m["Q_l"] = rom.output_terms.size();
  m["domain"] = {{"lower", vector_json(rom.domain.lower())},
                 {"upper", vector_json(rom.domain.upper())}};
  json params = json::array();
  for (const auto &p : rom.selected_parameters)
  {
    params.push_back(vector_json(p));
  }
  m["selected_parameters"] = params;
  m["singular_values"] = vector_json(rom.singular_values);
  m["matrix_terms"] = write_terms(dir, "A", rom.matrix_terms);
  m["rhs_terms"] = write_terms(dir, "f", as_matrices(rom.rhs_terms));
  m["output_terms"] = write_terms(dir, "l", as_matrices(rom.output_terms));
  std::ofstream out(dir / "manifest.json");
  if (!out)
  {
    throw Error("save_rom: cannot write manifest in " + dir.string());
  }
  out << m.dump(2) << '\n';
}

RomSystem load_rom(const std::filesystem::path &dir,
                   const std::function<ThetaMaps(const std::string &name)> &resolve)
{
  std::ifstream in(dir / "manifest.json");
  if (!in)
  {
    throw Error("load_rom: no manifest.json in " + dir.string());
  }
  json m;
  try
  {
    m = json::parse(in);
  }
  catch (const json::exception &e)
  {
    throw Error(std::string("load_rom: malformed manifest: ") + e.what());
  }
  try
  {
    if (m.at("format_version").get<int>() != kRomFormatVersion)
    {
      throw Error("load_rom: unsupported format version");
    }
    const Index n = m.at("N").get<Index>();
    ThetaMaps maps = resolve(m.at("problem").get<std::string>());
    RomSystem rom{m.at("problem").get<std::string>(),
                  m.at("N_h").get<Index>(),
                  {},
                  {},
                  {},
                  maps.theta_a,
                  maps.theta_f,
                  maps.theta_l,
                  ParamDomain(json_vector(m.at("domain").at("lower")),
                              json_vector(m.at("domain").at("upper"))),
                  {},
                  json_vector(m.at("singular_values"))};
    for (const auto &p : m.at("selected_parameters"))
    {
      rom.selected_parameters.push_back(json_vector(p));
    }
    auto read = [&](const char *key, Index cols) {
      std::vector<Matrix> out;
      for (const auto &name : m.at(key))
      {
        Matrix t = read_matrix_csv(dir / name.get<std::string>());
        if (t.rows() != n || t.cols() != cols)
        {
          throw Error("load_rom: payload " + name.get<std::string>() + " has wrong shape");
        }
        out.push_back(std::move(t));
      }
      return out;
    };
    rom.matrix_terms = read("matrix_terms", n);
    for (auto &t : read("rhs_terms", 1))
    {
      rom.rhs_terms.push_back(t.col(0));
    }
    for (auto &t : read("output_terms", 1))
    {
      rom.output_terms.push_back(t.col(0));
    }
    if (rom.matrix_terms.size() != m.at("Q_a").get<std::size_t>() ||
        rom.rhs_terms.size() != m.at("Q_f").get<std::size_t>() ||
        rom.output_terms.size() != m.at("Q_l").get<std::size_t>())
    {
      throw Error("load_rom: term counts disagree with the manifest");
    }
    return rom;
  }
  catch (const json::exception &e)
  {
    throw Error(std::string("load_rom: malformed manifest: ") + e.what());
  }
}

}  // namespace mor
