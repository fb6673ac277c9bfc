// SPDX-License-Identifier: Apache-2.0

#include "mor/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mor
{

ParseError::ParseError(const std::string &file, std::size_t line, const std::string &what)
  : Error(file + ":" + std::to_string(line) + ": " + what), line_(line)
{
}

std::string format_double(double value)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string &token)
{
  std::size_t b = 0, e = token.size();
  while (b < e && std::isspace(static_cast<unsigned char>(token[b])))
  {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(token[e - 1])))
  {
    --e;
  }
  if (b < e && token[b] == '+')
  {
    ++b;
  }
  double value = 0.0;
  auto res = std::from_chars(token.data() + b, token.data() + e, value);
  if (b == e || res.ec != std::errc() || res.ptr != token.data() + e)
  {
    throw DomainError("not a number: '" + token + "'");
  }
  return value;
}

namespace
{

std::ofstream open_out(const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error("cannot open " + path.string() + " for writing");
  }
  return out;
}

std::vector<std::string> split_fields(const std::string &line)
{
  std::vector<std::string> out;
  std::string field;
  for (char c : line)
  {
    if (c == ',' || c == ' ' || c == '\t')
    {
      if (!field.empty())
      {
        out.push_back(field);
        field.clear();
      }
    }
    else if (c != '\r')
    {
      field += c;
    }
  }
  if (!field.empty())
  {
    out.push_back(field);
  }
  return out;
}

Matrix read_table(const std::filesystem::path &path, bool skip_header)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error("cannot open " + path.string());
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_done = !skip_header;
  while (std::getline(in, line))
  {
    ++lineno;
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#')
    {
      continue;
    }
    if (!header_done)
    {
      header_done = true;
      continue;
    }
    std::vector<double> row;
    for (const auto &f : fields)
    {
      try
      {
        row.push_back(parse_double(f));
      }
      catch (const DomainError &err)
      {
        throw ParseError(path.string(), lineno, err.what());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
    {
      throw ParseError(path.string(), lineno,
                       "expected " + std::to_string(rows.front().size()) + " values, got " +
                           std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty())
  {
    return Matrix(0, 0);
  }
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
  {
    for (Index j = 0; j < m.cols(); ++j)
    {
      m(i, j) = rows[i][j];
    }
  }
  return m;
}

}  // namespace

void write_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows)
{
  auto out = open_out(path);
  for (std::size_t j = 0; j < header.size(); ++j)
  {
    out << (j ? "," : "") << header[j];
  }
  out << '\n';
  for (const auto &row : rows)
  {
    if (row.size() != header.size())
    {
      throw DomainError("write_csv: row width does not match header");
    }
    for (std::size_t j = 0; j < row.size(); ++j)
    {
      out << (j ? "," : "") << format_double(row[j]);
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path &path, const Matrix &m)
{
  auto out = open_out(path);
  for (Index j = 0; j < m.cols(); ++j)
  {
    out << (j ? "," : "") << 'c' << j;
  }
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i)
  {
    for (Index j = 0; j < m.cols(); ++j)
    {
      out << (j ? "," : "") << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::filesystem::path &path)
{
  return read_table(path, true);
}

Matrix read_points(const std::filesystem::path &path)
{
  Matrix m = read_table(path, false);
  if (m.size() == 0)
  {
    throw ParseError(path.string(), 0, "no points");
  }
  return m;
}

void write_points(const std::filesystem::path &path, const Matrix &points)
{
  auto out = open_out(path);
  for (Index i = 0; i < points.rows(); ++i)
  {
    for (Index j = 0; j < points.cols(); ++j)
    {
      out << (j ? " " : "") << format_double(points(i, j));
    }
    out << '\n';
  }
}

}  // namespace mor
