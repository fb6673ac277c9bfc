// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_IO_HPP
#define MOR_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "mor/numkit.hpp"

namespace mor
{

class ParseError : public Error
{
public:
  ParseError(const std::string &file, std::size_t line, const std::string &what);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

// Shortest round-trip form is not required; always 17 significant digits.
std::string format_double(double value);
double parse_double(const std::string &token);

// Header line followed by comma-separated rows.
void write_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows);

// Matrices are stored with a c0,c1,... header. A vector is a single column.
void write_matrix_csv(const std::filesystem::path &path, const Matrix &m);
Matrix read_matrix_csv(const std::filesystem::path &path);

// Whitespace- or comma-separated coordinates, one point per line, blank lines
// and lines starting with '#' ignored. All rows must share a dimension.
Matrix read_points(const std::filesystem::path &path);
void write_points(const std::filesystem::path &path, const Matrix &points);

}  // namespace mor

#endif  // MOR_IO_HPP
