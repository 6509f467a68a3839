#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "lokf/core.hpp"

namespace lokf {

/// Malformed CSV input. `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, int line) : std::runtime_error(what), line(line) {}
    int line;
};

/// The header lacks xk columns.
class MissingKnockoffs : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Reads a dataset with header columns y, x1..xp, xk1..xkp, z1..zm (any order).
DataBundle read_dataset_csv(std::istream& in);
DataBundle read_dataset_csv(const std::string& path);

/// Writes y, x1..xp, xk1..xkp, z1..zm with round-trip precision.
void write_dataset_csv(std::ostream& out, const DataBundle& d);
void write_dataset_csv(const std::string& path, const DataBundle& d);

/// Per-variable covariate lists as JSON, 1-based covariate numbers.
std::string partition_to_json(const PartitionSet& nu);
PartitionSet partition_from_json(const std::string& text);

}  // namespace lokf
