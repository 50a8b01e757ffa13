#include "cptgen/errors.hpp"

#include <fmt/format.h>

namespace cptgen {

std::string Location::describe() const {
  std::string out;
  auto append = [&out](const std::string& part) {
    if (!out.empty()) out += ", ";
    out += part;
  };
  if (row) append(fmt::format("row {}", *row));
  if (column) append(fmt::format("column {}", *column));
  if (!node.empty()) append(fmt::format("node {}", node));
  return out;
}

namespace {

std::string with_location(const std::string& reason, const Location& where) {
  const std::string at = where.describe();
  return at.empty() ? reason : fmt::format("{}: {}", at, reason);
}

}  // namespace

ValidationError::ValidationError(const std::string& reason, Location where)
    : Error(with_location(reason, where)), reason_(reason), where_(std::move(where)) {}

ParseError::ParseError(const std::string& reason, Location where)
    : Error(with_location(reason, where)), where_(std::move(where)) {}

}  // namespace cptgen
