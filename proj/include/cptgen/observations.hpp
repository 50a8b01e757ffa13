#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cptgen/probability.hpp"

namespace cptgen {

/// k paired observations: one belief row per parent plus one effect row.
///
/// Every row is validated and renormalised on construction. Source row
/// numbers (1-based, as in the originating file) and optional site ids are
/// carried along for error reporting and round trips.
class ObservationSet {
 public:
  ObservationSet(std::vector<NodeSpec> parents, std::vector<Eigen::MatrixXd> parent_blocks,
                 NodeSpec effect, Eigen::MatrixXd effect_block,
                 double tolerance = kDefaultInputTolerance,
                 std::vector<std::size_t> source_rows = {}, std::vector<std::string> sites = {});

  std::size_t row_count() const noexcept { return static_cast<std::size_t>(effect_block_.rows()); }
  std::size_t parent_count() const noexcept { return parents_.size(); }
  const std::vector<NodeSpec>& parents() const noexcept { return parents_; }
  const NodeSpec& effect() const noexcept { return effect_; }
  const std::vector<Eigen::MatrixXd>& parent_blocks() const noexcept { return parent_blocks_; }
  const Eigen::MatrixXd& effect_block() const noexcept { return effect_block_; }
  const std::vector<std::size_t>& source_rows() const noexcept { return source_rows_; }
  const std::vector<std::string>& sites() const noexcept { return sites_; }
  bool has_sites() const noexcept { return !sites_.empty(); }

  std::vector<std::size_t> arities() const;
  std::size_t combined_count() const;
  std::vector<std::string> combined_labels() const;

  /// k x n matrix of combined parent beliefs, first parent slowest.
  Eigen::MatrixXd combined_causes() const;

  /// Parent beliefs of row r combined into one vector.
  ProbVector combined_row(std::size_t r) const;
  ProbVector effect_row(std::size_t r) const;

  /// Rows at the given indices, in the given order.
  ObservationSet select(std::span<const std::size_t> rows) const;

 private:
  std::vector<NodeSpec> parents_;
  std::vector<Eigen::MatrixXd> parent_blocks_;
  NodeSpec effect_;
  Eigen::MatrixXd effect_block_;
  std::vector<std::size_t> source_rows_;
  std::vector<std::string> sites_;
};

}  // namespace cptgen
