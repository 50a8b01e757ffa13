#include "cptgen/observations.hpp"

#include <numeric>

#include <fmt/format.h>

#include "cptgen/errors.hpp"

namespace cptgen {

namespace {

void normalise_block(Eigen::MatrixXd& block, const NodeSpec& node, double tolerance,
                     const std::vector<std::size_t>& source_rows) {
  if (static_cast<std::size_t>(block.cols()) != node.arity()) {
    throw DimensionError(fmt::format("block for node {} has {} columns, node has {} states",
                                     node.name, block.cols(), node.arity()));
  }
  for (Eigen::Index r = 0; r < block.rows(); ++r) {
    std::vector<double> values(static_cast<std::size_t>(block.cols()));
    for (Eigen::Index c = 0; c < block.cols(); ++c) values[static_cast<std::size_t>(c)] = block(r, c);
    try {
      const ProbVector pv = make_prob_vector(node.states, std::move(values), tolerance);
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = pv[static_cast<std::size_t>(c)];
    } catch (const ValidationError& e) {
      throw ValidationError(e.reason(),
                            Location{source_rows[static_cast<std::size_t>(r)], std::nullopt, node.name});
    }
  }
}

}  // namespace

ObservationSet::ObservationSet(std::vector<NodeSpec> parents,
                               std::vector<Eigen::MatrixXd> parent_blocks, NodeSpec effect,
                               Eigen::MatrixXd effect_block, double tolerance,
                               std::vector<std::size_t> source_rows,
                               std::vector<std::string> sites)
    : parents_(std::move(parents)),
      parent_blocks_(std::move(parent_blocks)),
      effect_(std::move(effect)),
      effect_block_(std::move(effect_block)),
      source_rows_(std::move(source_rows)),
      sites_(std::move(sites)) {
  if (parents_.empty()) throw DimensionError("an observation set needs at least one parent");
  if (parents_.size() != parent_blocks_.size()) {
    throw DimensionError(fmt::format("{} parent specs for {} parent blocks", parents_.size(),
                                     parent_blocks_.size()));
  }
  const auto k = static_cast<std::size_t>(effect_block_.rows());
  if (k == 0) throw DimensionError("an observation set needs at least one row");
  for (std::size_t p = 0; p < parents_.size(); ++p) {
    if (static_cast<std::size_t>(parent_blocks_[p].rows()) != k) {
      throw DimensionError(fmt::format("parent {} has {} rows, effect block has {}",
                                       parents_[p].name, parent_blocks_[p].rows(), k));
    }
  }
  if (source_rows_.empty()) {
    source_rows_.resize(k);
    std::iota(source_rows_.begin(), source_rows_.end(), std::size_t{1});
  }
  if (source_rows_.size() != k) throw DimensionError("source row count mismatch");
  if (!sites_.empty() && sites_.size() != k) throw DimensionError("site id count mismatch");

  for (std::size_t p = 0; p < parents_.size(); ++p) {
    normalise_block(parent_blocks_[p], parents_[p], tolerance, source_rows_);
  }
  normalise_block(effect_block_, effect_, tolerance, source_rows_);
}

std::vector<std::size_t> ObservationSet::arities() const {
  std::vector<std::size_t> out;
  for (const auto& p : parents_) out.push_back(p.arity());
  return out;
}

std::size_t ObservationSet::combined_count() const {
  std::size_t n = 1;
  for (const auto& p : parents_) n *= p.arity();
  return n;
}

std::vector<std::string> ObservationSet::combined_labels() const {
  std::vector<ProbVector> beliefs;
  for (const auto& p : parents_) beliefs.push_back(uniform(p.states));
  return combine(beliefs).labels();
}

Eigen::MatrixXd ObservationSet::combined_causes() const {
  const auto k = static_cast<Eigen::Index>(row_count());
  Eigen::MatrixXd out(k, static_cast<Eigen::Index>(combined_count()));
  std::vector<Eigen::VectorXd> rows(parents_.size());
  for (Eigen::Index r = 0; r < k; ++r) {
    std::vector<std::span<const double>> spans;
    for (std::size_t p = 0; p < parents_.size(); ++p) {
      rows[p] = parent_blocks_[p].row(r).transpose();
      spans.emplace_back(rows[p].data(), static_cast<std::size_t>(rows[p].size()));
    }
    const std::vector<double> x = combine_values(spans);
    for (std::size_t j = 0; j < x.size(); ++j) out(r, static_cast<Eigen::Index>(j)) = x[j];
  }
  return out;
}

ProbVector ObservationSet::combined_row(std::size_t r) const {
  std::vector<ProbVector> beliefs;
  for (std::size_t p = 0; p < parents_.size(); ++p) {
    const Eigen::VectorXd row = parent_blocks_[p].row(static_cast<Eigen::Index>(r)).transpose();
    beliefs.push_back(ProbVector::from_normalized(parents_[p].states,
                                                  std::vector<double>(row.begin(), row.end())));
  }
  return combine(beliefs);
}

ProbVector ObservationSet::effect_row(std::size_t r) const {
  const Eigen::VectorXd row = effect_block_.row(static_cast<Eigen::Index>(r)).transpose();
  return ProbVector::from_normalized(effect_.states, std::vector<double>(row.begin(), row.end()));
}

ObservationSet ObservationSet::select(std::span<const std::size_t> rows) const {
  const auto take = [&rows](const Eigen::MatrixXd& block) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), block.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = block.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
  };
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& b : parent_blocks_) blocks.push_back(take(b));
  std::vector<std::size_t> source;
  std::vector<std::string> sites;
  for (std::size_t r : rows) {
    source.push_back(source_rows_.at(r));
    if (!sites_.empty()) sites.push_back(sites_[r]);
  }
  return ObservationSet(parents_, std::move(blocks), effect_, take(effect_block_),
                        kDefaultInputTolerance, std::move(source), std::move(sites));
}

}  // namespace cptgen
