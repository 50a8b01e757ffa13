#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cptgen/goodness.hpp"
#include "cptgen/observations.hpp"
#include "cptgen/probability.hpp"

namespace cptgen {

/// Node blocks in file order; the last node is the effect.
struct ObservationSchema {
  std::vector<NodeSpec> nodes;

  void validate() const;
  std::vector<NodeSpec> parents() const { return {nodes.begin(), nodes.end() - 1}; }
  const NodeSpec& effect() const { return nodes.back(); }
};

/// Schema implied by a `node:state` header, in column order.
ObservationSchema schema_from_header(const std::filesystem::path& path);

ObservationSet load_observations(const std::filesystem::path& path, const ObservationSchema& schema,
                                 double tolerance = kDefaultInputTolerance);
ObservationSet load_observations(const std::filesystem::path& path,
                                 double tolerance = kDefaultInputTolerance);

void save_observations(const ObservationSet& observations, const std::filesystem::path& path);

/// Drops rows whose full value tuple repeats an earlier row exactly.
ObservationSet dedup(const ObservationSet& observations);

void save_cpt(const Cpt& cpt, const std::filesystem::path& path);
Cpt load_cpt(const std::filesystem::path& path);

/// Percentage with two decimals, ties to even: 0.92857 -> "92.86%".
std::string format_percent(double fraction);

/// Writes `name,value%` lines. With plot_data, also writes
/// `<stem>_errors.csv` and `<stem>_effects.csv` next to the report.
void write_report(const GoodnessReport& report, const std::filesystem::path& path, bool plot_data);

/// Comma- or newline-separated weights over the given labels.
ProbVector read_weights(const std::filesystem::path& path, std::vector<std::string> labels);

}  // namespace cptgen
