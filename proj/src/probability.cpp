#include "cptgen/probability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "cptgen/errors.hpp"

namespace cptgen {

namespace {

void check_labels(const std::vector<std::string>& labels, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels) {
    if (label.empty()) {
      throw ValidationError(fmt::format("{} label is empty", what));
    }
    if (!seen.insert(label).second) {
      throw ValidationError(fmt::format("duplicate {} label '{}'", what, label));
    }
  }
}

// Arithmetic results may overshoot [0,1] by a few ulps.
ProbVector computed_vector(std::vector<std::string> labels, std::vector<double> values) {
  for (double& v : values) {
    if (v < 0.0 && v > -1e-12) v = 0.0;
    if (v > 1.0 && v < 1.0 + 1e-12) v = 1.0;
  }
  return ProbVector::from_normalized(std::move(labels), std::move(values));
}

std::size_t product(std::span<const std::size_t> arities) {
  return std::accumulate(arities.begin(), arities.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

std::vector<std::string> numbered_labels(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) out.push_back(fmt::format("{}{}", prefix, i));
  return out;
}

// ---------------------------------------------------------------------------
// ProbVector
// ---------------------------------------------------------------------------

ProbVector make_prob_vector(std::vector<std::string> labels, std::vector<double> values,
                            double tolerance) {
  if (values.empty()) throw ValidationError("probability vector is empty");
  if (labels.size() != values.size()) {
    throw ValidationError(
        fmt::format("{} labels for {} values", labels.size(), values.size()));
  }
  check_labels(labels, "state");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      throw ValidationError(fmt::format("state '{}' is not a finite number", labels[i]));
    }
    if (v < -tolerance) {
      throw ValidationError(fmt::format("state '{}' is negative ({})", labels[i], v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ValidationError(fmt::format("values sum to {:.17g}, not 1", sum));
  }
  double clamped_sum = 0.0;
  for (double& v : values) {
    v = std::max(v, 0.0);
    clamped_sum += v;
  }
  // Already-normalised input is left bit-identical so that repeated
  // validation (e.g. load after save) is the identity.
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                       static_cast<double>(values.size());
  if (std::abs(clamped_sum - 1.0) > slack) {
    for (double& v : values) v /= clamped_sum;
  }
  return ProbVector(std::move(labels), std::move(values));
}

ProbVector ProbVector::from_normalized(std::vector<std::string> labels, std::vector<double> values,
                                       double tolerance) {
  if (values.empty()) throw ValidationError("probability vector is empty");
  if (labels.size() != values.size()) {
    throw ValidationError(
        fmt::format("{} labels for {} values", labels.size(), values.size()));
  }
  check_labels(labels, "state");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw ValidationError(
          fmt::format("state '{}' = {:.17g} is outside [0, 1]", labels[i], values[i]));
    }
    sum += values[i];
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ValidationError(fmt::format("values sum to {:.17g}, not 1", sum));
  }
  return ProbVector(std::move(labels), std::move(values));
}

std::optional<std::size_t> ProbVector::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::optional<std::size_t> ProbVector::hard_state() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == 1.0) return i;
  }
  return std::nullopt;
}

Eigen::VectorXd ProbVector::as_eigen() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(size()));
}

ProbVector hard_evidence(std::vector<std::string> labels, std::size_t state) {
  if (state >= labels.size()) {
    throw DimensionError(fmt::format("state {} out of range for {} states", state, labels.size()));
  }
  std::vector<double> values(labels.size(), 0.0);
  values[state] = 1.0;
  return ProbVector::from_normalized(std::move(labels), std::move(values));
}

ProbVector uniform(std::vector<std::string> labels) {
  const std::size_t n = labels.size();
  return make_prob_vector(std::move(labels), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Cpt
// ---------------------------------------------------------------------------

Cpt::Cpt(std::vector<std::string> effect_labels, std::vector<std::string> cause_labels,
         Eigen::MatrixXd entries, std::vector<std::size_t> arities)
    : effect_labels_(std::move(effect_labels)),
      cause_labels_(std::move(cause_labels)),
      entries_(std::move(entries)),
      arities_(std::move(arities)) {
  validate();
}

Cpt::Cpt(std::vector<std::string> effect_labels, std::vector<NodeSpec> parents,
         Eigen::MatrixXd entries)
    : effect_labels_(std::move(effect_labels)), entries_(std::move(entries)) {
  std::vector<ProbVector> beliefs;
  for (const auto& p : parents) beliefs.push_back(uniform(p.states));
  cause_labels_ = combine(beliefs).labels();
  for (const auto& p : parents) arities_.push_back(p.arity());
  parents_ = std::move(parents);
  validate();
}

void Cpt::validate() const {
  const auto m = static_cast<std::size_t>(entries_.rows());
  const auto n = static_cast<std::size_t>(entries_.cols());
  if (m == 0 || n == 0) throw DimensionError("CPT must have at least one row and column");
  if (effect_labels_.size() != m) {
    throw DimensionError(fmt::format("{} effect labels for {} rows", effect_labels_.size(), m));
  }
  if (cause_labels_.size() != n) {
    throw DimensionError(fmt::format("{} cause labels for {} columns", cause_labels_.size(), n));
  }
  check_labels(effect_labels_, "effect");
  check_labels(cause_labels_, "cause");
  if (!arities_.empty() && product(arities_) != n) {
    throw DimensionError(fmt::format("arity profile multiplies to {}, CPT has {} columns",
                                     product(arities_), n));
  }
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError(fmt::format("entry ({}, {}) = {:.17g} is outside [0, 1]",
                                          effect_labels_[i], cause_labels_[j], v),
                              Location{i + 1, j + 1, {}});
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kColumnSumTolerance) {
      throw ValidationError(
          fmt::format("column '{}' sums to {:.17g}, not 1", cause_labels_[j], sum),
          Location{std::nullopt, j + 1, {}});
    }
  }
}

ProbVector Cpt::column(std::size_t j) const {
  if (j >= cause_count()) throw DimensionError(fmt::format("column {} out of range", j));
  const Eigen::VectorXd col = entries_.col(static_cast<Eigen::Index>(j));
  return ProbVector::from_normalized(effect_labels_, std::vector<double>(col.begin(), col.end()));
}

Cpt Cpt::with_parents(std::vector<NodeSpec> parents) const {
  std::vector<std::size_t> arities;
  for (const auto& p : parents) arities.push_back(p.arity());
  if (!arities_.empty() && arities != arities_) {
    throw DimensionError("parent arities disagree with the CPT's arity profile");
  }
  if (product(arities) != cause_count()) {
    throw DimensionError(fmt::format("parents combine to {} states, CPT has {} columns",
                                     product(arities), cause_count()));
  }
  Cpt out = *this;
  out.arities_ = std::move(arities);
  out.parents_ = std::move(parents);
  return out;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::vector<double> combine_values(std::span<const std::span<const double>> parents) {
  std::vector<double> out{1.0};
  for (const auto& p : parents) {
    std::vector<double> next;
    next.reserve(out.size() * p.size());
    for (double a : out) {
      for (double b : p) next.push_back(a * b);
    }
    out = std::move(next);
  }
  return out;
}

ProbVector combine(std::span<const ProbVector> parents) {
  if (parents.empty()) throw ValidationError("combine needs at least one parent");
  std::vector<std::string> labels{""};
  std::vector<std::span<const double>> rows;
  for (const auto& p : parents) {
    std::vector<std::string> next;
    next.reserve(labels.size() * p.size());
    for (const auto& a : labels) {
      for (const auto& b : p.labels()) next.push_back(a + b);
    }
    labels = std::move(next);
    rows.push_back(p.values());
  }
  return computed_vector(std::move(labels), combine_values(rows));
}

std::size_t flat_index(std::span<const std::size_t> arities, std::span<const std::size_t> states) {
  if (arities.size() != states.size()) {
    throw DimensionError(
        fmt::format("{} states given for {} parents", states.size(), arities.size()));
  }
  std::size_t index = 0;
  for (std::size_t p = 0; p < arities.size(); ++p) {
    if (states[p] >= arities[p]) {
      throw DimensionError(fmt::format("state {} out of range for parent {} with {} states",
                                       states[p] + 1, p + 1, arities[p]));
    }
    index = index * arities[p] + states[p];
  }
  return index;
}

ProbVector predict_effects(const Cpt& cpt, const ProbVector& cause) {
  if (cause.size() != cpt.cause_count()) {
    throw DimensionError(fmt::format("cause vector has {} states, CPT expects {}", cause.size(),
                                     cpt.cause_count()));
  }
  const Eigen::VectorXd z = cpt.entries() * cause.as_eigen();
  return computed_vector(cpt.effect_labels(), std::vector<double>(z.begin(), z.end()));
}

JointTable joint_table(const Cpt& cpt, const ProbVector& cause) {
  if (cause.size() != cpt.cause_count()) {
    throw DimensionError(fmt::format("cause vector has {} states, CPT expects {}", cause.size(),
                                     cpt.cause_count()));
  }
  return {cpt.effect_labels(), cpt.cause_labels(),
          cpt.entries() * cause.as_eigen().asDiagonal()};
}

Cpt reverse_cpt(const Cpt& cpt, const ProbVector& cause, ZeroMarginalPolicy policy) {
  const JointTable joint = joint_table(cpt, cause);
  const Eigen::Index m = joint.entries.rows();
  const Eigen::Index n = joint.entries.cols();
  Eigen::MatrixXd reversed(n, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double marginal = joint.entries.row(i).sum();
    if (marginal == 0.0) {
      if (policy == ZeroMarginalPolicy::kFail) {
        throw DegenerateMarginalError(fmt::format(
            "effect state '{}' has zero probability under the given causes",
            joint.effect_labels[static_cast<std::size_t>(i)]));
      }
      reversed.col(i).setConstant(1.0 / static_cast<double>(n));
      continue;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      reversed(j, i) = std::min(joint.entries(i, j) / marginal, 1.0);
    }
  }
  return Cpt(joint.cause_labels, joint.effect_labels, std::move(reversed));
}

std::vector<ProbVector> split_combined(const ProbVector& combined,
                                       std::span<const std::size_t> arities) {
  std::vector<NodeSpec> parents;
  for (std::size_t p = 0; p < arities.size(); ++p) {
    parents.push_back({fmt::format("P{}", p + 1), numbered_labels("s", arities[p])});
  }
  return split_combined(combined, parents);
}

std::vector<ProbVector> split_combined(const ProbVector& combined,
                                       std::span<const NodeSpec> parents) {
  std::vector<std::size_t> arities;
  for (const auto& p : parents) arities.push_back(p.arity());
  if (parents.empty() || product(arities) != combined.size()) {
    throw DimensionError(fmt::format("arities multiply to {}, combined vector has {} states",
                                     product(arities), combined.size()));
  }
  std::vector<std::vector<double>> marginals;
  for (std::size_t a : arities) marginals.emplace_back(a, 0.0);
  std::vector<std::size_t> states(arities.size(), 0);
  for (std::size_t flat = 0; flat < combined.size(); ++flat) {
    for (std::size_t p = 0; p < arities.size(); ++p) marginals[p][states[p]] += combined[flat];
    // Odometer increment, last parent fastest.
    for (std::size_t p = arities.size(); p-- > 0;) {
      if (++states[p] < arities[p]) break;
      states[p] = 0;
    }
  }
  std::vector<ProbVector> out;
  for (std::size_t p = 0; p < parents.size(); ++p) {
    out.push_back(computed_vector(parents[p].states, std::move(marginals[p])));
  }
  return out;
}

ProbVector effects_from_evidence(const Cpt& cpt, std::span<const Evidence> evidence) {
  if (!cpt.has_arities()) {
    throw DimensionError("evidence needs a CPT with a parent arity profile");
  }
  const auto& arities = cpt.arities();
  if (evidence.size() != arities.size()) {
    throw DimensionError(fmt::format("{} evidence items for {} parents", evidence.size(),
                                     arities.size()));
  }
  std::vector<const Evidence*> by_parent(arities.size(), nullptr);
  for (const auto& e : evidence) {
    if (e.parent >= arities.size()) {
      throw DimensionError(fmt::format("evidence for parent {} but CPT has {} parents",
                                       e.parent + 1, arities.size()));
    }
    if (by_parent[e.parent] != nullptr) {
      throw DimensionError(fmt::format("duplicate evidence for parent {}", e.parent + 1));
    }
    by_parent[e.parent] = &e;
  }

  const bool all_hard =
      std::all_of(evidence.begin(), evidence.end(), [](const Evidence& e) { return e.is_hard(); });
  if (all_hard) {
    std::vector<std::size_t> states;
    for (const auto* e : by_parent) states.push_back(std::get<std::size_t>(e->value));
    return cpt.column(flat_index(arities, states));
  }

  std::vector<ProbVector> beliefs;
  for (std::size_t p = 0; p < arities.size(); ++p) {
    const Evidence& e = *by_parent[p];
    const auto labels = cpt.parents().empty() ? numbered_labels("s", arities[p])
                                              : cpt.parents()[p].states;
    if (e.is_hard()) {
      beliefs.push_back(hard_evidence(labels, std::get<std::size_t>(e.value)));
    } else {
      const auto& soft = std::get<ProbVector>(e.value);
      if (soft.size() != arities[p]) {
        throw DimensionError(fmt::format("soft evidence for parent {} has {} states, expected {}",
                                         p + 1, soft.size(), arities[p]));
      }
      beliefs.push_back(soft);
    }
  }
  // Labels of the combined vector are irrelevant here; only values are used.
  std::vector<std::span<const double>> rows;
  for (const auto& b : beliefs) rows.push_back(b.values());
  return predict_effects(
      cpt, ProbVector::from_normalized(cpt.cause_labels(), combine_values(rows), 1e-9));
}

}  // namespace cptgen
