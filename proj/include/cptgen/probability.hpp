#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cptgen {

inline constexpr double kDefaultInputTolerance = 1e-6;
inline constexpr double kColumnSumTolerance = 1e-9;

/// A discrete node: its name and ordered state labels.
struct NodeSpec {
  std::string name;
  std::vector<std::string> states;

  std::size_t arity() const noexcept { return states.size(); }
  bool operator==(const NodeSpec&) const = default;
};

/// Labels "<prefix>1" ... "<prefix>n".
std::vector<std::string> numbered_labels(const std::string& prefix, std::size_t n);

/// Belief over the states of one node. Immutable once built.
class ProbVector {
 public:
  /// Checks without modifying: entries in [0,1] and |sum - 1| <= tolerance.
  static ProbVector from_normalized(std::vector<std::string> labels, std::vector<double> values,
                                    double tolerance = kColumnSumTolerance);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> index_of(const std::string& label) const;

  /// Index of the single state with probability exactly 1, if any.
  std::optional<std::size_t> hard_state() const;

  Eigen::VectorXd as_eigen() const;

  bool operator==(const ProbVector&) const = default;

 private:
  ProbVector(std::vector<std::string> labels, std::vector<double> values)
      : labels_(std::move(labels)), values_(std::move(values)) {}

  friend ProbVector make_prob_vector(std::vector<std::string>, std::vector<double>, double);

  std::vector<std::string> labels_;
  std::vector<double> values_;
};

/// Validates, clamps negatives within tolerance to 0 and renormalises to sum 1.
/// Throws ValidationError if any value < -tolerance or |sum - 1| > tolerance.
ProbVector make_prob_vector(std::vector<std::string> labels, std::vector<double> values,
                            double tolerance = kDefaultInputTolerance);

ProbVector hard_evidence(std::vector<std::string> labels, std::size_t state);
ProbVector uniform(std::vector<std::string> labels);

/// Column-stochastic m x n table P(effect | combined cause).
///
/// The optional arity profile records how the n combined cause states
/// factor over the parents, earlier parents varying slower. When parent
/// specs are attached they fix the profile and name the parent states.
class Cpt {
 public:
  Cpt(std::vector<std::string> effect_labels, std::vector<std::string> cause_labels,
      Eigen::MatrixXd entries, std::vector<std::size_t> arities = {});
  Cpt(std::vector<std::string> effect_labels, std::vector<NodeSpec> parents,
      Eigen::MatrixXd entries);

  std::size_t effect_count() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t cause_count() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const std::vector<std::string>& effect_labels() const noexcept { return effect_labels_; }
  const std::vector<std::string>& cause_labels() const noexcept { return cause_labels_; }
  const std::vector<std::size_t>& arities() const noexcept { return arities_; }
  const std::vector<NodeSpec>& parents() const noexcept { return parents_; }
  bool has_arities() const noexcept { return !arities_.empty(); }

  ProbVector column(std::size_t j) const;

  /// Same table with parent names attached; arities must agree.
  Cpt with_parents(std::vector<NodeSpec> parents) const;

 private:
  void validate() const;

  std::vector<std::string> effect_labels_;
  std::vector<std::string> cause_labels_;
  Eigen::MatrixXd entries_;
  std::vector<std::size_t> arities_;
  std::vector<NodeSpec> parents_;
};

/// P(Z, X): entry (i, j) = c_ij * x_j.
struct JointTable {
  std::vector<std::string> effect_labels;
  std::vector<std::string> cause_labels;
  Eigen::MatrixXd entries;
};

/// Evidence on one parent: a state index (hard) or a belief vector (soft).
struct Evidence {
  std::size_t parent = 0;
  std::variant<std::size_t, ProbVector> value;

  static Evidence hard(std::size_t parent, std::size_t state) { return {parent, state}; }
  static Evidence soft(std::size_t parent, ProbVector belief) { return {parent, std::move(belief)}; }
  bool is_hard() const noexcept { return std::holds_alternative<std::size_t>(value); }
};

enum class ZeroMarginalPolicy { kFail, kImputeUniform };

/// Flattened product of independent parent beliefs; the first parent varies slowest.
ProbVector combine(std::span<const ProbVector> parents);

/// Product of plain probability rows, same ordering as combine().
std::vector<double> combine_values(std::span<const std::span<const double>> parents);

/// Flattened index of a state tuple, first parent slowest.
std::size_t flat_index(std::span<const std::size_t> arities, std::span<const std::size_t> states);

ProbVector predict_effects(const Cpt& cpt, const ProbVector& cause);

JointTable joint_table(const Cpt& cpt, const ProbVector& cause);

/// P(X | Z) as an n x m table, one column per effect state.
Cpt reverse_cpt(const Cpt& cpt, const ProbVector& cause,
                ZeroMarginalPolicy policy = ZeroMarginalPolicy::kFail);

/// Per-parent marginals of a combined vector. Exact inverse of combine()
/// only for product-form inputs; otherwise the marginals are still returned.
/// Parent i's states are labelled s1..s<n_i>.
std::vector<ProbVector> split_combined(const ProbVector& combined,
                                       std::span<const std::size_t> arities);
std::vector<ProbVector> split_combined(const ProbVector& combined,
                                       std::span<const NodeSpec> parents);

ProbVector effects_from_evidence(const Cpt& cpt, std::span<const Evidence> evidence);

}  // namespace cptgen
