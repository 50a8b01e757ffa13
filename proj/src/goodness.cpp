#include "cptgen/goodness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "cptgen/errors.hpp"

namespace cptgen {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(fmt::format("{}: shapes {}x{} and {}x{} differ", what, a.rows(), a.cols(),
                                     b.rows(), b.cols()));
  }
}

void require_weights(const Cpt& c, const Cpt& c_hat, const ProbVector& weights) {
  require_same_shape(c.entries(), c_hat.entries(), "CPT comparison");
  if (weights.size() != c.cause_count()) {
    throw DimensionError(fmt::format("weight vector has {} entries, CPT has {} columns",
                                     weights.size(), c.cause_count()));
  }
}

std::optional<Eigen::Index> unique_argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  bool tied = false;
  for (Eigen::Index i = 1; i < row.size(); ++i) {
    if (row(i) > row(best)) {
      best = i;
      tied = false;
    } else if (row(i) == row(best)) {
      tied = true;
    }
  }
  if (tied) return std::nullopt;
  return best;
}

}  // namespace

double effect_shift_error(const ProbVector& z, const ProbVector& z_hat) {
  if (z.size() != z_hat.size()) {
    throw DimensionError(fmt::format("effect vectors have {} and {} states", z.size(), z_hat.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += std::abs(z[i] - z_hat[i]);
  return std::min(0.5 * total, 1.0);
}

StateErrors state_errors(const Eigen::MatrixXd& z_test, const Eigen::MatrixXd& z_hat) {
  require_same_shape(z_test, z_hat, "state errors");
  if (z_test.rows() == 0 || z_test.cols() == 0) throw DimensionError("state errors need data");
  StateErrors out;
  const auto k = static_cast<double>(z_test.rows());
  for (Eigen::Index j = 0; j < z_test.cols(); ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z_test.rows(); ++i) sum += std::abs(z_test(i, j) - z_hat(i, j));
    out.per_state.push_back(std::min(sum / k, 1.0));
  }
  double total = 0.0;
  for (double s : out.per_state) total += s;
  out.mean = total / static_cast<double>(out.per_state.size());
  return out;
}

DiagnosticGoodness diagnostic_goodness(const Eigen::MatrixXd& z_test, const Eigen::MatrixXd& z_hat) {
  require_same_shape(z_test, z_hat, "diagnostic goodness");
  if (z_test.rows() == 0) throw DimensionError("diagnostic goodness needs at least one row");
  std::size_t agree = 0;
  for (Eigen::Index i = 0; i < z_test.rows(); ++i) {
    const auto a = unique_argmax(z_test.row(i));
    const auto b = unique_argmax(z_hat.row(i));
    if (a && b && *a == *b) ++agree;
  }
  DiagnosticGoodness out;
  out.goodness = static_cast<double>(agree) / static_cast<double>(z_test.rows());
  out.error = 1.0 - out.goodness;
  return out;
}

double cpt_shift_error(const Cpt& c, const Cpt& c_hat) {
  require_same_shape(c.entries(), c_hat.entries(), "CPT shift error");
  double total = 0.0;
  for (Eigen::Index j = 0; j < c.entries().cols(); ++j) {
    double column = 0.0;
    for (Eigen::Index i = 0; i < c.entries().rows(); ++i) {
      column += std::abs(c.entries()(i, j) - c_hat.entries()(i, j));
    }
    total += column;
  }
  return std::min(total / (2.0 * static_cast<double>(c.cause_count())), 1.0);
}

double cpt_kl_divergence(const Cpt& c, const Cpt& c_hat, const ProbVector& weights) {
  require_weights(c, c_hat, weights);
  double total = 0.0;
  for (Eigen::Index j = 0; j < c.entries().cols(); ++j) {
    const double w = weights[static_cast<std::size_t>(j)];
    if (w == 0.0) continue;
    double column = 0.0;
    for (Eigen::Index i = 0; i < c.entries().rows(); ++i) {
      const double p = c.entries()(i, j);
      const double q = c_hat.entries()(i, j);
      if (p == 0.0) continue;
      if (q == 0.0) return std::numeric_limits<double>::infinity();
      column += p * std::log(p / q);
    }
    total += w * column;
  }
  return std::max(total, 0.0);
}

double cpt_euclidean(const Cpt& c, const Cpt& c_hat, const ProbVector& weights) {
  require_weights(c, c_hat, weights);
  double total = 0.0;
  for (Eigen::Index j = 0; j < c.entries().cols(); ++j) {
    total += weights[static_cast<std::size_t>(j)] * (c.entries().col(j) - c_hat.entries().col(j)).squaredNorm();
  }
  return total;
}

GoodnessReport evaluate_cpt(const Cpt& cpt, const ObservationSet& test) {
  if (test.combined_count() != cpt.cause_count() || test.effect().arity() != cpt.effect_count()) {
    throw DimensionError(fmt::format(
        "test set has {} combined cause states and {} effect states; CPT is {}x{}",
        test.combined_count(), test.effect().arity(), cpt.effect_count(), cpt.cause_count()));
  }
  if (cpt.has_arities() && cpt.arities() != test.arities()) {
    throw DimensionError("test set parent arities do not match the CPT");
  }
  const auto k = static_cast<Eigen::Index>(test.row_count());
  const auto m = static_cast<Eigen::Index>(cpt.effect_count());

  GoodnessReport report;
  report.observation_count = test.row_count();
  report.effect_labels = cpt.effect_labels();
  report.observed = test.effect_block();
  report.predicted.resize(k, m);
  double sum = 0.0;
  for (Eigen::Index r = 0; r < k; ++r) {
    const ProbVector predicted = predict_effects(cpt, test.combined_row(static_cast<std::size_t>(r)));
    for (Eigen::Index i = 0; i < m; ++i) report.predicted(r, i) = predicted[static_cast<std::size_t>(i)];
    const double delta = effect_shift_error(test.effect_row(static_cast<std::size_t>(r)), predicted);
    report.per_observation_errors.push_back(delta);
    sum += delta;
  }
  report.mean_absolute_error = sum / static_cast<double>(k);
  const StateErrors s = state_errors(report.observed, report.predicted);
  report.state_errors = s.per_state;
  report.total_average_shift_error = s.mean;
  const DiagnosticGoodness g = diagnostic_goodness(report.observed, report.predicted);
  report.diagnostic_goodness = g.goodness;
  report.diagnostic_error = g.error;
  return report;
}

}  // namespace cptgen
