#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "cptgen/generation.hpp"

namespace cptgen {

namespace {

Cpt make_cpt(const ObservationSet& obs, Eigen::MatrixXd entries) {
  return Cpt(obs.effect().states, obs.parents(), std::move(entries));
}

// Index of the single 1 in a rounded row, or nullopt if the row does not
// round to hard evidence.
std::optional<std::size_t> hard_index(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                                      bool rounding) {
  std::optional<std::size_t> hit;
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    const double v = rounding ? std::nearbyint(row(c)) : row(c);
    if (v == 1.0) {
      if (hit) return std::nullopt;
      hit = static_cast<std::size_t>(c);
    } else if (v != 0.0) {
      return std::nullopt;
    }
  }
  return hit;
}

}  // namespace

MleResult mle_cpt(const ObservationSet& observations, bool rounding) {
  const auto m = static_cast<Eigen::Index>(observations.effect().arity());
  const auto n = static_cast<Eigen::Index>(observations.combined_count());
  const std::vector<std::size_t> arities = observations.arities();

  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(m, n);
  std::size_t used = 0;
  std::size_t skipped = 0;
  for (std::size_t r = 0; r < observations.row_count(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    std::vector<std::size_t> states;
    bool hard = true;
    for (const auto& block : observations.parent_blocks()) {
      const auto s = hard_index(block.row(row), rounding);
      if (!s) {
        hard = false;
        break;
      }
      states.push_back(*s);
    }
    const auto effect = hard ? hard_index(observations.effect_block().row(row), rounding)
                             : std::nullopt;
    if (!hard || !effect) {
      if (!rounding) {
        throw SoftEvidenceError(fmt::format(
            "row {} carries soft evidence; counting needs hard evidence (enable rounding)",
            observations.source_rows()[r]));
      }
      ++skipped;
      continue;
    }
    joint(static_cast<Eigen::Index>(*effect), static_cast<Eigen::Index>(flat_index(arities, states))) += 1.0;
    ++used;
  }

  std::vector<std::size_t> unobserved;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double count = joint.col(j).sum();
    if (count == 0.0) {
      joint.col(j).setConstant(1.0 / static_cast<double>(m));
      unobserved.push_back(static_cast<std::size_t>(j));
    } else {
      joint.col(j) /= count;
    }
  }
  return {make_cpt(observations, std::move(joint)), std::move(unobserved), used, skipped};
}

// ---------------------------------------------------------------------------
// EM
// ---------------------------------------------------------------------------

void EmConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("EM epsilon must be > 0");
  if (max_iterations < 1) throw ValidationError("EM max_iterations must be >= 1");
  if (restarts < 1) throw ValidationError("EM restarts must be >= 1");
}

EmNonConvergence::EmNonConvergence(EmResult partial)
    : NonConvergenceError(fmt::format(
          "EM did not converge within {} iterations (last log-likelihood change {:.3g})",
          partial.iterations,
          partial.loglik_trace.size() >= 2
              ? std::abs(partial.loglik_trace.back() -
                         partial.loglik_trace[partial.loglik_trace.size() - 2])
              : 0.0)),
      partial_(std::move(partial)) {}

double em_log_likelihood(const Eigen::MatrixXd& cpt, const Eigen::MatrixXd& causes,
                         const Eigen::MatrixXd& effects) {
  // q(d, i) = sum_j x_dj c_ij: probability of effect state i for case d.
  const Eigen::MatrixXd q = causes * cpt.transpose();
  double total = 0.0;
  for (Eigen::Index d = 0; d < effects.rows(); ++d) {
    for (Eigen::Index i = 0; i < effects.cols(); ++i) {
      const double w = effects(d, i);
      if (w == 0.0) continue;
      total += w * std::log(q(d, i));
    }
  }
  return total;
}

namespace {

// One E step (expected joint counts) followed by the M step (column
// normalisation). Columns that receive no cause mass become uniform.
Eigen::MatrixXd em_step(const Eigen::MatrixXd& cpt, const Eigen::MatrixXd& causes,
                        const Eigen::MatrixXd& effects) {
  const Eigen::Index m = cpt.rows();
  const Eigen::Index n = cpt.cols();
  const Eigen::MatrixXd q = causes * cpt.transpose();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m, n);
  for (Eigen::Index d = 0; d < effects.rows(); ++d) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double w = effects(d, i);
      if (w == 0.0 || q(d, i) == 0.0) continue;
      const double scale = w / q(d, i);
      for (Eigen::Index j = 0; j < n; ++j) counts(i, j) += scale * causes(d, j) * cpt(i, j);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double total = counts.col(j).sum();
    if (total > 0.0) {
      counts.col(j) /= total;
      for (double& v : counts.col(j)) v = std::min(v, 1.0);
    } else {
      counts.col(j).setConstant(1.0 / static_cast<double>(m));
    }
  }
  return counts;
}

Eigen::MatrixXd random_cpt(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  Eigen::MatrixXd out(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) out(i, j) = std::max(gamma(rng), std::numeric_limits<double>::min());
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

struct Run {
  Eigen::MatrixXd cpt;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

Run run_em(Eigen::MatrixXd cpt, const Eigen::MatrixXd& causes, const Eigen::MatrixXd& effects,
           const EmConfig& config) {
  Run run;
  double previous = em_log_likelihood(cpt, causes, effects);
  run.trace.push_back(previous);
  for (int t = 1; t <= config.max_iterations; ++t) {
    cpt = em_step(cpt, causes, effects);
    const double current = em_log_likelihood(cpt, causes, effects);
    run.trace.push_back(current);
    run.iterations = t;
    if (std::abs(current - previous) <= config.epsilon) {
      run.converged = true;
      break;
    }
    previous = current;
  }
  run.cpt = std::move(cpt);
  return run;
}

}  // namespace

EmResult em_cpt(const ObservationSet& observations, const EmConfig& config) {
  config.validate();
  const Eigen::MatrixXd causes = observations.combined_causes();
  const Eigen::MatrixXd& effects = observations.effect_block();
  const auto m = static_cast<Eigen::Index>(observations.effect().arity());
  const Eigen::Index n = causes.cols();

  std::mt19937_64 rng(config.seed);
  std::optional<Run> best;
  int best_restart = 0;
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::MatrixXd init = (r == 0 && config.init == EmInit::kUniform)
                               ? Eigen::MatrixXd::Constant(m, n, 1.0 / static_cast<double>(m))
                               : random_cpt(m, n, rng);
    Run run = run_em(std::move(init), causes, effects, config);
    if (!best || run.trace.back() > best->trace.back()) {
      best = std::move(run);
      best_restart = r;
    }
  }

  EmResult result{make_cpt(observations, std::move(best->cpt)), best->iterations,
                  best->trace.back(), best->converged, std::move(best->trace), best_restart};
  if (!result.converged) throw EmNonConvergence(std::move(result));
  return result;
}

}  // namespace cptgen
