#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cptgen/generation.hpp"

namespace cptgen {

namespace {

constexpr int kMaxHalvings = 30;

// Log-probabilities of all m states for one case; state m is the reference
// with linear predictor 0.
Eigen::VectorXd log_probs(const Eigen::MatrixXd& coefficients,
                          const Eigen::Ref<const Eigen::VectorXd>& cause) {
  const Eigen::Index free = coefficients.rows();
  Eigen::VectorXd eta(free + 1);
  for (Eigen::Index k = 0; k < free; ++k) {
    eta(k) = coefficients(k, 0) + coefficients.row(k).tail(cause.size()).dot(cause);
  }
  eta(free) = 0.0;
  const double top = eta.maxCoeff();
  const double log_norm = top + std::log((eta.array() - top).exp().sum());
  return eta.array() - log_norm;
}

double penalty(const Eigen::MatrixXd& coefficients, double reg) {
  const Eigen::Index slopes = coefficients.cols() - 1;
  return 0.5 * reg * coefficients.rightCols(slopes).squaredNorm();
}

void check_shapes(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& causes,
                  const Eigen::MatrixXd& effects) {
  if (causes.rows() != effects.rows() || coefficients.cols() != causes.cols() + 1 ||
      coefficients.rows() != effects.cols() - 1) {
    throw DimensionError("logit coefficient, cause and effect shapes disagree");
  }
}

}  // namespace

double logit_objective(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& causes,
                       const Eigen::MatrixXd& effects, double reg) {
  check_shapes(coefficients, causes, effects);
  double total = 0.0;
  for (Eigen::Index d = 0; d < causes.rows(); ++d) {
    const Eigen::VectorXd lp = log_probs(coefficients, causes.row(d).transpose());
    for (Eigen::Index i = 0; i < effects.cols(); ++i) {
      if (effects(d, i) != 0.0) total += effects(d, i) * lp(i);
    }
  }
  return total - penalty(coefficients, reg);
}

Eigen::MatrixXd logit_gradient(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& causes,
                               const Eigen::MatrixXd& effects, double reg) {
  check_shapes(coefficients, causes, effects);
  const Eigen::Index free = coefficients.rows();
  const Eigen::Index n = causes.cols();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(free, n + 1);
  for (Eigen::Index d = 0; d < causes.rows(); ++d) {
    const Eigen::VectorXd p = log_probs(coefficients, causes.row(d).transpose()).array().exp();
    const double weight = effects.row(d).sum();
    for (Eigen::Index k = 0; k < free; ++k) {
      const double residual = effects(d, k) - weight * p(k);
      grad(k, 0) += residual;
      grad.row(k).tail(n) += residual * causes.row(d);
    }
  }
  grad.rightCols(n) -= reg * coefficients.rightCols(n);
  return grad;
}

namespace {

// Negative Hessian of the penalised objective, parameters ordered
// state-major: index k * (n + 1) + a.
Eigen::MatrixXd negative_hessian(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& causes,
                                 const Eigen::MatrixXd& effects, double reg) {
  const Eigen::Index free = coefficients.rows();
  const Eigen::Index width = coefficients.cols();
  const Eigen::Index size = free * width;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(size, size);
  Eigen::VectorXd design(width);
  for (Eigen::Index d = 0; d < causes.rows(); ++d) {
    design(0) = 1.0;
    design.tail(width - 1) = causes.row(d).transpose();
    const Eigen::VectorXd p = log_probs(coefficients, design.tail(width - 1)).array().exp();
    const double weight = effects.row(d).sum();
    const Eigen::MatrixXd outer = design * design.transpose();
    for (Eigen::Index k = 0; k < free; ++k) {
      for (Eigen::Index l = 0; l < free; ++l) {
        const double w = weight * p(k) * ((k == l ? 1.0 : 0.0) - p(l));
        if (w != 0.0) h.block(k * width, l * width, width, width) += w * outer;
      }
    }
  }
  for (Eigen::Index k = 0; k < free; ++k) {
    for (Eigen::Index a = 1; a < width; ++a) h(k * width + a, k * width + a) += reg;
  }
  return h;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.size());
  for (Eigen::Index k = 0; k < m.rows(); ++k) out.segment(k * m.cols(), m.cols()) = m.row(k);
  return out;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index k = 0; k < rows; ++k) out.row(k) = v.segment(k * cols, cols);
  return out;
}

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Eigen::VectorXd step = ldlt.solve(g);
    if (step.allFinite()) return step;
  }
  // Saturated fits leave near-zero curvature; add a small jitter.
  Eigen::MatrixXd jittered = h;
  jittered.diagonal().array() += 1e-10 * std::max(1.0, h.diagonal().maxCoeff());
  return jittered.ldlt().solve(g);
}

}  // namespace

LogitModel fit_multinomial_logit(const ObservationSet& observations, const LogitOptions& options) {
  if (!(options.reg >= 0.0)) throw ValidationError("logit reg must be >= 0");
  if (options.max_iter < 1) throw ValidationError("logit max_iter must be >= 1");
  if (!(options.tol > 0.0)) throw ValidationError("logit tol must be > 0");
  const std::size_t m = observations.effect().arity();
  if (m < 2) throw DimensionError("a logit model needs at least two effect states");

  const Eigen::MatrixXd causes = observations.combined_causes();
  const Eigen::MatrixXd& effects = observations.effect_block();
  const auto free = static_cast<Eigen::Index>(m - 1);
  const Eigen::Index width = causes.cols() + 1;

  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(free, width);
  double value = logit_objective(coef, causes, effects, options.reg);
  double grad_norm = 0.0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::MatrixXd grad = logit_gradient(coef, causes, effects, options.reg);
    grad_norm = grad.cwiseAbs().maxCoeff();
    if (grad_norm <= options.tol) return {coef, observations.effect().states};

    const Eigen::VectorXd direction = newton_direction(
        negative_hessian(coef, causes, effects, options.reg), flatten(grad));
    const Eigen::MatrixXd step = unflatten(direction, free, width);
    const double slack = 1e-12 * (1.0 + std::abs(value));
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, t *= 0.5) {
      const Eigen::MatrixXd trial = coef + t * step;
      const double trial_value = logit_objective(trial, causes, effects, options.reg);
      if (std::isfinite(trial_value) && trial_value >= value - slack) {
        coef = trial;
        value = trial_value;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NonConvergenceError(fmt::format(
          "logit Newton step could not improve the likelihood after {} halvings "
          "(gradient norm {:.3g})",
          kMaxHalvings, grad_norm));
    }
  }
  grad_norm = logit_gradient(coef, causes, effects, options.reg).cwiseAbs().maxCoeff();
  if (grad_norm <= options.tol) return {coef, observations.effect().states};
  throw NonConvergenceError(fmt::format(
      "logit fit did not reach gradient norm {:.3g} within {} Newton steps (at {:.3g})",
      options.tol, options.max_iter, grad_norm));
}

ProbVector logit_predict(const LogitModel& model, const ProbVector& cause) {
  if (cause.size() != model.cause_count()) {
    throw DimensionError(fmt::format("cause vector has {} states, model expects {}", cause.size(),
                                     model.cause_count()));
  }
  const Eigen::VectorXd lp = log_probs(model.coefficients, cause.as_eigen());
  std::vector<double> values(static_cast<std::size_t>(lp.size()));
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    values[static_cast<std::size_t>(i)] = std::min(std::exp(lp(i)), 1.0);
  }
  return ProbVector::from_normalized(model.effect_labels, std::move(values));
}

Cpt extract_cpt(const Predictor& predictor, std::vector<std::string> cause_labels,
                std::vector<NodeSpec> parents) {
  const std::size_t n = cause_labels.size();
  if (n == 0) throw DimensionError("extraction needs at least one cause state");
  Eigen::MatrixXd entries;
  std::vector<std::string> effect_labels;
  for (std::size_t i = 0; i < n; ++i) {
    ProbVector column = [&] {
      try {
        return predictor(hard_evidence(cause_labels, i));
      } catch (const ValidationError& e) {
        throw PredictorRangeError(
            fmt::format("predictor output for cause '{}' is invalid: {}", cause_labels[i], e.what()));
      }
    }();
    // Re-check: predictors may build vectors from arbitrary arithmetic.
    try {
      column = ProbVector::from_normalized(column.labels(),
                                           {column.values().begin(), column.values().end()});
    } catch (const ValidationError& e) {
      throw PredictorRangeError(
          fmt::format("predictor output for cause '{}' is invalid: {}", cause_labels[i], e.what()));
    }
    if (i == 0) {
      effect_labels = column.labels();
      entries.resize(static_cast<Eigen::Index>(column.size()), static_cast<Eigen::Index>(n));
    } else if (column.labels() != effect_labels) {
      throw PredictorRangeError(fmt::format("predictor output for cause '{}' changes the effect states",
                                            cause_labels[i]));
    }
    for (std::size_t r = 0; r < column.size(); ++r) {
      entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = column[r];
    }
  }
  if (!parents.empty()) return Cpt(std::move(effect_labels), std::move(parents), std::move(entries));
  return Cpt(std::move(effect_labels), std::move(cause_labels), std::move(entries));
}

}  // namespace cptgen
