#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cptgen/errors.hpp"
#include "cptgen/observations.hpp"
#include "cptgen/probability.hpp"

namespace cptgen {

// ---------------------------------------------------------------------------
// Least-squares basis and probability repair
// ---------------------------------------------------------------------------

/// Unconstrained m x n least-squares estimate of a CPT. Entries may fall
/// outside [0,1] and columns need not sum to one.
struct CptBasis {
  std::vector<std::string> effect_labels;
  std::vector<std::string> cause_labels;
  Eigen::MatrixXd entries;
  std::vector<NodeSpec> parents;
};

/// Solves the normal equations (X'X + ridge I) B = X'Z on the combined
/// parent rows X (k x n) and effect rows Z (k x m); returns B transposed.
/// Throws SingularMatrixError when X lacks full column rank and ridge == 0.
CptBasis cpt_basis_least_squares(const ObservationSet& observations, double ridge = 0.0);

enum class ColumnRepair {
  kNone,           // already a probability vector, only renormalised
  kClamped,        // entries clamped to [0,1]
  kShifted,        // translated by the negative minimum
  kUniform,        // nothing left after clamping or shifting
  kSurgeFallback,  // all entries negative: boundary limitation fell back to a shift
};

const char* to_string(ColumnRepair repair) noexcept;

struct RepairedCpt {
  Cpt cpt;
  std::vector<ColumnRepair> columns;
};

RepairedCpt boundary_limitation(const CptBasis& basis);
RepairedCpt potential_surge(const CptBasis& basis);

// ---------------------------------------------------------------------------
// Counting and EM
// ---------------------------------------------------------------------------

struct MleResult {
  Cpt cpt;
  std::vector<std::size_t> unobserved_columns;
  std::size_t rows_used = 0;
  std::size_t rows_skipped = 0;  // soft rows that did not round to hard evidence
};

/// Relative-frequency CPT from hard evidence. With `rounding`, soft rows
/// are rounded entry-wise to the nearest integer first.
MleResult mle_cpt(const ObservationSet& observations, bool rounding = false);

enum class EmInit { kUniform, kSeededRandom };

struct EmConfig {
  double epsilon = 1e-6;
  int max_iterations = 1000;
  EmInit init = EmInit::kUniform;
  std::uint64_t seed = 0;
  int restarts = 1;

  void validate() const;
};

struct EmResult {
  Cpt cpt;
  int iterations = 0;
  double final_loglik = 0.0;
  bool converged = false;
  std::vector<double> loglik_trace;  // entry 0 is the initial parameters
  int restart = 0;                   // which restart produced this result
};

/// Thrown when the iteration cap is hit; carries the best partial result.
class EmNonConvergence : public NonConvergenceError {
 public:
  explicit EmNonConvergence(EmResult partial);
  const EmResult& partial() const noexcept { return partial_; }

 private:
  EmResult partial_;
};

/// Log-likelihood sum_d sum_i z_di ln(sum_j x_dj c_ij) of effect rows Z
/// given combined cause rows X and CPT entries C.
double em_log_likelihood(const Eigen::MatrixXd& cpt, const Eigen::MatrixXd& causes,
                         const Eigen::MatrixXd& effects);

EmResult em_cpt(const ObservationSet& observations, const EmConfig& config = {});

// ---------------------------------------------------------------------------
// Multinomial logit and column extraction
// ---------------------------------------------------------------------------

/// Coefficients (m-1) x (n+1); row k is (intercept, slope_1, ..., slope_n)
/// for effect state k. The last effect state is the reference with zero
/// coefficients.
struct LogitModel {
  Eigen::MatrixXd coefficients;
  std::vector<std::string> effect_labels;

  std::size_t effect_count() const noexcept { return effect_labels.size(); }
  std::size_t cause_count() const noexcept {
    return static_cast<std::size_t>(coefficients.cols()) - 1;
  }
};

struct LogitOptions {
  double reg = 1e-8;  // ridge on slopes, intercepts unpenalised
  int max_iter = 100;
  double tol = 1e-8;  // on the infinity norm of the penalised gradient
};

/// Penalised soft-target log-likelihood and its gradient, laid out like the
/// coefficient matrix. Exposed for gradient checks.
double logit_objective(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& causes,
                       const Eigen::MatrixXd& effects, double reg);
Eigen::MatrixXd logit_gradient(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& causes,
                               const Eigen::MatrixXd& effects, double reg);

/// Newton ascent with step halving. Throws NonConvergenceError.
LogitModel fit_multinomial_logit(const ObservationSet& observations,
                                 const LogitOptions& options = {});

ProbVector logit_predict(const LogitModel& model, const ProbVector& cause);

using Predictor = std::function<ProbVector(const ProbVector&)>;

/// Column i is predictor(e_i) for the i-th hard-evidence cause vector.
/// Throws PredictorRangeError if an output is not a valid probability vector.
Cpt extract_cpt(const Predictor& predictor, std::vector<std::string> cause_labels,
                std::vector<NodeSpec> parents = {});

}  // namespace cptgen
