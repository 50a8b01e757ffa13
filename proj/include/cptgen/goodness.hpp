#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "cptgen/observations.hpp"
#include "cptgen/probability.hpp"

namespace cptgen {

/// Half the L1 distance between an observed and a predicted effect vector.
double effect_shift_error(const ProbVector& z, const ProbVector& z_hat);

struct StateErrors {
  std::vector<double> per_state;  // s_j
  double mean = 0.0;              // s-bar
};

StateErrors state_errors(const Eigen::MatrixXd& z_test, const Eigen::MatrixXd& z_hat);

struct DiagnosticGoodness {
  double goodness = 0.0;
  double error = 1.0;
};

/// Rows agree when both have a unique maximum in the same state.
DiagnosticGoodness diagnostic_goodness(const Eigen::MatrixXd& z_test, const Eigen::MatrixXd& z_hat);

double cpt_shift_error(const Cpt& c, const Cpt& c_hat);

/// Column-weighted relative entropy. Returns +infinity when c > 0 meets
/// c_hat == 0 in a column with positive weight.
double cpt_kl_divergence(const Cpt& c, const Cpt& c_hat, const ProbVector& weights);

double cpt_euclidean(const Cpt& c, const Cpt& c_hat, const ProbVector& weights);

struct GoodnessReport {
  std::vector<double> per_observation_errors;
  double mean_absolute_error = 0.0;
  std::vector<double> state_errors;
  double total_average_shift_error = 0.0;
  double diagnostic_goodness = 0.0;
  double diagnostic_error = 1.0;
  std::size_t observation_count = 0;

  std::vector<std::string> effect_labels;
  Eigen::MatrixXd observed;   // k x m test effects
  Eigen::MatrixXd predicted;  // k x m effects predicted by the CPT
};

/// Predicts every test row through the CPT and scores the predictions.
GoodnessReport evaluate_cpt(const Cpt& cpt, const ObservationSet& test);

}  // namespace cptgen
