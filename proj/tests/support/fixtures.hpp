#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cptgen/observations.hpp"
#include "cptgen/probability.hpp"

namespace cptgen::fixtures {

// Reference 5x9 CPTs for D given (E, R), in percent. Rows d1..d5, columns e1r1..e3r3.
inline constexpr double kSurveyCpt[5][9] = {
    {11.18, 1.62, 22.58, 4.61, 14.77, 13.09, 16.35, 0.00, 9.30},
    {34.07, 0.00, 53.50, 1.91, 28.70, 18.59, 5.37, 10.86, 7.99},
    {44.70, 7.86, 8.62, 76.22, 41.67, 53.02, 75.84, 9.43, 55.73},
    {0.00, 71.72, 1.73, 8.73, 6.81, 11.84, 0.00, 47.95, 25.47},
    {10.06, 18.80, 13.57, 8.53, 8.05, 3.46, 2.45, 31.76, 1.50},
};

inline constexpr double kElicitedCpt[5][9] = {
    {13.9, 0.1, 23.3, 4.5, 23.0, 10.6, 14.1, 1.8, 8.9},
    {28.4, 0.4, 50.6, 7.6, 22.0, 19.5, 8.2, 5.2, 9.4},
    {47.6, 0.8, 10.9, 70.7, 40.4, 55.5, 70.2, 10.6, 51.2},
    {2.3, 96.9, 4.5, 7.8, 7.3, 10.4, 5.9, 28.0, 26.6},
    {7.9, 1.8, 10.7, 9.4, 7.4, 4.0, 1.7, 54.4, 3.9},
};

inline std::vector<NodeSpec> er_parents() {
  return {{"E", {"e1", "e2", "e3"}}, {"R", {"r1", "r2", "r3"}}};
}

inline NodeSpec d_node() { return {"D", {"d1", "d2", "d3", "d4", "d5"}}; }

// The percentages do not all add to exactly 100; each column is
// divided by its own sum.
inline Cpt table_cpt(const double (&t)[5][9]) {
  Eigen::MatrixXd m(5, 9);
  for (int j = 0; j < 9; ++j) {
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) sum += t[i][j];
    for (int i = 0; i < 5; ++i) m(i, j) = t[i][j] / sum;
  }
  return Cpt(d_node().states, er_parents(), m);
}

inline Cpt survey_cpt() { return table_cpt(kSurveyCpt); }
inline Cpt elicited_cpt() { return table_cpt(kElicitedCpt); }

// Worked goodness example: three observed and three predicted binary
// effect rows. The second prediction is a tie.
inline Eigen::MatrixXd three_pair_observed() {
  Eigen::MatrixXd z(3, 2);
  z << 0.3, 0.7, 0.4, 0.6, 0.9, 0.1;
  return z;
}

inline Eigen::MatrixXd three_pair_predicted() {
  Eigen::MatrixXd z(3, 2);
  z << 0.2, 0.8, 0.5, 0.5, 0.7, 0.3;
  return z;
}

// Two 4x3 CPTs that permute the same hard columns.
inline Cpt permuted_c() {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 3);
  c(0, 0) = c(1, 1) = c(2, 2) = 1.0;
  return Cpt({"z1", "z2", "z3", "z4"}, std::vector<std::string>{"x1", "x2", "x3"}, c);
}

inline Cpt permuted_c_hat() {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 3);
  c(1, 0) = c(2, 1) = c(0, 2) = 1.0;
  return Cpt({"z1", "z2", "z3", "z4"}, std::vector<std::string>{"x1", "x2", "x3"}, c);
}

/// Every hard-evidence (E, R) pair `repeats` times, effects equal to the
/// matching column of `truth`.
inline ObservationSet canonical_set(const Cpt& truth, int repeats) {
  const int k = 9 * repeats;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(k, 3);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(k, 3);
  Eigen::MatrixXd z(k, static_cast<Eigen::Index>(truth.effect_count()));
  int row = 0;
  for (int rep = 0; rep < repeats; ++rep) {
    for (int j = 0; j < 9; ++j, ++row) {
      e(row, j / 3) = 1.0;
      r(row, j % 3) = 1.0;
      z.row(row) = truth.entries().col(j).transpose();
    }
  }
  return ObservationSet(er_parents(), {e, r}, {"D", truth.effect_labels()}, z);
}

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = gamma(rng) + 1e-300;
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

inline ProbVector random_prob(std::mt19937_64& rng, std::size_t n, const std::string& prefix = "s") {
  return make_prob_vector(numbered_labels(prefix, n), random_simplex(rng, n));
}

inline Eigen::MatrixXd random_stochastic(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  Eigen::MatrixXd c(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    const ProbVector col = random_prob(rng, m);
    for (std::size_t i = 0; i < m; ++i) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return c;
}

inline Cpt random_cpt(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  return Cpt(numbered_labels("z", m), numbered_labels("x", n), random_stochastic(rng, m, n));
}

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(CPTGEN_TEST_DATA) / name;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cptgen_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cptgen::fixtures
