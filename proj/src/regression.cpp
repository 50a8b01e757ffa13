#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cptgen/generation.hpp"

namespace cptgen {

CptBasis cpt_basis_least_squares(const ObservationSet& observations, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw ValidationError(fmt::format("ridge must be a finite value >= 0, got {}", ridge));
  }
  const Eigen::MatrixXd x = observations.combined_causes();
  const Eigen::MatrixXd& z = observations.effect_block();
  const Eigen::Index n = x.cols();

  if (ridge == 0.0) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < n) {
      throw SingularMatrixError(fmt::format(
          "combined cause matrix has rank {} < {} columns; X'X is singular (use a ridge > 0)",
          qr.rank(), n));
    }
  }

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += ridge;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("X'X is not positive definite");
  }
  const Eigen::MatrixXd b = llt.solve(x.transpose() * z);  // n x m
  if (!b.allFinite()) throw SingularMatrixError("least-squares solution is not finite");

  return {observations.effect().states, observations.combined_labels(), b.transpose(),
          observations.parents()};
}

const char* to_string(ColumnRepair repair) noexcept {
  switch (repair) {
    case ColumnRepair::kNone: return "none";
    case ColumnRepair::kClamped: return "clamped";
    case ColumnRepair::kShifted: return "shifted";
    case ColumnRepair::kUniform: return "uniform";
    case ColumnRepair::kSurgeFallback: return "surge-fallback";
  }
  return "unknown";
}

namespace {

void set_uniform(Eigen::Ref<Eigen::VectorXd> col) {
  col.setConstant(1.0 / static_cast<double>(col.size()));
}

// Divides by the sum and clips ulp-level overshoot so the Cpt invariants hold.
void normalise(Eigen::Ref<Eigen::VectorXd> col) {
  col /= col.sum();
  for (double& v : col) v = std::clamp(v, 0.0, 1.0);
}

ColumnRepair surge_column(Eigen::Ref<Eigen::VectorXd> col) {
  ColumnRepair repair = ColumnRepair::kNone;
  const double lowest = col.minCoeff();
  if (lowest < 0.0) {
    col.array() -= lowest;
    repair = ColumnRepair::kShifted;
  }
  if (!(col.sum() > 0.0)) {
    set_uniform(col);
    return ColumnRepair::kUniform;
  }
  normalise(col);
  return repair;
}

ColumnRepair limit_column(Eigen::Ref<Eigen::VectorXd> col) {
  if ((col.array() < 0.0).all()) {
    const ColumnRepair shifted = surge_column(col);
    return shifted == ColumnRepair::kUniform ? shifted : ColumnRepair::kSurgeFallback;
  }
  ColumnRepair repair = ColumnRepair::kNone;
  for (double& v : col) {
    const double c = std::clamp(v, 0.0, 1.0);
    if (c != v) repair = ColumnRepair::kClamped;
    v = c;
  }
  if (!(col.sum() > 0.0)) {
    set_uniform(col);
    return ColumnRepair::kUniform;
  }
  normalise(col);
  return repair;
}

template <typename ColumnFix>
RepairedCpt repair(const CptBasis& basis, ColumnFix fix) {
  if (!basis.entries.allFinite()) throw ValidationError("CPT basis has non-finite entries");
  Eigen::MatrixXd entries = basis.entries;
  std::vector<ColumnRepair> columns;
  for (Eigen::Index j = 0; j < entries.cols(); ++j) {
    Eigen::VectorXd col = entries.col(j);
    columns.push_back(fix(col));
    entries.col(j) = col;
  }
  if (basis.parents.empty()) {
    return {Cpt(basis.effect_labels, basis.cause_labels, std::move(entries)), std::move(columns)};
  }
  return {Cpt(basis.effect_labels, basis.parents, std::move(entries)), std::move(columns)};
}

}  // namespace

RepairedCpt boundary_limitation(const CptBasis& basis) {
  return repair(basis, [](Eigen::Ref<Eigen::VectorXd> c) { return limit_column(c); });
}

RepairedCpt potential_surge(const CptBasis& basis) {
  return repair(basis, [](Eigen::Ref<Eigen::VectorXd> c) { return surge_column(c); });
}

}  // namespace cptgen
