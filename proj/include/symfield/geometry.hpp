#pragma once

#include <vector>

#include <Eigen/Dense>

#include "symfield/model_fit.hpp"

namespace symfield {

/// Theta: R^m -> R^n, one regression model per output coordinate.
struct SmoothMapModel {
  std::vector<ScalarFunctionModel> components;

  int input_dimension() const;
  int output_dimension() const { return static_cast<int>(components.size()); }
  Eigen::VectorXd eval(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  /// n x m.
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& u) const;
};

struct MapFit {
  SmoothMapModel map;
  Eigen::VectorXd rms_residuals;
  bool ridge_fallback = false;
};

MapFit fit_map(const Eigen::MatrixXd& source, const Eigen::MatrixXd& image, const FeatureBasis& basis);

/// J^T J at u, symmetric by construction.
Eigen::MatrixXd pullback_metric(const SmoothMapModel& map, const Eigen::Ref<const Eigen::VectorXd>& u);

}  // namespace symfield
