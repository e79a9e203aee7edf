#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "symfield/features.hpp"
#include "symfield/manifold_opt.hpp"

namespace symfield {

/// f(x) = coefficients . evaluate(basis, x)
struct ScalarFunctionModel {
  FeatureBasis basis;
  Eigen::VectorXd coefficients;

  int dimension() const { return basis.dimension(); }
  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd values(const Eigen::MatrixXd& data) const;
  /// Row i is grad f(data.row(i)).
  Eigen::MatrixXd gradients(const Eigen::MatrixXd& data) const;
  /// Nonzero (coefficient, atom) pairs.
  std::vector<FunctionTerm> terms() const;
};

struct RegressionFit {
  ScalarFunctionModel model;
  double rms_residual = 0.0;
  bool ridge_fallback = false;  ///< feature matrix was rank deficient
};

RegressionFit fit_regression(const Eigen::MatrixXd& data, const Eigen::VectorXd& targets, const FeatureBasis& basis);

/// Components f_j(x) = W.col(j) . evaluate(basis, x).
struct LevelSetModel {
  FeatureBasis basis;
  Eigen::MatrixXd W;  ///< m x k, orthonormal columns

  int dimension() const { return basis.dimension(); }
  int components() const { return static_cast<int>(W.cols()); }
  ScalarFunctionModel component(int j) const;
  Eigen::VectorXd values(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// k x n.
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct LevelSetFit {
  LevelSetModel model;
  double final_loss = 0.0;
  OptimizationTrace trace;
};

/// Minimizes loss(B W, 0) with B the feature matrix. When the basis holds artificial
/// product atoms, the known functions and their products are held fixed: the search runs
/// in their orthogonal complement and the returned model uses the plain atoms only.
LevelSetFit fit_level_set(const Eigen::MatrixXd& data, const FeatureBasis& basis, int k, const OptimizerConfig& config,
                          const std::optional<Eigen::MatrixXd>& W0 = std::nullopt);

struct ElbowPoint {
  int component_count = 0;
  double final_loss = 0.0;
};

struct ElbowTrace {
  std::vector<ElbowPoint> points;
  int selected = 0;
  bool no_elbow = false;
  std::vector<LevelSetModel> models;  ///< models[k-1] was fitted with k components
};

struct ElbowChoice {
  int selected = 0;
  bool no_elbow = false;
};

/// Pure selection rule over losses for k = 1..K. The floor is 1e-12 times the largest loss.
ElbowChoice select_elbow(const std::vector<double>& losses, double elbow_ratio = 10.0);

ElbowTrace select_components_elbow(const Eigen::MatrixXd& data, const FeatureBasis& basis, int k_max,
                                   const OptimizerConfig& config, double elbow_ratio = 10.0);

/// Affine subspace {origin + basis * y}.
struct AffineFrame {
  Eigen::VectorXd origin;  ///< n
  Eigen::MatrixXd basis;   ///< n x d, orthonormal columns

  Eigen::MatrixXd to_reduced(const Eigen::MatrixXd& data) const;
  Eigen::MatrixXd to_ambient(const Eigen::MatrixXd& reduced) const;
};

struct AffineProjection {
  Eigen::MatrixXd reduced;  ///< N x d
  AffineFrame frame;
};

/// Projects data orthogonally onto {x : W^T phi(x) = 0} for an affine model.
/// Throws NumericalError("empty-levelset") when the affine system has no solution.
AffineProjection project_onto_affine(const Eigen::MatrixXd& data, const LevelSetModel& model);

/// Appends artificial atoms h * f for each known f and each monomial h with
/// 1 <= deg h <= degree - deg f.
FeatureBasis extend_degenerate_columns(const FeatureBasis& basis, const std::vector<ScalarFunctionModel>& known,
                                       int degree);

}  // namespace symfield
