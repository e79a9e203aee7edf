#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symfield/kde.hpp"
#include "symfield/manifold_opt.hpp"
#include "symfield/model_fit.hpp"

namespace symfield {

/// Scalar expression over a parameter vector, with forward-mode derivatives.
class Expression {
 public:
  enum class Op { constant, parameter, add, sub, mul, div, neg, sin, cos, sqrt };

  static Expression constant(double v);
  static Expression parameter(int index);
  static Expression unary(Op op, Expression a);
  static Expression binary(Op op, Expression a, Expression b);

  Op op() const;
  double constant_value() const;
  int parameter_index() const;
  const std::vector<Expression>& args() const;

  /// Value at p; writes d/dp into grad (size p.size()).
  double eval(const Eigen::VectorXd& p, Eigen::VectorXd& grad) const;
  double eval(const Eigen::VectorXd& p) const;
  /// Largest parameter index used plus one.
  int parameter_count() const;

 private:
  struct Node;
  std::shared_ptr<const Node> node_;
};

enum class FamilyKind { reflection_2d, rotation_2d, user_linear };
enum class ParameterConstraint { unit_norm, interval };

std::string to_string(FamilyKind k);

/// x -> S(w) x for a matrix-valued function of parameters w.
struct ParametricFamily {
  FamilyKind kind = FamilyKind::rotation_2d;
  ParameterConstraint constraint = ParameterConstraint::interval;
  double lo = 0.0, hi = 0.0;  ///< interval bounds (interval constraint)
  int dimension = 2;
  int parameter_count = 1;
  std::vector<Expression> entries;  ///< user-linear: dimension^2 entries, row-major

  /// Reflection about the line a x + b y = 0, parameters (a, b) on the unit circle.
  static ParametricFamily reflection_2d();
  /// [[cos t, sin t], [-sin t, cos t]] with t in [lo, hi].
  static ParametricFamily rotation_2d(double lo, double hi);
  static ParametricFamily user_linear(int dimension, std::vector<Expression> entries, ParameterConstraint constraint,
                                      double lo = 0.0, double hi = 0.0);

  Eigen::MatrixXd matrix(const Eigen::VectorXd& w) const;
  /// dS/dw_k for each parameter.
  std::vector<Eigen::MatrixXd> matrix_derivatives(const Eigen::VectorXd& w) const;
};

struct DiscreteFitResult {
  Eigen::VectorXd parameters;
  double final_loss = 0.0;
  bool excluded_region_active = false;  ///< the lower interval bound is binding
  long evaluations = 0;                 ///< objective evaluations (density rotation)
  OptimizationTrace trace;
};

/// Residual f(S(x; w)) - f(x) for every row.
Eigen::VectorXd transformation_residuals(const ScalarFunctionModel& f, const Eigen::MatrixXd& data,
                                         const ParametricFamily& family, const Eigen::VectorXd& w);

DiscreteFitResult fit_discrete(const ScalarFunctionModel& f, const Eigen::MatrixXd& data, const ParametricFamily& family,
                               const OptimizerConfig& config);

struct DensityRotationOptions {
  int grid = 64;
  /// A refined minimum ties with the best one when its excess loss is at most this
  /// fraction of (median grid loss - best loss). The smallest tied angle wins.
  double tie_tolerance = 0.5;
  int threads = 1;
};

/// Mean |p(S(t) x_i) - p(x_i)| for one angle.
double density_rotation_loss(const BandedKde& density, const Eigen::MatrixXd& data, const Eigen::VectorXd& base,
                             double theta, int threads = 1);

/// Grid search plus bounded Brent refinement over t in (theta_min, 2 pi - theta_min).
DiscreteFitResult fit_density_rotation(const KdeModel& kde, const Eigen::MatrixXd& data, double theta_min,
                                       const DensityRotationOptions& options = {});

/// [[cos t, sin t, 0], [-sin t, cos t, 0], [0, 0, 1]].
Eigen::Matrix3d rotation_generator(double angle);

/// |<vec G(angle), vec R>| / (|G| |R|). Throws ValidationError for a zero reference.
double similarity_matrix(double angle, const Eigen::MatrixXd& reference);

}  // namespace symfield
