#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace symfield {

enum class Algorithm { riemannian_sgd, riemannian_adagrad };
enum class LossKind { mean_absolute, mean_squared };

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::riemannian_adagrad;
  LossKind loss = LossKind::mean_absolute;
  double learning_rate = 0.01;
  int epochs = 5000;
  std::uint64_t seed = 0;
  double adagrad_epsilon = 1e-10;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

std::string to_string(Algorithm a);
std::string to_string(LossKind l);
Algorithm parse_algorithm(const std::string& text);
LossKind parse_loss(const std::string& text);

struct OptimizationTrace {
  std::vector<double> loss;  ///< loss at the start of each epoch
  double final_loss = 0.0;   ///< loss at the returned point
};

struct OptimizationResult {
  Eigen::MatrixXd point;  ///< p x q with orthonormal columns
  OptimizationTrace trace;
};

/// G - W sym(W^T G).
Eigen::MatrixXd tangent_project(const Eigen::MatrixXd& W, const Eigen::MatrixXd& G);

/// Q factor of thin QR of W + T with positive R diagonal.
/// Throws NumericalError("retraction-singular") when W + T is rank deficient.
Eigen::MatrixXd retract(const Eigen::MatrixXd& W, const Eigen::MatrixXd& T);

/// Seeded Gaussian p x q matrix, orthonormalized.
Eigen::MatrixXd random_orthonormal(Eigen::Index p, Eigen::Index q, std::uint64_t seed);

/// Flips each column so its largest-magnitude entry is positive.
void canonicalize_signs(Eigen::MatrixXd& W);

/// Mean loss over all entries of a residual matrix.
double residual_loss(const Eigen::MatrixXd& residual, LossKind loss);

/// Objective on the Stiefel manifold: returns the loss at W and writes the Euclidean gradient.
using StiefelObjective = std::function<double(const Eigen::MatrixXd& W, Eigen::MatrixXd& gradient)>;

/// Generic first-order loop (SGD or Adagrad, then project and retract). Returns the best
/// iterate seen; trace.final_loss is objective(point). No sign canonicalization.
OptimizationResult minimize_objective(const StiefelObjective& objective, Eigen::MatrixXd W0,
                                      const OptimizerConfig& config);

/// Minimizes loss(A W, 0) over W with q orthonormal columns.
OptimizationResult minimize(const Eigen::MatrixXd& A, int q, const OptimizerConfig& config,
                            const std::optional<Eigen::MatrixXd>& W0 = std::nullopt);

/// Least squares A w ~ b via normal equations; falls back to a ridge-regularized
/// eigen solve (minimum-norm limit) when A^T A is singular.
Eigen::VectorXd minimize_affine_target(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace symfield
