#include "symfield/manifold_opt.hpp"

#include <cmath>
#include <limits>

#include "symfield/errors.hpp"
#include "symfield/random.hpp"

namespace symfield {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("invalid-config", "learning_rate must be positive");
  if (epochs < 1) throw ValidationError("invalid-config", "epochs must be >= 1");
  if (!(adagrad_epsilon > 0.0)) throw ValidationError("invalid-config", "adagrad_epsilon must be positive");
}

std::string to_string(Algorithm a) {
  return a == Algorithm::riemannian_sgd ? "riemannian-sgd" : "riemannian-adagrad";
}

std::string to_string(LossKind l) { return l == LossKind::mean_absolute ? "mean-absolute" : "mean-squared"; }

Algorithm parse_algorithm(const std::string& text) {
  if (text == "riemannian-sgd") return Algorithm::riemannian_sgd;
  if (text == "riemannian-adagrad") return Algorithm::riemannian_adagrad;
  throw ValidationError("invalid-config", "unknown algorithm '" + text + "'");
}

LossKind parse_loss(const std::string& text) {
  if (text == "mean-absolute") return LossKind::mean_absolute;
  if (text == "mean-squared") return LossKind::mean_squared;
  throw ValidationError("invalid-config", "unknown loss '" + text + "'");
}

Eigen::MatrixXd tangent_project(const Eigen::MatrixXd& W, const Eigen::MatrixXd& G) {
  if (W.rows() != G.rows() || W.cols() != G.cols())
    throw ValidationError("dimension-mismatch", "tangent_project shapes differ");
  const Eigen::MatrixXd WtG = W.transpose() * G;
  return G - W * (0.5 * (WtG + WtG.transpose()));
}

Eigen::MatrixXd retract(const Eigen::MatrixXd& W, const Eigen::MatrixXd& T) {
  if (W.rows() != T.rows() || W.cols() != T.cols())
    throw ValidationError("dimension-mismatch", "retract shapes differ");
  const Eigen::Index p = W.rows(), q = W.cols();
  if (q > p) throw ValidationError("dimension-mismatch", "more columns than rows");
  const Eigen::MatrixXd M = W + T;
  if (!M.allFinite()) throw NumericalError("retraction-singular", "non-finite retraction input");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(p, q);
  const auto& R = qr.matrixQR();
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < q; ++j) {
    const double d = R(j, j);
    if (std::abs(d) <= 1e-12 * scale) throw NumericalError("retraction-singular", "W + T is rank deficient");
    if (d < 0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

Eigen::MatrixXd random_orthonormal(Eigen::Index p, Eigen::Index q, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd G = normal_matrix(rng, p, q);
  return retract(G, Eigen::MatrixXd::Zero(p, q));
}

void canonicalize_signs(Eigen::MatrixXd& W) {
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    Eigen::Index arg = 0;
    W.col(j).cwiseAbs().maxCoeff(&arg);
    if (W(arg, j) < 0) W.col(j) = -W.col(j);
  }
}

double residual_loss(const Eigen::MatrixXd& residual, LossKind loss) {
  if (residual.size() == 0) return 0.0;
  const double count = static_cast<double>(residual.size());
  if (loss == LossKind::mean_absolute) return residual.cwiseAbs().sum() / count;
  return residual.squaredNorm() / count;
}

OptimizationResult minimize_objective(const StiefelObjective& objective, Eigen::MatrixXd W,
                                      const OptimizerConfig& config) {
  config.validate();
  OptimizationResult out;
  out.trace.loss.reserve(config.epochs);
  Eigen::MatrixXd G(W.rows(), W.cols());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(W.rows(), W.cols());
  Eigen::MatrixXd best = W;
  double best_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = objective(W, G);
    if (!std::isfinite(loss) || !G.allFinite())
      throw NumericalError("divergence", "non-finite loss at epoch " + std::to_string(epoch), epoch);
    out.trace.loss.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = W;
    }
    if (config.algorithm == Algorithm::riemannian_adagrad) {
      acc.array() += G.array().square();
      G.array() /= (acc.array() + config.adagrad_epsilon).sqrt();
    }
    W = retract(W, tangent_project(W, -config.learning_rate * G));
  }
  const double last = objective(W, G);
  if (std::isfinite(last) && last < best_loss) {
    best_loss = last;
    best = W;
  }
  out.point = std::move(best);
  out.trace.final_loss = best_loss;
  return out;
}

OptimizationResult minimize(const Eigen::MatrixXd& A, int q, const OptimizerConfig& config,
                            const std::optional<Eigen::MatrixXd>& W0) {
  config.validate();
  const Eigen::Index p = A.cols();
  if (q < 1 || q > p) throw ValidationError("invalid-argument", "minimize needs 1 <= q <= columns of A");
  if (!A.allFinite()) throw ValidationError("invalid-argument", "A has non-finite entries");
  Eigen::MatrixXd start;
  if (W0) {
    if (W0->rows() != p || W0->cols() != q) throw ValidationError("dimension-mismatch", "W0 has the wrong shape");
    start = retract(*W0, Eigen::MatrixXd::Zero(p, q));
  } else {
    start = random_orthonormal(p, q, config.seed);
  }

  const double count = static_cast<double>(A.rows()) * q;
  StiefelObjective objective;
  Eigen::MatrixXd gram;
  if (config.loss == LossKind::mean_squared && A.rows() > p) {
    // Squared loss only needs A^T A, which is much smaller than A for tall data.
    gram = A.transpose() * A;
    objective = [&gram, count](const Eigen::MatrixXd& W, Eigen::MatrixXd& G) {
      G.noalias() = gram * W;
      const double loss = std::max(0.0, (W.array() * G.array()).sum() / count);
      G *= 2.0 / count;
      return loss;
    };
  } else if (config.loss == LossKind::mean_squared) {
    objective = [&A, count](const Eigen::MatrixXd& W, Eigen::MatrixXd& G) {
      const Eigen::MatrixXd R = A * W;
      G.noalias() = A.transpose() * R;
      G *= 2.0 / count;
      return R.squaredNorm() / count;
    };
  } else {
    objective = [&A, count](const Eigen::MatrixXd& W, Eigen::MatrixXd& G) {
      const Eigen::MatrixXd R = A * W;
      // Subgradient 0 at exact zeros.
      const Eigen::MatrixXd S = R.unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
      G.noalias() = A.transpose() * S;
      G /= count;
      return R.cwiseAbs().sum() / count;
    };
  }

  OptimizationResult result = minimize_objective(objective, std::move(start), config);
  canonicalize_signs(result.point);
  result.trace.final_loss = residual_loss(A * result.point, config.loss);
  return result;
}

Eigen::VectorXd minimize_affine_target(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != b.size()) throw ValidationError("dimension-mismatch", "A rows differ from b length");
  if (!A.allFinite() || !b.allFinite()) throw ValidationError("invalid-argument", "non-finite least-squares input");
  const Eigen::MatrixXd N = A.transpose() * A;
  const Eigen::VectorXd rhs = A.transpose() * b;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(N);
  const double top = N.diagonal().cwiseAbs().maxCoeff();
  bool ok = ldlt.info() == Eigen::Success && top > 0.0;
  if (ok) {
    const auto d = ldlt.vectorD();
    ok = d.minCoeff() > 1e-12 * top;
  }
  if (ok) return ldlt.solve(rhs);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(N);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double lmax = std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
  if (lmax == 0.0) return Eigen::VectorXd::Zero(A.cols());
  const double ridge = 1e-12 * lmax;
  const Eigen::VectorXd c = eig.eigenvectors().transpose() * rhs;
  Eigen::VectorXd y(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    // Directions at the noise floor carry no information; drop them for the min-norm answer.
    y[i] = lambda[i] > ridge ? c[i] / (lambda[i] + ridge) : 0.0;
  }
  return eig.eigenvectors() * y;
}

}  // namespace symfield
