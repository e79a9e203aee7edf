#include "symfield/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "symfield/errors.hpp"
#include "symfield/random.hpp"

namespace symfield {

struct Expression::Node {
  Op op;
  double value = 0.0;
  int index = -1;
  std::vector<Expression> args;
};

Expression Expression::constant(double v) {
  Expression e;
  e.node_ = std::make_shared<const Node>(Node{Op::constant, v, -1, {}});
  return e;
}

Expression Expression::parameter(int index) {
  if (index < 0) throw ValidationError("invalid-expression", "negative parameter index");
  Expression e;
  e.node_ = std::make_shared<const Node>(Node{Op::parameter, 0.0, index, {}});
  return e;
}

Expression Expression::unary(Op op, Expression a) {
  if (op != Op::neg && op != Op::sin && op != Op::cos && op != Op::sqrt)
    throw ValidationError("invalid-expression", "not a unary operator");
  Expression e;
  e.node_ = std::make_shared<const Node>(Node{op, 0.0, -1, {std::move(a)}});
  return e;
}

Expression Expression::binary(Op op, Expression a, Expression b) {
  if (op != Op::add && op != Op::sub && op != Op::mul && op != Op::div)
    throw ValidationError("invalid-expression", "not a binary operator");
  Expression e;
  e.node_ = std::make_shared<const Node>(Node{op, 0.0, -1, {std::move(a), std::move(b)}});
  return e;
}

Expression::Op Expression::op() const { return node_->op; }
double Expression::constant_value() const { return node_->value; }
int Expression::parameter_index() const { return node_->index; }
const std::vector<Expression>& Expression::args() const { return node_->args; }

double Expression::eval(const Eigen::VectorXd& p, Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(p.size());
  const Node& n = *node_;
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::parameter:
      if (n.index >= p.size()) throw ValidationError("invalid-expression", "parameter index out of range");
      grad[n.index] = 1.0;
      return p[n.index];
    default: break;
  }
  Eigen::VectorXd ga, gb;
  const double a = n.args[0].eval(p, ga);
  switch (n.op) {
    case Op::neg: grad = -ga; return -a;
    case Op::sin: grad = std::cos(a) * ga; return std::sin(a);
    case Op::cos: grad = -std::sin(a) * ga; return std::cos(a);
    case Op::sqrt: {
      const double r = std::sqrt(a);
      grad = ga / (2.0 * r);
      return r;
    }
    default: break;
  }
  const double b = n.args[1].eval(p, gb);
  switch (n.op) {
    case Op::add: grad = ga + gb; return a + b;
    case Op::sub: grad = ga - gb; return a - b;
    case Op::mul: grad = b * ga + a * gb; return a * b;
    case Op::div: grad = (ga * b - a * gb) / (b * b); return a / b;
    default: break;
  }
  throw ValidationError("invalid-expression", "unknown operator");
}

double Expression::eval(const Eigen::VectorXd& p) const {
  Eigen::VectorXd g;
  return eval(p, g);
}

int Expression::parameter_count() const {
  if (node_->op == Op::parameter) return node_->index + 1;
  int c = 0;
  for (const auto& a : node_->args) c = std::max(c, a.parameter_count());
  return c;
}

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::reflection_2d: return "reflection-2d";
    case FamilyKind::rotation_2d: return "rotation-2d";
    case FamilyKind::user_linear: return "user-linear";
  }
  return "user-linear";
}

ParametricFamily ParametricFamily::reflection_2d() {
  ParametricFamily f;
  f.kind = FamilyKind::reflection_2d;
  f.constraint = ParameterConstraint::unit_norm;
  f.parameter_count = 2;
  return f;
}

ParametricFamily ParametricFamily::rotation_2d(double lo, double hi) {
  if (!(hi > lo)) throw ValidationError("invalid-argument", "rotation interval must have hi > lo");
  ParametricFamily f;
  f.kind = FamilyKind::rotation_2d;
  f.constraint = ParameterConstraint::interval;
  f.lo = lo;
  f.hi = hi;
  f.parameter_count = 1;
  return f;
}

ParametricFamily ParametricFamily::user_linear(int dimension, std::vector<Expression> entries,
                                               ParameterConstraint constraint, double lo, double hi) {
  if (dimension < 1 || entries.size() != static_cast<std::size_t>(dimension) * dimension)
    throw ValidationError("invalid-argument", "user-linear family needs dimension^2 entries");
  if (constraint == ParameterConstraint::interval && !(hi > lo))
    throw ValidationError("invalid-argument", "interval must have hi > lo");
  ParametricFamily f;
  f.kind = FamilyKind::user_linear;
  f.constraint = constraint;
  f.lo = lo;
  f.hi = hi;
  f.dimension = dimension;
  f.parameter_count = 0;
  for (const auto& e : entries) f.parameter_count = std::max(f.parameter_count, e.parameter_count());
  if (f.parameter_count < 1) throw ValidationError("invalid-argument", "user-linear family has no parameters");
  f.entries = std::move(entries);
  return f;
}

Eigen::MatrixXd ParametricFamily::matrix(const Eigen::VectorXd& w) const {
  if (w.size() != parameter_count) throw ValidationError("dimension-mismatch", "wrong parameter count");
  switch (kind) {
    case FamilyKind::reflection_2d: {
      const double a = w[0], b = w[1], s = a * a + b * b;
      if (!(s > 0.0)) throw ValidationError("invalid-argument", "reflection normal is zero");
      Eigen::Matrix2d S;
      S << b * b - a * a, -2 * a * b, -2 * a * b, a * a - b * b;
      return S / s;
    }
    case FamilyKind::rotation_2d: {
      const double c = std::cos(w[0]), s = std::sin(w[0]);
      Eigen::Matrix2d S;
      S << c, s, -s, c;
      return S;
    }
    case FamilyKind::user_linear: {
      Eigen::MatrixXd S(dimension, dimension);
      for (int r = 0; r < dimension; ++r)
        for (int c = 0; c < dimension; ++c) S(r, c) = entries[static_cast<std::size_t>(r) * dimension + c].eval(w);
      return S;
    }
  }
  return {};
}

std::vector<Eigen::MatrixXd> ParametricFamily::matrix_derivatives(const Eigen::VectorXd& w) const {
  if (w.size() != parameter_count) throw ValidationError("dimension-mismatch", "wrong parameter count");
  std::vector<Eigen::MatrixXd> out;
  switch (kind) {
    case FamilyKind::reflection_2d: {
      const double a = w[0], b = w[1], s = a * a + b * b;
      const Eigen::Matrix2d S = matrix(w);
      Eigen::Matrix2d da, db;
      da << -2 * a, -2 * b, -2 * b, 2 * a;
      db << 2 * b, -2 * a, -2 * a, -2 * b;
      out.push_back((da - 2 * a * S) / s);
      out.push_back((db - 2 * b * S) / s);
      return out;
    }
    case FamilyKind::rotation_2d: {
      const double c = std::cos(w[0]), s = std::sin(w[0]);
      Eigen::Matrix2d d;
      d << -s, c, -c, -s;
      out.push_back(d);
      return out;
    }
    case FamilyKind::user_linear: {
      for (int k = 0; k < parameter_count; ++k) out.emplace_back(dimension, dimension);
      Eigen::VectorXd g;
      for (int r = 0; r < dimension; ++r)
        for (int c = 0; c < dimension; ++c) {
          entries[static_cast<std::size_t>(r) * dimension + c].eval(w, g);
          for (int k = 0; k < parameter_count; ++k) out[k](r, c) = g[k];
        }
      return out;
    }
  }
  return out;
}

Eigen::VectorXd transformation_residuals(const ScalarFunctionModel& f, const Eigen::MatrixXd& data,
                                         const ParametricFamily& family, const Eigen::VectorXd& w) {
  if (data.cols() != family.dimension || f.dimension() != family.dimension)
    throw ValidationError("dimension-mismatch", "family dimension differs from data");
  const Eigen::MatrixXd moved = data * family.matrix(w).transpose();
  return f.values(moved) - f.values(data);
}

namespace {

// Loss and gradient with respect to the family parameters.
double discrete_objective(const ScalarFunctionModel& f, const Eigen::MatrixXd& data, const Eigen::VectorXd& base,
                          const ParametricFamily& family, LossKind loss, const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
  const Eigen::MatrixXd moved = data * family.matrix(w).transpose();
  const Eigen::VectorXd r = f.values(moved) - base;
  const Eigen::MatrixXd g = f.gradients(moved);
  const auto N = static_cast<double>(data.rows());
  Eigen::VectorXd weight(r.size());
  double value;
  if (loss == LossKind::mean_absolute) {
    weight = r.unaryExpr([](double v) { return double((v > 0) - (v < 0)); }) / N;
    value = r.cwiseAbs().sum() / N;
  } else {
    weight = 2.0 * r / N;
    value = r.squaredNorm() / N;
  }
  const auto dS = family.matrix_derivatives(w);
  grad.resize(w.size());
  for (std::size_t k = 0; k < dS.size(); ++k) {
    const Eigen::MatrixXd dmoved = data * dS[k].transpose();
    grad[static_cast<Eigen::Index>(k)] = weight.dot((g.array() * dmoved.array()).rowwise().sum().matrix());
  }
  return value;
}

}  // namespace

DiscreteFitResult fit_discrete(const ScalarFunctionModel& f, const Eigen::MatrixXd& data, const ParametricFamily& family,
                               const OptimizerConfig& config) {
  config.validate();
  if (data.cols() != family.dimension || f.dimension() != family.dimension)
    throw ValidationError("dimension-mismatch", "family dimension differs from data");
  const Eigen::VectorXd base = f.values(data);
  DiscreteFitResult out;
  const int P = family.parameter_count;

  if (family.constraint == ParameterConstraint::unit_norm) {
    StiefelObjective objective = [&](const Eigen::MatrixXd& W, Eigen::MatrixXd& G) {
      Eigen::VectorXd g;
      const double v = discrete_objective(f, data, base, family, config.loss, W.col(0), g);
      G = g;
      return v;
    };
    OptimizationResult r = minimize_objective(objective, random_orthonormal(P, 1, config.seed), config);
    canonicalize_signs(r.point);
    out.parameters = r.point.col(0);
    out.trace = std::move(r.trace);
  } else {
    Rng rng(config.seed);
    Eigen::VectorXd w(P);
    for (int k = 0; k < P; ++k) w[k] = rng.uniform(family.lo, family.hi);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(P), g;
    Eigen::VectorXd best = w;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const double v = discrete_objective(f, data, base, family, config.loss, w, g);
      if (!std::isfinite(v)) throw NumericalError("divergence", "non-finite loss at epoch " + std::to_string(epoch), epoch);
      out.trace.loss.push_back(v);
      if (v < best_loss) {
        best_loss = v;
        best = w;
      }
      if (config.algorithm == Algorithm::riemannian_adagrad) {
        acc.array() += g.array().square();
        g.array() /= (acc.array() + config.adagrad_epsilon).sqrt();
      }
      w = (w - config.learning_rate * g).cwiseMax(family.lo).cwiseMin(family.hi);
    }
    const double last = discrete_objective(f, data, base, family, config.loss, w, g);
    if (last < best_loss) best = w;
    out.parameters = best;
    const double span = family.hi - family.lo;
    out.excluded_region_active = (best.array() <= family.lo + 1e-9 * span).any();
  }
  const Eigen::VectorXd r = transformation_residuals(f, data, family, out.parameters);
  out.final_loss = config.loss == LossKind::mean_absolute ? r.cwiseAbs().mean() : r.squaredNorm() / r.size();
  out.trace.final_loss = out.final_loss;
  return out;
}

double density_rotation_loss(const BandedKde& density, const Eigen::MatrixXd& data, const Eigen::VectorXd& base,
                             double theta, int threads) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::MatrixXd moved(data.rows(), 2);
  moved.col(0) = c * data.col(0) + s * data.col(1);
  moved.col(1) = -s * data.col(0) + c * data.col(1);
  return (density.eval(moved, threads) - base).cwiseAbs().mean();
}

DiscreteFitResult fit_density_rotation(const KdeModel& kde, const Eigen::MatrixXd& data, double theta_min,
                                       const DensityRotationOptions& options) {
  if (data.cols() != 2 || kde.dimension() != 2) throw ValidationError("dimension-mismatch", "density rotation needs 2-D data");
  const double two_pi = 2.0 * std::numbers::pi;
  const double lo = theta_min, hi = two_pi - theta_min;
  if (!(theta_min > 0.0) || !(hi > lo)) throw ValidationError("invalid-argument", "theta_min must lie in (0, pi)");
  if (options.grid < 3) throw ValidationError("invalid-argument", "grid needs at least 3 points");

  const BandedKde density(kde);
  const Eigen::VectorXd base = density.eval(data, options.threads);
  DiscreteFitResult out;
  auto loss = [&](double t) {
    ++out.evaluations;
    return density_rotation_loss(density, data, base, t, options.threads);
  };

  const int G = options.grid;
  const double step = (hi - lo) / G;
  std::vector<double> grid(G), values(G);
  for (int j = 0; j < G; ++j) {
    grid[j] = lo + (j + 0.5) * step;
    values[j] = loss(grid[j]);
    out.trace.loss.push_back(values[j]);
  }

  struct Candidate {
    double theta, value;
  };
  std::vector<Candidate> refined;
  for (int j = 0; j < G; ++j) {
    const bool left_ok = j == 0 || values[j] <= values[j - 1];
    const bool right_ok = j == G - 1 || values[j] <= values[j + 1];
    if (!left_ok || !right_ok) continue;
    const double a = std::max(lo, grid[j] - step), b = std::min(hi, grid[j] + step);
    std::uintmax_t iterations = 100;
    const auto [t, v] = boost::math::tools::brent_find_minima(loss, a, b, 20, iterations);
    refined.push_back(v <= values[j] ? Candidate{t, v} : Candidate{grid[j], values[j]});
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : refined) best = std::min(best, c.value);
  std::vector<double> sorted = values;
  std::nth_element(sorted.begin(), sorted.begin() + G / 2, sorted.end());
  const double typical = sorted[static_cast<std::size_t>(G / 2)];
  const double slack = options.tie_tolerance * std::max(0.0, typical - best);
  Candidate chosen{std::numeric_limits<double>::infinity(), best};
  for (const auto& c : refined)
    if (c.value <= best + slack && c.theta < chosen.theta) chosen = c;

  out.parameters = Eigen::VectorXd::Constant(1, chosen.theta);
  out.final_loss = chosen.value;
  out.trace.final_loss = chosen.value;
  // Binding only when the loss still falls towards the excluded side.
  if (chosen.theta - lo <= 1e-5 * (hi - lo)) {
    const double inside = loss(std::min(hi, lo + step));
    out.excluded_region_active = inside - chosen.value > std::max(slack, 1e-12 * inside);
  }
  return out;
}

Eigen::Matrix3d rotation_generator(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d G;
  G << c, s, 0, -s, c, 0, 0, 0, 1;
  return G;
}

double similarity_matrix(double angle, const Eigen::MatrixXd& reference) {
  if (reference.rows() != 3 || reference.cols() != 3) throw ValidationError("dimension-mismatch", "reference must be 3x3");
  if (!reference.allFinite() || !std::isfinite(angle)) throw ValidationError("invalid-argument", "non-finite input");
  const double rn = reference.norm();
  if (rn == 0.0) throw ValidationError("zero-reference", "reference matrix is zero");
  const Eigen::Matrix3d G = rotation_generator(angle);
  return std::abs((G.array() * reference.array()).sum()) / (G.norm() * rn);
}

}  // namespace symfield
