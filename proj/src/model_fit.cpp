#include "symfield/model_fit.hpp"

#include <algorithm>
#include <cmath>

#include "symfield/errors.hpp"

namespace symfield {

double ScalarFunctionModel::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coefficients.dot(basis.evaluate(x));
}

Eigen::VectorXd ScalarFunctionModel::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return basis.jacobian(x).transpose() * coefficients;
}

Eigen::VectorXd ScalarFunctionModel::values(const Eigen::MatrixXd& data) const {
  return basis.feature_matrix(data) * coefficients;
}

Eigen::MatrixXd ScalarFunctionModel::gradients(const Eigen::MatrixXd& data) const {
  if (data.cols() != dimension()) throw ValidationError("dimension-mismatch", "data width differs from model dimension");
  Eigen::MatrixXd out(data.rows(), dimension());
  Eigen::VectorXd g(dimension());
  Eigen::VectorXd x(dimension());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    x = data.row(i).transpose();
    g.setZero();
    for (int k = 0; k < basis.size(); ++k)
      if (coefficients[k] != 0.0) basis.atom(k).add_gradient(x.data(), coefficients[k], g.data());
    out.row(i) = g.transpose();
  }
  return out;
}

std::vector<FunctionTerm> ScalarFunctionModel::terms() const {
  std::vector<FunctionTerm> out;
  for (int k = 0; k < basis.size(); ++k)
    if (coefficients[k] != 0.0) out.push_back({coefficients[k], basis.atom(k)});
  return out;
}

RegressionFit fit_regression(const Eigen::MatrixXd& data, const Eigen::VectorXd& targets, const FeatureBasis& basis) {
  if (data.rows() != targets.size()) throw ValidationError("dimension-mismatch", "data rows differ from target count");
  if (!data.allFinite() || !targets.allFinite()) throw ValidationError("invalid-argument", "non-finite regression input");
  const Eigen::MatrixXd B = basis.feature_matrix(data);
  RegressionFit fit;
  fit.model.basis = basis;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  if (qr.rank() == B.cols()) {
    fit.model.coefficients = qr.solve(targets);
  } else {
    fit.ridge_fallback = true;
    fit.model.coefficients = minimize_affine_target(B, targets);
  }
  const Eigen::VectorXd r = B * fit.model.coefficients - targets;
  fit.rms_residual = r.size() ? std::sqrt(r.squaredNorm() / static_cast<double>(r.size())) : 0.0;
  return fit;
}

ScalarFunctionModel LevelSetModel::component(int j) const { return {basis, W.col(j)}; }

Eigen::VectorXd LevelSetModel::values(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return W.transpose() * basis.evaluate(x);
}

Eigen::MatrixXd LevelSetModel::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return W.transpose() * basis.jacobian(x);
}

namespace {

// Orthonormal basis of the known directions carried by the artificial atoms of `basis`,
// expressed over `plain`.
Eigen::MatrixXd fixed_directions(const FeatureBasis& basis, const FeatureBasis& plain) {
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::vector<FunctionTerm>> seen;
  for (const auto& a : basis.atoms()) {
    if (!a.artificial()) continue;
    if (std::find(seen.begin(), seen.end(), a.function()) == seen.end()) {
      seen.push_back(a.function());
      cols.push_back(expand_onto(a.function(), plain));
    }
    cols.push_back(expand_product(a, plain));
  }
  Eigen::MatrixXd F(plain.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) F.col(static_cast<Eigen::Index>(j)) = cols[j];
  return F;
}

}  // namespace

LevelSetFit fit_level_set(const Eigen::MatrixXd& data, const FeatureBasis& basis, int k, const OptimizerConfig& config,
                          const std::optional<Eigen::MatrixXd>& W0) {
  if (k < 1 || k > basis.size()) throw ValidationError("invalid-argument", "fit_level_set needs 1 <= k <= basis size");
  LevelSetFit fit;
  if (!basis.has_artificial()) {
    const Eigen::MatrixXd B = basis.feature_matrix(data);
    OptimizationResult r = minimize(B, k, config, W0);
    fit.model = {basis, std::move(r.point)};
    fit.final_loss = r.trace.final_loss;
    fit.trace = std::move(r.trace);
    return fit;
  }

  const FeatureBasis plain = basis.without_artificial();
  const Eigen::MatrixXd F = fixed_directions(basis, plain);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(F);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  const Eigen::Index m = plain.size();
  if (k > m - rank) throw ValidationError("invalid-argument", "too many components for the complement of the known functions");
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd P = Q.rightCols(m - rank);

  const Eigen::MatrixXd B = plain.feature_matrix(data);
  std::optional<Eigen::MatrixXd> V0;
  if (W0) V0 = P.transpose() * (*W0);
  OptimizationResult r = minimize(B * P, k, config, V0);
  Eigen::MatrixXd W = P * r.point;
  canonicalize_signs(W);
  fit.final_loss = residual_loss(B * W, config.loss);
  fit.model = {plain, std::move(W)};
  fit.trace = std::move(r.trace);
  fit.trace.final_loss = fit.final_loss;
  return fit;
}

ElbowChoice select_elbow(const std::vector<double>& losses, double elbow_ratio) {
  if (losses.empty()) throw ValidationError("invalid-argument", "elbow selection needs at least one loss");
  if (!(elbow_ratio > 0.0)) throw ValidationError("invalid-argument", "elbow ratio must be positive");
  const double top = *std::max_element(losses.begin(), losses.end());
  const double floor = 1e-12 * top;
  for (std::size_t k = 0; k + 1 < losses.size(); ++k) {
    const double next = losses[k + 1];
    if (next > floor && next > elbow_ratio * std::max(losses[k], floor)) return {static_cast<int>(k) + 1, false};
  }
  return {static_cast<int>(losses.size()), true};
}

ElbowTrace select_components_elbow(const Eigen::MatrixXd& data, const FeatureBasis& basis, int k_max,
                                   const OptimizerConfig& config, double elbow_ratio) {
  int limit = basis.size();
  if (basis.has_artificial()) limit = basis.without_artificial().size();
  if (k_max < 1 || k_max > limit) throw ValidationError("invalid-argument", "k_max out of range");
  ElbowTrace trace;
  std::vector<double> losses;
  for (int k = 1; k <= k_max; ++k) {
    LevelSetFit fit = fit_level_set(data, basis, k, config);
    trace.points.push_back({k, fit.final_loss});
    losses.push_back(fit.final_loss);
    trace.models.push_back(std::move(fit.model));
  }
  const ElbowChoice choice = select_elbow(losses, elbow_ratio);
  trace.selected = choice.selected;
  trace.no_elbow = choice.no_elbow;
  return trace;
}

Eigen::MatrixXd AffineFrame::to_reduced(const Eigen::MatrixXd& data) const {
  if (data.cols() != origin.size()) throw ValidationError("dimension-mismatch", "data width differs from frame dimension");
  return (data.rowwise() - origin.transpose()) * basis;
}

Eigen::MatrixXd AffineFrame::to_ambient(const Eigen::MatrixXd& reduced) const {
  if (reduced.cols() != basis.cols()) throw ValidationError("dimension-mismatch", "reduced width differs from frame");
  return (reduced * basis.transpose()).rowwise() + origin.transpose();
}

AffineProjection project_onto_affine(const Eigen::MatrixXd& data, const LevelSetModel& model) {
  const int n = model.dimension();
  if (data.cols() != n) throw ValidationError("dimension-mismatch", "data width differs from model dimension");
  const int k = model.components();
  // Rows of A x + c = 0.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, n);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  for (int a = 0; a < model.basis.size(); ++a) {
    const FeatureAtom& atom = model.basis.atom(a);
    if (atom.kind() != AtomKind::monomial || atom.degree() > 1)
      throw ValidationError("non-affine", "project_onto_affine needs constant and linear atoms only");
    if (atom.is_constant()) {
      c += model.W.row(a).transpose();
    } else {
      const auto& e = atom.exponents();
      const int axis = static_cast<int>(std::find(e.begin(), e.end(), 1) - e.begin());
      A.col(axis) += model.W.row(a).transpose();
    }
  }

  AffineProjection out;
  if (k == 0) {
    out.frame = {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
    out.reduced = data;
    return out;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const double tol = 1e-8 * std::max(1.0, s.size() ? s[0] : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  const Eigen::MatrixXd U = svd.matrixU();
  const Eigen::MatrixXd V = svd.matrixV();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < rank; ++i) x0 -= V.col(i) * (U.col(i).dot(c) / s[i]);
  const double residual = (A * x0 + c).norm();
  if (residual > 1e-6 * std::max(1.0, c.norm()))
    throw NumericalError("empty-levelset", "affine components have no common solution");

  // Gram-Schmidt of e_1..e_n against the row space gives a reproducible frame.
  const Eigen::Index d = n - rank;
  std::vector<Eigen::VectorXd> span;
  for (Eigen::Index i = 0; i < rank; ++i) span.push_back(V.col(i));
  Eigen::MatrixXd frame(n, d);
  Eigen::Index filled = 0;
  for (int i = 0; i < n && filled < d; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, i);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : span) v -= u.dot(v) * u;
    const double norm = v.norm();
    if (norm < 1e-8) continue;
    v /= norm;
    span.push_back(v);
    frame.col(filled++) = v;
  }
  out.frame = {x0, frame};
  out.reduced = out.frame.to_reduced(data);
  return out;
}

FeatureBasis extend_degenerate_columns(const FeatureBasis& basis, const std::vector<ScalarFunctionModel>& known,
                                       int degree) {
  const int n = basis.dimension();
  std::vector<FeatureAtom> atoms = basis.atoms();
  for (const auto& f : known) {
    if (f.dimension() != n) throw ValidationError("dimension-mismatch", "known function dimension differs from basis");
    std::vector<FunctionTerm> terms = f.terms();
    int fdeg = 0;
    for (const auto& t : terms) {
      if (basis.index_of(t.atom) < 0) throw ValidationError("basis-mismatch", "known function uses an atom outside the basis");
      if (!t.atom.is_polynomial()) throw ValidationError("non-polynomial", "only polynomial known functions can be extended");
      fdeg = std::max(fdeg, t.atom.degree());
    }
    if (terms.empty()) continue;
    const FeatureBasis multipliers = monomial_basis(n, std::max(0, degree - fdeg), false);
    if (degree - fdeg < 1) continue;
    for (const auto& h : multipliers.atoms()) {
      FeatureAtom p = FeatureAtom::product(h, terms);
      if (std::find(atoms.begin(), atoms.end(), p) == atoms.end()) atoms.push_back(std::move(p));
    }
  }
  return FeatureBasis(n, std::move(atoms));
}

}  // namespace symfield
