#include "symfield/vfield.hpp"

#include <cmath>

#include "symfield/errors.hpp"
#include "symfield/parallel.hpp"

namespace symfield {

Eigen::VectorXd BasisVectorField::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dimension) throw ValidationError("dimension-mismatch", "point length differs from field dimension");
  Eigen::VectorXd out(dimension);
  for (int i = 0; i < dimension; ++i) {
    double v = 0.0;
    for (const auto& t : components[i]) v += t.coefficient * t.atom.value(x.data());
    out[i] = v;
  }
  return out;
}

Eigen::MatrixXd BasisVectorField::eval_all(const Eigen::MatrixXd& data) const {
  if (data.cols() != dimension) throw ValidationError("dimension-mismatch", "data width differs from field dimension");
  Eigen::MatrixXd out(data.rows(), dimension);
  Eigen::VectorXd x(dimension);
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    x = data.row(r).transpose();
    out.row(r) = eval(x).transpose();
  }
  return out;
}

bool BasisVectorField::is_polynomial() const {
  for (const auto& c : components)
    for (const auto& t : c)
      if (!t.atom.is_polynomial()) return false;
  return true;
}

Eigen::VectorXd VectorFieldModel::block(int j, int i) const {
  const int m = atoms();
  return blocks.col(j).segment(static_cast<Eigen::Index>(i) * m, m);
}

double VectorFieldModel::component_eval(int j, int i, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return block(j, i).dot(basis.evaluate(x));
}

Eigen::VectorXd VectorFieldModel::eval(int j, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd b = basis.evaluate(x);
  const int n = dimension(), m = atoms();
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = blocks.col(j).segment(static_cast<Eigen::Index>(i) * m, m).dot(b);
  return out;
}

Eigen::MatrixXd VectorFieldModel::eval_all(int j, const Eigen::MatrixXd& data) const {
  const Eigen::MatrixXd B = basis.feature_matrix(data);
  const int n = dimension(), m = atoms();
  const Eigen::Map<const Eigen::MatrixXd> C(blocks.col(j).data(), m, n);
  return B * C;
}

BasisVectorField VectorFieldModel::field(int j) const {
  BasisVectorField f;
  f.dimension = dimension();
  const int m = atoms();
  for (int i = 0; i < dimension(); ++i) {
    std::vector<FunctionTerm> terms;
    for (int k = 0; k < m; ++k) {
      const double c = blocks(static_cast<Eigen::Index>(i) * m + k, j);
      if (c != 0.0) terms.push_back({c, basis.atom(k)});
    }
    f.components.push_back(std::move(terms));
  }
  return f;
}

VectorFieldModel to_vector_field_model(const std::vector<BasisVectorField>& fields) {
  if (fields.empty()) throw ValidationError("invalid-argument", "no fields given");
  const int n = fields.front().dimension;
  std::vector<FeatureAtom> atoms;
  for (const auto& f : fields) {
    if (f.dimension != n) throw ValidationError("dimension-mismatch", "fields disagree on dimension");
    for (const auto& c : f.components)
      for (const auto& t : c)
        if (std::find(atoms.begin(), atoms.end(), t.atom) == atoms.end()) atoms.push_back(t.atom);
  }
  VectorFieldModel model;
  model.basis = FeatureBasis(n, std::move(atoms));
  const int m = model.basis.size();
  model.blocks = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * m, static_cast<Eigen::Index>(fields.size()));
  for (std::size_t j = 0; j < fields.size(); ++j)
    for (int i = 0; i < n; ++i)
      for (const auto& t : fields[j].components[i])
        model.blocks(static_cast<Eigen::Index>(i) * m + model.basis.index_of(t.atom), static_cast<Eigen::Index>(j)) +=
            t.coefficient;
  return model;
}

int GradientProvider::dimension() const {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, std::vector<ScalarFunctionModel>>) {
          if (s.empty()) throw ValidationError("invalid-argument", "empty function list");
          return s.front().dimension();
        } else {
          return s.dimension();
        }
      },
      source);
}

int GradientProvider::components() const {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, std::vector<ScalarFunctionModel>>) return static_cast<int>(s.size());
        else if constexpr (std::is_same_v<T, LevelSetModel>) return s.components();
        else return 1;
      },
      source);
}

Eigen::MatrixXd GradientProvider::jacobians(const Eigen::MatrixXd& data, int threads) const {
  const int n = dimension(), k = components();
  if (k < 1) throw ValidationError("invalid-argument", "provider has no components");
  if (data.cols() != n) throw ValidationError("dimension-mismatch", "data width differs from provider dimension");
  const Eigen::Index N = data.rows();
  Eigen::MatrixXd J(N * k, n);
  if (const auto* kde = std::get_if<KdeModel>(&source)) {
    J = kde_gradient(*kde, data, threads);
  } else if (const auto* fs = std::get_if<std::vector<ScalarFunctionModel>>(&source)) {
    for (int l = 0; l < k; ++l) {
      if ((*fs)[l].dimension() != n) throw ValidationError("dimension-mismatch", "functions disagree on dimension");
      const Eigen::MatrixXd g = (*fs)[l].gradients(data);
      for (Eigen::Index i = 0; i < N; ++i) J.row(i * k + l) = g.row(i);
    }
  } else {
    const auto& ls = std::get<LevelSetModel>(source);
    parallel_for(0, N, threads, [&](long i) {
      const Eigen::VectorXd x = data.row(i).transpose();
      J.middleRows(i * k, k) = ls.jacobian(x);
    });
  }
  if (!J.allFinite()) throw NumericalError("non-finite-jacobian", "provider Jacobian is not finite");
  return J;
}

Eigen::MatrixXd extended_feature_matrix(const GradientProvider& provider, const Eigen::MatrixXd& data,
                                        const FeatureBasis& vf_basis, int threads) {
  const int n = provider.dimension(), k = provider.components();
  if (vf_basis.dimension() != n) throw ValidationError("dimension-mismatch", "vector field basis dimension differs from provider");
  const Eigen::MatrixXd J = provider.jacobians(data, threads);
  const Eigen::MatrixXd B = vf_basis.feature_matrix(data);
  const int m = vf_basis.size();
  const Eigen::Index N = data.rows();
  Eigen::MatrixXd M(N * k, static_cast<Eigen::Index>(n) * m);
  parallel_for(0, N, threads, [&](long i) {
    for (int l = 0; l < k; ++l)
      for (int r = 0; r < n; ++r) M.row(i * k + l).segment(static_cast<Eigen::Index>(r) * m, m) = J(i * k + l, r) * B.row(i);
  });
  return M;
}

VectorFieldFit estimate_vector_fields(const GradientProvider& provider, const Eigen::MatrixXd& data,
                                      const FeatureBasis& vf_basis, int c, const OptimizerConfig& config, int threads) {
  const Eigen::MatrixXd M = extended_feature_matrix(provider, data, vf_basis, threads);
  if (c < 1 || c > M.cols()) throw ValidationError("invalid-argument", "field count out of range");
  OptimizationResult r = minimize(M, c, config);
  return {VectorFieldModel{vf_basis, std::move(r.point)}, std::move(r.trace)};
}

FeatureBasis family_basis(const std::string& family, int n) {
  if (family == "constant") return monomial_basis(n, 0, true);
  if (family == "linear") return monomial_basis(n, 1, false);
  if (family == "affine") return monomial_basis(n, 1, true);
  if (family == "quadratic") return monomial_basis(n, 2, true);
  throw ValidationError("invalid-argument", "unknown vector field family '" + family + "'");
}

EscalationResult escalate_vector_fields(const GradientProvider& provider, const Eigen::MatrixXd& data, int c,
                                        const OptimizerConfig& config, double threshold, int threads) {
  EscalationResult out;
  std::optional<VectorFieldFit> best;
  std::string best_family;
  for (const char* family : {"constant", "linear", "affine", "quadratic"}) {
    const FeatureBasis basis = family_basis(family, provider.dimension());
    if (c > provider.dimension() * basis.size()) continue;
    VectorFieldFit fit = estimate_vector_fields(provider, data, basis, c, config, threads);
    out.steps.push_back({family, fit.trace.final_loss});
    const bool better = !best || fit.trace.final_loss < best->trace.final_loss;
    if (fit.trace.final_loss < threshold) {
      out.fit = std::move(fit);
      out.family = family;
      out.threshold_met = true;
      return out;
    }
    if (better) {
      best = std::move(fit);
      best_family = family;
    }
  }
  if (!best) throw ValidationError("invalid-argument", "no vector field family can hold that many fields");
  out.fit = std::move(*best);
  out.family = best_family;
  return out;
}

Eigen::MatrixXd invariant_feature_matrix(const VectorFieldModel& fields, const Eigen::MatrixXd& data,
                                         const FeatureBasis& candidate_basis, int threads) {
  const int n = fields.dimension();
  if (candidate_basis.dimension() != n) throw ValidationError("dimension-mismatch", "candidate basis dimension differs from fields");
  if (data.cols() != n) throw ValidationError("dimension-mismatch", "data width differs from field dimension");
  const int c = fields.fields(), m2 = candidate_basis.size();
  const Eigen::Index N = data.rows();
  std::vector<Eigen::MatrixXd> alpha;
  for (int j = 0; j < c; ++j) alpha.push_back(fields.eval_all(j, data));
  Eigen::MatrixXd M2(N * c, m2);
  parallel_for(0, N, threads, [&](long i) {
    const Eigen::VectorXd x = data.row(i).transpose();
    const Eigen::MatrixXd Jb = candidate_basis.jacobian(x);
    for (int j = 0; j < c; ++j) M2.row(i * c + j) = (Jb * alpha[j].row(i).transpose()).transpose();
  });
  return M2;
}

InvariantFit estimate_invariants(const VectorFieldModel& fields, const Eigen::MatrixXd& data,
                                 const FeatureBasis& candidate_basis, int q, const OptimizerConfig& config, int threads) {
  if (candidate_basis.contains_constant())
    throw ValidationError("constant-candidate", "candidate basis must not contain the constant atom");
  const Eigen::MatrixXd M2 = invariant_feature_matrix(fields, data, candidate_basis, threads);
  if (q < 1 || q > M2.cols()) throw ValidationError("invalid-argument", "invariant count out of range");
  OptimizationResult r = minimize(M2, q, config);
  InvariantFit out;
  for (int j = 0; j < q; ++j) out.invariants.push_back({candidate_basis, r.point.col(j)});
  out.trace = std::move(r.trace);

  const Eigen::MatrixXd values = candidate_basis.feature_matrix(data) * r.point;
  const Eigen::MatrixXd centered = values.rowwise() - values.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  out.correlation = Eigen::MatrixXd::Identity(q, q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      if (a != b && sd[a] > 0 && sd[b] > 0) out.correlation(a, b) = cov(a, b) / (sd[a] * sd[b]);
  return out;
}

FlowParameterFit estimate_flow_parameter(const VectorFieldModel& field, const Eigen::MatrixXd& data,
                                         const FeatureBasis& candidate_basis, double threshold) {
  if (field.fields() != 1) throw ValidationError("invalid-argument", "flow parameter needs exactly one field");
  const Eigen::MatrixXd M2 = invariant_feature_matrix(field, data, candidate_basis);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(M2.rows());
  FlowParameterFit out;
  out.model = {candidate_basis, minimize_affine_target(M2, ones)};
  const Eigen::VectorXd r = M2 * out.model.coefficients - ones;
  out.residual_rms = r.size() ? std::sqrt(r.squaredNorm() / static_cast<double>(r.size())) : 0.0;
  out.no_polynomial_flow_parameter = out.residual_rms > threshold;
  return out;
}

Eigen::MatrixXd flow_integrate(const BasisVectorField& field, const Eigen::VectorXd& x0, double t, int steps) {
  if (steps < 1) throw ValidationError("invalid-argument", "flow needs at least one step");
  if (x0.size() != field.dimension) throw ValidationError("dimension-mismatch", "start point length differs from field");
  if (!std::isfinite(t) || !x0.allFinite()) throw ValidationError("invalid-argument", "non-finite flow input");
  const double h = t / steps;
  Eigen::MatrixXd out(steps + 1, field.dimension);
  Eigen::VectorXd x = x0;
  out.row(0) = x.transpose();
  for (int s = 1; s <= steps; ++s) {
    const Eigen::VectorXd k1 = field.eval(x);
    const Eigen::VectorXd k2 = field.eval(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = field.eval(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = field.eval(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw NumericalError("flow-diverged", "flow left the finite range at step " + std::to_string(s), s);
    out.row(s) = x.transpose();
  }
  return out;
}

BasisSearchResult basis_restricted_search(const std::vector<BasisVectorField>& basis_fields,
                                          const ScalarFunctionModel& f, const Eigen::MatrixXd& data,
                                          const OptimizerConfig& config) {
  if (basis_fields.empty()) throw ValidationError("invalid-argument", "need at least one basis field");
  const Eigen::MatrixXd grad = f.gradients(data);
  Eigen::MatrixXd A(data.rows(), static_cast<Eigen::Index>(basis_fields.size()));
  for (std::size_t j = 0; j < basis_fields.size(); ++j) {
    if (basis_fields[j].dimension != f.dimension()) throw ValidationError("dimension-mismatch", "basis field dimension differs from f");
    A.col(static_cast<Eigen::Index>(j)) = (grad.array() * basis_fields[j].eval_all(data).array()).rowwise().sum();
  }
  OptimizationResult r = minimize(A, 1, config);
  return {r.point.col(0), std::move(r.trace)};
}

}  // namespace symfield
