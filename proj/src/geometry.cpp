#include "symfield/geometry.hpp"

#include "symfield/errors.hpp"

namespace symfield {

int SmoothMapModel::input_dimension() const { return components.empty() ? 0 : components.front().dimension(); }

Eigen::VectorXd SmoothMapModel::eval(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  Eigen::VectorXd out(output_dimension());
  for (int i = 0; i < output_dimension(); ++i) out[i] = components[i].value(u);
  return out;
}

Eigen::MatrixXd SmoothMapModel::jacobian(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != input_dimension()) throw ValidationError("dimension-mismatch", "point does not match map input");
  Eigen::MatrixXd J(output_dimension(), input_dimension());
  for (int i = 0; i < output_dimension(); ++i) J.row(i) = components[i].gradient(u).transpose();
  return J;
}

MapFit fit_map(const Eigen::MatrixXd& source, const Eigen::MatrixXd& image, const FeatureBasis& basis) {
  if (source.rows() != image.rows()) throw ValidationError("dimension-mismatch", "source and image row counts differ");
  if (source.cols() != basis.dimension()) throw ValidationError("dimension-mismatch", "basis does not match source");
  if (image.cols() < 1) throw ValidationError("invalid-argument", "image has no columns");
  MapFit out;
  out.rms_residuals.resize(image.cols());
  for (Eigen::Index j = 0; j < image.cols(); ++j) {
    RegressionFit r = fit_regression(source, image.col(j), basis);
    out.map.components.push_back(std::move(r.model));
    out.rms_residuals[j] = r.rms_residual;
    out.ridge_fallback = out.ridge_fallback || r.ridge_fallback;
  }
  return out;
}

Eigen::MatrixXd pullback_metric(const SmoothMapModel& map, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Eigen::MatrixXd J = map.jacobian(u);
  const Eigen::Index m = J.cols();
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b) g(a, b) = g(b, a) = J.col(a).dot(J.col(b));
  return g;
}

}  // namespace symfield
