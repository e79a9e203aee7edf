#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"
#include "symfield/datasets.hpp"
#include "symfield/errors.hpp"
#include "symfield/model_fit.hpp"
#include "symfield/random.hpp"

using namespace symfield;

namespace {

FeatureAtom mono(std::vector<int> e) { return FeatureAtom::monomial(std::move(e)); }

OptimizerConfig config(Algorithm a, LossKind l, double lr, int epochs, std::uint64_t seed = 1) {
  OptimizerConfig c;
  c.algorithm = a;
  c.loss = l;
  c.learning_rate = lr;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

Eigen::MatrixXd gaussian(int N, int n, std::uint64_t seed) {
  Rng rng(seed);
  return normal_matrix(rng, N, n);
}

}  // namespace

TEST_CASE("fit_regression recovers an expanded quadratic") {
  const Eigen::MatrixXd X = gaussian(500, 2, 1);
  Eigen::VectorXd t(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    t[i] = std::pow(X(i, 0) - 1, 2) + 4 * std::pow(X(i, 1) - 1, 2);
  const RegressionFit fit = fit_regression(X, t, monomial_basis(2, 2, true));
  // (x-1)^2 + 4(y-1)^2 = 5 - 2x - 8y + x^2 + 4y^2
  const Eigen::VectorXd expected = (Eigen::VectorXd(6) << 5, -2, -8, 1, 0, 4).finished();
  CHECK((fit.model.coefficients - expected).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(fit.rms_residual <= 1e-8);
  CHECK_FALSE(fit.ridge_fallback);
}

TEST_CASE("fit_regression on constant targets") {
  const Eigen::MatrixXd X = gaussian(100, 3, 2);
  const RegressionFit fit = fit_regression(X, Eigen::VectorXd::Constant(100, 2.5), monomial_basis(3, 2, true));
  CHECK(fit.model.coefficients[0] == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(fit.model.coefficients.tail(fit.model.coefficients.size() - 1).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fit_regression on the cubic dataset") {
  const Dataset d = generate({"cubic", 500, 3, {}});
  const RegressionFit fit = fit_regression(d.data, *d.targets, monomial_basis(2, 3, true));
  const FeatureBasis& b = fit.model.basis;
  CHECK(fit.model.coefficients[b.index_of(mono({3, 0}))] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.model.coefficients[b.index_of(mono({0, 2}))] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(fit.rms_residual <= 1e-8);
}

TEST_CASE("fit_regression flags a rank-deficient design") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(20, 2);
  X.col(0) = gaussian(20, 1, 4);
  const RegressionFit fit = fit_regression(X, X.col(0) * 3.0, monomial_basis(2, 1, true));
  CHECK(fit.ridge_fallback);
  CHECK(fit.model.coefficients[1] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK_THROWS_AS(fit_regression(X, Eigen::VectorXd::Zero(3), monomial_basis(2, 1, true)), ValidationError);
}

TEST_CASE("model gradients agree with finite differences") {
  ScalarFunctionModel f{monomial_basis(2, 3, true), Eigen::VectorXd::LinSpaced(10, -1, 1)};
  const Eigen::Vector2d x(0.3, -0.7);
  const double h = 1e-6;
  const Eigen::VectorXd g = f.gradient(x);
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    CHECK(g[i] == doctest::Approx((f.value(xp) - f.value(xm)) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("fit_level_set: plane x = 0") {
  Eigen::MatrixXd X = gaussian(200, 3, 5);
  X.col(0).setZero();
  const LevelSetFit fit = fit_level_set(X, monomial_basis(3, 1, true), 1,
                                        config(Algorithm::riemannian_adagrad, LossKind::mean_squared, 0.1, 3000));
  CHECK(fit.final_loss <= 1e-10);
  CHECK(std::abs(fit.model.W(1, 0)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit_level_set: circle in 3-D gives z - 1 on the affine basis") {
  const Dataset d = generate({"circle3d", 0, 6, {}});
  const LevelSetFit fit = fit_level_set(d.data, monomial_basis(3, 1, true), 1,
                                        config(Algorithm::riemannian_sgd, LossKind::mean_squared, 0.01, 5000));
  Eigen::VectorXd w = fit.model.W.col(0);
  if (w[3] < 0) w = -w;
  CHECK(w[0] == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-4));
  CHECK(w[3] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));
  CHECK(std::abs(w[1]) < 1e-4);
  CHECK(std::abs(w[2]) < 1e-4);
  // Reported loss is the recomputed loss at the returned point.
  const Eigen::MatrixXd B = fit.model.basis.feature_matrix(d.data);
  CHECK(fit.final_loss == doctest::Approx(residual_loss(B * fit.model.W, LossKind::mean_squared)).epsilon(1e-10));
}

TEST_CASE("select_elbow rule") {
  CHECK(select_elbow({7e-12, 7e-2}).selected == 1);
  CHECK(select_elbow({1e-9, 1e-9, 2e-9, 1e-9, 1e-9, 0.3, 0.4}).selected == 5);
  const ElbowChoice flat = select_elbow({1.0, 1.5, 2.0});
  CHECK(flat.selected == 3);
  CHECK(flat.no_elbow);
  CHECK(select_elbow({0.0, 0.0, 1.0}).selected == 2);
  CHECK_THROWS_AS(select_elbow({}), ValidationError);
}

TEST_CASE("select_elbow is invariant to a common rescaling") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> losses;
    for (int k = 0; k < 6; ++k) losses.push_back(std::pow(10.0, rng.uniform(-14, 0)));
    std::sort(losses.begin(), losses.end());
    const double s = std::pow(10.0, rng.uniform(-6, 6));
    std::vector<double> scaled = losses;
    for (double& v : scaled) v *= s;
    CHECK(select_elbow(losses).selected == select_elbow(scaled).selected);
    CHECK(select_elbow(losses).no_elbow == select_elbow(scaled).no_elbow);
  }
}

TEST_CASE("select_components_elbow on the circle") {
  const Dataset d = generate({"circle3d", 0, 8, {}});
  const ElbowTrace t = select_components_elbow(d.data, monomial_basis(3, 1, true), 2,
                                               config(Algorithm::riemannian_sgd, LossKind::mean_squared, 0.01, 5000));
  REQUIRE(t.points.size() == 2);
  CHECK(t.points[0].component_count == 1);
  CHECK(t.points[1].component_count == 2);
  CHECK(t.selected == 1);
  CHECK(t.points[0].final_loss < 1e-10);
  CHECK(t.points[1].final_loss > 1e-3);
}

TEST_CASE("project_onto_affine: plane z = 1") {
  const Dataset d = generate({"circle3d", 300, 9, {}});
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 1);
  W(0, 0) = -std::sqrt(0.5);
  W(3, 0) = std::sqrt(0.5);
  const AffineProjection p = project_onto_affine(d.data, {monomial_basis(3, 1, true), W});
  REQUIRE(p.reduced.cols() == 2);
  CHECK((p.frame.origin - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-12);
  CHECK((p.reduced - d.data.leftCols(2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((p.frame.to_ambient(p.reduced) - d.data).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("project_onto_affine round trip on random affine subspaces") {
  Rng rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 6, k = 1 + rep % 4;
    const Eigen::MatrixXd W = random_orthonormal(n + 1, k, 20 + rep);
    const AffineProjection p = project_onto_affine(normal_matrix(rng, 50, n), {monomial_basis(n, 1, true), W});
    CHECK(p.reduced.cols() == n - k);
    const Eigen::MatrixXd ambient = p.frame.to_ambient(p.reduced);
    CHECK((p.frame.to_ambient(p.frame.to_reduced(ambient)) - ambient).cwiseAbs().maxCoeff() <= 1e-10);
    // Projected points satisfy the affine equations.
    const Eigen::MatrixXd B = monomial_basis(n, 1, true).feature_matrix(ambient);
    CHECK((B * W).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("project_onto_affine: no components and inconsistent systems") {
  const Eigen::MatrixXd X = gaussian(10, 2, 11);
  const AffineProjection p = project_onto_affine(X, {monomial_basis(2, 1, true), Eigen::MatrixXd(3, 0)});
  CHECK(p.reduced == X);
  // x = 1 and x = -1 together.
  Eigen::MatrixXd W(3, 2);
  W << 1, 1, -1, 1, 0, 0;
  try {
    project_onto_affine(X, {monomial_basis(2, 1, true), W.colwise().normalized()});
    FAIL("expected empty-levelset");
  } catch (const NumericalError& e) {
    CHECK(e.code() == "empty-levelset");
  }
  CHECK_THROWS_AS(project_onto_affine(X, {monomial_basis(2, 2, true), Eigen::MatrixXd::Zero(6, 1)}), ValidationError);
}

TEST_CASE("extend_degenerate_columns") {
  const FeatureBasis base = monomial_basis(3, 2, true);
  const ScalarFunctionModel f2{base, expand_onto({symtest::mono(1, {0, 0, 1}), symtest::mono(-1, {0, 0, 0})}, base)};
  const FeatureBasis ext = extend_degenerate_columns(base, {f2}, 2);
  CHECK(ext.size() == base.size() + 3);
  std::vector<std::string> names;
  for (int k = base.size(); k < ext.size(); ++k) {
    CHECK(ext.atom(k).artificial());
    CHECK(ext.atom(k).multiplier().degree() == 1);
  }
  CHECK(extend_degenerate_columns(base, {f2}, 1).size() == base.size());
}

TEST_CASE("extend_degenerate_columns with two known functions matches an enumerate-and-dedupe oracle") {
  const FeatureBasis base = monomial_basis(2, 3, true);
  const ScalarFunctionModel f{base, expand_onto({symtest::mono(1, {1, 0})}, base)};
  const ScalarFunctionModel g{base, expand_onto({symtest::mono(1, {0, 2}), symtest::mono(2, {0, 0})}, base)};
  const FeatureBasis ext = extend_degenerate_columns(base, {f, g, f}, 3);
  // Oracle: multipliers of degree 1..2 for f (5), degree 1 for g (2).
  std::set<std::pair<std::vector<int>, int>> oracle;
  const FeatureBasis m2 = monomial_basis(2, 2, false);
  const FeatureBasis m1 = monomial_basis(2, 1, false);
  for (const auto& h : m2.atoms()) oracle.insert({h.exponents(), 0});
  for (const auto& h : m1.atoms()) oracle.insert({h.exponents(), 1});
  CHECK(ext.size() == base.size() + static_cast<int>(oracle.size()));
  std::set<std::pair<std::vector<int>, int>> seen;
  for (int k = base.size(); k < ext.size(); ++k) {
    const int which = ext.atom(k).function() == f.terms() ? 0 : 1;
    seen.insert({ext.atom(k).multiplier().exponents(), which});
  }
  CHECK(seen == oracle);
}

TEST_CASE("fit_level_set with artificial columns avoids the known function") {
  const Dataset d = generate({"circle3d", 0, 12, {}});
  const FeatureBasis base = monomial_basis(3, 2, true);
  const ScalarFunctionModel f2{base, expand_onto({symtest::mono(1, {0, 0, 1}), symtest::mono(-1, {0, 0, 0})}, base)};
  const FeatureBasis ext = extend_degenerate_columns(base, {f2}, 2);
  const LevelSetFit fit = fit_level_set(d.data, ext, 1, config(Algorithm::riemannian_sgd, LossKind::mean_squared, 0.01, 5000));
  CHECK_FALSE(fit.model.basis.has_artificial());
  CHECK(fit.final_loss <= 1e-8);
  // Result is orthogonal to the known function and its products.
  const Eigen::VectorXd w = fit.model.W.col(0);
  CHECK(std::abs(w.dot(f2.coefficients)) <= 1e-6);
  for (int k = base.size(); k < ext.size(); ++k) CHECK(std::abs(w.dot(expand_product(ext.atom(k), base))) <= 1e-6);
}
