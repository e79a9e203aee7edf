#include "symfield/datasets.hpp"

#include <cmath>
#include <numbers>

#include "symfield/errors.hpp"
#include "symfield/random.hpp"

namespace symfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double parameter(const GeneratorSpec& spec, const std::string& key, double fallback) {
  auto it = spec.parameters.find(key);
  return it == spec.parameters.end() ? fallback : it->second;
}

void check_parameters(const GeneratorSpec& spec, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : spec.parameters) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("invalid-parameter", "generator " + spec.name + " has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw ValidationError("invalid-parameter", "parameter '" + key + "' is not finite");
  }
}

std::vector<std::string> headers(int n, bool target) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back("x" + std::to_string(i));
  if (target) out.emplace_back("target");
  return out;
}

Dataset make(Eigen::MatrixXd data, std::optional<Eigen::VectorXd> targets) {
  Dataset d;
  d.columns = headers(static_cast<int>(data.cols()), targets.has_value());
  d.data = std::move(data);
  d.targets = std::move(targets);
  return d;
}

FeatureAtom mono(std::vector<int> e) { return FeatureAtom::monomial(std::move(e)); }

}  // namespace

const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names = {"gaussian-quadratic", "cubic",    "sincos",    "circle3d",
                                                 "circle-uniform",     "disc-rot", "killing4d", "hypercube10"};
  return names;
}

double disc_rot_value(double x, double y, int k) {
  double angle = std::atan2(x, y);
  if (angle < 0.0) angle += kTwoPi;
  return 1.0 / (1.0 + std::fmod(angle, kTwoPi / k));
}

Dataset generate(const GeneratorSpec& spec) {
  const auto pick = [&](long fallback) {
    if (spec.size < 0) throw ValidationError("invalid-parameter", "dataset size must be positive");
    return spec.size == 0 ? fallback : spec.size;
  };
  Rng rng(spec.seed);
  const std::string& name = spec.name;

  if (name == "gaussian-quadratic") {
    check_parameters(spec, {});
    const long N = pick(2000);
    Eigen::MatrixXd X(N, 2);
    Eigen::VectorXd t(N);
    for (long i = 0; i < N; ++i) {
      X(i, 0) = 1.0 + 2.0 * rng.normal();
      X(i, 1) = 1.0 + rng.normal();
      const double a = X(i, 0) - 1.0, b = X(i, 1) - 1.0;
      t[i] = a * a + 4.0 * b * b;
    }
    return make(std::move(X), std::move(t));
  }
  if (name == "cubic") {
    check_parameters(spec, {});
    const long N = pick(2000);
    Eigen::MatrixXd X(N, 2);
    Eigen::VectorXd t(N);
    for (long i = 0; i < N; ++i) {
      X(i, 0) = 2.0 * rng.normal();
      X(i, 1) = 2.0 * rng.normal();
      t[i] = X(i, 0) * X(i, 0) * X(i, 0) - X(i, 1) * X(i, 1);
    }
    return make(std::move(X), std::move(t));
  }
  if (name == "sincos") {
    check_parameters(spec, {});
    const long N = pick(2048);
    Eigen::MatrixXd X(N, 3);
    Eigen::VectorXd t(N);
    for (long i = 0; i < N; ++i) {
      X(i, 0) = rng.uniform(0.0, kTwoPi);
      X(i, 1) = rng.uniform(0.0, kTwoPi);
      X(i, 2) = std::sin(X(i, 0)) - std::cos(X(i, 1));
      t[i] = X(i, 2);
    }
    return make(std::move(X), std::move(t));
  }
  if (name == "circle3d") {
    check_parameters(spec, {});
    const long N = pick(2000);
    Eigen::MatrixXd X(N, 3);
    for (long i = 0; i < N; ++i) {
      double theta = std::fmod(rng.normal(), kTwoPi);
      if (theta < 0.0) theta += kTwoPi;
      X(i, 0) = std::cos(theta);
      X(i, 1) = std::sin(theta);
      X(i, 2) = 1.0;
    }
    return make(std::move(X), std::nullopt);
  }
  if (name == "circle-uniform") {
    check_parameters(spec, {});
    const long N = pick(2000);
    Eigen::MatrixXd X(N, 2);
    for (long i = 0; i < N; ++i) {
      const double theta = rng.uniform(0.0, kTwoPi);
      X(i, 0) = std::cos(theta);
      X(i, 1) = std::sin(theta);
    }
    return make(std::move(X), std::nullopt);
  }
  if (name == "disc-rot") {
    check_parameters(spec, {"k"});
    const double kd = parameter(spec, "k", 7.0);
    if (kd < 2.0 || kd != std::floor(kd)) throw ValidationError("invalid-parameter", "disc-rot needs an integer k >= 2");
    const int k = static_cast<int>(kd);
    const long N = pick(20000);
    Eigen::MatrixXd X(N, 2);
    Eigen::VectorXd t(N);
    for (long i = 0; i < N; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
      t[i] = disc_rot_value(X(i, 0), X(i, 1), k);
    }
    return make(std::move(X), std::move(t));
  }
  if (name == "killing4d") {
    check_parameters(spec, {});
    const long N = pick(4096);
    Eigen::MatrixXd X(N, 7);
    Eigen::VectorXd t(N);
    for (long i = 0; i < N; ++i) {
      const double u = rng.uniform(-1.0, 1.0), v = rng.uniform(-1.0, 1.0), w = rng.uniform(-1.0, 1.0);
      X.row(i) << u, v, w, u, v, u * u + v * v - w, 2.0 * u;
      t[i] = 9.0 * u * u + v * v + w;
    }
    return make(std::move(X), std::move(t));
  }
  if (name == "hypercube10") {
    check_parameters(spec, {});
    const long N = pick(65536);
    Eigen::MatrixXd X(N, 10);
    for (long i = 0; i < N; ++i) {
      const double t = rng.uniform(-2.0, 2.0), x = rng.uniform(-2.0, 2.0), y = rng.uniform(-2.0, 2.0),
                   z = rng.uniform(-2.0, 2.0);
      X.row(i) << t, x, y, z, 2.0 * t, x * x + y * y - t, 4.0, 0.0, t - z, 1.0;
    }
    return make(std::move(X), std::nullopt);
  }
  throw ValidationError("unknown-generator", "unknown generator '" + name + "'");
}

std::vector<BasisVectorField> killing4d_basis() {
  // Atoms over (u, v, w).
  const FeatureAtom one = mono({0, 0, 0}), u = mono({1, 0, 0}), v = mono({0, 1, 0}), w = mono({0, 0, 1});
  const FeatureAtom u2 = mono({2, 0, 0}), v2 = mono({0, 2, 0}), u3 = mono({3, 0, 0}), v3 = mono({0, 3, 0});
  const FeatureAtom uv2 = mono({1, 2, 0}), u2v = mono({2, 1, 0}), uw = mono({1, 0, 1}), vw = mono({0, 1, 1});
  const FeatureAtom uv = mono({1, 1, 0});
  using Terms = std::vector<FunctionTerm>;
  const Terms zero;
  const Terms q = {{1, u2}, {1, v2}, {-1, w}};

  std::vector<BasisVectorField> out(6);
  for (auto& f : out) f.dimension = 3;
  out[0].components = {q, zero, Terms{{2, u3}, {2, uv2}, {-2, uw}, {5, u}}};
  out[1].components = {zero, q, Terms{{2, u2v}, {2, v3}, {-2, vw}, {1, v}}};
  out[2].components = {zero, zero, Terms{{1, one}}};
  out[3].components = {Terms{{-1, v}}, Terms{{5, u}}, Terms{{8, uv}}};
  out[4].components = {zero, Terms{{1, one}}, Terms{{2, v}}};
  out[5].components = {Terms{{1, one}}, zero, Terms{{2, u}}};
  return out;
}

}  // namespace symfield
