#include <doctest.h>

#include <cmath>
#include <numbers>

#include "symfield/datasets.hpp"
#include "symfield/errors.hpp"

using namespace symfield;

TEST_CASE("every generator is deterministic and shaped consistently") {
  for (const auto& name : generator_names()) {
    const long N = name == "hypercube10" ? 500 : 200;
    const Dataset a = generate({name, N, 42, {}});
    const Dataset b = generate({name, N, 42, {}});
    const Dataset c = generate({name, N, 43, {}});
    CHECK(a.data.rows() == N);
    CHECK((a.data.array() == b.data.array()).all());
    CHECK_FALSE((a.data.array() == c.data.array()).all());
    CHECK(a.data.allFinite());
    CHECK(static_cast<long>(a.columns.size()) == a.data.cols() + (a.targets ? 1 : 0));
    if (a.targets) {
      CHECK(a.targets->size() == N);
      CHECK((a.targets->array() == b.targets->array()).all());
    }
  }
}

TEST_CASE("default sizes") {
  CHECK(generate({"gaussian-quadratic", 0, 1, {}}).data.rows() == 2000);
  CHECK(generate({"disc-rot", 0, 1, {}}).data.rows() == 20000);
  CHECK(generate({"killing4d", 0, 1, {}}).data.rows() == 4096);
}

TEST_CASE("gaussian-quadratic targets are definitional") {
  const Dataset d = generate({"gaussian-quadratic", 3, 5, {}});
  for (int i = 0; i < 3; ++i) {
    const double x = d.data(i, 0), y = d.data(i, 1);
    CHECK((*d.targets)[i] == (x - 1) * (x - 1) + 4 * (y - 1) * (y - 1));
  }
}

TEST_CASE("gaussian-quadratic moments") {
  const Dataset d = generate({"gaussian-quadratic", 20000, 6, {}});
  const Eigen::RowVectorXd mean = d.data.colwise().mean();
  const Eigen::MatrixXd c = d.data.rowwise() - mean;
  const Eigen::MatrixXd cov = c.transpose() * c / (d.data.rows() - 1.0);
  CHECK(mean[0] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(mean[1] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(cov(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(cov(0, 1)) <= 0.05);
}

TEST_CASE("cubic and sincos targets") {
  const Dataset c = generate({"cubic", 100, 7, {}});
  for (int i = 0; i < 100; ++i)
    CHECK((*c.targets)[i] == doctest::Approx(std::pow(c.data(i, 0), 3) - c.data(i, 1) * c.data(i, 1)).epsilon(1e-14));
  const Dataset s = generate({"sincos", 100, 7, {}});
  REQUIRE(s.data.cols() == 3);
  for (int i = 0; i < 100; ++i) {
    CHECK(s.data(i, 0) >= 0.0);
    CHECK(s.data(i, 0) < 2 * std::numbers::pi);
    CHECK(s.data(i, 2) == doctest::Approx(std::sin(s.data(i, 0)) - std::cos(s.data(i, 1))).epsilon(1e-14));
  }
}

TEST_CASE("circle3d lies on the unit circle at z = 1") {
  const Dataset d = generate({"circle3d", 0, 8, {}});
  for (Eigen::Index i = 0; i < d.data.rows(); ++i) {
    CHECK(std::abs(d.data(i, 0) * d.data(i, 0) + d.data(i, 1) * d.data(i, 1) - 1) <= 1e-12);
    CHECK(d.data(i, 2) == 1.0);
  }
}

TEST_CASE("hypercube10 constraints") {
  const Dataset d = generate({"hypercube10", 1000, 9, {}});
  for (Eigen::Index i = 0; i < d.data.rows(); ++i) {
    const auto r = d.data.row(i);
    CHECK(r[4] == 2 * r[0]);
    CHECK(r[5] == r[1] * r[1] + r[2] * r[2] - r[0]);
    CHECK(r[6] == 4.0);
    CHECK(r[7] == 0.0);
    CHECK(r[8] == r[0] - r[3]);
    CHECK(r[9] == 1.0);
  }
}

TEST_CASE("killing4d embedding") {
  const Dataset d = generate({"killing4d", 100, 10, {}});
  REQUIRE(d.data.cols() == 7);
  for (Eigen::Index i = 0; i < d.data.rows(); ++i) {
    const double u = d.data(i, 0), v = d.data(i, 1), w = d.data(i, 2);
    CHECK(d.data(i, 5) == u * u + v * v - w);
    CHECK(d.data(i, 6) == 2 * u);
    CHECK((*d.targets)[i] == 9 * u * u + v * v + w);
  }
}

TEST_CASE("killing basis annihilates 9u^2 + v^2 + w through its fourth field") {
  const auto basis = killing4d_basis();
  REQUIRE(basis.size() == 6);
  const double h = 1e-6;
  for (const Eigen::Vector3d p : {Eigen::Vector3d(0.3, -0.2, 0.5), Eigen::Vector3d(-0.7, 0.4, 0.1)}) {
    const auto f = [](const Eigen::Vector3d& x) { return 9 * x[0] * x[0] + x[1] * x[1] + x[2]; };
    Eigen::Vector3d grad;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d a = p, b = p;
      a[k] += h;
      b[k] -= h;
      grad[k] = (f(a) - f(b)) / (2 * h);
    }
    CHECK(std::abs(grad.dot(basis[3].eval(p))) <= 1e-7);
    int nonzero = 0;
    for (int j = 0; j < 6; ++j)
      if (j != 3 && std::abs(grad.dot(basis[j].eval(p))) > 1e-6) ++nonzero;
    CHECK(nonzero >= 1);
  }
}

TEST_CASE("disc-rot sector function") {
  const double s = 2 * std::numbers::pi / 7;
  CHECK(disc_rot_value(0.0, 1.0, 7) == 1.0);
  CHECK(disc_rot_value(std::sin(0.5), std::cos(0.5), 7) == doctest::Approx(1 / 1.5).epsilon(1e-14));
  CHECK(disc_rot_value(std::sin(s + 0.5), std::cos(s + 0.5), 7) == doctest::Approx(1 / 1.5).epsilon(1e-12));
  // y = 0: angle pi / 2 for x > 0 and 3 pi / 2 for x < 0.
  CHECK(disc_rot_value(1.0, 0.0, 7) == doctest::Approx(1 / (1 + std::fmod(std::numbers::pi / 2, s))).epsilon(1e-14));
  CHECK(disc_rot_value(-1.0, 0.0, 7) == doctest::Approx(1 / (1 + std::fmod(1.5 * std::numbers::pi, s))).epsilon(1e-14));
  const Dataset d = generate({"disc-rot", 100, 11, {{"k", 5}}});
  for (int i = 0; i < 100; ++i) CHECK((*d.targets)[i] == disc_rot_value(d.data(i, 0), d.data(i, 1), 5));
}

TEST_CASE("generator errors") {
  CHECK_THROWS_AS(generate({"nope", 10, 1, {}}), ValidationError);
  CHECK_THROWS_AS(generate({"disc-rot", 10, 1, {{"k", 1}}}), ValidationError);
  CHECK_THROWS_AS(generate({"disc-rot", 10, 1, {{"k", 2.5}}}), ValidationError);
  CHECK_THROWS_AS(generate({"cubic", 10, 1, {{"k", 3}}}), ValidationError);
  CHECK_THROWS_AS(generate({"cubic", -1, 1, {}}), ValidationError);
}
