#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include "support.hpp"
#include "symfield/csv.hpp"
#include "symfield/errors.hpp"
#include "symfield/numfmt.hpp"
#include "symfield/random.hpp"
#include "symfield/serialize.hpp"

using namespace symfield;
using symtest::mono;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

FeatureBasis mixed_basis() {
  std::vector<FeatureAtom> atoms = monomial_basis(2, 2, true).atoms();
  for (auto& a : trig_atoms(2)) atoms.push_back(a);
  atoms.push_back(FeatureAtom::product(FeatureAtom::monomial({1, 0}), {mono(1, {0, 1}), mono(-1, {0, 0})}));
  return FeatureBasis(2, atoms);
}

}  // namespace

TEST_CASE("number formatting round-trips bit for bit") {
  Rng rng(1);
  std::vector<double> values = {0.0, -0.0, 1.0, 0.1, 1e-310, std::numeric_limits<double>::max(),
                                std::numeric_limits<double>::denorm_min(), -123456.789};
  for (int i = 0; i < 2000; ++i) {
    std::uint64_t bits = rng.next();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (std::isfinite(v)) values.push_back(v);
  }
  for (double v : values) CHECK(same_bits(parse_double(format_double(v)), v));
  CHECK(parse_double(" +2.5 ") == 2.5);
  CHECK_THROWS_AS(parse_double("1.5x"), ValidationError);
  CHECK_THROWS_AS(parse_double(""), ValidationError);
}

TEST_CASE("CSV round trip") {
  Rng rng(2);
  Table t{{"a", "b", "c"}, normal_matrix(rng, 50, 3) * 1e3};
  t.values(0, 0) = 1e-300;
  t.values(1, 1) = -0.0;
  std::stringstream ss;
  write_csv(ss, t);
  const Table back = read_csv(ss);
  CHECK(back.header == t.header);
  REQUIRE(back.values.rows() == 50);
  for (Eigen::Index i = 0; i < 50; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(same_bits(back.values(i, j), t.values(i, j)));
  CHECK(back.column("b") == 1);
  CHECK(back.column("z") == -1);

  std::stringstream bad("x,y\n1,2\n3\n");
  try {
    read_csv(bad);
    FAIL("expected invalid-csv");
  } catch (const ValidationError& e) {
    CHECK(e.code() == "invalid-csv");
  }
  std::stringstream garbage("x\nabc\n");
  CHECK_THROWS_AS(read_csv(garbage), ValidationError);
}

TEST_CASE("matrices are stored as lists of columns") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Json j = matrix_to_json(m);
  CHECK(j.dump() == "[[1.0,4.0],[2.0,5.0],[3.0,6.0]]");
  CHECK(matrix_from_json(j) == m);
}

TEST_CASE("bases and models round trip") {
  const FeatureBasis b = mixed_basis();
  CHECK(basis_from_json(to_json(b)) == b);

  Rng rng(3);
  const ScalarFunctionModel s{b, normal_matrix(rng, b.size(), 1)};
  const ScalarFunctionModel s2 = scalar_model_from_json(to_json(s));
  CHECK(s2.basis == b);
  CHECK(s2.coefficients == s.coefficients);
  CHECK(to_json(s)["type"] == "scalar");

  const LevelSetModel l{monomial_basis(3, 2, true), random_orthonormal(10, 2, 4)};
  const LevelSetModel l2 = levelset_model_from_json(to_json(l));
  CHECK(l2.basis == l.basis);
  CHECK(l2.W == l.W);

  const VectorFieldModel v{monomial_basis(2, 1, true), normal_matrix(rng, 6, 2)};
  const VectorFieldModel v2 = vector_field_from_json(to_json(v));
  CHECK(v2.basis == v.basis);
  CHECK(v2.blocks == v.blocks);
  CHECK(any_field_from_json(to_json(v), 1).eval(Eigen::Vector2d(0.3, 0.4)).isApprox(v.eval(1, Eigen::Vector2d(0.3, 0.4))));
}

TEST_CASE("explicit fields round trip") {
  const BasisVectorField f = symtest::field({{mono(-1, {0, 1}), {2.0, FeatureAtom::sine(2, 0)}}, {mono(1, {1, 0})}});
  const BasisVectorField g = basis_field_from_json(to_json(f));
  CHECK(g.dimension == 2);
  CHECK(g.components == f.components);
  const auto list = basis_fields_from_json(Json::array({to_json(f), to_json(f)}));
  CHECK(list.size() == 2);
  const auto wrapped = basis_fields_from_json(Json{{"fields", Json::array({to_json(f)})}});
  CHECK(wrapped.size() == 1);
}

TEST_CASE("optimizer config keys") {
  const Json j = Json::parse(R"({"algorithm":"riemannian-sgd","loss":"mean-squared","learning_rate":0.5})");
  const OptimizerConfig c = optimizer_config_from_json(j);
  CHECK(c.algorithm == Algorithm::riemannian_sgd);
  CHECK(c.loss == LossKind::mean_squared);
  CHECK(c.learning_rate == 0.5);
  CHECK(c.epochs == OptimizerConfig{}.epochs);
  const OptimizerConfig back = optimizer_config_from_json(to_json(c));
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.algorithm == c.algorithm);
}

TEST_CASE("KDE models keep their centers beside the JSON") {
  const auto dir = std::filesystem::temp_directory_path() / "symfield_serialize_test";
  std::filesystem::create_directories(dir);
  Rng rng(5);
  KdeModel m;
  m.centers = normal_matrix(rng, 20, 2);
  m.weights = normal_matrix(rng, 20, 1).cwiseAbs();
  m.bandwidth = 0.37;
  const Json j = to_json(m, "centers.csv");
  Table t{{"x1", "x2", "weight"}, Eigen::MatrixXd(20, 3)};
  t.values << m.centers, m.weights;
  write_csv_file((dir / "centers.csv").string(), t);
  const KdeModel back = kde_model_from_json(j, dir.string());
  CHECK(back.bandwidth == m.bandwidth);
  CHECK(back.centers == m.centers);
  CHECK(back.weights == m.weights);
  std::filesystem::remove_all(dir);
}

TEST_CASE("expressions and families") {
  const Json e = Json::parse(R"({"op":"mul","args":[2,{"op":"cos","args":[{"param":0}]}]})");
  const Expression x = expression_from_json(e);
  CHECK(x.eval(Eigen::VectorXd::Constant(1, 0.5)) == doctest::Approx(2 * std::cos(0.5)));
  CHECK(expression_from_json(to_json(x)).eval(Eigen::VectorXd::Constant(1, 0.5)) == x.eval(Eigen::VectorXd::Constant(1, 0.5)));
  CHECK_THROWS_AS(expression_from_json(Json::parse(R"({"op":"tan","args":[1]})")), ValidationError);

  const ParametricFamily r = family_from_json(Json::parse(R"({"kind":"rotation-2d","lo":0.5,"hi":6})"));
  CHECK(r.kind == FamilyKind::rotation_2d);
  CHECK(r.lo == 0.5);
  const ParametricFamily u = family_from_json(Json::parse(
      R"({"kind":"user-linear","dimension":1,"entries":[{"param":0}],"constraint":"interval","lo":-1,"hi":1})"));
  CHECK(u.kind == FamilyKind::user_linear);
  CHECK(u.matrix(Eigen::VectorXd::Constant(1, 0.25))(0, 0) == 0.25);
  CHECK_THROWS_AS(family_from_json(Json::parse(R"({"kind":"shear"})")), ValidationError);
}

TEST_CASE("maps round trip") {
  SmoothMapModel m;
  m.components.push_back({monomial_basis(2, 1, true), Eigen::Vector3d(1, 2, 3)});
  m.components.push_back({monomial_basis(2, 2, true), Eigen::VectorXd::LinSpaced(6, 0, 1)});
  const SmoothMapModel back = map_from_json(to_json(m));
  REQUIRE(back.output_dimension() == 2);
  CHECK(back.eval(Eigen::Vector2d(0.5, -1)) == m.eval(Eigen::Vector2d(0.5, -1)));
}

TEST_CASE("malformed documents are validation errors") {
  CHECK_THROWS_AS(basis_from_json(Json::parse(R"({"dimension":2,"atoms":[{"kind":"tan"}]})")), ValidationError);
  CHECK_THROWS_AS(scalar_model_from_json(Json::parse(R"({"type":"levelset"})")), ValidationError);
}
