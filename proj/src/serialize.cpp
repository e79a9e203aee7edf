#include "symfield/serialize.hpp"

#include <filesystem>
#include <fstream>

#include "symfield/csv.hpp"
#include "symfield/errors.hpp"

namespace symfield {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ValidationError("invalid-json", what); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing key '") + key + "'");
  return j.at(key);
}

double number(const Json& j) {
  if (!j.is_number()) bad("expected a number");
  return j.get<double>();
}

int integer(const Json& j) {
  if (!j.is_number_integer()) bad("expected an integer");
  return j.get<int>();
}

void expect_type(const Json& j, const char* type) {
  if (j.is_object() && j.contains("type") && j.at("type") != type)
    bad(std::string("expected a model of type '") + type + "'");
}

Json terms_to_json(const std::vector<FunctionTerm>& terms) {
  Json out = Json::array();
  for (const auto& t : terms) out.push_back({{"coefficient", t.coefficient}, {"atom", to_json(t.atom)}});
  return out;
}

std::vector<FunctionTerm> terms_from_json(const Json& j, int dimension) {
  if (!j.is_array()) bad("terms must be an array");
  std::vector<FunctionTerm> out;
  for (const auto& t : j) out.push_back({number(require(t, "coefficient")), atom_from_json(require(t, "atom"), dimension)});
  return out;
}

}  // namespace

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) bad("expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i]);
  return v;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(to_json(Eigen::VectorXd(m.col(c))));
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) bad("expected a non-empty array of columns");
  const auto rows = static_cast<Eigen::Index>(vector_from_json(j[0]).size());
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    const Eigen::VectorXd col = vector_from_json(j[c]);
    if (col.size() != rows) bad("columns have different lengths");
    m.col(static_cast<Eigen::Index>(c)) = col;
  }
  return m;
}

Json to_json(const FeatureAtom& atom) {
  switch (atom.kind()) {
    case AtomKind::monomial: return {{"kind", "monomial"}, {"exponents", atom.exponents()}};
    case AtomKind::cosine: return {{"kind", "cos"}, {"axis", atom.axis()}};
    case AtomKind::sine: return {{"kind", "sin"}, {"axis", atom.axis()}};
    case AtomKind::product:
      return {{"kind", "product-extension"},
              {"multiplier", to_json(atom.multiplier())},
              {"function", terms_to_json(atom.function())}};
  }
  return {};
}

FeatureAtom atom_from_json(const Json& j, int dimension) {
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "monomial") {
    const auto& e = require(j, "exponents");
    if (!e.is_array()) bad("exponents must be an array");
    std::vector<int> exps;
    for (const auto& x : e) exps.push_back(integer(x));
    if (static_cast<int>(exps.size()) != dimension) bad("exponent vector length differs from basis dimension");
    return FeatureAtom::monomial(std::move(exps));
  }
  if (kind == "cos") return FeatureAtom::cosine(dimension, integer(require(j, "axis")));
  if (kind == "sin") return FeatureAtom::sine(dimension, integer(require(j, "axis")));
  if (kind == "product-extension")
    return FeatureAtom::product(atom_from_json(require(j, "multiplier"), dimension),
                                terms_from_json(require(j, "function"), dimension));
  bad("unknown atom kind '" + kind + "'");
}

Json to_json(const FeatureBasis& basis) {
  Json atoms = Json::array();
  for (const auto& a : basis.atoms()) atoms.push_back(to_json(a));
  return {{"dimension", basis.dimension()}, {"atoms", atoms}};
}

FeatureBasis basis_from_json(const Json& j) {
  const int n = integer(require(j, "dimension"));
  const auto& atoms = require(j, "atoms");
  if (!atoms.is_array()) bad("atoms must be an array");
  std::vector<FeatureAtom> out;
  for (const auto& a : atoms) out.push_back(atom_from_json(a, n));
  return FeatureBasis(n, std::move(out));
}

Json to_json(const OptimizerConfig& c) {
  return {{"algorithm", to_string(c.algorithm)},   {"loss", to_string(c.loss)},
          {"learning_rate", c.learning_rate},       {"epochs", c.epochs},
          {"seed", c.seed},                         {"adagrad_epsilon", c.adagrad_epsilon}};
}

OptimizerConfig optimizer_config_from_json(const Json& j, OptimizerConfig c) {
  if (!j.is_object()) bad("optimizer config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "algorithm") c.algorithm = parse_algorithm(value.get<std::string>());
    else if (key == "loss") c.loss = parse_loss(value.get<std::string>());
    else if (key == "learning_rate") c.learning_rate = number(value);
    else if (key == "epochs") c.epochs = integer(value);
    else if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) bad("seed must be a nonnegative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "adagrad_epsilon") c.adagrad_epsilon = number(value);
  }
  c.validate();
  return c;
}

Json to_json(const OptimizationTrace& trace, bool include_losses) {
  Json out = {{"epochs", trace.loss.size()}, {"final_loss", trace.final_loss}};
  if (include_losses) out["loss"] = trace.loss;
  return out;
}

Json to_json(const ScalarFunctionModel& m) {
  return {{"type", "scalar"}, {"basis", to_json(m.basis)}, {"coefficients", to_json(m.coefficients)}};
}

ScalarFunctionModel scalar_model_from_json(const Json& j) {
  expect_type(j, "scalar");
  ScalarFunctionModel m{basis_from_json(require(j, "basis")), vector_from_json(require(j, "coefficients"))};
  if (m.coefficients.size() != m.basis.size()) bad("coefficient count differs from basis size");
  return m;
}

Json to_json(const LevelSetModel& m) {
  return {{"type", "levelset"}, {"basis", to_json(m.basis)}, {"W", matrix_to_json(m.W)}};
}

LevelSetModel levelset_model_from_json(const Json& j) {
  expect_type(j, "levelset");
  LevelSetModel m{basis_from_json(require(j, "basis")), matrix_from_json(require(j, "W"))};
  if (m.W.rows() != m.basis.size()) bad("W row count differs from basis size");
  return m;
}

Json to_json(const KdeModel& m, const std::string& centers_file) {
  return {{"type", "kde"},
          {"dimension", m.dimension()},
          {"bandwidth", m.bandwidth},
          {"count", m.centers.rows()},
          {"dimension_warning", m.dimension_warning},
          {"centers_file", centers_file}};
}

KdeModel kde_model_from_json(const Json& j, const std::string& base_dir) {
  expect_type(j, "kde");
  const int n = integer(require(j, "dimension"));
  std::filesystem::path file = require(j, "centers_file").get<std::string>();
  if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
  const Table t = read_csv_file(file.string());
  if (t.values.cols() != n + 1) bad("centers file must hold n coordinate columns and a weight column");
  return kde_fit(t.values.leftCols(n), Eigen::VectorXd(t.values.col(n)), number(require(j, "bandwidth")));
}

Json to_json(const ElbowTrace& trace) {
  Json pts = Json::array();
  for (const auto& p : trace.points) pts.push_back({{"components", p.component_count}, {"final_loss", p.final_loss}});
  return {{"points", pts}, {"selected", trace.selected}, {"no_elbow", trace.no_elbow}};
}

Json to_json(const VectorFieldModel& m) {
  Json cols = Json::array();
  for (int j = 0; j < m.fields(); ++j) {
    Json blocks = Json::array();
    for (int i = 0; i < m.dimension(); ++i) blocks.push_back(to_json(m.block(j, i)));
    cols.push_back(blocks);
  }
  return {{"type", "vector-field"}, {"dimension", m.dimension()}, {"basis", to_json(m.basis)}, {"columns", cols}};
}

VectorFieldModel vector_field_from_json(const Json& j) {
  expect_type(j, "vector-field");
  VectorFieldModel m;
  m.basis = basis_from_json(require(j, "basis"));
  const int n = m.basis.dimension(), sz = m.basis.size();
  if (j.contains("dimension") && integer(j.at("dimension")) != n) bad("field dimension differs from basis");
  const auto& cols = require(j, "columns");
  if (!cols.is_array() || cols.empty()) bad("columns must be a non-empty array");
  m.blocks.resize(static_cast<Eigen::Index>(n) * sz, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (!cols[c].is_array() || static_cast<int>(cols[c].size()) != n) bad("each column needs one block per dimension");
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd b = vector_from_json(cols[c][i]);
      if (b.size() != sz) bad("block length differs from basis size");
      m.blocks.block(static_cast<Eigen::Index>(i) * sz, static_cast<Eigen::Index>(c), sz, 1) = b;
    }
  }
  return m;
}

Json to_json(const BasisVectorField& f) {
  Json comps = Json::array();
  for (const auto& c : f.components) comps.push_back(terms_to_json(c));
  return {{"type", "basis-field"}, {"dimension", f.dimension}, {"components", comps}};
}

BasisVectorField basis_field_from_json(const Json& j) {
  expect_type(j, "basis-field");
  BasisVectorField f;
  f.dimension = integer(require(j, "dimension"));
  if (f.dimension < 1) bad("field dimension must be positive");
  const auto& comps = require(j, "components");
  if (!comps.is_array() || static_cast<int>(comps.size()) != f.dimension) bad("need one component per dimension");
  for (const auto& c : comps) f.components.push_back(terms_from_json(c, f.dimension));
  return f;
}

std::vector<BasisVectorField> basis_fields_from_json(const Json& j) {
  std::vector<BasisVectorField> out;
  if (j.is_array()) {
    for (const auto& f : j) out.push_back(basis_field_from_json(f));
  } else if (j.is_object() && j.contains("fields")) {
    return basis_fields_from_json(j.at("fields"));
  } else if (j.is_object() && j.value("type", "") == "vector-field") {
    const VectorFieldModel m = vector_field_from_json(j);
    for (int c = 0; c < m.fields(); ++c) out.push_back(m.field(c));
  } else {
    out.push_back(basis_field_from_json(j));
  }
  if (out.empty()) bad("no fields given");
  return out;
}

BasisVectorField any_field_from_json(const Json& j, int index) {
  const auto fields = basis_fields_from_json(j);
  if (index < 0 || index >= static_cast<int>(fields.size())) bad("field index out of range");
  return fields[static_cast<std::size_t>(index)];
}

Json to_json(const Expression& e) {
  using Op = Expression::Op;
  switch (e.op()) {
    case Op::constant: return e.constant_value();
    case Op::parameter: return {{"param", e.parameter_index()}};
    default: break;
  }
  static const char* names[] = {"const", "param", "add", "sub", "mul", "div", "neg", "sin", "cos", "sqrt"};
  Json args = Json::array();
  for (const auto& a : e.args()) args.push_back(to_json(a));
  return {{"op", names[static_cast<int>(e.op())]}, {"args", args}};
}

Expression expression_from_json(const Json& j) {
  using Op = Expression::Op;
  if (j.is_number()) return Expression::constant(j.get<double>());
  if (j.is_object() && j.contains("param")) return Expression::parameter(integer(j.at("param")));
  const std::string op = require(j, "op").get<std::string>();
  const auto& args = require(j, "args");
  if (!args.is_array()) bad("args must be an array");
  const auto arg = [&](std::size_t i) {
    if (i >= args.size()) bad("operator '" + op + "' is missing an argument");
    return expression_from_json(args[i]);
  };
  const std::pair<const char*, Op> unary[] = {{"neg", Op::neg}, {"sin", Op::sin}, {"cos", Op::cos}, {"sqrt", Op::sqrt}};
  const std::pair<const char*, Op> binary[] = {{"add", Op::add}, {"sub", Op::sub}, {"mul", Op::mul}, {"div", Op::div}};
  for (const auto& [name, o] : unary)
    if (op == name) {
      if (args.size() != 1) bad("operator '" + op + "' takes one argument");
      return Expression::unary(o, arg(0));
    }
  for (const auto& [name, o] : binary)
    if (op == name) {
      if (args.size() != 2) bad("operator '" + op + "' takes two arguments");
      return Expression::binary(o, arg(0), arg(1));
    }
  bad("unknown operator '" + op + "'");
}

ParametricFamily family_from_json(const Json& j) {
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "reflection-2d") return ParametricFamily::reflection_2d();
  if (kind == "rotation-2d") return ParametricFamily::rotation_2d(number(require(j, "lo")), number(require(j, "hi")));
  if (kind == "user-linear") {
    const int n = integer(require(j, "dimension"));
    std::vector<Expression> entries;
    const auto& e = require(j, "entries");
    if (!e.is_array()) bad("entries must be an array");
    for (const auto& x : e) entries.push_back(expression_from_json(x));
    const std::string constraint = j.value("constraint", "unit-norm");
    if (constraint == "unit-norm")
      return ParametricFamily::user_linear(n, std::move(entries), ParameterConstraint::unit_norm);
    if (constraint == "interval")
      return ParametricFamily::user_linear(n, std::move(entries), ParameterConstraint::interval, number(require(j, "lo")),
                                           number(require(j, "hi")));
    bad("unknown constraint '" + constraint + "'");
  }
  bad("unknown family kind '" + kind + "'");
}

Json to_json(const IntegrationDomain& d) {
  return {{"lower", to_json(d.lower)}, {"upper", to_json(d.upper)}, {"degenerate", d.degenerate}};
}

Json to_json(const SimilarityReport& r) {
  Json out = {{"per_component", to_json(r.per_component)},
              {"aggregate", r.aggregate},
              {"method", to_string(r.method)},
              {"domain", to_json(r.domain)}};
  if (r.mc_samples) out["mc_samples"] = *r.mc_samples;
  if (r.mc_seed) out["mc_seed"] = *r.mc_seed;
  out["notes"] = r.notes;
  return out;
}

Json to_json(const SmoothMapModel& map) {
  Json comps = Json::array();
  for (const auto& c : map.components) comps.push_back(to_json(c));
  return {{"type", "map"}, {"components", comps}};
}

SmoothMapModel map_from_json(const Json& j) {
  expect_type(j, "map");
  SmoothMapModel m;
  const auto& comps = require(j, "components");
  if (!comps.is_array() || comps.empty()) bad("map needs at least one component");
  for (const auto& c : comps) m.components.push_back(scalar_model_from_json(c));
  for (const auto& c : m.components)
    if (c.dimension() != m.input_dimension()) bad("map components have different input dimensions");
  return m;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("io-error", "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid-json", path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("io-error", "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace symfield
