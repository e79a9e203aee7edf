#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "symfield/csv.hpp"
#include "symfield/datasets.hpp"
#include "symfield/discrete.hpp"
#include "symfield/errors.hpp"
#include "symfield/geometry.hpp"
#include "symfield/kde.hpp"
#include "symfield/model_fit.hpp"
#include "symfield/numfmt.hpp"
#include "symfield/random.hpp"
#include "symfield/serialize.hpp"
#include "symfield/similarity.hpp"
#include "symfield/vfield.hpp"

namespace symfield::cli {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- helpers

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Eigen::VectorXd parse_vector(const std::string& s) {
  const auto items = split_names(s);
  if (items.empty()) throw ValidationError("invalid-argument", "empty number list");
  Eigen::VectorXd v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_double(items[i]);
  return v;
}

std::string base_dir(const std::string& path) {
  const fs::path p(path);
  return p.has_parent_path() ? p.parent_path().string() : std::string(".");
}

/// Selects named columns, or every column except `target` when none are named.
Eigen::MatrixXd select_columns(const Table& t, const std::string& names, const std::string& target = "target") {
  std::vector<int> idx;
  if (names.empty()) {
    for (int j = 0; j < static_cast<int>(t.header.size()); ++j)
      if (t.header[static_cast<std::size_t>(j)] != target) idx.push_back(j);
  } else {
    for (const auto& n : split_names(names)) {
      const int j = t.column(n);
      if (j < 0) throw ValidationError("unknown-column", "no column named '" + n + "'");
      idx.push_back(j);
    }
  }
  if (idx.empty()) throw ValidationError("invalid-argument", "no data columns selected");
  Eigen::MatrixXd m(t.values.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = t.values.col(idx[k]);
  return m;
}

Eigen::VectorXd target_column(const Table& t, const std::string& name) {
  const int j = t.column(name);
  if (j < 0) throw ValidationError("unknown-column", "no target column named '" + name + "'");
  return t.values.col(j);
}

FeatureBasis make_basis(int n, int degree, bool constant, bool trig) {
  if (degree < 0) throw ValidationError("invalid-argument", "degree must be nonnegative");
  std::vector<FeatureAtom> atoms = monomial_basis(n, degree, constant).atoms();
  if (trig)
    for (auto& a : trig_atoms(n)) atoms.push_back(a);
  if (atoms.empty()) throw ValidationError("invalid-argument", "the requested basis is empty");
  return FeatureBasis(n, std::move(atoms));
}

void emit_json(const Json& j, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << j.dump(2) << '\n';
  else
    write_json_file(path, j);
}

void emit_table(const Table& t, const std::string& path, std::ostream& out) {
  if (path.empty())
    write_csv(out, t);
  else
    write_csv_file(path, t);
}

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Optimizer settings shared by the fitting commands.
struct OptimizerFlags {
  std::string config_file;
  std::string algorithm, loss;
  std::optional<double> lr;
  std::optional<int> epochs;

  void attach(CLI::App* app, const std::string& prefix = "") {
    if (prefix.empty()) app->add_option("--config", config_file, "JSON optimizer config")->check(CLI::ExistingFile);
    app->add_option("--" + prefix + "algorithm", algorithm, "riemannian-sgd | riemannian-adagrad");
    app->add_option("--" + prefix + "loss", loss, "mean-absolute | mean-squared");
    app->add_option("--" + prefix + "lr", lr, "learning rate");
    app->add_option("--" + prefix + "epochs", epochs, "epochs");
  }

  OptimizerConfig apply(OptimizerConfig c) const {
    if (!algorithm.empty()) c.algorithm = parse_algorithm(algorithm);
    if (!loss.empty()) c.loss = parse_loss(loss);
    if (lr) c.learning_rate = *lr;
    if (epochs) c.epochs = *epochs;
    c.validate();
    return c;
  }
};

// Seed precedence: config file, then SYMFIELD_SEED, then an explicit --seed.
struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  OptimizerFlags opt;

  std::uint64_t resolve_seed(std::uint64_t fallback) const {
    if (seed) return *seed;
    if (const char* env = std::getenv("SYMFIELD_SEED"); env && *env) {
      std::uint64_t v = 0;
      const std::string s(env);
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ValidationError("invalid-seed", "SYMFIELD_SEED is not an unsigned integer");
      return v;
    }
    return fallback;
  }

  OptimizerConfig config() const {
    OptimizerConfig c;
    if (!opt.config_file.empty()) {
      Json j = read_json_file(opt.config_file);
      if (j.contains("optimizer")) j = j.at("optimizer");
      c = optimizer_config_from_json(j);
    }
    c = opt.apply(c);
    c.seed = resolve_seed(c.seed);
    return c;
  }
};

void attach_common(CLI::App* app, Common& c, bool optimizer) {
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--threads", c.threads, "worker threads for row-parallel stages")->check(CLI::PositiveNumber);
  if (optimizer) c.opt.attach(app);
}

GradientProvider load_provider(const std::string& path) {
  const Json j = read_json_file(path);
  const std::string type = j.value("type", "");
  if (type == "scalar") return {std::vector<ScalarFunctionModel>{scalar_model_from_json(j)}};
  if (type == "levelset") return {levelset_model_from_json(j)};
  if (type == "levelset-pipeline") return {levelset_model_from_json(j.at("model"))};
  if (type == "kde") return {kde_model_from_json(j, base_dir(path))};
  if (type == "invariants" || type == "map") {
    std::vector<ScalarFunctionModel> models;
    for (const auto& m : j.at(type == "map" ? "components" : "invariants")) models.push_back(scalar_model_from_json(m));
    return {models};
  }
  throw ValidationError("invalid-json", path + ": not a function model");
}

std::vector<ScalarFunctionModel> load_scalar_models(const std::string& path) {
  const Json j = read_json_file(path);
  const std::string type = j.value("type", "");
  std::vector<ScalarFunctionModel> out;
  if (type == "scalar") {
    out.push_back(scalar_model_from_json(j));
  } else if (type == "invariants") {
    for (const auto& m : j.at("invariants")) out.push_back(scalar_model_from_json(m));
  } else if (type == "levelset" || type == "levelset-pipeline") {
    const LevelSetModel m = levelset_model_from_json(type == "levelset" ? j : j.at("model"));
    for (int c = 0; c < m.components(); ++c) out.push_back(m.component(c));
  } else {
    throw ValidationError("invalid-json", path + ": expected scalar, invariant or level-set models");
  }
  return out;
}

Json elbow_json(const ElbowTrace& e, double ratio) {
  Json j = to_json(e);
  j["elbow_ratio"] = ratio;
  return j;
}

Json frame_json(const AffineFrame& f) {
  return {{"origin", to_json(f.origin)}, {"basis", matrix_to_json(f.basis)}};
}

// ---------------------------------------------------------------- commands

struct GenArgs {
  std::string name, out;
  long size = 0;
  std::vector<std::string> params;
};

int cmd_gen(const GenArgs& a, const Common& c, std::ostream& out) {
  GeneratorSpec spec{a.name, a.size, c.resolve_seed(0), {}};
  for (const auto& p : a.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ValidationError("invalid-argument", "parameters are written key=value");
    spec.parameters[p.substr(0, eq)] = parse_double(p.substr(eq + 1));
  }
  const Dataset d = generate(spec);
  Table t{d.columns, Eigen::MatrixXd(d.data.rows(), static_cast<Eigen::Index>(d.columns.size()))};
  t.values.leftCols(d.data.cols()) = d.data;
  if (d.targets) t.values.rightCols(1) = *d.targets;
  emit_table(t, a.out, out);
  if (!a.out.empty()) {
    Json params = Json::object();
    for (const auto& [k, v] : spec.parameters) params[k] = v;
    write_json_file(a.out + ".json", {{"generator", spec.name},
                                      {"size", d.data.rows()},
                                      {"seed", spec.seed},
                                      {"parameters", params},
                                      {"columns", d.columns}});
  }
  return 0;
}

struct FitFnArgs {
  std::string data, columns, target = "target", out;
  int degree = 2;
  bool trig = false, no_constant = false;
};

int cmd_fit_fn(const FitFnArgs& a, std::ostream& out) {
  const Table t = read_csv_file(a.data);
  const Eigen::MatrixXd X = select_columns(t, a.columns, a.target);
  const auto fit = fit_regression(X, target_column(t, a.target),
                                  make_basis(static_cast<int>(X.cols()), a.degree, !a.no_constant, a.trig));
  Json j = to_json(fit.model);
  j["rms_residual"] = fit.rms_residual;
  j["ridge_fallback"] = fit.ridge_fallback;
  emit_json(j, a.out, out);
  return 0;
}

struct FitLevelsetArgs {
  std::string data, columns, out, elbow_out, reduced_out;
  int degree = 1;
  bool trig = false;
  std::optional<int> components;
  std::optional<int> max_components;
  std::optional<int> affine_max;
  double elbow_ratio = 10.0;
  bool project_affine = false, extend_columns = false, affine_then_quadratic = false;
  OptimizerFlags affine_opt;
};

// Fixed k, or elbow over 1..k_max.
std::pair<LevelSetModel, Json> fit_stage(const Eigen::MatrixXd& X, const FeatureBasis& basis,
                                         std::optional<int> components, std::optional<int> k_max, double ratio,
                                         const OptimizerConfig& config) {
  if (components) {
    auto fit = fit_level_set(X, basis, *components, config);
    Json info = {{"components", *components}, {"final_loss", fit.final_loss}};
    return {std::move(fit.model), info};
  }
  const int plain = basis.without_artificial().size();
  const int K = k_max ? *k_max : std::max(1, std::min(plain - 1, static_cast<int>(X.cols())));
  auto e = select_components_elbow(X, basis, K, config, ratio);
  Json info = elbow_json(e, ratio);
  return {std::move(e.models[static_cast<std::size_t>(e.selected - 1)]), info};
}

int cmd_fit_levelset(FitLevelsetArgs a, const Common& c, std::ostream& out) {
  const Table t = read_csv_file(a.data);
  const Eigen::MatrixXd X = select_columns(t, a.columns);
  const int n = static_cast<int>(X.cols());
  const OptimizerConfig config = c.config();
  if (a.affine_then_quadratic) {
    a.project_affine = true;
    a.degree = 2;
  }
  if (a.project_affine && a.extend_columns)
    throw ValidationError("invalid-argument", "choose one of --project-affine and --extend-columns");

  if (!a.project_affine && !a.extend_columns) {
    auto [model, info] = fit_stage(X, make_basis(n, a.degree, true, a.trig), a.components, a.max_components,
                                   a.elbow_ratio, config);
    Json j = to_json(model);
    j["fit"] = info;
    emit_json(j, a.out, out);
    if (!a.elbow_out.empty()) write_json_file(a.elbow_out, info);
    return 0;
  }

  OptimizerConfig affine_config = a.affine_opt.apply(config);
  affine_config.seed = config.seed;
  const int affine_max = a.affine_max ? *a.affine_max : n - 1;
  auto [affine, affine_info] =
      fit_stage(X, make_basis(n, 1, true, false), std::nullopt, affine_max, a.elbow_ratio, affine_config);
  Json j = {{"type", "levelset-pipeline"},
            {"strategy", a.project_affine ? "project-affine" : "extend-columns"},
            {"affine", to_json(affine)},
            {"affine_elbow", affine_info}};
  OptimizerConfig second = config;
  second.seed = split_seed(config.seed, 1);

  if (a.project_affine) {
    const auto proj = project_onto_affine(X, affine);
    const int d = static_cast<int>(proj.reduced.cols());
    if (d < 1) throw ValidationError("invalid-argument", "the affine stage leaves no free coordinates");
    auto [model, info] =
        fit_stage(proj.reduced, make_basis(d, a.degree, true, a.trig), a.components, a.max_components, a.elbow_ratio, second);
    j["frame"] = frame_json(proj.frame);
    j["model"] = to_json(model);
    j["fit"] = info;
    if (!a.reduced_out.empty()) write_csv_file(a.reduced_out, Table{numbered("x", d), proj.reduced});
  } else {
    const FeatureBasis plain = make_basis(n, a.degree, true, a.trig);
    std::vector<ScalarFunctionModel> known;
    for (int k = 0; k < affine.components(); ++k) known.push_back(affine.component(k));
    const FeatureBasis extended = extend_degenerate_columns(plain, known, a.degree);
    auto [model, info] = fit_stage(X, extended, a.components, a.max_components, a.elbow_ratio, second);
    // Final model: the affine components re-expressed over the plain atoms, then the new ones.
    Eigen::MatrixXd W(plain.size(), affine.components() + model.components());
    for (int k = 0; k < affine.components(); ++k) W.col(k) = expand_onto(known[static_cast<std::size_t>(k)].terms(), plain);
    W.rightCols(model.components()) = model.W;
    j["model"] = to_json(LevelSetModel{plain, W});
    j["fit"] = info;
  }
  emit_json(j, a.out, out);
  if (!a.elbow_out.empty()) write_json_file(a.elbow_out, {{"affine", affine_info}, {"second", j["fit"]}});
  return 0;
}

struct FitKdeArgs {
  std::string data, columns, weights_column, out, bandwidth = "scott";
  double weight_power = 1.0;
};

int cmd_fit_kde(const FitKdeArgs& a, std::ostream& out) {
  if (a.out.empty()) throw ValidationError("invalid-argument", "fit-kde needs --out (centers are written next to it)");
  const Table t = read_csv_file(a.data);
  const Eigen::MatrixXd X = select_columns(t, a.columns, a.weights_column.empty() ? "target" : a.weights_column);
  std::optional<Eigen::VectorXd> w;
  if (!a.weights_column.empty()) w = target_column(t, a.weights_column).array().pow(a.weight_power).matrix();
  std::optional<double> h;
  if (a.bandwidth != "scott") h = parse_double(a.bandwidth);
  const KdeModel m = kde_fit(X, w, h);
  const std::string centers = fs::path(a.out).filename().string() + ".centers.csv";
  Table ct{numbered("x", X.cols()), Eigen::MatrixXd(X.rows(), X.cols() + 1)};
  ct.header.emplace_back("weight");
  ct.values.leftCols(X.cols()) = m.centers;
  ct.values.rightCols(1) = m.weights;
  write_csv_file((fs::path(base_dir(a.out)) / centers).string(), ct);
  Json j = to_json(m, centers);
  if (m.dimension_warning) j["warning"] = "kernel density estimates degrade above two dimensions";
  emit_json(j, a.out, out);
  return 0;
}

struct FindVfArgs {
  std::string model, data, columns, family, out;
  int degree = 1, fields = 1;
  bool escalate = false;
  double threshold = 1e-4;
};

int cmd_find_vf(const FindVfArgs& a, const Common& c, std::ostream& out) {
  const GradientProvider provider = load_provider(a.model);
  const Eigen::MatrixXd X = select_columns(read_csv_file(a.data), a.columns);
  const OptimizerConfig config = c.config();
  Json j;
  if (a.escalate) {
    const auto r = escalate_vector_fields(provider, X, a.fields, config, a.threshold, c.threads);
    j = to_json(r.fit.model);
    j["family"] = r.family;
    j["final_loss"] = r.fit.trace.final_loss;
    j["threshold_met"] = r.threshold_met;
    Json steps = Json::array();
    for (const auto& s : r.steps) steps.push_back({{"family", s.family}, {"final_loss", s.final_loss}});
    j["escalation"] = steps;
  } else {
    const int n = static_cast<int>(X.cols());
    const FeatureBasis basis = a.family.empty() ? make_basis(n, a.degree, true, false) : family_basis(a.family, n);
    const auto r = estimate_vector_fields(provider, X, basis, a.fields, config, c.threads);
    j = to_json(r.model);
    j["final_loss"] = r.trace.final_loss;
  }
  emit_json(j, a.out, out);
  return 0;
}

struct FindInvArgs {
  std::string fields, data, columns, out;
  int degree = 2, count = 1;
  std::optional<int> max_count;
  bool trig = false;
  double elbow_ratio = 10.0;
};

int cmd_find_invariants(const FindInvArgs& a, const Common& c, std::ostream& out) {
  const VectorFieldModel vf = to_vector_field_model(basis_fields_from_json(read_json_file(a.fields)));
  const Eigen::MatrixXd X = select_columns(read_csv_file(a.data), a.columns);
  const FeatureBasis basis = make_basis(static_cast<int>(X.cols()), a.degree, false, a.trig);
  const OptimizerConfig config = c.config();
  Json j = {{"type", "invariants"}};
  InvariantFit fit;
  if (a.max_count) {
    std::vector<double> losses;
    std::vector<InvariantFit> fits;
    for (int q = 1; q <= *a.max_count; ++q) {
      fits.push_back(estimate_invariants(vf, X, basis, q, config, c.threads));
      losses.push_back(fits.back().trace.final_loss);
    }
    const ElbowChoice e = select_elbow(losses, a.elbow_ratio);
    fit = std::move(fits[static_cast<std::size_t>(e.selected - 1)]);
    j["elbow"] = {{"losses", losses}, {"selected", e.selected}, {"no_elbow", e.no_elbow}};
  } else {
    fit = estimate_invariants(vf, X, basis, a.count, config, c.threads);
  }
  Json inv = Json::array();
  for (const auto& m : fit.invariants) inv.push_back(to_json(m));
  j["invariants"] = inv;
  j["final_loss"] = fit.trace.final_loss;
  j["correlation"] = matrix_to_json(fit.correlation);
  emit_json(j, a.out, out);
  return 0;
}

struct FlowParamArgs {
  std::string field, data, columns, out;
  int index = 0, degree = 2;
  bool trig = false;
  double threshold = 1e-3;
};

int cmd_flow_param(const FlowParamArgs& a, std::ostream& out) {
  const VectorFieldModel vf = to_vector_field_model({any_field_from_json(read_json_file(a.field), a.index)});
  const Eigen::MatrixXd X = select_columns(read_csv_file(a.data), a.columns);
  const auto r = estimate_flow_parameter(vf, X, make_basis(static_cast<int>(X.cols()), a.degree, false, a.trig),
                                         a.threshold);
  Json j = to_json(r.model);
  j["residual_rms"] = r.residual_rms;
  j["no_polynomial_flow_parameter"] = r.no_polynomial_flow_parameter;
  emit_json(j, a.out, out);
  return 0;
}

struct FlowArgs {
  std::string field, x0, out;
  int index = 0, steps = 100;
  double t = 1.0;
};

int cmd_flow(const FlowArgs& a, std::ostream& out) {
  const BasisVectorField f = any_field_from_json(read_json_file(a.field), a.index);
  const Eigen::MatrixXd traj = flow_integrate(f, parse_vector(a.x0), a.t, a.steps);
  Table tab{numbered("x", traj.cols()), Eigen::MatrixXd(traj.rows(), traj.cols() + 1)};
  tab.header.insert(tab.header.begin(), "t");
  for (Eigen::Index i = 0; i < traj.rows(); ++i) tab.values(i, 0) = a.t * static_cast<double>(i) / a.steps;
  tab.values.rightCols(traj.cols()) = traj;
  emit_table(tab, a.out, out);
  return 0;
}

struct SimArgs {
  std::string truth, estimate, data, columns, lower, upper, method = "auto", out;
  int truth_index = 0, estimate_index = 0;
  long mc_samples = 100000;
};

int cmd_sim(const SimArgs& a, const Common& c, std::ostream& out) {
  const BasisVectorField truth = any_field_from_json(read_json_file(a.truth), a.truth_index);
  const BasisVectorField estimate = any_field_from_json(read_json_file(a.estimate), a.estimate_index);
  IntegrationDomain domain;
  if (!a.data.empty()) {
    domain = domain_from_data(select_columns(read_csv_file(a.data), a.columns));
  } else if (!a.lower.empty() && !a.upper.empty()) {
    domain = {parse_vector(a.lower), parse_vector(a.upper), false};
  } else {
    throw ValidationError("invalid-argument", "sim needs --data or both --lower and --upper");
  }
  SimilarityOptions o{parse_similarity_method(a.method), a.mc_samples, c.resolve_seed(0)};
  emit_json(to_json(similarity(truth, estimate, domain, o)), a.out, out);
  return 0;
}

struct DiscreteArgs {
  std::string model, kde, data, columns, family = "reflection-2d", reference, out;
  std::optional<double> lo, hi, reference_angle;
  std::optional<int> reference_k;
  double theta_min = std::numbers::pi / 6.0;
  int grid = 64;
  double tie_tolerance = 0.5;
};

int cmd_discrete(const DiscreteArgs& a, const Common& c, std::ostream& out) {
  const Eigen::MatrixXd X = select_columns(read_csv_file(a.data), a.columns);
  DiscreteFitResult r;
  Json j;
  if (!a.kde.empty()) {
    const Json mj = read_json_file(a.kde);
    const KdeModel kde = kde_model_from_json(mj, base_dir(a.kde));
    DensityRotationOptions o;
    o.grid = a.grid;
    o.tie_tolerance = a.tie_tolerance;
    o.threads = c.threads;
    r = fit_density_rotation(kde, X, a.theta_min, o);
    j["family"] = "rotation-2d";
    j["interval"] = {a.theta_min, 2.0 * std::numbers::pi - a.theta_min};
    j["evaluations"] = r.evaluations;
  } else if (!a.model.empty()) {
    const ScalarFunctionModel f = scalar_model_from_json(read_json_file(a.model));
    ParametricFamily family;
    if (a.family == "reflection-2d") {
      family = ParametricFamily::reflection_2d();
    } else if (a.family == "rotation-2d") {
      family = ParametricFamily::rotation_2d(a.lo.value_or(a.theta_min), a.hi.value_or(2.0 * std::numbers::pi));
    } else {
      family = family_from_json(read_json_file(a.family));
    }
    r = fit_discrete(f, X, family, c.config());
    j["family"] = to_string(family.kind);
  } else {
    throw ValidationError("invalid-argument", "discrete needs --model or --kde");
  }
  j["parameters"] = to_json(r.parameters);
  j["final_loss"] = r.final_loss;
  j["excluded_region_active"] = r.excluded_region_active;
  std::optional<Eigen::Matrix3d> ref;
  if (!a.reference.empty()) {
    const Eigen::MatrixXd m = matrix_from_json(read_json_file(a.reference)).transpose();  // stored as rows
    if (m.rows() != 3 || m.cols() != 3) throw ValidationError("dimension-mismatch", "reference must be 3x3");
    ref = m;
  } else if (a.reference_angle) {
    ref = rotation_generator(*a.reference_angle);
  } else if (a.reference_k) {
    if (*a.reference_k < 1) throw ValidationError("invalid-argument", "--reference-k must be positive");
    ref = rotation_generator(2.0 * std::numbers::pi / *a.reference_k);
  }
  if (ref) {
    if (j["family"] != "rotation-2d") throw ValidationError("invalid-argument", "generator similarity needs a rotation fit");
    j["generator_similarity"] = similarity_matrix(r.parameters[0], *ref);
  }
  emit_json(j, a.out, out);
  return 0;
}

struct FitMapArgs {
  std::string data, source, image, out;
  int degree = 2;
};

int cmd_fit_map(const FitMapArgs& a, std::ostream& out) {
  const Table t = read_csv_file(a.data);
  if (a.source.empty() || a.image.empty()) throw ValidationError("invalid-argument", "fit-map needs --source and --image");
  const Eigen::MatrixXd U = select_columns(t, a.source), Y = select_columns(t, a.image);
  const MapFit fit = fit_map(U, Y, make_basis(static_cast<int>(U.cols()), a.degree, true, false));
  Json j = to_json(fit.map);
  j["rms_residuals"] = to_json(fit.rms_residuals);
  j["ridge_fallback"] = fit.ridge_fallback;
  emit_json(j, a.out, out);
  return 0;
}

struct PullbackArgs {
  std::string map, out;
  std::vector<std::string> points;
};

int cmd_pullback(const PullbackArgs& a, std::ostream& out) {
  const SmoothMapModel map = map_from_json(read_json_file(a.map));
  Json results = Json::array();
  for (const auto& p : a.points) {
    const Eigen::VectorXd u = parse_vector(p);
    const Eigen::MatrixXd g = pullback_metric(map, u);
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < g.rows(); ++r) rows.push_back(to_json(Eigen::VectorXd(g.row(r).transpose())));
    results.push_back({{"point", to_json(u)}, {"metric", rows}});
  }
  emit_json({{"type", "pullback"}, {"results", results}}, a.out, out);
  return 0;
}

struct KillingArgs {
  std::string basis, builtin, model, data, columns, out;
};

int cmd_killing(const KillingArgs& a, const Common& c, std::ostream& out) {
  std::vector<BasisVectorField> fields;
  if (!a.basis.empty())
    fields = basis_fields_from_json(read_json_file(a.basis));
  else if (a.builtin == "killing4d")
    fields = killing4d_basis();
  else
    throw ValidationError("invalid-argument", "killing needs --basis or --builtin killing4d");
  const ScalarFunctionModel f = scalar_model_from_json(read_json_file(a.model));
  const Eigen::MatrixXd X = select_columns(read_csv_file(a.data), a.columns);
  const auto r = basis_restricted_search(fields, f, X, c.config());
  emit_json({{"coefficients", to_json(r.coefficients)}, {"final_loss", r.trace.final_loss}}, a.out, out);
  return 0;
}

struct TransformArgs {
  std::string data, columns, invariants, flow_param, keep = "target", out;
  bool angle = false;
};

int cmd_transform(const TransformArgs& a, std::ostream& out) {
  const Table t = read_csv_file(a.data);
  const Eigen::MatrixXd X = select_columns(t, a.columns, a.keep);
  std::vector<ScalarFunctionModel> inv;
  if (!a.invariants.empty()) inv = load_scalar_models(a.invariants);
  if (!a.flow_param.empty() && a.angle) throw ValidationError("invalid-argument", "choose --flow-param or --angle");
  std::optional<ScalarFunctionModel> theta;
  if (!a.flow_param.empty()) theta = scalar_model_from_json(read_json_file(a.flow_param));
  if (a.angle && X.cols() != 2) throw ValidationError("dimension-mismatch", "--angle needs 2-D data");
  for (const auto& m : inv)
    if (m.dimension() != X.cols()) throw ValidationError("dimension-mismatch", "invariant dimension differs from data");
  if (theta && theta->dimension() != X.cols())
    throw ValidationError("dimension-mismatch", "flow parameter dimension differs from data");

  Table res;
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t q = 0; q < inv.size(); ++q) {
    res.header.push_back("h" + std::to_string(q + 1));
    cols.push_back(inv[q].values(X));
  }
  if (theta || a.angle) {
    res.header.emplace_back("theta");
    if (theta) {
      cols.push_back(theta->values(X));
    } else {
      Eigen::VectorXd ang(X.rows());
      for (Eigen::Index i = 0; i < X.rows(); ++i) ang[i] = std::atan2(X(i, 1), X(i, 0));
      cols.push_back(ang);
    }
  }
  if (const int k = t.column(a.keep); k >= 0 && a.columns.find(a.keep) == std::string::npos) {
    res.header.push_back(a.keep);
    cols.emplace_back(t.values.col(k));
  }
  if (cols.empty()) throw ValidationError("invalid-argument", "transform needs invariants, --flow-param or --angle");
  res.values.resize(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) res.values.col(static_cast<Eigen::Index>(k)) = cols[k];
  emit_table(res, a.out, out);
  return 0;
}

struct GridArgs {
  std::string model, lower, upper, out;
  int resolution = 50, component = 0;
};

int cmd_grid(const GridArgs& a, std::ostream& out) {
  const GradientProvider p = load_provider(a.model);
  const Eigen::VectorXd lo = parse_vector(a.lower), hi = parse_vector(a.upper);
  const int n = p.dimension();
  if (lo.size() != n || hi.size() != n) throw ValidationError("dimension-mismatch", "bounds must match the model dimension");
  if (a.resolution < 2) throw ValidationError("invalid-argument", "resolution must be at least 2");
  if (a.component < 0 || a.component >= p.components()) throw ValidationError("invalid-argument", "component out of range");
  long rows = 1;
  for (int d = 0; d < n; ++d) {
    rows *= a.resolution;
    if (rows > 50'000'000) throw ValidationError("invalid-argument", "grid too large");
  }
  Eigen::MatrixXd pts(rows, n);
  for (long r = 0; r < rows; ++r) {
    long idx = r;
    for (int d = n - 1; d >= 0; --d) {
      const long k = idx % a.resolution;
      idx /= a.resolution;
      pts(r, d) = lo[d] + (hi[d] - lo[d]) * static_cast<double>(k) / (a.resolution - 1);
    }
  }
  Eigen::VectorXd v;
  if (const auto* kde = std::get_if<KdeModel>(&p.source)) {
    v = kde_eval(*kde, pts);
  } else if (const auto* ls = std::get_if<LevelSetModel>(&p.source)) {
    v = ls->component(a.component).values(pts);
  } else {
    v = std::get<std::vector<ScalarFunctionModel>>(p.source)[static_cast<std::size_t>(a.component)].values(pts);
  }
  Table t{numbered("x", n), Eigen::MatrixXd(rows, n + 1)};
  t.header.emplace_back("value");
  t.values.leftCols(n) = pts;
  t.values.col(n) = v;
  emit_table(t, a.out, out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetry discovery for functions estimated from tabular data", "symfield"};
  app.require_subcommand(1);
  Common common;

  GenArgs gen;
  auto* s_gen = app.add_subcommand("gen", "generate a synthetic dataset");
  s_gen->add_option("--name", gen.name, "generator name")->required();
  s_gen->add_option("--size,-N", gen.size, "number of rows (0 = generator default)");
  s_gen->add_option("--param", gen.params, "generator parameter key=value");
  s_gen->add_option("--out,-o", gen.out, "output CSV (a .json sidecar is written next to it)");
  attach_common(s_gen, common, false);

  FitFnArgs fitfn;
  auto* s_fitfn = app.add_subcommand("fit-fn", "regress a target column on a feature basis");
  s_fitfn->add_option("--data", fitfn.data)->required();
  s_fitfn->add_option("--columns", fitfn.columns, "comma-separated input columns");
  s_fitfn->add_option("--target", fitfn.target, "target column");
  s_fitfn->add_option("--degree", fitfn.degree);
  s_fitfn->add_flag("--trig", fitfn.trig, "add sin/cos atoms");
  s_fitfn->add_flag("--no-constant", fitfn.no_constant);
  s_fitfn->add_option("--out,-o", fitfn.out);

  FitLevelsetArgs fitls;
  auto* s_fitls = app.add_subcommand("fit-levelset", "estimate a level set F(x) = 0 of the data");
  s_fitls->add_option("--data", fitls.data)->required();
  s_fitls->add_option("--columns", fitls.columns);
  s_fitls->add_option("--degree", fitls.degree);
  s_fitls->add_flag("--trig", fitls.trig);
  s_fitls->add_option("--components,-k", fitls.components, "fixed number of components (skips the elbow)");
  s_fitls->add_option("--max-components", fitls.max_components, "largest k tried by the elbow search");
  s_fitls->add_option("--affine-max", fitls.affine_max, "largest k tried by the affine stage");
  s_fitls->add_option("--elbow-ratio", fitls.elbow_ratio)->check(CLI::PositiveNumber);
  s_fitls->add_flag("--project-affine", fitls.project_affine, "fit affine components, project, then fit --degree");
  s_fitls->add_flag("--extend-columns", fitls.extend_columns, "fit affine components, then extend with h*f columns");
  s_fitls->add_flag("--affine-then-quadratic", fitls.affine_then_quadratic, "--project-affine with --degree 2");
  s_fitls->add_option("--elbow-out", fitls.elbow_out, "write the elbow trace here");
  s_fitls->add_option("--reduced-out", fitls.reduced_out, "write projected data here");
  s_fitls->add_option("--out,-o", fitls.out);
  attach_common(s_fitls, common, true);
  fitls.affine_opt.attach(s_fitls, "affine-");

  FitKdeArgs fitkde;
  auto* s_fitkde = app.add_subcommand("fit-kde", "weighted Gaussian kernel density estimate");
  s_fitkde->add_option("--data", fitkde.data)->required();
  s_fitkde->add_option("--columns", fitkde.columns);
  s_fitkde->add_option("--weights-column", fitkde.weights_column);
  s_fitkde->add_option("--weight-power", fitkde.weight_power, "weights are column^power");
  s_fitkde->add_option("--bandwidth", fitkde.bandwidth, "number or 'scott'");
  s_fitkde->add_option("--out,-o", fitkde.out)->required();

  FindVfArgs findvf;
  auto* s_findvf = app.add_subcommand("find-vf", "estimate vector fields annihilating a fitted model");
  s_findvf->add_option("--model", findvf.model)->required();
  s_findvf->add_option("--data", findvf.data)->required();
  s_findvf->add_option("--columns", findvf.columns);
  s_findvf->add_option("--degree", findvf.degree, "component degree of the fields");
  s_findvf->add_option("--family", findvf.family, "constant | linear | affine | quadratic");
  s_findvf->add_flag("--escalate", findvf.escalate, "try constant, linear, affine, quadratic in turn");
  s_findvf->add_option("--threshold", findvf.threshold, "loss threshold for --escalate");
  s_findvf->add_option("--fields,-c", findvf.fields, "number of fields");
  s_findvf->add_option("--out,-o", findvf.out);
  attach_common(s_findvf, common, true);

  FindInvArgs findinv;
  auto* s_findinv = app.add_subcommand("find-invariants", "estimate functions annihilated by given fields");
  s_findinv->add_option("--fields", findinv.fields)->required();
  s_findinv->add_option("--data", findinv.data)->required();
  s_findinv->add_option("--columns", findinv.columns);
  s_findinv->add_option("--degree", findinv.degree);
  s_findinv->add_flag("--trig", findinv.trig);
  s_findinv->add_option("--count,-q", findinv.count);
  s_findinv->add_option("--max-count", findinv.max_count, "choose the count by the elbow rule");
  s_findinv->add_option("--elbow-ratio", findinv.elbow_ratio)->check(CLI::PositiveNumber);
  s_findinv->add_option("--out,-o", findinv.out);
  attach_common(s_findinv, common, true);

  FlowParamArgs fp;
  auto* s_fp = app.add_subcommand("flow-param", "solve X(theta) = 1 over a basis");
  s_fp->add_option("--field", fp.field)->required();
  s_fp->add_option("--index", fp.index);
  s_fp->add_option("--data", fp.data)->required();
  s_fp->add_option("--columns", fp.columns);
  s_fp->add_option("--degree", fp.degree);
  s_fp->add_flag("--trig", fp.trig);
  s_fp->add_option("--threshold", fp.threshold);
  s_fp->add_option("--out,-o", fp.out);

  FlowArgs flow;
  auto* s_flow = app.add_subcommand("flow", "integrate a field from a starting point (RK4)");
  s_flow->add_option("--field", flow.field)->required();
  s_flow->add_option("--index", flow.index);
  s_flow->add_option("--x0", flow.x0, "comma-separated start point")->required();
  s_flow->add_option("--t", flow.t);
  s_flow->add_option("--steps", flow.steps)->check(CLI::PositiveNumber);
  s_flow->add_option("--out,-o", flow.out);

  SimArgs sim;
  auto* s_sim = app.add_subcommand("sim", "similarity score between two fields");
  s_sim->add_option("--truth", sim.truth)->required();
  s_sim->add_option("--truth-index", sim.truth_index);
  s_sim->add_option("--estimate", sim.estimate)->required();
  s_sim->add_option("--estimate-index", sim.estimate_index);
  s_sim->add_option("--data", sim.data, "domain is the bounding box of this CSV");
  s_sim->add_option("--columns", sim.columns);
  s_sim->add_option("--lower", sim.lower);
  s_sim->add_option("--upper", sim.upper);
  s_sim->add_option("--method", sim.method, "auto | analytic | monte-carlo");
  s_sim->add_option("--mc-samples", sim.mc_samples)->check(CLI::PositiveNumber);
  s_sim->add_option("--out,-o", sim.out);
  attach_common(s_sim, common, false);

  DiscreteArgs disc;
  auto* s_disc = app.add_subcommand("discrete", "fit a discrete symmetry");
  s_disc->add_option("--model", disc.model, "scalar model for transformation residuals");
  s_disc->add_option("--kde", disc.kde, "density model for rotation matching");
  s_disc->add_option("--data", disc.data)->required();
  s_disc->add_option("--columns", disc.columns);
  s_disc->add_option("--family", disc.family, "reflection-2d | rotation-2d | path to a family JSON");
  s_disc->add_option("--lo", disc.lo);
  s_disc->add_option("--hi", disc.hi);
  s_disc->add_option("--theta-min", disc.theta_min);
  s_disc->add_option("--grid", disc.grid);
  s_disc->add_option("--tie-tolerance", disc.tie_tolerance);
  s_disc->add_option("--reference", disc.reference, "3x3 reference matrix JSON (list of rows)");
  s_disc->add_option("--reference-angle", disc.reference_angle);
  s_disc->add_option("--reference-k", disc.reference_k, "reference generator for angle 2 pi / k");
  s_disc->add_option("--out,-o", disc.out);
  attach_common(s_disc, common, true);

  FitMapArgs fitmap;
  auto* s_fitmap = app.add_subcommand("fit-map", "regress image columns on source columns");
  s_fitmap->add_option("--data", fitmap.data)->required();
  s_fitmap->add_option("--source", fitmap.source)->required();
  s_fitmap->add_option("--image", fitmap.image)->required();
  s_fitmap->add_option("--degree", fitmap.degree);
  s_fitmap->add_option("--out,-o", fitmap.out);

  PullbackArgs pb;
  auto* s_pb = app.add_subcommand("pullback", "pull back the Euclidean metric through a fitted map");
  s_pb->add_option("--map", pb.map)->required();
  s_pb->add_option("--point", pb.points, "comma-separated point (repeatable)")->required();
  s_pb->add_option("--out,-o", pb.out);

  KillingArgs kill;
  auto* s_kill = app.add_subcommand("killing", "unit combination of supplied fields annihilating a function");
  s_kill->add_option("--basis", kill.basis, "JSON list of fields");
  s_kill->add_option("--builtin", kill.builtin, "killing4d");
  s_kill->add_option("--model", kill.model)->required();
  s_kill->add_option("--data", kill.data)->required();
  s_kill->add_option("--columns", kill.columns);
  s_kill->add_option("--out,-o", kill.out);
  attach_common(s_kill, common, true);

  TransformArgs tr;
  auto* s_tr = app.add_subcommand("transform", "map data to invariant (and flow-parameter) coordinates");
  s_tr->add_option("--data", tr.data)->required();
  s_tr->add_option("--columns", tr.columns);
  s_tr->add_option("--invariants", tr.invariants);
  s_tr->add_option("--flow-param", tr.flow_param);
  s_tr->add_flag("--angle", tr.angle, "use atan2(y, x) as the flow parameter");
  s_tr->add_option("--keep", tr.keep, "column copied through unchanged when present");
  s_tr->add_option("--out,-o", tr.out);

  GridArgs grid;
  auto* s_grid = app.add_subcommand("grid", "tabulate a model on a regular grid");
  s_grid->add_option("--model", grid.model)->required();
  s_grid->add_option("--component", grid.component);
  s_grid->add_option("--lower", grid.lower)->required();
  s_grid->add_option("--upper", grid.upper)->required();
  s_grid->add_option("--resolution", grid.resolution);
  s_grid->add_option("--out,-o", grid.out);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s_gen->parsed()) return cmd_gen(gen, common, out);
    if (s_fitfn->parsed()) return cmd_fit_fn(fitfn, out);
    if (s_fitls->parsed()) return cmd_fit_levelset(fitls, common, out);
    if (s_fitkde->parsed()) return cmd_fit_kde(fitkde, out);
    if (s_findvf->parsed()) return cmd_find_vf(findvf, common, out);
    if (s_findinv->parsed()) return cmd_find_invariants(findinv, common, out);
    if (s_fp->parsed()) return cmd_flow_param(fp, out);
    if (s_flow->parsed()) return cmd_flow(flow, out);
    if (s_sim->parsed()) return cmd_sim(sim, common, out);
    if (s_disc->parsed()) return cmd_discrete(disc, common, out);
    if (s_fitmap->parsed()) return cmd_fit_map(fitmap, out);
    if (s_pb->parsed()) return cmd_pullback(pb, out);
    if (s_kill->parsed()) return cmd_killing(kill, common, out);
    if (s_tr->parsed()) return cmd_transform(tr, out);
    if (s_grid->parsed()) return cmd_grid(grid, out);
  } catch (const NumericalError& e) {
    err << "error[" << e.code() << "]: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    err << "error[" << e.code() << "]: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error[invalid-json]: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace symfield::cli
