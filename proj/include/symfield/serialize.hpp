#pragma once

#include <string>

#include <json.hpp>

#include "symfield/discrete.hpp"
#include "symfield/geometry.hpp"
#include "symfield/kde.hpp"
#include "symfield/manifold_opt.hpp"
#include "symfield/model_fit.hpp"
#include "symfield/similarity.hpp"
#include "symfield/vfield.hpp"

namespace symfield {

using Json = nlohmann::ordered_json;

Json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
/// Column-major list of columns.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json to_json(const FeatureAtom& atom);
FeatureAtom atom_from_json(const Json& j, int dimension);
Json to_json(const FeatureBasis& basis);
FeatureBasis basis_from_json(const Json& j);

Json to_json(const OptimizerConfig& config);
/// Missing keys keep their defaults.
OptimizerConfig optimizer_config_from_json(const Json& j, OptimizerConfig base = {});
Json to_json(const OptimizationTrace& trace, bool include_losses = false);

Json to_json(const ScalarFunctionModel& model);
ScalarFunctionModel scalar_model_from_json(const Json& j);
Json to_json(const LevelSetModel& model);
LevelSetModel levelset_model_from_json(const Json& j);
/// Centers and weights are stored in a CSV next to the model.
Json to_json(const KdeModel& model, const std::string& centers_file);
/// `centers_file` is resolved relative to `base_dir`.
KdeModel kde_model_from_json(const Json& j, const std::string& base_dir);

Json to_json(const ElbowTrace& trace);

Json to_json(const VectorFieldModel& model);
VectorFieldModel vector_field_from_json(const Json& j);
Json to_json(const BasisVectorField& field);
BasisVectorField basis_field_from_json(const Json& j);
/// Accepts either a stored VectorFieldModel or an explicit field list; field `index` is used.
BasisVectorField any_field_from_json(const Json& j, int index = 0);
std::vector<BasisVectorField> basis_fields_from_json(const Json& j);

Json to_json(const Expression& e);
Expression expression_from_json(const Json& j);
ParametricFamily family_from_json(const Json& j);

Json to_json(const IntegrationDomain& d);
Json to_json(const SimilarityReport& report);
Json to_json(const SmoothMapModel& map);
SmoothMapModel map_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace symfield
