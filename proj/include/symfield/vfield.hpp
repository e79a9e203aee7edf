#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "symfield/features.hpp"
#include "symfield/kde.hpp"
#include "symfield/manifold_opt.hpp"
#include "symfield/model_fit.hpp"

namespace symfield {

/// Vector field with explicit component expressions: X = sum_i alpha^i d/dx^i.
struct BasisVectorField {
  int dimension = 0;
  std::vector<std::vector<FunctionTerm>> components;  ///< alpha^i as sums of atoms

  Eigen::VectorXd eval(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Row i is the field at data.row(i).
  Eigen::MatrixXd eval_all(const Eigen::MatrixXd& data) const;
  bool is_polynomial() const;
};

/// c fields over a shared basis; column j of blocks stacks n blocks of m coefficients.
struct VectorFieldModel {
  FeatureBasis basis;
  Eigen::MatrixXd blocks;  ///< (n m) x c

  int dimension() const { return basis.dimension(); }
  int atoms() const { return basis.size(); }
  int fields() const { return static_cast<int>(blocks.cols()); }
  /// Coefficients of alpha^i in field j.
  Eigen::VectorXd block(int j, int i) const;
  double component_eval(int j, int i, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd eval(int j, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// N x n values of field j.
  Eigen::MatrixXd eval_all(int j, const Eigen::MatrixXd& data) const;
  BasisVectorField field(int j) const;
};

/// Packs explicit fields into a VectorFieldModel over the union of their atoms.
VectorFieldModel to_vector_field_model(const std::vector<BasisVectorField>& fields);

/// The function F whose Jacobians drive Algorithm-1 style assembly.
struct GradientProvider {
  std::variant<std::vector<ScalarFunctionModel>, LevelSetModel, KdeModel> source;

  int dimension() const;
  int components() const;
  /// (N k) x n, row i*k + l holds grad F_l(x_i).
  Eigen::MatrixXd jacobians(const Eigen::MatrixXd& data, int threads = 1) const;
};

/// (k N) x (n m); (M W) at row (i, l) and column j equals X_j(F_l)(x_i).
Eigen::MatrixXd extended_feature_matrix(const GradientProvider& provider, const Eigen::MatrixXd& data,
                                        const FeatureBasis& vf_basis, int threads = 1);

struct VectorFieldFit {
  VectorFieldModel model;
  OptimizationTrace trace;
};

VectorFieldFit estimate_vector_fields(const GradientProvider& provider, const Eigen::MatrixXd& data,
                                      const FeatureBasis& vf_basis, int c, const OptimizerConfig& config,
                                      int threads = 1);

struct EscalationStep {
  std::string family;
  double final_loss = 0.0;
};

struct EscalationResult {
  VectorFieldFit fit;
  std::string family;
  std::vector<EscalationStep> steps;
  bool threshold_met = false;
};

/// Families "constant", "linear", "affine", "quadratic" over n variables.
FeatureBasis family_basis(const std::string& family, int n);

/// Tries constant -> linear -> affine -> quadratic and keeps the first family whose loss
/// is below the threshold; otherwise the lowest-loss family, with threshold_met = false.
EscalationResult escalate_vector_fields(const GradientProvider& provider, const Eigen::MatrixXd& data, int c,
                                        const OptimizerConfig& config, double threshold = 1e-4, int threads = 1);

/// (c N) x m2; row i*c + j, column k is grad b_k(x_i) . alpha_j(x_i).
Eigen::MatrixXd invariant_feature_matrix(const VectorFieldModel& fields, const Eigen::MatrixXd& data,
                                         const FeatureBasis& candidate_basis, int threads = 1);

struct InvariantFit {
  std::vector<ScalarFunctionModel> invariants;
  OptimizationTrace trace;
  Eigen::MatrixXd correlation;  ///< pairwise correlation of invariant values over the data
};

/// Throws ValidationError when the candidate basis contains the constant atom.
InvariantFit estimate_invariants(const VectorFieldModel& fields, const Eigen::MatrixXd& data,
                                 const FeatureBasis& candidate_basis, int q, const OptimizerConfig& config,
                                 int threads = 1);

struct FlowParameterFit {
  ScalarFunctionModel model;
  double residual_rms = 0.0;
  bool no_polynomial_flow_parameter = false;
};

/// Least squares for X(theta) = 1 over the candidate basis; flagged when the RMS
/// residual exceeds `threshold`.
FlowParameterFit estimate_flow_parameter(const VectorFieldModel& field, const Eigen::MatrixXd& data,
                                         const FeatureBasis& candidate_basis, double threshold = 1e-3);

/// Classical RK4 with fixed step t/steps; returns steps + 1 states (rows).
/// Throws NumericalError("flow-diverged") on a non-finite state.
Eigen::MatrixXd flow_integrate(const BasisVectorField& field, const Eigen::VectorXd& x0, double t, int steps);

struct BasisSearchResult {
  Eigen::VectorXd coefficients;  ///< unit norm
  OptimizationTrace trace;
};

/// Minimizes loss(A a, 0) on the unit sphere with A(i, j) = X_j(f)(x_i).
BasisSearchResult basis_restricted_search(const std::vector<BasisVectorField>& basis_fields,
                                          const ScalarFunctionModel& f, const Eigen::MatrixXd& data,
                                          const OptimizerConfig& config);

}  // namespace symfield
