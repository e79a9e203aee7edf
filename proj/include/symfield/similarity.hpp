#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symfield/vfield.hpp"

namespace symfield {

struct IntegrationDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool degenerate = false;  ///< some axis had min == max and was inflated by 1e-9
};

/// Componentwise bounding box of the data. Needs at least two rows.
IntegrationDomain domain_from_data(const Eigen::MatrixXd& data);

enum class SimilarityMethod { automatic, analytic, monte_carlo };

std::string to_string(SimilarityMethod m);
SimilarityMethod parse_similarity_method(const std::string& text);

struct SimilarityOptions {
  SimilarityMethod method = SimilarityMethod::automatic;
  long mc_samples = 100000;
  std::uint64_t mc_seed = 0;
};

struct SimilarityReport {
  Eigen::VectorXd per_component;
  double aggregate = 0.0;
  SimilarityMethod method = SimilarityMethod::analytic;  ///< the method actually used
  std::optional<long> mc_samples;
  std::optional<std::uint64_t> mc_seed;
  IntegrationDomain domain;
  std::vector<std::string> notes;  ///< zero-norm conventions that were applied
};

/// Mean over components of |<f_i, g_i>| / (|f_i| |g_i|) with L2 products over the box.
SimilarityReport similarity(const BasisVectorField& truth, const BasisVectorField& estimate,
                            const IntegrationDomain& domain, const SimilarityOptions& options = {});

/// Integral of prod_j x_j^e_j over the box.
double monomial_box_integral(const std::vector<int>& exponents, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper);

}  // namespace symfield
