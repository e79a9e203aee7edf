#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symfield/vfield.hpp"

namespace symfield {

struct GeneratorSpec {
  std::string name;
  long size = 0;  ///< 0 selects the generator's default
  std::uint64_t seed = 0;
  std::map<std::string, double> parameters;
};

struct Dataset {
  Eigen::MatrixXd data;
  std::optional<Eigen::VectorXd> targets;
  std::vector<std::string> columns;  ///< data columns, then "target" when present
};

/// Known generator names, in a fixed order.
const std::vector<std::string>& generator_names();

/// Throws ValidationError for an unknown name or an invalid parameter.
Dataset generate(const GeneratorSpec& spec);

/// Eq.-19 style sector function 1 / (1 + (atan2(x, y) mod 2 pi / k)), angle taken in [0, 2 pi).
double disc_rot_value(double x, double y, int k);

/// The six fields X1..X6 over (u, v, w) used for the Killing combination search.
std::vector<BasisVectorField> killing4d_basis();

}  // namespace symfield
