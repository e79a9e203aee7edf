#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "symfield/features.hpp"
#include "symfield/vfield.hpp"

namespace symtest {

using symfield::BasisVectorField;
using symfield::FeatureAtom;
using symfield::FunctionTerm;

inline FunctionTerm mono(double c, std::vector<int> e) { return {c, FeatureAtom::monomial(std::move(e))}; }

inline BasisVectorField field(std::vector<std::vector<FunctionTerm>> components) {
  BasisVectorField f;
  f.dimension = static_cast<int>(components.size());
  f.components = std::move(components);
  return f;
}

/// -y d/dx + x d/dy
inline BasisVectorField rotation_field() { return field({{mono(-1, {0, 1})}, {mono(1, {1, 0})}}); }

/// Largest principal angle between the column spans of A and B.
inline double principal_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd Qa = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  const Eigen::MatrixXd Qb = Eigen::HouseholderQR<Eigen::MatrixXd>(B).householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Qa.transpose() * Qb);
  const double smallest = svd.singularValues().minCoeff();
  return std::acos(std::min(1.0, smallest));
}

/// |<a, b>| / (|a| |b|)
inline double abs_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

}  // namespace symtest
