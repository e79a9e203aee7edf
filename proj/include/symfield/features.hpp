#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace symfield {

enum class AtomKind { monomial, cosine, sine, product };

struct ProductData;
struct FunctionTerm;

/// One scalar basis function b(x) over R^n.
///
/// A product atom is h(x) * f(x) with h a monomial and f a fixed combination of
/// plain atoms. Product atoms are "artificial": they only exist to carry known
/// level-set components through a degree extension and are dropped from final models.
class FeatureAtom {
 public:
  static FeatureAtom monomial(std::vector<int> exponents);
  static FeatureAtom cosine(int dimension, int axis);
  static FeatureAtom sine(int dimension, int axis);
  static FeatureAtom product(const FeatureAtom& multiplier, std::vector<FunctionTerm> function);

  AtomKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  /// Exponent vector (monomials only).
  const std::vector<int>& exponents() const { return exponents_; }
  /// Coordinate index (trig atoms only).
  int axis() const { return axis_; }
  const FeatureAtom& multiplier() const;
  const std::vector<FunctionTerm>& function() const;

  bool artificial() const { return kind_ == AtomKind::product; }
  bool is_polynomial() const;
  bool is_constant() const;
  /// Total polynomial degree; -1 for anything containing a trig atom.
  int degree() const;

  double value(const double* x) const;
  /// Adds scale * grad b(x) into out[0..n).
  void add_gradient(const double* x, double scale, double* out) const;

  std::string name(const std::vector<std::string>& variables) const;

  friend bool operator==(const FeatureAtom& a, const FeatureAtom& b);

 private:
  AtomKind kind_ = AtomKind::monomial;
  int dimension_ = 0;
  std::vector<int> exponents_;
  int axis_ = -1;
  std::shared_ptr<const ProductData> product_;
};

struct FunctionTerm {
  double coefficient;
  FeatureAtom atom;
  friend bool operator==(const FunctionTerm&, const FunctionTerm&) = default;
};

struct ProductData {
  FeatureAtom multiplier;
  std::vector<FunctionTerm> function;
};

/// Ordered, duplicate-free dictionary of atoms over R^n, kept in canonical order:
/// monomials by (degree, descending lex exponents), then cos/sin by axis, then products
/// in insertion order.
class FeatureBasis {
 public:
  FeatureBasis() = default;
  FeatureBasis(int dimension, std::vector<FeatureAtom> atoms);

  int dimension() const { return dimension_; }
  int size() const { return static_cast<int>(atoms_.size()); }
  const FeatureAtom& atom(int k) const { return atoms_[k]; }
  const std::vector<FeatureAtom>& atoms() const { return atoms_; }

  /// Position of an equal atom, or -1.
  int index_of(const FeatureAtom& atom) const;
  bool contains_constant() const;
  bool is_polynomial() const;
  bool has_artificial() const;
  int max_degree() const;
  FeatureBasis without_artificial() const;
  FeatureBasis without_constant() const;

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  /// Row i is evaluate(data.row(i)).
  Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& data) const;

  std::vector<std::string> names(const std::vector<std::string>& variables) const;

  friend bool operator==(const FeatureBasis& a, const FeatureBasis& b) {
    return a.dimension_ == b.dimension_ && a.atoms_ == b.atoms_;
  }

 private:
  int dimension_ = 0;
  std::vector<FeatureAtom> atoms_;
};

FeatureBasis monomial_basis(int n, int max_degree, bool include_constant);

/// sin and cos of every coordinate.
std::vector<FeatureAtom> trig_atoms(int n);

Eigen::VectorXd evaluate(const FeatureBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& point);
Eigen::MatrixXd jacobian(const FeatureBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& point);

/// Coefficients over `target` of the polynomial sum_t c_t a_t. Throws ValidationError
/// when a term is not polynomial or a needed monomial is missing from `target`.
Eigen::VectorXd expand_onto(const std::vector<FunctionTerm>& terms, const FeatureBasis& target);

/// Polynomial product atom h * f expanded onto `target`.
Eigen::VectorXd expand_product(const FeatureAtom& product_atom, const FeatureBasis& target);

std::vector<std::string> default_variable_names(int n);

}  // namespace symfield
