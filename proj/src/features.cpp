#include "symfield/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "symfield/errors.hpp"
#include "symfield/numfmt.hpp"

namespace symfield {

namespace {

double int_power(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

int group_of(AtomKind kind) {
  switch (kind) {
    case AtomKind::monomial: return 0;
    case AtomKind::cosine: return 1;
    case AtomKind::sine: return 2;
    case AtomKind::product: return 3;
  }
  return 3;
}

// Strict weak order used for canonical sorting; products compare equal to each other
// so a stable sort keeps their insertion order.
bool canonical_less(const FeatureAtom& a, const FeatureAtom& b) {
  const int ga = group_of(a.kind()), gb = group_of(b.kind());
  if (ga != gb) return ga < gb;
  if (a.kind() == AtomKind::monomial) {
    const int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return std::lexicographical_compare(b.exponents().begin(), b.exponents().end(),
                                        a.exponents().begin(), a.exponents().end());
  }
  if (a.kind() == AtomKind::product) return false;
  return a.axis() < b.axis();
}

std::string term_sum_name(const std::vector<FunctionTerm>& terms, const std::vector<std::string>& vars) {
  std::string out;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    if (t > 0) out += " + ";
    out += format_double(terms[t].coefficient);
    if (!terms[t].atom.is_constant()) out += "*" + terms[t].atom.name(vars);
  }
  return out.empty() ? "0" : out;
}

}  // namespace

FeatureAtom FeatureAtom::monomial(std::vector<int> exponents) {
  if (exponents.empty()) throw ValidationError("invalid-atom", "monomial needs at least one exponent");
  for (int e : exponents)
    if (e < 0) throw ValidationError("invalid-atom", "negative monomial exponent");
  FeatureAtom a;
  a.kind_ = AtomKind::monomial;
  a.dimension_ = static_cast<int>(exponents.size());
  a.exponents_ = std::move(exponents);
  return a;
}

FeatureAtom FeatureAtom::cosine(int dimension, int axis) {
  if (dimension < 1 || axis < 0 || axis >= dimension)
    throw ValidationError("invalid-atom", "trig axis out of range");
  FeatureAtom a;
  a.kind_ = AtomKind::cosine;
  a.dimension_ = dimension;
  a.axis_ = axis;
  return a;
}

FeatureAtom FeatureAtom::sine(int dimension, int axis) {
  FeatureAtom a = cosine(dimension, axis);
  a.kind_ = AtomKind::sine;
  return a;
}

FeatureAtom FeatureAtom::product(const FeatureAtom& multiplier, std::vector<FunctionTerm> function) {
  if (multiplier.kind() != AtomKind::monomial)
    throw ValidationError("invalid-atom", "product multiplier must be a monomial");
  for (const auto& t : function) {
    if (t.atom.artificial()) throw ValidationError("invalid-atom", "nested product atoms are not supported");
    if (t.atom.dimension() != multiplier.dimension())
      throw ValidationError("dimension-mismatch", "product factors disagree on dimension");
  }
  FeatureAtom a;
  a.kind_ = AtomKind::product;
  a.dimension_ = multiplier.dimension();
  a.product_ = std::make_shared<const ProductData>(ProductData{multiplier, std::move(function)});
  return a;
}

const FeatureAtom& FeatureAtom::multiplier() const {
  if (!product_) throw ValidationError("invalid-atom", "not a product atom");
  return product_->multiplier;
}

const std::vector<FunctionTerm>& FeatureAtom::function() const {
  if (!product_) throw ValidationError("invalid-atom", "not a product atom");
  return product_->function;
}

bool FeatureAtom::is_polynomial() const {
  switch (kind_) {
    case AtomKind::monomial: return true;
    case AtomKind::cosine:
    case AtomKind::sine: return false;
    case AtomKind::product:
      return std::all_of(product_->function.begin(), product_->function.end(),
                         [](const FunctionTerm& t) { return t.atom.is_polynomial(); });
  }
  return false;
}

bool FeatureAtom::is_constant() const {
  return kind_ == AtomKind::monomial && std::all_of(exponents_.begin(), exponents_.end(), [](int e) { return e == 0; });
}

int FeatureAtom::degree() const {
  switch (kind_) {
    case AtomKind::monomial: return std::accumulate(exponents_.begin(), exponents_.end(), 0);
    case AtomKind::cosine:
    case AtomKind::sine: return -1;
    case AtomKind::product: {
      int d = 0;
      for (const auto& t : product_->function) {
        if (t.coefficient == 0.0) continue;
        const int td = t.atom.degree();
        if (td < 0) return -1;
        d = std::max(d, td);
      }
      return d + product_->multiplier.degree();
    }
  }
  return -1;
}

double FeatureAtom::value(const double* x) const {
  switch (kind_) {
    case AtomKind::monomial: {
      double r = 1.0;
      for (int j = 0; j < dimension_; ++j) r *= int_power(x[j], exponents_[j]);
      return r;
    }
    case AtomKind::cosine: return std::cos(x[axis_]);
    case AtomKind::sine: return std::sin(x[axis_]);
    case AtomKind::product: {
      double f = 0.0;
      for (const auto& t : product_->function) f += t.coefficient * t.atom.value(x);
      return product_->multiplier.value(x) * f;
    }
  }
  return 0.0;
}

void FeatureAtom::add_gradient(const double* x, double scale, double* out) const {
  switch (kind_) {
    case AtomKind::monomial:
      for (int j = 0; j < dimension_; ++j) {
        if (exponents_[j] == 0) continue;
        double r = exponents_[j] * scale;
        for (int i = 0; i < dimension_; ++i) r *= int_power(x[i], i == j ? exponents_[i] - 1 : exponents_[i]);
        out[j] += r;
      }
      return;
    case AtomKind::cosine: out[axis_] -= scale * std::sin(x[axis_]); return;
    case AtomKind::sine: out[axis_] += scale * std::cos(x[axis_]); return;
    case AtomKind::product: {
      double f = 0.0;
      for (const auto& t : product_->function) f += t.coefficient * t.atom.value(x);
      const double h = product_->multiplier.value(x);
      product_->multiplier.add_gradient(x, scale * f, out);
      for (const auto& t : product_->function) t.atom.add_gradient(x, scale * h * t.coefficient, out);
      return;
    }
  }
}

std::string FeatureAtom::name(const std::vector<std::string>& vars) const {
  switch (kind_) {
    case AtomKind::monomial: {
      std::string out;
      for (int j = 0; j < dimension_; ++j) {
        if (exponents_[j] == 0) continue;
        if (!out.empty()) out += "*";
        out += vars.at(j);
        if (exponents_[j] > 1) out += "^" + std::to_string(exponents_[j]);
      }
      return out.empty() ? "1" : out;
    }
    case AtomKind::cosine: return "cos(" + vars.at(axis_) + ")";
    case AtomKind::sine: return "sin(" + vars.at(axis_) + ")";
    case AtomKind::product:
      return product_->multiplier.name(vars) + "*(" + term_sum_name(product_->function, vars) + ")";
  }
  return "?";
}

bool operator==(const FeatureAtom& a, const FeatureAtom& b) {
  if (a.kind_ != b.kind_ || a.dimension_ != b.dimension_) return false;
  switch (a.kind_) {
    case AtomKind::monomial: return a.exponents_ == b.exponents_;
    case AtomKind::cosine:
    case AtomKind::sine: return a.axis_ == b.axis_;
    case AtomKind::product:
      return a.product_->multiplier == b.product_->multiplier && a.product_->function == b.product_->function;
  }
  return false;
}

FeatureBasis::FeatureBasis(int dimension, std::vector<FeatureAtom> atoms) : dimension_(dimension) {
  if (dimension < 1) throw ValidationError("invalid-basis", "basis dimension must be >= 1");
  for (const auto& a : atoms)
    if (a.dimension() != dimension) throw ValidationError("dimension-mismatch", "atom dimension differs from basis dimension");
  std::stable_sort(atoms.begin(), atoms.end(), canonical_less);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (atoms[i] == atoms[j]) throw ValidationError("duplicate-atom", "basis contains a duplicate atom");
  atoms_ = std::move(atoms);
}

int FeatureBasis::index_of(const FeatureAtom& atom) const {
  for (int k = 0; k < size(); ++k)
    if (atoms_[k] == atom) return k;
  return -1;
}

bool FeatureBasis::contains_constant() const {
  return std::any_of(atoms_.begin(), atoms_.end(), [](const FeatureAtom& a) { return a.is_constant(); });
}

bool FeatureBasis::is_polynomial() const {
  return std::all_of(atoms_.begin(), atoms_.end(), [](const FeatureAtom& a) { return a.is_polynomial(); });
}

bool FeatureBasis::has_artificial() const {
  return std::any_of(atoms_.begin(), atoms_.end(), [](const FeatureAtom& a) { return a.artificial(); });
}

int FeatureBasis::max_degree() const {
  int d = 0;
  for (const auto& a : atoms_) {
    const int ad = a.degree();
    if (ad < 0) return -1;
    d = std::max(d, ad);
  }
  return d;
}

FeatureBasis FeatureBasis::without_artificial() const {
  std::vector<FeatureAtom> kept;
  for (const auto& a : atoms_)
    if (!a.artificial()) kept.push_back(a);
  return FeatureBasis(dimension_, std::move(kept));
}

FeatureBasis FeatureBasis::without_constant() const {
  std::vector<FeatureAtom> kept;
  for (const auto& a : atoms_)
    if (!a.is_constant()) kept.push_back(a);
  return FeatureBasis(dimension_, std::move(kept));
}

Eigen::VectorXd FeatureBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  if (point.size() != dimension_) throw ValidationError("dimension-mismatch", "point length differs from basis dimension");
  Eigen::VectorXd out(size());
  for (int k = 0; k < size(); ++k) out[k] = atoms_[k].value(point.data());
  return out;
}

Eigen::MatrixXd FeatureBasis::jacobian(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  if (point.size() != dimension_) throw ValidationError("dimension-mismatch", "point length differs from basis dimension");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out =
      Eigen::MatrixXd::Zero(size(), dimension_);
  for (int k = 0; k < size(); ++k) atoms_[k].add_gradient(point.data(), 1.0, out.row(k).data());
  return out;
}

Eigen::MatrixXd FeatureBasis::feature_matrix(const Eigen::MatrixXd& data) const {
  if (data.cols() != dimension_) throw ValidationError("dimension-mismatch", "data width differs from basis dimension");
  Eigen::MatrixXd out(data.rows(), size());
  Eigen::VectorXd x(dimension_);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    x = data.row(i).transpose();
    for (int k = 0; k < size(); ++k) out(i, k) = atoms_[k].value(x.data());
  }
  return out;
}

std::vector<std::string> FeatureBasis::names(const std::vector<std::string>& variables) const {
  std::vector<std::string> out;
  for (const auto& a : atoms_) out.push_back(a.name(variables));
  return out;
}

FeatureBasis monomial_basis(int n, int max_degree, bool include_constant) {
  if (n < 1) throw ValidationError("invalid-argument", "monomial_basis needs n >= 1");
  if (max_degree < 0) throw ValidationError("invalid-argument", "monomial_basis needs max_degree >= 0");
  std::vector<FeatureAtom> atoms;
  std::vector<int> e(n, 0);
  // Enumerate every exponent vector with total degree <= max_degree.
  auto rec = [&](auto&& self, int j, int left) -> void {
    if (j == n - 1) {
      for (int v = 0; v <= left; ++v) {
        e[j] = v;
        const int total = std::accumulate(e.begin(), e.end(), 0);
        if (total > 0 || include_constant) atoms.push_back(FeatureAtom::monomial(e));
      }
      e[j] = 0;
      return;
    }
    for (int v = 0; v <= left; ++v) {
      e[j] = v;
      self(self, j + 1, left - v);
    }
    e[j] = 0;
  };
  rec(rec, 0, max_degree);
  return FeatureBasis(n, std::move(atoms));
}

std::vector<FeatureAtom> trig_atoms(int n) {
  std::vector<FeatureAtom> out;
  for (int j = 0; j < n; ++j) out.push_back(FeatureAtom::cosine(n, j));
  for (int j = 0; j < n; ++j) out.push_back(FeatureAtom::sine(n, j));
  return out;
}

Eigen::VectorXd evaluate(const FeatureBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& point) {
  return basis.evaluate(point);
}

Eigen::MatrixXd jacobian(const FeatureBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& point) {
  return basis.jacobian(point);
}

Eigen::VectorXd expand_onto(const std::vector<FunctionTerm>& terms, const FeatureBasis& target) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(target.size());
  for (const auto& t : terms) {
    if (t.coefficient == 0.0) continue;
    const int k = target.index_of(t.atom);
    if (k < 0) throw ValidationError("basis-mismatch", "function term is not an atom of the target basis");
    out[k] += t.coefficient;
  }
  return out;
}

Eigen::VectorXd expand_product(const FeatureAtom& product_atom, const FeatureBasis& target) {
  if (!product_atom.artificial()) throw ValidationError("invalid-atom", "expected a product atom");
  const auto& h = product_atom.multiplier().exponents();
  std::vector<FunctionTerm> expanded;
  for (const auto& t : product_atom.function()) {
    if (t.atom.kind() != AtomKind::monomial)
      throw ValidationError("non-polynomial", "only polynomial known functions can be extended");
    std::vector<int> e = t.atom.exponents();
    for (std::size_t j = 0; j < e.size(); ++j) e[j] += h[j];
    expanded.push_back({t.coefficient, FeatureAtom::monomial(std::move(e))});
  }
  return expand_onto(expanded, target);
}

std::vector<std::string> default_variable_names(int n) {
  std::vector<std::string> out;
  for (int j = 0; j < n; ++j) out.push_back("x" + std::to_string(j + 1));
  return out;
}

}  // namespace symfield
