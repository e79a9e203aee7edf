#include "symfield/similarity.hpp"

#include <cmath>

#include "symfield/errors.hpp"
#include "symfield/random.hpp"

namespace symfield {

namespace {

struct MonomialTerm {
  double coefficient;
  std::vector<int> exponents;
};

// Polynomial component as plain monomial terms; products are multiplied out.
std::vector<MonomialTerm> flatten(const std::vector<FunctionTerm>& terms) {
  std::vector<MonomialTerm> out;
  for (const auto& t : terms) {
    if (!t.atom.is_polynomial()) throw ValidationError("unsupported", "analytic similarity needs polynomial fields; use monte-carlo");
    if (t.atom.kind() == AtomKind::monomial) {
      out.push_back({t.coefficient, t.atom.exponents()});
      continue;
    }
    const auto& h = t.atom.multiplier().exponents();
    for (const auto& inner : t.atom.function()) {
      std::vector<int> e = inner.atom.exponents();
      for (std::size_t j = 0; j < e.size(); ++j) e[j] += h[j];
      out.push_back({t.coefficient * inner.coefficient, std::move(e)});
    }
  }
  return out;
}

double inner_analytic(const std::vector<MonomialTerm>& a, const std::vector<MonomialTerm>& b, const IntegrationDomain& d) {
  double sum = 0.0;
  std::vector<int> e;
  for (const auto& s : a)
    for (const auto& t : b) {
      e = s.exponents;
      for (std::size_t j = 0; j < e.size(); ++j) e[j] += t.exponents[j];
      sum += s.coefficient * t.coefficient * monomial_box_integral(e, d.lower, d.upper);
    }
  return sum;
}

double cosine(double inner, double na2, double nb2, int component, std::vector<std::string>& notes) {
  if (na2 <= 0.0 && nb2 <= 0.0) {
    notes.push_back("component " + std::to_string(component) + ": both norms zero, contributes 1");
    return 1.0;
  }
  if (na2 <= 0.0 || nb2 <= 0.0) {
    notes.push_back("component " + std::to_string(component) + ": one norm zero, contributes 0");
    return 0.0;
  }
  return std::min(1.0, std::abs(inner) / std::sqrt(na2 * nb2));
}

}  // namespace

IntegrationDomain domain_from_data(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) throw ValidationError("invalid-argument", "domain_from_data needs at least two points");
  IntegrationDomain d;
  d.lower = data.colwise().minCoeff().transpose();
  d.upper = data.colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < d.lower.size(); ++j)
    if (!(d.upper[j] > d.lower[j])) {
      d.upper[j] = d.lower[j] + 1e-9;
      d.degenerate = true;
    }
  return d;
}

std::string to_string(SimilarityMethod m) {
  switch (m) {
    case SimilarityMethod::automatic: return "auto";
    case SimilarityMethod::analytic: return "analytic";
    case SimilarityMethod::monte_carlo: return "monte-carlo";
  }
  return "auto";
}

SimilarityMethod parse_similarity_method(const std::string& text) {
  if (text == "auto") return SimilarityMethod::automatic;
  if (text == "analytic") return SimilarityMethod::analytic;
  if (text == "monte-carlo") return SimilarityMethod::monte_carlo;
  throw ValidationError("invalid-argument", "unknown similarity method '" + text + "'");
}

double monomial_box_integral(const std::vector<int>& exponents, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  double r = 1.0;
  for (std::size_t j = 0; j < exponents.size(); ++j) {
    const int p = exponents[j] + 1;
    const auto J = static_cast<Eigen::Index>(j);
    r *= (std::pow(upper[J], p) - std::pow(lower[J], p)) / p;
  }
  return r;
}

SimilarityReport similarity(const BasisVectorField& truth, const BasisVectorField& estimate,
                            const IntegrationDomain& domain, const SimilarityOptions& options) {
  const int n = truth.dimension;
  if (estimate.dimension != n || domain.lower.size() != n || domain.upper.size() != n)
    throw ValidationError("dimension-mismatch", "similarity inputs disagree on dimension");
  SimilarityReport rep;
  rep.domain = domain;
  rep.per_component.resize(n);
  SimilarityMethod method = options.method;
  if (method == SimilarityMethod::automatic)
    method = truth.is_polynomial() && estimate.is_polynomial() ? SimilarityMethod::analytic : SimilarityMethod::monte_carlo;
  rep.method = method;

  if (method == SimilarityMethod::analytic) {
    for (int i = 0; i < n; ++i) {
      const auto a = flatten(truth.components[i]);
      const auto b = flatten(estimate.components[i]);
      rep.per_component[i] = cosine(inner_analytic(a, b, domain), inner_analytic(a, a, domain),
                                    inner_analytic(b, b, domain), i, rep.notes);
    }
  } else {
    if (options.mc_samples < 1) throw ValidationError("invalid-argument", "need at least one Monte-Carlo sample");
    rep.mc_samples = options.mc_samples;
    rep.mc_seed = options.mc_seed;
    Eigen::ArrayXd ab = Eigen::ArrayXd::Zero(n), aa = Eigen::ArrayXd::Zero(n), bb = Eigen::ArrayXd::Zero(n);
    constexpr long chunk = 1 << 16;
    Eigen::VectorXd x(n);
    const Eigen::VectorXd width = domain.upper - domain.lower;
    for (long start = 0, c = 0; start < options.mc_samples; start += chunk, ++c) {
      Rng rng(split_seed(options.mc_seed, static_cast<std::uint64_t>(c)));
      const long stop = std::min(options.mc_samples, start + chunk);
      for (long s = start; s < stop; ++s) {
        for (int j = 0; j < n; ++j) x[j] = domain.lower[j] + width[j] * rng.uniform();
        const Eigen::ArrayXd fa = truth.eval(x).array(), fb = estimate.eval(x).array();
        ab += fa * fb;
        aa += fa.square();
        bb += fb.square();
      }
    }
    for (int i = 0; i < n; ++i) rep.per_component[i] = cosine(ab[i], aa[i], bb[i], i, rep.notes);
  }
  rep.aggregate = rep.per_component.mean();
  return rep;
}

}  // namespace symfield
