#include "symfield/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "symfield/errors.hpp"
#include "symfield/parallel.hpp"

namespace symfield {

namespace {

double normalizer(const KdeModel& m) {
  const double h = m.bandwidth;
  return std::pow(2.0 * std::numbers::pi * h * h, -0.5 * m.dimension()) / m.weights.sum();
}

void check_points(const KdeModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != model.dimension()) throw ValidationError("dimension-mismatch", "query width differs from KDE dimension");
  if (!points.allFinite()) throw ValidationError("invalid-argument", "non-finite KDE query");
}

// Weighted kernel values exp(-|q - c_j|^2 / 2h^2) w_j for all centers.
void kernel_terms(const KdeModel& m, const double* q, double inv_two_h2, Eigen::ArrayXd& out) {
  out = (m.centers.col(0).array() - q[0]).square();
  for (Eigen::Index d = 1; d < m.centers.cols(); ++d) out += (m.centers.col(d).array() - q[d]).square();
  out = (-inv_two_h2 * out).exp() * m.weights.array();
}

}  // namespace

double scott_bandwidth(const Eigen::MatrixXd& data) {
  const Eigen::Index N = data.rows(), n = data.cols();
  if (N < 2) throw ValidationError("invalid-argument", "Scott's rule needs at least two points");
  double mean_std = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mu = data.col(j).mean();
    mean_std += std::sqrt((data.col(j).array() - mu).square().sum() / static_cast<double>(N - 1));
  }
  mean_std /= static_cast<double>(n);
  return std::pow(static_cast<double>(N), -1.0 / (static_cast<double>(n) + 4.0)) * mean_std;
}

KdeModel kde_fit(const Eigen::MatrixXd& data, const std::optional<Eigen::VectorXd>& weights,
                 std::optional<double> bandwidth) {
  if (data.rows() < 1 || data.cols() < 1) throw ValidationError("invalid-argument", "KDE needs data");
  if (!data.allFinite()) throw ValidationError("invalid-argument", "non-finite KDE data");
  KdeModel m;
  m.centers = data;
  if (weights) {
    if (weights->size() != data.rows()) throw ValidationError("dimension-mismatch", "weight count differs from data rows");
    if (!weights->allFinite() || weights->minCoeff() < 0.0) throw ValidationError("invalid-argument", "KDE weights must be nonnegative");
    m.weights = *weights;
  } else {
    m.weights = Eigen::VectorXd::Ones(data.rows());
  }
  if (!(m.weights.sum() > 0.0)) throw ValidationError("zero-weight", "KDE weights sum to zero");
  if (bandwidth) {
    if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth)) throw ValidationError("invalid-argument", "bandwidth must be positive");
    m.bandwidth = *bandwidth;
  } else {
    m.bandwidth = scott_bandwidth(data);
    if (!(m.bandwidth > 0.0)) throw ValidationError("invalid-argument", "Scott bandwidth is zero for constant data");
  }
  m.dimension_warning = data.cols() > 2;
  return m;
}

Eigen::VectorXd kde_eval(const KdeModel& model, const Eigen::MatrixXd& points, int threads) {
  check_points(model, points);
  const double scale = normalizer(model);
  const double a = 0.5 / (model.bandwidth * model.bandwidth);
  Eigen::VectorXd out(points.rows());
  const Eigen::MatrixXd pt = points.transpose();
  parallel_for(0, points.rows(), threads, [&](long i) {
    thread_local Eigen::ArrayXd terms;
    kernel_terms(model, pt.col(i).data(), a, terms);
    out[i] = scale * terms.sum();
  });
  return out;
}

Eigen::MatrixXd kde_gradient(const KdeModel& model, const Eigen::MatrixXd& points, int threads) {
  check_points(model, points);
  const double h2 = model.bandwidth * model.bandwidth;
  const double scale = normalizer(model) / h2;
  const double a = 0.5 / h2;
  Eigen::MatrixXd out(points.rows(), points.cols());
  const Eigen::MatrixXd pt = points.transpose();
  parallel_for(0, points.rows(), threads, [&](long i) {
    thread_local Eigen::ArrayXd terms;
    const double* q = pt.col(i).data();
    kernel_terms(model, q, a, terms);
    const double total = terms.sum();
    for (Eigen::Index d = 0; d < model.centers.cols(); ++d)
      out(i, d) = scale * ((terms * model.centers.col(d).array()).sum() - q[d] * total);
  });
  return out;
}

BandedKde::BandedKde(const KdeModel& model, double cutoff) : model_(&model) {
  if (!(cutoff > 0.0)) throw ValidationError("invalid-argument", "cutoff must be positive");
  if (model.dimension() != 2) return;
  const double h = model.bandwidth;
  radius_ = cutoff * h;
  band_height_ = radius_ / 8.0;
  norm_ = normalizer(model);
  inv_two_h2_ = 0.5 / (h * h);
  const Eigen::Index N = model.centers.rows();
  y0_ = model.centers.col(1).minCoeff();
  const double y1 = model.centers.col(1).maxCoeff();
  const auto bands = static_cast<Eigen::Index>(std::floor((y1 - y0_) / band_height_)) + 1;
  std::vector<Eigen::Index> order(N);
  std::iota(order.begin(), order.end(), 0);
  auto band_of = [&](Eigen::Index i) {
    return std::min<Eigen::Index>(bands - 1, static_cast<Eigen::Index>((model.centers(i, 1) - y0_) / band_height_));
  };
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto ba = band_of(a), bb = band_of(b);
    if (ba != bb) return ba < bb;
    return model.centers(a, 0) < model.centers(b, 0);
  });
  x_.resize(N);
  y_.resize(N);
  w_.resize(N);
  band_start_.assign(bands + 1, 0);
  for (Eigen::Index r = 0; r < N; ++r) {
    const Eigen::Index i = order[r];
    x_[r] = model.centers(i, 0);
    y_[r] = model.centers(i, 1);
    w_[r] = model.weights[i];
    band_start_[band_of(i) + 1] = r + 1;
  }
  for (std::size_t b = 1; b < band_start_.size(); ++b) band_start_[b] = std::max(band_start_[b], band_start_[b - 1]);
}

double BandedKde::eval_one(double qx, double qy, Eigen::ArrayXd& scratch) const {
  const auto bands = static_cast<Eigen::Index>(band_start_.size()) - 1;
  const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor((qy - radius_ - y0_) / band_height_)));
  const auto hi = std::min<Eigen::Index>(bands - 1, static_cast<Eigen::Index>(std::floor((qy + radius_ - y0_) / band_height_)));
  double sum = 0.0;
  for (Eigen::Index b = lo; b <= hi; ++b) {
    const double bottom = y0_ + b * band_height_, top = bottom + band_height_;
    const double dy = qy < bottom ? bottom - qy : (qy > top ? qy - top : 0.0);
    if (dy > radius_) continue;
    const double half = std::sqrt(radius_ * radius_ - dy * dy);
    const double* first = x_.data() + band_start_[b];
    const double* last = x_.data() + band_start_[b + 1];
    const Eigen::Index s = std::lower_bound(first, last, qx - half) - x_.data();
    const Eigen::Index e = std::upper_bound(first, last, qx + half) - x_.data();
    if (e <= s) continue;
    const Eigen::Index len = e - s;
    scratch = (x_.segment(s, len) - qx).square() + (y_.segment(s, len) - qy).square();
    sum += ((-inv_two_h2_ * scratch).exp() * w_.segment(s, len)).sum();
  }
  return sum;
}

Eigen::VectorXd BandedKde::eval(const Eigen::MatrixXd& points, int threads) const {
  if (model_->dimension() != 2) return kde_eval(*model_, points, threads);
  check_points(*model_, points);
  Eigen::VectorXd out(points.rows());
  std::vector<Eigen::Index> fallback;
  parallel_for(0, points.rows(), threads, [&](long i) {
    thread_local Eigen::ArrayXd scratch;
    out[i] = norm_ * eval_one(points(i, 0), points(i, 1), scratch);
  });
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out[i] == 0.0) fallback.push_back(i);
  if (!fallback.empty()) {
    Eigen::MatrixXd far(static_cast<Eigen::Index>(fallback.size()), 2);
    for (std::size_t r = 0; r < fallback.size(); ++r) far.row(static_cast<Eigen::Index>(r)) = points.row(fallback[r]);
    const Eigen::VectorXd exact = kde_eval(*model_, far, threads);
    for (std::size_t r = 0; r < fallback.size(); ++r) out[fallback[r]] = exact[static_cast<Eigen::Index>(r)];
  }
  return out;
}

}  // namespace symfield
