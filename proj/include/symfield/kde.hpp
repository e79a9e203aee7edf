#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace symfield {

/// Weighted Gaussian mixture p(x) = sum_j w_j N(x; c_j, h^2 I) / sum_j w_j.
struct KdeModel {
  Eigen::MatrixXd centers;  ///< N x n
  Eigen::VectorXd weights;  ///< N, nonnegative
  double bandwidth = 1.0;
  bool dimension_warning = false;  ///< set when n > 2

  int dimension() const { return static_cast<int>(centers.cols()); }
};

/// N^(-1/(n+4)) times the mean sample standard deviation of the columns.
double scott_bandwidth(const Eigen::MatrixXd& data);

/// bandwidth = nullopt selects Scott's rule. Unit weights when none are given.
KdeModel kde_fit(const Eigen::MatrixXd& data, const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                 std::optional<double> bandwidth = std::nullopt);

Eigen::VectorXd kde_eval(const KdeModel& model, const Eigen::MatrixXd& points, int threads = 1);

/// Row i is grad p(points.row(i)).
Eigen::MatrixXd kde_gradient(const KdeModel& model, const Eigen::MatrixXd& points, int threads = 1);

/// Fast density evaluation for 2-D models. Centers are bucketed into horizontal bands
/// sorted by x; only centers within `cutoff` bandwidths of a query are summed, which
/// drops kernel terms below exp(-cutoff^2/2) of their peak. Other dimensions and
/// queries with no neighbours use the full sum.
class BandedKde {
 public:
  explicit BandedKde(const KdeModel& model, double cutoff = 8.6);

  Eigen::VectorXd eval(const Eigen::MatrixXd& points, int threads = 1) const;

 private:
  double eval_one(double qx, double qy, Eigen::ArrayXd& scratch) const;

  const KdeModel* model_;
  double radius_ = 0.0;
  double band_height_ = 0.0;
  double y0_ = 0.0;
  double norm_ = 0.0;
  double inv_two_h2_ = 0.0;
  std::vector<Eigen::Index> band_start_;  // size bands + 1
  Eigen::ArrayXd x_, y_, w_;              // band-major, x-sorted within band
};

}  // namespace symfield
