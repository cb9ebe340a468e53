#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "rbdo/problem.hpp"
#include "rbdo/sampling.hpp"

namespace rbdo {

// Hyperparameters of the power-exponential kernel and the likelihood search.
struct KrigingConfig {
  double exponent = 2.0;      // b, fixed (Gaussian kernel by default)
  double theta_min = 1e-3;    // a_p search range, log scale
  double theta_max = 1e3;
  int multistart = 8;         // restarts of the likelihood search
  double nugget = 1e-10;      // diagonal regularization of R
  int sweeps = 3;             // coordinate-descent sweeps per restart
  int golden_iters = 24;      // golden-section iterations per coordinate
  // admissibility wall for the search: nugget * ||R^-1 (g - 1 mu)||_inf may
  // not exceed this, which bounds the regularization-induced bias at the
  // training points and keeps R numerically sane
  double interp_guard = 1e-5;

  void validate() const {
    if (!(exponent > 0.0 && exponent <= 2.0))
      throw std::invalid_argument("KrigingConfig: exponent must be in (0,2]");
    if (!(theta_min > 0.0 && theta_min < theta_max))
      throw std::invalid_argument("KrigingConfig: bad theta range");
    if (nugget < 0.0) throw std::invalid_argument("KrigingConfig: nugget must be >= 0");
    if (multistart < 1) throw std::invalid_argument("KrigingConfig: multistart must be >= 1");
  }
};

// Correlation between two points: exp(-sum_p theta_p |xi_p - xj_p|^b).
inline double correlation(const Vec& xi, const Vec& xj, const Vec& theta, double b) {
  if (xi.size() != xj.size() || xi.size() != theta.size())
    throw std::invalid_argument("correlation: dimension mismatch");
  double d = 0.0;
  for (Eigen::Index p = 0; p < xi.size(); ++p) {
    if (!(theta[p] > 0)) throw std::invalid_argument("correlation: theta must be > 0");
    const double a = std::abs(xi[p] - xj[p]);
    d += theta[p] * (b == 2.0 ? a * a : std::pow(a, b));
  }
  return std::exp(-d);
}

// Constant-trend Kriging interpolator of one performance function.
// Inputs are normalized to [0,1] per dimension before any distance is
// computed, so theta is scale-free across mixed-unit dimensions.
class KrigingModel {
 public:
  double trend() const { return mu_; }
  double process_variance() const { return sigma2_; }
  const Vec& theta() const { return theta_; }
  double exponent() const { return b_; }
  const Mat& training_inputs() const { return X_; }
  const Vec& training_responses() const { return g_; }
  int dim() const { return static_cast<int>(X_.cols()); }
  int size() const { return static_cast<int>(X_.rows()); }

  // Predicted mean at one point: mu + r(x)' R^-1 (g - 1 mu).
  double predict_mean(const Vec& x) const { return predict_mean_batch(Mat(x.transpose()))(0); }

  // Batch form, one query per row.
  Vec predict_mean_batch(const Mat& queries) const {
    return mu_ + (cross_correlation(queries) * alpha_).array();
  }

  // Predictive variance at one point, floored at zero to absorb round-off.
  double predict_mse(const Vec& x) const {
    if (x.size() != X_.cols()) throw std::invalid_argument("predict_mse: dimension mismatch");
    const Vec r = cross_correlation(Mat(x.transpose())).transpose();
    const Vec v = llt_.solve(r);
    const double u = 1.0 - rinv_ones_.dot(r);
    const double mse = sigma2_ * (1.0 - r.dot(v) + u * u / ones_rinv_ones_);
    return mse > 0.0 ? mse : 0.0;
  }

  // Flat numeric serialization: header "n k", training rows (x..., g),
  // then theta, exponent, mu/sigma2 and the normalization box.
  void dump(std::ostream& os) const {
    const int n = size(), k = dim();
    os.precision(17);
    os << n << ' ' << k << '\n';
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < k; ++p) os << X_(i, p) << ' ';
      os << g_[i] << '\n';
    }
    for (int p = 0; p < k; ++p) os << theta_[p] << (p + 1 == k ? '\n' : ' ');
    os << b_ << ' ' << nugget_ << '\n';
    os << mu_ << ' ' << sigma2_ << '\n';
    for (int p = 0; p < k; ++p) os << lo_[p] << (p + 1 == k ? '\n' : ' ');
    for (int p = 0; p < k; ++p) os << hi_[p] << (p + 1 == k ? '\n' : ' ');
  }

  static KrigingModel load(std::istream& is) {
    int n = 0, k = 0;
    if (!(is >> n >> k) || n < 1 || k < 1) throw ParseError("KrigingModel::load: bad header");
    KrigingModel m;
    m.X_.resize(n, k);
    m.g_.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < k; ++p)
        if (!(is >> m.X_(i, p))) throw ParseError("KrigingModel::load: truncated inputs");
      if (!(is >> m.g_[i])) throw ParseError("KrigingModel::load: truncated responses");
    }
    m.theta_.resize(k);
    for (int p = 0; p < k; ++p)
      if (!(is >> m.theta_[p])) throw ParseError("KrigingModel::load: truncated theta");
    if (!(is >> m.b_ >> m.nugget_)) throw ParseError("KrigingModel::load: truncated kernel");
    if (!(is >> m.mu_ >> m.sigma2_)) throw ParseError("KrigingModel::load: truncated trend");
    m.lo_.resize(k);
    m.hi_.resize(k);
    for (int p = 0; p < k; ++p)
      if (!(is >> m.lo_[p])) throw ParseError("KrigingModel::load: truncated box");
    for (int p = 0; p < k; ++p)
      if (!(is >> m.hi_[p])) throw ParseError("KrigingModel::load: truncated box");
    m.finalize();
    return m;
  }

 private:
  friend KrigingModel fit(const Mat&, const Vec&, const KrigingConfig&,
                          const std::optional<Bounds>&);

  Mat normalize(const Mat& X) const {
    Mat out(X.rows(), X.cols());
    const Vec w = (hi_ - lo_).cwiseMax(1e-300);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      out.row(i) = (X.row(i).transpose() - lo_).cwiseQuotient(w).transpose();
    return out;
  }

  // Correlations between query rows and the training set. A query that
  // coincides with a training point bitwise takes the regularized diagonal
  // value, so re-predicting the data reproduces it exactly.
  Mat cross_correlation(const Mat& queries) const {
    if (queries.cols() != X_.cols())
      throw std::invalid_argument("KrigingModel: query dimension mismatch");
    const Mat Q = normalize(queries);
    Mat d = Mat::Zero(queries.rows(), X_.rows());
    for (int p = 0; p < dim(); ++p) {
      const auto diff = (Q.col(p).replicate(1, X_.rows()) -
                         Xn_.col(p).transpose().replicate(Q.rows(), 1))
                            .array()
                            .abs();
      if (b_ == 2.0)
        d.array() += theta_[p] * diff.square();
      else
        d.array() += theta_[p] * diff.pow(b_);
    }
    Mat r = (-d.array()).exp();
    r.array() = (d.array() == 0.0).select(1.0 + nugget_, r.array());
    return r;
  }

  // Rebuild factorization and derived quantities from stored parameters.
  void finalize() {
    const int n = size();
    Xn_ = normalize(X_);
    Mat R(n, n);
    for (int i = 0; i < n; ++i) {
      R(i, i) = 1.0 + nugget_;
      for (int j = i + 1; j < n; ++j) {
        const double c = correlation(Xn_.row(i).transpose(), Xn_.row(j).transpose(), theta_, b_);
        R(i, j) = c;
        R(j, i) = c;
      }
    }
    llt_.compute(R);
    if (llt_.info() != Eigen::Success)
      throw FitError("KrigingModel: correlation matrix is not positive definite");
    const Vec ones = Vec::Ones(n);
    rinv_ones_ = llt_.solve(ones);
    ones_rinv_ones_ = ones.dot(rinv_ones_);
    alpha_ = llt_.solve(Vec(g_.array() - mu_));
  }

  Mat X_;   // training inputs, original units
  Vec g_;   // training responses
  Vec lo_, hi_;  // normalization box
  Mat Xn_;  // normalized training inputs
  Vec theta_;
  double b_ = 2.0;
  double nugget_ = 1e-10;
  double mu_ = 0.0;
  double sigma2_ = 0.0;
  Eigen::LLT<Mat> llt_;
  Vec alpha_;        // R^-1 (g - 1 mu)
  Vec rinv_ones_;    // R^-1 1
  double ones_rinv_ones_ = 1.0;
};

namespace detail {

// Profile likelihood pieces at a fixed theta. Returns false when the
// factorization fails (theta pushed R out of numerical SPD).
struct ProfileFit {
  double mu = 0.0, sigma2 = 0.0, neg_log_likelihood = 0.0;
  double max_dual_weight = 0.0;  // ||R^-1 (g - 1 mu)||_inf
};

inline bool profile_at_theta(const std::vector<Mat>& dists, const Vec& g, double nugget,
                             const Vec& theta, ProfileFit& out) {
  const int n = static_cast<int>(g.size());
  const int k = static_cast<int>(dists.size());
  Mat R = Mat::Zero(n, n);
  for (int p = 0; p < k; ++p) R.noalias() += theta[p] * dists[static_cast<size_t>(p)];
  R = (-R.array()).exp();
  R.diagonal().array() += nugget;
  Eigen::LLT<Mat> llt(R);
  if (llt.info() != Eigen::Success) return false;
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const Vec ones = Vec::Ones(n);
  const Vec ri_ones = llt.solve(ones);
  const double denom = ones.dot(ri_ones);
  if (!(denom > 0)) return false;
  out.mu = g.dot(ri_ones) / denom;
  const Vec resid = g.array() - out.mu;
  const Vec alpha = llt.solve(resid);
  out.max_dual_weight = alpha.size() > 0 ? alpha.cwiseAbs().maxCoeff() : 0.0;
  out.sigma2 = resid.dot(alpha) / n;
  if (out.sigma2 < 0.0) out.sigma2 = 0.0;
  // concentrated criterion: n ln sigma^2 + ln det R (to be minimized)
  out.neg_log_likelihood = n * std::log(std::max(out.sigma2, 1e-300)) + log_det;
  return !std::isnan(out.neg_log_likelihood);
}

}  // namespace detail

// Maximum-likelihood fit of the surrogate: anisotropic theta searched in
// log space by multistart coordinate descent with golden-section line
// minimization over the concentrated likelihood.
inline KrigingModel fit(const Mat& X, const Vec& g, const KrigingConfig& config = {},
                        const std::optional<Bounds>& norm_box = std::nullopt) {
  config.validate();
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (n < 2) throw FitError("fit: need at least two training points");
  if (g.size() != n) throw FitError("fit: response length mismatch");
  if (!X.allFinite() || !g.allFinite()) throw FitError("fit: non-finite training data");
  if (norm_box && norm_box->dim() != k) throw FitError("fit: normalization box dimension mismatch");

  KrigingModel m;
  m.X_ = X;
  m.g_ = g;
  m.b_ = config.exponent;
  m.nugget_ = config.nugget;
  if (norm_box) {
    m.lo_ = norm_box->lower();
    m.hi_ = norm_box->upper();
  } else {
    m.lo_ = X.colwise().minCoeff().transpose();
    m.hi_ = X.colwise().maxCoeff().transpose();
  }
  m.Xn_ = m.normalize(X);

  // pairwise |dx|^b per dimension, computed once
  std::vector<Mat> dists(static_cast<size_t>(k));
  for (int p = 0; p < k; ++p) {
    Mat d(n, n);
    for (int i = 0; i < n; ++i) {
      d(i, i) = 0.0;
      for (int j = i + 1; j < n; ++j) {
        const double a = std::abs(m.Xn_(i, p) - m.Xn_(j, p));
        const double v = (m.b_ == 2.0) ? a * a : std::pow(a, m.b_);
        d(i, j) = v;
        d(j, i) = v;
      }
    }
    dists[static_cast<size_t>(p)] = std::move(d);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double dd = 0.0;
      for (int p = 0; p < k; ++p) dd += dists[static_cast<size_t>(p)](i, j);
      if (dd == 0.0) throw FitError("fit: duplicate training rows " + std::to_string(i) + "," +
                                    std::to_string(j));
    }

  const double tlo = std::log(config.theta_min), thi = std::log(config.theta_max);
  const auto objective = [&](const Vec& log_theta, detail::ProfileFit& pf) {
    const Vec theta = log_theta.array().exp();
    if (!detail::profile_at_theta(dists, g, config.nugget, theta, pf))
      return std::numeric_limits<double>::infinity();
    if (config.nugget * pf.max_dual_weight > config.interp_guard)
      return std::numeric_limits<double>::infinity();
    return pf.neg_log_likelihood;
  };

  RngStream rng(0x6b7267ULL, 0);  // fixed seed: fitting is deterministic
  Vec best_lt;
  double best_val = std::numeric_limits<double>::infinity();
  detail::ProfileFit pf;

  for (int start = 0; start < config.multistart; ++start) {
    Vec lt(k);
    if (start == 0)
      lt.setZero();  // theta = 1 on the normalized cube
    else
      for (int p = 0; p < k; ++p) lt[p] = rng.uniform(tlo, thi);

    double val = objective(lt, pf);
    for (int sweep = 0; sweep < config.sweeps; ++sweep) {
      for (int p = 0; p < k; ++p) {
        // golden-section over coordinate p
        constexpr double inv_phi = 0.6180339887498949;
        double a = tlo, b = thi;
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        Vec probe = lt;
        probe[p] = x1;
        double f1 = objective(probe, pf);
        probe[p] = x2;
        double f2 = objective(probe, pf);
        for (int it = 0; it < config.golden_iters; ++it) {
          if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            probe[p] = x1;
            f1 = objective(probe, pf);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            probe[p] = x2;
            f2 = objective(probe, pf);
          }
        }
        const double cand = (f1 < f2) ? x1 : x2;
        const double fc = std::min(f1, f2);
        if (fc < val) {
          lt[p] = cand;
          val = fc;
        }
      }
    }
    if (val < best_val) {
      best_val = val;
      best_lt = lt;
    }
  }

  if (!std::isfinite(best_val))
    throw FitError(
        "fit: no admissible theta in the search range (correlation matrix not positive "
        "definite or conditioning guard violated everywhere)");

  m.theta_ = best_lt.array().exp();
  detail::ProfileFit final_pf;
  if (!detail::profile_at_theta(dists, g, config.nugget, m.theta_, final_pf))
    throw FitError("fit: correlation matrix lost positive definiteness at the optimum");
  m.mu_ = final_pf.mu;
  m.sigma2_ = final_pf.sigma2;
  m.finalize();
  return m;
}

}  // namespace rbdo
