#pragma once

#include <algorithm>
#include <numeric>
#include <optional>

#include "distset/sets.hpp"

namespace distset {

struct ProjectionResult {
  Vec z_hat;
  double distance = 0.0;
  std::optional<double> multiplier;  // active-constraint multiplier (soft-threshold / ridge path)
  std::optional<Vec> dual_point;     // u_hat = y - z_hat when available
  bool converged = true;
  int iterations = 0;
};

/// Euclidean projection onto {z : ||z - center||_1 <= radius}.
///
/// The threshold is found by the exact sort-based breakpoint method, so the
/// active multiplier is a finite closed-form quantity rather than a bisection
/// approximation.
inline ProjectionResult project_l1_ball(const Vec& y, const Vec& center, double radius) {
  require(radius > 0.0, "project_l1_ball: radius must be positive");
  require(y.size() == center.size(), "project_l1_ball: dimension mismatch");
  Vec w = y - center;
  const double total = w.lpNorm<1>();
  ProjectionResult res;
  if (total <= radius) {
    res.z_hat = y;
    res.distance = 0.0;
    res.multiplier = 0.0;
    res.dual_point = Vec::Zero(y.size());
    return res;
  }
  const int d = static_cast<int>(y.size());
  std::vector<double> a(d);
  for (int i = 0; i < d; ++i) a[i] = std::abs(w[i]);
  std::sort(a.begin(), a.end(), std::greater<double>());
  double cum = 0.0, lambda = 0.0;
  for (int k = 0; k < d; ++k) {
    cum += a[k];
    double cand = (cum - radius) / static_cast<double>(k + 1);
    if (k + 1 == d || a[k + 1] <= cand) {
      lambda = cand;
      break;
    }
  }
  Vec gamma(d);
  for (int i = 0; i < d; ++i) gamma[i] = sgn(w[i]) * std::max(std::abs(w[i]) - lambda, 0.0);
  res.z_hat = center + gamma;
  res.distance = (y - res.z_hat).norm();
  res.multiplier = lambda;
  res.dual_point = y - res.z_hat;
  return res;
}

/// Euclidean projection onto {z : ||z - center||_2 <= radius}.
inline ProjectionResult project_l2_ball(const Vec& y, const Vec& center, double radius) {
  require(radius > 0.0, "project_l2_ball: radius must be positive");
  require(y.size() == center.size(), "project_l2_ball: dimension mismatch");
  Vec w = y - center;
  double nw = w.norm();
  ProjectionResult res;
  if (nw <= radius) {
    res.z_hat = y;
    res.multiplier = 0.0;
    res.dual_point = Vec::Zero(y.size());
    return res;
  }
  res.z_hat = center + (radius / nw) * w;
  res.distance = nw - radius;
  res.multiplier = nw / radius - 1.0;  // so that z = y / (1 + multiplier)
  res.dual_point = y - res.z_hat;
  return res;
}

namespace detail {

/// Root of sum_k q_k^2 e_k / (e_k + lambda)^2 = level over lambda >= 0.
/// Safeguarded Newton on a decreasing convex function; the bracket upper end
/// comes from e_k/(e_k+l)^2 <= e_max / l^2.
inline std::pair<double, int> ellipsoid_level_root(const Vec& evals, const Vec& q, double level,
                                                   double tol = 1e-10) {
  auto g = [&](double l) {
    double s = 0.0;
    for (int k = 0; k < evals.size(); ++k) s += q[k] * q[k] * evals[k] / square(evals[k] + l);
    return s;
  };
  auto gp = [&](double l) {
    double s = 0.0;
    for (int k = 0; k < evals.size(); ++k)
      s += -2.0 * q[k] * q[k] * evals[k] / (square(evals[k] + l) * (evals[k] + l));
    return s;
  };
  double lo = 0.0;
  double hi = std::sqrt(evals.maxCoeff() * q.squaredNorm() / level) + 1e-12;
  double l = std::min(hi, std::max(1e-12, -(g(0.0) - level) / gp(0.0)));
  int it = 0;
  for (; it < 200; ++it) {
    double val = g(l) - level;
    if (std::abs(val) <= tol * std::max(1.0, level)) break;
    if (val > 0.0)
      lo = l;
    else
      hi = l;
    double step = val / gp(l);
    double next = l - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    l = next;
  }
  return {l, it};
}

}  // namespace detail

/// Euclidean projection onto {z : (z-center)' Q^{-1} (z-center) <= level}.
/// Exterior points solve z = Q (Q + lambda I)^{-1} (y-center) in the eigenbasis
/// of Q, with lambda the unique root of the level constraint.
inline ProjectionResult project_ellipsoid(const Vec& y, const Mat& shape, double level,
                                          const Vec& center_in = Vec()) {
  require(level > 0.0, "project_ellipsoid: level must be positive");
  Vec center = center_in.size() ? center_in : Vec::Zero(y.size());
  require(y.size() == shape.rows() && y.size() == center.size(),
          "project_ellipsoid: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es(shape);
  require(es.eigenvalues().minCoeff() > 0.0, "project_ellipsoid: shape matrix must be SPD");
  Vec w = y - center;
  Vec q = es.eigenvectors().transpose() * w;
  const Vec& e = es.eigenvalues();
  double quad = (q.array().square() / e.array()).sum();
  ProjectionResult res;
  if (quad <= level) {
    res.z_hat = y;
    res.multiplier = 0.0;
    res.dual_point = Vec::Zero(y.size());
    return res;
  }
  auto [lambda, iters] = detail::ellipsoid_level_root(e, q, level);
  Vec zq = (e.array() / (e.array() + lambda)).matrix().asDiagonal() * q;
  res.z_hat = center + es.eigenvectors() * zq;
  res.distance = (y - res.z_hat).norm();
  res.multiplier = lambda;
  res.dual_point = y - res.z_hat;
  res.iterations = iters;
  res.converged = iters < 200;
  return res;
}

struct WeightedSoftThresholdResult {
  Vec deltas;
  double lambda = 0.0;
};

/// Groupwise shrinkage delta_s = sign(m_s) (|m_s| - lambda / w_s)_+ with lambda
/// chosen by monotone bisection so that sum_s |delta_s| = radius (lambda = 0
/// when the unconstrained sum already fits).
inline WeightedSoftThresholdResult project_weighted_soft_threshold(const Vec& means,
                                                                   const Vec& weights,
                                                                   double radius,
                                                                   double tol = 1e-10) {
  require(radius >= 0.0, "project_weighted_soft_threshold: radius must be nonnegative");
  require(means.size() == weights.size(), "project_weighted_soft_threshold: size mismatch");
  require((weights.array() >= 1.0).all(), "project_weighted_soft_threshold: weights must be >= 1");
  WeightedSoftThresholdResult out;
  if (means.lpNorm<1>() <= radius) {
    out.deltas = means;
    out.lambda = 0.0;
    return out;
  }
  auto shrunk_sum = [&](double lambda) {
    double s = 0.0;
    for (int i = 0; i < means.size(); ++i)
      s += std::max(std::abs(means[i]) - lambda / weights[i], 0.0);
    return s;
  };
  double lo = 0.0, hi = (means.cwiseAbs().array() * weights.array()).maxCoeff();
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double s = shrunk_sum(mid);
    if (std::abs(s - radius) <= tol) {
      lo = hi = mid;
      break;
    }
    if (s > radius)
      lo = mid;
    else
      hi = mid;
  }
  out.lambda = 0.5 * (lo + hi);
  out.deltas.resize(means.size());
  for (int i = 0; i < means.size(); ++i)
    out.deltas[i] = sgn(means[i]) * std::max(std::abs(means[i]) - out.lambda / weights[i], 0.0);
  return out;
}

/// Treated-group residual means and counts for a deviation set; groups with no
/// treated record get mean 0 and are excluded from the threshold path.
struct GroupResiduals {
  Vec means;    // per group
  Vec counts;   // treated records per group
};

inline GroupResiduals group_treated_residuals(const MultiEnvDeviation& s, const Vec& y) {
  GroupResiduals gr;
  gr.means = Vec::Zero(s.n_groups);
  gr.counts = Vec::Zero(s.n_groups);
  for (int i = 0; i < y.size(); ++i) {
    if (!s.treated[i]) continue;
    gr.counts[s.group[i]] += 1.0;
    gr.means[s.group[i]] += y[i] - s.baseline[i];
  }
  for (int g = 0; g < s.n_groups; ++g)
    if (gr.counts[g] > 0.0) gr.means[g] /= gr.counts[g];
  return gr;
}

}  // namespace distset
