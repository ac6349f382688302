#pragma once

#include <functional>

#include "distset/geometry.hpp"

namespace distset {

namespace detail {

/// Membership predicate with factorizations hoisted out of the grid loop.
inline std::function<bool(const Vec&)> fast_membership(const SetDescriptor& set) {
  if (const auto* s = set.get_if<Ellipsoid>()) {
    Mat qinv = s->shape.llt().solve(Mat::Identity(s->shape.rows(), s->shape.cols()));
    Vec c = s->center;
    double lvl = s->level;
    return [qinv, c, lvl](const Vec& z) {
      Vec w = z - c;
      return w.dot(qinv * w) <= lvl + 1e-12;
    };
  }
  if (const auto* s = set.get_if<EllipsoidAffine>()) {
    Mat qinv = s->shape.llt().solve(Mat::Identity(s->shape.rows(), s->shape.cols()));
    Vec c = s->center;
    double lvl = s->level;
    Mat a = s->constraint;
    Vec b = s->bound;
    return [qinv, c, lvl, a, b](const Vec& z) {
      Vec w = z - c;
      if (w.dot(qinv * w) > lvl + 1e-12) return false;
      return a.rows() == 0 || ((a * w - b).array() <= 1e-12).all();
    };
  }
  return [&set](const Vec& z) { return contains(set, z, 1e-12); };
}

}  // namespace detail

/// Brute-force projection by multi-resolution dense grid search over the set's
/// bounding box. Only membership tests are used, keeping the oracle
/// independent of the analytic projectors. Intended for d <= 3.
///
/// Near a flat boundary the minimizer's position is only determined to about
/// sqrt(distance excess), so each refinement box is widened accordingly before
/// shrinking further.
inline std::pair<Vec, double> grid_project(const SetDescriptor& set, const Vec& y,
                                           int pts_per_axis = 0, int levels = 12) {
  const int d = dimension(set);
  require(d <= 3, "grid_project: oracle restricted to d <= 3");
  if (pts_per_axis == 0) pts_per_axis = d == 3 ? 21 : 41;
  auto member = detail::fast_membership(set);
  BoundingBall bb = bounding_ball(set);
  Vec lo = bb.center.array() - bb.radius;
  Vec hi = bb.center.array() + bb.radius;
  Vec best;
  double best_d = kInf;
  // Pushes a member point toward y as far as membership allows; this removes
  // the radial (linear in grid spacing) part of the error so the tangential
  // quadratic part dominates and refinement boxes can shrink geometrically.
  auto radial_polish = [&](Vec z) {
    if (member(y)) return y;
    double t_lo = 0.0, t_hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (t_lo + t_hi);
      if (member(z + mid * (y - z)))
        t_lo = mid;
      else
        t_hi = mid;
    }
    return Vec(z + t_lo * (y - z));
  };

  for (int lvl = 0; lvl < levels; ++lvl) {
    double spacing = (hi - lo).maxCoeff() / static_cast<double>(pts_per_axis - 1);
    std::vector<int> idx(d, 0);
    bool done = false;
    while (!done) {
      Vec z(d);
      for (int k = 0; k < d; ++k)
        z[k] = lo[k] + idx[k] * (hi[k] - lo[k]) / static_cast<double>(pts_per_axis - 1);
      if (member(z)) {
        double dist = (y - z).norm();
        if (dist < best_d) {
          best_d = dist;
          best = z;
        }
      }
      int k = 0;
      while (k < d && ++idx[k] == pts_per_axis) idx[k++] = 0;
      done = (k == d);
    }
    if (best.size() == 0) {  // no grid point inside yet: zoom toward the center
      double w = 0.5 * (hi - lo).maxCoeff();
      lo = bb.center.array() - w;
      hi = bb.center.array() + w;
      continue;
    }
    best = radial_polish(best);
    best_d = (y - best).norm();
    if (spacing < 1e-9 || best_d < 1e-12) break;
    double half = 3.0 * spacing;
    for (int k = 0; k < d; ++k) {
      lo[k] = best[k] - half;
      hi[k] = best[k] + half;
    }
  }
  return {best, best_d};
}

namespace detail {

/// Projection of point p onto the boundary {t' M t = level} with M SPD,
/// allowing p inside or outside. Root-find on the KKT parameter in the
/// eigenbasis of M.
inline std::optional<Vec> quadric_boundary_project(const Vec& p, const Mat& m, double level) {
  if (level <= 0.0) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec& e = es.eigenvalues();
  if (e.minCoeff() <= 0.0) return std::nullopt;
  Vec a = es.eigenvectors().transpose() * p;
  auto g = [&](double nu) {
    double s = 0.0;
    for (int k = 0; k < a.size(); ++k) s += e[k] * a[k] * a[k] / square(1.0 + nu * e[k]);
    return s;
  };
  double lo = -1.0 / e.maxCoeff() + 1e-14;
  double hi = 1.0;
  while (g(hi) > level) hi *= 2.0;
  while (g(lo) < level) lo = 0.5 * (lo - 1.0 / e.maxCoeff());  // push toward the pole
  for (int it = 0; it < 300; ++it) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) > level)
      lo = mid;
    else
      hi = mid;
  }
  double nu = 0.5 * (lo + hi);
  Vec t(a.size());
  for (int k = 0; k < a.size(); ++k) t[k] = a[k] / (1.0 + nu * e[k]);
  return Vec(es.eigenvectors() * t);
}

}  // namespace detail

/// Exact projection onto {z : z'Q^{-1}z <= level, Az <= b} (centered form) by
/// exhaustive enumeration of active sets; every KKT candidate that is primal
/// feasible is collected and the closest one returned. Exponential in the
/// number of affine rows, so restricted to small constraint counts.
inline std::pair<Vec, double> enumerate_project_ellipsoid_affine(const Vec& y, const Mat& shape,
                                                                 double level, const Mat& a,
                                                                 const Vec& b) {
  const int c = static_cast<int>(a.rows());
  require(c <= 14, "enumerate_project_ellipsoid_affine: too many constraints to enumerate");
  Mat qinv = shape.llt().solve(Mat::Identity(shape.rows(), shape.cols()));
  const double ftol = 1e-7;
  auto feasible = [&](const Vec& z) {
    if (z.dot(qinv * z) > level * (1.0 + 1e-7) + 1e-9) return false;
    for (int i = 0; i < c; ++i)
      if (a.row(i).dot(z) > b[i] + ftol) return false;
    return true;
  };
  Vec best;
  double best_d = kInf;
  auto consider = [&](const Vec& z) {
    if (!feasible(z)) return;
    double d = (y - z).norm();
    if (d < best_d) {
      best_d = d;
      best = z;
    }
  };

  for (unsigned mask = 0; mask < (1u << c); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < c; ++i)
      if (mask & (1u << i)) rows.push_back(i);
    const int m = static_cast<int>(rows.size());
    Mat as(m, a.cols());
    Vec bs(m);
    for (int i = 0; i < m; ++i) {
      as.row(i) = a.row(rows[i]);
      bs[i] = b[rows[i]];
    }
    Vec z_eq, basis_offset;
    Mat basis;  // orthonormal null-space basis of as
    if (m == 0) {
      z_eq = y;
      basis = Mat::Identity(a.cols(), a.cols());
      basis_offset = Vec::Zero(a.cols());
    } else {
      Eigen::JacobiSVD<Mat> svd(as, Eigen::ComputeFullV | Eigen::ComputeThinU);
      int rank = 0;
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
      if (rank < m) continue;  // degenerate active set; another mask covers it
      basis = svd.matrixV().rightCols(a.cols() - rank);
      basis_offset = as.transpose() * (as * as.transpose()).llt().solve(bs);  // min-norm point
      z_eq = y - as.transpose() * (as * as.transpose()).llt().solve(as * y - bs);
    }
    consider(z_eq);  // ellipsoid inactive branch
    if (basis.cols() == 0) continue;
    // ellipsoid active: z = z0 + B w with w'Mw + 2q'w + s = level
    const Vec& z0 = basis_offset;
    Mat mred = basis.transpose() * qinv * basis;
    Vec qred = basis.transpose() * (qinv * z0);
    double s0 = z0.dot(qinv * z0);
    Eigen::LLT<Mat> mllt(mred);
    if (mllt.info() != Eigen::Success) continue;
    Vec shift = mllt.solve(qred);
    double level_red = level - s0 + qred.dot(shift);
    Vec target = basis.transpose() * (y - z0) + shift;  // point to project in shifted coords
    auto w_tilde = detail::quadric_boundary_project(target, mred, level_red);
    if (!w_tilde) continue;
    Vec w = *w_tilde - shift;
    consider(z0 + basis * w);
  }
  require(best.size() > 0, "enumerate_project_ellipsoid_affine: no feasible candidate found");
  return {best, best_d};
}

}  // namespace distset
