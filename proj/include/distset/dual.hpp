#pragma once

#include <functional>
#include <optional>

#include "distset/projections.hpp"

namespace distset {

struct DualSolution {
  Vec u_hat;
  std::optional<Vec> v_hat;  // multipliers of the affine part, absent when c = 0
  double dual_value = 0.0;   // evaluated without smoothing at the solution
  double gradient_norm_at_exit = 0.0;
  int iterations = 0;
  double smoothing_eps = 0.0;
  bool converged = false;
};

struct DualOptions {
  double eps = 1e-10;
  int max_iter = 500;
  double tol = 1e-8;
};

/// Maximizes  y'u - ||u||^2/2 - b'v - sqrt(level (u - A'v)' Q (u - A'v) + eps)
/// over u free, v >= 0.  The primal projection is recovered as z = y - u_hat.
///
/// Centered sets are handled by shifting y; warm start from the projection
/// onto the unconstrained ellipsoid.
inline DualSolution solve_dual_ellipsoid_affine(const Vec& y, const Mat& shape, double level,
                                                const Mat& constraint, const Vec& bound,
                                                const DualOptions& opts = {},
                                                const Vec& center_in = Vec()) {
  const int d = static_cast<int>(y.size());
  const int c = static_cast<int>(constraint.rows());
  Vec center = center_in.size() ? center_in : Vec::Zero(d);
  Vec yc = y - center;

  const double eps = opts.eps;
  auto fg = [&](const Vec& x, Vec& grad) {
    Vec u = x.head(d);
    Vec v = x.tail(c);
    Vec w = u - (c > 0 ? Vec(constraint.transpose() * v) : Vec(Vec::Zero(d)));
    Vec qw = shape * w;
    double root = std::sqrt(level * w.dot(qw) + eps);
    double f = -(yc.dot(u) - 0.5 * u.squaredNorm() - (c > 0 ? bound.dot(v) : 0.0) - root);
    grad.resize(d + c);
    grad.head(d) = -(yc - u - (level / root) * qw);
    if (c > 0) grad.tail(c) = -(-bound + (level / root) * (constraint * qw));
    return f;
  };

  Vec x0(d + c);
  ProjectionResult warm = project_ellipsoid(yc, shape, level);
  x0.head(d) = yc - warm.z_hat;
  if (c > 0) x0.tail(c).setZero();

  Vec lower = Vec::Constant(d + c, kNegInf);
  if (c > 0) lower.tail(c).setZero();

  LbfgsOptions lopts;
  lopts.max_iter = opts.max_iter;
  lopts.grad_tol = opts.tol;
  LbfgsResult lr = lbfgs_minimize(fg, std::move(x0), lower, lopts);

  DualSolution sol;
  sol.u_hat = lr.x.head(d);
  if (c > 0) sol.v_hat = Vec(lr.x.tail(c));
  Vec w = sol.u_hat - (c > 0 ? Vec(constraint.transpose() * (*sol.v_hat)) : Vec(Vec::Zero(d)));
  sol.dual_value = yc.dot(sol.u_hat) - 0.5 * sol.u_hat.squaredNorm() -
                   (c > 0 ? bound.dot(*sol.v_hat) : 0.0) -
                   std::sqrt(level * w.dot(shape * w));
  sol.gradient_norm_at_exit = lr.grad_norm;
  sol.iterations = lr.iterations;
  sol.smoothing_eps = eps;
  sol.converged = lr.converged;
  return sol;
}

inline DualSolution solve_dual(const EllipsoidAffine& s, const Vec& y, const DualOptions& opts = {}) {
  return solve_dual_ellipsoid_affine(y, s.shape, s.level, s.constraint, s.bound, opts, s.center);
}

// duality_gap lives in geometry.hpp next to the projection dispatcher.

// ---------------------------------------------------------------------------
// Danskin gradients of squared distance with respect to set parameters:
//   grad = -2 d/dtheta S_{Z_theta}(u) |_{u = u_hat}.

enum class SetParameter { Radius, Center, Bound, Shape };

struct DanskinGradient {
  Vec value;
  /// True when u_hat sits at a non-smooth point of the support function and a
  /// particular subgradient was selected.
  bool subgradient_selected = false;
};

namespace detail {

inline bool linf_tied(const Vec& u, double rel = 1e-9) {
  if (u.size() < 2) return false;
  Vec a = u.cwiseAbs();
  double m1 = -1.0, m2 = -1.0;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] > m1) {
      m2 = m1;
      m1 = a[i];
    } else if (a[i] > m2) {
      m2 = a[i];
    }
  }
  return m1 - m2 <= rel * std::max(1.0, m1);
}

}  // namespace detail

inline DanskinGradient danskin_grad(const SetDescriptor& set, const Vec& y,
                                    const DualSolution& dual, SetParameter wrt) {
  (void)y;
  const Vec& u = dual.u_hat;
  DanskinGradient out;
  const double unorm = u.norm();
  if (unorm <= 1e-14) {
    // interior point: distance is locally zero, all parameter gradients vanish
    if (wrt == SetParameter::Center || wrt == SetParameter::Bound) {
      int n = wrt == SetParameter::Center
                  ? dimension(set)
                  : (set.get_if<EllipsoidAffine>() ? set.get_if<EllipsoidAffine>()->constraint.rows() : 0);
      out.value = Vec::Zero(n);
    } else {
      out.value = Vec::Zero(1);
    }
    out.subgradient_selected = true;
    return out;
  }

  if (const auto* s = set.get_if<L1Ball>()) {
    (void)s;
    if (wrt == SetParameter::Radius) {
      out.value = Vec::Constant(1, -2.0 * u.lpNorm<Eigen::Infinity>());
      out.subgradient_selected = detail::linf_tied(u);
    } else if (wrt == SetParameter::Center) {
      out.value = -2.0 * u;
    } else {
      throw std::invalid_argument("danskin_grad: unsupported parameter for l1 ball");
    }
    return out;
  }
  if (const auto* s = set.get_if<L2Ball>()) {
    (void)s;
    if (wrt == SetParameter::Radius) {
      out.value = Vec::Constant(1, -2.0 * unorm);
    } else if (wrt == SetParameter::Center) {
      out.value = -2.0 * u;
    } else {
      throw std::invalid_argument("danskin_grad: unsupported parameter for l2 ball");
    }
    return out;
  }
  if (const auto* s = set.get_if<Ellipsoid>()) {
    if (wrt == SetParameter::Radius) {
      // d/dr sqrt(r u'Qu) = sqrt(u'Qu / r) / 2
      out.value = Vec::Constant(1, -std::sqrt(u.dot(s->shape * u) / s->level));
    } else if (wrt == SetParameter::Center) {
      out.value = -2.0 * u;
    } else if (wrt == SetParameter::Shape) {
      double root = std::sqrt(s->level * u.dot(s->shape * u));
      Mat g = -(s->level / root) * (u * u.transpose());
      out.value = Eigen::Map<Vec>(g.data(), g.size());
    } else {
      throw std::invalid_argument("danskin_grad: unsupported parameter for ellipsoid");
    }
    return out;
  }
  if (const auto* s = set.get_if<EllipsoidAffine>()) {
    Vec v = dual.v_hat ? *dual.v_hat : Vec::Zero(s->constraint.rows());
    Vec w = u - s->constraint.transpose() * v;
    if (wrt == SetParameter::Radius) {
      out.value = Vec::Constant(1, -std::sqrt(w.dot(s->shape * w) / s->level));
    } else if (wrt == SetParameter::Bound) {
      out.value = -2.0 * v;
    } else if (wrt == SetParameter::Center) {
      out.value = -2.0 * u;
    } else {
      throw std::invalid_argument("danskin_grad: unsupported parameter for ellipsoid-affine");
    }
    return out;
  }
  if (const auto* s = set.get_if<MultiEnvDeviation>()) {
    if (wrt == SetParameter::Radius) {
      Vec tu = Vec::Zero(s->n_groups);
      for (int i = 0; i < u.size(); ++i)
        if (s->treated[i]) tu[s->group[i]] += u[i];
      out.value = Vec::Constant(1, -2.0 * tu.lpNorm<Eigen::Infinity>());
      out.subgradient_selected = detail::linf_tied(tu);
    } else {
      throw std::invalid_argument("danskin_grad: unsupported parameter for deviation set");
    }
    return out;
  }
  throw std::invalid_argument("danskin_grad: parameter gradients are defined per primitive set");
}

/// Max over coordinates of |central difference - grad| / max(1, |grad|).
inline double finite_diff_check(const std::function<double(const Vec&)>& f, const Vec& grad,
                                const Vec& theta0, double h = 1e-5) {
  require(grad.size() == theta0.size(), "finite_diff_check: size mismatch");
  double worst = 0.0;
  for (int k = 0; k < theta0.size(); ++k) {
    Vec tp = theta0, tm = theta0;
    tp[k] += h;
    tm[k] -= h;
    double fd = (f(tp) - f(tm)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
  }
  return worst;
}

}  // namespace distset
