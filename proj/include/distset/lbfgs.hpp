#pragma once

#include <algorithm>
#include <deque>

#include "distset/common.hpp"

namespace distset {

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 500;
  double grad_tol = 1e-8;
  int max_line_iter = 60;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  double grad_norm = 0.0;  // sup-norm of the projected gradient at exit
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline bool active_lower(double x, double lo, double g) {
  return std::isfinite(lo) && x <= lo + 1e-14 * std::max(1.0, std::abs(lo)) && g > 0.0;
}

}  // namespace detail

/// Minimizes a smooth function subject to (optional) elementwise lower bounds.
///
/// `fg(x, grad)` must return f(x) and fill `grad`. Pass an empty `lower` for an
/// unconstrained solve; otherwise lower[i] = -inf marks a free coordinate.
/// Interior steps use a strong-Wolfe line search; when a step would cross a
/// bound the search is capped at the boundary and accepted under Armijo.
template <class F>
LbfgsResult lbfgs_minimize(F&& fg, Vec x, const Vec& lower, const LbfgsOptions& opts = {}) {
  const int n = static_cast<int>(x.size());
  const bool boxed = lower.size() > 0;
  if (boxed) {
    require(lower.size() == x.size(), "lbfgs: bound/variable size mismatch");
    for (int i = 0; i < n; ++i) x[i] = std::max(x[i], lower[i]);
  }

  Vec g(n), g_new(n);
  double f = fg(x, g);

  struct Pair {
    Vec s, y;
    double rho;
  };
  std::deque<Pair> hist;

  auto projected_grad_norm = [&](const Vec& xx, const Vec& gg) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      double gi = gg[i];
      if (boxed && detail::active_lower(xx[i], lower[i], gi)) gi = 0.0;
      m = std::max(m, std::abs(gi));
    }
    return m;
  };

  LbfgsResult res;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    double pg = projected_grad_norm(x, g);
    if (pg <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Reduced gradient: freeze coordinates pinned at an active bound.
    Vec gr = g;
    if (boxed) {
      for (int i = 0; i < n; ++i)
        if (detail::active_lower(x[i], lower[i], g[i])) gr[i] = 0.0;
    }

    // Two-loop recursion.
    Vec d = -gr;
    if (!hist.empty()) {
      std::vector<double> alpha(hist.size());
      for (int k = static_cast<int>(hist.size()) - 1; k >= 0; --k) {
        alpha[k] = hist[k].rho * hist[k].s.dot(d);
        d -= alpha[k] * hist[k].y;
      }
      const Pair& last = hist.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
      for (std::size_t k = 0; k < hist.size(); ++k) {
        double beta = hist[k].rho * hist[k].y.dot(d);
        d += (alpha[k] - beta) * hist[k].s;
      }
    }
    if (boxed) {
      for (int i = 0; i < n; ++i)
        if (detail::active_lower(x[i], lower[i], g[i]) && d[i] < 0.0) d[i] = 0.0;
    }
    double dg = d.dot(g);
    if (!(dg < 0.0)) {  // not a descent direction; restart from steepest descent
      hist.clear();
      d = -gr;
      dg = d.dot(g);
      if (!(dg < 0.0)) break;
    }

    // Largest feasible step before a free coordinate hits its bound.
    double alpha_cap = kInf;
    if (boxed) {
      for (int i = 0; i < n; ++i)
        if (d[i] < 0.0 && std::isfinite(lower[i]))
          alpha_cap = std::min(alpha_cap, (lower[i] - x[i]) / d[i]);
      alpha_cap = std::max(alpha_cap, 0.0);
    }

    auto phi = [&](double a, Vec& grad_out) {
      Vec xt = x + a * d;
      if (boxed)
        for (int i = 0; i < n; ++i) xt[i] = std::max(xt[i], lower[i]);
      return fg(xt, grad_out);
    };

    // Strong Wolfe with bracketing/zoom, capped at alpha_cap.
    double a_prev = 0.0, f_prev = f, dphi0 = dg;
    double a = std::min(1.0, alpha_cap > 0 ? alpha_cap : 1.0);
    if (alpha_cap == 0.0) a = 1.0;  // degenerate cap: nothing movable this way
    double a_hi = -1.0, a_lo = -1.0, f_lo = f, f_hi = 0.0;
    double f_a = f;
    Vec g_a(n);
    bool found = false;
    int ls = 0;
    for (; ls < opts.max_line_iter; ++ls) {
      f_a = phi(a, g_a);
      double dphi = g_a.dot(d);
      if (!std::isfinite(f_a) || f_a > f + opts.wolfe_c1 * a * dphi0 || (ls > 0 && f_a >= f_prev)) {
        a_lo = a_prev;
        f_lo = f_prev;
        a_hi = a;
        f_hi = f_a;
        break;
      }
      if (std::abs(dphi) <= -opts.wolfe_c2 * dphi0) {
        found = true;
        break;
      }
      if (dphi >= 0.0) {
        a_lo = a;
        f_lo = f_a;
        a_hi = a_prev;
        f_hi = f_prev;
        break;
      }
      if (a >= alpha_cap) {  // stop at the boundary: Armijo already holds
        found = true;
        break;
      }
      a_prev = a;
      f_prev = f_a;
      a = std::min(2.0 * a, alpha_cap);
    }
    if (!found && a_hi >= 0.0) {
      for (; ls < opts.max_line_iter; ++ls) {  // zoom
        a = 0.5 * (a_lo + a_hi);
        f_a = phi(a, g_a);
        double dphi = g_a.dot(d);
        if (!std::isfinite(f_a) || f_a > f + opts.wolfe_c1 * a * dphi0 || f_a >= f_lo) {
          a_hi = a;
          f_hi = f_a;
        } else {
          if (std::abs(dphi) <= -opts.wolfe_c2 * dphi0) {
            found = true;
            break;
          }
          if (dphi * (a_hi - a_lo) >= 0.0) {
            a_hi = a_lo;
            f_hi = f_lo;
          }
          a_lo = a;
          f_lo = f_a;
        }
        if (std::abs(a_hi - a_lo) < 1e-16 * std::max(1.0, std::abs(a_lo))) break;
      }
      if (!found) {  // fall back to the best Armijo point seen
        a = a_lo;
        if (a <= 0.0) break;
        f_a = phi(a, g_a);
      }
    } else if (!found) {
      break;
    }

    Vec x_new = x + a * d;
    if (boxed)
      for (int i = 0; i < n; ++i) x_new[i] = std::max(x_new[i], lower[i]);
    g_new = g_a;
    Vec s = x_new - x;
    Vec yv = g_new - g;
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      hist.push_back({std::move(s), std::move(yv), 1.0 / sy});
      if (static_cast<int>(hist.size()) > opts.memory) hist.pop_front();
    }
    x = std::move(x_new);
    g = g_new;
    f = f_a;
  }

  res.x = std::move(x);
  res.f = f;
  res.grad_norm = projected_grad_norm(res.x, g);
  res.iterations = it;
  if (res.grad_norm <= opts.grad_tol) res.converged = true;
  return res;
}

}  // namespace distset
