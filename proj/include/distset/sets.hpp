#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "distset/common.hpp"
#include "distset/lbfgs.hpp"

namespace distset {

struct SetDescriptor;

/// {z : sum_j |z_j - center_j| <= radius}
struct L1Ball {
  Vec center;
  double radius;
};

/// {z : ||z - center||_2 <= radius}
struct L2Ball {
  Vec center;
  double radius;
};

/// {z : (z-center)' Q^{-1} (z-center) <= level}, Q symmetric positive definite.
struct Ellipsoid {
  Mat shape;     // Q
  double level;  // r
  Vec center;    // defaults to the origin
  Ellipsoid(Mat q, double r) : shape(std::move(q)), level(r), center(Vec::Zero(shape.rows())) {}
  Ellipsoid(Mat q, double r, Vec c) : shape(std::move(q)), level(r), center(std::move(c)) {}
};

/// {z : (z-c)' Q^{-1} (z-c) <= level, A (z-c) <= bound}
struct EllipsoidAffine {
  Mat shape;       // Q
  double level;    // r
  Mat constraint;  // A, one row per inequality
  Vec bound;       // b
  Vec center;
  EllipsoidAffine(Mat q, double r, Mat a, Vec b)
      : shape(std::move(q)),
        level(r),
        constraint(std::move(a)),
        bound(std::move(b)),
        center(Vec::Zero(shape.rows())) {}
  EllipsoidAffine(Mat q, double r, Mat a, Vec b, Vec c)
      : shape(std::move(q)),
        level(r),
        constraint(std::move(a)),
        bound(std::move(b)),
        center(std::move(c)) {}
};

/// Deviation set for grouped treatment effects: vectors
///   baseline + delta_{group(i)} * treated(i)  with  sum_s |delta_s| <= radius.
struct MultiEnvDeviation {
  Vec baseline;              // one entry per record
  std::vector<int> group;    // group index per record, in [0, n_groups)
  std::vector<std::uint8_t> treated;
  double radius;
  int n_groups;
};

/// Cartesian product of per-observation sets; distances add in squares.
struct ProductSet {
  std::vector<SetDescriptor> components;
};

struct SetDescriptor {
  std::variant<L1Ball, L2Ball, Ellipsoid, EllipsoidAffine, MultiEnvDeviation, ProductSet> v;

  SetDescriptor(L1Ball s) : v(std::move(s)) {}
  SetDescriptor(L2Ball s) : v(std::move(s)) {}
  SetDescriptor(Ellipsoid s) : v(std::move(s)) {}
  SetDescriptor(EllipsoidAffine s) : v(std::move(s)) {}
  SetDescriptor(MultiEnvDeviation s) : v(std::move(s)) {}
  SetDescriptor(ProductSet s) : v(std::move(s)) {}

  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v);
  }
};

// ---------------------------------------------------------------------------
// Dimensions and validation

inline int dimension(const SetDescriptor& s);

namespace detail {

inline int dim_of(const L1Ball& s) { return static_cast<int>(s.center.size()); }
inline int dim_of(const L2Ball& s) { return static_cast<int>(s.center.size()); }
inline int dim_of(const Ellipsoid& s) { return static_cast<int>(s.shape.rows()); }
inline int dim_of(const EllipsoidAffine& s) { return static_cast<int>(s.shape.rows()); }
inline int dim_of(const MultiEnvDeviation& s) { return static_cast<int>(s.baseline.size()); }
inline int dim_of(const ProductSet& s) {
  int d = 0;
  for (const auto& c : s.components) d += dimension(c);
  return d;
}

inline void check_spd(const Mat& q, const char* what) {
  require(q.rows() == q.cols(), std::string(what) + ": shape matrix must be square");
  require((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + q.cwiseAbs().maxCoeff()),
          std::string(what) + ": shape matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(q, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, std::string(what) + ": shape matrix must be positive definite");
}

}  // namespace detail

inline int dimension(const SetDescriptor& s) {
  return std::visit([](const auto& x) { return detail::dim_of(x); }, s.v);
}

/// Throws std::invalid_argument if the descriptor violates a structural invariant.
inline void validate(const SetDescriptor& s) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, L1Ball> || std::is_same_v<T, L2Ball>) {
          require(x.radius > 0.0, "ball radius must be positive");
          require(x.center.size() > 0, "ball center must be nonempty");
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          require(x.level > 0.0, "ellipsoid level must be positive");
          detail::check_spd(x.shape, "ellipsoid");
          require(x.center.size() == x.shape.rows(), "ellipsoid center dimension mismatch");
        } else if constexpr (std::is_same_v<T, EllipsoidAffine>) {
          require(x.level > 0.0, "ellipsoid level must be positive");
          detail::check_spd(x.shape, "ellipsoid-affine");
          require(x.center.size() == x.shape.rows(), "ellipsoid-affine center dimension mismatch");
          require(x.constraint.cols() == x.shape.rows(), "constraint matrix column mismatch");
          require(x.bound.size() == x.constraint.rows(), "constraint bound size mismatch");
        } else if constexpr (std::is_same_v<T, MultiEnvDeviation>) {
          require(x.radius > 0.0, "deviation radius must be positive");
          require(x.n_groups > 0, "need at least one group");
          require(x.group.size() == static_cast<std::size_t>(x.baseline.size()) &&
                      x.treated.size() == x.group.size(),
                  "record field lengths must agree");
          for (int g : x.group) require(g >= 0 && g < x.n_groups, "group index out of range");
        } else if constexpr (std::is_same_v<T, ProductSet>) {
          require(!x.components.empty(), "product set must have at least one component");
          for (const auto& c : x.components) validate(c);
        }
      },
      s.v);
}

// ---------------------------------------------------------------------------
// Membership

inline bool contains(const SetDescriptor& s, const Vec& y, double tol = kMembershipTol);

namespace detail {

inline bool contains_impl(const L1Ball& s, const Vec& y, double tol) {
  return (y - s.center).lpNorm<1>() <= s.radius + tol;
}
inline bool contains_impl(const L2Ball& s, const Vec& y, double tol) {
  return (y - s.center).norm() <= s.radius + tol;
}
inline bool contains_impl(const Ellipsoid& s, const Vec& y, double tol) {
  Vec z = y - s.center;
  return z.dot(s.shape.ldlt().solve(z)) <= s.level + tol;
}
inline bool contains_impl(const EllipsoidAffine& s, const Vec& y, double tol) {
  Vec z = y - s.center;
  if (z.dot(s.shape.ldlt().solve(z)) > s.level + tol) return false;
  if (s.constraint.rows() == 0) return true;
  return ((s.constraint * z - s.bound).array() <= tol).all();
}
inline bool contains_impl(const MultiEnvDeviation& s, const Vec& y, double tol) {
  // y must equal baseline off treatment, and have a common per-group shift on it.
  Vec delta = Vec::Zero(s.n_groups);
  std::vector<bool> seen(s.n_groups, false);
  for (int i = 0; i < y.size(); ++i) {
    double d = y[i] - s.baseline[i];
    if (!s.treated[i]) {
      if (std::abs(d) > tol) return false;
      continue;
    }
    int g = s.group[i];
    if (!seen[g]) {
      seen[g] = true;
      delta[g] = d;
    } else if (std::abs(d - delta[g]) > tol) {
      return false;
    }
  }
  return delta.lpNorm<1>() <= s.radius + tol;
}
inline bool contains_impl(const ProductSet& s, const Vec& y, double tol) {
  int off = 0;
  for (const auto& c : s.components) {
    int d = dimension(c);
    if (!contains(c, y.segment(off, d), tol)) return false;
    off += d;
  }
  return true;
}

}  // namespace detail

inline bool contains(const SetDescriptor& s, const Vec& y, double tol) {
  require(y.size() == dimension(s), "contains: dimension mismatch");
  return std::visit([&](const auto& x) { return detail::contains_impl(x, y, tol); }, s.v);
}

// ---------------------------------------------------------------------------
// Translation: returns the descriptor of {z + b : z in set}.

inline SetDescriptor translate(const SetDescriptor& s, const Vec& b) {
  require(b.size() == dimension(s), "translate: dimension mismatch");
  return std::visit(
      [&](const auto& x) -> SetDescriptor {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, L1Ball> || std::is_same_v<T, L2Ball>) {
          T out = x;
          out.center += b;
          return SetDescriptor(out);
        } else if constexpr (std::is_same_v<T, Ellipsoid> || std::is_same_v<T, EllipsoidAffine>) {
          T out = x;
          out.center += b;
          return SetDescriptor(out);
        } else if constexpr (std::is_same_v<T, MultiEnvDeviation>) {
          T out = x;
          out.baseline += b;
          return SetDescriptor(out);
        } else {
          ProductSet out;
          int off = 0;
          for (const auto& c : x.components) {
            int d = dimension(c);
            out.components.push_back(translate(c, b.segment(off, d)));
            off += d;
          }
          return SetDescriptor(std::move(out));
        }
      },
      s.v);
}

// ---------------------------------------------------------------------------
// Enclosing ball (used for probe sampling, Monte Carlo volumes, PPP bounds).

struct BoundingBall {
  Vec center;
  double radius;
};

inline BoundingBall bounding_ball(const SetDescriptor& s) {
  return std::visit(
      [&](const auto& x) -> BoundingBall {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, L1Ball> || std::is_same_v<T, L2Ball>) {
          return {x.center, x.radius};
        } else if constexpr (std::is_same_v<T, Ellipsoid> || std::is_same_v<T, EllipsoidAffine>) {
          Eigen::SelfAdjointEigenSolver<Mat> es(x.shape, Eigen::EigenvaluesOnly);
          return {x.center, std::sqrt(x.level * es.eigenvalues().maxCoeff())};
        } else if constexpr (std::is_same_v<T, MultiEnvDeviation>) {
          Vec counts = Vec::Zero(x.n_groups);
          for (std::size_t i = 0; i < x.group.size(); ++i)
            if (x.treated[i]) counts[x.group[i]] += 1.0;
          double cmax = counts.size() > 0 ? counts.maxCoeff() : 0.0;
          return {x.baseline, x.radius * std::sqrt(std::max(cmax, 1.0))};
        } else {
          Vec c(detail::dim_of(x));
          double r2 = 0.0;
          int off = 0;
          for (const auto& comp : x.components) {
            BoundingBall bb = bounding_ball(comp);
            c.segment(off, bb.center.size()) = bb.center;
            r2 += bb.radius * bb.radius;
            off += static_cast<int>(bb.center.size());
          }
          return {std::move(c), std::sqrt(r2)};
        }
      },
      s.v);
}

// ---------------------------------------------------------------------------
// Support function S(u) = sup_{z in set} u'z.

inline double support_function(const SetDescriptor& s, const Vec& u);

namespace detail {

/// Inner minimization for the intersection support:
/// min_{v >= 0} b'v + sqrt(level * (u - A'v)' Q (u - A'v) + eps).
inline double ellipsoid_affine_support(const Vec& u, const Mat& q, double level, const Mat& a,
                                       const Vec& b, double eps = 1e-12) {
  const int c = static_cast<int>(a.rows());
  if (c == 0) return std::sqrt(level * u.dot(q * u));
  auto fg = [&](const Vec& v, Vec& grad) {
    Vec w = u - a.transpose() * v;
    Vec qw = q * w;
    double root = std::sqrt(level * w.dot(qw) + eps);
    grad = b - (level / root) * (a * qw);
    return b.dot(v) + root;
  };
  LbfgsOptions opts;
  opts.grad_tol = 1e-9;
  LbfgsResult r = lbfgs_minimize(fg, Vec::Zero(c), Vec::Zero(c), opts);
  Vec w = u - a.transpose() * r.x;
  return b.dot(r.x) + std::sqrt(level * w.dot(q * w));
}

inline double support_impl(const L1Ball& s, const Vec& u) {
  return s.center.dot(u) + s.radius * u.lpNorm<Eigen::Infinity>();
}
inline double support_impl(const L2Ball& s, const Vec& u) {
  return s.center.dot(u) + s.radius * u.norm();
}
inline double support_impl(const Ellipsoid& s, const Vec& u) {
  return s.center.dot(u) + std::sqrt(s.level * u.dot(s.shape * u));
}
inline double support_impl(const EllipsoidAffine& s, const Vec& u) {
  return s.center.dot(u) +
         ellipsoid_affine_support(u, s.shape, s.level, s.constraint, s.bound);
}
inline double support_impl(const MultiEnvDeviation& s, const Vec& u) {
  // sup over delta in the l1 ball of u' (baseline + T delta) with T the
  // treated-record indicator map.
  Vec tu = Vec::Zero(s.n_groups);
  for (int i = 0; i < u.size(); ++i)
    if (s.treated[i]) tu[s.group[i]] += u[i];
  return s.baseline.dot(u) + s.radius * tu.lpNorm<Eigen::Infinity>();
}
inline double support_impl(const ProductSet& s, const Vec& u) {
  double total = 0.0;
  int off = 0;
  for (const auto& c : s.components) {
    int d = dimension(c);
    total += support_function(c, u.segment(off, d));
    off += d;
  }
  return total;
}

}  // namespace detail

inline double support_function(const SetDescriptor& s, const Vec& u) {
  require(u.size() == dimension(s), "support_function: dimension mismatch");
  return std::visit([&](const auto& x) { return detail::support_impl(x, u); }, s.v);
}

}  // namespace distset
