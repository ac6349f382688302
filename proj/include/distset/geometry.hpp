#pragma once

#include "distset/dual.hpp"
#include "distset/projections.hpp"

namespace distset {

/// Euclidean projection dispatcher over all shipped set variants.
///
/// EllipsoidAffine delegates to the smoothed dual solve; MultiEnvDeviation to
/// weighted soft-thresholding on treated-group residual means; ProductSet is
/// componentwise with squared distances summed.
inline ProjectionResult project(const SetDescriptor& set, const Vec& y,
                                const DualOptions& dual_opts = {}) {
  require(y.size() == dimension(set), "project: dimension mismatch");
  return std::visit(
      [&](const auto& s) -> ProjectionResult {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, L1Ball>) {
          return project_l1_ball(y, s.center, s.radius);
        } else if constexpr (std::is_same_v<T, L2Ball>) {
          return project_l2_ball(y, s.center, s.radius);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return project_ellipsoid(y, s.shape, s.level, s.center);
        } else if constexpr (std::is_same_v<T, EllipsoidAffine>) {
          ProjectionResult res;
          if (contains(SetDescriptor(s), y, 0.0)) {
            res.z_hat = y;
            res.dual_point = Vec::Zero(y.size());
            return res;
          }
          DualSolution dual = solve_dual(s, y, dual_opts);
          res.z_hat = y - dual.u_hat;
          res.distance = dual.u_hat.norm();
          res.dual_point = dual.u_hat;
          res.converged = dual.converged;
          res.iterations = dual.iterations;
          return res;
        } else if constexpr (std::is_same_v<T, MultiEnvDeviation>) {
          GroupResiduals gr = group_treated_residuals(s, y);
          // groups without treated records cannot move; run the threshold on
          // the active groups only
          std::vector<int> active;
          for (int g = 0; g < s.n_groups; ++g)
            if (gr.counts[g] > 0.0) active.push_back(g);
          Vec means(active.size()), weights(active.size());
          for (std::size_t k = 0; k < active.size(); ++k) {
            means[k] = gr.means[active[k]];
            weights[k] = gr.counts[active[k]];
          }
          WeightedSoftThresholdResult wst =
              project_weighted_soft_threshold(means, weights, s.radius);
          Vec delta = Vec::Zero(s.n_groups);
          for (std::size_t k = 0; k < active.size(); ++k) delta[active[k]] = wst.deltas[k];
          ProjectionResult res;
          res.z_hat = s.baseline;
          for (int i = 0; i < y.size(); ++i)
            if (s.treated[i]) res.z_hat[i] += delta[s.group[i]];
          res.distance = (y - res.z_hat).norm();
          res.multiplier = wst.lambda;
          res.dual_point = y - res.z_hat;
          return res;
        } else {  // ProductSet
          ProjectionResult res;
          res.z_hat.resize(y.size());
          double sq = 0.0;
          int off = 0;
          for (const auto& comp : s.components) {
            int d = dimension(comp);
            ProjectionResult sub = project(comp, y.segment(off, d), dual_opts);
            res.z_hat.segment(off, d) = sub.z_hat;
            sq += sub.distance * sub.distance;
            res.converged = res.converged && sub.converged;
            res.iterations += sub.iterations;
            off += d;
          }
          res.distance = std::sqrt(sq);
          res.dual_point = y - res.z_hat;
          return res;
        }
      },
      set.v);
}

inline double distance(const SetDescriptor& set, const Vec& y) { return project(set, y).distance; }

/// |0.5 dist^2(y, set) - dual_value|, the strong-duality certificate.
inline double duality_gap(const SetDescriptor& set, const Vec& y, const DualSolution& dual) {
  double d = distance(set, y);
  return std::abs(0.5 * d * d - dual.dual_value);
}

/// Tests v in N_set(z_hat) = {v : v'(zeta - z_hat) <= 0 for all zeta in set}.
///
/// Smooth boundaries (l2 ball, ellipsoid) use the exact outward-normal
/// characterization; other variants are probed with n_probe points obtained by
/// projecting overdispersed Gaussian draws into the set.
inline bool normal_cone_check(const SetDescriptor& set, const Vec& z_hat, const Vec& v,
                              int n_probe = 256, std::uint64_t rng_seed = 0,
                              double tol = kMembershipTol) {
  require(z_hat.size() == dimension(set) && v.size() == z_hat.size(),
          "normal_cone_check: dimension mismatch");
  if (!contains(set, z_hat, std::max(tol, 1e-7)))
    throw std::invalid_argument("normal_cone_check: z_hat is not a member of the set");

  auto parallel_outward = [&](const Vec& normal) {
    double nn = normal.norm();
    double nv = v.norm();
    if (nv <= tol) return true;  // zero vector lies in every normal cone
    if (nn <= tol) return false;
    Vec n_unit = normal / nn;
    double along = v.dot(n_unit);
    double residual = (v - along * n_unit).norm();
    return along >= -tol && residual <= tol * std::max(1.0, nv);
  };

  if (const auto* s = set.get_if<L2Ball>()) {
    double gap = s->radius - (z_hat - s->center).norm();
    if (gap > tol) return v.norm() <= tol;  // strict interior: cone is {0}
    return parallel_outward(z_hat - s->center);
  }
  if (const auto* s = set.get_if<Ellipsoid>()) {
    Vec w = z_hat - s->center;
    double q = w.dot(s->shape.ldlt().solve(w));
    if (q < s->level - tol * std::max(1.0, s->level)) return v.norm() <= tol;
    return parallel_outward(s->shape.ldlt().solve(w));
  }

  BoundingBall bb = bounding_ball(set);
  Rng rng = make_rng(rng_seed, 0x6e43);
  std::normal_distribution<double> gauss;
  const double vnorm = std::max(1.0, v.norm());
  for (int i = 0; i < n_probe; ++i) {
    Vec x(z_hat.size());
    for (int k = 0; k < x.size(); ++k) x[k] = gauss(rng);
    x = bb.center + (1.5 * bb.radius) * x;
    Vec zeta = project(set, x).z_hat;
    if (v.dot(zeta - z_hat) > tol * vnorm * std::max(1.0, (zeta - z_hat).norm())) return false;
  }
  return true;
}

}  // namespace distset
