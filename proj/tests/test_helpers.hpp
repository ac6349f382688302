#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "distset/geometry.hpp"
#include "distset/oracles.hpp"

namespace th {

using namespace distset;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec randn(int d, Rng& rng) {
  std::normal_distribution<double> g;
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = g(rng);
  return v;
}

inline Mat random_spd(int d, Rng& rng) {
  Mat g(d, d);
  std::normal_distribution<double> n;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = n(rng);
  Mat q = g * g.transpose() / d + 0.3 * Mat::Identity(d, d);
  return q;
}

enum class Family { L1, L2, Ell, EllAff, MultiEnv, Product };

inline SetDescriptor random_set(Family fam, int d, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  switch (fam) {
    case Family::L1:
      return SetDescriptor(L1Ball{randn(d, rng), 0.5 + 1.5 * u01(rng)});
    case Family::L2:
      return SetDescriptor(L2Ball{randn(d, rng), 0.5 + 1.5 * u01(rng)});
    case Family::Ell:
      return SetDescriptor(Ellipsoid(random_spd(d, rng), 0.5 + 1.5 * u01(rng), randn(d, rng)));
    case Family::EllAff: {
      int c = std::max(1, d - 1);
      Mat a(c, d);
      Vec b(c);
      for (int i = 0; i < c; ++i) {
        Vec row = randn(d, rng);
        a.row(i) = row / row.norm();
        b[i] = 0.05 + 0.95 * u01(rng);  // keeps the ellipsoid center feasible
      }
      return SetDescriptor(
          EllipsoidAffine(random_spd(d, rng), 0.5 + 1.5 * u01(rng), a, b, randn(d, rng)));
    }
    case Family::MultiEnv: {
      int n = 3 * d + 2, ng = d;
      Vec base = randn(n, rng);
      std::vector<int> grp(n);
      std::vector<std::uint8_t> tr(n);
      for (int i = 0; i < n; ++i) {
        grp[i] = i % ng;
        tr[i] = (u01(rng) < 0.7) ? 1 : 0;
      }
      tr[0] = 1;  // keep at least one treated record
      return SetDescriptor(MultiEnvDeviation{base, grp, tr, 0.5 + u01(rng), ng});
    }
    case Family::Product: {
      ProductSet p;
      p.components.push_back(random_set(Family::L1, d, rng));
      p.components.push_back(random_set(Family::L2, d, rng));
      return SetDescriptor(std::move(p));
    }
  }
  throw std::logic_error("unreachable");
}

inline Vec random_point_near(const SetDescriptor& set, Rng& rng, double spread = 2.0) {
  BoundingBall bb = bounding_ball(set);
  return bb.center + spread * std::max(bb.radius, 1.0) * randn(dimension(set), rng);
}

}  // namespace th
