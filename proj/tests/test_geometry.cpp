#include "test_helpers.hpp"

using namespace distset;
using th::vec;

TEST_CASE("membership over shipped variants") {
  SetDescriptor dia(L1Ball{Vec::Zero(2), 1.0});
  CHECK(contains(dia, vec({0.5, 0.4})));
  CHECK_FALSE(contains(dia, vec({2.0, 1.0})));

  SetDescriptor ell(Ellipsoid(Mat::Identity(2, 2), 1.0));
  CHECK(contains(ell, vec({1.0, 0.0})));  // boundary counts as inside

  CHECK_THROWS_AS(contains(dia, vec({1.0, 2.0, 3.0})), std::invalid_argument);
}

TEST_CASE("descriptor validation") {
  CHECK_THROWS_AS(validate(SetDescriptor(L1Ball{Vec::Zero(2), -1.0})), std::invalid_argument);
  Mat notspd = -Mat::Identity(2, 2);
  CHECK_THROWS_AS(validate(SetDescriptor(Ellipsoid(notspd, 1.0))), std::invalid_argument);
  CHECK_THROWS_AS(validate(SetDescriptor(ProductSet{})), std::invalid_argument);
  CHECK_NOTHROW(validate(SetDescriptor(L2Ball{Vec::Zero(3), 0.5})));
}

TEST_CASE("l1 ball projection: interior, generic, vertex") {
  auto inside = project_l1_ball(vec({0.3, -0.2}), Vec::Zero(2), 1.0);
  CHECK(inside.distance == 0.0);
  CHECK(*inside.multiplier == 0.0);
  CHECK(inside.z_hat.isApprox(vec({0.3, -0.2})));

  auto r = project_l1_ball(vec({2.0, 1.0}), Vec::Zero(2), 1.0);
  CHECK(r.z_hat.isApprox(vec({1.0, 0.0}), 1e-12));
  CHECK(r.distance == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(*r.multiplier == Catch::Approx(1.0).epsilon(1e-12));
  // KKT stationarity: y - z = lambda * s with s in the subdifferential of the
  // l1 norm at z (s_1 = 1 on the active coordinate, |s_2| <= 1)
  Vec resid = vec({2.0, 1.0}) - r.z_hat;
  CHECK(resid[0] == Catch::Approx(*r.multiplier));
  CHECK(std::abs(resid[1]) <= *r.multiplier + 1e-12);
  // dense grid over the diamond
  auto [zg, dg] = grid_project(SetDescriptor(L1Ball{Vec::Zero(2), 1.0}), vec({2.0, 1.0}));
  CHECK((zg - r.z_hat).norm() < 2e-3);
  CHECK(std::abs(dg - r.distance) < 1e-4);

  auto v = project_l1_ball(vec({3.0, 0.0}), Vec::Zero(2), 1.0);
  CHECK(v.z_hat.isApprox(vec({1.0, 0.0}), 1e-12));
  CHECK(v.distance == Catch::Approx(2.0));

  CHECK_THROWS_AS(project_l1_ball(vec({1.0}), vec({0.0}), 0.0), std::invalid_argument);
}

TEST_CASE("l2 ball projection") {
  auto r = project_l2_ball(vec({3.0, 4.0}), Vec::Zero(2), 1.0);
  CHECK(r.z_hat.isApprox(vec({0.6, 0.8}), 1e-12));
  CHECK(r.distance == Catch::Approx(4.0));

  Vec c = vec({1.0, -2.0});
  auto at_center = project_l2_ball(c, c, 0.7);
  CHECK(at_center.distance == 0.0);
  CHECK(at_center.z_hat.isApprox(c));

  auto col = project_l2_ball(vec({2.0, 0.0}), vec({1.0, 0.0}), 0.5);
  CHECK(col.z_hat.isApprox(vec({1.5, 0.0}), 1e-12));
  CHECK(col.distance == Catch::Approx(0.5));
}

TEST_CASE("ellipsoid projection") {
  // identity shape reduces to the unit l2 ball
  auto r = project_ellipsoid(vec({3.0, 4.0}), Mat::Identity(2, 2), 1.0);
  CHECK(r.z_hat.isApprox(vec({0.6, 0.8}), 1e-9));
  CHECK(r.distance == Catch::Approx(4.0).epsilon(1e-9));

  Mat q = Mat::Zero(2, 2);
  q(0, 0) = 4.0;
  q(1, 1) = 1.0;
  auto ax = project_ellipsoid(vec({4.0, 0.0}), q, 1.0);
  CHECK(ax.z_hat.isApprox(vec({2.0, 0.0}), 1e-9));
  CHECK(ax.distance == Catch::Approx(2.0).epsilon(1e-9));
  CHECK(ax.z_hat.dot(q.ldlt().solve(ax.z_hat)) == Catch::Approx(1.0).epsilon(1e-9));
  auto [zg, dg] = grid_project(SetDescriptor(Ellipsoid(q, 1.0)), vec({4.0, 0.0}));
  CHECK((zg - ax.z_hat).norm() < 2e-3);
  CHECK(std::abs(dg - ax.distance) < 1e-4);

  Vec inside = vec({0.5, 0.3});
  auto ri = project_ellipsoid(inside, q, 1.0);
  CHECK(ri.distance == 0.0);
  CHECK(*ri.multiplier == 0.0);
  CHECK(ri.z_hat.isApprox(inside));
}

TEST_CASE("weighted soft-threshold path") {
  auto easy = project_weighted_soft_threshold(vec({0.1, -0.1}), vec({10.0, 10.0}), 1.0);
  CHECK(easy.lambda == 0.0);
  CHECK(easy.deltas.isApprox(vec({0.1, -0.1})));

  auto sym = project_weighted_soft_threshold(vec({1.0, -1.0}), vec({1.0, 1.0}), 1.0);
  CHECK(sym.lambda == Catch::Approx(0.5).margin(1e-9));
  CHECK(sym.deltas[0] == Catch::Approx(0.5).margin(1e-9));
  CHECK(sym.deltas[1] == Catch::Approx(-0.5).margin(1e-9));
  CHECK(sym.deltas.lpNorm<1>() == Catch::Approx(1.0).margin(1e-9));

  // piecewise-linear path: lambda = 1 exactly kills the small group
  auto kill = project_weighted_soft_threshold(vec({2.0, 0.1}), vec({1.0, 1.0}), 1.0);
  CHECK(kill.lambda == Catch::Approx(1.0).margin(1e-8));
  CHECK(kill.deltas[0] == Catch::Approx(1.0).margin(1e-8));
  CHECK(kill.deltas[1] == 0.0);

  CHECK_THROWS_AS(project_weighted_soft_threshold(vec({1.0}), vec({1.0}), -0.5),
                  std::invalid_argument);
}

TEST_CASE("support function closed forms") {
  CHECK(support_function(SetDescriptor(L1Ball{Vec::Zero(2), 2.0}), vec({1.0, 3.0})) ==
        Catch::Approx(6.0));
  CHECK(support_function(SetDescriptor(Ellipsoid(Mat::Identity(2, 2), 4.0)), vec({3.0, 4.0})) ==
        Catch::Approx(10.0));
  CHECK(support_function(SetDescriptor(L2Ball{vec({1.0, 0.0}), 1.0}), vec({0.0, 1.0})) ==
        Catch::Approx(1.0));
}

TEST_CASE("normal cone checks") {
  SetDescriptor ball(L2Ball{Vec::Zero(2), 1.0});
  CHECK(normal_cone_check(ball, vec({1.0, 0.0}), vec({2.0, 0.0})));
  CHECK_FALSE(normal_cone_check(ball, vec({1.0, 0.0}), vec({0.0, 1.0})));

  // vertex of the diamond: cone is {alpha (1, s): s in [-1, 1]}
  SetDescriptor dia(L1Ball{Vec::Zero(2), 1.0});
  CHECK(normal_cone_check(dia, vec({1.0, 0.0}), vec({1.0, 0.5}), 512, 7));
  CHECK_FALSE(normal_cone_check(dia, vec({1.0, 0.0}), vec({0.5, 1.0}), 512, 7));

  CHECK_THROWS_AS(normal_cone_check(ball, vec({2.0, 0.0}), vec({1.0, 0.0})),
                  std::invalid_argument);
}

TEST_CASE("projection dispatcher over a product set") {
  ProductSet p;
  p.components.push_back(SetDescriptor(L2Ball{Vec::Zero(2), 1.0}));
  p.components.push_back(SetDescriptor(L2Ball{Vec::Zero(2), 1.0}));
  SetDescriptor prod(std::move(p));
  auto r = project(prod, vec({3.0, 4.0, 0.0, 0.0}));
  CHECK(r.distance == Catch::Approx(4.0));
  CHECK(r.z_hat.isApprox(vec({0.6, 0.8, 0.0, 0.0}), 1e-12));
}

TEST_CASE("multi-env deviation projection matches the grouped formula") {
  // single group, four treated records with mean residual 1, radius 0.5
  Vec base = Vec::Zero(5);
  std::vector<int> grp{0, 0, 0, 0, 0};
  std::vector<std::uint8_t> tr{1, 1, 1, 1, 0};
  SetDescriptor s(MultiEnvDeviation{base, grp, tr, 0.5, 1});
  Vec y = vec({1.0, 1.0, 1.0, 1.0, 0.7});
  auto r = project(s, y);
  // delta clipped to the radius; untreated residual contributes fully
  CHECK(r.z_hat.head(4).isApprox(Vec::Constant(4, 0.5), 1e-9));
  CHECK(r.z_hat[4] == 0.0);
  double expect = std::sqrt(4 * square(0.5) + square(0.7));
  CHECK(r.distance == Catch::Approx(expect).epsilon(1e-9));
}

TEST_CASE("projection properties across random instances") {
  using th::Family;
  Rng rng = make_rng(2024);
  const std::vector<Family> fams{Family::L1, Family::L2,      Family::Ell,
                                 Family::EllAff, Family::MultiEnv, Family::Product};
  for (Family fam : fams) {
    for (int rep = 0; rep < 12; ++rep) {
      int d = (fam == Family::Ell || fam == Family::EllAff) ? 2 + rep % 3 : 2 + rep % 4;
      SetDescriptor set = th::random_set(fam, d, rng);
      Vec y = th::random_point_near(set, rng);
      auto pr = project(set, y);
      REQUIRE(pr.converged);

      // membership and idempotence
      CHECK(contains(set, pr.z_hat, 1e-6));
      auto again = project(set, pr.z_hat);
      CHECK(again.distance <= 1e-6);

      // membership iff zero distance
      CHECK((pr.distance <= 1e-7) == contains(set, y, 1e-7));

      // nonexpansiveness
      Vec y2 = th::random_point_near(set, rng);
      auto pr2 = project(set, y2);
      CHECK((pr.z_hat - pr2.z_hat).norm() <= (y - y2).norm() + 1e-7);

      // normal cone holds for exterior projections onto primitive convex sets
      if (pr.distance > 1e-6 && fam != Family::Product) {
        CHECK(normal_cone_check(set, pr.z_hat, y - pr.z_hat, 200, 17, 1e-6));
      }
    }
  }
}

TEST_CASE("translation equivariance") {
  using th::Family;
  Rng rng = make_rng(99);
  const std::vector<Family> fams{Family::L1, Family::L2,      Family::Ell,
                                 Family::EllAff, Family::MultiEnv, Family::Product};
  for (Family fam : fams) {
    for (int rep = 0; rep < 8; ++rep) {
      SetDescriptor set = th::random_set(fam, 3, rng);
      int d = dimension(set);
      Vec y = th::random_point_near(set, rng);
      Vec b = th::randn(d, rng);
      Vec z1 = project(set, y).z_hat;
      Vec z2 = project(translate(set, b), y + b).z_hat;
      CHECK((z2 - (z1 + b)).lpNorm<Eigen::Infinity>() < 1e-10);
    }
  }
}

TEST_CASE("distance is monotone in the radius") {
  Rng rng = make_rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    Vec c = th::randn(2, rng);
    Vec y = th::randn(2, rng) * 3.0;
    double r1 = 0.3 + rep * 0.05, r2 = r1 + 0.7;
    CHECK(project(SetDescriptor(L1Ball{c, r1}), y).distance >=
          project(SetDescriptor(L1Ball{c, r2}), y).distance - 1e-12);
    CHECK(project(SetDescriptor(L2Ball{c, r1}), y).distance >=
          project(SetDescriptor(L2Ball{c, r2}), y).distance - 1e-12);
  }
}

TEST_CASE("grid oracle agreement in low dimension") {
  using th::Family;
  Rng rng = make_rng(5150);
  for (Family fam : {Family::L1, Family::L2, Family::Ell}) {
    for (int rep = 0; rep < 5; ++rep) {
      SetDescriptor set = th::random_set(fam, 2, rng);
      Vec y = th::random_point_near(set, rng);
      auto pr = project(set, y);
      auto [zg, dg] = grid_project(set, y);
      CHECK(std::abs(dg - pr.distance) < 1e-4);
      CHECK((zg - pr.z_hat).norm() < 2e-3);
    }
  }
}
