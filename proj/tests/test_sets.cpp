#include <catch2/catch_amalgamated.hpp>

#include "rrrlab/sets.hpp"
#include "rrrlab/sets_json.hpp"

using namespace rrrlab;
using sets::SetOracle;

namespace {

SetOracle x_axis_r2() {
  Mat basis(2, 1);
  basis << 1.0, 0.0;
  return SetOracle::affine(Vec::Zero(2), basis);
}

SetOracle y_axis_r2() {
  Mat basis(2, 1);
  basis << 0.0, 1.0;
  return SetOracle::affine(Vec::Zero(2), basis);
}

// brute-force nearest point among samples of {(u,s): u's = y (, >=0)}; the
// grid parametrizes u and solves for s where possible (r = 1) or scans pairs
// (r = 2) on a lattice; independent of the KKT path under test.
double grid_best_dist2_r1(double u0, double s0, double y, bool nonneg) {
  double best = kInf;
  const double lim = 6.0;
  const int n = 120001;
  for (int i = 0; i < n; ++i) {
    const double u = -lim + 2.0 * lim * i / (n - 1);
    if (nonneg && u < 0.0) continue;
    if (std::abs(u) < 1e-9) {
      if (std::abs(y) < 1e-12) {  // u = 0 row: any s works
        const double s = nonneg ? std::max(s0, 0.0) : s0;
        best = std::min(best, sq(u - u0) + sq(s - s0));
      }
      continue;
    }
    const double s = y / u;
    if (nonneg && s < 0.0) continue;
    best = std::min(best, sq(u - u0) + sq(s - s0));
  }
  return best;
}

}  // namespace

TEST_CASE("project: affine drops the orthogonal component") {
  auto ax = x_axis_r2();
  Vec p = ax.project(vec2(1.0, 2.0));
  REQUIRE(p[0] == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(p[1] == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("project: finite set picks nearest, ties to lowest index") {
  auto f = SetOracle::finite({vec1(0.0), vec1(2.0)});
  REQUIRE(f.project(vec1(0.9))[0] == 0.0);
  REQUIRE(f.project(vec1(1.1))[0] == 2.0);
  sets::ProjectInfo info;
  REQUIRE(f.project(vec1(1.0), info)[0] == 0.0);  // equidistant
  REQUIRE(info.tie);
}

TEST_CASE("project: sphere rescales radially") {
  auto s = SetOracle::sphere(Vec::Zero(2), 1.0);
  Vec p = s.project(vec2(2.0, 0.0));
  REQUIRE(p[0] == Catch::Approx(1.0));
  REQUIRE(p[1] == Catch::Approx(0.0));
}

TEST_CASE("reflect: 2P - Id") {
  auto ax = x_axis_r2();
  Vec r = ax.reflect(vec2(1.0, 2.0));
  REQUIRE(r[0] == Catch::Approx(1.0));
  REQUIRE(r[1] == Catch::Approx(-2.0));

  auto f = SetOracle::finite({vec1(0.0)});
  REQUIRE(f.reflect(vec1(3.0))[0] == Catch::Approx(-3.0));

  auto sp = SetOracle::sphere(Vec::Zero(2), 1.0);
  Vec rs = sp.reflect(vec2(2.0, 0.0));
  REQUIRE(rs[0] == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(rs[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("project errors: dimension mismatch and empty finite set") {
  auto ax = x_axis_r2();
  REQUIRE_THROWS_AS(ax.project(vec3(1, 2, 3)), std::invalid_argument);
  REQUIRE_THROWS_AS(SetOracle::finite({}), std::invalid_argument);
}

TEST_CASE("project_bilinear: already feasible is the identity") {
  auto res = sets::project_bilinear(vec1(1.0), vec1(1.0), 1.0, false);
  REQUIRE(res.u[0] == 1.0);
  REQUIRE(res.s[0] == 1.0);
}

TEST_CASE("project_bilinear: u0=(2), s0=(0), y=1") {
  // independent oracle: multiplier solves (1-l^2)^2 = 4l on (0,1); bisection
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((sq(1.0 - mid * mid) - 4.0 * mid > 0.0) ? lo : hi) = mid;
  }
  const double lam = 0.5 * (lo + hi);
  const double u_expect = 2.0 / (1.0 - lam * lam);        // ~2.1070
  const double s_expect = 2.0 * lam / (1.0 - lam * lam);  // ~0.4749

  auto res = sets::project_bilinear(vec1(2.0), vec1(0.0), 1.0, false);
  REQUIRE(res.u[0] == Catch::Approx(u_expect).margin(1e-8));
  REQUIRE(res.s[0] == Catch::Approx(s_expect).margin(1e-8));
  REQUIRE(res.u[0] * res.s[0] == Catch::Approx(1.0).margin(1e-8));
  REQUIRE(res.u[0] == Catch::Approx(2.107).margin(2e-3));
  REQUIRE(res.s[0] == Catch::Approx(0.475).margin(2e-3));

  const double d2 = sq(res.u[0] - 2.0) + sq(res.s[0] - 0.0);
  REQUIRE(d2 <= grid_best_dist2_r1(2.0, 0.0, 1.0, false) + 1e-6);
}

TEST_CASE("project_bilinear: tie at y=0 zeroes the second factor") {
  auto res = sets::project_bilinear(vec1(1.0), vec1(1.0), 0.0, false);
  REQUIRE(res.u[0] == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(res.s[0] == Catch::Approx(0.0).margin(1e-10));
  // grid oracle: the two global minimizers (1,0) and (0,1) are equidistant
  const double d2 = sq(res.u[0] - 1.0) + sq(res.s[0] - 1.0);
  REQUIRE(d2 <= grid_best_dist2_r1(1.0, 1.0, 0.0, false) + 1e-6);
}

TEST_CASE("project_bilinear: nonneg infeasible when y < 0") {
  REQUIRE_THROWS_AS(sets::project_bilinear(vec1(1.0), vec1(1.0), -0.5, true),
                    std::invalid_argument);
}

TEST_CASE("project_bilinear: nonneg matches grid oracle, r=1") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const double u0 = rng.uniform(-2.0, 2.0);
    const double s0 = rng.uniform(-2.0, 2.0);
    const double y = rng.uniform(0.0, 1.5);
    auto res = sets::project_bilinear(vec1(u0), vec1(s0), y, true);
    REQUIRE(res.u[0] >= -1e-12);
    REQUIRE(res.s[0] >= -1e-12);
    REQUIRE(res.u[0] * res.s[0] == Catch::Approx(y).margin(1e-8));
    const double d2 = sq(res.u[0] - u0) + sq(res.s[0] - s0);
    REQUIRE(d2 <= grid_best_dist2_r1(u0, s0, y, true) + 1e-6);
  }
}

TEST_CASE("project_bilinear: nonneg r=2 beats a random candidate cloud") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Vec u0(2), s0(2);
    for (int i = 0; i < 2; ++i) {
      u0[i] = rng.uniform(-1.5, 1.5);
      s0[i] = rng.uniform(-1.5, 1.5);
    }
    const double y = rng.uniform(0.0, 1.0);
    auto res = sets::project_bilinear(u0, s0, y, true);
    REQUIRE(res.u.minCoeff() >= -1e-12);
    REQUIRE(res.s.minCoeff() >= -1e-12);
    REQUIRE(res.u.dot(res.s) == Catch::Approx(y).margin(1e-8));
    const double d2 = (res.u - u0).squaredNorm() + (res.s - s0).squaredNorm();
    // candidate cloud: random feasible points (u >= 0 sampled, s solving u's=y
    // along a ray) must never beat the returned projection
    for (int c = 0; c < 4000; ++c) {
      Vec u(2);
      u[0] = rng.uniform(0.0, 3.0);
      u[1] = rng.uniform(0.0, 3.0);
      const double un2 = u.squaredNorm();
      if (un2 < 1e-12) continue;
      Vec s = s0.cwiseMax(0.0);
      const double cur = u.dot(s);
      // shift s along u to hit the constraint, then clamp negatives away
      s += ((y - cur) / un2) * u;
      if (s.minCoeff() < 0.0) continue;
      const double cd2 = (u - u0).squaredNorm() + (s - s0).squaredNorm();
      REQUIRE(d2 <= cd2 + 1e-6);
    }
  }
}

TEST_CASE("project_consensus: mean, clamped mean, single copy") {
  REQUIRE(sets::project_consensus({vec1(1.0), vec1(3.0)}, false)[0] == Catch::Approx(2.0));
  REQUIRE(sets::project_consensus({vec1(-3.0), vec1(1.0)}, true)[0] == 0.0);
  REQUIRE(sets::project_consensus({vec1(-5.0)}, true)[0] == 0.0);
}

TEST_CASE("consensus oracle equals the free-function rule") {
  auto c = SetOracle::consensus(3, 2, false);
  Vec x(6);
  x << 1, 2, 3, 4, 5, 6;
  Vec p = c.project(x);
  REQUIRE(p[0] == Catch::Approx(3.0));
  REQUIRE(p[1] == Catch::Approx(4.0));
  REQUIRE(p.segment(2, 2) == p.segment(0, 2));
  REQUIRE(p.segment(4, 2) == p.segment(0, 2));
}

TEST_CASE("property: projections are idempotent across kinds") {
  Rng rng(4);
  std::vector<SetOracle> oracles;
  oracles.push_back(x_axis_r2());
  oracles.push_back(SetOracle::sphere(vec2(0.3, -0.2), 1.7));
  oracles.push_back(SetOracle::box(vec2(-1.0, -kInf), vec2(0.5, kInf)));
  oracles.push_back(SetOracle::finite({vec2(0, 0), vec2(1, 2), vec2(-1, 0.5)}));
  oracles.push_back(SetOracle::bilinear(0.7, 1, false));
  oracles.push_back(SetOracle::bilinear(0.4, 1, true));
  oracles.push_back(SetOracle::consensus(1, 2, true));
  {
    std::vector<sets::ProductBlock> blocks(2);
    blocks[0].oracle = SetOracle::box(vec1(-1.0), vec1(1.0));
    blocks[1].oracle = SetOracle::finite({vec1(0.0), vec1(2.0)});
    oracles.push_back(sets::make_product(std::move(blocks)));
  }
  for (const auto& set : oracles) {
    for (int t = 0; t < 100; ++t) {
      Vec x(set.dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-3.0, 3.0);
      Vec p = set.project(x);
      Vec pp = set.project(p);
      REQUIRE((pp - p).norm() <= 1e-10);
    }
  }
}

TEST_CASE("property: reflection is an involution on affine subspaces") {
  Rng rng(11);
  Mat basis(3, 2);
  basis << 1, 0, 0, 1, 0, 0;
  auto plane = SetOracle::affine(vec3(0.5, -1.0, 2.0), basis);
  for (int t = 0; t < 100; ++t) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-5.0, 5.0);
    Vec rr = plane.reflect(plane.reflect(x));
    REQUIRE((rr - x).norm() <= 1e-10);
  }
}

TEST_CASE("property: firm nonexpansiveness of affine and box projections") {
  Rng rng(23);
  auto bx = SetOracle::box(vec2(-1.0, 0.0), vec2(1.0, kInf));
  auto ax = x_axis_r2();
  for (int t = 0; t < 200; ++t) {
    Vec x(2), y(2);
    for (int i = 0; i < 2; ++i) {
      x[i] = rng.uniform(-4.0, 4.0);
      y[i] = rng.uniform(-4.0, 4.0);
    }
    REQUIRE((bx.project(x) - bx.project(y)).norm() <= (x - y).norm() + 1e-14);
    REQUIRE((ax.project(x) - ax.project(y)).norm() <= (x - y).norm() + 1e-14);
  }
}

TEST_CASE("property: finite-set nearest-point optimality vs exhaustive scan") {
  Rng rng(31);
  std::vector<Vec> pts;
  for (int i = 0; i < 7; ++i) pts.push_back(vec2(rng.uniform(-2, 2), rng.uniform(-2, 2)));
  auto f = SetOracle::finite(pts);
  for (int t = 0; t < 200; ++t) {
    Vec x = vec2(rng.uniform(-3, 3), rng.uniform(-3, 3));
    Vec p = f.project(x);
    for (const Vec& q : pts) REQUIRE((x - p).norm() <= (x - q).norm() + 1e-12);
  }
}

TEST_CASE("product with scattered indices gathers and scatters correctly") {
  // coordinates 0,2 belong to a consensus pair; coordinate 1 is boxed
  std::vector<sets::ProductBlock> blocks(2);
  blocks[0].oracle = SetOracle::consensus(2, 1, false);
  blocks[0].indices = {0, 2};
  blocks[1].oracle = SetOracle::box(vec1(0.0), vec1(1.0));
  blocks[1].indices = {1};
  auto prod = sets::make_product(std::move(blocks));
  Vec x = vec3(1.0, 5.0, 3.0);
  Vec p = prod.project(x);
  REQUIRE(p[0] == Catch::Approx(2.0));
  REQUIRE(p[2] == Catch::Approx(2.0));
  REQUIRE(p[1] == Catch::Approx(1.0));
}

TEST_CASE("product blocks must partition the coordinates") {
  std::vector<sets::ProductBlock> blocks(2);
  blocks[0].oracle = SetOracle::box(vec1(0.0), vec1(1.0));
  blocks[0].indices = {0};
  blocks[1].oracle = SetOracle::box(vec1(0.0), vec1(1.0));
  blocks[1].indices = {0};
  REQUIRE_THROWS_AS(sets::make_product(std::move(blocks)), std::invalid_argument);
}

TEST_CASE("affine basis must be orthonormal to 1e-12") {
  Mat bad(2, 1);
  bad << 1.0, 1.0;
  REQUIRE_THROWS_AS(SetOracle::affine(Vec::Zero(2), bad), std::invalid_argument);
}

TEST_CASE("set JSON round-trips preserve projections") {
  Rng rng(7);
  std::vector<SetOracle> oracles;
  {
    Mat basis(2, 1);
    basis << 0.6, 0.8;
    oracles.push_back(SetOracle::affine(vec2(1.0, 0.0), basis));
  }
  oracles.push_back(SetOracle::sphere(vec2(0.0, 1.0), 2.0));
  oracles.push_back(SetOracle::box(vec2(-1.0, -kInf), vec2(1.0, kInf)));
  oracles.push_back(SetOracle::finite({vec1(0.0), vec1(2.0)}));
  oracles.push_back(SetOracle::bilinear(0.5, 2, true));
  oracles.push_back(SetOracle::consensus(3, 1, false));
  {
    std::vector<sets::ProductBlock> blocks(2);
    blocks[0].oracle = SetOracle::finite({vec1(0.0), vec1(2.0)});
    blocks[0].indices = {1};
    blocks[1].oracle = SetOracle::box(vec1(-2.0), vec1(2.0));
    blocks[1].indices = {0};
    oracles.push_back(sets::make_product(std::move(blocks)));
  }
  for (const auto& set : oracles) {
    auto j = sets::to_json(set);
    auto back = sets::from_json(j);
    REQUIRE(back.kind() == set.kind());
    REQUIRE(back.dim() == set.dim());
    for (int t = 0; t < 25; ++t) {
      Vec x(set.dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-3.0, 3.0);
      REQUIRE((set.project(x) - back.project(x)).norm() <= 1e-12);
    }
  }
}
