#include "manirisk/manifolds.hpp"

#include "manirisk/csv.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace manirisk;
using namespace manirisk::manifolds;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_SUITE("manifolds") {

TEST_CASE("manifold info") {
  CHECK(info(ManifoldKind::circle2d).ambient_dim == 2);
  CHECK(info(ManifoldKind::circle2d).intrinsic_dim == 1);
  CHECK(info(ManifoldKind::circle2d).tubular_radius == 1.0);
  CHECK(info(ManifoldKind::plane3d).tubular_radius == std::numeric_limits<double>::infinity());
  CHECK(info(ManifoldKind::interval1d).tubular_radius == 0.5);
}

TEST_CASE("circle samples sit on the circle with the single-boundary labels") {
  const auto data = sample_dataset(ManifoldKind::circle2d, LabelRule::circle_single, 200, 11);
  REQUIRE(data.size() == 200);
  for (const auto& s : data) {
    CHECK(std::abs(s.x.norm() - 1.0) <= 1e-12);
    CHECK(s.y == (s.x(0) > 0.0 ? 1 : -1));
    REQUIRE(s.normal_basis.size() == 1);
    CHECK(std::abs(s.normal_basis[0].norm() - 1.0) <= 1e-12);
    // tangent at x is (-x2, x1)
    const double dot = -s.normal_basis[0](0) * s.x(1) + s.normal_basis[0](1) * s.x(0);
    CHECK(std::abs(dot) <= 1e-12);
  }
}

TEST_CASE("plane label examples") {
  Vec p(3);
  p << 1.0, 0.0, 0.0;
  CHECK(label_of(LabelRule::plane_single, p) == 1);  // 1 > sin(0)
  p << 0.0, 1.0, 0.0;
  CHECK(label_of(LabelRule::plane_single, p) == -1);  // 0 < sin(1)
  p << 2.0, 1.0, 0.0;
  CHECK(label_of(LabelRule::plane_double, p) == 1);
  p << 2.0, -1.0, 0.0;
  CHECK(label_of(LabelRule::plane_double, p) == -1);
}

TEST_CASE("uniform circle sampler balances the single-boundary labels") {
  const auto data = sample_dataset(ManifoldKind::circle2d, LabelRule::circle_single, 100000, 5);
  double pos = 0;
  for (const auto& s : data) pos += s.y > 0 ? 1 : 0;
  CHECK(std::abs(pos / data.size() - 0.5) <= 0.01);
}

TEST_CASE("normal basis examples") {
  Vec x(2);
  x << 0.6, 0.8;
  const auto nb = normal_basis(ManifoldKind::circle2d, x);
  REQUIRE(nb.size() == 1);
  CHECK((nb[0] - x).norm() <= 1e-12);

  Vec p(3);
  p << 1.2, -0.3, 0.0;
  const auto np = normal_basis(ManifoldKind::plane3d, p);
  CHECK(np[0](2) == 1.0);
  CHECK(np[0].head(2).norm() == 0.0);

  x << -1.0, 0.0;
  const auto nm = normal_basis(ManifoldKind::circle2d, x);
  CHECK((nm[0] - x).norm() <= 1e-12);
  Vec tangent(2);
  tangent << 0.0, 1.0;
  CHECK(std::abs(nm[0].dot(tangent)) <= 1e-12);
}

TEST_CASE("normal basis rejects off-manifold points") {
  Vec x(2);
  x << 0.5, 0.5;
  CHECK_THROWS_AS(normal_basis(ManifoldKind::circle2d, x), GeometryError);
  Vec p(3);
  p << 0.0, 0.0, 0.5;
  CHECK_THROWS_AS(normal_basis(ManifoldKind::plane3d, p), GeometryError);
}

TEST_CASE("in-manifold ball parameterization") {
  SUBCASE("circle chord eps=1 gives angular half-width pi/3") {
    const auto ball = in_manifold_ball_param(ManifoldKind::circle2d, Vec::Zero(1), 1.0);
    CHECK(std::abs(ball.radius - kPi / 3.0) <= 1e-12);
  }
  SUBCASE("interval clamps to [0,1]") {
    const auto ball = in_manifold_ball_param(ManifoldKind::interval1d, Vec::Constant(1, 0.1), 0.25);
    CHECK(ball.lo(0) == 0.0);
    CHECK(std::abs(ball.hi(0) - 0.35) <= 1e-15);
  }
  SUBCASE("circle ball boundary maps to ambient distance eps") {
    const auto ball = in_manifold_ball_param(ManifoldKind::circle2d, Vec::Zero(1), 0.2);
    const Vec center = ambient_of(ManifoldKind::circle2d, ball.center);
    for (double edge_angle : {ball.lo(0), ball.hi(0)}) {
      const Vec edge = ambient_of(ManifoldKind::circle2d, Vec::Constant(1, edge_angle));
      CHECK(std::abs((edge - center).norm() - 0.2) <= 1e-12);
    }
  }
  SUBCASE("budget errors") {
    CHECK_THROWS_AS(in_manifold_ball_param(ManifoldKind::circle2d, Vec::Zero(1), 0.0), BudgetError);
    CHECK_THROWS_AS(in_manifold_ball_param(ManifoldKind::circle2d, Vec::Zero(1), 2.5), BudgetError);
  }
}

TEST_CASE("projection examples") {
  Vec z(2);
  z << 0.0, 2.0;
  CHECK((project_to_manifold(ManifoldKind::circle2d, z) - Vec{{0.0, 1.0}}).norm() <= 1e-15);
  z << 0.3, 0.4;
  CHECK((project_to_manifold(ManifoldKind::circle2d, z) - Vec{{0.6, 0.8}}).norm() <= 1e-12);
  Vec w(3);
  w << 1.0, 1.0, 0.7;
  const Vec p = project_to_manifold(ManifoldKind::plane3d, w);
  CHECK(p(0) == 1.0);
  CHECK(p(1) == 1.0);
  CHECK(p(2) == 0.0);
  CHECK_THROWS_AS(project_to_manifold(ManifoldKind::circle2d, Vec::Zero(2)), ProjectionError);
}

TEST_CASE("normal fibers project back to their foot point") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const ManifoldKind kind = static_cast<ManifoldKind>(trial % 3);
    const auto data = sample_dataset(kind, LabelRule::constant_plus_one, 1, 1000 + trial);
    const auto& s = data[0];
    const double delta = info(kind).tubular_radius;
    const double cap = std::isfinite(delta) ? 0.99 * delta : 10.0;
    const double t = rng.uniform(-cap, cap);
    const Vec moved = s.x + t * s.normal_basis[0];
    CHECK((project_to_manifold(kind, moved) - s.x).norm() <= 1e-12);
  }
}

TEST_CASE("chord distance matches the analytic circle formula") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    Vec a = Vec::Constant(1, rng.uniform(-kPi, kPi));
    Vec b = Vec::Constant(1, rng.uniform(-kPi, kPi));
    const double ambient = (ambient_of(ManifoldKind::circle2d, a) - ambient_of(ManifoldKind::circle2d, b)).norm();
    CHECK(std::abs(chord_distance(ManifoldKind::circle2d, a, b) - ambient) <= 1e-12);
  }
}

TEST_CASE("labels are invariant under projection of on-manifold points") {
  for (auto rule : {LabelRule::circle_single, LabelRule::circle_double, LabelRule::plane_single,
                    LabelRule::plane_double}) {
    const auto kind = kind_for_rule(rule);
    const auto data = sample_dataset(kind, rule, 100, 77);
    for (const auto& s : data) {
      CHECK(label_of(rule, project_to_manifold(kind, s.x)) == s.y);
    }
  }
}

TEST_CASE("chart grid covers the ball and respects the chord radius") {
  const auto ball = in_manifold_ball_param(ManifoldKind::plane3d, Vec::Zero(2), 0.5);
  const auto grid = chart_grid(ball, 400);
  CHECK(grid.size() > 200);  // disc filter keeps most of the 20x20 lattice
  CHECK(grid.size() <= 400);
  for (const auto& u : grid) {
    CHECK(chord_distance(ManifoldKind::plane3d, u, ball.center) <= 0.5 + 1e-12);
  }
  const auto ball1 = in_manifold_ball_param(ManifoldKind::circle2d, Vec::Zero(1), 0.3);
  const auto grid1 = chart_grid(ball1, 100);
  CHECK(grid1.size() == 100);
  CHECK(grid1.front()(0) == ball1.lo(0));
  CHECK(grid1.back()(0) == ball1.hi(0));
}

TEST_CASE("dataset csv round trip") {
  const auto data = sample_dataset(ManifoldKind::plane3d, LabelRule::plane_double, 50, 99);
  const std::string text = dataset_to_csv(ManifoldKind::plane3d, data);
  const auto path = std::filesystem::temp_directory_path() / "manirisk_ds_test.csv";
  csv::write_file_atomic(path.string(), text);
  const auto loaded = dataset_from_csv(ManifoldKind::plane3d, path.string());
  REQUIRE(loaded.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(loaded[i].x == data[i].x);  // 17 significant digits round-trip doubles
    CHECK(loaded[i].u == data[i].u);
    CHECK(loaded[i].y == data[i].y);
  }
  CHECK(dataset_to_csv(ManifoldKind::plane3d, loaded) == text);
  std::filesystem::remove(path);
}

TEST_CASE("sampling is deterministic per seed") {
  const auto a = sample_dataset(ManifoldKind::circle2d, LabelRule::circle_double, 64, 3);
  const auto b = sample_dataset(ManifoldKind::circle2d, LabelRule::circle_double, 64, 3);
  const auto c = sample_dataset(ManifoldKind::circle2d, LabelRule::circle_double, 64, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].x != c[i].x;
  CHECK(any_diff);
}

TEST_CASE("usage errors") {
  CHECK_THROWS_AS(sample_dataset(ManifoldKind::circle2d, LabelRule::circle_single, 0, 1), UsageError);
  CHECK_THROWS_AS(kind_from_name("torus"), ConfigError);
  CHECK_THROWS_AS(rule_from_name("nope"), ConfigError);
}

}  // TEST_SUITE
