#include "manirisk/manifolds.hpp"

#include "manirisk/csv.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace manirisk::manifolds {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOnManifoldTol = 1e-9;

void check_dim(const Vec& v, int d, const char* what) {
  if (v.size() != d) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(d) +
                         ", got " + std::to_string(v.size()));
  }
}

// Wraps an angle difference into [-pi, pi].
double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) a -= 2.0 * kPi;
  if (a < -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace

ManifoldInfo info(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle2d:
      return {1, 2, 1.0};
    case ManifoldKind::plane3d:
      return {2, 3, std::numeric_limits<double>::infinity()};
    case ManifoldKind::interval1d:
      // Budget cap for the interval construction: the family is defined for
      // eps < 1/2.
      return {1, 2, 0.5};
  }
  throw UsageError("unknown manifold kind");
}

std::string kind_name(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle2d: return "circle2d";
    case ManifoldKind::plane3d: return "plane3d";
    case ManifoldKind::interval1d: return "interval1d";
  }
  throw UsageError("unknown manifold kind");
}

ManifoldKind kind_from_name(const std::string& name) {
  if (name == "circle2d") return ManifoldKind::circle2d;
  if (name == "plane3d") return ManifoldKind::plane3d;
  if (name == "interval1d") return ManifoldKind::interval1d;
  throw ConfigError("unknown manifold kind '" + name + "'");
}

std::string rule_name(LabelRule rule) {
  switch (rule) {
    case LabelRule::circle_single: return "circle_single";
    case LabelRule::circle_double: return "circle_double";
    case LabelRule::plane_single: return "plane_single";
    case LabelRule::plane_double: return "plane_double";
    case LabelRule::constant_plus_one: return "constant_plus_one";
  }
  throw UsageError("unknown label rule");
}

LabelRule rule_from_name(const std::string& name) {
  if (name == "circle_single") return LabelRule::circle_single;
  if (name == "circle_double") return LabelRule::circle_double;
  if (name == "plane_single") return LabelRule::plane_single;
  if (name == "plane_double") return LabelRule::plane_double;
  if (name == "constant_plus_one") return LabelRule::constant_plus_one;
  throw ConfigError("unknown label rule '" + name + "'");
}

ManifoldKind kind_for_rule(LabelRule rule) {
  switch (rule) {
    case LabelRule::circle_single:
    case LabelRule::circle_double:
      return ManifoldKind::circle2d;
    case LabelRule::plane_single:
    case LabelRule::plane_double:
      return ManifoldKind::plane3d;
    case LabelRule::constant_plus_one:
      return ManifoldKind::interval1d;
  }
  throw UsageError("unknown label rule");
}

int label_of(LabelRule rule, const Vec& x) {
  switch (rule) {
    case LabelRule::circle_single:
      check_dim(x, 2, "label_of");
      return x(0) > 0.0 ? 1 : -1;
    case LabelRule::circle_double:
      check_dim(x, 2, "label_of");
      return x(0) * x(1) > 0.0 ? 1 : -1;
    case LabelRule::plane_single:
      check_dim(x, 3, "label_of");
      return x(0) > std::sin(x(1)) ? 1 : -1;
    case LabelRule::plane_double:
      check_dim(x, 3, "label_of");
      return (x(0) - std::sin(x(1))) * x(1) > 0.0 ? 1 : -1;
    case LabelRule::constant_plus_one:
      return 1;
  }
  throw UsageError("unknown label rule");
}

std::vector<LabeledManifoldSample> sample_dataset(ManifoldKind kind, LabelRule rule, int n,
                                                  std::uint64_t seed) {
  if (n < 1) throw UsageError("sample_dataset: n must be >= 1");
  Rng rng(seed);
  std::vector<LabeledManifoldSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec u;
    switch (kind) {
      case ManifoldKind::circle2d:
        u = Vec::Constant(1, rng.uniform(-kPi, kPi));
        break;
      case ManifoldKind::plane3d:
        u = Vec(2);
        u(0) = rng.uniform(-kPi, kPi);
        u(1) = rng.uniform(-kPi, kPi);
        break;
      case ManifoldKind::interval1d:
        u = Vec::Constant(1, rng.uniform(0.0, 1.0));
        break;
    }
    LabeledManifoldSample s;
    s.u = u;
    s.x = ambient_of(kind, u);
    s.y = label_of(rule, s.x);
    s.normal_basis = normal_basis(kind, s.x);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Vec> normal_basis(ManifoldKind kind, const Vec& x) {
  const auto inf = info(kind);
  check_dim(x, inf.ambient_dim, "normal_basis");
  switch (kind) {
    case ManifoldKind::circle2d: {
      const double r = x.norm();
      if (std::abs(r - 1.0) > kOnManifoldTol) {
        throw GeometryError("normal_basis: point is off the unit circle");
      }
      return {x / r};
    }
    case ManifoldKind::plane3d: {
      if (std::abs(x(2)) > kOnManifoldTol) {
        throw GeometryError("normal_basis: point is off the x1x2-plane");
      }
      Vec v = Vec::Zero(3);
      v(2) = 1.0;
      return {v};
    }
    case ManifoldKind::interval1d: {
      if (std::abs(x(1)) > kOnManifoldTol || x(0) < -kOnManifoldTol ||
          x(0) > 1.0 + kOnManifoldTol) {
        throw GeometryError("normal_basis: point is off the interval");
      }
      Vec v = Vec::Zero(2);
      v(1) = 1.0;
      return {v};
    }
  }
  throw UsageError("unknown manifold kind");
}

Vec chart_of(ManifoldKind kind, const Vec& x) {
  const auto inf = info(kind);
  check_dim(x, inf.ambient_dim, "chart_of");
  switch (kind) {
    case ManifoldKind::circle2d:
      return Vec::Constant(1, std::atan2(x(1), x(0)));
    case ManifoldKind::plane3d:
      return x.head(2);
    case ManifoldKind::interval1d:
      return x.head(1);
  }
  throw UsageError("unknown manifold kind");
}

Vec ambient_of(ManifoldKind kind, const Vec& u) {
  const auto inf = info(kind);
  check_dim(u, inf.intrinsic_dim, "ambient_of");
  switch (kind) {
    case ManifoldKind::circle2d: {
      Vec x(2);
      x(0) = std::cos(u(0));
      x(1) = std::sin(u(0));
      return x;
    }
    case ManifoldKind::plane3d: {
      Vec x = Vec::Zero(3);
      x.head(2) = u;
      return x;
    }
    case ManifoldKind::interval1d: {
      Vec x = Vec::Zero(2);
      x(0) = u(0);
      return x;
    }
  }
  throw UsageError("unknown manifold kind");
}

double chord_distance(ManifoldKind kind, const Vec& u1, const Vec& u2) {
  switch (kind) {
    case ManifoldKind::circle2d:
      return 2.0 * std::abs(std::sin(wrap_angle(u1(0) - u2(0)) / 2.0));
    case ManifoldKind::plane3d:
    case ManifoldKind::interval1d:
      return (u1 - u2).norm();
  }
  throw UsageError("unknown manifold kind");
}

ChartBall in_manifold_ball_param(ManifoldKind kind, const Vec& u, double eps) {
  const auto inf = info(kind);
  check_dim(u, inf.intrinsic_dim, "in_manifold_ball_param");
  if (!(eps > 0.0)) throw BudgetError("in_manifold_ball_param: eps must be positive");
  ChartBall ball;
  ball.kind = kind;
  ball.center = u;
  ball.eps = eps;
  switch (kind) {
    case ManifoldKind::circle2d: {
      if (eps > 2.0) throw BudgetError("in_manifold_ball_param: circle chord eps must be <= 2");
      // chord = 2 sin(dtheta/2)  =>  dtheta = 2 asin(eps/2)
      ball.radius = 2.0 * std::asin(eps / 2.0);
      ball.lo = Vec::Constant(1, u(0) - ball.radius);
      ball.hi = Vec::Constant(1, u(0) + ball.radius);
      return ball;
    }
    case ManifoldKind::plane3d: {
      ball.radius = eps;
      ball.lo = Vec(2);
      ball.hi = Vec(2);
      for (int a = 0; a < 2; ++a) {
        ball.lo(a) = std::max(u(a) - eps, -kPi);
        ball.hi(a) = std::min(u(a) + eps, kPi);
      }
      return ball;
    }
    case ManifoldKind::interval1d: {
      ball.radius = eps;
      ball.lo = Vec::Constant(1, std::max(u(0) - eps, 0.0));
      ball.hi = Vec::Constant(1, std::min(u(0) + eps, 1.0));
      return ball;
    }
  }
  throw UsageError("unknown manifold kind");
}

std::vector<Vec> chart_grid(const ChartBall& ball, int k) {
  if (k < 2) throw UsageError("chart_grid: need at least 2 points");
  std::vector<Vec> pts;
  if (ball.center.size() == 1) {
    pts.reserve(k);
    const double lo = ball.lo(0), hi = ball.hi(0);
    for (int i = 0; i < k; ++i) {
      const double t = static_cast<double>(i) / (k - 1);
      pts.push_back(Vec::Constant(1, lo + t * (hi - lo)));
    }
    return pts;
  }
  const int m = static_cast<int>(std::floor(std::sqrt(static_cast<double>(k))));
  if (m < 2) throw UsageError("chart_grid: 2-d grid needs k >= 4");
  pts.reserve(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      Vec p(2);
      p(0) = ball.lo(0) + (ball.hi(0) - ball.lo(0)) * i / (m - 1);
      p(1) = ball.lo(1) + (ball.hi(1) - ball.lo(1)) * j / (m - 1);
      if (chord_distance(ball.kind, p, ball.center) <= ball.eps + 1e-12) {
        pts.push_back(std::move(p));
      }
    }
  }
  return pts;
}

Vec project_to_manifold(ManifoldKind kind, const Vec& z) {
  const auto inf = info(kind);
  check_dim(z, inf.ambient_dim, "project_to_manifold");
  switch (kind) {
    case ManifoldKind::circle2d: {
      const double r = z.norm();
      if (r == 0.0) throw ProjectionError("project_to_manifold: circle projection undefined at origin");
      return z / r;
    }
    case ManifoldKind::plane3d: {
      Vec p = Vec::Zero(3);
      p(0) = std::clamp(z(0), -kPi, kPi);
      p(1) = std::clamp(z(1), -kPi, kPi);
      return p;
    }
    case ManifoldKind::interval1d: {
      Vec p = Vec::Zero(2);
      p(0) = std::clamp(z(0), 0.0, 1.0);
      return p;
    }
  }
  throw UsageError("unknown manifold kind");
}

std::string dataset_to_csv(ManifoldKind kind, const std::vector<LabeledManifoldSample>& samples) {
  const auto inf = info(kind);
  std::ostringstream out;
  for (int i = 0; i < inf.ambient_dim; ++i) out << "x" << i << ",";
  out << "y";
  for (int i = 0; i < inf.intrinsic_dim; ++i) out << ",u" << i;
  out << "\n";
  for (const auto& s : samples) {
    for (int i = 0; i < inf.ambient_dim; ++i) out << csv::format_double(s.x(i)) << ",";
    out << s.y;
    for (int i = 0; i < inf.intrinsic_dim; ++i) out << "," << csv::format_double(s.u(i));
    out << "\n";
  }
  return out.str();
}

std::vector<LabeledManifoldSample> dataset_from_csv(ManifoldKind kind, const std::string& path) {
  const auto inf = info(kind);
  const auto table = csv::read_csv(path);
  const int expected = inf.ambient_dim + 1 + inf.intrinsic_dim;
  if (static_cast<int>(table.header.size()) != expected) {
    throw IoError("dataset csv: wrong column count in " + path);
  }
  std::vector<LabeledManifoldSample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    LabeledManifoldSample s;
    s.x = Vec(inf.ambient_dim);
    for (int i = 0; i < inf.ambient_dim; ++i) s.x(i) = std::stod(row[i]);
    s.y = std::stoi(row[inf.ambient_dim]);
    if (s.y != 1 && s.y != -1) throw IoError("dataset csv: label must be +1 or -1");
    s.u = Vec(inf.intrinsic_dim);
    for (int i = 0; i < inf.intrinsic_dim; ++i) {
      s.u(i) = std::stod(row[inf.ambient_dim + 1 + i]);
    }
    s.normal_basis = normal_basis(kind, s.x);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace manirisk::manifolds
