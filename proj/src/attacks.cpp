#include "manirisk/attacks.hpp"

#include <cmath>
#include <numbers>

namespace manirisk::attacks {

using manifolds::ChartBall;
using manifolds::LabeledManifoldSample;
using manifolds::ManifoldKind;

namespace {

double margin_of(double score, int y) { return score * static_cast<double>(y); }

// Uniform draw from the eps-ball of the given norm, centered at the origin.
Vec random_ball_offset(Rng& rng, int dim, double eps, NormKind norm) {
  Vec off = Vec::Zero(dim);
  if (eps <= 0.0) return off;
  for (;;) {
    for (int i = 0; i < dim; ++i) off(i) = rng.uniform(-eps, eps);
    if (norm == NormKind::linf || off.norm() <= eps) return off;
  }
}

void project_to_ball(Vec& delta, double eps, NormKind norm) {
  if (norm == NormKind::linf) {
    delta = delta.cwiseMax(-eps).cwiseMin(eps);
  } else {
    const double n = delta.norm();
    if (n > eps && n > 0.0) delta *= eps / n;
  }
}

struct GridOutcome {
  bool success = false;
  Eigen::Index index = -1;   // flipping point, or max-loss point when no flip
  double score = 0.0;
};

// First point with score*y <= 0, in grid order; otherwise the minimum-margin
// (max logistic loss) point.
GridOutcome scan_grid(const ScoreModel& model, const Mat& points, int y) {
  GridOutcome out;
  if (points.cols() == 0) return out;
  const Vec scores = model.score_batch(points);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double m = margin_of(scores(i), y);
    if (m <= 0.0) {
      out.success = true;
      out.index = i;
      out.score = scores(i);
      return out;
    }
    if (m < best) {
      best = m;
      out.index = i;
      out.score = scores(i);
    }
  }
  return out;
}

AttackOutcome clean_point_outcome(const ScoreModel& model, const Vec& x, int y) {
  AttackOutcome out;
  out.point = x;
  out.score = model.score(x);
  out.success = margin_of(out.score, y) <= 0.0;
  return out;
}

}  // namespace

std::string norm_name(NormKind n) { return n == NormKind::linf ? "linf" : "l2"; }

NormKind norm_from_name(const std::string& name) {
  if (name == "linf") return NormKind::linf;
  if (name == "l2") return NormKind::l2;
  throw ConfigError("unknown norm '" + name + "'");
}

void AttackBudget::validate(ManifoldKind kind) const {
  if (eps < 0.0) throw BudgetError("attack budget: eps must be >= 0");
  if (eps >= manifolds::info(kind).tubular_radius) {
    throw BudgetError("attack budget: eps must stay below the tubular radius of " +
                      manifolds::kind_name(kind));
  }
  if (pgd_steps < 1) throw BudgetError("attack budget: pgd_steps must be >= 1");
  if (k_nor < 2 || k_in < 2) throw BudgetError("attack budget: grid counts must be >= 2");
}

static std::vector<AttackOutcome> pgd_attack_batch_seeded(const ScoreModel& model, const Mat& xs,
                                                          const std::vector<int>& ys,
                                                          const AttackBudget& budget,
                                                          const std::vector<std::uint64_t>& seeds) {
  const Eigen::Index n = xs.cols();
  std::vector<AttackOutcome> out(n);
  if (n == 0) return out;
  if (static_cast<Eigen::Index>(ys.size()) != n || static_cast<Eigen::Index>(seeds.size()) != n) {
    throw DimensionError("pgd_attack: labels/seeds do not match batch");
  }

  std::vector<char> done(n, 0);
  std::vector<double> best_margin(n, std::numeric_limits<double>::infinity());
  Mat best_point = xs;
  Vec best_score(n);

  // The unperturbed point is a valid witness: a standard misclassification is
  // an adversarial example with x' = x.
  {
    const Vec scores = model.score_batch(xs);
    best_score = scores;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (margin_of(scores(i), ys[i]) <= 0.0) {
        out[i] = {true, xs.col(i), scores(i)};
        done[i] = 1;
      }
    }
  }

  Mat cur(xs.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(seeds[i]);
    cur.col(i) = xs.col(i) + random_ball_offset(rng, static_cast<int>(xs.rows()), budget.eps, budget.norm);
  }

  const double alpha = budget.step_size();
  auto absorb = [&](const Vec& scores) {
    bool all_done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (done[i]) continue;
      const double m = margin_of(scores(i), ys[i]);
      if (m <= 0.0) {
        out[i] = {true, cur.col(i), scores(i)};
        done[i] = 1;
        continue;
      }
      if (m < best_margin[i]) {
        best_margin[i] = m;
        best_point.col(i) = cur.col(i);
        best_score(i) = scores(i);
      }
      all_done = false;
    }
    return all_done;
  };

  bool finished = absorb(model.score_batch(cur));
  for (int step = 0; step < budget.pgd_steps && !finished; ++step) {
    const Mat grads = model.score_gradient_batch(cur);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (done[i]) continue;
      // Ascent on the logistic loss: direction of -y * grad(s).
      Vec dir = -static_cast<double>(ys[i]) * grads.col(i);
      if (budget.norm == NormKind::linf) {
        for (Eigen::Index d = 0; d < dir.size(); ++d) {
          dir(d) = dir(d) > 0.0 ? 1.0 : (dir(d) < 0.0 ? -1.0 : 0.0);
        }
      } else {
        const double g = dir.norm();
        if (g == 0.0) continue;
        dir /= g;
      }
      Vec delta = cur.col(i) + alpha * dir - xs.col(i);
      project_to_ball(delta, budget.eps, budget.norm);
      cur.col(i) = xs.col(i) + delta;
    }
    finished = absorb(model.score_batch(cur));
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!done[i]) out[i] = {false, best_point.col(i), best_score(i)};
  }
  return out;
}

AttackOutcome pgd_attack(const ScoreModel& model, const Vec& x, int y, const AttackBudget& budget,
                         std::optional<std::uint64_t> seed) {
  Mat xs(x.size(), 1);
  xs.col(0) = x;
  return pgd_attack_batch_seeded(model, xs, {y}, budget, {seed.value_or(budget.seed)})[0];
}

std::vector<AttackOutcome> pgd_attack_batch(const ScoreModel& model, const Mat& xs,
                                            const std::vector<int>& ys, const AttackBudget& budget) {
  std::vector<std::uint64_t> seeds(xs.cols());
  for (Eigen::Index i = 0; i < xs.cols(); ++i) seeds[i] = derive_seed(budget.seed, i);
  return pgd_attack_batch_seeded(model, xs, ys, budget, seeds);
}

AttackOutcome normal_attack_grid(const ScoreModel& model, ManifoldKind kind,
                                 const LabeledManifoldSample& sample, const AttackBudget& budget) {
  if (sample.normal_basis.size() != 1) {
    throw GeometryError("normal_attack_grid: expected codimension 1");
  }
  if (budget.eps <= 0.0) return clean_point_outcome(model, sample.x, sample.y);
  (void)kind;
  const Vec& v = sample.normal_basis[0];
  const int k = budget.k_nor;
  Mat points(sample.x.size(), k);
  Eigen::Index cols = 0;
  for (int i = 0; i < k; ++i) {
    const double t = -budget.eps + 2.0 * budget.eps * i / (k - 1);
    if (t == 0.0) continue;  // x' != x
    points.col(cols++) = sample.x + t * v;
  }
  const GridOutcome g = scan_grid(model, points.leftCols(cols), sample.y);
  AttackOutcome out;
  if (g.index < 0) return clean_point_outcome(model, sample.x, sample.y);
  out.success = g.success;
  out.point = points.col(g.index);
  out.score = g.score;
  return out;
}

AttackOutcome normal_attack_random(const ScoreModel& model, ManifoldKind kind,
                                   const LabeledManifoldSample& sample, const AttackBudget& budget,
                                   std::optional<std::uint64_t> seed) {
  if (sample.normal_basis.size() != 1) {
    throw GeometryError("normal_attack_random: expected codimension 1");
  }
  (void)kind;
  Rng rng(seed.value_or(budget.seed));
  const double t = rng.uniform(-budget.eps, budget.eps);
  AttackOutcome out;
  out.point = sample.x + t * sample.normal_basis[0];
  out.score = model.score(out.point);
  out.success = margin_of(out.score, sample.y) <= 0.0;
  return out;
}

AttackOutcome in_manifold_attack_grid(const ScoreModel& model, ManifoldKind kind,
                                      const LabeledManifoldSample& sample,
                                      const AttackBudget& budget) {
  if (budget.eps <= 0.0) return clean_point_outcome(model, sample.x, sample.y);
  const ChartBall ball = manifolds::in_manifold_ball_param(kind, sample.u, budget.eps);
  const auto grid = manifolds::chart_grid(ball, budget.k_in);
  Mat points(sample.x.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    points.col(static_cast<Eigen::Index>(i)) = manifolds::ambient_of(kind, grid[i]);
  }
  const GridOutcome g = scan_grid(model, points, sample.y);
  AttackOutcome out;
  if (g.index < 0) return clean_point_outcome(model, sample.x, sample.y);
  out.success = g.success;
  out.point = points.col(g.index);
  out.score = g.score;
  return out;
}

AttackOutcome in_manifold_attack_project(const ScoreModel& model, ManifoldKind kind,
                                         const LabeledManifoldSample& sample,
                                         const AttackBudget& budget,
                                         std::optional<std::uint64_t> seed) {
  if (budget.eps <= 0.0) return clean_point_outcome(model, sample.x, sample.y);
  const AttackOutcome ambient = pgd_attack(model, sample.x, sample.y, budget, seed);
  Vec u = manifolds::chart_of(kind, manifolds::project_to_manifold(kind, ambient.point));

  const double dist = manifolds::chord_distance(kind, u, sample.u);
  if (dist > budget.eps) {
    // Pull along the chart geodesic toward x until the chord budget holds.
    switch (kind) {
      case ManifoldKind::circle2d: {
        const double half = 2.0 * std::asin(std::min(budget.eps, 2.0) / 2.0);
        double d = std::fmod(u(0) - sample.u(0), 2.0 * std::numbers::pi);
        if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
        if (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
        u(0) = sample.u(0) + std::clamp(d, -half, half);
        break;
      }
      case ManifoldKind::plane3d:
      case ManifoldKind::interval1d:
        u = sample.u + (u - sample.u) * (budget.eps / dist);
        break;
    }
  }
  AttackOutcome out;
  out.point = manifolds::ambient_of(kind, u);
  out.score = model.score(out.point);
  out.success = margin_of(out.score, sample.y) <= 0.0;
  return out;
}

AttackOutcome exhaustive_ball_attack(const ScoreModel& model, const Vec& x, int y,
                                     const AttackBudget& budget, double resolution) {
  if (budget.eps <= 0.0) return clean_point_outcome(model, x, y);
  const double res = resolution > 0.0 ? resolution : budget.eps / 200.0;
  const int per_axis = std::max(2, static_cast<int>(std::llround(2.0 * budget.eps / res)) + 1);
  const int dim = static_cast<int>(x.size());

  std::vector<double> offsets(per_axis);
  for (int i = 0; i < per_axis; ++i) {
    offsets[i] = -budget.eps + 2.0 * budget.eps * i / (per_axis - 1);
  }

  AttackOutcome best;
  best.point = x;
  best.score = model.score(x);
  if (margin_of(best.score, y) <= 0.0) {
    best.success = true;
    return best;
  }
  double best_margin = margin_of(best.score, y);

  constexpr Eigen::Index kChunk = 4096;
  Mat chunk(dim, kChunk);
  Eigen::Index fill = 0;

  auto flush = [&]() -> bool {
    if (fill == 0) return false;
    const GridOutcome g = scan_grid(model, chunk.leftCols(fill), y);
    if (g.success) {
      best = {true, chunk.col(g.index), g.score};
      fill = 0;
      return true;
    }
    if (g.index >= 0 && margin_of(g.score, y) < best_margin) {
      best_margin = margin_of(g.score, y);
      best.point = chunk.col(g.index);
      best.score = g.score;
    }
    fill = 0;
    return false;
  };

  std::vector<int> idx(dim, 0);
  Vec delta(dim);
  for (;;) {
    for (int d = 0; d < dim; ++d) delta(d) = offsets[idx[d]];
    const double norm =
        budget.norm == NormKind::linf ? delta.lpNorm<Eigen::Infinity>() : delta.norm();
    if (norm <= budget.eps + 1e-12) {
      chunk.col(fill++) = x + delta;
      if (fill == kChunk && flush()) return best;
    }
    int d = 0;
    while (d < dim && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == dim) break;
  }
  flush();
  return best;
}

}  // namespace manirisk::attacks
