#pragma once

#include "manirisk/common.hpp"
#include "manirisk/manifolds.hpp"
#include "manirisk/score_model.hpp"

#include <optional>
#include <vector>

namespace manirisk::attacks {

enum class NormKind { linf, l2 };

std::string norm_name(NormKind n);
NormKind norm_from_name(const std::string& name);

struct AttackBudget {
  double eps = 0.1;
  NormKind norm = NormKind::linf;
  int pgd_steps = 40;
  double pgd_step_size = 0.0;  // <= 0 means 2.5 * eps / pgd_steps
  int k_nor = 100;             // normal-fiber grid count
  int k_in = 100;              // in-manifold grid count (400 for 2-d manifolds)
  std::uint64_t seed = 0;

  double step_size() const { return pgd_step_size > 0.0 ? pgd_step_size : 2.5 * eps / pgd_steps; }

  // eps may be 0 (degenerate budgets are used by training recipes) but must
  // stay below the manifold's tubular radius.
  void validate(manifolds::ManifoldKind kind) const;
};

// A witness `point` with its score. On success score * y <= 0 and the point
// lies within the budget ball (ambient, normal segment, or chord).
struct AttackOutcome {
  bool success = false;
  Vec point;
  double score = 0.0;
};

// Iterated loss ascent from a random start in the ball, projecting back after
// every step. Returns the first sign-flipping iterate, or the max-loss
// iterate with success=false. x itself is checked first, so a standard
// misclassification always yields a witness. Deterministic given the seed
// (budget.seed unless overridden).
AttackOutcome pgd_attack(const ScoreModel& model, const Vec& x, int y, const AttackBudget& budget,
                         std::optional<std::uint64_t> seed = std::nullopt);

// Vectorized variant: column i attacks (xs.col(i), ys[i]) with seed
// derive_seed(budget.seed, i). Same algorithm as pgd_attack run in lockstep.
std::vector<AttackOutcome> pgd_attack_batch(const ScoreModel& model, const Mat& xs,
                                            const std::vector<int>& ys, const AttackBudget& budget);

// Scores x + t*v for k_nor values of t evenly spaced in [-eps, eps] with any
// exact zero dropped (the definition requires x' != x); endpoints included.
AttackOutcome normal_attack_grid(const ScoreModel& model, manifolds::ManifoldKind kind,
                                 const manifolds::LabeledManifoldSample& sample,
                                 const AttackBudget& budget);

// One uniform draw t in [-eps, eps]; used by normal-direction adversarial
// training, not by risk estimation.
AttackOutcome normal_attack_random(const ScoreModel& model, manifolds::ManifoldKind kind,
                                   const manifolds::LabeledManifoldSample& sample,
                                   const AttackBudget& budget,
                                   std::optional<std::uint64_t> seed = std::nullopt);

// Grid search over the chart parameterization of B^in_eps(x).
AttackOutcome in_manifold_attack_grid(const ScoreModel& model, manifolds::ManifoldKind kind,
                                      const manifolds::LabeledManifoldSample& sample,
                                      const AttackBudget& budget);

// PGD in ambient space, projected back to the manifold, then pulled along the
// chart toward x until the chord distance fits the budget.
AttackOutcome in_manifold_attack_project(const ScoreModel& model, manifolds::ManifoldKind kind,
                                         const manifolds::LabeledManifoldSample& sample,
                                         const AttackBudget& budget,
                                         std::optional<std::uint64_t> seed = std::nullopt);

// Dense lattice scan of the closed eps-ball under the budget norm, step
// `resolution` per axis (<= 0 means eps/200). The strongest attack available;
// cost grows as (2 eps / resolution)^D.
AttackOutcome exhaustive_ball_attack(const ScoreModel& model, const Vec& x, int y,
                                     const AttackBudget& budget, double resolution = 0.0);

}  // namespace manirisk::attacks
