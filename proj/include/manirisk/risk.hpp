#pragma once

#include "manirisk/attacks.hpp"
#include "manirisk/common.hpp"
#include "manirisk/manifolds.hpp"
#include "manirisk/score_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace manirisk::risk {

// How the ambient adversarial search is carried out. Either way, standard
// misclassification and successful normal / in-manifold witnesses at the same
// eps are folded in, so per sample: std, normal, in-manifold  =>  adversarial.
enum class AdvMethod { pgd_combined, exhaustive_grid };

struct EstimatorOptions {
  AdvMethod adv_method = AdvMethod::pgd_combined;
  double exhaustive_resolution = 0.0;  // lattice step for exhaustive_grid (<=0: eps/200)
  bool with_nnr = true;
  int threads = 1;
  double nor_zero_threshold = 0.01;  // R_nor level at which claim (ii) applies
};

struct RiskReport {
  std::string dataset;
  std::string classifier;
  double eps = 0.0;
  int n_test = 0;
  double r_std = 0.0;
  double r_adv = 0.0;
  double r_nor = 0.0;
  double r_in_2eps = 0.0;
  double mu_znor = 0.0;
  double nnr_events = 0.0;
  double rhs_i = 0.0;   // r_std + r_nor + r_in_2eps + mu_znor
  double rhs_ii = 0.0;  // r_std + r_in_2eps
  std::string attack_method;
  std::uint64_t seed = 0;
  int std_nor_overlap = 0;  // samples counted by both r_std and r_nor (small-eps caveat)
};

struct Verdict {
  bool holds_i = false;
  std::optional<bool> holds_ii;  // evaluated only when r_nor <= threshold
  double margin_i = 0.0;
  double margin_ii = 0.0;
  double tolerance = 0.0;
};

// Fraction of the test set with score * y <= 0.
double estimate_std_risk(const ScoreModel& model,
                         const std::vector<manifolds::LabeledManifoldSample>& test);

double estimate_adv_risk(const ScoreModel& model, manifolds::ManifoldKind kind,
                         const std::vector<manifolds::LabeledManifoldSample>& test,
                         const attacks::AttackBudget& budget, const EstimatorOptions& options = {});

// Fraction with a normal-fiber grid witness. No correctness guard at x: the
// definition counts any x' != x on the fiber with score * y <= 0.
double estimate_nor_risk(const ScoreModel& model, manifolds::ManifoldKind kind,
                         const std::vector<manifolds::LabeledManifoldSample>& test,
                         const attacks::AttackBudget& budget);

// Fraction with an in-manifold witness at budget.eps (pass a 2-eps budget for
// the decomposition's R^in term).
double estimate_in_risk(const ScoreModel& model, manifolds::ManifoldKind kind,
                        const std::vector<manifolds::LabeledManifoldSample>& test,
                        const attacks::AttackBudget& budget, bool use_projection_attack = false);

// Correctly classified test points with a successful normal-fiber attack.
struct ZnorSet {
  std::vector<int> indices;
  std::vector<Vec> chart_points;
  int n_test = 0;
};

ZnorSet build_znor(const ScoreModel& model, manifolds::ManifoldKind kind,
                   const std::vector<manifolds::LabeledManifoldSample>& test,
                   const attacks::AttackBudget& budget);

// Empirical stand-in for mu(complement(Z^nor) and B_2eps(Z^nor)): the exact
// normalized measure of the union of 2-eps dilations around the Z^nor points
// (chord arcs on the circle, axis-aligned squares of half-side 2 eps on the
// plane, intervals on [0,1]), minus the empirical mass of Z^nor itself,
// floored at zero.
double mu_znor_neighborhood(manifolds::ManifoldKind kind, const ZnorSet& znor, double eps);

// Fraction of test points where all three hold:
//   A: every fiber grid point keeps score * y > 0 strictly,
//   B: some chart grid point x' of B^in_2eps(x) has a fiber point z with
//      score(z) * score(x') <= 0 (label-free),
//   C: every chart grid point of B^in_2eps(x) keeps score * y > 0.
double estimate_nnr_events(const ScoreModel& model, manifolds::ManifoldKind kind,
                           const std::vector<manifolds::LabeledManifoldSample>& test,
                           const attacks::AttackBudget& budget, int threads = 1);

// Monte-Carlo slack: 2 sqrt(r_adv (1 - r_adv) / n_test) + 0.01.
Verdict decomposition_check(const RiskReport& report, double nor_zero_threshold = 0.01);

// One pass over the test set producing every term of the report.
RiskReport evaluate_report(const ScoreModel& model, manifolds::ManifoldKind kind,
                           const std::vector<manifolds::LabeledManifoldSample>& test, double eps,
                           const attacks::AttackBudget& budget_template,
                           const EstimatorOptions& options, const std::string& dataset_tag,
                           const std::string& classifier_tag);

std::string report_csv_header();
std::string report_csv_row(const RiskReport& report, const Verdict& verdict);

}  // namespace manirisk::risk
