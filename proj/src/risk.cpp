#include "manirisk/risk.hpp"

#include "manirisk/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace manirisk::risk {

using attacks::AttackBudget;
using manifolds::ChartBall;
using manifolds::LabeledManifoldSample;
using manifolds::ManifoldKind;

namespace {

constexpr double kPi = std::numbers::pi;

// Per-sample outcome of the shared grid machinery.
struct SampleFlags {
  bool std_wrong = false;
  bool nor = false;      // normal grid witness at eps
  bool in_eps = false;   // in-manifold grid witness at eps
  bool in_2eps = false;  // in-manifold grid witness at 2 eps
  bool adv = false;
  bool nnr = false;
};

// Fiber t-grid excluding zero; mirrors normal_attack_grid.
std::vector<double> fiber_offsets(double eps, int k) {
  std::vector<double> ts;
  ts.reserve(k);
  for (int i = 0; i < k; ++i) {
    const double t = -eps + 2.0 * eps * i / (k - 1);
    if (t != 0.0) ts.push_back(t);
  }
  return ts;
}

bool any_flip(const Vec& scores, double reference) {
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores(i) * reference <= 0.0) return true;
  }
  return false;
}

// Event B of the NNR: does any chart grid point of B^in_2eps(x) carry a
// label-free fiber flip? Scores of the grid points are passed in so they are
// computed once and shared with the C event and the R_in estimate.
bool nearby_normal_flip(const ScoreModel& model, ManifoldKind kind,
                        const std::vector<Vec>& grid_chart, const Mat& grid_ambient,
                        const Vec& grid_scores, double eps, int k_nor) {
  const auto ts = fiber_offsets(eps, k_nor);
  if (ts.empty()) return false;
  Mat fiber(grid_ambient.rows(), ts.size());
  for (std::size_t j = 0; j < grid_chart.size(); ++j) {
    const Vec x_prime = grid_ambient.col(static_cast<Eigen::Index>(j));
    const auto normals = manifolds::normal_basis(kind, x_prime);
    const Vec& v = normals[0];
    for (std::size_t a = 0; a < ts.size(); ++a) {
      fiber.col(static_cast<Eigen::Index>(a)) = x_prime + ts[a] * v;
    }
    const Vec scores = model.score_batch(fiber);
    if (any_flip(scores, grid_scores(static_cast<Eigen::Index>(j)))) return true;
  }
  return false;
}

std::vector<SampleFlags> evaluate_flags(const ScoreModel& model, ManifoldKind kind,
                                        const std::vector<LabeledManifoldSample>& test,
                                        const AttackBudget& budget,
                                        const EstimatorOptions& options) {
  const int n = static_cast<int>(test.size());
  if (n == 0) throw UsageError("risk estimation: empty test set");
  budget.validate(kind);

  std::vector<SampleFlags> flags(n);

  // Ambient attack, vectorized across the test set.
  std::vector<attacks::AttackOutcome> ambient(n);
  if (options.adv_method == AdvMethod::pgd_combined) {
    Mat xs(test[0].x.size(), n);
    std::vector<int> ys(n);
    for (int i = 0; i < n; ++i) {
      xs.col(i) = test[i].x;
      ys[i] = test[i].y;
    }
    ambient = attacks::pgd_attack_batch(model, xs, ys, budget);
  }

  parallel_for(n, options.threads, [&](int i) {
    const auto& s = test[i];
    SampleFlags& f = flags[i];
    f.std_wrong = model.score(s.x) * s.y <= 0.0;
    f.nor = attacks::normal_attack_grid(model, kind, s, budget).success;
    f.in_eps = attacks::in_manifold_attack_grid(model, kind, s, budget).success;

    // Shared 2-eps chart grid: scores feed R_in(2 eps), event C, and event B.
    const ChartBall ball2 = manifolds::in_manifold_ball_param(kind, s.u, 2.0 * budget.eps);
    const auto grid2 = manifolds::chart_grid(ball2, budget.k_in);
    Mat pts2(s.x.size(), grid2.size());
    for (std::size_t j = 0; j < grid2.size(); ++j) {
      pts2.col(static_cast<Eigen::Index>(j)) = manifolds::ambient_of(kind, grid2[j]);
    }
    const Vec s2 = model.score_batch(pts2);
    f.in_2eps = any_flip(s2, static_cast<double>(s.y));

    if (options.adv_method == AdvMethod::exhaustive_grid) {
      ambient[i] =
          attacks::exhaustive_ball_attack(model, s.x, s.y, budget, options.exhaustive_resolution);
    }
    f.adv = f.std_wrong || ambient[i].success || f.nor || f.in_eps;

    if (options.with_nnr) {
      const bool ev_a = !f.nor;
      const bool ev_c = !f.in_2eps;
      if (ev_a && ev_c) {
        f.nnr = nearby_normal_flip(model, kind, grid2, pts2, s2, budget.eps, budget.k_nor);
      }
    }
  });
  return flags;
}

double mean_of(const std::vector<SampleFlags>& flags, bool SampleFlags::*member) {
  double sum = 0.0;
  for (const auto& f : flags) sum += (f.*member) ? 1.0 : 0.0;
  return sum / static_cast<double>(flags.size());
}

// Union length of arcs [center - half, center + half] on the circle of
// circumference 2 pi, handling wrap-around.
double circle_union_length(const std::vector<double>& centers, double half) {
  if (centers.empty()) return 0.0;
  if (half >= kPi) return 2.0 * kPi;
  std::vector<std::pair<double, double>> arcs;
  arcs.reserve(centers.size() * 2);
  for (double c : centers) {
    double lo = std::fmod(c - half, 2.0 * kPi);
    if (lo < 0.0) lo += 2.0 * kPi;
    const double hi = lo + 2.0 * half;
    if (hi <= 2.0 * kPi) {
      arcs.emplace_back(lo, hi);
    } else {
      arcs.emplace_back(lo, 2.0 * kPi);
      arcs.emplace_back(0.0, hi - 2.0 * kPi);
    }
  }
  std::sort(arcs.begin(), arcs.end());
  double total = 0.0, cur_lo = arcs[0].first, cur_hi = arcs[0].second;
  for (std::size_t i = 1; i < arcs.size(); ++i) {
    if (arcs[i].first <= cur_hi) {
      cur_hi = std::max(cur_hi, arcs[i].second);
    } else {
      total += cur_hi - cur_lo;
      cur_lo = arcs[i].first;
      cur_hi = arcs[i].second;
    }
  }
  total += cur_hi - cur_lo;
  return total;
}

// Exact union area of axis-aligned squares clipped to [-pi, pi]^2 via a
// coordinate sweep: at each x-slab, sum the union length of active
// y-intervals.
double square_union_area(const std::vector<Vec>& centers, double half) {
  if (centers.empty()) return 0.0;
  struct Rect {
    double x0, x1, y0, y1;
  };
  std::vector<Rect> rects;
  rects.reserve(centers.size());
  std::vector<double> xs;
  xs.reserve(centers.size() * 2);
  for (const auto& c : centers) {
    Rect r{std::max(c(0) - half, -kPi), std::min(c(0) + half, kPi), std::max(c(1) - half, -kPi),
           std::min(c(1) + half, kPi)};
    if (r.x1 <= r.x0 || r.y1 <= r.y0) continue;
    xs.push_back(r.x0);
    xs.push_back(r.x1);
    rects.push_back(r);
  }
  if (rects.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  double area = 0.0;
  std::vector<std::pair<double, double>> active;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double x_mid = 0.5 * (xs[k] + xs[k + 1]);
    const double width = xs[k + 1] - xs[k];
    active.clear();
    for (const auto& r : rects) {
      if (r.x0 <= x_mid && x_mid < r.x1) active.emplace_back(r.y0, r.y1);
    }
    if (active.empty()) continue;
    std::sort(active.begin(), active.end());
    double len = 0.0, lo = active[0].first, hi = active[0].second;
    for (std::size_t i = 1; i < active.size(); ++i) {
      if (active[i].first <= hi) {
        hi = std::max(hi, active[i].second);
      } else {
        len += hi - lo;
        lo = active[i].first;
        hi = active[i].second;
      }
    }
    len += hi - lo;
    area += len * width;
  }
  return area;
}

double interval_union_length(const std::vector<double>& centers, double half) {
  if (centers.empty()) return 0.0;
  std::vector<std::pair<double, double>> ivs;
  ivs.reserve(centers.size());
  for (double c : centers) {
    const double lo = std::max(c - half, 0.0), hi = std::min(c + half, 1.0);
    if (hi > lo) ivs.emplace_back(lo, hi);
  }
  if (ivs.empty()) return 0.0;
  std::sort(ivs.begin(), ivs.end());
  double total = 0.0, lo = ivs[0].first, hi = ivs[0].second;
  for (std::size_t i = 1; i < ivs.size(); ++i) {
    if (ivs[i].first <= hi) {
      hi = std::max(hi, ivs[i].second);
    } else {
      total += hi - lo;
      lo = ivs[i].first;
      hi = ivs[i].second;
    }
  }
  total += hi - lo;
  return total;
}

}  // namespace

double estimate_std_risk(const ScoreModel& model, const std::vector<LabeledManifoldSample>& test) {
  if (test.empty()) throw UsageError("estimate_std_risk: empty test set");
  Mat xs(test[0].x.size(), test.size());
  for (std::size_t i = 0; i < test.size(); ++i) xs.col(static_cast<Eigen::Index>(i)) = test[i].x;
  const Vec scores = model.score_batch(xs);
  double wrong = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (scores(static_cast<Eigen::Index>(i)) * test[i].y <= 0.0) wrong += 1.0;
  }
  return wrong / static_cast<double>(test.size());
}

double estimate_adv_risk(const ScoreModel& model, ManifoldKind kind,
                         const std::vector<LabeledManifoldSample>& test,
                         const AttackBudget& budget, const EstimatorOptions& options) {
  EstimatorOptions opt = options;
  opt.with_nnr = false;
  return mean_of(evaluate_flags(model, kind, test, budget, opt), &SampleFlags::adv);
}

double estimate_nor_risk(const ScoreModel& model, ManifoldKind kind,
                         const std::vector<LabeledManifoldSample>& test,
                         const AttackBudget& budget) {
  if (test.empty()) throw UsageError("estimate_nor_risk: empty test set");
  budget.validate(kind);
  double hits = 0.0;
  for (const auto& s : test) {
    if (attacks::normal_attack_grid(model, kind, s, budget).success) hits += 1.0;
  }
  return hits / static_cast<double>(test.size());
}

double estimate_in_risk(const ScoreModel& model, ManifoldKind kind,
                        const std::vector<LabeledManifoldSample>& test, const AttackBudget& budget,
                        bool use_projection_attack) {
  if (test.empty()) throw UsageError("estimate_in_risk: empty test set");
  double hits = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto outcome =
        use_projection_attack
            ? attacks::in_manifold_attack_project(model, kind, test[i], budget,
                                                  derive_seed(budget.seed, i))
            : attacks::in_manifold_attack_grid(model, kind, test[i], budget);
    if (outcome.success) hits += 1.0;
  }
  return hits / static_cast<double>(test.size());
}

ZnorSet build_znor(const ScoreModel& model, ManifoldKind kind,
                   const std::vector<LabeledManifoldSample>& test, const AttackBudget& budget) {
  if (test.empty()) throw UsageError("build_znor: empty test set");
  budget.validate(kind);
  ZnorSet z;
  z.n_test = static_cast<int>(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& s = test[i];
    if (model.score(s.x) * s.y > 0.0 && attacks::normal_attack_grid(model, kind, s, budget).success) {
      z.indices.push_back(static_cast<int>(i));
      z.chart_points.push_back(s.u);
    }
  }
  return z;
}

double mu_znor_neighborhood(ManifoldKind kind, const ZnorSet& znor, double eps) {
  if (znor.chart_points.empty()) return 0.0;
  if (znor.n_test <= 0) throw UsageError("mu_znor_neighborhood: n_test not set");
  const double two_eps = 2.0 * eps;
  double union_measure = 0.0;
  switch (kind) {
    case ManifoldKind::circle2d: {
      const double half = 2.0 * std::asin(std::min(two_eps, 2.0) / 2.0);
      std::vector<double> centers;
      centers.reserve(znor.chart_points.size());
      for (const auto& u : znor.chart_points) centers.push_back(u(0));
      union_measure = circle_union_length(centers, half) / (2.0 * kPi);
      break;
    }
    case ManifoldKind::plane3d:
      union_measure = square_union_area(znor.chart_points, two_eps) / (4.0 * kPi * kPi);
      break;
    case ManifoldKind::interval1d: {
      std::vector<double> centers;
      centers.reserve(znor.chart_points.size());
      for (const auto& u : znor.chart_points) centers.push_back(u(0));
      union_measure = interval_union_length(centers, two_eps);
      break;
    }
  }
  const double znor_mass = static_cast<double>(znor.chart_points.size()) / znor.n_test;
  return std::max(0.0, union_measure - znor_mass);
}

double estimate_nnr_events(const ScoreModel& model, ManifoldKind kind,
                           const std::vector<LabeledManifoldSample>& test,
                           const AttackBudget& budget, int threads) {
  const int n = static_cast<int>(test.size());
  if (n == 0) throw UsageError("estimate_nnr_events: empty test set");
  budget.validate(kind);
  std::vector<char> nnr(n, 0);
  parallel_for(n, threads, [&](int i) {
    const auto& s = test[i];
    if (attacks::normal_attack_grid(model, kind, s, budget).success) return;  // A fails
    const ChartBall ball2 = manifolds::in_manifold_ball_param(kind, s.u, 2.0 * budget.eps);
    const auto grid2 = manifolds::chart_grid(ball2, budget.k_in);
    Mat pts2(s.x.size(), grid2.size());
    for (std::size_t j = 0; j < grid2.size(); ++j) {
      pts2.col(static_cast<Eigen::Index>(j)) = manifolds::ambient_of(kind, grid2[j]);
    }
    const Vec s2 = model.score_batch(pts2);
    if (any_flip(s2, static_cast<double>(s.y))) return;  // C fails
    nnr[i] = nearby_normal_flip(model, kind, grid2, pts2, s2, budget.eps, budget.k_nor) ? 1 : 0;
  });
  double sum = 0.0;
  for (char c : nnr) sum += c;
  return sum / static_cast<double>(n);
}

Verdict decomposition_check(const RiskReport& report, double nor_zero_threshold) {
  Verdict v;
  v.tolerance =
      2.0 * std::sqrt(std::max(0.0, report.r_adv * (1.0 - report.r_adv)) / report.n_test) + 0.01;
  v.margin_i = report.rhs_i - report.r_adv;
  v.margin_ii = report.rhs_ii - report.r_adv;
  v.holds_i = report.r_adv <= report.rhs_i + v.tolerance;
  if (report.r_nor <= nor_zero_threshold) {
    v.holds_ii = report.r_adv <= report.rhs_ii + v.tolerance;
  }
  return v;
}

RiskReport evaluate_report(const ScoreModel& model, ManifoldKind kind,
                           const std::vector<LabeledManifoldSample>& test, double eps,
                           const AttackBudget& budget_template, const EstimatorOptions& options,
                           const std::string& dataset_tag, const std::string& classifier_tag) {
  AttackBudget budget = budget_template;
  budget.eps = eps;
  const auto flags = evaluate_flags(model, kind, test, budget, options);

  RiskReport r;
  r.dataset = dataset_tag;
  r.classifier = classifier_tag;
  r.eps = eps;
  r.n_test = static_cast<int>(test.size());
  r.seed = budget.seed;
  r.r_std = mean_of(flags, &SampleFlags::std_wrong);
  r.r_adv = mean_of(flags, &SampleFlags::adv);
  r.r_nor = mean_of(flags, &SampleFlags::nor);
  r.r_in_2eps = mean_of(flags, &SampleFlags::in_2eps);
  r.nnr_events = options.with_nnr ? mean_of(flags, &SampleFlags::nnr) : 0.0;

  ZnorSet z;
  z.n_test = r.n_test;
  for (int i = 0; i < r.n_test; ++i) {
    if (!flags[i].std_wrong && flags[i].nor) {
      z.indices.push_back(i);
      z.chart_points.push_back(test[i].u);
    }
    if (flags[i].std_wrong && flags[i].nor) ++r.std_nor_overlap;
  }
  r.mu_znor = mu_znor_neighborhood(kind, z, eps);
  r.rhs_i = r.r_std + r.r_nor + r.r_in_2eps + r.mu_znor;
  r.rhs_ii = r.r_std + r.r_in_2eps;
  r.attack_method = options.adv_method == AdvMethod::pgd_combined
                        ? "pgd+std+normal_grid+in_grid"
                        : "exhaustive+std+normal_grid+in_grid";
  return r;
}

std::string report_csv_header() {
  return "dataset,classifier,eps,n_test,r_std,r_adv,r_nor,r_in_2eps,mu_znor,nnr_events,"
         "rhs_i,rhs_ii,holds_i,holds_ii,margin_i,margin_ii,seed";
}

std::string report_csv_row(const RiskReport& r, const Verdict& v) {
  std::ostringstream out;
  using csv::format_double;
  out << r.dataset << ',' << r.classifier << ',' << format_double(r.eps) << ',' << r.n_test << ','
      << format_double(r.r_std) << ',' << format_double(r.r_adv) << ',' << format_double(r.r_nor)
      << ',' << format_double(r.r_in_2eps) << ',' << format_double(r.mu_znor) << ','
      << format_double(r.nnr_events) << ',' << format_double(r.rhs_i) << ','
      << format_double(r.rhs_ii) << ',' << (v.holds_i ? '1' : '0') << ',';
  if (v.holds_ii.has_value()) {
    out << (*v.holds_ii ? '1' : '0');
  } else {
    out << "na";
  }
  out << ',' << format_double(v.margin_i) << ',' << format_double(v.margin_ii) << ',' << r.seed;
  return out.str();
}

}  // namespace manirisk::risk
