#include "manirisk/tightness.hpp"

#include <algorithm>
#include <cmath>

namespace manirisk::tightness {

namespace {

// Union length of [0,1]-clipped intervals.
double clipped_union_length(std::vector<std::pair<double, double>> intervals) {
  for (auto& iv : intervals) {
    iv.first = std::max(iv.first, 0.0);
    iv.second = std::min(iv.second, 1.0);
  }
  std::erase_if(intervals, [](const auto& iv) { return iv.second <= iv.first; });
  std::sort(intervals.begin(), intervals.end());
  double total = 0.0, cur_lo = 0.0, cur_hi = -1.0;
  for (const auto& [lo, hi] : intervals) {
    if (hi <= cur_hi) continue;
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) total += cur_hi - cur_lo;
      cur_lo = lo;
    }
    cur_hi = hi;
  }
  if (cur_hi > cur_lo) total += cur_hi - cur_lo;
  return total;
}

// Length of the intersection of [lo, hi] with the union held in `merged`
// (disjoint sorted intervals).
double intersect_length(const std::vector<std::pair<double, double>>& merged, double lo, double hi) {
  double total = 0.0;
  for (const auto& [a, b] : merged) {
    const double l = std::max(a, lo), h = std::min(b, hi);
    if (h > l) total += h - l;
  }
  return total;
}

std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> v) {
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace

TightnessConstruction build_construction(int n, double eps) {
  if (n < 1) throw UsageError("tightness: n must be >= 1");
  if (!(eps > 0.0 && eps < 0.5)) throw UsageError("tightness: eps must lie in (0, 1/2)");
  TightnessConstruction tc;
  tc.n = n;
  tc.eps = eps;
  tc.l1 = static_cast<double>(n - 1) / (static_cast<double>(n) * (n + 1));
  tc.l2 = 1.0 / (static_cast<double>(n) * n);
  tc.delta = eps / 10.0;

  tc.partition.reserve(2 * n + 1);
  double edge = 0.0;
  for (int i = 0; i <= n; ++i) {
    // Endpoints accumulated as i*l1 + j*l2 keep the tiling exact to 1e-15.
    // At n = 1 the A intervals are degenerate (l1 = 0) and are dropped, so
    // the partition is the single B_1 = [0, 1].
    if (tc.l1 > 0.0) tc.partition.push_back({false, i, edge, edge + tc.l1});
    edge += tc.l1;
    if (i < n) {
      tc.partition.push_back({true, i + 1, edge, edge + tc.l2});
      edge += tc.l2;
    }
  }
  tc.partition.back().hi = 1.0;
  return tc;
}

double boundary_height(const TightnessConstruction& tc, double x) {
  const double xc = std::clamp(x, 0.0, 1.0);
  // Binary search for the segment with lo <= xc < hi (last segment closed).
  int lo = 0, hi = static_cast<int>(tc.partition.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (tc.partition[mid].lo <= xc) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return tc.partition[lo].is_b ? tc.eps / 2.0 : 1.0;
}

double fn_score(const TightnessConstruction& tc, const Vec& point) {
  if (point.size() != 2) throw DimensionError("fn_score: expected a point in R^2");
  const double g = boundary_height(tc, point(0));
  return std::clamp((g - std::abs(point(1))) / tc.delta, -1.0, 1.0);
}

AnalyticRisks analytic_risks(const TightnessConstruction& tc) {
  AnalyticRisks r;
  // On the manifold |t| = 0 < g everywhere, so the score is positive and the
  // constant +1 labels are always right: no standard or in-manifold risk.
  r.r_std = 0.0;
  r.r_in = 0.0;
  // Exactly the B mass: over B the fiber flips at |t| >= eps/2, over A it
  // would need |t| >= 1 > eps.
  r.r_nor = 1.0 / static_cast<double>(tc.n);

  std::vector<std::pair<double, double>> b_intervals;
  for (const auto& seg : tc.partition) {
    if (seg.is_b) b_intervals.emplace_back(seg.lo, seg.hi);
  }

  // NNR: A-interval mass within chart distance 2 eps of some B interval
  // (event A holds on A intervals, C holds everywhere, B needs a nearby
  // flip-carrying fiber).
  {
    std::vector<std::pair<double, double>> dilated;
    for (const auto& [lo, hi] : b_intervals) {
      dilated.emplace_back(lo - 2.0 * tc.eps, hi + 2.0 * tc.eps);
    }
    const auto merged = merge_intervals(std::move(dilated));
    double nnr = 0.0;
    for (const auto& seg : tc.partition) {
      if (!seg.is_b) nnr += intersect_length(merged, seg.lo, seg.hi);
    }
    r.nnr = std::min(nnr, 1.0);
  }

  // Adversarial mass: x has a witness in the closed l2 eps-ball iff the
  // chart distance from x to some B interval is at most sqrt(3)/2 * eps
  // (witness (x', eps/2) sits exactly on the ramp zero, and score 0 counts).
  {
    const double reach = std::sqrt(3.0) / 2.0 * tc.eps;
    std::vector<std::pair<double, double>> dilated;
    for (const auto& [lo, hi] : b_intervals) {
      dilated.emplace_back(lo - reach, hi + reach);
    }
    r.r_adv = clipped_union_length(std::move(dilated));
  }
  return r;
}

double brute_force_adv_check(const TightnessConstruction& tc, int m, double resolution) {
  if (m < 100) throw UsageError("brute_force_adv_check: need at least 100 probes");
  const double res = resolution > 0.0 ? resolution : tc.eps / 200.0;
  const int per_axis = static_cast<int>(std::llround(2.0 * tc.eps / res)) + 1;

  std::vector<double> offsets(per_axis);
  for (int i = 0; i < per_axis; ++i) {
    offsets[i] = -tc.eps + 2.0 * tc.eps * i / (per_axis - 1);
  }

  const double eps_sq = tc.eps * tc.eps * (1.0 + 1e-12);
  int hits = 0;
  Vec p(2);
  for (int j = 0; j < m; ++j) {
    const double x = (j + 0.5) / m;
    bool found = false;
    for (int a = 0; a < per_axis && !found; ++a) {
      const double dx = offsets[a];
      for (int b = 0; b < per_axis; ++b) {
        const double dt = offsets[b];
        if (dx * dx + dt * dt > eps_sq) continue;
        p(0) = x + dx;
        p(1) = dt;
        if (fn_score(tc, p) <= 0.0) {
          found = true;
          break;
        }
      }
    }
    if (found) ++hits;
  }
  return static_cast<double>(hits) / m;
}

}  // namespace manirisk::tightness
