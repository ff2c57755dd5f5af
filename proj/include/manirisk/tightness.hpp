#pragma once

#include "manirisk/common.hpp"
#include "manirisk/score_model.hpp"

#include <vector>

namespace manirisk::tightness {

// Interval-partition score family on M = [0,1] x {0} in R^2. The unit
// interval is tiled as A_0, B_1, A_1, ..., B_n, A_n with |A_i| = l1 =
// (n-1)/(n(n+1)) and |B_i| = l2 = 1/n^2; (n+1) l1 + n l2 = 1 identically.
// The boundary height g(x) is 1 over A intervals and eps/2 over B intervals,
// and the score ramps through zero at |t| = g(x) with sharpness delta.
struct TightnessConstruction {
  int n = 1;
  double eps = 0.25;
  double l1 = 0.0;
  double l2 = 0.0;
  double delta = 0.025;  // ramp sharpness, default eps/10

  struct Segment {
    bool is_b;    // true for B_i, false for A_i
    int index;    // i
    double lo, hi;
  };
  std::vector<Segment> partition;  // ordered, tiles [0,1]
};

// Requires n >= 1 and 0 < eps < 1/2.
TightnessConstruction build_construction(int n, double eps);

// g_n at a chart coordinate; points outside [0,1] take the nearest
// endpoint's value. Segments are half-open [lo, hi) except the last.
double boundary_height(const TightnessConstruction& tc, double x);

// Signed score at an ambient point (x, t):
//   s = clamp((g(x) - |t|) / delta, -1, 1)
// so s > 0 iff |t| < g(x), s = 0 iff |t| = g(x), s < 0 iff |t| > g(x).
double fn_score(const TightnessConstruction& tc, const Vec& point);

struct AnalyticRisks {
  double r_std = 0.0;
  double r_in = 0.0;
  double r_nor = 0.0;
  double nnr = 0.0;
  double r_adv = 0.0;
};

// Exact values under the uniform distribution on [0,1] with labels = +1.
// r_adv is the exact length of the set of points with an adversarial witness
// in the closed l2 eps-ball: the union of the B intervals dilated by
// sqrt(3)/2 * eps, clipped to [0,1].
AnalyticRisks analytic_risks(const TightnessConstruction& tc);

// Independent check of r_adv: for m evenly spaced probes x in [0,1], scans a
// lattice of the closed l2 eps-ball around (x, 0) at the given resolution
// (<= 0 means eps/200) for a sign flip; returns the success fraction.
double brute_force_adv_check(const TightnessConstruction& tc, int m, double resolution = 0.0);

// ScoreModel adapter so attacks and risk estimators run on f_n directly.
class TightnessScore : public ScoreModel {
 public:
  explicit TightnessScore(TightnessConstruction tc) : tc_(std::move(tc)) {}
  int input_dim() const override { return 2; }
  double score(const Vec& x) const override { return fn_score(tc_, x); }
  const TightnessConstruction& construction() const { return tc_; }

 private:
  TightnessConstruction tc_;
};

}  // namespace manirisk::tightness
