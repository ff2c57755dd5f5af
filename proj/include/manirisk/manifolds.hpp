#pragma once

#include "manirisk/common.hpp"

#include <string>
#include <vector>

namespace manirisk::manifolds {

// The three synthetic manifolds. All are codimension 1, so every point has a
// single unit normal vector.
//   circle2d   - unit circle in R^2, chart = angle in (-pi, pi]
//   plane3d    - square [-pi,pi]^2 in the x1x2-plane of R^3, chart = (x1,x2)
//   interval1d - segment [0,1]x{0} in R^2, chart = x1
enum class ManifoldKind { circle2d, plane3d, interval1d };

struct ManifoldInfo {
  int intrinsic_dim;
  int ambient_dim;
  double tubular_radius;  // budgets must stay strictly below this
};

ManifoldInfo info(ManifoldKind kind);

std::string kind_name(ManifoldKind kind);
ManifoldKind kind_from_name(const std::string& name);

enum class LabelRule {
  circle_single,     // y = 2*1(x1 > 0) - 1
  circle_double,     // y = 2*1(x1*x2 > 0) - 1
  plane_single,      // y = 2*1(x1 > sin(x2)) - 1
  plane_double,      // y = 2*1((x1 - sin(x2))*x2 > 0) - 1
  constant_plus_one  // y = +1 (tightness construction)
};

std::string rule_name(LabelRule rule);
LabelRule rule_from_name(const std::string& name);
ManifoldKind kind_for_rule(LabelRule rule);

// The indicators are strict: points exactly on a decision curve get label -1.
int label_of(LabelRule rule, const Vec& x);

struct LabeledManifoldSample {
  Vec x;                         // ambient point, on the manifold to 1e-12
  int y = 1;                     // label in {-1, +1}
  Vec u;                         // chart coordinate
  std::vector<Vec> normal_basis; // orthonormal basis of the normal space
};

// i.i.d. uniform on the manifold (uniform angle for the circle, uniform on
// the square for the plane, uniform on [0,1] for the interval).
std::vector<LabeledManifoldSample> sample_dataset(ManifoldKind kind, LabelRule rule, int n,
                                                  std::uint64_t seed);

// Throws GeometryError if x is off the manifold beyond 1e-9.
std::vector<Vec> normal_basis(ManifoldKind kind, const Vec& x);

Vec chart_of(ManifoldKind kind, const Vec& x);
Vec ambient_of(ManifoldKind kind, const Vec& u);

// Ambient (chord) distance between two chart points.
double chord_distance(ManifoldKind kind, const Vec& u1, const Vec& u2);

// Chart-coordinate description of B^in_eps(x): the set of manifold points
// within ambient distance eps of the point with chart coordinate `center`.
struct ChartBall {
  ManifoldKind kind;
  Vec center;
  double eps;     // the ambient (chord) radius
  double radius;  // chart radius: angular half-width (circle), eps (plane/interval)
  Vec lo, hi;     // clipped per-axis chart bounds (plane: square, interval: [0,1])
};

ChartBall in_manifold_ball_param(ManifoldKind kind, const Vec& u, double eps);

// Evaluation grid over a chart ball. d=1: k evenly spaced points including
// both endpoints. d=2: an m x m lattice (m = floor(sqrt(k))) over the clipped
// bounding box, keeping points within chord distance eps of the center.
std::vector<Vec> chart_grid(const ChartBall& ball, int k);

// Nearest-point projection. Throws ProjectionError for the circle at the
// origin, where the projection is undefined.
Vec project_to_manifold(ManifoldKind kind, const Vec& z);

// Dataset CSV: header x0,..,x{D-1},y,u0,..,u{d-1}, 17 significant digits.
std::string dataset_to_csv(ManifoldKind kind, const std::vector<LabeledManifoldSample>& samples);
std::vector<LabeledManifoldSample> dataset_from_csv(ManifoldKind kind, const std::string& path);

}  // namespace manirisk::manifolds
