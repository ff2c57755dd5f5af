#pragma once

#include "manirisk/common.hpp"

namespace manirisk {

// Anything that assigns a signed score to ambient points. Attacks and risk
// estimators are written against this so analytic constructions (e.g. the
// tightness score) plug into the same machinery as trained networks.
struct ScoreModel {
  virtual ~ScoreModel() = default;

  virtual int input_dim() const = 0;
  virtual double score(const Vec& x) const = 0;

  // One column per point. Default loops score(); dense models override with
  // a batched path.
  virtual Vec score_batch(const Mat& xs) const {
    Vec out(xs.cols());
    for (Eigen::Index i = 0; i < xs.cols(); ++i) out(i) = score(xs.col(i));
    return out;
  }

  virtual bool differentiable() const { return false; }

  virtual Vec score_gradient(const Vec&) const {
    throw UsageError("score_gradient: model does not expose gradients");
  }

  virtual Mat score_gradient_batch(const Mat& xs) const {
    Mat out(xs.rows(), xs.cols());
    for (Eigen::Index i = 0; i < xs.cols(); ++i) out.col(i) = score_gradient(xs.col(i));
    return out;
  }
};

}  // namespace manirisk
