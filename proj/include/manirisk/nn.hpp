#pragma once

#include "manirisk/common.hpp"
#include "manirisk/score_model.hpp"

#include <string>
#include <vector>

namespace manirisk::nn {

enum class Activation { relu, identity };

struct Layer {
  Mat weight;  // out x in
  Vec bias;    // out
  Activation act = Activation::identity;
};

struct Gradients {
  std::vector<Mat> d_weight;
  std::vector<Vec> d_bias;
  double mean_loss = 0.0;
};

// Feed-forward scorer: relu hidden layers, identity output of dimension 1.
// The signed score s(x) predicts label sign(s); s(x)*y <= 0 is the
// misclassification event. The relu subgradient at 0 is taken to be 0.
class Classifier : public ScoreModel {
 public:
  Classifier() = default;
  explicit Classifier(std::vector<Layer> layers);

  // dims = {input_dim, hidden..., 1}; weights uniform in [-a, a] with
  // a = sqrt(6 / (fan_in + fan_out)), biases zero, drawn from `seed`.
  static Classifier init(const std::vector<int>& dims, std::uint64_t seed);

  int input_dim() const override { return in_dim_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  double score(const Vec& x) const override { return forward(x); }
  Vec score_batch(const Mat& xs) const override { return forward_batch(xs); }
  bool differentiable() const override { return true; }
  Vec score_gradient(const Vec& x) const override { return input_gradient(x); }
  Mat score_gradient_batch(const Mat& xs) const override { return input_gradient_batch(xs); }

  double forward(const Vec& x) const;
  Vec forward_batch(const Mat& xs) const;  // xs: D x N

  Vec input_gradient(const Vec& x) const;
  Mat input_gradient_batch(const Mat& xs) const;  // D x N

  // Mean logistic loss (1/B) sum log(1 + exp(-y_i s(x_i))) over the batch,
  // differentiated with respect to all parameters.
  Gradients param_gradient(const Mat& xs, const std::vector<int>& ys) const;

  std::string to_json() const;
  static Classifier from_json(const std::string& text);
  void save(const std::string& path) const;
  static Classifier load(const std::string& path);

 private:
  void validate() const;
  std::vector<Layer> layers_;
  int in_dim_ = 0;
};

struct SgdConfig {
  double learning_rate = 0.1;
  double weight_decay = 0.0;  // l2 coefficient, applied to all parameters
  int epochs = 1;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;  // learning_rate >= 0, epochs >= 1, batch_size >= 1
};

// Hook to perturb a batch before the gradient step (adversarial variants).
// Receives the epoch, the dataset indices of the batch, and the batch inputs
// (one column per sample) to modify in place. Labels stay fixed.
using BatchTransform =
    std::function<void(int epoch, const std::vector<int>& index, Mat& xs, const std::vector<int>& ys)>;

struct TrainResult {
  std::vector<double> loss_trace;  // per-epoch mean loss at the pre-step parameters
};

// In-place SGD with per-epoch reshuffling; deterministic given cfg.seed.
// Throws DivergenceError naming the epoch if the loss becomes non-finite.
TrainResult train_epochs(Classifier& c, const Mat& xs, const std::vector<int>& ys,
                         const SgdConfig& cfg, const BatchTransform& transform = {});

// Numerically robust log(1 + exp(-m)).
double logistic_loss(double margin);

// Largest singular value via power iteration (used for Lipschitz bounds).
double spectral_norm_estimate(const Mat& m, int iters = 200);

}  // namespace manirisk::nn
