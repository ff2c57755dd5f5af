#include "manirisk/nn.hpp"

#include "manirisk/csv.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace manirisk::nn {

using json = nlohmann::json;

namespace {

constexpr Eigen::Index kBatchChunk = 8192;

void apply_activation(Mat& z, Activation act) {
  if (act == Activation::relu) z = z.cwiseMax(0.0);
}

const char* act_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation act_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw IoError("checkpoint: unknown activation '" + s + "'");
}

}  // namespace

double logistic_loss(double margin) {
  // log(1 + exp(-m)) without overflow for large |m|.
  if (margin > 0.0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

Classifier::Classifier(std::vector<Layer> layers) : layers_(std::move(layers)) {
  validate();
  in_dim_ = static_cast<int>(layers_.front().weight.cols());
}

void Classifier::validate() const {
  if (layers_.empty()) throw UsageError("classifier: needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.rows() != layer.bias.size()) {
      throw DimensionError("classifier: bias/weight mismatch in layer " + std::to_string(l));
    }
    if (l > 0 && layers_[l - 1].weight.rows() != layer.weight.cols()) {
      throw DimensionError("classifier: layer " + std::to_string(l) +
                           " input does not match previous output");
    }
  }
  const auto& last = layers_.back();
  if (last.weight.rows() != 1 || last.act != Activation::identity) {
    throw DimensionError("classifier: final layer must be identity with output dimension 1");
  }
}

Classifier Classifier::init(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw UsageError("classifier init: dims needs input and output");
  if (dims.back() != 1) throw UsageError("classifier init: output dimension must be 1");
  Rng rng(seed);
  std::vector<Layer> layers;
  layers.reserve(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    if (fan_in < 1 || fan_out < 1) throw UsageError("classifier init: dims must be positive");
    Layer layer;
    layer.weight = Mat(fan_out, fan_in);
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = rng.uniform(-a, a);
    }
    layer.bias = Vec::Zero(fan_out);
    layer.act = (l + 2 == dims.size()) ? Activation::identity : Activation::relu;
    layers.push_back(std::move(layer));
  }
  return Classifier(std::move(layers));
}

double Classifier::forward(const Vec& x) const {
  if (x.size() != in_dim_) {
    throw DimensionError("forward: input has dimension " + std::to_string(x.size()) +
                         ", expected " + std::to_string(in_dim_));
  }
  Vec h = x;
  for (const auto& layer : layers_) {
    Vec z = layer.weight * h + layer.bias;
    if (layer.act == Activation::relu) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h(0);
}

Vec Classifier::forward_batch(const Mat& xs) const {
  if (xs.rows() != in_dim_) throw DimensionError("forward_batch: wrong input dimension");
  const Eigen::Index n = xs.cols();
  Vec out(n);
  for (Eigen::Index start = 0; start < n; start += kBatchChunk) {
    const Eigen::Index len = std::min(kBatchChunk, n - start);
    Mat h = xs.middleCols(start, len);
    for (const auto& layer : layers_) {
      Mat z = (layer.weight * h).colwise() + layer.bias;
      apply_activation(z, layer.act);
      h = std::move(z);
    }
    out.segment(start, len) = h.row(0).transpose();
  }
  return out;
}

Vec Classifier::input_gradient(const Vec& x) const {
  Mat g = input_gradient_batch(x);
  return g.col(0);
}

Mat Classifier::input_gradient_batch(const Mat& xs) const {
  if (xs.rows() != in_dim_) throw DimensionError("input_gradient_batch: wrong input dimension");
  const Eigen::Index n = xs.cols();
  Mat out(in_dim_, n);
  const std::size_t depth = layers_.size();
  for (Eigen::Index start = 0; start < n; start += kBatchChunk) {
    const Eigen::Index len = std::min(kBatchChunk, n - start);
    // Forward, keeping the relu masks.
    std::vector<Mat> masks(depth);
    Mat h = xs.middleCols(start, len);
    for (std::size_t l = 0; l < depth; ++l) {
      Mat z = (layers_[l].weight * h).colwise() + layers_[l].bias;
      if (layers_[l].act == Activation::relu) {
        masks[l] = (z.array() > 0.0).cast<double>();
        z = z.cwiseMax(0.0);
      }
      h = std::move(z);
    }
    // Backward: d s / d h_l, seeded with 1 at the scalar output.
    Mat grad = Mat::Ones(1, len);
    for (std::size_t l = depth; l-- > 0;) {
      if (layers_[l].act == Activation::relu) grad = grad.cwiseProduct(masks[l]);
      grad = layers_[l].weight.transpose() * grad;
    }
    out.middleCols(start, len) = grad;
  }
  return out;
}

Gradients Classifier::param_gradient(const Mat& xs, const std::vector<int>& ys) const {
  if (xs.cols() == 0) throw UsageError("param_gradient: empty batch");
  if (xs.rows() != in_dim_) throw DimensionError("param_gradient: wrong input dimension");
  if (static_cast<Eigen::Index>(ys.size()) != xs.cols()) {
    throw DimensionError("param_gradient: label count does not match batch");
  }
  for (int y : ys) {
    if (y != 1 && y != -1) throw UsageError("param_gradient: labels must be +1 or -1");
  }
  const Eigen::Index n = xs.cols();
  const std::size_t depth = layers_.size();

  Gradients g;
  g.d_weight.resize(depth);
  g.d_bias.resize(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    g.d_weight[l] = Mat::Zero(layers_[l].weight.rows(), layers_[l].weight.cols());
    g.d_bias[l] = Vec::Zero(layers_[l].bias.size());
  }

  double loss_sum = 0.0;
  for (Eigen::Index start = 0; start < n; start += kBatchChunk) {
    const Eigen::Index len = std::min(kBatchChunk, n - start);
    std::vector<Mat> inputs(depth);  // input to each layer
    std::vector<Mat> masks(depth);
    Mat h = xs.middleCols(start, len);
    for (std::size_t l = 0; l < depth; ++l) {
      inputs[l] = h;
      Mat z = (layers_[l].weight * h).colwise() + layers_[l].bias;
      if (layers_[l].act == Activation::relu) {
        masks[l] = (z.array() > 0.0).cast<double>();
        z = z.cwiseMax(0.0);
      }
      h = std::move(z);
    }
    // dL/ds for the mean logistic loss: -y * sigma(-y s) / n.
    Mat delta(1, len);
    for (Eigen::Index i = 0; i < len; ++i) {
      const double s = h(0, i);
      const double y = static_cast<double>(ys[start + i]);
      loss_sum += logistic_loss(y * s);
      delta(0, i) = -y / (1.0 + std::exp(y * s));
    }
    for (std::size_t l = depth; l-- > 0;) {
      if (layers_[l].act == Activation::relu) delta = delta.cwiseProduct(masks[l]);
      g.d_weight[l].noalias() += delta * inputs[l].transpose();
      g.d_bias[l] += delta.rowwise().sum();
      if (l > 0) delta = layers_[l].weight.transpose() * delta;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t l = 0; l < depth; ++l) {
    g.d_weight[l] *= inv_n;
    g.d_bias[l] *= inv_n;
  }
  g.mean_loss = loss_sum * inv_n;
  return g;
}

void SgdConfig::validate() const {
  if (learning_rate < 0.0) throw UsageError("sgd: learning rate must be >= 0");
  if (weight_decay < 0.0) throw UsageError("sgd: weight decay must be >= 0");
  if (epochs < 1) throw UsageError("sgd: epochs must be >= 1");
  if (batch_size < 1) throw UsageError("sgd: batch size must be >= 1");
}

TrainResult train_epochs(Classifier& c, const Mat& xs, const std::vector<int>& ys,
                         const SgdConfig& cfg, const BatchTransform& transform) {
  cfg.validate();
  if (xs.cols() == 0) throw UsageError("train_epochs: empty dataset");
  if (static_cast<Eigen::Index>(ys.size()) != xs.cols()) {
    throw DimensionError("train_epochs: label count does not match data");
  }
  const int n = static_cast<int>(xs.cols());
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5487));

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  result.loss_trace.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, n - start);
      Mat batch(xs.rows(), len);
      std::vector<int> batch_idx(len), batch_ys(len);
      for (int i = 0; i < len; ++i) {
        batch_idx[i] = order[start + i];
        batch.col(i) = xs.col(batch_idx[i]);
        batch_ys[i] = ys[batch_idx[i]];
      }
      if (transform) transform(epoch, batch_idx, batch, batch_ys);

      Gradients g = c.param_gradient(batch, batch_ys);
      if (!std::isfinite(g.mean_loss)) {
        throw DivergenceError("train_epochs: non-finite loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += g.mean_loss * len;

      auto& layers = c.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        if (cfg.weight_decay != 0.0) {
          g.d_weight[l] += cfg.weight_decay * layers[l].weight;
          g.d_bias[l] += cfg.weight_decay * layers[l].bias;
        }
        layers[l].weight -= cfg.learning_rate * g.d_weight[l];
        layers[l].bias -= cfg.learning_rate * g.d_bias[l];
      }
    }
    result.loss_trace.push_back(epoch_loss / n);
  }
  return result;
}

std::string Classifier::to_json() const {
  json j;
  j["dims"] = json::array();
  j["dims"].push_back(in_dim_);
  for (const auto& layer : layers_) j["dims"].push_back(layer.weight.rows());
  j["activations"] = json::array();
  for (const auto& layer : layers_) j["activations"].push_back(act_name(layer.act));
  j["weights"] = json::array();
  j["biases"] = json::array();
  for (const auto& layer : layers_) {
    json w = json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index col = 0; col < layer.weight.cols(); ++col) row.push_back(layer.weight(r, col));
      w.push_back(std::move(row));
    }
    j["weights"].push_back(std::move(w));
    json b = json::array();
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) b.push_back(layer.bias(r));
    j["biases"].push_back(std::move(b));
  }
  return j.dump();
}

Classifier Classifier::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: invalid json: ") + e.what());
  }
  try {
    const auto dims = j.at("dims").get<std::vector<int>>();
    const auto acts = j.at("activations").get<std::vector<std::string>>();
    if (dims.size() < 2 || acts.size() != dims.size() - 1) {
      throw IoError("checkpoint: dims/activations mismatch");
    }
    std::vector<Layer> layers(dims.size() - 1);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].act = act_from_name(acts[l]);
      const auto& w = j.at("weights").at(l);
      const auto& b = j.at("biases").at(l);
      layers[l].weight = Mat(dims[l + 1], dims[l]);
      layers[l].bias = Vec(dims[l + 1]);
      if (static_cast<int>(w.size()) != dims[l + 1] || static_cast<int>(b.size()) != dims[l + 1]) {
        throw IoError("checkpoint: weight shape mismatch");
      }
      for (int r = 0; r < dims[l + 1]; ++r) {
        const auto& row = w.at(r);
        if (static_cast<int>(row.size()) != dims[l]) throw IoError("checkpoint: weight row mismatch");
        for (int c2 = 0; c2 < dims[l]; ++c2) layers[l].weight(r, c2) = row.at(c2).get<double>();
        layers[l].bias(r) = b.at(r).get<double>();
      }
    }
    return Classifier(std::move(layers));
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: malformed: ") + e.what());
  }
}

void Classifier::save(const std::string& path) const { csv::write_file_atomic(path, to_json()); }

Classifier Classifier::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

double spectral_norm_estimate(const Mat& m, int iters) {
  if (m.size() == 0) return 0.0;
  Rng rng(0xd1ce);
  Vec v(m.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
  double norm = v.norm();
  if (norm == 0.0) return 0.0;
  v /= norm;
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec w = m * v;
    sigma = w.norm();
    if (sigma == 0.0) return 0.0;
    v = m.transpose() * w;
    const double vn = v.norm();
    if (vn == 0.0) return sigma;
    v /= vn;
  }
  return sigma;
}

}  // namespace manirisk::nn
