#include "manirisk/training.hpp"

namespace manirisk::training {

using manifolds::LabeledManifoldSample;
using manifolds::ManifoldKind;

namespace {

struct Prepared {
  Mat xs;
  std::vector<int> ys;
  std::vector<int> dims;
};

Prepared prepare(const std::vector<LabeledManifoldSample>& data) {
  if (data.empty()) throw UsageError("training: empty dataset");
  Prepared p;
  const int d = static_cast<int>(data[0].x.size());
  p.xs = Mat(d, data.size());
  p.ys.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    p.xs.col(static_cast<Eigen::Index>(i)) = data[i].x;
    p.ys[i] = data[i].y;
  }
  p.dims.push_back(d);
  return p;
}

}  // namespace

std::string mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::standard: return "standard";
    case TrainMode::adversarial: return "adversarial";
    case TrainMode::normal_at: return "normal_at";
  }
  throw UsageError("unknown train mode");
}

TrainMode mode_from_name(const std::string& name) {
  if (name == "standard") return TrainMode::standard;
  if (name == "adversarial") return TrainMode::adversarial;
  if (name == "normal_at") return TrainMode::normal_at;
  throw ConfigError("unknown train mode '" + name + "'");
}

TrainedModel train_standard(ManifoldKind, const std::vector<LabeledManifoldSample>& data,
                            const TrainRecipe& recipe) {
  Prepared p = prepare(data);
  std::vector<int> dims = p.dims;
  for (int h : recipe.hidden) dims.push_back(h);
  dims.push_back(1);
  TrainedModel out{nn::Classifier::init(dims, recipe.sgd.seed), {}};
  out.loss_trace = nn::train_epochs(out.classifier, p.xs, p.ys, recipe.sgd).loss_trace;
  return out;
}

TrainedModel train_adversarial(ManifoldKind kind, const std::vector<LabeledManifoldSample>& data,
                               const TrainRecipe& recipe) {
  Prepared p = prepare(data);
  recipe.attack.validate(kind);
  std::vector<int> dims = p.dims;
  for (int h : recipe.hidden) dims.push_back(h);
  dims.push_back(1);
  TrainedModel out{nn::Classifier::init(dims, recipe.sgd.seed), {}};
  nn::Classifier& c = out.classifier;

  nn::BatchTransform perturb = [&](int epoch, const std::vector<int>&, Mat& xs,
                                   const std::vector<int>& ys) {
    attacks::AttackBudget budget = recipe.attack;
    budget.seed = derive_seed(recipe.attack.seed, static_cast<std::uint64_t>(epoch));
    const auto outcomes = attacks::pgd_attack_batch(c, xs, ys, budget);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      xs.col(static_cast<Eigen::Index>(i)) = outcomes[i].point;
    }
  };
  out.loss_trace = nn::train_epochs(c, p.xs, p.ys, recipe.sgd, perturb).loss_trace;
  return out;
}

TrainedModel train_normal_at(ManifoldKind kind, const std::vector<LabeledManifoldSample>& data,
                             const TrainRecipe& recipe) {
  Prepared p = prepare(data);
  recipe.attack.validate(kind);
  std::vector<int> dims = p.dims;
  for (int h : recipe.hidden) dims.push_back(h);
  dims.push_back(1);
  TrainedModel out{nn::Classifier::init(dims, recipe.sgd.seed), {}};

  const double eps = recipe.attack.eps;
  nn::BatchTransform perturb = [&, eps](int epoch, const std::vector<int>& index, Mat& xs,
                                        const std::vector<int>&) {
    const std::uint64_t epoch_seed = derive_seed(recipe.attack.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = 0; i < index.size(); ++i) {
      Rng rng(derive_seed(epoch_seed, static_cast<std::uint64_t>(index[i])));
      const double t = rng.uniform(-eps, eps);
      xs.col(static_cast<Eigen::Index>(i)) = data[index[i]].x + t * data[index[i]].normal_basis[0];
    }
  };
  out.loss_trace = nn::train_epochs(out.classifier, p.xs, p.ys, recipe.sgd, perturb).loss_trace;
  return out;
}

TrainedModel train(ManifoldKind kind, const std::vector<LabeledManifoldSample>& data,
                   const TrainRecipe& recipe) {
  switch (recipe.mode) {
    case TrainMode::standard: return train_standard(kind, data, recipe);
    case TrainMode::adversarial: return train_adversarial(kind, data, recipe);
    case TrainMode::normal_at: return train_normal_at(kind, data, recipe);
  }
  throw UsageError("unknown train mode");
}

}  // namespace manirisk::training
