#pragma once

#include "manirisk/attacks.hpp"
#include "manirisk/manifolds.hpp"
#include "manirisk/nn.hpp"

#include <string>
#include <vector>

namespace manirisk::training {

enum class TrainMode { standard, adversarial, normal_at };

std::string mode_name(TrainMode mode);
TrainMode mode_from_name(const std::string& name);

struct TrainRecipe {
  TrainMode mode = TrainMode::standard;
  std::vector<int> hidden = {64};  // relu hidden widths
  nn::SgdConfig sgd;
  attacks::AttackBudget attack;  // ignored for standard training
};

struct TrainedModel {
  nn::Classifier classifier;
  std::vector<double> loss_trace;
};

// Plain SGD on the clean data.
TrainedModel train_standard(manifolds::ManifoldKind kind,
                            const std::vector<manifolds::LabeledManifoldSample>& data,
                            const TrainRecipe& recipe);

// Madry-style: every epoch each training input is replaced by its PGD
// witness (the max-loss iterate when no flip is found) before the step.
TrainedModel train_adversarial(manifolds::ManifoldKind kind,
                               const std::vector<manifolds::LabeledManifoldSample>& data,
                               const TrainRecipe& recipe);

// Normal-direction adversarial training: every epoch each input is moved by
// one uniform draw along its normal fiber within eps, keeping its label.
TrainedModel train_normal_at(manifolds::ManifoldKind kind,
                             const std::vector<manifolds::LabeledManifoldSample>& data,
                             const TrainRecipe& recipe);

TrainedModel train(manifolds::ManifoldKind kind,
                   const std::vector<manifolds::LabeledManifoldSample>& data,
                   const TrainRecipe& recipe);

}  // namespace manirisk::training
