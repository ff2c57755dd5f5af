#pragma once

#include "manirisk/attacks.hpp"
#include "manirisk/manifolds.hpp"
#include "manirisk/risk.hpp"
#include "manirisk/training.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace manirisk::experiment {

// One experiment: a dataset, an eps sweep, and the three classifiers
// f / f_adv / f_nor. A single seed determines every output byte.
struct ExperimentConfig {
  manifolds::LabelRule rule = manifolds::LabelRule::circle_single;
  manifolds::ManifoldKind kind = manifolds::ManifoldKind::circle2d;
  int n_train = 1000;
  int n_test = 1000;
  std::vector<double> eps_list;
  attacks::AttackBudget eval_attack;  // eps and seed filled per row
  std::map<std::string, training::TrainRecipe> recipes;  // keys f, f_adv, f_nor
  std::string out_dir = "results";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

// Built-in defaults per dataset family: budget grids, architectures,
// optimizer settings, attack resolutions.
ExperimentConfig default_config(manifolds::LabelRule rule);

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

struct DatasetPair {
  std::vector<manifolds::LabeledManifoldSample> train;
  std::vector<manifolds::LabeledManifoldSample> test;
};

DatasetPair generate_datasets(const ExperimentConfig& config);

// Writes train.csv / test.csv under out_dir; returns the pair.
DatasetPair write_datasets(const ExperimentConfig& config, std::ostream* log);

// Classifier identifier for files: "f", or "f_adv"/"f_nor" with an eps tag.
std::string model_stem(const std::string& tag, double eps);

// Trains one classifier tag. f ignores eps; f_adv / f_nor bake it into the
// attack budget. Deterministic given the config seed.
training::TrainedModel train_classifier(const ExperimentConfig& config, const DatasetPair& data,
                                        const std::string& tag, double eps);

// Trains every (tag, eps) variant and writes checkpoints + loss CSVs.
void run_train_all(const ExperimentConfig& config, const DatasetPair& data, std::ostream* log);

struct SweepRow {
  risk::RiskReport report;
  risk::Verdict verdict;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool all_hold_i = true;
};

// Full Table-1/2 style sweep: for each classifier and eps, estimate every
// term and check the decomposition. Trains in memory; writes risks.csv and
// model checkpoints under out_dir when write_files is set.
SweepResult run_sweep(const ExperimentConfig& config, std::ostream* log, bool write_files);

// Risk rows from previously written checkpoints (cmd `risks`).
SweepResult run_risks_from_checkpoints(const ExperimentConfig& config, std::ostream* log);

// n_probe points in the tubular neighborhood, classified and projected back.
// Columns: x0..x{D-1},pred,proj0..proj{D-1}; pred is -1 when the score is <= 0.
std::string boundary_dump_csv(const ScoreModel& model, manifolds::ManifoldKind kind, int n_probe,
                              double tube_halfwidth, std::uint64_t seed);

}  // namespace manirisk::experiment
