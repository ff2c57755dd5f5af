#include "manirisk/experiment.hpp"

#include "manirisk/csv.hpp"
#include "manirisk/nn.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace manirisk;
using manifolds::LabelRule;
using manifolds::ManifoldKind;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// s = x0 / |x|: prediction depends only on the projection foot point.
struct RadialScore : ScoreModel {
  int input_dim() const override { return 2; }
  double score(const Vec& x) const override { return x(0) / x.norm(); }
};

}  // namespace

TEST_SUITE("io") {

TEST_CASE("checkpoint files restore identical scores") {
  const auto dir = temp_dir("manirisk_ckpt");
  const auto c = nn::Classifier::init({3, 16, 16, 1}, 321);
  const auto path = (dir / "model.json").string();
  c.save(path);
  const auto restored = nn::Classifier::load(path);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Vec x(3);
    for (int d = 0; d < 3; ++d) x(d) = rng.uniform(-2.0, 2.0);
    CHECK(restored.forward(x) == c.forward(x));
  }
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("default configs parse back from their own json") {
  for (auto rule : {LabelRule::circle_single, LabelRule::circle_double, LabelRule::plane_single,
                    LabelRule::plane_double}) {
    const auto config = experiment::default_config(rule);
    const std::string text = experiment::config_to_json(config);
    const auto parsed = experiment::config_from_json(text);
    CHECK(experiment::config_to_json(parsed) == text);
    CHECK(parsed.kind == config.kind);
    CHECK(parsed.eps_list == config.eps_list);
    CHECK(parsed.recipes.at("f_nor").sgd.epochs == config.recipes.at("f_nor").sgd.epochs);
  }
}

TEST_CASE("config validation rejects over-budget eps and junk") {
  auto config = experiment::default_config(LabelRule::circle_single);
  config.eps_list.push_back(1.5);  // beyond the circle's tubular radius
  CHECK_THROWS_AS(config.validate(), ConfigError);
  CHECK_THROWS_AS(experiment::config_from_json("{"), ConfigError);
  CHECK_THROWS_AS(experiment::config_from_json("{\"dataset\":\"nope\"}"), ConfigError);
}

TEST_CASE("gen-data writes byte-identical files per seed") {
  auto config = experiment::default_config(LabelRule::circle_single);
  config.n_train = 64;
  config.n_test = 32;
  const auto dir = temp_dir("manirisk_gen");
  config.out_dir = dir.string();
  experiment::write_datasets(config, nullptr);
  const auto read_all = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const std::string first = read_all(dir / "train.csv");
  experiment::write_datasets(config, nullptr);
  CHECK(read_all(dir / "train.csv") == first);

  // labels re-derive from the rule
  const auto loaded = manifolds::dataset_from_csv(config.kind, (dir / "train.csv").string());
  for (const auto& s : loaded) {
    CHECK(s.y == manifolds::label_of(config.rule, s.x));
  }
  CHECK(static_cast<int>(loaded.size()) == config.n_train);
  std::filesystem::remove_all(dir);
}

TEST_CASE("boundary dump classifies by the projection for radial scores") {
  const RadialScore model;
  const std::string text =
      experiment::boundary_dump_csv(model, ManifoldKind::circle2d, 100, 0.5, 11);
  const auto dir = temp_dir("manirisk_dump");
  const auto path = (dir / "dump.csv").string();
  csv::write_file_atomic(path, text);
  const auto table = csv::read_csv(path);
  REQUIRE(table.rows.size() == 100);
  const int xi = table.column("x0");
  const int pi = table.column("pred");
  const int pj = table.column("proj0");
  for (const auto& row : table.rows) {
    Vec z(2);
    z << std::stod(row[xi]), std::stod(row[xi + 1]);
    Vec proj(2);
    proj << std::stod(row[pj]), std::stod(row[pj + 1]);
    const int pred = std::stoi(row[pi]);
    CHECK(std::abs(proj.norm() - 1.0) <= 1e-12);
    // radial scores are constant along fibers, so the prediction matches the foot point
    CHECK(pred == (model.score(proj) > 0.0 ? 1 : -1));
    CHECK(pred == (model.score(z) > 0.0 ? 1 : -1));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("boundary dump score-zero convention") {
  nn::Layer out;
  out.weight = Mat::Zero(1, 2);
  out.bias = Vec::Zero(1);
  const nn::Classifier zero({out});
  const std::string text = experiment::boundary_dump_csv(zero, ManifoldKind::circle2d, 10, 0.3, 2);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    const auto fields = csv::split_line(line);
    CHECK(fields[2] == "-1");  // score 0 counts as a flip of +1
    ++rows;
  }
  CHECK(rows == 10);
}

TEST_CASE("a small end-to-end sweep is deterministic and re-parseable") {
  auto config = experiment::default_config(LabelRule::circle_single);
  config.n_train = 120;
  config.n_test = 80;
  config.eps_list = {0.1};
  config.threads = 1;
  for (auto& [tag, recipe] : config.recipes) recipe.sgd.epochs = 30;
  const auto dir = temp_dir("manirisk_sweep");
  config.out_dir = dir.string();

  const auto first = experiment::run_sweep(config, nullptr, /*write_files=*/true);
  REQUIRE(first.rows.size() == 3);
  const auto read_all = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const std::string risks_first = read_all("risks.csv");

  const auto second = experiment::run_sweep(config, nullptr, /*write_files=*/true);
  CHECK(read_all("risks.csv") == risks_first);

  const auto table = csv::read_csv((dir / "risks.csv").string());
  CHECK(table.rows.size() == 3);
  for (const auto& row : table.rows) {
    const double r_adv = std::stod(row[table.column("r_adv")]);
    const double r_std = std::stod(row[table.column("r_std")]);
    CHECK(r_adv >= r_std);
  }

  // checkpoints reload and reproduce the same risk row
  const auto model = nn::Classifier::load((dir / "models/f.json").string());
  const auto test = manifolds::dataset_from_csv(config.kind, (dir / "test.csv").string());
  attacks::AttackBudget budget = config.eval_attack;
  budget.eps = 0.1;
  budget.seed = first.rows[0].report.seed;
  risk::EstimatorOptions options;
  options.threads = 1;
  const auto report = risk::evaluate_report(model, config.kind, test, 0.1, budget, options,
                                            "circle_single", "f");
  CHECK(report.r_adv == first.rows[0].report.r_adv);
  CHECK(report.mu_znor == first.rows[0].report.mu_znor);
  std::filesystem::remove_all(dir);
}

TEST_CASE("risks command consumes the files the train commands wrote") {
  auto config = experiment::default_config(LabelRule::circle_single);
  config.n_train = 100;
  config.n_test = 60;
  config.eps_list = {0.1};
  config.threads = 1;
  for (auto& [tag, recipe] : config.recipes) recipe.sgd.epochs = 20;
  const auto dir = temp_dir("manirisk_cmds");
  config.out_dir = dir.string();

  const auto data = experiment::write_datasets(config, nullptr);
  experiment::run_train_all(config, data, nullptr);
  const auto result = experiment::run_risks_from_checkpoints(config, nullptr);
  CHECK(result.rows.size() == 3);
  CHECK(std::filesystem::exists(dir / "risks.csv"));
  CHECK(std::filesystem::exists(dir / "models/f.json"));
  CHECK(std::filesystem::exists(dir / "losses/f_nor_eps0.1.csv"));
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
