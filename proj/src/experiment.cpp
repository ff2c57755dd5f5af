#include "manirisk/experiment.hpp"

#include "manirisk/csv.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace manirisk::experiment {

using json = nlohmann::json;
using manifolds::LabelRule;
using manifolds::ManifoldKind;

namespace {

constexpr const char* kTags[] = {"f", "f_adv", "f_nor"};

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", eps);
  return buf;
}

std::uint64_t stream_id(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

attacks::AttackBudget budget_from_json(const json& j, attacks::AttackBudget base) {
  if (j.contains("norm")) base.norm = attacks::norm_from_name(j.at("norm").get<std::string>());
  if (j.contains("pgd_steps")) base.pgd_steps = j.at("pgd_steps").get<int>();
  if (j.contains("pgd_step_size")) base.pgd_step_size = j.at("pgd_step_size").get<double>();
  if (j.contains("k_nor")) base.k_nor = j.at("k_nor").get<int>();
  if (j.contains("k_in")) base.k_in = j.at("k_in").get<int>();
  return base;
}

json budget_to_json(const attacks::AttackBudget& b) {
  json j;
  j["norm"] = attacks::norm_name(b.norm);
  j["pgd_steps"] = b.pgd_steps;
  j["pgd_step_size"] = b.pgd_step_size;
  j["k_nor"] = b.k_nor;
  j["k_in"] = b.k_in;
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_train < 1 || n_test < 1) throw ConfigError("config: n_train and n_test must be >= 1");
  const double delta = manifolds::info(kind).tubular_radius;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw ConfigError("config: eps values must be positive");
    if (eps >= delta) {
      throw ConfigError("config: eps " + std::to_string(eps) + " must stay below the tubular radius of " +
                        manifolds::kind_name(kind));
    }
  }
  for (const char* tag : kTags) {
    if (!recipes.count(tag)) throw ConfigError(std::string("config: missing recipe for ") + tag);
  }
}

ExperimentConfig default_config(LabelRule rule) {
  ExperimentConfig c;
  c.rule = rule;
  c.kind = manifolds::kind_for_rule(rule);
  c.n_train = 1000;
  c.n_test = 1000;
  c.seed = 20240601;
  c.out_dir = "results/" + manifolds::rule_name(rule);

  const bool plane = c.kind == ManifoldKind::plane3d;
  if (plane) {
    c.eps_list = rule == LabelRule::plane_single
                     ? std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}
                     : std::vector<double>{0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  } else {
    c.eps_list = {0.01, 0.02, 0.03, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  }

  c.eval_attack.norm = attacks::NormKind::linf;
  c.eval_attack.pgd_steps = 40;
  c.eval_attack.k_in = plane ? 400 : 100;
  // The fiber grid is the single-core runtime lever on the plane sweep; the
  // circle keeps the full 100-point fiber.
  c.eval_attack.k_nor = plane ? 32 : 100;

  const std::vector<int> hidden = plane ? std::vector<int>{64, 64, 64} : std::vector<int>{64};
  nn::SgdConfig sgd;
  sgd.learning_rate = 0.1;
  sgd.weight_decay = plane ? 0.001 : 0.0;
  sgd.batch_size = 100;

  training::TrainRecipe f;
  f.mode = training::TrainMode::standard;
  f.hidden = hidden;
  f.sgd = sgd;
  f.sgd.epochs = plane ? 800 : 1000;

  training::TrainRecipe f_adv;
  f_adv.mode = training::TrainMode::adversarial;
  f_adv.hidden = hidden;
  f_adv.sgd = sgd;
  f_adv.sgd.epochs = plane ? 250 : 300;
  f_adv.attack = c.eval_attack;
  f_adv.attack.pgd_steps = 10;

  training::TrainRecipe f_nor;
  f_nor.mode = training::TrainMode::normal_at;
  f_nor.hidden = hidden;
  f_nor.sgd = sgd;
  f_nor.sgd.epochs = plane ? 1500 : 1000;
  f_nor.attack = c.eval_attack;

  c.recipes = {{"f", f}, {"f_adv", f_adv}, {"f_nor", f_nor}};
  return c;
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid json: ") + e.what());
  }
  try {
    const auto rule = manifolds::rule_from_name(j.at("dataset").get<std::string>());
    ExperimentConfig c = default_config(rule);
    if (j.contains("n_train")) c.n_train = j.at("n_train").get<int>();
    if (j.contains("n_test")) c.n_test = j.at("n_test").get<int>();
    if (j.contains("eps_list")) c.eps_list = j.at("eps_list").get<std::vector<double>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("eval_attack")) c.eval_attack = budget_from_json(j.at("eval_attack"), c.eval_attack);
    if (j.contains("recipes")) {
      for (const char* tag : kTags) {
        if (!j.at("recipes").contains(tag)) continue;
        const json& r = j.at("recipes").at(tag);
        training::TrainRecipe& recipe = c.recipes.at(tag);
        if (r.contains("mode")) recipe.mode = training::mode_from_name(r.at("mode").get<std::string>());
        if (r.contains("hidden")) recipe.hidden = r.at("hidden").get<std::vector<int>>();
        if (r.contains("epochs")) recipe.sgd.epochs = r.at("epochs").get<int>();
        if (r.contains("learning_rate")) recipe.sgd.learning_rate = r.at("learning_rate").get<double>();
        if (r.contains("weight_decay")) recipe.sgd.weight_decay = r.at("weight_decay").get<double>();
        if (r.contains("batch_size")) recipe.sgd.batch_size = r.at("batch_size").get<int>();
        if (r.contains("attack")) recipe.attack = budget_from_json(r.at("attack"), recipe.attack);
      }
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = manifolds::rule_name(c.rule);
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["eps_list"] = c.eps_list;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  j["eval_attack"] = budget_to_json(c.eval_attack);
  json recipes;
  for (const auto& [tag, r] : c.recipes) {
    json jr;
    jr["mode"] = training::mode_name(r.mode);
    jr["hidden"] = r.hidden;
    jr["epochs"] = r.sgd.epochs;
    jr["learning_rate"] = r.sgd.learning_rate;
    jr["weight_decay"] = r.sgd.weight_decay;
    jr["batch_size"] = r.sgd.batch_size;
    if (r.mode != training::TrainMode::standard) jr["attack"] = budget_to_json(r.attack);
    recipes[tag] = std::move(jr);
  }
  j["recipes"] = std::move(recipes);
  return j.dump(2) + "\n";
}

DatasetPair generate_datasets(const ExperimentConfig& config) {
  DatasetPair pair;
  pair.train = manifolds::sample_dataset(config.kind, config.rule, config.n_train,
                                         derive_seed(config.seed, stream_id("train")));
  pair.test = manifolds::sample_dataset(config.kind, config.rule, config.n_test,
                                        derive_seed(config.seed, stream_id("test")));
  return pair;
}

DatasetPair write_datasets(const ExperimentConfig& config, std::ostream* log) {
  DatasetPair pair = generate_datasets(config);
  csv::write_file_atomic(config.out_dir + "/train.csv", manifolds::dataset_to_csv(config.kind, pair.train));
  csv::write_file_atomic(config.out_dir + "/test.csv", manifolds::dataset_to_csv(config.kind, pair.test));
  if (log) {
    auto count_pos = [](const std::vector<manifolds::LabeledManifoldSample>& v) {
      int pos = 0;
      for (const auto& s : v) pos += s.y > 0 ? 1 : 0;
      return pos;
    };
    *log << "wrote " << config.out_dir << "/train.csv (" << pair.train.size() << " rows, "
         << count_pos(pair.train) << " positive)\n";
    *log << "wrote " << config.out_dir << "/test.csv (" << pair.test.size() << " rows, "
         << count_pos(pair.test) << " positive)\n";
  }
  return pair;
}

std::string model_stem(const std::string& tag, double eps) {
  if (tag == "f") return "f";
  return tag + "_eps" + eps_tag(eps);
}

training::TrainedModel train_classifier(const ExperimentConfig& config, const DatasetPair& data,
                                        const std::string& tag, double eps) {
  training::TrainRecipe recipe = config.recipes.at(tag);
  recipe.sgd.seed = derive_seed(config.seed, stream_id("init:" + tag));
  recipe.attack.eps = recipe.mode == training::TrainMode::standard ? 0.0 : eps;
  recipe.attack.seed = derive_seed(config.seed, stream_id("attack:" + model_stem(tag, eps)));
  return training::train(config.kind, data.train, recipe);
}

namespace {

std::string loss_csv(const std::vector<double>& trace) {
  std::ostringstream out;
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << ',' << csv::format_double(trace[i]) << '\n';
  }
  return out.str();
}

void write_model_files(const ExperimentConfig& config, const std::string& stem,
                       const training::TrainedModel& model) {
  model.classifier.save(config.out_dir + "/models/" + stem + ".json");
  csv::write_file_atomic(config.out_dir + "/losses/" + stem + ".csv", loss_csv(model.loss_trace));
}

struct SweepModels {
  // f is shared across eps; f_adv / f_nor are per-eps.
  training::TrainedModel f;
  std::map<std::string, training::TrainedModel> per_eps;  // key: model_stem
};

SweepModels train_models(const ExperimentConfig& config, const DatasetPair& data, std::ostream* log,
                         bool write_files) {
  SweepModels models;
  models.f = train_classifier(config, data, "f", 0.0);
  if (log) *log << "trained f (final loss " << models.f.loss_trace.back() << ")\n";
  if (write_files) write_model_files(config, "f", models.f);
  for (const std::string tag : {"f_adv", "f_nor"}) {
    for (double eps : config.eps_list) {
      const std::string stem = model_stem(tag, eps);
      auto model = train_classifier(config, data, tag, eps);
      if (log) *log << "trained " << stem << " (final loss " << model.loss_trace.back() << ")\n";
      if (write_files) write_model_files(config, stem, model);
      models.per_eps.emplace(stem, std::move(model));
    }
  }
  return models;
}

SweepResult sweep_rows(const ExperimentConfig& config, const DatasetPair& data,
                       const std::function<const nn::Classifier&(const std::string&, double)>& model_of,
                       std::ostream* log, bool write_files) {
  risk::EstimatorOptions options;
  options.adv_method = risk::AdvMethod::pgd_combined;
  options.with_nnr = true;
  options.threads = config.threads > 0 ? config.threads : default_threads();

  SweepResult result;
  std::ostringstream table;
  table << risk::report_csv_header() << '\n';
  int row_index = 0;
  for (const char* tag : kTags) {
    for (double eps : config.eps_list) {
      attacks::AttackBudget budget = config.eval_attack;
      budget.seed = derive_seed(config.seed, stream_id("row:" + std::string(tag) + eps_tag(eps)));
      const auto& classifier = model_of(tag, eps);
      auto report = risk::evaluate_report(classifier, config.kind, data.test, eps, budget, options,
                                          manifolds::rule_name(config.rule), tag);
      const auto verdict = risk::decomposition_check(report, options.nor_zero_threshold);
      table << risk::report_csv_row(report, verdict) << '\n';
      if (log) {
        *log << "row " << row_index << ": " << tag << " eps=" << eps_tag(eps)
             << " r_adv=" << report.r_adv << " rhs_i=" << report.rhs_i
             << (verdict.holds_i ? "" : "  ** bound violated **") << '\n';
        if (report.std_nor_overlap > 0) {
          *log << "# warning: " << tag << " eps=" << eps_tag(eps) << ": R_std and R_nor overlap on "
               << report.std_nor_overlap
               << " samples; the empirical RHS can understate the bound at small eps\n";
        }
      }
      result.all_hold_i = result.all_hold_i && verdict.holds_i;
      result.rows.push_back({std::move(report), verdict});
      ++row_index;
    }
  }
  if (write_files) {
    csv::write_file_atomic(config.out_dir + "/risks.csv", table.str());
    if (log) *log << "wrote " << config.out_dir << "/risks.csv\n";
  }
  return result;
}

}  // namespace

void run_train_all(const ExperimentConfig& config, const DatasetPair& data, std::ostream* log) {
  train_models(config, data, log, /*write_files=*/true);
}

SweepResult run_sweep(const ExperimentConfig& config, std::ostream* log, bool write_files) {
  config.validate();
  DatasetPair data = write_files ? write_datasets(config, log) : generate_datasets(config);
  SweepModels models = train_models(config, data, log, write_files);
  auto model_of = [&](const std::string& tag, double eps) -> const nn::Classifier& {
    if (tag == "f") return models.f.classifier;
    return models.per_eps.at(model_stem(tag, eps)).classifier;
  };
  return sweep_rows(config, data, model_of, log, write_files);
}

SweepResult run_risks_from_checkpoints(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  DatasetPair data;
  data.test = manifolds::dataset_from_csv(config.kind, config.out_dir + "/test.csv");
  std::map<std::string, nn::Classifier> loaded;
  auto model_of = [&](const std::string& tag, double eps) -> const nn::Classifier& {
    const std::string stem = model_stem(tag, eps);
    auto it = loaded.find(stem);
    if (it == loaded.end()) {
      it = loaded.emplace(stem, nn::Classifier::load(config.out_dir + "/models/" + stem + ".json"))
               .first;
    }
    return it->second;
  };
  return sweep_rows(config, data, model_of, log, /*write_files=*/true);
}

std::string boundary_dump_csv(const ScoreModel& model, ManifoldKind kind, int n_probe,
                              double tube_halfwidth, std::uint64_t seed) {
  if (n_probe < 1) throw UsageError("boundary_dump: n_probe must be >= 1");
  if (!(tube_halfwidth > 0.0) || tube_halfwidth >= manifolds::info(kind).tubular_radius) {
    throw BudgetError("boundary_dump: tube halfwidth must lie in (0, tubular radius)");
  }
  const int dim = manifolds::info(kind).ambient_dim;
  const auto base = manifolds::sample_dataset(kind, manifolds::LabelRule::constant_plus_one,
                                              n_probe, derive_seed(seed, stream_id("probe")));
  Rng rng(derive_seed(seed, stream_id("tube")));
  std::ostringstream out;
  for (int i = 0; i < dim; ++i) out << "x" << i << ",";
  out << "pred";
  for (int i = 0; i < dim; ++i) out << ",proj" << i;
  out << "\n";
  for (const auto& s : base) {
    const double t = rng.uniform(-tube_halfwidth, tube_halfwidth);
    const Vec z = s.x + t * s.normal_basis[0];
    const int pred = model.score(z) > 0.0 ? 1 : -1;
    const Vec proj = manifolds::project_to_manifold(kind, z);
    for (int d = 0; d < dim; ++d) out << csv::format_double(z(d)) << ",";
    out << pred;
    for (int d = 0; d < dim; ++d) out << "," << csv::format_double(proj(d));
    out << "\n";
  }
  return out.str();
}

}  // namespace manirisk::experiment
