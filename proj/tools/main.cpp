// manirisk command line: dataset generation, training, risk sweeps, the
// interval tightness table, and decision-boundary dumps.
//
// Exit codes: 0 on success, 2 when a decomposition bound check fails beyond
// tolerance, 1 on usage / configuration / IO errors.

#include "manirisk/csv.hpp"
#include "manirisk/experiment.hpp"
#include "manirisk/tightness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

namespace {

using namespace manirisk;

experiment::ExperimentConfig resolve_config(const std::string& config_path,
                                            const std::string& dataset, std::uint64_t seed_override,
                                            bool has_seed, const std::string& out_override,
                                            int threads) {
  experiment::ExperimentConfig config;
  if (!config_path.empty()) {
    config = experiment::load_config(config_path);
  } else if (!dataset.empty()) {
    config = experiment::default_config(manifolds::rule_from_name(dataset));
  } else {
    throw ConfigError("either --config or --dataset is required");
  }
  if (has_seed) config.seed = seed_override;
  if (!out_override.empty()) config.out_dir = out_override;
  if (threads > 0) config.threads = threads;
  config.validate();
  return config;
}

int cmd_tightness(const std::vector<int>& ns, double eps, int probes, const std::string& out_path) {
  std::ostringstream table;
  table << "n,eps,l1,l2,r_std,r_in,r_nor,nnr,r_adv_analytic,r_adv_bruteforce\n";
  bool ok = true;
  for (int n : ns) {
    const auto tc = tightness::build_construction(n, eps);
    const auto risks = tightness::analytic_risks(tc);
    const double brute = tightness::brute_force_adv_check(tc, probes);
    table << n << ',' << csv::format_double(eps) << ',' << csv::format_double(tc.l1) << ','
          << csv::format_double(tc.l2) << ',' << csv::format_double(risks.r_std) << ','
          << csv::format_double(risks.r_in) << ',' << csv::format_double(risks.r_nor) << ','
          << csv::format_double(risks.nnr) << ',' << csv::format_double(risks.r_adv) << ','
          << csv::format_double(brute) << '\n';

    const double identity = (n + 1) * tc.l1 + n * tc.l2;
    if (std::abs(identity - 1.0) > 1e-15) {
      std::cerr << "tightness: partition identity violated at n=" << n << "\n";
      ok = false;
    }
    if (risks.r_std != 0.0 || risks.r_in != 0.0 || risks.r_nor != 1.0 / n) {
      std::cerr << "tightness: analytic risks off their exact values at n=" << n << "\n";
      ok = false;
    }
    if (std::abs(brute - risks.r_adv) > 1.0 / probes + 0.01) {
      std::cerr << "tightness: brute force disagrees with the analytic measure at n=" << n << "\n";
      ok = false;
    }
  }
  if (out_path.empty()) {
    std::cout << table.str();
  } else {
    csv::write_file_atomic(out_path, table.str());
    std::cout << "wrote " << out_path << "\n";
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manifold-aware adversarial risk experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, dataset, out_override;
  std::uint64_t seed_override = 0;
  int threads = 0;
  bool has_seed = false;
  app.add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--dataset", dataset,
                 "dataset defaults when no config is given "
                 "(circle_single|circle_double|plane_single|plane_double)");
  auto* seed_opt = app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* gen = app.add_subcommand("gen-data", "write train/test dataset CSVs");
  auto* train = app.add_subcommand("train", "train one classifier tag");
  std::string train_tag = "f";
  double train_eps = 0.0;
  train->add_option("--tag", train_tag, "classifier tag (f|f_adv|f_nor)");
  train->add_option("--eps", train_eps, "attack budget for f_adv / f_nor");
  auto* risks = app.add_subcommand("risks", "risk sweep from written checkpoints");
  auto* all = app.add_subcommand("all", "datasets + training + risk sweep");

  auto* tight = app.add_subcommand("tightness", "interval construction table");
  std::vector<int> tight_n{3, 5, 10, 50};
  double tight_eps = 0.25;
  int tight_probes = 1000;
  std::string tight_out;
  tight->add_option("--n", tight_n, "construction sizes");
  tight->add_option("--eps", tight_eps, "budget in (0, 1/2)");
  tight->add_option("--probes", tight_probes, "brute-force probe count");
  tight->add_option("--out-file", tight_out, "write the table here instead of stdout");

  auto* dump = app.add_subcommand("boundary-dump", "classify points in the tubular neighborhood");
  std::string dump_checkpoint, dump_kind = "circle2d", dump_out;
  int dump_n = 3000;
  double dump_tube = 0.5;
  dump->add_option("--checkpoint", dump_checkpoint, "model checkpoint JSON")->required();
  dump->add_option("--kind", dump_kind, "manifold kind");
  dump->add_option("--n-probe", dump_n, "number of probe points");
  dump->add_option("--tube", dump_tube, "tube halfwidth");
  dump->add_option("--out-file", dump_out, "output CSV path");

  try {
    app.parse(argc, argv);
    has_seed = seed_opt->count() > 0;

    if (tight->parsed()) {
      return cmd_tightness(tight_n, tight_eps, tight_probes, tight_out);
    }
    if (dump->parsed()) {
      const auto model = nn::Classifier::load(dump_checkpoint);
      const auto kind = manifolds::kind_from_name(dump_kind);
      const std::uint64_t seed = has_seed ? seed_override : 7;
      const std::string text = experiment::boundary_dump_csv(model, kind, dump_n, dump_tube, seed);
      if (dump_out.empty()) {
        std::cout << text;
      } else {
        csv::write_file_atomic(dump_out, text);
        std::cout << "wrote " << dump_out << "\n";
      }
      return 0;
    }

    auto config =
        resolve_config(config_path, dataset, seed_override, has_seed, out_override, threads);

    if (gen->parsed()) {
      experiment::write_datasets(config, &std::cout);
      return 0;
    }
    if (train->parsed()) {
      if (!config.recipes.count(train_tag)) throw ConfigError("unknown tag '" + train_tag + "'");
      if (train_eps < 0.0) throw ConfigError("--eps must be >= 0");
      auto data = experiment::write_datasets(config, nullptr);
      const auto model = experiment::train_classifier(config, data, train_tag, train_eps);
      const std::string stem = experiment::model_stem(train_tag, train_eps);
      model.classifier.save(config.out_dir + "/models/" + stem + ".json");
      std::ostringstream loss;
      loss << "epoch,loss\n";
      for (std::size_t i = 0; i < model.loss_trace.size(); ++i) {
        loss << i << ',' << csv::format_double(model.loss_trace[i]) << '\n';
      }
      csv::write_file_atomic(config.out_dir + "/losses/" + stem + ".csv", loss.str());
      std::cout << "trained " << stem << ", final loss " << model.loss_trace.back() << "\n";
      return 0;
    }
    if (risks->parsed()) {
      const auto result = experiment::run_risks_from_checkpoints(config, &std::cout);
      return result.all_hold_i ? 0 : 2;
    }
    if (all->parsed()) {
      const auto result = experiment::run_sweep(config, &std::cout, /*write_files=*/true);
      return result.all_hold_i ? 0 : 2;
    }
    throw UsageError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
