#include "commands.hpp"

#include <charconv>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "scgmm/aggregate.hpp"
#include "scgmm/error.hpp"
#include "scgmm/experiment.hpp"
#include "scgmm/io.hpp"
#include "scgmm/metrics.hpp"
#include "scgmm/parallel.hpp"
#include "scgmm/pmle.hpp"
#include "scgmm/simgen.hpp"

namespace scgmm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::uint64_t seed = 0;
  int threads = 0;
};

std::string format_value(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void report_error(std::ostream& err, const std::string& kind,
                  const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void emit_model(const std::string& path, const Mixture& g, std::ostream& out) {
  if (path == "-") {
    out << io::to_json(g).dump(2) << '\n';
  } else {
    io::write_mixture(path, g);
  }
}

PmleConfig pmle_config(int k, const std::string& init_path, int n_starts,
                       double tol, int max_iter, std::optional<double> penalty,
                       int threads) {
  PmleConfig cfg;
  cfg.K = k;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  cfg.penalty = penalty;
  cfg.threads = threads;
  if (!init_path.empty()) {
    cfg.init = ExplicitInit{io::read_mixture(init_path)};
  } else {
    cfg.init = KmeansppInit{n_starts};
  }
  return cfg;
}

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--seed", common.seed, "Random seed");
  sub->add_option("--threads", common.threads,
                  "Worker threads (default: THREADS env or hardware)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Split-and-conquer learning of finite Gaussian mixtures"};
  app.require_subcommand(1);
  Common common;

  // gen-model
  auto* gen_model = app.add_subcommand("gen-model", "Random mixture with a target MaxOmega");
  simgen::OverlapSpec spec;
  std::string gen_model_out = "-";
  gen_model->add_option("--d", spec.d, "Dimension")->required();
  gen_model->add_option("--K", spec.K, "Number of components")->required();
  gen_model->add_option("--max-omega", spec.max_omega, "Target maximum pairwise overlap")
      ->required();
  gen_model->add_option("--mc-samples", spec.mc_samples, "Monte Carlo draws per pair");
  gen_model->add_option("-o,--output", gen_model_out, "Model JSON path ('-' for stdout)");
  add_common(gen_model, common);

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Sample labelled data from a model");
  std::string gen_data_model;
  std::size_t gen_data_n = 0;
  std::string gen_data_out;
  bool gen_data_no_labels = false;
  gen_data->add_option("--model", gen_data_model, "Model JSON")->required();
  gen_data->add_option("--n", gen_data_n, "Number of observations")->required();
  gen_data->add_option("-o,--output", gen_data_out, "Output .csv or .bin")->required();
  gen_data->add_flag("--no-labels", gen_data_no_labels, "Omit the label column");
  add_common(gen_data, common);

  // split
  auto* split_cmd = app.add_subcommand("split", "Randomly partition data into M shards");
  std::string split_data;
  std::size_t split_m = 1;
  std::string split_prefix;
  split_cmd->add_option("--data", split_data, "Input data file")->required();
  split_cmd->add_option("--M", split_m, "Number of shards")->required();
  split_cmd->add_option("--out-prefix", split_prefix,
                        "Shards are written to <prefix>_<m>.csv")->required();
  add_common(split_cmd, common);

  // fit / fit-local share their estimation options.
  int fit_k = 0;
  std::string fit_init;
  int fit_starts = 10;
  double fit_tol = 1e-6;
  int fit_max_iter = 10000;
  std::optional<double> fit_penalty;
  std::string fit_out = "-";
  auto add_fit_options = [&](CLI::App* sub) {
    sub->add_option("--K", fit_k, "Number of components")->required();
    sub->add_option("--init", fit_init, "Initial model JSON (default: kmeans++)");
    sub->add_option("--n-starts", fit_starts, "kmeans++ restarts");
    sub->add_option("--tol", fit_tol, "Per-observation increment threshold");
    sub->add_option("--max-iter", fit_max_iter, "EM iteration cap");
    sub->add_option("-o,--output", fit_out, "Output JSON ('-' for stdout)");
    add_common(sub, common);
  };

  auto* fit_cmd = app.add_subcommand("fit", "Global penalized MLE");
  std::string fit_data;
  fit_cmd->add_option("--data", fit_data, "Input data file")->required();
  fit_cmd->add_option("--penalty", fit_penalty, "Penalty size (default N^-1/2)");
  add_fit_options(fit_cmd);

  auto* fit_local = app.add_subcommand("fit-local", "Penalized MLE on every shard");
  std::vector<std::string> local_shards;
  fit_local->add_option("--shards", local_shards, "Shard data files")->required();
  add_fit_options(fit_local);

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "Combine local estimates");
  std::string agg_method;
  std::string agg_locals;
  int agg_k = 0;
  std::string agg_init;
  std::size_t agg_klavg_n = 1000;
  int agg_starts = 10;
  double agg_tol = 1e-6;
  int agg_max_iter = 1000;
  std::string agg_out = "-";
  agg->add_option("--method", agg_method, "gmr | median | klavg | pool")
      ->required()
      ->check(CLI::IsMember({"gmr", "median", "klavg", "pool"}));
  agg->add_option("--locals", agg_locals, "locals-v1 JSON from fit-local")->required();
  agg->add_option("--K", agg_k, "Target order (default: order of the locals)");
  agg->add_option("--init", agg_init, "GMR initial model (default: median local)");
  agg->add_option("--klavg-n", agg_klavg_n, "KL-averaging draws per machine");
  agg->add_option("--n-starts", agg_starts, "KL-averaging kmeans++ restarts");
  agg->add_option("--tol", agg_tol, "GMR objective-change threshold");
  agg->add_option("--max-iter", agg_max_iter, "GMR iteration cap");
  agg->add_option("-o,--output", agg_out, "Output JSON ('-' for stdout)");
  add_common(agg, common);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate an estimate");
  std::string eval_metric;
  std::string eval_estimate;
  std::string eval_truth;
  std::string eval_data;
  std::string eval_labels_a;
  std::string eval_labels_b;
  eval->add_option("--metric", eval_metric, "w1 | mcr | ari")
      ->required()
      ->check(CLI::IsMember({"w1", "mcr", "ari"}));
  eval->add_option("--estimate", eval_estimate, "Estimated model JSON (w1, mcr)");
  eval->add_option("--truth", eval_truth, "True model JSON (w1, mcr)");
  eval->add_option("--data", eval_data, "Labelled data file (mcr)");
  eval->add_option("--labels-a", eval_labels_a, "First label file (ari)");
  eval->add_option("--labels-b", eval_labels_b, "Second label file (ari)");
  add_common(eval, common);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a full simulation study");
  std::string exp_config;
  std::string exp_output;
  bool exp_no_timing = false;
  exp->add_option("--config", exp_config, "Experiment config JSON")->required();
  exp->add_option("-o,--output", exp_output, "Report CSV (overrides config)");
  exp->add_flag("--no-timing", exp_no_timing, "Write 0 for the timing columns");
  add_common(exp, common);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitInvalid;
  }

  const int threads = common.threads > 0 ? common.threads : default_thread_count();

  try {
    if (*gen_model) {
      spec.seed = common.seed;
      simgen::GenerateTrace trace;
      const Mixture g = simgen::generate(spec, &trace);
      emit_model(gen_model_out, g, out);
      err << "achieved MaxOmega " << format_value(trace.achieved) << " at scale "
          << format_value(trace.scale) << '\n';
    } else if (*gen_data) {
      const Mixture g = io::read_mixture(gen_data_model);
      LabeledSample data = g.sample(gen_data_n, common.seed);
      if (gen_data_no_labels) data.labels.reset();
      io::write_data(gen_data_out, data);
    } else if (*split_cmd) {
      const LabeledSample data = io::read_data(split_data);
      const auto shards = aggregate::split(data, split_m, common.seed);
      for (std::size_t m = 0; m < shards.machines(); ++m) {
        const std::string path = split_prefix + "_" + std::to_string(m) + ".csv";
        io::write_csv(path, shards.shards[m]);
        out << path << ',' << shards.shards[m].size() << '\n';
      }
    } else if (*fit_cmd) {
      const LabeledSample data = io::read_data(fit_data);
      const PmleConfig cfg = pmle_config(fit_k, fit_init, fit_starts, fit_tol,
                                         fit_max_iter, fit_penalty, threads);
      const PmleResult res = fit(data.points, cfg, common.seed);
      emit_model(fit_out, res.estimate, out);
      err << "iterations " << res.iterations << " converged "
          << (res.converged ? "true" : "false") << " penalized_loglik "
          << format_value(res.penalized_loglik_trace.back()) << '\n';
    } else if (*fit_local) {
      aggregate::ShardedDataset shards;
      std::size_t total = 0;
      for (const auto& path : local_shards) {
        shards.shards.push_back(io::read_data(path));
        total += static_cast<std::size_t>(shards.shards.back().size());
      }
      for (const auto& s : shards.shards) {
        shards.lambdas.push_back(static_cast<double>(s.size()) /
                                 static_cast<double>(total));
      }
      const PmleConfig cfg = pmle_config(fit_k, fit_init, fit_starts, fit_tol,
                                         fit_max_iter, std::nullopt, threads);
      const auto locals = aggregate::fit_locals(shards, cfg, common.seed, threads);
      io::LocalsDocument doc{locals.estimates, locals.lambdas, {}};
      for (const auto& s : shards.shards) {
        doc.sizes.push_back(static_cast<std::size_t>(s.size()));
      }
      if (fit_out == "-") {
        out << io::to_json(doc).dump(2) << '\n';
      } else {
        io::write_locals(fit_out, doc);
      }
    } else if (*agg) {
      const io::LocalsDocument doc = io::read_locals(agg_locals);
      aggregate::LocalEstimates locals{doc.estimates, doc.lambdas, {}};
      const int k = agg_k > 0 ? agg_k : static_cast<int>(doc.estimates.front().order());
      std::optional<Mixture> result;
      if (agg_method == "gmr") {
        gmr::GmrConfig cfg;
        cfg.K = k;
        cfg.tol = agg_tol;
        cfg.max_iter = agg_max_iter;
        if (!agg_init.empty()) cfg.init = io::read_mixture(agg_init);
        auto res = aggregate::aggregate_gmr_result(locals, cfg);
        for (const auto& line : res.log) err << line << '\n';
        result = std::move(res.estimate);
      } else if (agg_method == "median") {
        result = aggregate::aggregate_median(locals);
      } else if (agg_method == "klavg") {
        aggregate::KlAverageConfig cfg;
        cfg.K = k;
        cfg.per_machine_n = agg_klavg_n;
        cfg.n_starts = agg_starts;
        cfg.threads = threads;
        result = aggregate::aggregate_klavg(locals, cfg, common.seed);
      } else {
        result = gmr::pool(locals.estimates, locals.lambdas);
      }
      emit_model(agg_out, *result, out);
    } else if (*eval) {
      double value = 0.0;
      if (eval_metric == "ari") {
        if (eval_labels_a.empty() || eval_labels_b.empty()) {
          throw InvalidArgument("eval ari needs --labels-a and --labels-b");
        }
        value = metrics::ari(
            metrics::Clustering::from_labels(io::read_labels(eval_labels_a)),
            metrics::Clustering::from_labels(io::read_labels(eval_labels_b)));
      } else {
        if (eval_estimate.empty() || eval_truth.empty()) {
          throw InvalidArgument("eval " + eval_metric +
                                " needs --estimate and --truth");
        }
        const Mixture estimate = io::read_mixture(eval_estimate);
        const Mixture truth = io::read_mixture(eval_truth);
        if (eval_metric == "w1") {
          value = metrics::w1_distance(estimate, truth);
        } else {
          if (eval_data.empty()) throw InvalidArgument("eval mcr needs --data");
          const LabeledSample data = io::read_data(eval_data);
          value = metrics::misclassification_rate(
              estimate, data, metrics::align_labels(estimate, truth));
        }
      }
      out << format_value(value) << '\n';
    } else if (*exp) {
      const json doc = io::read_json_file(exp_config);
      experiment::ExperimentConfig cfg = experiment::config_from_json(
          doc, fs::path(exp_config).parent_path().string());
      if (!exp_output.empty()) cfg.output = exp_output;
      if (exp_no_timing) cfg.record_timing = false;
      if (!doc.contains("threads")) cfg.threads = threads;
      if (common.threads > 0) cfg.threads = common.threads;
      const auto report = experiment::run(cfg);
      for (const auto& line : report.log) err << line << '\n';
      const std::string csv = experiment::to_csv(report);
      if (cfg.output.empty() || cfg.output == "-") {
        out << csv;
      } else {
        io::write_text_file(cfg.output, csv);
      }
    }
  } catch (const SchemaError& e) {
    report_error(err, "schema", e.what());
    return kExitInvalid;
  } catch (const InvalidArgument& e) {
    report_error(err, "invalid", e.what());
    return kExitInvalid;
  } catch (const NumericalError& e) {
    report_error(err, "numerical", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return 1;
  }
  return kExitOk;
}

}  // namespace scgmm::cli
