#include "scgmm/experiment.hpp"

#include <charconv>
#include <cstdint>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "scgmm/aggregate.hpp"
#include "scgmm/error.hpp"
#include "scgmm/io.hpp"
#include "scgmm/metrics.hpp"
#include "scgmm/parallel.hpp"
#include "scgmm/pmle.hpp"
#include "scgmm/rng.hpp"

namespace scgmm::experiment {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
T get_as(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("config: field \"") + key +
                      "\" has the wrong type");
  }
}

std::size_t get_count(const json& doc, const char* key) {
  const json& node = doc.at(key);
  const bool ok = node.is_number_unsigned() ||
                  (node.is_number_integer() && node.get<std::int64_t>() >= 0);
  if (!ok) {
    throw SchemaError(std::string("config: \"") + key +
                      "\" must be a nonnegative integer");
  }
  return node.get<std::size_t>();
}

void append_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

struct Evaluated {
  double w1;
  double mcr;
  double ari;
};

Evaluated evaluate(const Mixture& estimate, const Mixture& truth,
                   const LabeledSample& sample) {
  Evaluated e{};
  e.w1 = metrics::w1_distance(estimate, truth);
  if (estimate.order() == truth.order()) {
    e.mcr = metrics::misclassification_rate(
        estimate, sample, metrics::align_labels(estimate, truth));
  } else {
    e.mcr = std::numeric_limits<double>::quiet_NaN();
  }
  e.ari = metrics::ari(
      metrics::Clustering::from_labels(estimate.classify_rows(sample.points)),
      metrics::Clustering::from_labels(*sample.labels));
  return e;
}

std::vector<ReportRow> run_replication(const ExperimentConfig& cfg, int rep,
                                       int threads, std::vector<std::string>& log) {
  const std::uint64_t rep_seed = derive_seed(cfg.seed, "replication",
                                             static_cast<std::uint64_t>(rep));
  Mixture truth = [&] {
    if (!cfg.truths.empty()) {
      return cfg.truths[static_cast<std::size_t>(rep) % cfg.truths.size()];
    }
    if (cfg.model) return *cfg.model;
    simgen::OverlapSpec spec;
    spec.d = cfg.d;
    spec.K = cfg.K;
    spec.max_omega = cfg.generate->max_omega;
    spec.mc_samples = cfg.generate->mc_samples;
    spec.seed = derive_seed(rep_seed, "model");
    return simgen::generate(spec);
  }();
  if (static_cast<int>(truth.order()) != cfg.K || truth.dim() != cfg.d) {
    throw InvalidArgument("experiment: truth does not match K/d");
  }

  const LabeledSample sample = truth.sample(cfg.N, derive_seed(rep_seed, "data"));

  PmleConfig fit_cfg;
  fit_cfg.K = cfg.K;
  fit_cfg.tol = cfg.tol;
  fit_cfg.max_iter = cfg.max_iter;
  fit_cfg.threads = threads;
  if (cfg.fit_init == FitInit::kTruth) {
    fit_cfg.init = ExplicitInit{truth};
  } else {
    fit_cfg.init = KmeansppInit{cfg.n_starts};
  }

  bool needs_locals = false;
  for (Method m : cfg.methods) needs_locals |= (m != Method::kGlobal);

  std::optional<aggregate::LocalEstimates> locals;
  double local_seconds = 0.0;
  if (needs_locals) {
    const auto shards = aggregate::split(sample, cfg.M, derive_seed(rep_seed, "split"));
    locals = aggregate::fit_locals(shards, fit_cfg, derive_seed(rep_seed, "locals"),
                                   threads);
    for (const auto& diag : locals->diagnostics) {
      local_seconds = std::max(local_seconds, diag.seconds);
    }
  }

  std::vector<ReportRow> rows;
  for (Method method : cfg.methods) {
    ReportRow row;
    row.replication = rep;
    row.method = method;
    std::optional<Mixture> estimate;
    const auto start = Clock::now();
    switch (method) {
      case Method::kGlobal: {
        PmleConfig global_cfg = fit_cfg;
        global_cfg.penalty.reset();
        estimate = fit(sample.points, global_cfg, derive_seed(rep_seed, "global"))
                       .estimate;
        row.local_seconds = seconds_since(start);
        break;
      }
      case Method::kGmr: {
        gmr::GmrConfig gcfg;
        gcfg.K = cfg.K;
        gcfg.tol = cfg.gmr_tol;
        gcfg.max_iter = cfg.gmr_max_iter;
        if (cfg.gmr_init == GmrInit::kTruth) gcfg.init = truth;
        auto result = aggregate::aggregate_gmr_result(*locals, gcfg);
        for (const auto& line : result.log) {
          log.push_back("replication " + std::to_string(rep) + " gmr: " + line);
        }
        estimate = std::move(result.estimate);
        break;
      }
      case Method::kMedian:
        estimate = aggregate::aggregate_median(*locals);
        break;
      case Method::kKlavg: {
        aggregate::KlAverageConfig kcfg;
        kcfg.K = cfg.K;
        kcfg.per_machine_n = cfg.klavg_n;
        kcfg.n_starts = cfg.n_starts;
        kcfg.tol = cfg.tol;
        kcfg.max_iter = cfg.max_iter;
        kcfg.threads = threads;
        estimate = aggregate::aggregate_klavg(*locals, kcfg,
                                              derive_seed(rep_seed, "klavg"));
        break;
      }
      case Method::kPool:
        estimate = gmr::pool(locals->estimates, locals->lambdas);
        break;
    }
    if (method != Method::kGlobal) {
      row.local_seconds = local_seconds;
      row.agg_seconds = seconds_since(start);
    }
    if (!cfg.record_timing) {
      row.local_seconds = 0.0;
      row.agg_seconds = 0.0;
    }
    const Evaluated e = evaluate(*estimate, truth, sample);
    row.w1 = e.w1;
    row.mcr = e.mcr;
    row.ari = e.ari;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kGlobal: return "global";
    case Method::kGmr: return "gmr";
    case Method::kMedian: return "median";
    case Method::kKlavg: return "klavg";
    case Method::kPool: return "pool";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "global") return Method::kGlobal;
  if (name == "gmr") return Method::kGmr;
  if (name == "median") return Method::kMedian;
  if (name == "klavg") return Method::kKlavg;
  if (name == "pool") return Method::kPool;
  throw SchemaError("unknown method \"" + name +
                    "\" (expected global, gmr, median, klavg or pool)");
}

ExperimentConfig config_from_json(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw SchemaError("config must be a JSON object");
  static const std::set<std::string> known = {
      "version", "model", "model_path", "generate", "N", "M", "K", "d",
      "seed", "methods", "replications", "output", "init", "n_starts", "tol",
      "max_iter", "gmr_init", "gmr_tol", "gmr_max_iter", "klavg_n",
      "record_timing", "threads"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw SchemaError("config: unknown key \"" + key + "\"");
  }
  if (!doc.contains("version") || doc.at("version") != 1) {
    throw SchemaError("config: \"version\" must be 1");
  }

  ExperimentConfig cfg;
  const int sources = static_cast<int>(doc.contains("model")) +
                      static_cast<int>(doc.contains("model_path")) +
                      static_cast<int>(doc.contains("generate"));
  if (sources != 1) {
    throw SchemaError(
        "config: give exactly one of \"model\", \"model_path\", \"generate\"");
  }
  if (doc.contains("model")) {
    cfg.model = io::mixture_from_json(doc.at("model"));
  } else if (doc.contains("model_path")) {
    std::filesystem::path path = get_as<std::string>(doc, "model_path");
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    cfg.model = io::read_mixture(path);
  } else {
    const json& gen = doc.at("generate");
    if (!gen.is_object()) throw SchemaError("config: \"generate\" must be an object");
    GenerateSettings settings;
    for (const auto& [key, value] : gen.items()) {
      if (key == "max_omega") {
        settings.max_omega = get_as<double>(gen, "max_omega");
      } else if (key == "mc_samples") {
        settings.mc_samples = get_count(gen, "mc_samples");
      } else {
        throw SchemaError("config: unknown key \"generate." + key + "\"");
      }
    }
    if (!(settings.max_omega > 0.0 && settings.max_omega < 1.0)) {
      throw SchemaError("config: generate.max_omega must lie in (0, 1)");
    }
    cfg.generate = settings;
  }

  if (cfg.model) {
    cfg.K = static_cast<int>(cfg.model->order());
    cfg.d = static_cast<int>(cfg.model->dim());
  }
  if (doc.contains("K")) {
    const auto k = static_cast<int>(get_count(doc, "K"));
    if (cfg.model && k != cfg.K) throw SchemaError("config: K does not match model");
    cfg.K = k;
  } else if (!cfg.model) {
    throw SchemaError("config: \"K\" is required with \"generate\"");
  }
  if (doc.contains("d")) {
    const auto d = static_cast<int>(get_count(doc, "d"));
    if (cfg.model && d != cfg.d) throw SchemaError("config: d does not match model");
    cfg.d = d;
  } else if (!cfg.model) {
    throw SchemaError("config: \"d\" is required with \"generate\"");
  }
  if (!doc.contains("N")) throw SchemaError("config: \"N\" is required");
  if (!doc.contains("M")) throw SchemaError("config: \"M\" is required");
  cfg.N = get_count(doc, "N");
  cfg.M = get_count(doc, "M");
  if (doc.contains("seed")) cfg.seed = get_count(doc, "seed");
  if (doc.contains("methods")) {
    const json& methods = doc.at("methods");
    if (!methods.is_array() || methods.empty()) {
      throw SchemaError("config: \"methods\" must be a non-empty array");
    }
    cfg.methods.clear();
    for (const auto& m : methods) {
      if (!m.is_string()) throw SchemaError("config: methods must be strings");
      cfg.methods.push_back(method_from_string(m.get<std::string>()));
    }
  }
  if (doc.contains("replications")) {
    cfg.replications = static_cast<int>(get_count(doc, "replications"));
  }
  if (cfg.replications < 1) throw SchemaError("config: replications must be >= 1");
  if (doc.contains("output")) cfg.output = get_as<std::string>(doc, "output");
  if (doc.contains("init")) {
    const auto init = get_as<std::string>(doc, "init");
    if (init == "truth") {
      cfg.fit_init = FitInit::kTruth;
    } else if (init == "kmeanspp") {
      cfg.fit_init = FitInit::kKmeanspp;
    } else {
      throw SchemaError("config: init must be \"truth\" or \"kmeanspp\"");
    }
  }
  if (doc.contains("gmr_init")) {
    const auto init = get_as<std::string>(doc, "gmr_init");
    if (init == "truth") {
      cfg.gmr_init = GmrInit::kTruth;
    } else if (init == "median") {
      cfg.gmr_init = GmrInit::kMedian;
    } else {
      throw SchemaError("config: gmr_init must be \"median\" or \"truth\"");
    }
  }
  if (doc.contains("n_starts")) cfg.n_starts = static_cast<int>(get_count(doc, "n_starts"));
  if (doc.contains("tol")) cfg.tol = get_as<double>(doc, "tol");
  if (doc.contains("max_iter")) cfg.max_iter = static_cast<int>(get_count(doc, "max_iter"));
  if (doc.contains("gmr_tol")) cfg.gmr_tol = get_as<double>(doc, "gmr_tol");
  if (doc.contains("gmr_max_iter")) {
    cfg.gmr_max_iter = static_cast<int>(get_count(doc, "gmr_max_iter"));
  }
  if (doc.contains("klavg_n")) cfg.klavg_n = get_count(doc, "klavg_n");
  if (doc.contains("record_timing")) cfg.record_timing = get_as<bool>(doc, "record_timing");
  if (doc.contains("threads")) cfg.threads = static_cast<int>(get_count(doc, "threads"));
  if (cfg.K < 1 || cfg.d < 1) throw SchemaError("config: K and d must be >= 1");
  if (cfg.M < 1 || cfg.N < cfg.M) throw SchemaError("config: need 1 <= M <= N");
  if (cfg.n_starts < 1) throw SchemaError("config: n_starts must be >= 1");
  return cfg;
}

ExperimentReport run(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw InvalidArgument("experiment: no methods");
  if (cfg.replications < 1) throw InvalidArgument("experiment: replications < 1");
  if (cfg.truths.empty() && !cfg.model && !cfg.generate) {
    throw InvalidArgument("experiment: no truth model or generator settings");
  }
  ExperimentReport report;
  if (cfg.N < cfg.M * static_cast<std::size_t>(cfg.K + 1)) {
    report.log.push_back("warning: N < M (K + 1); shards are very small");
  }
  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<std::vector<ReportRow>> rows(reps);
  std::vector<std::vector<std::string>> logs(reps);
  const int outer = std::min<int>(std::max(cfg.threads, 1), cfg.replications);
  const int inner = outer > 1 ? 1 : std::max(cfg.threads, 1);
  parallel_for(reps, outer, [&](std::size_t r) {
    rows[r] = run_replication(cfg, static_cast<int>(r), inner, logs[r]);
  });
  for (std::size_t r = 0; r < reps; ++r) {
    report.rows.insert(report.rows.end(), rows[r].begin(), rows[r].end());
    report.log.insert(report.log.end(), logs[r].begin(), logs[r].end());
  }
  return report;
}

std::string to_csv(const ExperimentReport& report) {
  std::string out = "replication,method,w1,mcr,ari,local_seconds,agg_seconds\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.replication);
    out += ',';
    out += to_string(row.method);
    for (double v : {row.w1, row.mcr, row.ari, row.local_seconds, row.agg_seconds}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace scgmm::experiment
