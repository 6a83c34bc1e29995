#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scgmm/mixture.hpp"
#include "scgmm/simgen.hpp"

namespace scgmm::experiment {

enum class Method { kGlobal, kGmr, kMedian, kKlavg, kPool };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

enum class FitInit { kTruth, kKmeanspp };
enum class GmrInit { kMedian, kTruth };

struct GenerateSettings {
  double max_omega = 0.05;
  std::size_t mc_samples = 100000;
};

struct ExperimentConfig {
  /// Fixed truth for every replication. When unset, `generate` draws a fresh
  /// truth per replication.
  std::optional<Mixture> model;
  std::optional<GenerateSettings> generate;
  /// Explicit per-replication truths (library use); replication r uses
  /// truths[r % truths.size()]. Takes precedence over model/generate.
  std::vector<Mixture> truths;

  std::size_t N = 4096;
  std::size_t M = 4;
  int K = 2;
  int d = 2;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::kGlobal, Method::kGmr, Method::kMedian,
                              Method::kKlavg};
  int replications = 1;
  std::string output;

  FitInit fit_init = FitInit::kKmeanspp;
  int n_starts = 10;
  double tol = 1e-6;
  int max_iter = 10000;
  GmrInit gmr_init = GmrInit::kMedian;
  double gmr_tol = 1e-6;
  int gmr_max_iter = 1000;
  std::size_t klavg_n = 1000;

  /// When false, the timing columns are written as 0 so reports are
  /// byte-reproducible.
  bool record_timing = true;
  int threads = 1;
};

/// Parses a config document. Requires "version": 1 and rejects unknown keys
/// (SchemaError). `base_dir` resolves a relative "model_path".
ExperimentConfig config_from_json(const nlohmann::json& doc,
                                  const std::string& base_dir = ".");

struct ReportRow {
  int replication = 0;
  Method method = Method::kGmr;
  double w1 = 0.0;
  /// NaN when the estimate's order differs from K (pool).
  double mcr = 0.0;
  double ari = 0.0;
  double local_seconds = 0.0;
  double agg_seconds = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  /// Non-fatal notes (small shards, GMR re-seeds, ...).
  std::vector<std::string> log;
};

ExperimentReport run(const ExperimentConfig& cfg);

/// Header: replication,method,w1,mcr,ari,local_seconds,agg_seconds
std::string to_csv(const ExperimentReport& report);

}  // namespace scgmm::experiment
