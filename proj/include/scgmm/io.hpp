#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scgmm/mixture.hpp"

namespace scgmm::io {

// ---- Model documents ("mixture-v1") ----------------------------------------
//
// {"format":"mixture-v1","d":2,"K":2,"weights":[...],
//  "components":[{"mean":[...],"cov":[[...],[...]]}, ...]}
//
// Covariances are written as full row-major matrices. Doubles are emitted
// with shortest round-trip precision, so serialize/deserialize is exact.

nlohmann::json to_json(const Mixture& g);
/// Throws SchemaError with a descriptive message on any violation.
Mixture mixture_from_json(const nlohmann::json& doc);

std::string serialize(const Mixture& g);
Mixture deserialize(const std::string& text);

void write_mixture(const std::filesystem::path& path, const Mixture& g);
Mixture read_mixture(const std::filesystem::path& path);

// ---- Local-estimate bundles ("locals-v1") ---------------------------------
//
// {"format":"locals-v1","lambdas":[...],"sizes":[...],"estimates":[<mixture-v1>...]}

struct LocalsDocument {
  std::vector<Mixture> estimates;
  std::vector<double> lambdas;
  std::vector<std::size_t> sizes;
};

nlohmann::json to_json(const LocalsDocument& doc);
LocalsDocument locals_from_json(const nlohmann::json& doc);
void write_locals(const std::filesystem::path& path, const LocalsDocument& doc);
LocalsDocument read_locals(const std::filesystem::path& path);

// ---- Data files ------------------------------------------------------------
//
// CSV: header "x0,...,x{d-1}[,label]", one observation per line.
// Binary (".bin"): raw little-endian float64, row-major, with a sidecar
// "<path>.json" holding {"n":..,"d":..}. Binary files carry no labels.

void write_csv(const std::filesystem::path& path, const LabeledSample& data);
LabeledSample read_csv(const std::filesystem::path& path);

void write_binary(const std::filesystem::path& path, const LabeledSample& data);
LabeledSample read_binary(const std::filesystem::path& path);

/// Dispatches on extension: ".bin" is binary, anything else CSV.
void write_data(const std::filesystem::path& path, const LabeledSample& data);
LabeledSample read_data(const std::filesystem::path& path);

/// Label files: an optional header line "label" followed by one integer per
/// line. A data CSV with a label column is accepted too.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path,
                  const std::vector<int>& labels);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace scgmm::io
