#include "scgmm/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scgmm/error.hpp"

namespace scgmm::io {

using nlohmann::json;

namespace {

constexpr const char* kMixtureFormat = "mixture-v1";
constexpr const char* kLocalsFormat = "locals-v1";

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw SchemaError(std::string("missing field \"") + key + "\"");
  }
  return doc.at(key);
}

std::vector<double> number_array(const json& node, const char* what) {
  if (!node.is_array()) {
    throw SchemaError(std::string(what) + " must be an array");
  }
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& v : node) {
    if (!v.is_number()) {
      throw SchemaError(std::string(what) + " must contain numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

void format_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::ifstream open_in(const std::filesystem::path& path,
                      std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw SchemaError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path,
                       std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw SchemaError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
      field.pop_back();
    }
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  while (first != s.data() + s.size() && *first == ' ') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw SchemaError("line " + std::to_string(line_no) +
                      ": not a number: \"" + s + "\"");
  }
  return v;
}

int parse_int(const std::string& s, std::size_t line_no) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw SchemaError("line " + std::to_string(line_no) +
                      ": not an integer label: \"" + s + "\"");
  }
  return v;
}

}  // namespace

json to_json(const Mixture& g) {
  json doc;
  doc["format"] = kMixtureFormat;
  doc["d"] = g.dim();
  doc["K"] = g.order();
  doc["weights"] = g.weights();
  json comps = json::array();
  for (const auto& c : g.components()) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < c.dim(); ++r) {
      json row = json::array();
      for (Eigen::Index s = 0; s < c.dim(); ++s) row.push_back(c.cov()(r, s));
      cov.push_back(std::move(row));
    }
    comps.push_back({{"mean", std::vector<double>(c.mean().data(),
                                                  c.mean().data() + c.dim())},
                     {"cov", std::move(cov)}});
  }
  doc["components"] = std::move(comps);
  return doc;
}

Mixture mixture_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("model document must be an object");
  const json& format = require(doc, "format");
  if (!format.is_string() || format.get<std::string>() != kMixtureFormat) {
    throw SchemaError("unsupported model format (expected mixture-v1)");
  }
  const json& d_node = require(doc, "d");
  const json& k_node = require(doc, "K");
  if (!d_node.is_number_integer() || d_node.get<long long>() < 1) {
    throw SchemaError("\"d\" must be a positive integer");
  }
  if (!k_node.is_number_integer() || k_node.get<long long>() < 1) {
    throw SchemaError("\"K\" must be a positive integer");
  }
  const auto d = static_cast<Eigen::Index>(d_node.get<long long>());
  const auto k = static_cast<std::size_t>(k_node.get<long long>());
  std::vector<double> weights = number_array(require(doc, "weights"), "weights");
  const json& comps = require(doc, "components");
  if (!comps.is_array()) throw SchemaError("components must be an array");
  if (weights.size() != k || comps.size() != k) {
    throw SchemaError("\"K\" does not match weights/components length");
  }
  std::vector<Gaussian> components;
  components.reserve(k);
  try {
    for (const auto& c : comps) {
      const std::vector<double> mean = number_array(require(c, "mean"), "mean");
      if (static_cast<Eigen::Index>(mean.size()) != d) {
        throw SchemaError("mean length does not match \"d\"");
      }
      const json& cov_node = require(c, "cov");
      if (!cov_node.is_array() ||
          static_cast<Eigen::Index>(cov_node.size()) != d) {
        throw SchemaError("cov must be a d x d array");
      }
      Eigen::MatrixXd cov(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        const std::vector<double> row =
            number_array(cov_node[static_cast<std::size_t>(r)], "cov row");
        if (static_cast<Eigen::Index>(row.size()) != d) {
          throw SchemaError("cov must be a d x d array");
        }
        for (Eigen::Index s = 0; s < d; ++s) {
          cov(r, s) = row[static_cast<std::size_t>(s)];
        }
      }
      components.emplace_back(
          Eigen::Map<const Eigen::VectorXd>(mean.data(), d), std::move(cov));
    }
    return Mixture(std::move(weights), std::move(components));
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what());
  } catch (const NumericalError& e) {
    throw SchemaError(e.what());
  }
}

std::string serialize(const Mixture& g) { return to_json(g).dump(); }

Mixture deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  return mixture_from_json(doc);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  out << text;
}

void write_mixture(const std::filesystem::path& path, const Mixture& g) {
  write_text_file(path, to_json(g).dump(2) + "\n");
}

Mixture read_mixture(const std::filesystem::path& path) {
  return mixture_from_json(read_json_file(path));
}

json to_json(const LocalsDocument& doc) {
  json out;
  out["format"] = kLocalsFormat;
  out["lambdas"] = doc.lambdas;
  out["sizes"] = doc.sizes;
  json estimates = json::array();
  for (const auto& g : doc.estimates) estimates.push_back(to_json(g));
  out["estimates"] = std::move(estimates);
  return out;
}

LocalsDocument locals_from_json(const json& doc) {
  const json& format = require(doc, "format");
  if (!format.is_string() || format.get<std::string>() != kLocalsFormat) {
    throw SchemaError("unsupported locals format (expected locals-v1)");
  }
  LocalsDocument out;
  out.lambdas = number_array(require(doc, "lambdas"), "lambdas");
  const json& estimates = require(doc, "estimates");
  if (!estimates.is_array() || estimates.empty()) {
    throw SchemaError("estimates must be a non-empty array");
  }
  for (const auto& e : estimates) out.estimates.push_back(mixture_from_json(e));
  if (out.lambdas.size() != out.estimates.size()) {
    throw SchemaError("lambdas and estimates differ in length");
  }
  if (doc.contains("sizes")) {
    for (const auto& s : doc.at("sizes")) {
      if (!s.is_number_unsigned()) throw SchemaError("sizes must be counts");
      out.sizes.push_back(s.get<std::size_t>());
    }
  }
  return out;
}

void write_locals(const std::filesystem::path& path, const LocalsDocument& doc) {
  write_text_file(path, to_json(doc).dump(2) + "\n");
}

LocalsDocument read_locals(const std::filesystem::path& path) {
  return locals_from_json(read_json_file(path));
}

void write_csv(const std::filesystem::path& path, const LabeledSample& data) {
  std::string text;
  const Eigen::Index d = data.dim();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j > 0) text += ',';
    text += "x" + std::to_string(j);
  }
  if (data.labels) text += ",label";
  text += '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (j > 0) text += ',';
      format_double(text, data.points(i, j));
    }
    if (data.labels) {
      text += ',';
      text += std::to_string((*data.labels)[static_cast<std::size_t>(i)]);
    }
    text += '\n';
  }
  write_text_file(path, text);
}

LabeledSample read_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  std::size_t d = 0;
  bool has_label = false;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "x" + std::to_string(j)) {
      d = j + 1;
    } else if (header[j] == "label" && j == header.size() - 1) {
      has_label = true;
    } else {
      throw SchemaError(path.string() + ": bad header column \"" + header[j] +
                        "\" (expected x0,...,x{d-1}[,label])");
    }
  }
  if (d == 0) throw SchemaError(path.string() + ": header has no x columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw SchemaError(path.string() + ": line " + std::to_string(line_no) +
                        " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      values.push_back(parse_double(fields[j], line_no));
    }
    if (has_label) labels.push_back(parse_int(fields[d], line_no));
  }
  const auto n = static_cast<Eigen::Index>(values.size() / d);
  LabeledSample out;
  out.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                              Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Eigen::Index>(d));
  if (has_label) out.labels = std::move(labels);
  return out;
}

void write_binary(const std::filesystem::path& path, const LabeledSample& data) {
  static_assert(std::endian::native == std::endian::little,
                "binary data files assume a little-endian host");
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      rows = data.points;
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  out.write(reinterpret_cast<const char*>(rows.data()),
            static_cast<std::streamsize>(rows.size() * sizeof(double)));
  json sidecar = {{"n", data.size()}, {"d", data.dim()}};
  write_text_file(path.string() + ".json", sidecar.dump() + "\n");
}

LabeledSample read_binary(const std::filesystem::path& path) {
  const json sidecar = read_json_file(path.string() + ".json");
  const json& n_node = require(sidecar, "n");
  const json& d_node = require(sidecar, "d");
  if (!n_node.is_number_unsigned() || !d_node.is_number_unsigned() ||
      d_node.get<std::size_t>() == 0) {
    throw SchemaError("binary sidecar: n and d must be positive integers");
  }
  const auto n = static_cast<Eigen::Index>(n_node.get<std::size_t>());
  const auto d = static_cast<Eigen::Index>(d_node.get<std::size_t>());
  const auto bytes = static_cast<std::uintmax_t>(n * d) * sizeof(double);
  if (std::filesystem::file_size(path) != bytes) {
    throw SchemaError(path.string() + ": size does not match sidecar n x d");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      n, d);
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  in.read(reinterpret_cast<char*>(rows.data()),
          static_cast<std::streamsize>(bytes));
  LabeledSample out;
  out.points = rows;
  return out;
}

void write_data(const std::filesystem::path& path, const LabeledSample& data) {
  if (path.extension() == ".bin") {
    write_binary(path, data);
  } else {
    write_csv(path, data);
  }
}

LabeledSample read_data(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? read_binary(path) : read_csv(path);
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string first;
  if (!std::getline(in, first)) return {};
  if (first.rfind("x0", 0) == 0) {
    LabeledSample data = read_csv(path);
    if (!data.labels) throw SchemaError(path.string() + ": no label column");
    return *data.labels;
  }
  std::vector<int> labels;
  std::size_t line_no = 1;
  auto take = [&](std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (!line.empty()) labels.push_back(parse_int(line, line_no));
  };
  if (first != "label" && first != "label\r") take(first);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    take(line);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path,
                  const std::vector<int>& labels) {
  std::string text = "label\n";
  for (int l : labels) text += std::to_string(l) + '\n';
  write_text_file(path, text);
}

}  // namespace scgmm::io
