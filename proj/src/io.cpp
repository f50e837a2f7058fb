#include "featmatch/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace featmatch {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json parse_json(std::istream& in) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("malformed JSON: ") + e.what());
  }
}

double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) throw InvalidInput(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw InvalidInput(where + ": non-finite value");
  return d;
}

long long integer_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_integer()) {
    throw InvalidInput(std::string("missing or non-integer field '") + key + "'");
  }
  return doc[key].get<long long>();
}

Eigen::MatrixXd unit_from_json(const json& flat, Eigen::Index p, Eigen::Index m, std::size_t unit) {
  const std::string where = "unit " + std::to_string(unit + 1);
  if (!flat.is_array() || flat.size() != static_cast<std::size_t>(p * m)) {
    throw InvalidInput(where + ": expected " + std::to_string(p * m) + " values (p x m, column-major)");
  }
  Eigen::MatrixXd x(p, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index r = 0; r < p; ++r) {
      x(r, c) = number_at(flat[static_cast<std::size_t>(c * p + r)], where);
    }
  }
  return x;
}

json unit_to_json(const Eigen::MatrixXd& x) {
  json flat = json::array();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) flat.push_back(x(r, c));
  }
  return flat;
}

AnyStack read_json_stack(std::istream& in) {
  const json doc = parse_json(in);
  if (!doc.is_object() || !doc.contains("units") || !doc["units"].is_array()) {
    throw InvalidInput("stack JSON needs a 'units' array");
  }
  const auto n = integer_field(doc, "n");
  const auto p = integer_field(doc, "p");
  const json& units = doc["units"];
  if (n < 1 || p < 1) throw InvalidInput("stack JSON needs n >= 1 and p >= 1");
  if (units.size() != static_cast<std::size_t>(n)) {
    throw InvalidInput("stack JSON declares n = " + std::to_string(n) + " but has " + std::to_string(units.size()) +
                       " units");
  }
  std::vector<Eigen::MatrixXd> mats;
  if (doc.contains("sizes")) {
    const json& sizes = doc["sizes"];
    if (!sizes.is_array() || sizes.size() != static_cast<std::size_t>(n)) {
      throw InvalidInput("'sizes' must list one size per unit");
    }
    const auto clusters = integer_field(doc, "K");
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (!sizes[i].is_number_integer() || sizes[i].get<long long>() < 1) {
        throw InvalidInput("unit " + std::to_string(i + 1) + ": size must be a positive integer");
      }
      mats.push_back(unit_from_json(units[i], p, sizes[i].get<long long>(), i));
    }
    return UnbalancedStack(std::move(mats), static_cast<int>(clusters));
  }
  const auto m = integer_field(doc, "m");
  if (m < 1) throw InvalidInput("stack JSON needs m >= 1");
  for (std::size_t i = 0; i < units.size(); ++i) mats.push_back(unit_from_json(units[i], p, m, i));
  return FeatureStack(std::move(mats));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos != text.size()) throw InvalidInput("");
    if (!std::isfinite(v)) throw InvalidInput(where + ": non-finite value");
    return v;
  } catch (const InvalidInput& e) {
    if (std::string(e.what()).empty()) throw InvalidInput(where + ": not a number: '" + text + "'");
    throw;
  } catch (const std::exception&) {
    throw InvalidInput(where + ": not a number: '" + text + "'");
  }
}

AnyStack read_csv_stack(std::istream& in, std::optional<int> clusters) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "unit" || header[1] != "index") {
    throw InvalidInput("CSV header must be unit,index,f1,...,fp");
  }
  const std::size_t p = header.size() - 2;

  std::map<long long, std::map<long long, Eigen::VectorXd>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() < 2) throw InvalidInput(where + ": missing unit/index");
    const auto unit = static_cast<long long>(parse_number(fields[0], where));
    const auto index = static_cast<long long>(parse_number(fields[1], where));
    if (unit < 1 || index < 1) throw InvalidInput(where + ": unit and index are 1-based");
    if (fields.size() != p + 2) {
      throw InvalidInput("unit " + std::to_string(unit) + " (" + where + "): row has " +
                         std::to_string(fields.size() - 2) + " features, expected " + std::to_string(p));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(p));
    for (std::size_t f = 0; f < p; ++f) v(static_cast<Eigen::Index>(f)) = parse_number(fields[f + 2], where);
    if (!rows[unit].emplace(index, std::move(v)).second) {
      throw InvalidInput("unit " + std::to_string(unit) + ": duplicate index " + std::to_string(index));
    }
  }
  if (rows.empty()) throw InvalidInput("CSV has no data rows");

  std::vector<Eigen::MatrixXd> mats;
  long long expected_unit = 1;
  for (auto& [unit, cols] : rows) {
    if (unit != expected_unit++) throw InvalidInput("unit " + std::to_string(expected_unit - 1) + " is missing");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(cols.size()));
    long long expected_index = 1;
    for (auto& [index, v] : cols) {
      if (index != expected_index) {
        throw InvalidInput("unit " + std::to_string(unit) + ": index " + std::to_string(expected_index) + " is missing");
      }
      x.col(index - 1) = v;
      ++expected_index;
    }
    mats.push_back(std::move(x));
  }
  if (clusters) return UnbalancedStack(std::move(mats), *clusters);
  const Eigen::Index m = mats.front().cols();
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].cols() != m) {
      throw InvalidInput("unit " + std::to_string(i + 1) + " has " + std::to_string(mats[i].cols()) +
                         " vectors, expected " + std::to_string(m) + " (pass K for unbalanced data)");
    }
  }
  return FeatureStack(std::move(mats));
}

void write_csv_units(std::ostream& out, const std::vector<Eigen::MatrixXd>& units) {
  const Eigen::Index p = units.front().rows();
  out << "unit,index";
  for (Eigen::Index f = 1; f <= p; ++f) out << ",f" << f;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < units.size(); ++i) {
    for (Eigen::Index k = 0; k < units[i].cols(); ++k) {
      out << (i + 1) << ',' << (k + 1);
      for (Eigen::Index f = 0; f < p; ++f) {
        std::snprintf(buf, sizeof buf, "%.17g", units[i](f, k));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace

StackFormat parse_format(const std::string& name) {
  if (name == "json") return StackFormat::json;
  if (name == "csv") return StackFormat::csv;
  throw InvalidInput("unknown format '" + name + "' (json or csv)");
}

StackFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? StackFormat::csv : StackFormat::json;
}

AnyStack read_stack(std::istream& in, StackFormat format, std::optional<int> clusters) {
  if (format == StackFormat::csv) return read_csv_stack(in, clusters);
  AnyStack stack = read_json_stack(in);
  if (clusters && std::holds_alternative<FeatureStack>(stack)) {
    return UnbalancedStack(std::get<FeatureStack>(stack).units(), *clusters);
  }
  return stack;
}

AnyStack load_stack(const std::filesystem::path& path, StackFormat format, std::optional<int> clusters) {
  auto in = open_in(path);
  return read_stack(in, format, clusters);
}

FeatureStack load_balanced(const std::filesystem::path& path, StackFormat format) {
  AnyStack stack = load_stack(path, format);
  if (auto* balanced = std::get_if<FeatureStack>(&stack)) return std::move(*balanced);
  throw InvalidInput(path.string() + " holds unbalanced data");
}

void write_stack(std::ostream& out, const FeatureStack& stack, StackFormat format) {
  if (format == StackFormat::csv) {
    write_csv_units(out, stack.units());
    return;
  }
  json doc;
  doc["n"] = stack.n();
  doc["m"] = stack.m();
  doc["p"] = stack.p();
  doc["units"] = json::array();
  for (const auto& x : stack.units()) doc["units"].push_back(unit_to_json(x));
  out << doc.dump() << '\n';
}

void write_stack(std::ostream& out, const UnbalancedStack& stack, StackFormat format) {
  if (format == StackFormat::csv) {
    write_csv_units(out, stack.units());
    return;
  }
  json doc;
  doc["n"] = stack.n();
  doc["p"] = stack.p();
  doc["K"] = stack.clusters();
  doc["sizes"] = json::array();
  doc["units"] = json::array();
  for (const auto& x : stack.units()) {
    doc["sizes"].push_back(x.cols());
    doc["units"].push_back(unit_to_json(x));
  }
  out << doc.dump() << '\n';
}

void save_stack(const std::filesystem::path& path, const FeatureStack& stack, StackFormat format) {
  auto out = open_out(path);
  write_stack(out, stack, format);
}

void save_stack(const std::filesystem::path& path, const UnbalancedStack& stack, StackFormat format) {
  auto out = open_out(path);
  write_stack(out, stack, format);
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  const json doc = parse_json(in);
  if (!doc.is_array() || doc.empty() || !doc[0].is_array() || doc[0].empty()) {
    throw InvalidInput(path.string() + ": expected a JSON array of rows");
  }
  const std::size_t rows = doc.size();
  const std::size_t cols = doc[0].size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!doc[r].is_array() || doc[r].size() != cols) {
      throw InvalidInput(path.string() + ": row " + std::to_string(r + 1) + " has the wrong length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number_at(doc[r][c], path.string() + " row " + std::to_string(r + 1));
    }
  }
  return out;
}

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix) {
  json doc = json::array();
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) row.push_back(matrix(r, c));
    doc.push_back(std::move(row));
  }
  auto out = open_out(path);
  out << doc.dump() << '\n';
}

void save_labels(const std::filesystem::path& path, const std::vector<std::vector<int>>& labels) {
  json doc;
  doc["labels"] = json::array();
  for (const auto& unit : labels) {
    json row = json::array();
    for (int v : unit) row.push_back(v + 1);
    doc["labels"].push_back(std::move(row));
  }
  auto out = open_out(path);
  out << doc.dump() << '\n';
}

std::vector<std::vector<int>> load_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  const json doc = parse_json(in);
  if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array()) {
    throw InvalidInput(path.string() + ": expected {\"labels\": [...]}");
  }
  std::vector<std::vector<int>> out;
  for (const auto& row : doc["labels"]) {
    std::vector<int> unit;
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw InvalidInput(path.string() + ": labels must be integers");
      unit.push_back(v.get<int>() - 1);
    }
    out.push_back(std::move(unit));
  }
  return out;
}

std::string matching_json(const SolveResult& result, const std::string& algo, const std::string& init) {
  json doc;
  doc["algo"] = algo;
  doc["init"] = init;
  doc["n"] = result.matching.n();
  doc["m"] = result.matching.perms.empty() ? 0 : result.matching.perms.front().size();
  doc["objective"] = result.objective;
  doc["surrogate"] = result.surrogate;
  doc["sweeps"] = result.sweeps;
  doc["converged"] = result.converged;
  doc["timed_out"] = result.timed_out;
  doc["seconds"] = std::round(result.seconds * 1000.0) / 1000.0;
  doc["perms"] = json::array();
  for (const auto& perm : result.matching.perms) {
    json row = json::array();
    for (int v : perm) row.push_back(v + 1);
    doc["perms"].push_back(std::move(row));
  }
  return doc.dump();
}

std::string partial_json(const PartialSolveResult& result, const std::string& algo) {
  json doc;
  doc["algo"] = algo;
  doc["n"] = result.matching.labels.size();
  doc["objective"] = result.objective;
  doc["sweeps"] = result.sweeps;
  doc["converged"] = result.converged;
  doc["timed_out"] = result.timed_out;
  doc["seconds"] = std::round(result.seconds * 1000.0) / 1000.0;
  doc["labels"] = result.matching.labels;
  return doc.dump();
}

Matching parse_matching_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("malformed matching JSON: ") + e.what());
  }
  if (!doc.contains("perms") || !doc["perms"].is_array()) throw InvalidInput("matching JSON needs 'perms'");
  Matching out;
  for (const auto& row : doc["perms"]) {
    Permutation perm;
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw InvalidInput("permutation entries must be integers");
      perm.push_back(v.get<int>() - 1);
    }
    out.perms.push_back(std::move(perm));
  }
  return out;
}

void save_report(const std::filesystem::path& path, const BenchmarkReport& report, bool include_timing) {
  auto out = open_out(path);
  out << report.to_csv(include_timing);
}

}  // namespace featmatch
