#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rntk/types.hpp"

namespace rntk {

namespace detail {

/// 17 significant digits: lossless round-trip for IEEE doubles.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(context + ": cannot parse number '" + tok + "'");
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

/// Reads a line-delimited JSON sequence file:
///   {"id": str, "label": int (optional), "steps": [[float,...],...]}
/// File order is preserved. Errors report the offending line number.
inline Dataset read_sequences(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<TimeSeries> series;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw ValidationError(where + ": record must be an object with a string 'id'");
    if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].empty())
      throw ValidationError(where + ": 'steps' must be a non-empty array");

    TimeSeries ts;
    ts.id = j["id"].get<std::string>();
    if (j.contains("label")) {
      if (!j["label"].is_number_integer())
        throw ValidationError(where + ": 'label' must be an integer");
      ts.label = j["label"].get<int>();
    }
    const auto& steps = j["steps"];
    const std::size_t T = steps.size();
    std::size_t m = 0;
    for (std::size_t t = 0; t < T; ++t) {
      if (!steps[t].is_array() || steps[t].empty())
        throw ValidationError(where + ": step " + std::to_string(t) + " must be a non-empty array");
      if (t == 0) {
        m = steps[t].size();
        ts.steps.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(m));
      } else if (steps[t].size() != m) {
        throw ValidationError(where + ": inconsistent step dimension at step " + std::to_string(t) +
                              " (got " + std::to_string(steps[t].size()) + ", expected " +
                              std::to_string(m) + ")");
      }
      for (std::size_t c = 0; c < m; ++c) {
        if (!steps[t][c].is_number())
          throw ValidationError(where + ": step values must be numbers");
        ts.steps(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
            steps[t][c].get<double>();
      }
    }
    try {
      validate(ts);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    series.push_back(std::move(ts));
  }
  if (series.empty()) throw ValidationError(path.string() + ": empty sequence file");
  try {
    return Dataset::of(std::move(series));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

/// Writes one JSON record per series. Doubles serialize with shortest
/// round-trip formatting, so read_sequences(write_sequences(ds)) == ds.
inline void write_sequences(const Dataset& ds, const std::filesystem::path& path) {
  for (const auto& ts : ds.series) validate(ts);
  auto out = detail::open_output(path);
  for (const auto& ts : ds.series) {
    nlohmann::json j;
    j["id"] = ts.id;
    if (ts.label) j["label"] = *ts.label;
    nlohmann::json steps = nlohmann::json::array();
    for (Eigen::Index t = 0; t < ts.length(); ++t) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < ts.dim(); ++c) row.push_back(ts.steps(t, c));
      steps.push_back(std::move(row));
    }
    j["steps"] = std::move(steps);
    out << j.dump() << '\n';
  }
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

/// CSV matrix format: header "id,<id1>,<id2>,...", then one row per id.
inline void write_matrix(const GramMatrix& gm, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << "id";
  for (const auto& id : gm.ids()) out << ',' << id;
  out << '\n';
  const auto& M = gm.values();
  for (Eigen::Index i = 0; i < gm.size(); ++i) {
    out << gm.ids()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < gm.size(); ++j) out << ',' << detail::format_double(M(i, j));
    out << '\n';
  }
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

/// Reads a matrix CSV back. The kind is inferred from the diagonal: all-zero
/// means distance, strictly positive means kernel; anything else is invalid
/// either way and rejected by the GramMatrix constructor.
inline GramMatrix read_matrix(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty matrix file");
  auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "id")
    throw ValidationError(path.string() + ": header must start with 'id'");
  std::vector<std::string> ids(header.begin() + 1, header.end());
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd M(n, n);
  Eigen::Index row = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (row >= n) throw ValidationError(where + ": more rows than header ids");
    auto fields = detail::split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != n + 1)
      throw ValidationError(where + ": expected " + std::to_string(n + 1) + " fields, got " +
                            std::to_string(fields.size()));
    if (fields[0] != ids[static_cast<std::size_t>(row)])
      throw ValidationError(where + ": row id '" + fields[0] + "' does not match header order");
    for (Eigen::Index j = 0; j < n; ++j)
      M(row, j) = detail::parse_double(fields[static_cast<std::size_t>(j) + 1], where);
    ++row;
  }
  if (row != n)
    throw ValidationError(path.string() + ": expected " + std::to_string(n) + " rows, got " +
                          std::to_string(row));
  bool diag_all_zero = true;
  for (Eigen::Index i = 0; i < n; ++i)
    if (M(i, i) != 0.0) diag_all_zero = false;
  const MatrixKind kind = diag_all_zero ? MatrixKind::distance : MatrixKind::kernel;
  try {
    return GramMatrix(std::move(ids), std::move(M), kind);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

/// Embedding CSV: id,label,dim1..dimk; the label column is blank when absent.
inline void write_embedding(const Embedding& e, const std::filesystem::path& path) {
  validate(e);
  auto out = detail::open_output(path);
  out << "id,label";
  for (Eigen::Index j = 0; j < e.dim(); ++j) out << ",dim" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    out << e.ids[static_cast<std::size_t>(i)] << ',';
    if (!e.labels.empty() && e.labels[static_cast<std::size_t>(i)])
      out << *e.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < e.dim(); ++j) out << ',' << detail::format_double(e.coords(i, j));
    out << '\n';
  }
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

inline Embedding read_embedding(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty embedding file");
  auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    throw ValidationError(path.string() + ": header must be id,label,dim1,...");
  const Eigen::Index k = static_cast<Eigen::Index>(header.size()) - 2;
  Embedding e;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    auto fields = detail::split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != k + 2)
      throw ValidationError(where + ": expected " + std::to_string(k + 2) + " fields");
    e.ids.push_back(fields[0]);
    if (fields[1].empty()) {
      e.labels.emplace_back(std::nullopt);
    } else {
      e.labels.emplace_back(static_cast<int>(detail::parse_double(fields[1], where)));
    }
    std::vector<double> row;
    for (Eigen::Index j = 0; j < k; ++j)
      row.push_back(detail::parse_double(fields[static_cast<std::size_t>(j) + 2], where));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no embedding rows");
  e.coords.resize(static_cast<Eigen::Index>(rows.size()), k);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      e.coords(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  bool any_label = false;
  for (const auto& l : e.labels)
    if (l) any_label = true;
  if (!any_label) e.labels.clear();
  validate(e);
  return e;
}

/// Loss trace CSV with an "iteration,kl" header; iteration 0 is the state
/// before the first update.
inline void write_loss_trace(const std::vector<double>& trace, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << "iteration,kl\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << ',' << detail::format_double(trace[i]) << '\n';
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

}  // namespace rntk
