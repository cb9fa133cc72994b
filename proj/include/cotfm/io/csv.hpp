#pragma once

#include "cotfm/core.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace cotfm::io {

struct Table {
  std::vector<std::string> header;
  RowMatrix values;

  Index column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return static_cast<Index>(k);
    throw InvalidArgument("csv: missing column '" + name + "'");
  }
};

/// Column names "<prefix>0", "<prefix>1", ...
inline std::vector<std::string> numbered(const std::string& prefix, Index n) {
  std::vector<std::string> v;
  for (Index k = 0; k < n; ++k) v.push_back(prefix + std::to_string(k));
  return v;
}

/// Header y0..y{d_y-1}, u0..u{d_u-1}.
inline std::vector<std::string> joint_header(Index d_y, Index d_u) {
  auto h = numbered("y", d_y);
  const auto u = numbered("u", d_u);
  h.insert(h.end(), u.begin(), u.end());
  return h;
}

/// Writes values at 17 significant digits (round-trip exact). With
/// `id_column` nonempty, a leading integer column with that name is added.
inline void write_csv(std::ostream& out, const std::vector<std::string>& header, const RowMatrix& values,
                      const std::string& id_column = "") {
  require(static_cast<Index>(header.size()) == values.cols(), "write_csv: header width does not match data");
  if (!id_column.empty()) out << id_column << (header.empty() ? "" : ",");
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n' << std::setprecision(17);
  for (Index i = 0; i < values.rows(); ++i) {
    if (!id_column.empty()) out << i << (values.cols() ? "," : "");
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << values(i, j);
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header, const RowMatrix& values,
                      const std::string& id_column = "") {
  std::ofstream f(path);
  require(static_cast<bool>(f), "cannot write " + path);
  write_csv(f, header, values, id_column);
}

inline Table read_csv(std::istream& in, const std::string& name = "csv") {
  Table t;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), name + ": empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  std::vector<double> flat;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        flat.push_back(std::stod(cell, &used));
        require(used == cell.size(), "");
      } catch (const std::exception&) {
        throw InvalidArgument(name + ": non-numeric value '" + cell + "' on row " + std::to_string(rows + 1));
      }
      ++count;
    }
    require(count == t.header.size(), name + ": row " + std::to_string(rows + 1) + " has the wrong width");
    ++rows;
  }
  t.values = Eigen::Map<const RowMatrix>(flat.data(), rows, static_cast<Index>(t.header.size()));
  return t;
}

inline Table read_csv(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), "cannot read " + path);
  return read_csv(f, path);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path);
  require(static_cast<bool>(f), "cannot write " + path);
  f << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), "cannot read " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

/// Joint dataset as CSV (columns y*, u*) plus a JSON sidecar at
/// `<path>.json` recording how it was produced.
inline void write_dataset(const std::string& path, const RowMatrix& rows, Index d_y, const nlohmann::json& provenance) {
  write_csv(path, joint_header(d_y, rows.cols() - d_y), rows);
  nlohmann::json side = provenance;
  side["d_y"] = d_y;
  side["d_u"] = rows.cols() - d_y;
  side["rows"] = rows.rows();
  write_json(path + ".json", side);
}

/// Reads a joint CSV (columns y*, u*, optionally led by sample_id) and
/// infers d_y from its y* columns.
inline std::pair<RowMatrix, Index> read_dataset(const std::string& path) {
  Table t = read_csv(path);
  if (!t.header.empty() && t.header[0] == "sample_id") {
    t.values = t.values.rightCols(t.values.cols() - 1).eval();
    t.header.erase(t.header.begin());
  }
  const Index width = static_cast<Index>(t.header.size());
  Index d_y = 0;
  while (d_y < width && t.header[d_y] == "y" + std::to_string(d_y)) ++d_y;
  for (Index k = d_y; k < width; ++k)
    require(t.header[k] == "u" + std::to_string(k - d_y), path + ": expected columns y0.., u0..");
  require(d_y >= 1 && width - d_y >= 1, path + ": need at least one y and one u column");
  return {t.values, d_y};
}

}  // namespace cotfm::io
