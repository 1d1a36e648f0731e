#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dyadcode/corpus.hpp"
#include "dyadcode/error.hpp"
#include "dyadcode/matrix.hpp"

namespace dyadcode {

// Sequence-id keyed dense vectors of one fixed dimension, e.g. sentence
// embeddings or per-channel acoustic descriptors.
struct VectorTable {
  std::size_t dim = 0;
  std::string source_label;
  std::map<std::string, std::vector<double>> rows;

  void insert(std::string id, std::vector<double> values) {
    if (values.size() != dim)
      throw DataError("row " + id + " has " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(dim));
    for (double v : values) {
      if (!std::isfinite(v)) throw DataError("row " + id + " contains a non-finite value");
    }
    if (!rows.emplace(id, std::move(values)).second) throw DataError("duplicate row id " + id);
  }

  friend bool operator==(const VectorTable&, const VectorTable&) = default;
};

inline constexpr std::string_view kVectorFormat = "dyadvec/1";

// "dyadvec/1 dim=<d> source=<label>" header, then "<id> v1 ... vd" per line.
inline VectorTable parse_vector_table(std::string_view text) {
  VectorTable table;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = detail::trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split_ws(line);

    if (!header_seen) {
      if (fields.empty() || fields[0] != kVectorFormat)
        throw ParseError("expected header 'dyadvec/1 dim=<d> source=<label>'", line_no);
      bool have_dim = false;
      for (std::size_t k = 1; k < fields.size(); ++k) {
        if (fields[k].starts_with("dim=")) {
          const auto v = fields[k].substr(4);
          auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), table.dim);
          if (ec != std::errc{} || p != v.data() + v.size() || table.dim == 0)
            throw ParseError("dim must be a positive integer", line_no);
          have_dim = true;
        } else if (fields[k].starts_with("source=")) {
          table.source_label = std::string(fields[k].substr(7));
        } else {
          throw ParseError("unknown header field '" + std::string(fields[k]) + "'", line_no);
        }
      }
      if (!have_dim) throw ParseError("header lacks dim=<d>", line_no);
      header_seen = true;
      continue;
    }

    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(fields[k].data(), fields[k].data() + fields[k].size(), v);
      if (ec != std::errc{} || p != fields[k].data() + fields[k].size())
        throw ParseError("malformed value '" + std::string(fields[k]) + "'", line_no);
      values.push_back(v);
    }
    try {
      table.insert(std::string(fields[0]), std::move(values));
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!header_seen) throw ParseError("missing dyadvec/1 header");
  return table;
}

inline std::string serialize_vector_table(const VectorTable& table) {
  std::string out = std::string(kVectorFormat) + " dim=" + std::to_string(table.dim);
  if (!table.source_label.empty()) out += " source=" + table.source_label;
  out += '\n';
  char buf[64];
  for (const auto& [id, values] : table.rows) {
    out += id;
    for (double v : values) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out += ' ';
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

inline VectorTable load_vector_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vector table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_vector_table(buf.str());
}

inline void save_vector_table(const VectorTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vector table " + path.string());
  out << serialize_vector_table(table);
}

struct BlockSpan {
  std::string source_label;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const BlockSpan&, const BlockSpan&) = default;
};

struct FeatureMatrix {
  std::vector<std::string> ids;
  Matrix X;
  std::vector<BlockSpan> block_spans;
};

// Rows in corpus order; columns are the tables concatenated in argument order.
inline FeatureMatrix align(const Corpus& corpus, std::span<const VectorTable> tables) {
  FeatureMatrix fm;
  std::size_t d = 0;
  for (const auto& t : tables) {
    fm.block_spans.push_back({t.source_label, d, d + t.dim});
    d += t.dim;
  }
  fm.X = Matrix(corpus.size(), d);
  fm.ids.reserve(corpus.size());
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    fm.ids.push_back(corpus[r].id());
    auto row = fm.X.row(r);
    for (std::size_t t = 0; t < tables.size(); ++t) {
      auto it = tables[t].rows.find(fm.ids.back());
      if (it == tables[t].rows.end())
        throw DataError("sequence " + fm.ids.back() + " missing from table '" + tables[t].source_label + "'");
      std::copy(it->second.begin(), it->second.end(), row.begin() + static_cast<std::ptrdiff_t>(fm.block_spans[t].begin));
    }
  }
  return fm;
}

// Per-column z-scoring with training statistics (population std).
struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;
};

inline constexpr double kZeroVariance = 1e-12;

inline Scaler fit_scaler(const Matrix& X_train) {
  if (X_train.rows() < 2) throw DataError("scaler needs at least 2 training rows");
  const std::size_t n = X_train.rows();
  const std::size_t d = X_train.cols();
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < n; ++r) {
    auto row = X_train.row(r);
    for (std::size_t c = 0; c < d; ++c) s.means[c] += row[c];
  }
  for (double& m : s.means) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = X_train.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = row[c] - s.means[c];
      s.stds[c] += dev * dev;
    }
  }
  for (double& v : s.stds) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v <= kZeroVariance) v = 1.0;
  }
  return s;
}

inline Matrix apply_scaler(const Scaler& scaler, const Matrix& X) {
  if (X.cols() != scaler.means.size()) throw DataError("scaler dimension mismatch");
  Matrix out = X;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - scaler.means[c]) / scaler.stds[c];
  }
  return out;
}

}  // namespace dyadcode
