#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dyadcode/experiment.hpp"

namespace dyadcode {

// Output directory layout written by write_results():
//   results.csv    feature_set,run,balanced_accuracy
//   summary.csv    feature_set,mean,se,n_runs
//   scores.csv     feature_set,run,seed,balanced_accuracy,selected_c
//   confusion.csv  feature_set,run,true_code,predicted_code,count
//   table.txt      percentage table, one row per feature set

// "69.39 ± .06": both in percent with two decimals, the leading zero of a
// sub-1% standard error dropped.
inline std::string format_accuracy_cell(double mean, std::optional<double> se) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * mean);
  std::string out = buf;
  out += " ± ";
  if (!se) return out + "n/a";
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *se);
  std::string_view s = buf;
  if (s.starts_with("0.")) s.remove_prefix(1);
  return out + std::string(s);
}

inline std::string format_results_table(const ResultsTable& table) {
  std::size_t width = std::string_view("Input Features").size();
  for (const auto& r : table.rows) width = std::max(width, r.feature_set.size());
  std::ostringstream out;
  const auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
  out << pad("Input Features") << " | Balanced Accuracy (% +/- S.E.)\n";
  out << std::string(width, '-') << "-+-------------------------------\n";
  for (const auto& r : table.rows) out << pad(r.feature_set) << " | " << format_accuracy_cell(r.mean, r.se) << '\n';
  return out.str();
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

}  // namespace detail

inline void write_results(const ResultsTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream results, summary, scores, confusion;
  results << "feature_set,run,balanced_accuracy\n";
  summary << "feature_set,mean,se,n_runs\n";
  scores << "feature_set,run,seed,balanced_accuracy,selected_c\n";
  confusion << "feature_set,run,true_code,predicted_code,count\n";
  for (const auto& row : table.rows) {
    const auto name = detail::csv_field(row.feature_set);
    summary << name << ',' << detail::fmt_double(row.mean) << ',' << (row.se ? detail::fmt_double(*row.se) : "n/a")
            << ',' << row.n_runs << '\n';
    for (const auto& run : row.runs) {
      const auto ba = detail::fmt_double(run.balanced_accuracy);
      results << name << ',' << run.run_index << ',' << ba << '\n';
      std::string cs;
      for (double c : run.selected_c) cs += (cs.empty() ? "" : ";") + detail::fmt_double(c);
      scores << name << ',' << run.run_index << ',' << run.seed << ',' << ba << ',' << cs << '\n';
      for (Code t : {Code::Positive, Code::Negative}) {
        for (Code p : {Code::Positive, Code::Negative}) {
          confusion << name << ',' << run.run_index << ',' << to_int(t) << ',' << to_int(p) << ','
                    << run.confusion.counts[code_index(t)][code_index(p)] << '\n';
        }
      }
    }
  }
  detail::write_file(dir / "results.csv", results.str());
  detail::write_file(dir / "summary.csv", summary.str());
  detail::write_file(dir / "scores.csv", scores.str());
  detail::write_file(dir / "confusion.csv", confusion.str());
  detail::write_file(dir / "table.txt", format_results_table(table));
}

// Rebuilds per-run scores from scores.csv (and confusion.csv when present).
inline ResultsTable read_results(const std::filesystem::path& dir) {
  std::ifstream in(dir / "scores.csv");
  if (!in) throw DataError("cannot open " + (dir / "scores.csv").string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("feature_set,run,seed,balanced_accuracy", 0) != 0)
    throw ParseError("scores.csv: unexpected header", 1);

  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, RunScore>> runs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::csv_split(line);
    if (f.size() < 4) throw ParseError("scores.csv: expected at least 4 fields", line_no);
    RunScore rs;
    try {
      rs.run_index = std::stoull(f[1]);
      rs.seed = std::stoull(f[2]);
      rs.balanced_accuracy = std::stod(f[3]);
      if (f.size() > 4) {
        std::string_view sel = f[4];
        std::size_t start = 0;
        while (start < sel.size()) {
          const auto semi = std::min(sel.find(';', start), sel.size());
          rs.selected_c.push_back(std::stod(std::string(sel.substr(start, semi - start))));
          start = semi + 1;
        }
      }
    } catch (const std::exception&) {
      throw ParseError("scores.csv: malformed number", line_no);
    }
    if (!runs.contains(f[0])) order.push_back(f[0]);
    if (!runs[f[0]].emplace(rs.run_index, rs).second) throw ParseError("scores.csv: duplicate run", line_no);
  }

  if (std::ifstream cin(dir / "confusion.csv"); cin) {
    std::getline(cin, line);
    while (std::getline(cin, line)) {
      if (line.empty()) continue;
      const auto f = detail::csv_split(line);
      if (f.size() != 5) throw ParseError("confusion.csv: expected 5 fields");
      auto set = runs.find(f[0]);
      if (set == runs.end()) continue;
      auto run = set->second.find(std::stoull(f[1]));
      if (run == set->second.end()) continue;
      run->second.confusion.counts[code_index(code_from_int(std::stoi(f[2])))][code_index(code_from_int(std::stoi(f[3])))] =
          std::stoull(f[4]);
    }
  }

  ResultsTable table;
  for (const auto& name : order) {
    std::vector<RunScore> rs;
    for (auto& [idx, score] : runs[name]) rs.push_back(score);
    table.rows.push_back(summarize(name, std::move(rs)));
  }
  return table;
}

}  // namespace dyadcode
