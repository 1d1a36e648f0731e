#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "dyadcode/experiment.hpp"

namespace dyadcode {

// dyadexp/1 experiment configuration
//
//   dyadexp/1
//   # comment
//   corpus       = corpus.txt
//   feature_sets = lexicon:LIWC, tfidf      # kind[:display label], comma separated
//   lexicon      = german.dic
//   embeddings   = embeddings.vec
//   acoustic     = egemaps.vec
//   c_grid       = 0.1, 1, 10, 100
//   k_outer = 5    k_inner = 3    n_runs = 20    base_seed = 0
//   tol = 0.001    max_iter = 100000    max_features = 1000
//   cache_rows = 0    threads = 0
//
// One key per line. Relative paths resolve against the config file's directory.
inline constexpr std::string_view kConfigFormat = "dyadexp/1";

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || p != value.data() + value.size())
    throw ConfigError("config key '" + std::string(key) + "': malformed number '" + std::string(value) + "'");
  return out;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    const auto part = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!part.empty()) out.push_back(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig cfg;
  std::vector<std::pair<FeatureKind, std::string>> sets;
  std::filesystem::path lexicon, embeddings, acoustic;
  const auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kConfigFormat) throw ConfigError("config: expected header 'dyadexp/1' on line " + std::to_string(line_no));
      header_seen = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));

    if (key == "corpus") {
      cfg.corpus_path = resolve(value);
    } else if (key == "feature_sets" || key == "feature_set") {
      for (auto item : detail::split_commas(value)) {
        const auto colon = item.find(':');
        const auto kind = parse_feature_kind(detail::trim(item.substr(0, colon)));
        std::string label = colon == std::string_view::npos ? "" : std::string(detail::trim(item.substr(colon + 1)));
        sets.emplace_back(kind, std::move(label));
      }
    } else if (key == "lexicon") {
      lexicon = resolve(value);
    } else if (key == "embeddings") {
      embeddings = resolve(value);
    } else if (key == "acoustic") {
      acoustic = resolve(value);
    } else if (key == "c_grid") {
      cfg.c_grid.clear();
      for (auto item : detail::split_commas(value)) cfg.c_grid.push_back(detail::parse_number<double>(key, item));
    } else if (key == "k_outer") {
      cfg.k_outer = detail::parse_number<std::size_t>(key, value);
    } else if (key == "k_inner") {
      cfg.k_inner = detail::parse_number<std::size_t>(key, value);
    } else if (key == "n_runs") {
      cfg.n_runs = detail::parse_number<std::size_t>(key, value);
    } else if (key == "base_seed") {
      cfg.base_seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "tol") {
      cfg.tol = detail::parse_number<double>(key, value);
    } else if (key == "max_iter") {
      cfg.max_iter = detail::parse_number<std::size_t>(key, value);
    } else if (key == "max_features") {
      cfg.max_features = detail::parse_number<std::size_t>(key, value);
    } else if (key == "cache_rows") {
      cfg.cache_rows = detail::parse_number<std::size_t>(key, value);
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<std::size_t>(key, value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (!header_seen) throw ConfigError("config: missing 'dyadexp/1' header");
  if (cfg.corpus_path.empty()) throw ConfigError("config: 'corpus' is required");
  if (sets.empty()) throw ConfigError("config: 'feature_sets' is required");
  for (auto& [kind, label] : sets) {
    FeatureSetSpec fs;
    fs.kind = kind;
    fs.label = std::move(label);
    fs.lexicon_path = lexicon;
    fs.embeddings_path = embeddings;
    fs.acoustic_path = acoustic;
    cfg.feature_sets.push_back(std::move(fs));
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace dyadcode
