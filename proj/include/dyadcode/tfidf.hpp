#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dyadcode/error.hpp"
#include "dyadcode/tokenizer.hpp"

namespace dyadcode {

// Unigrams and space-joined bigrams of adjacent tokens.
inline std::vector<std::string> unigrams_and_bigrams(std::string_view text) {
  const auto tokens = tokenize(text);
  std::vector<std::string> terms(tokens.begin(), tokens.end());
  for (std::size_t i = 1; i < tokens.size(); ++i) terms.push_back(tokens[i - 1] + ' ' + tokens[i]);
  return terms;
}

// Capped term -> column map with smoothed idf weights. Columns follow the
// lexicographic order of the retained terms.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::map<std::string, std::size_t> terms, std::vector<double> idf, std::size_t n_docs_fit)
      : terms_(std::move(terms)), idf_(std::move(idf)), n_docs_fit_(n_docs_fit) {
    if (terms_.size() != idf_.size()) throw DataError("vocabulary term/idf size mismatch");
    std::vector<bool> seen(terms_.size(), false);
    for (const auto& [term, col] : terms_) {
      if (col >= terms_.size() || seen[col]) throw DataError("vocabulary columns must be contiguous from 0");
      seen[col] = true;
    }
    for (double v : idf_) {
      if (!(v >= 1.0) || !std::isfinite(v)) throw DataError("idf values must be finite and >= 1");
    }
  }

  const std::map<std::string, std::size_t>& terms() const noexcept { return terms_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  std::size_t n_docs_fit() const noexcept { return n_docs_fit_; }
  std::size_t size() const noexcept { return terms_.size(); }

  std::optional<std::size_t> column(std::string_view term) const {
    if (auto it = terms_.find(std::string(term)); it != terms_.end()) return it->second;
    return std::nullopt;
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::map<std::string, std::size_t> terms_;
  std::vector<double> idf_;
  std::size_t n_docs_fit_ = 0;
};

// Keeps the max_features terms with the highest total count (ties broken
// lexicographically); idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1.
template <typename Texts>
Vocabulary fit_vocabulary(const Texts& train_texts, std::size_t max_features = 1000) {
  if (std::empty(train_texts)) throw DataError("cannot fit a vocabulary on an empty training set");
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> stats;  // term -> (count, df)
  std::size_t n_docs = 0;
  for (const auto& text : train_texts) {
    ++n_docs;
    std::unordered_set<std::string> in_doc;
    for (auto& term : unigrams_and_bigrams(text)) {
      auto& st = stats[term];
      ++st.first;
      if (in_doc.insert(std::move(term)).second) ++st.second;
    }
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(stats.begin(), stats.end());
  const std::size_t keep = std::min(max_features, ranked.size());
  const auto by_count = [](const auto& a, const auto& b) {
    return a.second.first != b.second.first ? a.second.first > b.second.first : a.first < b.first;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), by_count);
  ranked.resize(keep);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::map<std::string, std::size_t> terms;
  std::vector<double> idf;
  idf.reserve(keep);
  for (const auto& [term, st] : ranked) {
    terms.emplace(term, terms.size());
    idf.push_back(std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(st.second))) + 1.0);
  }
  return Vocabulary(std::move(terms), std::move(idf), n_docs);
}

// Raw term counts times idf, L2-normalized. Out-of-vocabulary terms are ignored.
inline std::vector<double> transform(std::string_view text, const Vocabulary& vocab) {
  std::vector<double> out(vocab.size(), 0.0);
  for (const auto& term : unigrams_and_bigrams(text)) {
    if (auto col = vocab.column(term)) out[*col] += 1.0;
  }
  double norm2 = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= vocab.idf()[i];
    norm2 += out[i] * out[i];
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : out) v *= inv;
  }
  return out;
}

// Text dump: header "dyadvocab/1 n_docs=<n>", then "term<TAB>index<TAB>idf" per column.
inline std::string serialize_vocabulary(const Vocabulary& vocab) {
  std::vector<const std::string*> by_col(vocab.size());
  for (const auto& [term, col] : vocab.terms()) by_col[col] = &term;
  std::ostringstream out;
  out << "dyadvocab/1 n_docs=" << vocab.n_docs_fit() << '\n';
  char buf[64];
  for (std::size_t col = 0; col < by_col.size(); ++col) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, vocab.idf()[col]);
    out << *by_col[col] << '\t' << col << '\t' << std::string_view(buf, end - buf) << '\n';
  }
  return out.str();
}

inline Vocabulary parse_vocabulary(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("dyadvocab/1 n_docs=", 0) != 0)
    throw ParseError("expected 'dyadvocab/1 n_docs=<n>' header", 1);
  std::size_t n_docs = 0;
  const std::string_view n_s = std::string_view(line).substr(std::string_view("dyadvocab/1 n_docs=").size());
  if (auto [p, ec] = std::from_chars(n_s.data(), n_s.data() + n_s.size(), n_docs);
      ec != std::errc{} || p != n_s.data() + n_s.size())
    throw ParseError("malformed n_docs in header", 1);
  std::map<std::string, std::size_t> terms;
  std::vector<std::pair<std::size_t, double>> idf_by_col;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) throw ParseError("expected term, index, idf", line_no);
    std::size_t col = 0;
    double idf = 0.0;
    const std::string_view col_s(line.data() + t1 + 1, t2 - t1 - 1);
    const std::string_view idf_s(line.data() + t2 + 1, line.size() - t2 - 1);
    if (std::from_chars(col_s.data(), col_s.data() + col_s.size(), col).ec != std::errc{} ||
        std::from_chars(idf_s.data(), idf_s.data() + idf_s.size(), idf).ec != std::errc{})
      throw ParseError("malformed index or idf", line_no);
    if (!terms.emplace(line.substr(0, t1), col).second) throw ParseError("duplicate term", line_no);
    idf_by_col.emplace_back(col, idf);
  }
  std::vector<double> idf(idf_by_col.size(), 0.0);
  for (const auto& [col, v] : idf_by_col) {
    if (col >= idf.size()) throw ParseError("column index out of range");
    idf[col] = v;
  }
  return Vocabulary(std::move(terms), std::move(idf), n_docs);
}

inline void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  out << serialize_vocabulary(vocab);
}

}  // namespace dyadcode
