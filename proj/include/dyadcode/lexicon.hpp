#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dyadcode/error.hpp"
#include "dyadcode/tokenizer.hpp"

namespace dyadcode {

struct LexiconEntry {
  std::string pattern;  // stem without the trailing '*' when is_prefix
  bool is_prefix = false;
  std::vector<int> category_ids;  // sorted, unique

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

inline std::string lowercase(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) utf8::append(out, to_lower(utf8::decode(text, pos)));
  return out;
}

// Category table plus word/prefix entries in the LIWC dictionary layout.
// Immutable once constructed; matching is indexed by hash lookups on the
// token and on each of its byte prefixes.
class Lexicon {
 public:
  Lexicon() = default;

  Lexicon(std::map<int, std::string> categories, std::vector<LexiconEntry> entries)
      : categories_(std::move(categories)), entries_(std::move(entries)) {
    std::size_t col = 0;
    for (const auto& [id, name] : categories_) columns_[id] = col++;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto& e = entries_[i];
      if (e.pattern.empty()) throw DataError("lexicon entry with empty pattern");
      if (e.pattern.find('*') != std::string::npos)
        throw DataError("lexicon pattern '" + e.pattern + "' contains '*' outside the final position");
      std::sort(e.category_ids.begin(), e.category_ids.end());
      e.category_ids.erase(std::unique(e.category_ids.begin(), e.category_ids.end()), e.category_ids.end());
      for (int id : e.category_ids) {
        if (!categories_.contains(id))
          throw DataError("lexicon entry '" + e.pattern + "' references undeclared category " + std::to_string(id));
      }
      auto& index = e.is_prefix ? prefix_ : exact_;
      if (!index.emplace(e.pattern, i).second)
        throw DataError("duplicate lexicon pattern '" + e.pattern + (e.is_prefix ? "*'" : "'"));
      if (e.is_prefix) longest_prefix_ = std::max(longest_prefix_, e.pattern.size());
    }
  }

  const std::map<int, std::string>& categories() const noexcept { return categories_; }
  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }
  std::size_t category_count() const noexcept { return categories_.size(); }

  // Column of a category in emitted feature vectors (ascending id order).
  std::size_t column_of(int category_id) const { return columns_.at(category_id); }

  // Exact entry if present, otherwise the longest prefix entry, otherwise null.
  const LexiconEntry* match(std::string_view token) const {
    if (auto it = exact_.find(std::string(token)); it != exact_.end()) return &entries_[it->second];
    for (std::size_t len = std::min(token.size(), longest_prefix_); len > 0; --len) {
      if (auto it = prefix_.find(std::string(token.substr(0, len))); it != prefix_.end())
        return &entries_[it->second];
    }
    return nullptr;
  }

  friend bool operator==(const Lexicon& a, const Lexicon& b) {
    return a.categories_ == b.categories_ && a.entries_ == b.entries_;
  }

 private:
  std::map<int, std::string> categories_;
  std::vector<LexiconEntry> entries_;
  std::map<int, std::size_t> columns_;
  std::unordered_map<std::string, std::size_t> exact_;
  std::unordered_map<std::string, std::size_t> prefix_;
  std::size_t longest_prefix_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline int parse_category_id(std::string_view field, std::size_t line) {
  int id = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), id);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError("malformed category id '" + std::string(field) + "'", line);
  return id;
}

}  // namespace detail

// Parses DIC text: a '%' line, "id name" category lines, a '%' line, then
// "pattern id [id ...]" entry lines. '#' lines and blank lines are skipped.
inline Lexicon parse_lexicon(std::string_view text) {
  enum class Section { BeforeHeader, Categories, Entries } section = Section::BeforeHeader;
  std::map<int, std::string> categories;
  std::vector<LexiconEntry> entries;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = detail::trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    if (line == "%") {
      if (section == Section::Entries) throw ParseError("unexpected third '%' delimiter", line_no);
      section = (section == Section::BeforeHeader) ? Section::Categories : Section::Entries;
      continue;
    }
    switch (section) {
      case Section::BeforeHeader:
        throw ParseError("expected '%' before category header", line_no);
      case Section::Categories: {
        const auto split = line.find_first_of(" \t");
        if (split == std::string_view::npos) throw ParseError("category line needs an id and a name", line_no);
        const int id = detail::parse_category_id(line.substr(0, split), line_no);
        const auto name = detail::trim(line.substr(split));
        if (!categories.emplace(id, std::string(name)).second)
          throw ParseError("duplicate category id " + std::to_string(id), line_no);
        break;
      }
      case Section::Entries: {
        const auto fields = detail::split_ws(line);
        if (fields.size() < 2) throw ParseError("entry line needs a pattern and at least one category", line_no);
        LexiconEntry entry;
        std::string_view pattern = fields[0];
        if (pattern.back() == '*') {
          entry.is_prefix = true;
          pattern.remove_suffix(1);
          if (pattern.empty()) throw ParseError("prefix pattern is empty before '*'", line_no);
        }
        if (pattern.find('*') != std::string_view::npos)
          throw ParseError("'*' is only allowed at the end of a pattern", line_no);
        entry.pattern = lowercase(pattern);
        for (std::size_t k = 1; k < fields.size(); ++k) {
          const int id = detail::parse_category_id(fields[k], line_no);
          if (!categories.contains(id))
            throw ParseError("entry references undeclared category " + std::to_string(id), line_no);
          entry.category_ids.push_back(id);
        }
        entries.push_back(std::move(entry));
        break;
      }
    }
  }
  if (section != Section::Entries) throw ParseError("missing '%' delimiters around the category header");
  try {
    return Lexicon(std::move(categories), std::move(entries));
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw ParseError(e.what());
  }
}

inline Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str());
}

inline std::string to_dic(const Lexicon& lexicon) {
  std::ostringstream out;
  out << "%\n";
  for (const auto& [id, name] : lexicon.categories()) out << id << '\t' << name << '\n';
  out << "%\n";
  for (const auto& e : lexicon.entries()) {
    out << e.pattern << (e.is_prefix ? "*" : "");
    for (int id : e.category_ids) out << '\t' << id;
    out << '\n';
  }
  return out.str();
}

struct LexiconFeatures {
  std::vector<double> values;  // one per category, ascending id
  std::size_t word_count = 0;
};

// Category hit rates: each token increments every category of its matching
// entry once; counts are divided by the token count. The word count itself
// is not part of the emitted vector.
inline LexiconFeatures featurize(std::string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw DataError("cannot featurize a transcript without tokens");
  std::vector<std::size_t> counts(lexicon.category_count(), 0);
  for (const auto& token : tokens) {
    if (const auto* entry = lexicon.match(token)) {
      for (int id : entry->category_ids) ++counts[lexicon.column_of(id)];
    }
  }
  LexiconFeatures out;
  out.word_count = tokens.size();
  out.values.reserve(counts.size());
  for (auto c : counts) out.values.push_back(static_cast<double>(c) / static_cast<double>(tokens.size()));
  return out;
}

}  // namespace dyadcode
